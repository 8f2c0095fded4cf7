#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "../support.hpp"
#include "cif/errors.hpp"
#include "cif/io.hpp"

using namespace cif;
using namespace cif::io;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("cifest_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("parse a small file and infer the number of causes") {
  const auto p = parse_csv_text("time,event,age\n1,1,30\n2,2,40\n3,0,50\n");
  CHECK(p.data.size() == 3);
  CHECK(p.data.num_causes() == 2);
  CHECK(p.covariate_names == std::vector<std::string>{"age"});
  CHECK(p.data[1].covariates[0] == 40.0);
}

TEST_CASE("CSV dialect: CRLF, BOM, quotes, column order, blank lines") {
  const auto p = parse_csv_text("\xEF\xBB\xBF\"x\",event,time\r\n0.5,1,2.5\r\n\r\n-1,0,3\r\n");
  CHECK(p.data.size() == 2);
  CHECK(p.data[0].time == 2.5);
  CHECK(p.data[1].covariates[0] == -1.0);
  CsvOptions only;
  only.covariates = {"b"};
  const auto q = parse_csv_text("time,event,a,b\n1,1,9,8\n", only);
  CHECK(q.data[0].covariates == std::vector<double>{8.0});
}

TEST_CASE("CSV errors name the row and column") {
  CHECK(code_of([] { parse_csv_text("time,status\n1,1\n"); }) == ErrorCode::MissingColumn);
  CsvOptions opt;
  opt.covariates = {"age"};
  CHECK(code_of([&] { parse_csv_text("time,event\n1,1\n", opt); }) == ErrorCode::MissingColumn);
  CHECK(code_of([] { parse_csv_text("time,event,x\n1,1,abc\n"); }) == ErrorCode::NonnumericCell);
  CHECK(message_of([] { parse_csv_text("time,event,x\n1,1,2\n2,1,abc\n"); }).find("line 3") != std::string::npos);
  CHECK(code_of([] { parse_csv_text("time,event\n1,1\n0,1\n"); }) == ErrorCode::NonpositiveTime);
  CHECK(message_of([] { parse_csv_text("time,event\n1,1\n0,1\n"); }).find("line 3") != std::string::npos);
  CHECK(code_of([] { parse_csv_text("time,event\n1,1.5\n"); }) == ErrorCode::UnknownEventCode);
  CHECK(code_of([] { parse_csv_text("time,event\n1,-1\n"); }) == ErrorCode::UnknownEventCode);
  CsvOptions two;
  two.num_causes = 2;
  CHECK(code_of([&] { parse_csv_text("time,event\n1,3\n", two); }) == ErrorCode::UnknownEventCode);
  CHECK(code_of([] { parse_csv_text("time,event\n1,1,5\n"); }) == ErrorCode::NonnumericCell);
  CHECK(code_of([] { parse_csv_text(""); }) == ErrorCode::MissingColumn);
}

TEST_CASE("tie policy applies to parsed files") {
  const std::string text = "time,event\n1,1\n2,1\n2,2\n3,0\n";
  CsvOptions reject;
  reject.tie_policy = TiePolicy::Reject;
  CHECK(code_of([&] { parse_csv_text(text, reject); }) == ErrorCode::TiedEventTimes);
  CHECK(message_of([&] { parse_csv_text(text, reject); }).find('2') != std::string::npos);
  const auto p = parse_csv_text(text);
  CHECK(p.ties.adjusted == 1);
  CHECK(p.data[2].time > 2.0);
}

TEST_CASE("simulated datasets round-trip through CSV exactly") {
  sim::ScenarioConfig cfg = sim::paper_grid()[1];
  const auto d = sim::sample_dataset(cfg, 5);
  const auto text = format_csv(d, {"z"});
  CsvOptions opt;
  opt.num_causes = d.num_causes();
  const auto back = parse_csv_text(text, opt);
  CHECK(back.data == d);
  CHECK(back.ties.adjusted == 0);
}

TEST_CASE("z profiles") {
  CHECK(parse_z_profile("b=2,a=1", {"a", "b"}) == std::vector<double>{1.0, 2.0});
  CHECK(parse_z_profile("", {}).empty());
  CHECK_THROWS_AS(parse_z_profile("a=1", {"a", "b"}), Error);
  CHECK_THROWS_AS(parse_z_profile("c=1,a=1,b=2", {"a", "b"}), Error);
  CHECK_THROWS_AS(parse_z_profile("a=x,b=1", {"a", "b"}), Error);
}

TEST_CASE("scenario config parsing") {
  const auto cells = parse_scenario_config(
      "# defaults\nreplications = 50\nseed = 9\n[cell]\nscenario = 3\n[cell]\nshape = decreasing\nn = 40\n"
      "censor_rate = 0.5\nz = 0.4\n");
  REQUIRE(cells.size() == 2);
  CHECK(cells[0].label == "3");
  CHECK(cells[0].z_eval == 0.0);
  CHECK(cells[0].replications == 50);
  CHECK(cells[0].seed == 9);
  CHECK(cells[1].shape == sim::ShapeKind::Decreasing);
  CHECK(cells[1].n == 40);
  CHECK(cells[1].replications == 50);

  CHECK(message_of([] { parse_scenario_config("n = 10\nbogus = 1\n"); }).find("line 2") != std::string::npos);
  CHECK(message_of([] { parse_scenario_config("[cell]\nn = ten\n"); }).find("line 2") != std::string::npos);
  CHECK(message_of([] { parse_scenario_config("\n\nno equals sign\n"); }).find("line 3") != std::string::npos);
  CHECK(code_of([] { parse_scenario_config("[cell]\nn = 0\n"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_scenario_config("scenario = 99\n"); }) == ErrorCode::ConfigError);
  CHECK(load_scenarios("paper-grid").size() == 36);
  CHECK(load_scenarios("normal-grid").size() == 6);
}

TEST_CASE("analysis on uncensored data: Method 3 total is 1, files and headers") {
  const auto dir = scratch("analysis");
  const auto d = testing::random_data(3, 60, 2, 2, 0.0);
  write_csv(d, {"age", "sex"}, dir / "in.csv");
  AnalysisRequest req;
  req.input_path = dir / "in.csv";
  req.z_specs = {"age=0,sex=0", "age=0.5,sex=1"};
  req.output_dir = dir / "out";
  const auto out = run_analysis(req);
  for (const auto& row : out.total_at_last_event) CHECK(std::abs(row[2] - 1.0) <= 1e-12);
  const auto summary = slurp(req.output_dir / "summary.csv");
  CHECK(summary.find(",3,total,total,1,") != std::string::npos);
  const auto curve = slurp(req.output_dir / "curve_m2_cause1_z2.csv");
  CHECK(curve.find("# tool=cifest") != std::string::npos);
  CHECK(curve.find("# method=2") != std::string::npos);
  CHECK(curve.find("# cause=1") != std::string::npos);
  CHECK(curve.find("# z=age=0.5;sex=1") != std::string::npos);
  CHECK(curve.find("# seed=") != std::string::npos);
  CHECK(curve.find("time,cif\n0,0\n") != std::string::npos);  // band off: no band columns
  CHECK(curve.find("lower") == std::string::npos);
  CHECK(fs::exists(req.output_dir / "coefficients.csv"));
  CHECK(slurp(req.output_dir / "run.txt").find("threads") == std::string::npos);
}

TEST_CASE("analysis honours the method subset and band columns") {
  const auto dir = scratch("subset");
  const auto d = testing::random_data(4, 50, 2, 1, 0.3);
  write_csv(d, {"x"}, dir / "in.csv");
  AnalysisRequest req;
  req.input_path = dir / "in.csv";
  req.z_specs = {"x=0"};
  req.methods = {Method::M1};
  req.band = true;
  req.band_B = 30;
  req.svg = true;
  req.output_dir = dir / "out";
  run_analysis(req);
  for (const auto& e : fs::directory_iterator(req.output_dir)) {
    const auto name = e.path().filename().string();
    if (name.rfind("curve_", 0) == 0 || name.rfind("plot_", 0) == 0) CHECK(name.find("m1_") != std::string::npos);
  }
  const auto curve = slurp(req.output_dir / "curve_m1_cause1_z1.csv");
  CHECK(curve.find("time,cif,lower,upper") != std::string::npos);
  CHECK(curve.find("# half_width=") != std::string::npos);
  const auto svg = slurp(req.output_dir / "plot_m1_z1.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("analysis errors propagate") {
  const auto dir = scratch("errors");
  {
    std::ofstream(dir / "bad.csv") << "time,event,x\n1,1,0\n-2,1,1\n";
  }
  AnalysisRequest req;
  req.input_path = dir / "bad.csv";
  req.z_specs = {"x=0"};
  req.output_dir = dir / "out";
  CHECK(code_of([&] { run_analysis(req); }) == ErrorCode::NonpositiveTime);
  req.input_path = dir / "missing.csv";
  CHECK(code_of([&] { run_analysis(req); }) == ErrorCode::IoError);
}

TEST_CASE("simulation output files are deterministic across thread counts") {
  const auto dir = scratch("simulate");
  auto cells = parse_scenario_config("replications = 4\nbootstrap_B = 3\n[cell]\nscenario = 1\n[cell]\nscenario = 2\n");
  SimulationRequest req;
  req.cells = cells;
  req.output_dir = dir / "a";
  req.source = "inline";
  const auto a = run_simulation(req);
  for (auto& c : req.cells) c.threads = 4;
  req.output_dir = dir / "b";
  run_simulation(req);
  for (const char* f : {"results.csv", "quantiles.csv", "run_metadata.txt"}) {
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
  const auto results = slurp(dir / "a" / "results.csv");
  CHECK(std::count(results.begin(), results.end(), '\n') == 7 + 12);  // 7 header lines, 2 cells x 3 methods x 2 causes
  CHECK(slurp(dir / "a" / "run_metadata.txt").find("censor_upper") != std::string::npos);
}

TEST_CASE("dataset validation report") {
  const auto d = testing::random_data(12, 60, 2, 2, 0.0);
  const auto checks = validate_dataset(d);
  CHECK(checks.size() >= 6);
  for (const auto& c : checks) {
    INFO(c.name << ": " << c.detail);
    CHECK(c.passed);
  }
}
