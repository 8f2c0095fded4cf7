#include "cif/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cif/bootstrap.hpp"
#include "cif/cox.hpp"
#include "cif/errors.hpp"

namespace cif::io {

const char* tool_version() { return CIF_VERSION; }

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find(sep, start);
    out.push_back(unquote(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start))));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

std::string num(double v) {
  if (std::isnan(v)) return "NA";
  return fmt::format("{:.10g}", v);
}

std::string fixed(double v, int digits = 6) {
  if (std::isnan(v)) return "NA";
  return fmt::format("{:.{}f}", v, digits);
}

std::string join(const std::vector<std::string>& v, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += sep;
    out += v[i];
  }
  return out;
}

}  // namespace

ParsedCsv parse_csv_text(const std::string& raw, const CsvOptions& options) {
  std::string_view text(raw);
  if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

  std::vector<std::pair<std::size_t, std::string_view>> lines;  // (1-based line number, content)
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    if (!trim(line).empty()) lines.emplace_back(line_no, line);
    start = end + 1;
  }
  if (lines.empty()) throw Error(ErrorCode::MissingColumn, "empty file: header row with time and event required");

  const auto header = split(lines.front().second, ',');
  auto find_col = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::MissingColumn, "column '" + name + "' not found in header");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t time_col = find_col("time");
  const std::size_t event_col = find_col("event");

  ParsedCsv out;
  std::vector<std::size_t> cov_cols;
  if (options.covariates.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c == time_col || c == event_col) continue;
      cov_cols.push_back(c);
      out.covariate_names.push_back(header[c]);
    }
  } else {
    for (const auto& name : options.covariates) {
      cov_cols.push_back(find_col(name));
      out.covariate_names.push_back(name);
    }
  }

  std::vector<SubjectRecord> subjects;
  subjects.reserve(lines.size() - 1);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto [ln, content] = lines[r];
    const auto cells = split(content, ',');
    const std::string where = "line " + std::to_string(ln);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::NonnumericCell, where + ": expected " + std::to_string(header.size()) + " fields, found " +
                                                 std::to_string(cells.size()));
    }
    SubjectRecord s;
    if (!parse_double(cells[time_col], s.time)) {
      throw Error(ErrorCode::NonnumericCell, where + ", column 'time': '" + cells[time_col] + "' is not a number");
    }
    if (!std::isfinite(s.time) || s.time <= 0.0) {
      throw Error(ErrorCode::NonpositiveTime, where + ": time must be positive and finite, got " + cells[time_col]);
    }
    double ev = 0.0;
    if (!parse_double(cells[event_col], ev)) {
      throw Error(ErrorCode::NonnumericCell, where + ", column 'event': '" + cells[event_col] + "' is not a number");
    }
    if (ev < 0.0 || ev != std::floor(ev) || ev > 1e6 || (options.num_causes > 0 && ev > options.num_causes)) {
      throw Error(ErrorCode::UnknownEventCode, where + ": event code '" + cells[event_col] + "' is not 0..J");
    }
    s.event = static_cast<int>(ev);
    s.covariates.reserve(cov_cols.size());
    for (std::size_t c : cov_cols) {
      double v = 0.0;
      if (!parse_double(cells[c], v) || !std::isfinite(v)) {
        throw Error(ErrorCode::NonnumericCell,
                    where + ", column '" + header[c] + "': '" + cells[c] + "' is not a finite number");
      }
      s.covariates.push_back(v);
    }
    subjects.push_back(std::move(s));
  }

  SurvivalDataset data(std::move(subjects), options.num_causes, cov_cols.size());
  out.data = resolve_ties(data, options.tie_policy, &out.ties);
  return out;
}

ParsedCsv parse_csv(const std::filesystem::path& path, const CsvOptions& options) {
  return parse_csv_text(read_file(path), options);
}

std::string format_csv(const SurvivalDataset& data, const std::vector<std::string>& covariate_names) {
  if (covariate_names.size() != data.covariate_dim()) {
    throw Error(ErrorCode::InvalidArgument, "one name per covariate required");
  }
  std::string out = "time,event";
  for (const auto& n : covariate_names) out += "," + n;
  out += "\n";
  for (const auto& s : data.subjects()) {
    out += fmt::format("{:.17g},{}", s.time, s.event);
    for (double z : s.covariates) out += fmt::format(",{:.17g}", z);
    out += "\n";
  }
  return out;
}

void write_csv(const SurvivalDataset& data, const std::vector<std::string>& covariate_names,
               const std::filesystem::path& path) {
  write_file(path, format_csv(data, covariate_names));
}

std::vector<double> parse_z_profile(const std::string& spec, const std::vector<std::string>& covariates) {
  std::vector<double> z(covariates.size(), 0.0);
  std::vector<bool> seen(covariates.size(), false);
  if (!trim(spec).empty()) {
    for (const auto& item : split(spec, ',')) {
      auto eq = item.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::InvalidArgument, "z profile item '" + item + "' lacks '='");
      const std::string name = trim(item.substr(0, eq));
      const std::string value = trim(item.substr(eq + 1));
      auto it = std::find(covariates.begin(), covariates.end(), name);
      if (it == covariates.end()) throw Error(ErrorCode::InvalidArgument, "z profile names unknown covariate '" + name + "'");
      const auto c = static_cast<std::size_t>(it - covariates.begin());
      if (!parse_double(value, z[c])) throw Error(ErrorCode::InvalidArgument, "z value '" + value + "' is not a number");
      seen[c] = true;
    }
  }
  for (std::size_t c = 0; c < covariates.size(); ++c) {
    if (!seen[c]) throw Error(ErrorCode::InvalidArgument, "z profile '" + spec + "' is missing '" + covariates[c] + "'");
  }
  return z;
}

namespace {

std::string cause_label(const std::map<int, std::string>& labels, int cause) {
  if (cause == kTotalCause) return "total";
  auto it = labels.find(cause);
  return it == labels.end() ? "cause" + std::to_string(cause) : it->second;
}

std::string profile_text(const std::vector<std::string>& names, const std::vector<double>& z) {
  std::vector<std::string> parts;
  for (std::size_t c = 0; c < names.size(); ++c) parts.push_back(names[c] + "=" + num(z[c]));
  return parts.empty() ? "(none)" : join(parts, ";");
}

std::string file_header(const std::string& method, const std::string& cause, const std::string& profile,
                        const std::string& seed) {
  return fmt::format("# tool={} {}\n# method={}\n# cause={}\n# z={}\n# seed={}\n", kToolName, tool_version(), method,
                     cause, profile, seed);
}

}  // namespace

AnalysisOutput run_analysis(const AnalysisRequest& request) {
  CsvOptions csv;
  csv.covariates = request.covariate_columns;
  csv.tie_policy = request.tie_policy;
  ParsedCsv parsed = parse_csv(request.input_path, csv);
  const SurvivalDataset& data = parsed.data;
  const auto& names = parsed.covariate_names;

  std::vector<std::vector<double>> profiles = request.z_profiles;
  if (profiles.empty()) {
    for (const auto& spec : request.z_specs) profiles.push_back(parse_z_profile(spec, names));
  }
  if (profiles.empty()) {
    if (!names.empty()) throw Error(ErrorCode::InvalidArgument, "at least one --z profile is required");
    profiles.emplace_back();
  }
  for (const auto& z : profiles) {
    if (z.size() != names.size()) throw Error(ErrorCode::InvalidArgument, "z profile length does not match covariates");
  }
  if (request.methods.empty()) throw Error(ErrorCode::InvalidArgument, "no methods requested");

  const RiskSetData prepared(data);
  auto fits = fit_all_causes(prepared);
  for (const auto& f : fits) {
    if (!f.converged) {
      throw Error(ErrorCode::InvalidArgument,
                  "Cox fit for cause " + std::to_string(f.cause) + " did not converge: " + f.diagnostic);
    }
  }
  const CifModel model(prepared, fits);

  std::vector<BandResult> bands;
  if (request.band) {
    BandOptions opts;
    opts.replications = request.band_B;
    opts.level = request.level;
    opts.seed = request.seed;
    opts.threads = request.threads;
    bands = bootstrap_bands(prepared, fits, request.methods, profiles, opts);
  }

  std::filesystem::create_directories(request.output_dir);
  AnalysisOutput out;
  out.ties = parsed.ties;
  out.fits = fits;

  const std::string seed_text = request.band ? std::to_string(request.seed) : "none";
  const int J = data.num_causes();
  const std::size_t M = request.methods.size();
  std::string summary = file_header("all", "all", "all", seed_text);
  summary += "z_profile,z,method,cause,label,value_at_last_event,half_width\n";

  for (std::size_t p = 0; p < profiles.size(); ++p) {
    const std::string ptext = profile_text(names, profiles[p]);
    out.total_at_last_event.emplace_back();
    for (std::size_t mi = 0; mi < M; ++mi) {
      const Method m = request.methods[mi];
      const auto ests = model.cif(m, profiles[p]);
      const CifEstimate total = total_cif(ests);
      out.total_at_last_event.back().push_back(total.curve.final_value());

      std::vector<double> half_widths;
      for (int j = 0; j <= J; ++j) {
        const bool is_total = j == J;
        const CifEstimate& e = is_total ? total : ests[static_cast<std::size_t>(j)];
        const int cause = is_total ? kTotalCause : j + 1;
        const BandResult* band = nullptr;
        if (request.band && !is_total) band = &bands[(p * M + mi) * static_cast<std::size_t>(J) + static_cast<std::size_t>(j)];
        if (band) half_widths.push_back(band->half_width);

        std::string body = file_header(std::string(method_name(m)),
                                       is_total ? "total" : std::to_string(cause) + " (" + cause_label(request.cause_labels, cause) + ")",
                                       ptext, seed_text);
        if (band) {
          body += fmt::format("# level={}\n# bootstrap_replications={}\n# failed_refits={}\n# half_width={}\n",
                              num(band->level), band->replications, band->failed_refits, num(band->half_width));
        }
        body += band ? "time,cif,lower,upper\n" : "time,cif\n";
        auto row = [&](double t, double v) {
          body += num(t) + "," + num(v);
          if (band) body += "," + num(v - band->half_width) + "," + num(v + band->half_width);
          body += "\n";
        };
        row(0.0, 0.0);
        const auto times = e.curve.jump_times();
        const auto values = e.curve.values();
        for (std::size_t k = 0; k < times.size(); ++k) row(times[k], values[k]);

        const auto path = request.output_dir / fmt::format("curve_m{}_{}_z{}.csv", method_name(m),
                                                           is_total ? std::string("total") : "cause" + std::to_string(cause), p + 1);
        write_file(path, body);
        out.files.push_back(path);
        summary += fmt::format("{},{},{},{},{},{},{}\n", p + 1, ptext, method_name(m), is_total ? "total" : std::to_string(cause),
                               cause_label(request.cause_labels, cause), num(e.curve.final_value()),
                               band ? num(band->half_width) : "NA");
      }

      if (request.svg) {
        std::vector<CifEstimate> curves(ests.begin(), ests.end());
        curves.push_back(total);
        half_widths.resize(curves.size(), 0.0);
        const auto path = request.output_dir / fmt::format("plot_m{}_z{}.svg", method_name(m), p + 1);
        write_file(path, render_svg(curves, half_widths, fmt::format("Method {}, z: {}", method_name(m), ptext)));
        out.files.push_back(path);
      }
    }
  }
  const auto summary_path = request.output_dir / "summary.csv";
  write_file(summary_path, summary);
  out.files.push_back(summary_path);

  std::string coef = file_header("all", "all", "all", seed_text);
  coef += "cause,label,covariate,beta,loglik,score_norm,iterations,converged,degenerate,diagnostic\n";
  for (const auto& f : fits) {
    for (std::size_t c = 0; c < names.size(); ++c) {
      coef += fmt::format("{},{},{},{},{},{},{},{},{},\"{}\"\n", f.cause, cause_label(request.cause_labels, f.cause),
                          names[c], num(f.beta[c]), num(f.loglik), num(f.score_norm_at_opt), f.iterations,
                          f.converged ? 1 : 0, f.degenerate ? 1 : 0, f.diagnostic);
    }
  }
  const auto coef_path = request.output_dir / "coefficients.csv";
  write_file(coef_path, coef);
  out.files.push_back(coef_path);

  std::vector<std::string> method_list;
  for (Method m : request.methods) method_list.emplace_back(method_name(m));
  std::string manifest;
  manifest += fmt::format("tool = {}\nversion = {}\n", kToolName, tool_version());
  manifest += fmt::format("input = {}\nsubjects = {}\ncauses = {}\nevents = {}\n", request.input_path.filename().string(),
                          data.size(), J, prepared.index().size());
  manifest += fmt::format("covariates = {}\nmethods = {}\n", join(names, ","), join(method_list, ","));
  for (int j = 1; j <= J; ++j) manifest += fmt::format("cause_label.{} = {}\n", j, cause_label(request.cause_labels, j));
  for (std::size_t p = 0; p < profiles.size(); ++p) {
    manifest += fmt::format("z_profile.{} = {}\n", p + 1, profile_text(names, profiles[p]));
  }
  manifest += fmt::format("tie_policy = {}\ntie_groups = {}\ntie_adjusted = {}\ntie_step = {}\n",
                          request.tie_policy == TiePolicy::Jitter ? "jitter" : "reject", parsed.ties.tie_groups,
                          parsed.ties.adjusted, num(parsed.ties.step));
  manifest += fmt::format("band = {}\n", request.band ? "on" : "off");
  if (request.band) {
    manifest += fmt::format("band_B = {}\nlevel = {}\nseed = {}\nquantile_rule = ceiling-rank\n", request.band_B,
                            num(request.level), request.seed);
  }
  const auto manifest_path = request.output_dir / "run.txt";
  write_file(manifest_path, manifest);
  out.files.push_back(manifest_path);
  return out;
}

namespace {

struct KeySetter {
  const char* key;
  void (*apply)(sim::ScenarioConfig&, const std::string&);
};

double to_double(const std::string& v) {
  double d = 0.0;
  if (!parse_double(v, d)) throw Error(ErrorCode::ConfigError, "'" + v + "' is not a number");
  return d;
}

long long to_int(const std::string& v) {
  const double d = to_double(v);
  if (d != std::floor(d)) throw Error(ErrorCode::ConfigError, "'" + v + "' is not an integer");
  return static_cast<long long>(d);
}

sim::ScenarioConfig grid_cell(const std::string& id) {
  const auto uniform = sim::paper_grid();
  const auto normal = sim::normal_grid();
  for (const auto& c : uniform) if (c.label == id) return c;
  for (const auto& c : normal) if (c.label == id) return c;
  throw Error(ErrorCode::ConfigError, "unknown scenario '" + id + "' (use 1..36 or N1..N6)");
}

void apply_key(sim::ScenarioConfig& c, const std::string& key, const std::string& value) {
  if (key == "scenario") {
    const auto base = grid_cell(value);
    // Run-control settings already given survive the switch to a grid cell.
    sim::ScenarioConfig merged = base;
    merged.replications = c.replications;
    merged.bootstrap_B = c.bootstrap_B;
    merged.level = c.level;
    merged.seed = c.seed;
    merged.grid_points = c.grid_points;
    merged.threads = c.threads;
    c = merged;
  } else if (key == "label") c.label = value;
  else if (key == "shape") c.shape = sim::shape_from_string(value);
  else if (key == "n") c.n = static_cast<int>(to_int(value));
  else if (key == "relative_risk") c.relative_risk = to_double(value);
  else if (key == "z") c.z_eval = to_double(value);
  else if (key == "censor_rate") c.censor_rate = to_double(value);
  else if (key == "covariate_law") c.covariate_law = sim::law_from_string(value);
  else if (key == "final_cif_a") c.final_cifs = {to_double(value), 1.0 - to_double(value)};
  else if (key == "horizon") c.horizon = to_double(value);
  else if (key == "target_total") c.target_total = to_double(value);
  else if (key == "truncation") c.truncation = to_double(value);
  else if (key == "replications") c.replications = static_cast<int>(to_int(value));
  else if (key == "bootstrap_B") c.bootstrap_B = static_cast<int>(to_int(value));
  else if (key == "level") c.level = to_double(value);
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(to_int(value));
  else if (key == "grid_points") c.grid_points = static_cast<int>(to_int(value));
  else throw Error(ErrorCode::ConfigError, "unknown key '" + key + "'");
}

}  // namespace

std::vector<sim::ScenarioConfig> parse_scenario_config(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> defaults;
  std::vector<std::vector<std::pair<std::string, std::string>>> sections;
  std::vector<std::vector<std::size_t>> section_lines;
  std::vector<std::size_t> default_lines;

  std::istringstream in(text);
  std::string line;
  std::size_t ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t != "[cell]") throw Error(ErrorCode::ConfigError, "line " + std::to_string(ln) + ": unknown section " + t);
      sections.emplace_back();
      section_lines.emplace_back();
      continue;
    }
    auto eq = t.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::ConfigError, "line " + std::to_string(ln) + ": expected key = value");
    auto kv = std::make_pair(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    if (sections.empty()) {
      defaults.push_back(kv);
      default_lines.push_back(ln);
    } else {
      sections.back().push_back(kv);
      section_lines.back().push_back(ln);
    }
  }
  if (sections.empty()) {
    sections.emplace_back();
    section_lines.emplace_back();
  }

  std::vector<sim::ScenarioConfig> cells;
  for (std::size_t s = 0; s < sections.size(); ++s) {
    sim::ScenarioConfig c;
    c.label = std::to_string(s + 1);
    auto apply_all = [&](const auto& kvs, const auto& lines) {
      // `scenario` first so explicit keys can override the grid cell.
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t i = 0; i < kvs.size(); ++i) {
          if ((kvs[i].first == "scenario") != (pass == 0)) continue;
          try {
            apply_key(c, kvs[i].first, kvs[i].second);
          } catch (const Error& e) {
            throw Error(ErrorCode::ConfigError, "line " + std::to_string(lines[i]) + ": " + e.what());
          }
        }
      }
    };
    apply_all(defaults, default_lines);
    apply_all(sections[s], section_lines[s]);
    try {
      c.validate();
    } catch (const Error& e) {
      const std::size_t where = section_lines[s].empty() ? (default_lines.empty() ? 0 : default_lines.front()) : section_lines[s].front();
      throw Error(ErrorCode::ConfigError, "cell starting at line " + std::to_string(where) + ": " + e.what());
    }
    cells.push_back(c);
  }
  return cells;
}

std::vector<sim::ScenarioConfig> load_scenarios(const std::string& path_or_keyword) {
  if (path_or_keyword == "paper-grid") return sim::paper_grid();
  if (path_or_keyword == "normal-grid") return sim::normal_grid();
  return parse_scenario_config(read_file(path_or_keyword));
}

SimulationOutput run_simulation(const SimulationRequest& request) {
  if (request.cells.empty()) throw Error(ErrorCode::ConfigError, "no scenario cells to run");
  std::filesystem::create_directories(request.output_dir);
  SimulationOutput out;

  std::string results = fmt::format("# tool={} {}\n# source={}\n", kToolName, tool_version(), request.source);
  std::string results_cols = "scenario,shape,n,relative_risk,z,censoring,covariate_law,method,cause,max_bias,end_sd,coverage,half_width,"
             "replications,bootstrap_B,fit_failures\n";
  std::string quantiles = fmt::format("# tool={} {}\n# source={}\n", kToolName, tool_version(), request.source);
  std::string quantile_cols = "scenario,shape,n,relative_risk,z,covariate_law,method,q01,q10,q50,q90,q99\n";
  std::string meta = fmt::format("tool = {}\nversion = {}\nsource = {}\n", kToolName, tool_version(), request.source);
  meta += "censoring_law = uniform(0, c*) with c* calibrated on a pilot sample\n";
  meta += "truncation = conditional resampling of T given z on T <= truncation\n";
  meta += "bias_grid = equally spaced on [0, q90 of last event time]\n";

  std::vector<std::string> seeds;
  for (const auto& cell : request.cells) seeds.push_back(cell.label + ":" + std::to_string(cell.seed));
  results += "# method=per row\n# cause=per row\n# z=per row\n# seed=" + join(seeds, ";") + "\n" + results_cols;
  quantiles += "# method=per row\n# cause=total\n# z=per row\n# seed=" + join(seeds, ";") + "\n" + quantile_cols;
  for (const auto& cell : request.cells) {
    const auto r = sim::run_scenario(cell);
    const auto& c = r.config;
    const std::string prefix = fmt::format("{},{},{},{},{},{},{}", c.label, sim::to_string(c.shape), c.n,
                                           num(c.relative_risk), num(c.z_eval), num(c.censor_rate),
                                           sim::to_string(c.covariate_law));
    for (const auto& mc : r.metrics) {
      results += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", prefix, method_name(mc.method), mc.cause == 1 ? "A" : "B",
                             fixed(mc.max_bias, 4), fixed(mc.end_sd, 4), fixed(mc.coverage, 3),
                             fixed(mc.half_width_mean, 4), c.replications, c.bootstrap_B, r.fit_failures);
    }
    if (r.total_quantiles) {
      for (std::size_t m = 0; m < 2; ++m) {
        const auto& q = (*r.total_quantiles)[m];
        quantiles += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", c.label, sim::to_string(c.shape), c.n,
                                 num(c.relative_risk), num(c.z_eval), sim::to_string(c.covariate_law), m + 1,
                                 fixed(q[0], 4), fixed(q[1], 4), fixed(q[2], 4), fixed(q[3], 4), fixed(q[4], 4));
      }
    }
    meta += fmt::format("\n[scenario {}]\nseed = {}\nreplications = {}\nbootstrap_B = {}\nlevel = {}\n", c.label, c.seed,
                        c.replications, c.bootstrap_B, num(c.level));
    meta += fmt::format("sigma_a = {}\nsigma_b = {}\nhorizon = {}\ntarget_total = {}\ntruncation = {}\n",
                        fmt::format("{:.12g}", r.sigma_a), fmt::format("{:.12g}", r.sigma_b), num(c.horizon),
                        num(c.target_total), num(c.truncation));
    if (r.censoring) {
      meta += fmt::format("censor_upper = {:.12g}\ncensor_pilot_rate = {}\ncensor_pilot_draws = {}\n", r.censoring->upper,
                          fixed(r.censoring->achieved_rate, 6), r.censoring->pilot_draws);
    }
    meta += fmt::format("mean_censoring_fraction = {}\nq90_last_event = {:.12g}\ngrid_points = {}\nfit_failures = {}\n"
                        "bootstrap_failed_refits = {}\n",
                        fixed(r.mean_censoring_fraction, 6), r.q90_last_event, c.grid_points, r.fit_failures,
                        r.bootstrap_failed_refits);
    if (r.total_quantiles) meta += fmt::format("max_total_m3_deviation = {:.3e}\n", r.max_total_m3_deviation);
    out.results.push_back(r);
  }

  const auto rp = request.output_dir / "results.csv";
  const auto qp = request.output_dir / "quantiles.csv";
  const auto mp = request.output_dir / "run_metadata.txt";
  write_file(rp, results);
  write_file(qp, quantiles);
  write_file(mp, meta);
  out.files = {rp, qp, mp};
  return out;
}

std::vector<CheckResult> validate_dataset(const SurvivalDataset& data) {
  std::vector<CheckResult> checks;
  auto add = [&](std::string name, bool ok, std::string detail) {
    checks.push_back({std::move(name), ok, std::move(detail)});
  };

  const RiskSetData prepared(data);
  const auto& index = prepared.index();
  {
    bool ok = true;
    for (std::size_t k = 0; k < index.size(); ++k) {
      ok = ok && index.count_at(index.times[k]) == k + 1 && (k == 0 || index.times[k - 1] < index.times[k]) &&
           data[index.failer[k]].event == index.cause[k] && data[index.failer[k]].time == index.times[k];
    }
    add("event index ordered and consistent", ok, fmt::format("{} event times", index.size()));
  }

  const auto fits = fit_all_causes(prepared);
  for (const auto& f : fits) {
    double worst = 0.0;
    const double h = 1e-6;
    for (std::size_t c = 0; c < f.beta.size(); ++c) {
      auto up = f.beta;
      auto dn = f.beta;
      up[c] += h;
      dn[c] -= h;
      const double fd = (evaluate_partial_likelihood(prepared, f.cause, up).loglik -
                         evaluate_partial_likelihood(prepared, f.cause, dn).loglik) / (2 * h);
      worst = std::max(worst, std::abs(fd - f.score[c]));
    }
    add(fmt::format("cause {} Cox fit converged", f.cause), f.converged,
        fmt::format("score max-norm {:.3e}, {} iterations{}", f.score_norm_at_opt, f.iterations,
                    f.diagnostic.empty() ? "" : ", " + f.diagnostic));
    add(fmt::format("cause {} score matches finite differences", f.cause), worst <= 1e-4,
        fmt::format("max abs difference {:.3e}", worst));
  }

  const CifModel model(prepared, fits);
  std::vector<double> zmean(data.covariate_dim(), 0.0);
  for (const auto& s : data.subjects()) {
    for (std::size_t c = 0; c < zmean.size(); ++c) zmean[c] += s.covariates[c] / static_cast<double>(data.size());
  }

  bool monotone = true;
  for (Method m : {Method::M1, Method::M2, Method::M3}) {
    for (const auto& e : model.cif(m, zmean)) {
      const auto v = e.curve.values();
      for (std::size_t k = 0; k < v.size(); ++k) {
        monotone = monotone && v[k] >= (k == 0 ? 0.0 : v[k - 1]) && v[k] >= 0.0;
      }
    }
  }
  add("CIF curves nondecreasing at mean covariates", monotone, "methods 1-3, every cause");

  double last_follow_up = 0.0;
  for (const auto& s : data.subjects()) last_follow_up = std::max(last_follow_up, s.time);
  bool last_is_event = false;
  std::size_t at_last = 0;
  for (const auto& s : data.subjects()) {
    if (s.time == last_follow_up) {
      ++at_last;
      last_is_event = last_is_event || s.event != 0;
    }
  }
  if (last_is_event && at_last == 1) {
    const double total = total_cif(model.cif(Method::M3, zmean)).curve.final_value();
    add("method-3 total CIF equals 1 at the last event time", std::abs(total - 1.0) <= 1e-10,
        fmt::format("|total - 1| = {:.3e}", std::abs(total - 1.0)));
  } else {
    add("method-3 total CIF equals 1 at the last event time", true, "skipped: last follow-up is censored");
  }

  std::vector<CoxFit> null_fits = fits;
  for (auto& f : null_fits) std::fill(f.beta.begin(), f.beta.end(), 0.0);
  const CifModel null_model(prepared, null_fits);
  const auto m2 = null_model.cif(Method::M2, zmean);
  const auto m3 = null_model.cif(Method::M3, zmean);
  double diff = 0.0;
  for (std::size_t j = 0; j < m2.size(); ++j) {
    for (std::size_t k = 0; k < m2[j].curve.size(); ++k) {
      diff = std::max(diff, std::abs(m2[j].curve.values()[k] - m3[j].curve.values()[k]));
    }
  }
  add("beta = 0: methods 2 and 3 coincide (Aalen-Johansen)", diff <= 1e-12, fmt::format("max difference {:.3e}", diff));
  return checks;
}

std::string render_svg(const std::vector<CifEstimate>& curves, const std::vector<double>& half_widths,
                       const std::string& title) {
  constexpr double W = 640, H = 420, L = 56, R = 20, T = 36, B = 44;
  double tmax = 0.0;
  double ymax = 1.0;
  for (const auto& c : curves) {
    if (!c.curve.empty()) tmax = std::max(tmax, c.curve.jump_times().back());
    ymax = std::max(ymax, c.curve.final_value());
  }
  if (tmax <= 0.0) tmax = 1.0;
  ymax = std::ceil(ymax * 10.0) / 10.0;
  auto px = [&](double t) { return L + (W - L - R) * t / tmax; };
  auto py = [&](double y) { return H - B - (H - T - B) * std::clamp(y, 0.0, ymax) / ymax; };
  static const char* palette[] = {"#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" font-size=\"12\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<text x=\"{}\" y=\"22\">{}</text>\n",
      W, H, L, title);
  svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", L, H - B, W - R);
  svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", L, H - B, T);
  for (int i = 0; i <= 5; ++i) {
    const double y = ymax * i / 5.0;
    svg += fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{:.2f}</text>\n", L - 6, py(y) + 4, y);
    const double t = tmax * i / 5.0;
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{:.3g}</text>\n", px(t), H - B + 16, t);
  }

  auto step_path = [&](const StepFunction& f, double offset) {
    std::string d = fmt::format("M {:.2f} {:.2f}", px(0.0), py(f.initial_value() + offset));
    const auto times = f.jump_times();
    const auto values = f.values();
    for (std::size_t k = 0; k < times.size(); ++k) {
      d += fmt::format(" H {:.2f} V {:.2f}", px(times[k]), py(values[k] + offset));
    }
    return d;
  };
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& c = curves[i];
    const bool total = c.cause == kTotalCause;
    const char* colour = total ? "#1f77b4" : palette[static_cast<std::size_t>(c.cause - 1) % 6];
    svg += fmt::format("<path d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.6\"/>\n", step_path(c.curve, 0.0), colour);
    const double hw = i < half_widths.size() ? half_widths[i] : 0.0;
    if (hw > 0.0) {
      for (double sgn : {-1.0, 1.0}) {
        svg += fmt::format("<path d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-dasharray=\"4 3\"/>\n",
                           step_path(c.curve, sgn * hw), colour);
      }
    }
    svg += fmt::format("<text x=\"{}\" y=\"{}\" fill=\"{}\">{}</text>\n", W - R - 90, T + 14 * (static_cast<double>(i) + 1),
                       colour, total ? std::string("total") : "cause " + std::to_string(c.cause));
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace cif::io
