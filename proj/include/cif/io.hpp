#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cif/dataset.hpp"
#include "cif/estimators.hpp"
#include "cif/simulation.hpp"

namespace cif::io {

inline constexpr const char* kToolName = "cifest";
const char* tool_version();

struct CsvOptions {
  std::vector<std::string> covariates;  // empty: every column other than time and event
  TiePolicy tie_policy = TiePolicy::Jitter;
  int num_causes = 0;                   // 0: largest event code
};

struct ParsedCsv {
  SurvivalDataset data;
  std::vector<std::string> covariate_names;
  TieReport ties;
};

/// Columns `time` and `event` plus numeric covariates; comma separated, LF or CRLF.
ParsedCsv parse_csv(const std::filesystem::path& path, const CsvOptions& options = {});
ParsedCsv parse_csv_text(const std::string& text, const CsvOptions& options = {});

/// Writes a dataset so that parse_csv reads it back exactly (17 significant digits).
void write_csv(const SurvivalDataset& data, const std::vector<std::string>& covariate_names,
               const std::filesystem::path& path);
std::string format_csv(const SurvivalDataset& data, const std::vector<std::string>& covariate_names);

/// "age=35,sex=1" -> values in `covariates` order; every covariate must be named.
std::vector<double> parse_z_profile(const std::string& spec, const std::vector<std::string>& covariates);

struct AnalysisRequest {
  std::filesystem::path input_path;
  std::vector<std::string> covariate_columns;
  std::vector<std::string> z_specs;             // raw "--z" strings, kept for labelling
  std::vector<std::vector<double>> z_profiles;  // filled from z_specs when empty
  std::vector<Method> methods{Method::M1, Method::M2, Method::M3};
  std::map<int, std::string> cause_labels;
  bool band = false;
  int band_B = 1000;
  double level = 0.95;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  TiePolicy tie_policy = TiePolicy::Jitter;
  std::filesystem::path output_dir = "cifest-out";
  bool svg = false;
};

struct AnalysisOutput {
  std::vector<std::filesystem::path> files;
  TieReport ties;
  std::vector<CoxFit> fits;
  /// total CIF at the last event time, [profile][method index in request]
  std::vector<std::vector<double>> total_at_last_event;
};

AnalysisOutput run_analysis(const AnalysisRequest& request);

struct SimulationRequest {
  std::vector<sim::ScenarioConfig> cells;
  std::filesystem::path output_dir = "cifest-sim";
  std::string source;  // config path or grid keyword, recorded in metadata
};

/// Config text: `key = value` lines, `#` comments, optional `[cell]` sections.
/// Keys before the first section are defaults for every cell.
std::vector<sim::ScenarioConfig> parse_scenario_config(const std::string& text);
/// A path to a config file, or one of the keywords `paper-grid` / `normal-grid`.
std::vector<sim::ScenarioConfig> load_scenarios(const std::string& path_or_keyword);

struct SimulationOutput {
  std::vector<std::filesystem::path> files;
  std::vector<sim::ScenarioResult> results;
};

SimulationOutput run_simulation(const SimulationRequest& request);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Invariant checks on a dataset: event index, Cox score, monotonicity,
/// end-of-study total, and the beta = 0 reduction.
std::vector<CheckResult> validate_dataset(const SurvivalDataset& data);

/// Static step-curve plot of CIFs with optional bands (clamped to [0,1] for display).
std::string render_svg(const std::vector<CifEstimate>& curves, const std::vector<double>& half_widths,
                       const std::string& title);

}  // namespace cif::io
