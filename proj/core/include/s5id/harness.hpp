#pragma once

#include "s5id/eval.hpp"
#include "s5id/s5.hpp"
#include "s5id/ss_model.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace s5id {

enum class ExperimentMode { LowDim, HighDim, Consistency, Custom };

std::string to_string(ExperimentMode mode);
ExperimentMode parse_mode(const std::string& text);

/// Integer rule evaluated per (n, Tbar) group:
///   "const:k"              k
///   "order_plus:k"         n + k
///   "log_tbar:c"           ceil(c ln Tbar)
///   "excitation:c:offset"  ceil(c (m+2) f + offset)   (Tbar rules only)
struct IntegerRule {
  enum class Kind { Const, OrderPlus, LogTbar, Excitation };
  Kind kind = Kind::Const;
  double scale = 0.0;
  double offset = 0.0;

  static IntegerRule parse(const std::string& text);
  std::string to_string() const;
  Index evaluate(Index order, Index tbar, Index inputs, Index future_lag) const;
};

struct ExperimentConfig {
  ExperimentMode mode = ExperimentMode::LowDim;
  std::vector<Index> orders;
  std::vector<Index> Tbar_values;
  std::string Tbar_rule;
  std::string f_rule;
  std::string p_rule;
  /// Kept repeats per group must have an unstable LS estimate; 0 keeps every draw.
  Index target_unstable_count = 0;
  /// Draws per group when target_unstable_count is 0.
  Index repeats = 0;
  Index max_attempts = 0;
  std::uint64_t base_seed = 1;
  std::string output_path;
  /// Custom mode: model document with an "input_law" entry.
  std::string model_path;
  Index grid_points = kDefaultGridPoints;
  Index bode_points = 200;
  Index bode_repeats = 3;
  InitMode init = InitMode::Stationary;
  NoiseDistribution noise = NoiseDistribution::Gaussian;

  /// Reference-study defaults for a mode.
  static ExperimentConfig defaults(ExperimentMode mode);
  void validate() const;
};

/// Fields absent from the document keep the defaults of its "mode".
ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);

struct SummaryStats {
  Index count = 0;
  double median = 0.0;  // lower of the two middle values for even counts
  double q1 = 0.0;      // sorted[floor((N-1)/4)]
  double q3 = 0.0;      // sorted[floor(3(N-1)/4)]
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

SummaryStats summarize(std::vector<double> values);

struct RepeatRow {
  Index attempt = 0;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string failure_stage;
  std::string failure_code;
  std::string failure_message;
  double rho_A_star = 0.0;
  bool unstable_ls = false;
  bool s5_run = false;
  double rho_A_hat = 0.0;
  double rho_Au_hat = 0.0;
  double sigma_R = 0.0;
  double sylvester_residual = 0.0;
  double hinf_hard = 0.0;
  double hinf_soft = 0.0;
  double hinf_argmax = 0.0;
  double au_error = 0.0;      // spectral norm of A_u_hat - A_u
  double eig_distance = 0.0;  // max gap between sorted |eig(A_hat)| and |eig(A)|
  std::vector<double> pole_magnitudes;
  std::vector<StageRecord> stages;
  double total_seconds = 0.0;
  /// In-memory only: |F_hat| on the bode grid, one row per frequency.
  Matrix bode;
};

struct GroupResult {
  Index n = 0;
  Index Tbar = 0;
  Index f = 0;
  Index p = 0;
  Index attempts = 0;
  Index unstable_count = 0;
  Index failures = 0;
  std::string status = "complete";
  std::vector<double> true_pole_magnitudes;
  std::vector<RepeatRow> rows;
  std::vector<double> bode_omegas;
  Index bode_columns = 0;  // m + d
  Matrix true_bode;
};

struct ExperimentRecord {
  ExperimentConfig config;
  std::vector<GroupResult> groups;
};

struct RunOptions {
  unsigned jobs = 1;
  std::function<void(const std::string&)> log;
};

ExperimentRecord run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});
ExperimentRecord run_lowdim(const ExperimentConfig& cfg, const RunOptions& options = {});
ExperimentRecord run_highdim(const ExperimentConfig& cfg, const RunOptions& options = {});
ExperimentRecord run_consistency(const ExperimentConfig& cfg, const RunOptions& options = {});

/// Record document: config echo, metadata, per-group rows and aggregates,
/// plus a cross-group analysis. Timing fields are omitted when
/// `include_timings` is false, which makes the text a pure function of the
/// configuration.
std::string record_to_json(const ExperimentRecord& record, bool include_timings = true);
/// Parses a record and recomputes every aggregate from its rows; throws
/// ParseError when an emitted aggregate differs from the recomputed one.
ExperimentRecord record_from_json(const std::string& text);

/// Aggregate statistics of one group, as emitted in the record.
struct GroupAggregate {
  double unstable_incidence = 0.0;
  Index kept = 0;
  bool all_stable = true;
  std::map<std::string, SummaryStats> stats;
  std::map<std::string, double> mean_stage_seconds;
  double mean_total_seconds = 0.0;
  double sum_total_seconds = 0.0;
};
GroupAggregate aggregate(const GroupResult& group);

/// Cross-group consistency analysis: per-Tbar medians and monotonicity.
struct ConsistencyAnalysis {
  std::vector<Index> Tbar;
  std::vector<double> median_au_error;
  std::vector<double> median_eig_distance;
  std::vector<double> median_hinf_soft;
  std::vector<double> median_hinf_hard;
  bool au_error_decreasing = false;
  bool eig_distance_decreasing = false;
  bool hinf_soft_decreasing = false;
  bool hinf_hard_nonincreasing = false;
  double au_error_loglog_slope = 0.0;
};
ConsistencyAnalysis analyze(const ExperimentRecord& record, Index order);

/// Writes poles.csv, hinf.csv, timings.csv and bode.csv into `dir`.
void write_csv_exports(const ExperimentRecord& record, const std::filesystem::path& dir);

/// Writes record.json plus the CSV exports into `dir`.
void write_outputs(const ExperimentRecord& record, const std::filesystem::path& dir);

/// Lags for a dataset identification.
struct IdentifyConfig {
  Index order = 0;
  std::string f_rule = "order_plus:10";
  std::string p_rule = "order_plus:10";
  std::optional<Index> future_lag;
  std::optional<Index> past_lag;

  SubspaceConfig resolve(const Dataset& data) const;
};

IdentifyConfig identify_config_from_json(const std::string& text);

/// Identification document: model (A_hat, B_hat, C_hat, K_hat, Q_eps_hat),
/// A_star, A_u_hat, M_hat, canonical correlations and diagnostics.
std::string identification_to_json(const S5Result& result, bool include_timings = true);

/// Reads a dataset CSV, runs the pipeline, returns the document text.
std::string identify_from_file(const std::filesystem::path& data_path, const IdentifyConfig& cfg,
                               bool include_timings = true);

/// Simulation settings for the `simulate` command.
struct SimulateConfig {
  std::string system = "lowdim";  // lowdim | highdim | path to a model document
  Index order = 16;               // highdim only
  Index past_lag = 26;            // highdim only
  Index Tbar = 1280;
  InitMode init = InitMode::Stationary;
  NoiseDistribution noise = NoiseDistribution::Gaussian;
};

SimulateConfig simulate_config_from_json(const std::string& text);
ExampleSystem load_system(const SimulateConfig& cfg);

}  // namespace s5id
