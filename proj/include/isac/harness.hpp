#pragma once

// Experiment sweeps over thresholds and problem sizes, timing, and result
// persistence.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "isac/problem.hpp"
#include "isac/recovery.hpp"
#include "isac/scenario.hpp"
#include "isac/solver.hpp"
#include "json.hpp"

namespace isac {

enum class SweepKind {
  RateVsZetaC,  ///< grid over the common comm threshold, radar threshold fixed
  PdVsZetaR,    ///< grid over the radar threshold, comm threshold fixed
  TradeOff,     ///< grid over the radar threshold, largest comm threshold within a fixed budget
  Timing,       ///< (K, N) grid at fixed thresholds, repeated solves
};

const char* to_string(SweepKind k);
SweepKind sweep_kind_from_string(const std::string& s);

/// Scenario parameters shared by every point of a sweep. Angles follow
/// ScenarioConfig::defaults for each (K, N).
struct FixedParams {
  int n_paths = 3;
  int stream_len = 50;
  double cross_echo_gain_db = -10.0;
  double sigma_c_dbm = -94.0;
  double sigma_r_dbm = -94.0;
  double power_cap_dbm = 20.0;
};

struct SweepSpec {
  SweepKind kind = SweepKind::RateVsZetaC;
  /// Threshold values (dB) for the threshold sweeps.
  std::vector<double> grid_db;
  /// (K, N) pairs. Timing sweeps iterate over these; the others repeat the
  /// threshold grid for each pair.
  std::vector<std::pair<int, int>> sizes{{5, 10}};
  double zeta_r_db = 10.0;
  double zeta_c_db = 10.0;
  int n_seeds = 20;
  std::uint64_t base_seed = 1;
  std::vector<PowerMode> modes{PowerMode::TPC, PowerMode::PPC};
  int workers = 1;
  /// Solves per point in timing sweeps.
  int repetitions = 10;
  /// Randomized candidates in recovery; 0 keeps only the eigen candidate
  /// unless it cannot be repaired.
  int recovery_samples = 0;
  /// Trade-off budget as a multiple of the radar-only power at the largest
  /// grid value.
  double budget_factor = 4.0;
  /// Search interval and resolution of the trade-off comm threshold (dB).
  double tradeoff_lo_db = -20.0;
  double tradeoff_hi_db = 40.0;
  double tradeoff_tol_db = 0.1;
  /// Accepted range of grid thresholds.
  double threshold_min_db = 0.0;
  double threshold_max_db = 30.0;
  FixedParams fixed;
  SolverOptions solver;

  /// Throws std::invalid_argument on an unusable spec.
  void validate() const;
  /// Scenario for one (K, N, seed).
  ScenarioConfig scenario(int k, int n, std::uint64_t seed) const;
  /// Seed of the i-th replicate.
  std::uint64_t seed(int i) const { return base_seed + static_cast<std::uint64_t>(i); }
};

nlohmann::json to_json(const SweepSpec& s);
SweepSpec sweep_spec_from_json(const nlohmann::json& j);

struct SweepRow {
  PowerMode mode = PowerMode::TPC;
  int k = 0;
  int n = 0;
  double zeta_r_db = 0.0;
  double zeta_c_db = 0.0;
  std::uint64_t seed = 0;
  double t_star = 0.0;          ///< W; +inf when infeasible
  double avg_rate = 0.0;        ///< bps/Hz over both stations' users
  double p_d = 0.0;             ///< mean over stations
  double p_miss = 0.0;          ///< 1 - p_d at full precision
  double solve_time = 0.0;      ///< s
  double max_rank_ratio = 0.0;
  double realized_power = 0.0;  ///< repaired rank-1 cap
  double budget = 0.0;          ///< trade-off budget (W), else 0
  std::uint64_t flops = 0;      ///< constraint assembly
  int iterations = 0;
  std::string status;           ///< optimal, infeasible, max_iterations, recovery_failed, error
  std::string message;

  bool ok() const { return status == "optimal"; }
  bool operator==(const SweepRow&) const;
};

struct SweepResult {
  SweepSpec spec;
  std::vector<SweepRow> rows;
};

/// One row per (mode, size, grid point, seed), in that nesting order.
SweepResult run_sweep(const SweepSpec& spec);

/// Mean and standard error of the metrics at one grid point, over the seeds
/// that are ok at every grid point of the same (mode, K, N). Timing sweeps
/// also keep seeds whose solve ended in an infeasibility certificate.
struct SweepSummary {
  PowerMode mode = PowerMode::TPC;
  int k = 0;
  int n = 0;
  double grid_db = 0.0;
  int count = 0;
  double mean_t_star = 0.0;
  double mean_rate = 0.0;
  double se_rate = 0.0;
  double mean_p_d = 0.0;
  double mean_p_miss = 0.0;
  double mean_zeta_c_db = 0.0;
  double mean_solve_time = 0.0;
  double se_solve_time = 0.0;
};

std::vector<SweepSummary> summarize(const SweepResult& r);

inline constexpr const char* kCsvHeader =
    "mode,K,N,zeta_r_db,zeta_c_db,seed,t_star_w,avg_rate_bps_hz,p_d,solve_time_s,max_rank_ratio,status";

std::string to_csv(const SweepResult& r);
nlohmann::json to_json(const SweepResult& r);
SweepResult sweep_result_from_json(const nlohmann::json& j);

enum class EmitFormat { Csv, Json };
EmitFormat emit_format_from_string(const std::string& s);

/// Writes the result; throws std::runtime_error naming the path on failure.
void emit(const SweepResult& r, EmitFormat format, const std::string& path);

struct FlopEstimate {
  std::uint64_t measured = 0;  ///< counted while assembling the TPC problem
  double model_unit = 0.0;     ///< N^2 K + N K^2
  double model = 0.0;          ///< c * model_unit
};

double flop_model_unit(int k, int n);
FlopEstimate flop_estimate(int k, int n, double c = 1.0);
/// Least-squares fit of log(measured) = log(c) + log(model_unit).
double fit_flop_constant(const std::vector<std::pair<int, int>>& sizes);

}  // namespace isac
