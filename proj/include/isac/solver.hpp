#pragma once

// Relaxed SDP solve over complex Hermitian blocks, via a real embedding into
// the block solver in sdp_core.hpp.

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "isac/interference.hpp"
#include "isac/problem.hpp"
#include "isac/sdp_core.hpp"
#include "json.hpp"

namespace isac {

/// X + iY  ->  [[X, -Y], [Y, X]]. Throws std::invalid_argument if the input
/// is not Hermitian within 1e-9 (relative to its largest entry).
Eigen::MatrixXd embed_hermitian(const Eigen::MatrixXcd& m);

/// Inverse of embed_hermitian for any real symmetric 2n x 2n matrix,
/// averaging the two copies: ((Z11 + Z22) + i (Z21 - Z12)) / 2.
Eigen::MatrixXcd project_hermitian(const Eigen::MatrixXd& z);

enum class SolveStatus { Optimal, Infeasible, MaxIterations };

const char* to_string(SolveStatus s);

struct SolverOptions {
  double gap_tol = 1e-9;
  double feas_tol = 1e-9;
  double cert_tol = 1e-8;
  int max_iter = 150;
  int verbosity = 0;
  /// Receives (iter, primal_obj, dual_obj, gap, residual) per iteration.
  std::function<void(const sdp::TraceRow&)> trace;
};

struct SdpSolution {
  SolveStatus status = SolveStatus::MaxIterations;
  /// Per-block covariances in problem units (W).
  std::vector<Eigen::MatrixXcd> blocks;
  CovarianceSet covariances;
  double t_star = 0.0;
  double gap = 0.0;  ///< relative duality gap reported by the solver
  int iterations = 0;
  double solve_time = 0.0;  ///< seconds

  /// Row multipliers in problem units; empty unless Optimal.
  std::vector<double> multipliers;
  /// Farkas ray (d^T y = 1) when Infeasible; empty otherwise.
  std::vector<double> farkas;
  double farkas_residual = 0.0;

  double primal_residual = 0.0;
  double dual_residual = 0.0;
  std::string diagnostics;
};

/// Natural power unit of a problem: the median ratio |d_m| / ||row m|| over
/// rows with a non-zero right-hand side (1 if there are none).
double natural_power_unit(const ConicProblem& prob);

SdpSolution solve(const ConicProblem& prob, const SolverOptions& opts = {});

struct CertificateReport {
  bool available = false;
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  double gap = 0.0;           ///< |p - d| / max(|p|, |d|)
  double complementarity = 0.0;  ///< sum of tr(Z_j T_j) + y^T s + z_t t
  double dual_infeasibility = 0.0;  ///< most negative dual cone value, relative
  std::vector<double> block_complementarity;
  std::string note;
};

/// Recomputes the dual objective, dual slacks and complementarity from the
/// stored multipliers, independently of the solver's own bookkeeping.
CertificateReport dual_certificate(const SdpSolution& sol, const ConicProblem& prob);

struct InfeasibilityReport {
  bool available = false;
  double dual_objective = 0.0;  ///< d^T y, 1 by normalisation
  double cone_violation = 0.0;  ///< max(lambda_max(sum y A_j), sum y c, -min y), relative
};

/// Checks a Farkas ray: y >= 0, sum_m y_m A_mj <= 0, sum_m y_m c_m <= 0, d^T y > 0.
InfeasibilityReport check_farkas(const SdpSolution& sol, const ConicProblem& prob);

/// Largest lambda_2 / lambda_1 over non-zero blocks.
double max_rank_ratio(const std::vector<Eigen::MatrixXcd>& blocks);

nlohmann::json to_json(const SdpSolution& sol);

}  // namespace isac
