#pragma once

// Real-symmetric block SDP in standard form
//
//   (P) minimize <C, X>  s.t.  <A_m, X> = b_m,  X in K
//   (D) maximize b^T y   s.t.  sum_m y_m A_m + Z = C,  Z in K
//
// where K is a product of PSD cones and one non-negative orthant. Solved with
// a homogeneous self-dual embedding, HKM search direction and a Mehrotra
// predictor-corrector, so infeasibility is reported with a Farkas ray rather
// than inferred from stalling.

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace isac::sdp {

struct BlockTerm {
  int block = 0;
  Eigen::MatrixXd data;  ///< symmetric
};

struct Row {
  std::vector<BlockTerm> psd;
  std::vector<std::pair<int, double>> lp;
  double rhs = 0.0;
};

struct Program {
  std::vector<int> block_sizes;
  int n_lp = 0;
  /// Objective; an empty matrix means a zero block.
  std::vector<Eigen::MatrixXd> c_psd;
  Eigen::VectorXd c_lp;
  std::vector<Row> rows;

  /// Throws std::invalid_argument on inconsistent sizes.
  void validate() const;
};

struct TraceRow {
  int iter;
  double primal_obj;
  double dual_obj;
  double gap;
  double residual;
};

struct Options {
  double gap_tol = 1e-9;   ///< relative duality gap
  double feas_tol = 1e-9;  ///< relative primal/dual residuals
  double cert_tol = 1e-8;  ///< Farkas ray residual
  int max_iter = 150;
  double step_fraction = 0.98;
  /// On breakdown, the best iterate is still reported Optimal (or its ray
  /// Infeasible) when it is within this factor of the tolerances.
  double accept_factor = 100.0;
  /// Stop once the best iterate has not halved its error for this many steps.
  int stall_iter = 8;
  std::function<void(const TraceRow&)> trace;
};

enum class Status { Optimal, Infeasible, MaxIterations };

struct Result {
  Status status = Status::MaxIterations;
  std::vector<Eigen::MatrixXd> X, Z;
  Eigen::VectorXd x_lp, z_lp, y;
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  double rel_gap = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
  /// Primal infeasibility ray: b^T y = 1, sum y_m A_m <= 0 on K (approximately).
  Eigen::VectorXd farkas;
  double farkas_residual = 0.0;
  std::string diagnostics;
};

Result solve(const Program& prog, const Options& opts = {});

}  // namespace isac::sdp
