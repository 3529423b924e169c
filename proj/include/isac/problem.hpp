#pragma once

// Relaxed collaborative precoding problem as a linear-conic program over
// Hermitian PSD blocks:
//
//   minimize t   s.t.  sum_j tr(A_mj T_j) + c_m t >= d_m,  T_j >= 0,  t >= 0.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "isac/interference.hpp"
#include "isac/scenario.hpp"
#include "json.hpp"

namespace isac {

enum class PowerMode { TPC, PPC };

const char* to_string(PowerMode m);
PowerMode power_mode_from_string(const std::string& s);

struct Thresholds {
  PerStation<double> zeta_r_db{};
  PerStation<std::vector<double>> zeta_c_db;

  /// Same radar threshold for both stations, same comm threshold for all users.
  static Thresholds uniform(double zeta_r_db, double zeta_c_db, int n_users);
};

enum class Topology {
  Symmetric,       ///< both stations carry K users and one radar row
  SingleReceiver,  ///< both stations transmit, only station 0 has SINR rows
  SingleStation,   ///< station 1 is absent
};

enum class CapMode {
  Minimize,  ///< minimize the common cap t
  Fixed,     ///< additionally require t <= configured power cap
};

struct BuildOptions {
  PowerMode mode = PowerMode::TPC;
  InterferenceMode interference = InterferenceMode::OwnChannel;
  Topology topology = Topology::Symmetric;
  CapMode cap = CapMode::Minimize;
  bool radar = true;
};

enum class RowKind { Radar, Comm, Power, Cap, Generic };

/// weight * matrices[matrix] acting on block `block`.
struct ConicTerm {
  int block = 0;
  int matrix = 0;
  double weight = 1.0;
};

struct ConicRow {
  std::vector<ConicTerm> terms;
  double t_coeff = 0.0;
  double rhs = 0.0;
  RowKind kind = RowKind::Generic;
  int station = -1;
  int index = -1;  ///< user for Comm rows, antenna for PPC rows
};

struct BlockTag {
  int station = -1;
  int user = -1;
};

class ConicProblem {
public:
  int add_block(int size, BlockTag tag = {});
  /// Stores a Hermitian data matrix and returns its id.
  int add_matrix(Eigen::MatrixXcd m);
  void add_row(ConicRow row);

  int n_blocks() const { return static_cast<int>(block_sizes_.size()); }
  int n_rows() const { return static_cast<int>(rows_.size()); }
  int block_size(int j) const { return block_sizes_[j]; }
  const BlockTag& tag(int j) const { return tags_[j]; }
  const std::vector<ConicRow>& rows() const { return rows_; }
  const std::vector<Eigen::MatrixXcd>& matrices() const { return matrices_; }
  const Eigen::MatrixXcd& matrix(int id) const { return matrices_[id]; }

  /// Block index of (station, user), or -1.
  int block_of(int station, int user) const;

  /// Combined data matrix A_mj (zero when row m does not touch block j).
  Eigen::MatrixXcd row_block(int row, int block) const;

  /// sum_j tr(A_mj T_j) + c_m t.
  double row_value(int row, const std::vector<Eigen::MatrixXcd>& blocks, double t) const;

  PowerMode mode = PowerMode::TPC;
  BuildOptions options;

private:
  std::vector<int> block_sizes_;
  std::vector<BlockTag> tags_;
  std::vector<Eigen::MatrixXcd> matrices_;
  std::vector<ConicRow> rows_;
};

/// Real floating-point operations spent forming constraint data.
struct FlopCounter {
  std::uint64_t flops = 0;
};

ConicProblem build_problem(const ChannelSet& ch, const Thresholds& th, const ScenarioConfig& cfg,
                           const BuildOptions& opts = {}, FlopCounter* flops = nullptr);

/// Covariances laid out by block index.
std::vector<Eigen::MatrixXcd> to_blocks(const CovarianceSet& cov, const ConicProblem& prob);
CovarianceSet from_blocks(const std::vector<Eigen::MatrixXcd>& blocks, const ConicProblem& prob);

/// Smallest t satisfying every row with a positive t coefficient.
double implied_cap(const std::vector<Eigen::MatrixXcd>& blocks, const ConicProblem& prob);

struct FeasibilityReport {
  /// lhs - rhs per row (negative means violated), in problem units.
  std::vector<double> slack;
  /// Sum of the absolute values of each row's terms, rhs included.
  std::vector<double> magnitude;
  /// Violation of each row divided by its magnitude.
  std::vector<double> relative_violation;
  double worst_violation = 0.0;
  double worst_relative = 0.0;
  int worst_row = -1;
  /// Smallest block eigenvalue divided by the largest block norm.
  double min_eigenvalue = 0.0;
  bool feasible = false;
};

FeasibilityReport check_feasible(const std::vector<Eigen::MatrixXcd>& blocks, double t, const ConicProblem& prob,
                                 double tol = 1e-7);
/// Uses implied_cap for t.
FeasibilityReport check_feasible(const CovarianceSet& cov, const ConicProblem& prob, double tol = 1e-7);

nlohmann::json to_json(const ConicProblem& prob);
nlohmann::json to_json(const FeasibilityReport& r);

}  // namespace isac
