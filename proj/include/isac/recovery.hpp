#pragma once

// Rank-1 beamformers from relaxed covariances, feasibility repair by a
// fixed-direction power LP, and transmit waveform synthesis.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "isac/problem.hpp"
#include "isac/solver.hpp"
#include "json.hpp"

namespace isac {

struct EigenBeam {
  Eigen::VectorXcd x;
  /// lambda_max / tr(T); 0 for a zero matrix.
  double captured = 0.0;
  bool zero = false;
};

/// sqrt(lambda_max) v_max, first non-zero component real-positive. Ties in
/// lambda_max resolve to the lowest-index eigenvector.
EigenBeam eigen_extract(const Eigen::MatrixXcd& t);

/// x = T^{1/2} u with u ~ CN(0, I), one column per sample, so E[x x^H] = T.
/// Samples are drawn in order from one stream, so a longer run extends a
/// shorter one with the same seed.
Eigen::MatrixXcd randomize_extract(const Eigen::MatrixXcd& t, int n_samples, std::uint64_t seed);

struct PowerRepair {
  std::vector<double> powers;  ///< per block
  double t = 0.0;
  bool feasible = false;
  SolveStatus status = SolveStatus::MaxIterations;
};

/// With one unit-norm direction per block fixed, minimizes t over the block
/// powers. The LP is handed to the conic solver with 1x1 blocks.
PowerRepair repair_power(const std::vector<Eigen::VectorXcd>& dirs, const ConicProblem& prob);

/// X = W S where W = [x_1 .. x_K] and S holds K distinct rows of the L-point
/// DFT matrix chosen by a seeded permutation, so S S^H = L I.
Eigen::MatrixXcd synthesize_waveform(const std::vector<Eigen::VectorXcd>& beams, int stream_len, std::uint64_t seed);

enum class RecoveryMethod { Eigen, Randomized };

const char* to_string(RecoveryMethod m);

struct RecoveryOptions {
  int samples = 100;
  std::uint64_t seed = 1;
  int stream_len = 50;
};

struct PrecoderSet {
  PerStation<std::vector<Eigen::VectorXcd>> beams;
  PerStation<Eigen::MatrixXcd> waveforms;
  RecoveryMethod method = RecoveryMethod::Eigen;
  int samples = 0;
  double realized_power = 0.0;  ///< repaired cap t (W)
  double sdp_power = 0.0;       ///< t* of the relaxation
  FeasibilityReport feasibility;
  bool feasible = false;

  /// Per-station covariances sum_i x x^H.
  CovarianceSet covariances() const;
  /// realized_power / sdp_power.
  double ratio() const;
};

/// Eigen candidate and `samples` randomized candidates, each repaired; the
/// feasible one with the smallest t is kept. Needs an Optimal solution.
PrecoderSet recover(const SdpSolution& sol, const ConicProblem& prob, const RecoveryOptions& opts = {});

nlohmann::json to_json(const PrecoderSet& p);

/// Antenna-by-symbol grid, one line per antenna, "re+imj" entries.
void write_waveform_csv(const Eigen::MatrixXcd& x, const std::string& path);

}  // namespace isac
