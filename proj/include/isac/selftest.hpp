#pragma once

// Small instances with known answers, shared by the CLI self test and the
// test suites.

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "isac/problem.hpp"
#include "isac/scenario.hpp"

namespace isac {

/// One station, one user, no radar row.
struct SingleUserInstance {
  ScenarioConfig cfg;
  ChannelSet ch;
  ConicProblem prob;
  Eigen::RowVectorXcd h;
  double zeta = 0.0;
  double sigma_c2 = 0.0;
};

SingleUserInstance single_user_instance(int n_antennas, std::uint64_t seed, double zeta_c_db = 10.0,
                                        PowerMode mode = PowerMode::TPC);

/// N = 1, two users of one station on the same unit channel, both at 0 dB:
/// p1 >= p2 + s and p2 >= p1 + s cannot both hold.
ConicProblem contradiction_problem(PowerMode mode = PowerMode::TPC);

struct SelftestCase {
  std::string name;
  bool passed = false;
  std::string detail;
};

std::vector<SelftestCase> run_selftest();

}  // namespace isac
