#pragma once

#include <random>

#include <Eigen/Dense>

#include "isac/scenario.hpp"

namespace fixture {

/// Channel set with explicit rows and silent cross links.
inline isac::ChannelSet manual_channels(int n, const std::vector<Eigen::RowVectorXcd>& users,
                                        const std::vector<Eigen::RowVectorXcd>& paths) {
  isac::ChannelSet ch;
  ch.n_antennas = n;
  ch.n_users = static_cast<int>(users.size());
  ch.n_paths = static_cast<int>(paths.size());
  for (int b = 0; b < isac::kStations; ++b) {
    ch.h[b] = users;
    ch.cross_h[b].assign(users.size(), Eigen::RowVectorXcd::Zero(n));
    ch.radar_paths[b] = paths;
    ch.cross_echo[b] = Eigen::MatrixXcd::Zero(n, n);
    ch.cross_los[b] = Eigen::RowVectorXcd::Zero(n);
  }
  return ch;
}

inline Eigen::RowVectorXcd row(std::initializer_list<std::complex<double>> v) {
  Eigen::RowVectorXcd r(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (auto x : v) r(i++) = x;
  return r;
}

inline Eigen::MatrixXcd random_psd(int n, int rank, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXcd a(n, rank);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < rank; ++j) a(i, j) = {g(rng), g(rng)};
  return a * a.adjoint();
}

/// Scenario config with the given noise levels (dBm) and sizes.
inline isac::ScenarioConfig config(int k, int n, int paths, double sigma_dbm) {
  isac::ScenarioConfig cfg = isac::ScenarioConfig::defaults(k, n, paths);
  cfg.sigma_c_dbm = sigma_dbm;
  cfg.sigma_r_dbm = sigma_dbm;
  return cfg;
}

}  // namespace fixture
