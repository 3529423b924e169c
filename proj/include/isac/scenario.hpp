#pragma once

// Two-station ISAC scenario: configuration, array geometry and channels.

#include <array>
#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace isac {

using cplx = std::complex<double>;

inline constexpr int kStations = 2;

/// Other station of the pair.
constexpr int peer(int station) { return 1 - station; }

/// Bearing, in each station's own frame, of the line towards the other
/// station. The inter-station echo leaves and arrives along this line.
inline constexpr double kInterStationAngleDeg = -45.0;

/// Ratio of LOS to scattered power in the user channels (0 dB).
inline constexpr double kRicianFactor = 1.0;

/// Power of a station's channel to the other station's users, relative to
/// its own users.
inline constexpr double kCrossUserGainDb = -20.0;

template <typename T>
using PerStation = std::array<T, kStations>;

struct ScenarioConfig {
  int n_antennas = 10;
  int n_users = 5;
  int stream_len = 50;
  int n_paths = 3;
  double carrier_hz = 24e9;
  double bandwidth_hz = 100e6;
  PerStation<std::vector<double>> user_angles_deg;
  PerStation<std::vector<double>> radar_path_angles_deg;
  PerStation<std::vector<double>> radar_path_gains_db;
  double cross_echo_gain_db = -10.0;
  double sigma_c_dbm = -94.0;
  double sigma_r_dbm = -94.0;
  double power_cap_dbm = 20.0;
  std::uint64_t seed = 1;

  /// Table-I defaults with angle and path lists sized for (K, N, L_p).
  /// Users are spread evenly over [10, 20] degrees, the radar target sits at
  /// 15 degrees and the extra echo paths alternate at +-20, +-40, ... degrees
  /// from it with -10 dB relative power.
  static ScenarioConfig defaults(int n_users = 5, int n_antennas = 10, int n_paths = 3);

  /// Throws std::invalid_argument when an invariant does not hold.
  void validate() const;

  double sigma_c2() const;
  double sigma_r2() const;
  double power_cap_w() const;
};

ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScenarioConfig& cfg);

struct ChannelSet {
  int n_antennas = 0;
  int n_users = 0;
  int n_paths = 0;
  /// h[b][i]: channel from station b to its own user i. Rician: a random-phase
  /// LOS steering row plus i.i.d. unit-variance scatter, split by kRicianFactor.
  PerStation<std::vector<Eigen::RowVectorXcd>> h;
  /// cross_h[b][i]: channel from station peer(b) to user i of station b,
  /// attenuated by kCrossUserGainDb.
  PerStation<std::vector<Eigen::RowVectorXcd>> cross_h;
  /// radar_paths[b][l]: receive-combined echo rows, l = 0 is the LOS path.
  PerStation<std::vector<Eigen::RowVectorXcd>> radar_paths;
  /// cross_echo[b]: echo of peer(b)'s transmission arriving at station b.
  PerStation<Eigen::MatrixXcd> cross_echo;
  /// LOS row of cross_echo[b] after a matched unit-norm receive combiner.
  PerStation<Eigen::RowVectorXcd> cross_los;
};

/// ULA response with half-wavelength spacing: a_m = exp(i*pi*m*sin(theta)).
Eigen::VectorXcd make_steering(double angle_deg, int n);

ChannelSet generate_channels(const ScenarioConfig& cfg);

double dbm_to_watts(double dbm);
double db_to_linear(double db);
double linear_to_db(double lin);

}  // namespace isac
