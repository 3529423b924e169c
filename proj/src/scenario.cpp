#include "isac/scenario.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

namespace isac {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

// Unit-variance circularly-symmetric complex Gaussian.
cplx complex_normal(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

}  // namespace

ScenarioConfig ScenarioConfig::defaults(int n_users, int n_antennas, int n_paths) {
  ScenarioConfig cfg;
  cfg.n_users = n_users;
  cfg.n_antennas = n_antennas;
  cfg.n_paths = n_paths;
  for (int b = 0; b < kStations; ++b) {
    auto& users = cfg.user_angles_deg[b];
    users.resize(std::max(n_users, 0));
    for (int k = 0; k < n_users; ++k)
      users[k] = n_users == 1 ? 15.0 : 10.0 + 10.0 * k / (n_users - 1);

    auto& angles = cfg.radar_path_angles_deg[b];
    auto& gains = cfg.radar_path_gains_db[b];
    angles.assign(std::max(n_paths, 0), 15.0);
    gains.assign(std::max(n_paths, 0), -10.0);
    if (n_paths > 0) gains[0] = 0.0;
    for (int l = 1; l < n_paths; ++l) {
      const double offset = 20.0 * ((l + 1) / 2);
      angles[l] = 15.0 + (l % 2 == 1 ? -offset : offset);
    }
  }
  return cfg;
}

void ScenarioConfig::validate() const {
  if (n_antennas < 1) throw std::invalid_argument("n_antennas must be >= 1");
  if (n_users < 1) throw std::invalid_argument("n_users must be >= 1");
  if (stream_len < n_users) throw std::invalid_argument("stream_len must be >= n_users");
  if (n_paths < 1) throw std::invalid_argument("n_paths must be >= 1");
  if (!(carrier_hz > 0.0) || !(bandwidth_hz > 0.0))
    throw std::invalid_argument("carrier_hz and bandwidth_hz must be positive");
  for (int b = 0; b < kStations; ++b) {
    if (static_cast<int>(user_angles_deg[b].size()) != n_users)
      throw std::invalid_argument("user_angles_deg[" + std::to_string(b) + "] must have n_users entries");
    if (static_cast<int>(radar_path_angles_deg[b].size()) != n_paths)
      throw std::invalid_argument("radar_path_angles_deg[" + std::to_string(b) + "] must have n_paths entries");
    if (static_cast<int>(radar_path_gains_db[b].size()) != n_paths)
      throw std::invalid_argument("radar_path_gains_db[" + std::to_string(b) + "] must have n_paths entries");
    if (!all_finite(user_angles_deg[b]) || !all_finite(radar_path_angles_deg[b]))
      throw std::invalid_argument("angles must be finite");
    if (!all_finite(radar_path_gains_db[b]))
      throw std::invalid_argument("radar path gains must be finite");
  }
  if (!std::isfinite(cross_echo_gain_db)) throw std::invalid_argument("cross_echo_gain_db must be finite");
  if (!std::isfinite(sigma_c_dbm) || !std::isfinite(sigma_r_dbm) || !std::isfinite(power_cap_dbm))
    throw std::invalid_argument("noise and power levels must be finite");
}

double ScenarioConfig::sigma_c2() const { return dbm_to_watts(sigma_c_dbm); }
double ScenarioConfig::sigma_r2() const { return dbm_to_watts(sigma_r_dbm); }
double ScenarioConfig::power_cap_w() const { return dbm_to_watts(power_cap_dbm); }

ScenarioConfig scenario_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {
      "n_antennas",       "n_users",         "stream_len",         "n_paths",
      "carrier_hz",       "bandwidth_hz",    "user_angles_deg",    "radar_path_angles_deg",
      "radar_path_gains_db", "cross_echo_gain_db", "sigma_c_dbm",  "sigma_r_dbm",
      "power_cap_dbm",    "seed"};
  if (!j.is_object()) throw std::invalid_argument("scenario must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw std::invalid_argument("unknown scenario field: " + key);

  // Sizes first so that omitted lists get defaults of the right length.
  const int k = j.value("n_users", 5);
  const int n = j.value("n_antennas", 10);
  const int lp = j.value("n_paths", 3);
  ScenarioConfig cfg = ScenarioConfig::defaults(k, n, lp);

  auto per_station = [&](const char* key, PerStation<std::vector<double>>& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != kStations)
      throw std::invalid_argument(std::string(key) + " must be a list of two lists");
    for (int b = 0; b < kStations; ++b) out[b] = v[b].get<std::vector<double>>();
  };

  cfg.stream_len = j.value("stream_len", cfg.stream_len);
  cfg.carrier_hz = j.value("carrier_hz", cfg.carrier_hz);
  cfg.bandwidth_hz = j.value("bandwidth_hz", cfg.bandwidth_hz);
  per_station("user_angles_deg", cfg.user_angles_deg);
  per_station("radar_path_angles_deg", cfg.radar_path_angles_deg);
  per_station("radar_path_gains_db", cfg.radar_path_gains_db);
  cfg.cross_echo_gain_db = j.value("cross_echo_gain_db", cfg.cross_echo_gain_db);
  cfg.sigma_c_dbm = j.value("sigma_c_dbm", cfg.sigma_c_dbm);
  cfg.sigma_r_dbm = j.value("sigma_r_dbm", cfg.sigma_r_dbm);
  cfg.power_cap_dbm = j.value("power_cap_dbm", cfg.power_cap_dbm);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.validate();
  return cfg;
}

nlohmann::json to_json(const ScenarioConfig& cfg) {
  auto per_station = [](const PerStation<std::vector<double>>& v) {
    return nlohmann::json::array({v[0], v[1]});
  };
  return {
      {"n_antennas", cfg.n_antennas},
      {"n_users", cfg.n_users},
      {"stream_len", cfg.stream_len},
      {"n_paths", cfg.n_paths},
      {"carrier_hz", cfg.carrier_hz},
      {"bandwidth_hz", cfg.bandwidth_hz},
      {"user_angles_deg", per_station(cfg.user_angles_deg)},
      {"radar_path_angles_deg", per_station(cfg.radar_path_angles_deg)},
      {"radar_path_gains_db", per_station(cfg.radar_path_gains_db)},
      {"cross_echo_gain_db", cfg.cross_echo_gain_db},
      {"sigma_c_dbm", cfg.sigma_c_dbm},
      {"sigma_r_dbm", cfg.sigma_r_dbm},
      {"power_cap_dbm", cfg.power_cap_dbm},
      {"seed", cfg.seed},
  };
}

Eigen::VectorXcd make_steering(double angle_deg, int n) {
  if (n < 1) throw std::invalid_argument("steering vector length must be >= 1");
  const double phase = std::numbers::pi * std::sin(angle_deg * kDeg);
  Eigen::VectorXcd a(n);
  for (int m = 0; m < n; ++m) a[m] = std::polar(1.0, phase * m);
  return a;
}

ChannelSet generate_channels(const ScenarioConfig& cfg) {
  cfg.validate();
  const int n = cfg.n_antennas;
  const int k = cfg.n_users;

  ChannelSet ch;
  ch.n_antennas = n;
  ch.n_users = k;
  ch.n_paths = cfg.n_paths;

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const double los_amp = std::sqrt(kRicianFactor / (kRicianFactor + 1.0));
  const double nlos_amp = std::sqrt(1.0 / (kRicianFactor + 1.0));
  auto rician = [&](double angle_deg, double gain) {
    Eigen::RowVectorXcd row = los_amp * std::polar(1.0, phase(rng)) * make_steering(angle_deg, n).transpose();
    for (int m = 0; m < n; ++m) row(m) += nlos_amp * complex_normal(rng);
    return Eigen::RowVectorXcd(gain * row);
  };
  const double cross_user_amp = std::pow(10.0, kCrossUserGainDb / 20.0);
  for (int b = 0; b < kStations; ++b) {
    ch.h[b].reserve(k);
    for (int i = 0; i < k; ++i) ch.h[b].push_back(rician(cfg.user_angles_deg[b][i], 1.0));
  }
  // Users of station b seen from the peer station sit at the mirrored bearing.
  for (int b = 0; b < kStations; ++b) {
    ch.cross_h[b].reserve(k);
    for (int i = 0; i < k; ++i) ch.cross_h[b].push_back(rician(-cfg.user_angles_deg[b][i], cross_user_amp));
  }

  const double cross_amp = std::pow(10.0, cfg.cross_echo_gain_db / 20.0);
  const Eigen::VectorXcd a_link = make_steering(kInterStationAngleDeg, n);
  for (int b = 0; b < kStations; ++b) {
    ch.radar_paths[b].reserve(cfg.n_paths);
    for (int l = 0; l < cfg.n_paths; ++l) {
      const double amp = std::pow(10.0, cfg.radar_path_gains_db[b][l] / 20.0);
      ch.radar_paths[b].push_back(amp * make_steering(cfg.radar_path_angles_deg[b][l], n).transpose());
    }
    ch.cross_echo[b] = cross_amp * a_link * a_link.transpose();
    ch.cross_los[b] = (a_link.adjoint() / a_link.norm()) * ch.cross_echo[b];
  }
  return ch;
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

}  // namespace isac
