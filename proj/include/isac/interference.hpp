#pragma once

// Analytic SINR, rate and detection metrics evaluated on transmit covariances.

#include <vector>

#include <Eigen/Dense>

#include "isac/scenario.hpp"
#include "json.hpp"

namespace isac {

/// Per-user transmit covariances T[b][i]. A station may carry an empty list
/// (it then transmits nothing).
struct CovarianceSet {
  PerStation<std::vector<Eigen::MatrixXcd>> T;

  /// R_b = sum_i T[b][i]; zero matrix of size n when the station is silent.
  Eigen::MatrixXcd sum(int station, int n) const;

  /// Hermitian within 1e-9, eigenvalues >= -1e-9 (scaled by the largest
  /// entry magnitude), finite.
  bool valid(double tol = 1e-9) const;
};

/// Which channel weights the intra-cell interference at user i.
enum class InterferenceMode {
  OwnChannel,  ///< sum_{j!=i} h_i T_j h_i^H, the physical reception path
  Literal,     ///< sum_{j!=i} h_j T_j h_j^H, as the SINR formula is printed
};

/// Form of the inter-station term in the radar SINR.
enum class RadarCrossForm {
  FullEcho,  ///< tr(G^H G R_peer) with the full cross-echo matrix
  LosRow,    ///< tr(g^H g R_peer) with the LOS row of the cross echo
};

double comm_sinr(int user, int station, const CovarianceSet& cov, const ChannelSet& ch, double sigma_c2,
                 InterferenceMode mode = InterferenceMode::OwnChannel);

double radar_sinr(int station, const CovarianceSet& cov, const ChannelSet& ch, double sigma_r2,
                  RadarCrossForm form = RadarCrossForm::FullEcho);

/// Mean of log2(1 + gamma_i) over users.
double avg_rate(const std::vector<double>& sinr);

/// First-order Marcum Q function Q1(a, b).
double marcum_q1(double a, double b);
/// 1 - Q1(a, b), evaluated directly so that it keeps relative accuracy when
/// Q1 is close to one.
double marcum_q1_complement(double a, double b);

/// CFAR detection of a non-fluctuating point target:
/// P_d = Q1(sqrt(2 gamma), sqrt(-2 ln p_f)).
double detection_probability(double gamma_r, double p_f);
/// 1 - P_d with full relative accuracy.
double miss_probability(double gamma_r, double p_f);

inline constexpr double kFalseAlarm = 1e-7;

struct MetricsReport {
  PerStation<std::vector<double>> comm_sinr;
  PerStation<double> radar_sinr{};
  /// Average rate of each station's users, and the mean over active stations.
  PerStation<double> station_rate{};
  double avg_rate = 0.0;
  PerStation<double> detect_prob{};
  PerStation<double> miss_prob{};
  PerStation<double> total_power{};
  /// Largest diagonal entry of R_b.
  PerStation<double> per_antenna_power{};
};

struct MetricsOptions {
  InterferenceMode interference = InterferenceMode::OwnChannel;
  RadarCrossForm radar_cross = RadarCrossForm::FullEcho;
  double p_f = kFalseAlarm;
};

/// Metrics for every station whose covariance list is non-empty.
MetricsReport compute_metrics(const CovarianceSet& cov, const ChannelSet& ch, double sigma_c2, double sigma_r2,
                              const MetricsOptions& opts = {});

nlohmann::json to_json(const MetricsReport& m);

}  // namespace isac
