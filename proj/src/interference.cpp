#include "isac/interference.hpp"

#include <cmath>
#include <stdexcept>

namespace isac {

namespace {

// tr(v^H v T) = v T v^H for a row vector v.
double quad(const Eigen::RowVectorXcd& v, const Eigen::MatrixXcd& T) {
  if (v.size() != T.rows() || T.rows() != T.cols()) throw std::invalid_argument("dimension mismatch");
  return (v * T * v.adjoint())(0, 0).real();
}

int antennas_of(const ChannelSet& ch) { return ch.n_antennas; }

}  // namespace

Eigen::MatrixXcd CovarianceSet::sum(int station, int n) const {
  Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& t : T[station]) {
    if (t.rows() != n || t.cols() != n) throw std::invalid_argument("covariance dimension mismatch");
    r += t;
  }
  return r;
}

bool CovarianceSet::valid(double tol) const {
  for (const auto& list : T)
    for (const auto& t : list) {
      if (t.rows() != t.cols() || !t.allFinite()) return false;
      const double scale = std::max(1.0, t.cwiseAbs().maxCoeff());
      if ((t - t.adjoint()).cwiseAbs().maxCoeff() > tol * scale) return false;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(t, Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < -tol * scale) return false;
    }
  return true;
}

double comm_sinr(int user, int station, const CovarianceSet& cov, const ChannelSet& ch, double sigma_c2,
                 InterferenceMode mode) {
  if (!(sigma_c2 > 0.0)) throw std::invalid_argument("sigma_c2 must be positive");
  const int n = antennas_of(ch);
  const auto& own = cov.T[station];
  if (user < 0 || user >= static_cast<int>(own.size())) throw std::invalid_argument("user index out of range");

  const Eigen::RowVectorXcd& h = ch.h[station][user];
  const double signal = quad(h, own[user]);

  double intra = 0.0;
  for (int j = 0; j < static_cast<int>(own.size()); ++j) {
    if (j == user) continue;
    const auto& hj = mode == InterferenceMode::OwnChannel ? h : ch.h[station][j];
    intra += quad(hj, own[j]);
  }
  const double cross = quad(ch.cross_h[station][user], cov.sum(peer(station), n));
  return signal / (cross + intra + sigma_c2);
}

double radar_sinr(int station, const CovarianceSet& cov, const ChannelSet& ch, double sigma_r2,
                  RadarCrossForm form) {
  if (!(sigma_r2 > 0.0)) throw std::invalid_argument("sigma_r2 must be positive");
  const int n = antennas_of(ch);
  const Eigen::MatrixXcd r_own = cov.sum(station, n);
  const Eigen::MatrixXcd r_peer = cov.sum(peer(station), n);

  const auto& paths = ch.radar_paths[station];
  const double signal = quad(paths.front(), r_own);
  double multipath = 0.0;
  for (std::size_t l = 1; l < paths.size(); ++l) multipath += quad(paths[l], r_own);

  double cross = 0.0;
  if (form == RadarCrossForm::FullEcho) {
    const auto& g = ch.cross_echo[station];
    if (g.cols() != n) throw std::invalid_argument("dimension mismatch");
    cross = (g.adjoint() * g * r_peer).trace().real();
  } else {
    cross = quad(ch.cross_los[station], r_peer);
  }
  return signal / (cross + multipath + sigma_r2);
}

double avg_rate(const std::vector<double>& sinr) {
  if (sinr.empty()) return 0.0;
  double acc = 0.0;
  for (double g : sinr) {
    if (!(g >= 0.0)) throw std::invalid_argument("SINR must be non-negative");
    acc += std::log2(1.0 + g);
  }
  return acc / static_cast<double>(sinr.size());
}

MetricsReport compute_metrics(const CovarianceSet& cov, const ChannelSet& ch, double sigma_c2, double sigma_r2,
                              const MetricsOptions& opts) {
  MetricsReport m;
  const int n = antennas_of(ch);
  int active = 0;
  for (int b = 0; b < kStations; ++b) {
    const int users = static_cast<int>(cov.T[b].size());
    const Eigen::MatrixXcd r = cov.sum(b, n);
    m.total_power[b] = r.trace().real();
    m.per_antenna_power[b] = users ? r.diagonal().real().maxCoeff() : 0.0;
    if (users == 0) {
      m.detect_prob[b] = opts.p_f;
      m.miss_prob[b] = 1.0 - opts.p_f;
      continue;
    }
    ++active;
    for (int i = 0; i < users; ++i)
      m.comm_sinr[b].push_back(comm_sinr(i, b, cov, ch, sigma_c2, opts.interference));
    m.station_rate[b] = avg_rate(m.comm_sinr[b]);
    m.avg_rate += m.station_rate[b];
    m.radar_sinr[b] = radar_sinr(b, cov, ch, sigma_r2, opts.radar_cross);
    m.detect_prob[b] = detection_probability(m.radar_sinr[b], opts.p_f);
    m.miss_prob[b] = miss_probability(m.radar_sinr[b], opts.p_f);
  }
  if (active) m.avg_rate /= active;
  return m;
}

nlohmann::json to_json(const MetricsReport& m) {
  nlohmann::json j;
  j["comm_sinr"] = {m.comm_sinr[0], m.comm_sinr[1]};
  j["radar_sinr"] = {m.radar_sinr[0], m.radar_sinr[1]};
  j["station_rate"] = {m.station_rate[0], m.station_rate[1]};
  j["avg_rate"] = m.avg_rate;
  j["detect_prob"] = {m.detect_prob[0], m.detect_prob[1]};
  j["miss_prob"] = {m.miss_prob[0], m.miss_prob[1]};
  j["total_power"] = {m.total_power[0], m.total_power[1]};
  j["per_antenna_power"] = {m.per_antenna_power[0], m.per_antenna_power[1]};
  return j;
}

}  // namespace isac
