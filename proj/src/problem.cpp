#include "isac/problem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace isac {

const char* to_string(PowerMode m) { return m == PowerMode::TPC ? "tpc" : "ppc"; }

PowerMode power_mode_from_string(const std::string& s) {
  if (s == "tpc" || s == "TPC") return PowerMode::TPC;
  if (s == "ppc" || s == "PPC") return PowerMode::PPC;
  throw std::invalid_argument("unknown power mode: " + s);
}

Thresholds Thresholds::uniform(double zeta_r_db, double zeta_c_db, int n_users) {
  Thresholds th;
  for (int b = 0; b < kStations; ++b) {
    th.zeta_r_db[b] = zeta_r_db;
    th.zeta_c_db[b].assign(n_users, zeta_c_db);
  }
  return th;
}

int ConicProblem::add_block(int size, BlockTag tag) {
  if (size < 1) throw std::invalid_argument("block size must be >= 1");
  block_sizes_.push_back(size);
  tags_.push_back(tag);
  return n_blocks() - 1;
}

int ConicProblem::add_matrix(Eigen::MatrixXcd m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("data matrix must be square");
  if (!m.allFinite()) throw std::invalid_argument("data matrix must be finite");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("data matrix must be Hermitian");
  matrices_.push_back(std::move(m));
  return static_cast<int>(matrices_.size()) - 1;
}

void ConicProblem::add_row(ConicRow row) {
  for (const auto& term : row.terms) {
    if (term.block < 0 || term.block >= n_blocks()) throw std::invalid_argument("row references unknown block");
    if (term.matrix < 0 || term.matrix >= static_cast<int>(matrices_.size()))
      throw std::invalid_argument("row references unknown matrix");
    if (matrices_[term.matrix].rows() != block_sizes_[term.block])
      throw std::invalid_argument("data matrix does not match block size");
    if (!std::isfinite(term.weight)) throw std::invalid_argument("row weight must be finite");
  }
  if (!std::isfinite(row.t_coeff) || !std::isfinite(row.rhs)) throw std::invalid_argument("row data must be finite");
  rows_.push_back(std::move(row));
}

int ConicProblem::block_of(int station, int user) const {
  for (int j = 0; j < n_blocks(); ++j)
    if (tags_[j].station == station && tags_[j].user == user) return j;
  return -1;
}

Eigen::MatrixXcd ConicProblem::row_block(int row, int block) const {
  const int n = block_sizes_[block];
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& term : rows_[row].terms)
    if (term.block == block) a += term.weight * matrices_[term.matrix];
  return a;
}

double ConicProblem::row_value(int row, const std::vector<Eigen::MatrixXcd>& blocks, double t) const {
  const ConicRow& r = rows_[row];
  double v = r.t_coeff * t;
  for (const auto& term : r.terms)
    v += term.weight * (matrices_[term.matrix].cwiseProduct(blocks[term.block].transpose())).sum().real();
  return v;
}

ConicProblem build_problem(const ChannelSet& ch, const Thresholds& th, const ScenarioConfig& cfg,
                           const BuildOptions& opts, FlopCounter* flops) {
  const int n = ch.n_antennas;
  const int k = ch.n_users;
  if (n != cfg.n_antennas || k != cfg.n_users || ch.n_paths != cfg.n_paths)
    throw std::invalid_argument("channel dimensions do not match the scenario");
  for (int b = 0; b < kStations; ++b) {
    if (static_cast<int>(ch.h[b].size()) != k || static_cast<int>(ch.cross_h[b].size()) != k ||
        static_cast<int>(ch.radar_paths[b].size()) != ch.n_paths)
      throw std::invalid_argument("channel set is incomplete");
    for (const auto& v : ch.h[b])
      if (v.size() != n) throw std::invalid_argument("channel row has wrong length");
    if (static_cast<int>(th.zeta_c_db[b].size()) != k)
      throw std::invalid_argument("one comm threshold per user is required");
  }

  std::uint64_t count = 0;
  auto outer = [&](const Eigen::RowVectorXcd& v) {
    if (v.size() != n) throw std::invalid_argument("channel row has wrong length");
    count += 6ull * n * n;
    return Eigen::MatrixXcd(v.adjoint() * v);
  };
  auto linear = [](double db, bool allow_zero) {
    if (std::isnan(db) || db == INFINITY || (!allow_zero && db == -INFINITY))
      throw std::invalid_argument("thresholds must be finite");
    const double z = db_to_linear(db);
    if (!(z > 0.0) && !allow_zero) throw std::invalid_argument("thresholds must be positive");
    return z;
  };

  const bool two_stations = opts.topology != Topology::SingleStation;
  const int n_tx = two_stations ? kStations : 1;
  const int n_rx = opts.topology == Topology::Symmetric ? kStations : 1;

  ConicProblem prob;
  prob.mode = opts.mode;
  prob.options = opts;
  for (int b = 0; b < n_tx; ++b)
    for (int i = 0; i < k; ++i) prob.add_block(n, {b, i});

  const double sigma_c2 = cfg.sigma_c2();
  const double sigma_r2 = cfg.sigma_r2();

  for (int b = 0; b < n_rx; ++b) {
    const int p = peer(b);

    if (opts.radar) {
      const double zr = linear(th.zeta_r_db[b], true);
      const int los = prob.add_matrix(outer(ch.radar_paths[b][0]));
      std::vector<int> multipath;
      for (int l = 1; l < ch.n_paths; ++l) multipath.push_back(prob.add_matrix(outer(ch.radar_paths[b][l])));
      ConicRow row{.kind = RowKind::Radar, .station = b};
      for (int i = 0; i < k; ++i) {
        const int blk = prob.block_of(b, i);
        row.terms.push_back({blk, los, 1.0});
        for (int m : multipath) row.terms.push_back({blk, m, -zr});
        count += multipath.size();
      }
      if (two_stations) {
        const int cross = prob.add_matrix(outer(ch.cross_los[b]));
        for (int j = 0; j < k; ++j) row.terms.push_back({prob.block_of(p, j), cross, -zr});
        count += k;
      }
      row.rhs = zr * sigma_r2;
      ++count;
      prob.add_row(std::move(row));
    }

    std::vector<int> own(k);
    for (int i = 0; i < k; ++i) own[i] = prob.add_matrix(outer(ch.h[b][i]));
    for (int i = 0; i < k; ++i) {
      const double zc = linear(th.zeta_c_db[b][i], false);
      ConicRow row{.kind = RowKind::Comm, .station = b, .index = i};
      row.terms.push_back({prob.block_of(b, i), own[i], 1.0});
      for (int j = 0; j < k; ++j) {
        if (j == i) continue;
        const int m = opts.interference == InterferenceMode::OwnChannel ? own[i] : own[j];
        row.terms.push_back({prob.block_of(b, j), m, -zc});
      }
      if (two_stations) {
        const int cross = prob.add_matrix(outer(ch.cross_h[b][i]));
        for (int j = 0; j < k; ++j) row.terms.push_back({prob.block_of(p, j), cross, -zc});
      }
      count += 2 * k;
      row.rhs = zc * sigma_c2;
      ++count;
      prob.add_row(std::move(row));
    }
  }

  if (opts.mode == PowerMode::TPC) {
    const int eye = prob.add_matrix(Eigen::MatrixXcd::Identity(n, n));
    for (int b = 0; b < n_tx; ++b) {
      ConicRow row{.t_coeff = 1.0, .kind = RowKind::Power, .station = b};
      for (int i = 0; i < k; ++i) row.terms.push_back({prob.block_of(b, i), eye, -1.0});
      prob.add_row(std::move(row));
    }
  } else {
    std::vector<int> unit(n);
    for (int a = 0; a < n; ++a) {
      Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(n, n);
      e(a, a) = 1.0;
      unit[a] = prob.add_matrix(std::move(e));
    }
    for (int b = 0; b < n_tx; ++b)
      for (int a = 0; a < n; ++a) {
        ConicRow row{.t_coeff = 1.0 / n, .kind = RowKind::Power, .station = b, .index = a};
        for (int i = 0; i < k; ++i) row.terms.push_back({prob.block_of(b, i), unit[a], -1.0});
        prob.add_row(std::move(row));
      }
  }

  if (opts.cap == CapMode::Fixed)
    prob.add_row(ConicRow{.t_coeff = -1.0, .rhs = -cfg.power_cap_w(), .kind = RowKind::Cap});

  if (flops) flops->flops += count;
  return prob;
}

std::vector<Eigen::MatrixXcd> to_blocks(const CovarianceSet& cov, const ConicProblem& prob) {
  std::vector<Eigen::MatrixXcd> blocks(prob.n_blocks());
  for (int j = 0; j < prob.n_blocks(); ++j) {
    const BlockTag& tag = prob.tag(j);
    const int n = prob.block_size(j);
    if (tag.station >= 0 && tag.station < kStations && tag.user >= 0 &&
        tag.user < static_cast<int>(cov.T[tag.station].size())) {
      blocks[j] = cov.T[tag.station][tag.user];
      if (blocks[j].rows() != n || blocks[j].cols() != n) throw std::invalid_argument("covariance size mismatch");
    } else {
      blocks[j] = Eigen::MatrixXcd::Zero(n, n);
    }
  }
  return blocks;
}

CovarianceSet from_blocks(const std::vector<Eigen::MatrixXcd>& blocks, const ConicProblem& prob) {
  CovarianceSet cov;
  for (int j = 0; j < prob.n_blocks(); ++j) {
    const BlockTag& tag = prob.tag(j);
    if (tag.station < 0 || tag.station >= kStations || tag.user < 0) continue;
    auto& list = cov.T[tag.station];
    if (static_cast<int>(list.size()) <= tag.user) list.resize(tag.user + 1);
    list[tag.user] = blocks[j];
  }
  return cov;
}

double implied_cap(const std::vector<Eigen::MatrixXcd>& blocks, const ConicProblem& prob) {
  double t = 0.0;
  for (int m = 0; m < prob.n_rows(); ++m) {
    const ConicRow& r = prob.rows()[m];
    if (r.t_coeff <= 0.0) continue;
    const double without_t = prob.row_value(m, blocks, 0.0);
    t = std::max(t, (r.rhs - without_t) / r.t_coeff);
  }
  return t;
}

FeasibilityReport check_feasible(const std::vector<Eigen::MatrixXcd>& blocks, double t, const ConicProblem& prob,
                                 double tol) {
  if (static_cast<int>(blocks.size()) != prob.n_blocks()) throw std::invalid_argument("block count mismatch");
  FeasibilityReport rep;
  rep.slack.resize(prob.n_rows());
  rep.relative_violation.resize(prob.n_rows());
  rep.magnitude.resize(prob.n_rows());
  for (int m = 0; m < prob.n_rows(); ++m) {
    const ConicRow& r = prob.rows()[m];
    double scale = std::abs(r.rhs) + std::abs(r.t_coeff * t);
    for (const auto& term : r.terms)
      scale += std::abs(term.weight *
                        (prob.matrix(term.matrix).cwiseProduct(blocks[term.block].transpose())).sum().real());
    rep.magnitude[m] = scale;
    rep.slack[m] = prob.row_value(m, blocks, t) - r.rhs;
    const double violation = std::max(0.0, -rep.slack[m]);
    rep.relative_violation[m] = scale > 0.0 ? violation / scale : violation;
    if (violation > rep.worst_violation) rep.worst_violation = violation;
    if (rep.worst_row < 0 || rep.relative_violation[m] > rep.worst_relative) {
      rep.worst_relative = rep.relative_violation[m];
      rep.worst_row = m;
    }
  }

  double largest = 0.0;
  double smallest = 0.0;
  for (const auto& blk : blocks) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(blk, Eigen::EigenvaluesOnly);
    largest = std::max(largest, es.eigenvalues().cwiseAbs().maxCoeff());
    smallest = std::min(smallest, es.eigenvalues().minCoeff());
  }
  rep.min_eigenvalue = largest > 0.0 ? smallest / largest : 0.0;
  rep.feasible = rep.worst_relative <= tol && rep.min_eigenvalue >= -tol && t >= 0.0;
  return rep;
}

FeasibilityReport check_feasible(const CovarianceSet& cov, const ConicProblem& prob, double tol) {
  const auto blocks = to_blocks(cov, prob);
  return check_feasible(blocks, implied_cap(blocks, prob), prob, tol);
}

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXcd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

const char* kind_name(RowKind k) {
  switch (k) {
    case RowKind::Radar: return "radar";
    case RowKind::Comm: return "comm";
    case RowKind::Power: return "power";
    case RowKind::Cap: return "cap";
    case RowKind::Generic: break;
  }
  return "generic";
}

}  // namespace

nlohmann::json to_json(const ConicProblem& prob) {
  nlohmann::json j;
  j["mode"] = to_string(prob.mode);
  nlohmann::json blocks = nlohmann::json::array();
  for (int b = 0; b < prob.n_blocks(); ++b)
    blocks.push_back({{"size", prob.block_size(b)}, {"station", prob.tag(b).station}, {"user", prob.tag(b).user}});
  j["blocks"] = std::move(blocks);
  nlohmann::json mats = nlohmann::json::array();
  for (const auto& m : prob.matrices()) mats.push_back(matrix_json(m));
  j["matrices"] = std::move(mats);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : prob.rows()) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : r.terms) terms.push_back({{"block", t.block}, {"matrix", t.matrix}, {"weight", t.weight}});
    rows.push_back({{"kind", kind_name(r.kind)},
                    {"station", r.station},
                    {"index", r.index},
                    {"terms", std::move(terms)},
                    {"t_coeff", r.t_coeff},
                    {"rhs", r.rhs}});
  }
  j["constraints"] = std::move(rows);
  return j;
}

nlohmann::json to_json(const FeasibilityReport& r) {
  return {{"feasible", r.feasible},
          {"worst_violation", r.worst_violation},
          {"worst_relative", r.worst_relative},
          {"worst_row", r.worst_row},
          {"min_eigenvalue", r.min_eigenvalue},
          {"slack", r.slack}};
}

}  // namespace isac
