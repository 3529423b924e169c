#include "isac/recovery.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

namespace isac {

namespace {

constexpr double kRepairTol = 1e-6;

Eigen::VectorXcd unit_vector(int n) {
  Eigen::VectorXcd e = Eigen::VectorXcd::Zero(n);
  e[0] = 1.0;
  return e;
}

void fix_phase(Eigen::VectorXcd& v) {
  const double scale = v.cwiseAbs().maxCoeff();
  for (int k = 0; k < v.size(); ++k) {
    if (std::abs(v[k]) > 1e-12 * scale) {
      v *= std::conj(v[k]) / std::abs(v[k]);
      v[k] = std::abs(v[k]);
      return;
    }
  }
}

// Unit direction of a candidate; e_0 for a zero vector.
Eigen::VectorXcd direction(const Eigen::VectorXcd& x) {
  const double n = x.norm();
  if (!(n > 0.0)) return unit_vector(static_cast<int>(x.size()));
  return x / n;
}

// Row data restricted to rank-1 blocks: coefficient of p_j in row m is
// dir_j^H A_mj dir_j.
class Repairer {
public:
  explicit Repairer(const ConicProblem& prob) : prob_(prob) {
    touched_.resize(prob.n_rows());
    for (int m = 0; m < prob.n_rows(); ++m) {
      for (const auto& term : prob.rows()[m].terms) {
        auto& list = touched_[m];
        if (std::none_of(list.begin(), list.end(), [&](const auto& e) { return e.first == term.block; }))
          list.emplace_back(term.block, prob.row_block(m, term.block));
      }
    }
  }

  PowerRepair run(const std::vector<Eigen::VectorXcd>& dirs) const {
    if (static_cast<int>(dirs.size()) != prob_.n_blocks())
      throw std::invalid_argument("repair_power: need one direction per block");
    ConicProblem lp;
    for (int j = 0; j < prob_.n_blocks(); ++j) lp.add_block(1, prob_.tag(j));
    for (int m = 0; m < prob_.n_rows(); ++m) {
      const ConicRow& src = prob_.rows()[m];
      ConicRow row;
      row.t_coeff = src.t_coeff;
      row.rhs = src.rhs;
      row.kind = src.kind;
      row.station = src.station;
      row.index = src.index;
      for (const auto& [j, a] : touched_[m]) {
        const double c = dirs[j].dot(a * dirs[j]).real();
        if (c == 0.0) continue;
        row.terms.push_back({j, lp.add_matrix(Eigen::MatrixXcd::Constant(1, 1, c)), 1.0});
      }
      lp.add_row(std::move(row));
    }
    lp.mode = prob_.mode;
    lp.options = prob_.options;

    PowerRepair out;
    const SdpSolution sol = solve(lp);
    out.status = sol.status;
    if (sol.status != SolveStatus::Optimal) return out;
    out.powers.resize(prob_.n_blocks());
    for (int j = 0; j < prob_.n_blocks(); ++j) out.powers[j] = std::max(0.0, sol.blocks[j](0, 0).real());
    out.t = sol.t_star;
    out.feasible = check_feasible(blocks(dirs, out.powers), out.t, prob_, kRepairTol).feasible;
    return out;
  }

  static std::vector<Eigen::MatrixXcd> blocks(const std::vector<Eigen::VectorXcd>& dirs,
                                              const std::vector<double>& powers) {
    std::vector<Eigen::MatrixXcd> out;
    out.reserve(dirs.size());
    for (std::size_t j = 0; j < dirs.size(); ++j) out.push_back(powers[j] * dirs[j] * dirs[j].adjoint());
    return out;
  }

private:
  const ConicProblem& prob_;
  std::vector<std::vector<std::pair<int, Eigen::MatrixXcd>>> touched_;
};

nlohmann::json complex_vector_json(const Eigen::VectorXcd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (int k = 0; k < v.size(); ++k) out.push_back({v[k].real(), v[k].imag()});
  return out;
}

}  // namespace

EigenBeam eigen_extract(const Eigen::MatrixXcd& t) {
  if (t.rows() != t.cols() || t.rows() == 0) throw std::invalid_argument("eigen_extract: need a square matrix");
  const int n = static_cast<int>(t.rows());
  EigenBeam out;
  const Eigen::MatrixXcd h = 0.5 * (t + t.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double lmax = ev[n - 1];
  const double trace = h.trace().real();
  if (!(lmax > 0.0) || !(trace > 0.0)) {
    out.x = Eigen::VectorXcd::Zero(n);
    out.zero = true;
    return out;
  }

  int first = n - 1;
  while (first > 0 && lmax - ev[first - 1] <= 1e-12 * lmax) --first;
  Eigen::VectorXcd v;
  if (first == n - 1) {
    v = es.eigenvectors().col(n - 1);
  } else {
    const Eigen::MatrixXcd basis = es.eigenvectors().rightCols(n - first);
    const Eigen::MatrixXcd proj = basis * basis.adjoint();
    for (int k = 0; k < n; ++k) {
      if (proj.col(k).norm() > 1e-8) {
        v = proj.col(k).normalized();
        break;
      }
    }
  }
  fix_phase(v);
  out.x = std::sqrt(lmax) * v;
  out.captured = lmax / trace;
  return out;
}

Eigen::MatrixXcd randomize_extract(const Eigen::MatrixXcd& t, int n_samples, std::uint64_t seed) {
  if (t.rows() != t.cols()) throw std::invalid_argument("randomize_extract: need a square matrix");
  if (n_samples < 1) throw std::invalid_argument("randomize_extract: n_samples must be >= 1");
  const Eigen::Index n = t.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (t + t.adjoint()));
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXcd sqrt_t = es.eigenvectors() * root.asDiagonal() * es.eigenvectors().adjoint();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  Eigen::MatrixXcd u(n, n_samples);
  for (int s = 0; s < n_samples; ++s)
    for (Eigen::Index k = 0; k < n; ++k) {
      const double re = normal(rng);
      const double im = normal(rng);
      u(k, s) = {re, im};
    }
  return sqrt_t * u;
}

PowerRepair repair_power(const std::vector<Eigen::VectorXcd>& dirs, const ConicProblem& prob) {
  std::vector<Eigen::VectorXcd> unit;
  unit.reserve(dirs.size());
  for (const auto& d : dirs) unit.push_back(direction(d));
  return Repairer(prob).run(unit);
}

Eigen::MatrixXcd synthesize_waveform(const std::vector<Eigen::VectorXcd>& beams, int stream_len, std::uint64_t seed) {
  const int k = static_cast<int>(beams.size());
  if (stream_len < k || stream_len < 1) throw std::invalid_argument("synthesize_waveform: need L >= K");
  if (k == 0) return Eigen::MatrixXcd(0, stream_len);
  const Eigen::Index n = beams[0].size();
  Eigen::MatrixXcd w(n, k);
  for (int i = 0; i < k; ++i) {
    if (beams[i].size() != n) throw std::invalid_argument("synthesize_waveform: beams differ in length");
    w.col(i) = beams[i];
  }

  std::vector<int> order(stream_len);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  Eigen::MatrixXcd s(k, stream_len);
  for (int i = 0; i < k; ++i)
    for (int l = 0; l < stream_len; ++l) {
      const long idx = (static_cast<long>(order[i]) * l) % stream_len;
      s(i, l) = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(idx) / stream_len);
    }
  return w * s;
}

const char* to_string(RecoveryMethod m) { return m == RecoveryMethod::Eigen ? "eigen" : "randomized"; }

CovarianceSet PrecoderSet::covariances() const {
  CovarianceSet cov;
  for (int b = 0; b < kStations; ++b)
    for (const auto& x : beams[b]) cov.T[b].push_back(x * x.adjoint());
  return cov;
}

double PrecoderSet::ratio() const { return sdp_power > 0.0 ? realized_power / sdp_power : 0.0; }

PrecoderSet recover(const SdpSolution& sol, const ConicProblem& prob, const RecoveryOptions& opts) {
  if (sol.status != SolveStatus::Optimal || static_cast<int>(sol.blocks.size()) != prob.n_blocks())
    throw std::invalid_argument("recover: needs an optimal relaxed solution");
  const int nb = prob.n_blocks();
  const Repairer repairer(prob);

  std::vector<Eigen::VectorXcd> best_dirs;
  PowerRepair best;
  RecoveryMethod method = RecoveryMethod::Eigen;
  auto consider = [&](std::vector<Eigen::VectorXcd> dirs, RecoveryMethod m) {
    PowerRepair r = repairer.run(dirs);
    if (!r.feasible) return;
    if (!best.feasible || r.t < best.t) {
      best = std::move(r);
      best_dirs = std::move(dirs);
      method = m;
    }
  };

  std::vector<Eigen::VectorXcd> dirs(nb);
  for (int j = 0; j < nb; ++j) dirs[j] = direction(eigen_extract(sol.blocks[j]).x);
  consider(dirs, RecoveryMethod::Eigen);

  if (opts.samples > 0) {
    std::vector<Eigen::MatrixXcd> draws(nb);
    for (int j = 0; j < nb; ++j) {
      std::seed_seq seq{static_cast<std::uint32_t>(opts.seed), static_cast<std::uint32_t>(opts.seed >> 32),
                        static_cast<std::uint32_t>(j)};
      std::uint64_t s = 0;
      std::array<std::uint32_t, 2> words{};
      seq.generate(words.begin(), words.end());
      s = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
      draws[j] = randomize_extract(sol.blocks[j], opts.samples, s);
    }
    for (int s = 0; s < opts.samples; ++s) {
      for (int j = 0; j < nb; ++j) dirs[j] = direction(draws[j].col(s));
      consider(dirs, RecoveryMethod::Randomized);
    }
  }

  PrecoderSet out;
  out.method = method;
  out.samples = opts.samples;
  out.sdp_power = sol.t_star;
  PerStation<int> users{};
  for (int j = 0; j < nb; ++j) {
    const BlockTag& tag = prob.tag(j);
    if (tag.station >= 0) users[tag.station] = std::max(users[tag.station], tag.user + 1);
  }
  for (int b = 0; b < kStations; ++b) out.beams[b].assign(users[b], Eigen::VectorXcd());
  if (!best.feasible) {
    out.feasible = false;
    return out;
  }

  std::vector<Eigen::MatrixXcd> blocks(nb);
  for (int j = 0; j < nb; ++j) {
    const Eigen::VectorXcd x = std::sqrt(best.powers[j]) * best_dirs[j];
    blocks[j] = x * x.adjoint();
    const BlockTag& tag = prob.tag(j);
    if (tag.station >= 0) out.beams[tag.station][tag.user] = x;
  }
  for (int b = 0; b < kStations; ++b)
    for (auto& x : out.beams[b])
      if (x.size() == 0) x = Eigen::VectorXcd::Zero(prob.block_size(0));
  out.realized_power = best.t;
  out.feasibility = check_feasible(blocks, best.t, prob, kRepairTol);
  out.feasible = out.feasibility.feasible;
  for (int b = 0; b < kStations; ++b)
    if (!out.beams[b].empty())
      out.waveforms[b] = synthesize_waveform(out.beams[b], opts.stream_len, opts.seed + static_cast<std::uint64_t>(b));
  return out;
}

nlohmann::json to_json(const PrecoderSet& p) {
  nlohmann::json j;
  nlohmann::json beams = nlohmann::json::array();
  for (int b = 0; b < kStations; ++b) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& x : p.beams[b]) list.push_back(complex_vector_json(x));
    beams.push_back(std::move(list));
  }
  j["beams"] = std::move(beams);
  j["method"] = to_string(p.method);
  j["samples"] = p.samples;
  j["realized_power"] = p.realized_power;
  j["sdp_power"] = p.sdp_power;
  j["ratio"] = p.ratio();
  j["feasible"] = p.feasible;
  j["worst_relative_violation"] = p.feasibility.worst_relative;
  return j;
}

void write_waveform_csv(const Eigen::MatrixXcd& x, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.precision(17);
  out << "antenna";
  for (Eigen::Index l = 0; l < x.cols(); ++l) out << ",s" << l;
  out << '\n';
  for (Eigen::Index n = 0; n < x.rows(); ++n) {
    out << n;
    for (Eigen::Index l = 0; l < x.cols(); ++l) {
      const auto v = x(n, l);
      out << ',' << v.real() << (v.imag() < 0.0 ? "" : "+") << v.imag() << 'j';
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace isac
