#include "isac/sdp_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/SparseCore>

namespace isac::sdp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void Program::validate() const {
  const int nb = static_cast<int>(block_sizes.size());
  for (int s : block_sizes)
    if (s < 1) throw std::invalid_argument("PSD block size must be >= 1");
  if (!c_psd.empty() && static_cast<int>(c_psd.size()) != nb)
    throw std::invalid_argument("objective must have one entry per PSD block");
  for (int j = 0; j < static_cast<int>(c_psd.size()); ++j)
    if (c_psd[j].size() != 0 && (c_psd[j].rows() != block_sizes[j] || c_psd[j].cols() != block_sizes[j]))
      throw std::invalid_argument("objective block has wrong size");
  if (c_lp.size() != 0 && c_lp.size() != n_lp) throw std::invalid_argument("LP objective has wrong length");
  for (const auto& r : rows) {
    for (const auto& t : r.psd) {
      if (t.block < 0 || t.block >= nb) throw std::invalid_argument("row references unknown block");
      if (t.data.rows() != block_sizes[t.block] || t.data.cols() != block_sizes[t.block])
        throw std::invalid_argument("row data has wrong size");
    }
    for (const auto& [k, v] : r.lp)
      if (k < 0 || k >= n_lp || !std::isfinite(v)) throw std::invalid_argument("bad LP coefficient");
    if (!std::isfinite(r.rhs)) throw std::invalid_argument("rhs must be finite");
  }
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Row data regrouped per block, with duplicate (row, block) terms merged.
struct Layout {
  int m = 0;
  int n_lp = 0;
  std::vector<int> sizes;
  std::vector<std::vector<std::pair<int, MatrixXd>>> by_block;
  // Non-zeros of each by_block entry when there are few of them, else empty.
  std::vector<std::vector<std::vector<Eigen::Triplet<double>>>> sparse;
  MatrixXd a_lp;  // m x n_lp
  std::vector<MatrixXd> C;
  VectorXd c_lp;
  VectorXd b;
  double cone_degree = 0.0;
  double norm_b = 0.0;
  double norm_c = 0.0;
};

Layout make_layout(const Program& p) {
  Layout L;
  L.m = static_cast<int>(p.rows.size());
  L.n_lp = p.n_lp;
  L.sizes = p.block_sizes;
  const int nb = static_cast<int>(p.block_sizes.size());
  L.by_block.resize(nb);
  L.a_lp = MatrixXd::Zero(L.m, p.n_lp);
  L.b.resize(L.m);
  for (int i = 0; i < L.m; ++i) {
    const Row& r = p.rows[i];
    L.b[i] = r.rhs;
    for (const auto& t : r.psd) {
      auto& list = L.by_block[t.block];
      auto it = std::find_if(list.begin(), list.end(), [&](const auto& e) { return e.first == i; });
      const MatrixXd sym = 0.5 * (t.data + t.data.transpose());
      if (it == list.end())
        list.emplace_back(i, sym);
      else
        it->second += sym;
    }
    for (const auto& [k, v] : r.lp) L.a_lp(i, k) += v;
  }
  L.sparse.resize(nb);
  for (int j = 0; j < nb; ++j) {
    for (const auto& [i, a] : L.by_block[j]) {
      std::vector<Eigen::Triplet<double>> nz;
      for (int c = 0; c < a.cols(); ++c)
        for (int r = 0; r < a.rows(); ++r)
          if (a(r, c) != 0.0) nz.emplace_back(r, c, a(r, c));
      if (static_cast<int>(nz.size()) > 2 * a.rows()) nz.clear();
      L.sparse[j].push_back(std::move(nz));
    }
  }
  L.C.resize(nb);
  double c2 = 0.0;
  for (int j = 0; j < nb; ++j) {
    const int n = p.block_sizes[j];
    if (j < static_cast<int>(p.c_psd.size()) && p.c_psd[j].size() != 0)
      L.C[j] = 0.5 * (p.c_psd[j] + p.c_psd[j].transpose());
    else
      L.C[j] = MatrixXd::Zero(n, n);
    c2 += L.C[j].squaredNorm();
    L.cone_degree += n;
  }
  L.c_lp = p.c_lp.size() ? p.c_lp : VectorXd::Zero(p.n_lp);
  c2 += L.c_lp.squaredNorm();
  L.cone_degree += p.n_lp;
  L.norm_b = L.b.norm();
  L.norm_c = std::sqrt(c2);
  return L;
}

struct Blocks {
  std::vector<MatrixXd> psd;
  VectorXd lp;
};

double inner(const Blocks& a, const Blocks& b) {
  double s = a.lp.dot(b.lp);
  for (std::size_t j = 0; j < a.psd.size(); ++j) s += a.psd[j].cwiseProduct(b.psd[j]).sum();
  return s;
}

double norm(const Blocks& a) { return std::sqrt(inner(a, a)); }

Blocks axpy(double alpha, const Blocks& x, const Blocks& y) {
  Blocks r = y;
  for (std::size_t j = 0; j < r.psd.size(); ++j) r.psd[j] += alpha * x.psd[j];
  r.lp += alpha * x.lp;
  return r;
}

VectorXd apply_a(const Layout& L, const Blocks& x) {
  VectorXd v = L.a_lp * x.lp;
  for (std::size_t j = 0; j < L.by_block.size(); ++j)
    for (const auto& [i, a] : L.by_block[j]) v[i] += a.cwiseProduct(x.psd[j]).sum();
  return v;
}

Blocks apply_at(const Layout& L, const VectorXd& y) {
  Blocks s;
  s.psd.resize(L.by_block.size());
  for (std::size_t j = 0; j < L.by_block.size(); ++j) {
    s.psd[j] = MatrixXd::Zero(L.sizes[j], L.sizes[j]);
    for (const auto& [i, a] : L.by_block[j]) s.psd[j] += y[i] * a;
  }
  s.lp = L.a_lp.transpose() * y;
  return s;
}

Blocks objective(const Layout& L) { return {L.C, L.c_lp}; }

// Smallest eigenvalue of x^{-1/2} dx x^{-1/2}.
double relative_min_eig(const MatrixXd& x, const MatrixXd& dx) {
  Eigen::LLT<MatrixXd> llt(x);
  MatrixXd s;
  if (llt.info() == Eigen::Success) {
    const MatrixXd t = llt.matrixL().solve(dx);
    s = llt.matrixL().solve(t.transpose());
  } else {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(x);
    const double floor = std::max(es.eigenvalues().maxCoeff(), 1e-300) * 1e-15;
    const VectorXd inv_sqrt = es.eigenvalues().cwiseMax(floor).cwiseSqrt().cwiseInverse();
    s = inv_sqrt.asDiagonal() * (es.eigenvectors().transpose() * dx * es.eigenvectors()) * inv_sqrt.asDiagonal();
  }
  s = 0.5 * (s + s.transpose());
  return Eigen::SelfAdjointEigenSolver<MatrixXd>(s, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

// Largest alpha <= cap with x + alpha dx still in the cone. Blocks that stay
// positive definite at the running bound are skipped without an eigensolve.
double max_step(const Blocks& x, const Blocks& dx, double cap) {
  double alpha = cap;
  for (int k = 0; k < x.lp.size(); ++k)
    if (dx.lp[k] < 0.0) alpha = std::min(alpha, -x.lp[k] / dx.lp[k]);
  for (std::size_t j = 0; j < x.psd.size(); ++j) {
    if (Eigen::LLT<MatrixXd>(x.psd[j] + alpha * dx.psd[j]).info() == Eigen::Success) continue;
    const double lmin = relative_min_eig(x.psd[j], dx.psd[j]);
    if (lmin < 0.0) alpha = std::min(alpha, -1.0 / lmin);
  }
  return alpha;
}

double scalar_step(double v, double dv) { return dv < 0.0 ? -v / dv : kInf; }

struct Iterate {
  Blocks X, Z;
  VectorXd y;
  double tau = 1.0;
  double kappa = 1.0;
};

struct Direction {
  Blocks dX, dZ;
  VectorXd dy;
  double dtau = 0.0;
  double dkappa = 0.0;
};

// Quantities shared by predictor and corrector at one iterate.
struct Factor {
  std::vector<MatrixXd> zinv;
  VectorXd zinv_lp;
  MatrixXd kkt;  // bordered (m+1) x (m+1) system
  Eigen::FullPivLU<MatrixXd> lu;
};

bool factorize(const Layout& L, const Iterate& it, Factor& f) {
  const int m = L.m;
  const int nb = static_cast<int>(L.sizes.size());
  f.zinv.resize(nb);
  MatrixXd M = MatrixXd::Zero(m, m);
  VectorXd u = VectorXd::Zero(m);
  double w = 0.0;

  for (int j = 0; j < nb; ++j) {
    const int n = L.sizes[j];
    Eigen::LLT<MatrixXd> llt(it.Z.psd[j]);
    if (llt.info() != Eigen::Success) return false;
    f.zinv[j] = llt.solve(MatrixXd::Identity(n, n));
    f.zinv[j] = 0.5 * (f.zinv[j] + f.zinv[j].transpose());
    const MatrixXd& X = it.X.psd[j];
    const MatrixXd& Zi = f.zinv[j];
    const auto& rows = L.by_block[j];

    const auto& nz = L.sparse[j];
    MatrixXd g(n, n);
    for (std::size_t q = 0; q < rows.size(); ++q) {
      if (nz[q].empty()) {
        g.noalias() = X * rows[q].second * Zi;
      } else {
        g.setZero();
        for (const auto& e : nz[q]) g.noalias() += e.value() * X.col(e.row()) * Zi.row(e.col());
      }
      for (std::size_t p = 0; p < rows.size(); ++p) {
        double v = 0.0;
        if (nz[p].empty()) {
          v = rows[p].second.cwiseProduct(g).sum();
        } else {
          for (const auto& e : nz[p]) v += e.value() * g(e.row(), e.col());
        }
        M(rows[p].first, rows[q].first) += v;
      }
    }

    if (!L.C[j].isZero(0.0)) {
      const MatrixXd xcz = X * L.C[j] * Zi;
      for (const auto& [i, a] : rows) u[i] += a.cwiseProduct(xcz).sum();
      w += L.C[j].cwiseProduct(xcz).sum();
    }
  }
  f.zinv_lp = it.Z.lp.cwiseInverse();
  const VectorXd d = it.X.lp.cwiseProduct(f.zinv_lp);
  M += L.a_lp * d.asDiagonal() * L.a_lp.transpose();
  u += L.a_lp * d.cwiseProduct(L.c_lp);
  w += L.c_lp.dot(d.cwiseProduct(L.c_lp));

  f.kkt.resize(m + 1, m + 1);
  f.kkt.topLeftCorner(m, m) = M;
  f.kkt.topRightCorner(m, 1) = -(u + L.b);
  f.kkt.bottomLeftCorner(1, m) = (L.b - u).transpose();
  f.kkt(m, m) = w + it.kappa / it.tau;
  if (!f.kkt.allFinite()) return false;
  f.lu.setThreshold(0.0);
  f.lu.compute(f.kkt);
  return true;
}

struct Residuals {
  VectorXd rp;
  Blocks Rd;
  double rg = 0.0;
  double mu = 0.0;
};

// Solves the Newton system for one right-hand side.
//   phi     : sigma*mu*Z^-1 - X - (second-order term) Z^-1
//   tk_rhs  : sigma*mu - tau*kappa - (second-order term)
Direction direction(const Layout& L, const Iterate& it, const Factor& f, const Residuals& r, const Blocks& phi,
                    double tk_rhs, double eta) {
  const int m = L.m;
  const int nb = static_cast<int>(L.sizes.size());

  Blocks rd_eta = r.Rd;
  for (auto& b : rd_eta.psd) b *= eta;
  rd_eta.lp *= eta;

  Blocks psi;
  psi.psd.resize(nb);
  for (int j = 0; j < nb; ++j) psi.psd[j] = phi.psd[j] - it.X.psd[j] * rd_eta.psd[j] * f.zinv[j];
  psi.lp = phi.lp - it.X.lp.cwiseProduct(rd_eta.lp).cwiseProduct(f.zinv_lp);

  VectorXd rhs(m + 1);
  rhs.head(m) = eta * r.rp - apply_a(L, psi);
  rhs[m] = eta * r.rg + inner(objective(L), psi) + tk_rhs / it.tau;

  VectorXd sol = f.lu.solve(rhs);
  for (int pass = 0; pass < 2; ++pass) sol += f.lu.solve(rhs - f.kkt * sol);

  Direction d;
  d.dy = sol.head(m);
  d.dtau = sol[m];
  const Blocks aty = apply_at(L, d.dy);
  d.dZ.psd.resize(nb);
  d.dX.psd.resize(nb);
  for (int j = 0; j < nb; ++j) {
    d.dZ.psd[j] = rd_eta.psd[j] + L.C[j] * d.dtau - aty.psd[j];
    MatrixXd dx = phi.psd[j] - it.X.psd[j] * d.dZ.psd[j] * f.zinv[j];
    d.dX.psd[j] = 0.5 * (dx + dx.transpose());
  }
  d.dZ.lp = rd_eta.lp + L.c_lp * d.dtau - aty.lp;
  d.dX.lp = phi.lp - it.X.lp.cwiseProduct(d.dZ.lp).cwiseProduct(f.zinv_lp);
  d.dkappa = (tk_rhs - it.kappa * d.dtau) / it.tau;
  return d;
}

// Step to the cone boundary, or cap if that is further.
double step_limit(const Iterate& it, const Direction& d, double cap) {
  double a = std::min({cap, scalar_step(it.tau, d.dtau), scalar_step(it.kappa, d.dkappa)});
  a = max_step(it.X, d.dX, a);
  return max_step(it.Z, d.dZ, a);
}

Residuals residuals(const Layout& L, const Iterate& it) {
  Residuals r;
  r.rp = L.b * it.tau - apply_a(L, it.X);
  const Blocks aty = apply_at(L, it.y);
  r.Rd.psd.resize(L.sizes.size());
  for (std::size_t j = 0; j < L.sizes.size(); ++j) r.Rd.psd[j] = L.C[j] * it.tau - aty.psd[j] - it.Z.psd[j];
  r.Rd.lp = L.c_lp * it.tau - aty.lp - it.Z.lp;
  r.rg = it.kappa + inner(objective(L), it.X) - L.b.dot(it.y);
  r.mu = (inner(it.X, it.Z) + it.tau * it.kappa) / (L.cone_degree + 1.0);
  return r;
}

Blocks identity_blocks(const Layout& L) {
  Blocks b;
  for (int n : L.sizes) b.psd.push_back(MatrixXd::Identity(n, n));
  b.lp = VectorXd::Ones(L.n_lp);
  return b;
}

}  // namespace

namespace {

struct Snapshot {
  Iterate it;
  double pobj = 0.0, dobj = 0.0, pres = kInf, dres = kInf, gap = kInf;
  int iter = 0;
};

bool finite(const Direction& d) {
  if (!d.dy.allFinite() || !std::isfinite(d.dtau) || !std::isfinite(d.dkappa)) return false;
  for (const auto& b : d.dX.psd)
    if (!b.allFinite()) return false;
  for (const auto& b : d.dZ.psd)
    if (!b.allFinite()) return false;
  return d.dX.lp.allFinite() && d.dZ.lp.allFinite();
}

}  // namespace

Result solve(const Program& prog, const Options& opts) {
  prog.validate();
  const Layout L = make_layout(prog);
  const int nb = static_cast<int>(L.sizes.size());

  Iterate it;
  it.X = identity_blocks(L);
  it.Z = identity_blocks(L);
  it.y = VectorXd::Zero(L.m);

  Result res;
  std::ostringstream diag;
  int stalls = 0;

  Snapshot best;
  double best_score = kInf;
  int since_best = 0;
  VectorXd best_ray;
  double best_ray_res = kInf;
  bool done = false;
  int iterations = 0;

  for (int k = 0;; ++k) {
    iterations = k;
    const Residuals r = residuals(L, it);
    Snapshot cur;
    cur.pobj = inner(objective(L), it.X) / it.tau;
    cur.dobj = L.b.dot(it.y) / it.tau;
    cur.pres = r.rp.norm() / it.tau / (1.0 + L.norm_b);
    cur.dres = norm(r.Rd) / it.tau / (1.0 + L.norm_c);
    cur.gap = std::abs(cur.pobj - cur.dobj) / (1.0 + std::abs(cur.pobj) + std::abs(cur.dobj));
    cur.iter = k;
    if (opts.trace) opts.trace({k, cur.pobj, cur.dobj, cur.gap, std::max(cur.pres, cur.dres)});

    const double score = std::max({cur.pres / opts.feas_tol, cur.dres / opts.feas_tol, cur.gap / opts.gap_tol});
    if (std::isfinite(score) && score < 0.5 * best_score) {
      since_best = 0;
    } else {
      ++since_best;
    }
    if (std::isfinite(score) && score < best_score) {
      best_score = score;
      cur.it = it;
      best = cur;
    }
    if (score <= 1.0) {
      res.status = Status::Optimal;
      done = true;
      break;
    }

    const double by = L.b.dot(it.y);
    if (by > 0.0) {
      const Blocks ray = axpy(1.0, it.Z, apply_at(L, it.y));
      const double ray_res = norm(ray) / by;
      if (ray_res < 0.5 * best_ray_res) since_best = 0;
      if (ray_res < best_ray_res) {
        best_ray_res = ray_res;
        best_ray = it.y / by;
      }
      if (ray_res <= opts.cert_tol) {
        res.status = Status::Infeasible;
        done = true;
        break;
      }
    }

    if (k >= opts.max_iter) {
      diag << "iteration limit reached; ";
      break;
    }
    if (since_best >= opts.stall_iter) {
      diag << "no progress since iteration " << best.iter << "; ";
      break;
    }

    Factor f;
    if (!factorize(L, it, f)) {
      diag << "numerical breakdown at iteration " << k << "; ";
      break;
    }

    // Predictor.
    Blocks phi_aff;
    phi_aff.psd.resize(nb);
    for (int j = 0; j < nb; ++j) phi_aff.psd[j] = -it.X.psd[j];
    phi_aff.lp = -it.X.lp;
    const Direction aff = direction(L, it, f, r, phi_aff, -it.tau * it.kappa, 1.0);
    if (!finite(aff)) {
      diag << "non-finite direction at iteration " << k << "; ";
      break;
    }
    const double a_aff = step_limit(it, aff, 1.0);
    const Blocks xa = axpy(a_aff, aff.dX, it.X);
    const Blocks za = axpy(a_aff, aff.dZ, it.Z);
    const double mu_aff = (inner(xa, za) + (it.tau + a_aff * aff.dtau) * (it.kappa + a_aff * aff.dkappa)) /
                          (L.cone_degree + 1.0);
    const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / r.mu, 3.0), 0.0, 1.0);

    // Corrector.
    Blocks phi;
    phi.psd.resize(nb);
    for (int j = 0; j < nb; ++j)
      phi.psd[j] = sigma * r.mu * f.zinv[j] - it.X.psd[j] - aff.dX.psd[j] * aff.dZ.psd[j] * f.zinv[j];
    phi.lp = sigma * r.mu * f.zinv_lp - it.X.lp - aff.dX.lp.cwiseProduct(aff.dZ.lp).cwiseProduct(f.zinv_lp);
    const double tk = sigma * r.mu - it.tau * it.kappa - aff.dtau * aff.dkappa;
    const Direction d = direction(L, it, f, r, phi, tk, 1.0 - sigma);
    if (!finite(d)) {
      diag << "non-finite direction at iteration " << k << "; ";
      break;
    }

    const double alpha = opts.step_fraction * step_limit(it, d, 1.0 / opts.step_fraction);
    if (!(alpha > 1e-12)) {
      if (++stalls >= 3) {
        diag << "step length collapsed at iteration " << k << "; ";
        break;
      }
      continue;
    }
    stalls = 0;

    it.X = axpy(alpha, d.dX, it.X);
    it.Z = axpy(alpha, d.dZ, it.Z);
    for (auto& blk : it.X.psd) blk = 0.5 * (blk + blk.transpose());
    for (auto& blk : it.Z.psd) blk = 0.5 * (blk + blk.transpose());
    it.y += alpha * d.dy;
    it.tau += alpha * d.dtau;
    it.kappa += alpha * d.dkappa;
  }

  if (!done) {
    if (best_score <= opts.accept_factor) {
      res.status = Status::Optimal;
      diag << "accepted best iterate " << best.iter << " at reduced accuracy; ";
      it = best.it;
    } else if (best_ray_res <= opts.accept_factor * opts.cert_tol) {
      res.status = Status::Infeasible;
      diag << "accepted Farkas ray at reduced accuracy; ";
    } else if (best_score < kInf) {
      it = best.it;
    }
  }

  if (res.status == Status::Infeasible) {
    res.farkas = best_ray;
    res.farkas_residual = best_ray_res;
  }
  const Residuals r = residuals(L, it);
  res.primal_obj = inner(objective(L), it.X) / it.tau;
  res.dual_obj = L.b.dot(it.y) / it.tau;
  res.primal_residual = r.rp.norm() / it.tau / (1.0 + L.norm_b);
  res.dual_residual = norm(r.Rd) / it.tau / (1.0 + L.norm_c);
  res.rel_gap = std::abs(res.primal_obj - res.dual_obj) / (1.0 + std::abs(res.primal_obj) + std::abs(res.dual_obj));
  res.iterations = iterations;

  const double scale = res.status == Status::Infeasible ? 1.0 : 1.0 / it.tau;
  res.X.resize(nb);
  res.Z.resize(nb);
  for (int j = 0; j < nb; ++j) {
    res.X[j] = it.X.psd[j] * scale;
    res.Z[j] = it.Z.psd[j] * scale;
  }
  res.x_lp = it.X.lp * scale;
  res.z_lp = it.Z.lp * scale;
  res.y = it.y * scale;
  if (res.status != Status::Optimal || !done)
    diag << "pres=" << res.primal_residual << " dres=" << res.dual_residual << " gap=" << res.rel_gap
         << " tau=" << it.tau << " kappa=" << it.kappa;
  res.diagnostics = diag.str();
  return res;
}

}  // namespace isac::sdp
