#include "isac/selftest.hpp"

#include <cmath>
#include <sstream>

#include "isac/interference.hpp"
#include "isac/recovery.hpp"
#include "isac/solver.hpp"

namespace isac {

SingleUserInstance single_user_instance(int n_antennas, std::uint64_t seed, double zeta_c_db, PowerMode mode) {
  SingleUserInstance s;
  s.cfg = ScenarioConfig::defaults(1, n_antennas);
  s.cfg.seed = seed;
  s.ch = generate_channels(s.cfg);
  BuildOptions opts;
  opts.mode = mode;
  opts.topology = Topology::SingleStation;
  opts.radar = false;
  s.prob = build_problem(s.ch, Thresholds::uniform(0.0, zeta_c_db, 1), s.cfg, opts);
  s.h = s.ch.h[0][0];
  s.zeta = db_to_linear(zeta_c_db);
  s.sigma_c2 = s.cfg.sigma_c2();
  return s;
}

ConicProblem contradiction_problem(PowerMode mode) {
  ScenarioConfig cfg = ScenarioConfig::defaults(2, 1, 1);
  ChannelSet ch;
  ch.n_antennas = 1;
  ch.n_users = 2;
  ch.n_paths = 1;
  const Eigen::RowVectorXcd one = Eigen::RowVectorXcd::Ones(1);
  for (int b = 0; b < kStations; ++b) {
    ch.h[b] = {one, one};
    ch.cross_h[b] = {one, one};
    ch.radar_paths[b] = {one};
    ch.cross_echo[b] = Eigen::MatrixXcd::Ones(1, 1);
    ch.cross_los[b] = one;
  }
  BuildOptions opts;
  opts.mode = mode;
  opts.topology = Topology::SingleStation;
  opts.radar = false;
  return build_problem(ch, Thresholds::uniform(0.0, 0.0, 2), cfg, opts);
}

std::vector<SelftestCase> run_selftest() {
  std::vector<SelftestCase> out;
  auto record = [&](std::string name, bool ok, const std::string& detail) {
    out.push_back({std::move(name), ok, detail});
  };

  for (int n : {2, 4, 8}) {
    const SingleUserInstance s = single_user_instance(n, 7);
    const SdpSolution sol = solve(s.prob);
    const double expected = s.zeta * s.sigma_c2 / s.h.squaredNorm();
    std::ostringstream d;
    bool ok = sol.status == SolveStatus::Optimal;
    if (ok) {
      const double rel = std::abs(sol.t_star - expected) / expected;
      const Eigen::VectorXcd x = eigen_extract(sol.blocks[0]).x.normalized();
      const double align = std::abs(s.h.conjugate().dot(x.transpose())) / s.h.norm();
      d << "rel err " << rel << ", alignment " << align;
      ok = rel <= 1e-6 && align >= 1.0 - 1e-6;
    } else {
      d << to_string(sol.status);
    }
    record("single-user matched filter, N=" + std::to_string(n), ok, d.str());
  }

  {
    const ConicProblem prob = contradiction_problem();
    const SdpSolution sol = solve(prob);
    const InfeasibilityReport f = check_farkas(sol, prob);
    std::ostringstream d;
    d << to_string(sol.status) << ", ray violation " << f.cone_violation;
    record("contradictory pair is infeasible",
           sol.status == SolveStatus::Infeasible && f.available && f.cone_violation <= 1e-6, d.str());
  }

  {
    const double pd = detection_probability(0.0, kFalseAlarm);
    std::ostringstream d;
    d << "P_d(0) = " << pd;
    record("detection at zero SINR equals false alarm", std::abs(pd - kFalseAlarm) <= 1e-12, d.str());
  }

  {
    const ScenarioConfig cfg = ScenarioConfig::defaults();
    const ChannelSet ch = generate_channels(cfg);
    const Thresholds th = Thresholds::uniform(10.0, 10.0, cfg.n_users);
    double t[2] = {0.0, 0.0};
    for (PowerMode mode : {PowerMode::TPC, PowerMode::PPC}) {
      const ConicProblem prob = build_problem(ch, th, cfg, BuildOptions{.mode = mode});
      const SdpSolution sol = solve(prob);
      std::ostringstream d;
      bool ok = sol.status == SolveStatus::Optimal;
      if (ok) {
        const CertificateReport c = dual_certificate(sol, prob);
        const FeasibilityReport f = check_feasible(sol.blocks, sol.t_star, prob);
        d << "gap " << c.gap << ", violation " << f.worst_relative;
        ok = c.gap <= 1e-6 && f.worst_relative <= 1e-7;
        t[mode == PowerMode::TPC ? 0 : 1] = sol.t_star;
        if (ok) {
          const PrecoderSet p = recover(sol, prob, RecoveryOptions{.samples = 20});
          const Eigen::MatrixXcd w = p.covariances().sum(0, cfg.n_antennas);
          const Eigen::MatrixXcd x = p.waveforms[0];
          const double err = (x * x.adjoint() / static_cast<double>(x.cols()) - w).norm();
          d << ", recovered ratio " << p.ratio() << ", waveform error " << err;
          ok = p.feasible && p.ratio() >= 1.0 - 1e-8 && err <= 1e-9 * std::max(1.0, w.norm());
        }
      } else {
        d << to_string(sol.status);
      }
      record(std::string("default instance certified and recovered, ") + to_string(mode), ok, d.str());
    }
    std::ostringstream d;
    d << "tpc " << t[0] << " W, ppc " << t[1] << " W";
    record("total-power cap below per-antenna cap", t[0] > 0.0 && t[0] <= t[1] * (1.0 + 1e-8), d.str());
  }
  return out;
}

}  // namespace isac
