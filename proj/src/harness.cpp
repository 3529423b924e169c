#include "isac/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "isac/interference.hpp"

namespace isac {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

// Randomized candidates used when the configured ones cannot be repaired.
constexpr int kFallbackSamples = 100;

nlohmann::json number_json(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double number_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "nan") return kNaN;
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    throw std::invalid_argument("not a number: " + s);
  }
  return j.get<double>();
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

bool same(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

template <typename T>
void take(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& what) {
  if (!j.is_object()) throw std::invalid_argument(what + " must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw std::invalid_argument("unknown " + what + " field: " + key);
}

struct Instance {
  ScenarioConfig cfg;
  ChannelSet ch;
};

Instance make_instance(const SweepSpec& spec, int k, int n, std::uint64_t seed) {
  Instance inst{spec.scenario(k, n, seed), {}};
  inst.ch = generate_channels(inst.cfg);
  return inst;
}

void fill_solution(SweepRow& row, const SdpSolution& sol) {
  row.solve_time = sol.solve_time;
  row.iterations = sol.iterations;
  row.message = sol.diagnostics;
  switch (sol.status) {
    case SolveStatus::Optimal:
      row.status = "optimal";
      row.t_star = sol.t_star;
      row.max_rank_ratio = max_rank_ratio(sol.blocks);
      break;
    case SolveStatus::Infeasible:
      row.status = "infeasible";
      row.t_star = kInf;
      break;
    case SolveStatus::MaxIterations:
      row.status = "max_iterations";
      row.t_star = kNaN;
      break;
  }
}

void fill_metrics(SweepRow& row, const SdpSolution& sol, const ConicProblem& prob, const Instance& inst,
                  const SweepSpec& spec, std::uint64_t seed) {
  RecoveryOptions ro;
  ro.samples = spec.recovery_samples;
  ro.seed = seed;
  ro.stream_len = inst.cfg.stream_len;
  PrecoderSet pre = recover(sol, prob, ro);
  if (!pre.feasible && ro.samples < kFallbackSamples) {
    ro.samples = kFallbackSamples;
    pre = recover(sol, prob, ro);
  }
  if (!pre.feasible) {
    row.status = "recovery_failed";
    return;
  }
  row.realized_power = pre.realized_power;
  MetricsOptions mo;
  mo.radar_cross = RadarCrossForm::LosRow;
  const MetricsReport m = compute_metrics(pre.covariances(), inst.ch, inst.cfg.sigma_c2(), inst.cfg.sigma_r2(), mo);
  row.avg_rate = m.avg_rate;
  row.p_d = 0.5 * (m.detect_prob[0] + m.detect_prob[1]);
  row.p_miss = 0.5 * (m.miss_prob[0] + m.miss_prob[1]);
}

SweepRow blank_row(PowerMode mode, int k, int n, double zr, double zc, std::uint64_t seed) {
  SweepRow row;
  row.mode = mode;
  row.k = k;
  row.n = n;
  row.zeta_r_db = zr;
  row.zeta_c_db = zc;
  row.seed = seed;
  row.t_star = kNaN;
  row.avg_rate = kNaN;
  row.p_d = kNaN;
  row.p_miss = kNaN;
  row.realized_power = kNaN;
  return row;
}

// Solve and recover at one threshold pair.
SweepRow evaluate(const SweepSpec& spec, const Instance& inst, PowerMode mode, double zr, double zc,
                  std::uint64_t seed) {
  SweepRow row = blank_row(mode, inst.cfg.n_users, inst.cfg.n_antennas, zr, zc, seed);
  try {
    FlopCounter flops;
    const ConicProblem prob = build_problem(inst.ch, Thresholds::uniform(zr, zc, inst.cfg.n_users), inst.cfg,
                                            BuildOptions{.mode = mode}, &flops);
    row.flops = flops.flops;
    const SdpSolution sol = solve(prob, spec.solver);
    fill_solution(row, sol);
    if (sol.status == SolveStatus::Optimal) fill_metrics(row, sol, prob, inst, spec, seed);
  } catch (const std::exception& e) {
    row.status = "error";
    row.message = e.what();
  }
  return row;
}

double min_power(const SweepSpec& spec, const Instance& inst, PowerMode mode, double zr, double zc) {
  const ConicProblem prob =
      build_problem(inst.ch, Thresholds::uniform(zr, zc, inst.cfg.n_users), inst.cfg, BuildOptions{.mode = mode});
  const SdpSolution sol = solve(prob, spec.solver);
  return sol.status == SolveStatus::Optimal ? sol.t_star : kInf;
}

// Largest common comm threshold whose minimum power fits the budget, for each
// radar threshold in ascending order.
std::vector<SweepRow> tradeoff_rows(const SweepSpec& spec, const Instance& inst, PowerMode mode,
                                    std::uint64_t seed) {
  std::vector<double> grid = spec.grid_db;
  std::sort(grid.begin(), grid.end());
  const double lo_db = spec.tradeoff_lo_db;
  std::vector<SweepRow> rows;
  double budget = kNaN;
  try {
    budget = spec.budget_factor * min_power(spec, inst, mode, grid.back(), lo_db);
  } catch (const std::exception&) {
  }
  double hi = spec.tradeoff_hi_db;
  bool hi_checked = false;
  for (double zr : grid) {
    SweepRow row = blank_row(mode, inst.cfg.n_users, inst.cfg.n_antennas, zr, kNaN, seed);
    row.budget = budget;
    try {
      if (!std::isfinite(budget)) throw std::runtime_error("radar-only reference problem is not solvable");
      if (!(min_power(spec, inst, mode, zr, lo_db) <= budget)) {
        row.status = "infeasible";
        row.t_star = kInf;
        rows.push_back(std::move(row));
        continue;
      }
      double lo = lo_db;
      if (!hi_checked && min_power(spec, inst, mode, zr, hi) <= budget) {
        lo = hi;
      } else {
        hi_checked = true;
        while (hi - lo > spec.tradeoff_tol_db) {
          const double mid = 0.5 * (lo + hi);
          if (min_power(spec, inst, mode, zr, mid) <= budget)
            lo = mid;
          else
            hi = mid;
        }
      }
      SweepRow at = evaluate(spec, inst, mode, zr, lo, seed);
      at.budget = budget;
      row = std::move(at);
    } catch (const std::exception& e) {
      row.status = "error";
      row.message = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

SweepRow timing_row(const SweepSpec& spec, const Instance& inst, PowerMode mode, std::uint64_t seed) {
  SweepRow row = evaluate(spec, inst, mode, spec.zeta_r_db, spec.zeta_c_db, seed);
  if (row.status == "error") return row;
  double total = row.solve_time;
  try {
    const ConicProblem prob = build_problem(
        inst.ch, Thresholds::uniform(spec.zeta_r_db, spec.zeta_c_db, inst.cfg.n_users), inst.cfg,
        BuildOptions{.mode = mode});
    for (int r = 1; r < spec.repetitions; ++r) total += solve(prob, spec.solver).solve_time;
  } catch (const std::exception& e) {
    row.status = "error";
    row.message = e.what();
  }
  row.solve_time = total / spec.repetitions;
  return row;
}

void run_pool(std::vector<std::function<void()>>& tasks, int workers) {
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(tasks.size())));
  if (n == 1) {
    for (auto& t : tasks) t();
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < n; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < tasks.size(); i = next++) tasks[i]();
    });
  for (auto& th : pool) th.join();
}

double grid_value(SweepKind kind, const SweepRow& row) {
  switch (kind) {
    case SweepKind::RateVsZetaC:
      return row.zeta_c_db;
    case SweepKind::PdVsZetaR:
    case SweepKind::TradeOff:
      return row.zeta_r_db;
    case SweepKind::Timing:
      break;
  }
  return 0.0;
}

nlohmann::json solver_json(const SolverOptions& o) {
  return {{"gap_tol", o.gap_tol}, {"feas_tol", o.feas_tol}, {"cert_tol", o.cert_tol},
          {"max_iter", o.max_iter}, {"verbosity", o.verbosity}};
}

}  // namespace

const char* to_string(SweepKind k) {
  switch (k) {
    case SweepKind::RateVsZetaC:
      return "rate_vs_zeta_c";
    case SweepKind::PdVsZetaR:
      return "pd_vs_zeta_r";
    case SweepKind::TradeOff:
      return "tradeoff";
    case SweepKind::Timing:
      return "timing";
  }
  return "?";
}

SweepKind sweep_kind_from_string(const std::string& s) {
  for (SweepKind k : {SweepKind::RateVsZetaC, SweepKind::PdVsZetaR, SweepKind::TradeOff, SweepKind::Timing})
    if (s == to_string(k)) return k;
  throw std::invalid_argument("unknown sweep kind: " + s);
}

void SweepSpec::validate() const {
  if (kind != SweepKind::Timing && grid_db.empty()) throw std::invalid_argument("sweep grid is empty");
  if (sizes.empty()) throw std::invalid_argument("sweep needs at least one (K, N) pair");
  for (const auto& [k, n] : sizes)
    if (k < 1 || n < 1) throw std::invalid_argument("K and N must be positive");
  if (n_seeds < 1) throw std::invalid_argument("n_seeds must be >= 1");
  if (modes.empty()) throw std::invalid_argument("sweep needs at least one power mode");
  if (std::set<PowerMode>(modes.begin(), modes.end()).size() != modes.size())
    throw std::invalid_argument("power modes repeat");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  if (recovery_samples < 0) throw std::invalid_argument("recovery_samples must be >= 0");
  if (!(budget_factor > 0.0)) throw std::invalid_argument("budget_factor must be positive");
  if (!(tradeoff_lo_db < tradeoff_hi_db) || !(tradeoff_tol_db > 0.0))
    throw std::invalid_argument("trade-off search interval is empty");
  if (!(threshold_min_db <= threshold_max_db)) throw std::invalid_argument("threshold range is empty");
  auto in_range = [&](double v) { return v >= threshold_min_db && v <= threshold_max_db; };
  for (double v : grid_db)
    if (!in_range(v)) throw std::invalid_argument("grid threshold " + std::to_string(v) + " dB out of range");
  if (!in_range(zeta_r_db) || !in_range(zeta_c_db))
    throw std::invalid_argument("fixed threshold out of range");
  if (fixed.n_paths < 1 || fixed.stream_len < 1) throw std::invalid_argument("bad fixed scenario parameters");
}

ScenarioConfig SweepSpec::scenario(int k, int n, std::uint64_t s) const {
  ScenarioConfig cfg = ScenarioConfig::defaults(k, n, fixed.n_paths);
  cfg.stream_len = std::max(fixed.stream_len, k);
  cfg.cross_echo_gain_db = fixed.cross_echo_gain_db;
  cfg.sigma_c_dbm = fixed.sigma_c_dbm;
  cfg.sigma_r_dbm = fixed.sigma_r_dbm;
  cfg.power_cap_dbm = fixed.power_cap_dbm;
  cfg.seed = s;
  cfg.validate();
  return cfg;
}

nlohmann::json to_json(const SweepSpec& s) {
  nlohmann::json j;
  j["kind"] = to_string(s.kind);
  j["grid_db"] = s.grid_db;
  nlohmann::json sizes = nlohmann::json::array();
  for (const auto& [k, n] : s.sizes) sizes.push_back({k, n});
  j["sizes"] = std::move(sizes);
  j["zeta_r_db"] = s.zeta_r_db;
  j["zeta_c_db"] = s.zeta_c_db;
  j["n_seeds"] = s.n_seeds;
  j["base_seed"] = s.base_seed;
  nlohmann::json modes = nlohmann::json::array();
  for (PowerMode m : s.modes) modes.push_back(to_string(m));
  j["modes"] = std::move(modes);
  j["workers"] = s.workers;
  j["repetitions"] = s.repetitions;
  j["recovery_samples"] = s.recovery_samples;
  j["budget_factor"] = s.budget_factor;
  j["tradeoff_lo_db"] = s.tradeoff_lo_db;
  j["tradeoff_hi_db"] = s.tradeoff_hi_db;
  j["tradeoff_tol_db"] = s.tradeoff_tol_db;
  j["threshold_min_db"] = s.threshold_min_db;
  j["threshold_max_db"] = s.threshold_max_db;
  j["fixed"] = {{"n_paths", s.fixed.n_paths},
                {"stream_len", s.fixed.stream_len},
                {"cross_echo_gain_db", s.fixed.cross_echo_gain_db},
                {"sigma_c_dbm", s.fixed.sigma_c_dbm},
                {"sigma_r_dbm", s.fixed.sigma_r_dbm},
                {"power_cap_dbm", s.fixed.power_cap_dbm}};
  j["solver"] = solver_json(s.solver);
  return j;
}

SweepSpec sweep_spec_from_json(const nlohmann::json& j) {
  reject_unknown(j,
                 {"kind", "grid_db", "sizes", "zeta_r_db", "zeta_c_db", "n_seeds", "base_seed", "modes", "workers",
                  "repetitions", "recovery_samples", "budget_factor", "tradeoff_lo_db", "tradeoff_hi_db",
                  "tradeoff_tol_db", "threshold_min_db", "threshold_max_db", "fixed", "solver"},
                 "sweep spec");
  SweepSpec s;
  if (j.contains("kind")) s.kind = sweep_kind_from_string(j.at("kind").get<std::string>());
  take(j, "grid_db", s.grid_db);
  if (j.contains("sizes")) {
    s.sizes.clear();
    for (const auto& p : j.at("sizes")) {
      if (!p.is_array() || p.size() != 2) throw std::invalid_argument("sizes entries must be [K, N]");
      s.sizes.emplace_back(p[0].get<int>(), p[1].get<int>());
    }
  }
  take(j, "zeta_r_db", s.zeta_r_db);
  take(j, "zeta_c_db", s.zeta_c_db);
  take(j, "n_seeds", s.n_seeds);
  take(j, "base_seed", s.base_seed);
  if (j.contains("modes")) {
    s.modes.clear();
    for (const auto& m : j.at("modes")) s.modes.push_back(power_mode_from_string(m.get<std::string>()));
  }
  take(j, "workers", s.workers);
  take(j, "repetitions", s.repetitions);
  take(j, "recovery_samples", s.recovery_samples);
  take(j, "budget_factor", s.budget_factor);
  take(j, "tradeoff_lo_db", s.tradeoff_lo_db);
  take(j, "tradeoff_hi_db", s.tradeoff_hi_db);
  take(j, "tradeoff_tol_db", s.tradeoff_tol_db);
  take(j, "threshold_min_db", s.threshold_min_db);
  take(j, "threshold_max_db", s.threshold_max_db);
  if (j.contains("fixed")) {
    const auto& f = j.at("fixed");
    reject_unknown(f, {"n_paths", "stream_len", "cross_echo_gain_db", "sigma_c_dbm", "sigma_r_dbm", "power_cap_dbm"},
                   "fixed parameter");
    take(f, "n_paths", s.fixed.n_paths);
    take(f, "stream_len", s.fixed.stream_len);
    take(f, "cross_echo_gain_db", s.fixed.cross_echo_gain_db);
    take(f, "sigma_c_dbm", s.fixed.sigma_c_dbm);
    take(f, "sigma_r_dbm", s.fixed.sigma_r_dbm);
    take(f, "power_cap_dbm", s.fixed.power_cap_dbm);
  }
  if (j.contains("solver")) {
    const auto& o = j.at("solver");
    reject_unknown(o, {"gap_tol", "feas_tol", "cert_tol", "max_iter", "verbosity"}, "solver option");
    take(o, "gap_tol", s.solver.gap_tol);
    take(o, "feas_tol", s.solver.feas_tol);
    take(o, "cert_tol", s.solver.cert_tol);
    take(o, "max_iter", s.solver.max_iter);
    take(o, "verbosity", s.solver.verbosity);
  }
  s.validate();
  return s;
}

bool SweepRow::operator==(const SweepRow& o) const {
  return mode == o.mode && k == o.k && n == o.n && same(zeta_r_db, o.zeta_r_db) && same(zeta_c_db, o.zeta_c_db) &&
         seed == o.seed && same(t_star, o.t_star) && same(avg_rate, o.avg_rate) && same(p_d, o.p_d) &&
         same(p_miss, o.p_miss) && same(solve_time, o.solve_time) && same(max_rank_ratio, o.max_rank_ratio) &&
         same(realized_power, o.realized_power) && same(budget, o.budget) && flops == o.flops &&
         iterations == o.iterations && status == o.status && message == o.message;
}

SweepResult run_sweep(const SweepSpec& spec) {
  spec.validate();
  SweepResult result{spec, {}};
  const bool timing = spec.kind == SweepKind::Timing;
  const bool tradeoff = spec.kind == SweepKind::TradeOff;
  const std::size_t per_unit = tradeoff ? spec.grid_db.size() : 1;

  std::vector<std::vector<SweepRow>> slots;
  std::vector<std::function<void()>> tasks;
  for (PowerMode mode : spec.modes)
    for (const auto& [k, n] : spec.sizes) {
      const std::vector<double> grid =
          timing || tradeoff ? std::vector<double>{0.0} : spec.grid_db;
      for (double g : grid)
        for (int s = 0; s < spec.n_seeds; ++s) {
          const std::size_t slot = slots.size();
          slots.emplace_back();
          const std::uint64_t seed = spec.seed(s);
          tasks.push_back([&, mode, k = k, n = n, g, seed, slot] {
            std::vector<SweepRow> out;
            try {
              const Instance inst = make_instance(spec, k, n, seed);
              switch (spec.kind) {
                case SweepKind::RateVsZetaC:
                  out.push_back(evaluate(spec, inst, mode, spec.zeta_r_db, g, seed));
                  break;
                case SweepKind::PdVsZetaR:
                  out.push_back(evaluate(spec, inst, mode, g, spec.zeta_c_db, seed));
                  break;
                case SweepKind::TradeOff:
                  out = tradeoff_rows(spec, inst, mode, seed);
                  break;
                case SweepKind::Timing:
                  out.push_back(timing_row(spec, inst, mode, seed));
                  break;
              }
            } catch (const std::exception& e) {
              out.clear();
              const double zr = spec.kind == SweepKind::RateVsZetaC ? spec.zeta_r_db : g;
              for (std::size_t i = 0; i < per_unit; ++i) {
                SweepRow row = blank_row(mode, k, n, tradeoff ? spec.grid_db[i] : zr,
                                         spec.kind == SweepKind::RateVsZetaC ? g : spec.zeta_c_db, seed);
                row.status = "error";
                row.message = e.what();
                out.push_back(std::move(row));
              }
            }
            slots[slot] = std::move(out);
          });
        }
    }
  run_pool(tasks, timing ? 1 : spec.workers);

  // Trade-off units carry the whole grid; regroup so the seed varies fastest.
  if (tradeoff) {
    const std::size_t units = slots.size() / spec.n_seeds;
    for (std::size_t u = 0; u < units; ++u)
      for (std::size_t g = 0; g < per_unit; ++g)
        for (int s = 0; s < spec.n_seeds; ++s) result.rows.push_back(slots[u * spec.n_seeds + s][g]);
  } else {
    for (auto& s : slots)
      for (auto& r : s) result.rows.push_back(std::move(r));
  }
  return result;
}

std::vector<SweepSummary> summarize(const SweepResult& r) {
  const SweepKind kind = r.spec.kind;
  using Group = std::tuple<int, int, int>;
  std::map<Group, std::vector<const SweepRow*>> groups;
  std::vector<Group> order;
  for (const auto& row : r.rows) {
    const Group g{static_cast<int>(row.mode), row.k, row.n};
    if (!groups.count(g)) order.push_back(g);
    groups[g].push_back(&row);
  }

  std::vector<SweepSummary> out;
  for (const Group& g : order) {
    const auto& rows = groups[g];
    std::set<std::uint64_t> bad;
    for (const SweepRow* row : rows) {
      const bool usable = kind == SweepKind::Timing ? row->ok() || row->status == "infeasible" : row->ok();
      if (!usable) bad.insert(row->seed);
    }
    std::vector<double> points;
    for (const SweepRow* row : rows) {
      const double v = grid_value(kind, *row);
      if (std::find(points.begin(), points.end(), v) == points.end()) points.push_back(v);
    }
    for (double p : points) {
      SweepSummary s;
      s.mode = static_cast<PowerMode>(std::get<0>(g));
      s.k = std::get<1>(g);
      s.n = std::get<2>(g);
      s.grid_db = p;
      std::vector<const SweepRow*> use;
      for (const SweepRow* row : rows)
        if (grid_value(kind, *row) == p && !bad.count(row->seed)) use.push_back(row);
      s.count = static_cast<int>(use.size());
      if (use.empty()) {
        s.mean_t_star = s.mean_rate = s.mean_p_d = s.mean_p_miss = s.mean_zeta_c_db = s.mean_solve_time = kNaN;
        s.se_rate = s.se_solve_time = kNaN;
        out.push_back(s);
        continue;
      }
      auto mean_se = [&](auto field) {
        double sum = 0.0;
        for (const SweepRow* row : use) sum += field(*row);
        const double m = sum / use.size();
        double ss = 0.0;
        for (const SweepRow* row : use) ss += (field(*row) - m) * (field(*row) - m);
        const double se = use.size() > 1 ? std::sqrt(ss / (use.size() - 1) / use.size()) : 0.0;
        return std::pair{m, se};
      };
      s.mean_t_star = mean_se([](const SweepRow& x) { return x.t_star; }).first;
      std::tie(s.mean_rate, s.se_rate) = mean_se([](const SweepRow& x) { return x.avg_rate; });
      s.mean_p_d = mean_se([](const SweepRow& x) { return x.p_d; }).first;
      s.mean_p_miss = mean_se([](const SweepRow& x) { return x.p_miss; }).first;
      s.mean_zeta_c_db = mean_se([](const SweepRow& x) { return x.zeta_c_db; }).first;
      std::tie(s.mean_solve_time, s.se_solve_time) = mean_se([](const SweepRow& x) { return x.solve_time; });
      out.push_back(s);
    }
  }
  return out;
}

std::string to_csv(const SweepResult& r) {
  std::ostringstream out;
  out << kCsvHeader << '\n';
  for (const auto& row : r.rows) {
    out << to_string(row.mode) << ',' << row.k << ',' << row.n << ',' << csv_number(row.zeta_r_db) << ','
        << csv_number(row.zeta_c_db) << ',' << row.seed << ',' << csv_number(row.t_star) << ','
        << csv_number(row.avg_rate) << ',' << csv_number(row.p_d) << ',' << csv_number(row.solve_time) << ','
        << csv_number(row.max_rank_ratio) << ',' << row.status << '\n';
  }
  return out.str();
}

nlohmann::json to_json(const SweepResult& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"mode", to_string(row.mode)},
                    {"K", row.k},
                    {"N", row.n},
                    {"zeta_r_db", number_json(row.zeta_r_db)},
                    {"zeta_c_db", number_json(row.zeta_c_db)},
                    {"seed", row.seed},
                    {"t_star_w", number_json(row.t_star)},
                    {"avg_rate_bps_hz", number_json(row.avg_rate)},
                    {"p_d", number_json(row.p_d)},
                    {"p_miss", number_json(row.p_miss)},
                    {"solve_time_s", number_json(row.solve_time)},
                    {"max_rank_ratio", number_json(row.max_rank_ratio)},
                    {"realized_power_w", number_json(row.realized_power)},
                    {"budget_w", number_json(row.budget)},
                    {"flops", row.flops},
                    {"iterations", row.iterations},
                    {"status", row.status},
                    {"message", row.message}});
  }
  return {{"spec", to_json(r.spec)}, {"rows", std::move(rows)}};
}

SweepResult sweep_result_from_json(const nlohmann::json& j) {
  reject_unknown(j, {"spec", "rows"}, "sweep result");
  SweepResult r{sweep_spec_from_json(j.at("spec")), {}};
  for (const auto& o : j.at("rows")) {
    SweepRow row;
    row.mode = power_mode_from_string(o.at("mode").get<std::string>());
    row.k = o.at("K").get<int>();
    row.n = o.at("N").get<int>();
    row.zeta_r_db = number_from_json(o.at("zeta_r_db"));
    row.zeta_c_db = number_from_json(o.at("zeta_c_db"));
    row.seed = o.at("seed").get<std::uint64_t>();
    row.t_star = number_from_json(o.at("t_star_w"));
    row.avg_rate = number_from_json(o.at("avg_rate_bps_hz"));
    row.p_d = number_from_json(o.at("p_d"));
    row.p_miss = number_from_json(o.at("p_miss"));
    row.solve_time = number_from_json(o.at("solve_time_s"));
    row.max_rank_ratio = number_from_json(o.at("max_rank_ratio"));
    row.realized_power = number_from_json(o.at("realized_power_w"));
    row.budget = number_from_json(o.at("budget_w"));
    row.flops = o.at("flops").get<std::uint64_t>();
    row.iterations = o.at("iterations").get<int>();
    row.status = o.at("status").get<std::string>();
    row.message = o.at("message").get<std::string>();
    r.rows.push_back(std::move(row));
  }
  return r;
}

EmitFormat emit_format_from_string(const std::string& s) {
  if (s == "csv") return EmitFormat::Csv;
  if (s == "json") return EmitFormat::Json;
  throw std::invalid_argument("unknown output format: " + s);
}

void emit(const SweepResult& r, EmitFormat format, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  if (format == EmitFormat::Csv)
    out << to_csv(r);
  else
    out << to_json(r).dump(2) << '\n';
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path);
}

double flop_model_unit(int k, int n) {
  const double kk = k, nn = n;
  return nn * nn * kk + nn * kk * kk;
}

FlopEstimate flop_estimate(int k, int n, double c) {
  if (k < 1 || n < 1) throw std::invalid_argument("flop_estimate: K and N must be positive");
  const ScenarioConfig cfg = [&] {
    ScenarioConfig c0 = ScenarioConfig::defaults(k, n);
    c0.stream_len = std::max(c0.stream_len, k);
    return c0;
  }();
  FlopCounter counter;
  build_problem(generate_channels(cfg), Thresholds::uniform(10.0, 10.0, k), cfg, BuildOptions{}, &counter);
  FlopEstimate e;
  e.measured = counter.flops;
  e.model_unit = flop_model_unit(k, n);
  e.model = c * e.model_unit;
  return e;
}

double fit_flop_constant(const std::vector<std::pair<int, int>>& sizes) {
  if (sizes.empty()) throw std::invalid_argument("fit_flop_constant: no sizes");
  double sum = 0.0;
  for (const auto& [k, n] : sizes) {
    const FlopEstimate e = flop_estimate(k, n);
    sum += std::log(static_cast<double>(e.measured) / e.model_unit);
  }
  return std::exp(sum / sizes.size());
}

}  // namespace isac
