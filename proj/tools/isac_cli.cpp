#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "isac/harness.hpp"
#include "isac/interference.hpp"
#include "isac/recovery.hpp"
#include "isac/selftest.hpp"
#include "isac/solver.hpp"

namespace {

using namespace isac;

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void write_text(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::vector<PowerMode> parse_modes(const std::string& s) {
  if (s == "both") return {PowerMode::TPC, PowerMode::PPC};
  return {power_mode_from_string(s)};
}

struct Common {
  std::string config;
  std::string out;
  std::string format = "csv";
  std::string mode;
  int seeds = 0;
  int workers = 0;
};

void apply_overrides(SweepSpec& spec, const Common& c) {
  if (!c.mode.empty()) spec.modes = parse_modes(c.mode);
  if (c.seeds > 0) spec.n_seeds = c.seeds;
  if (c.workers > 0) spec.workers = c.workers;
  spec.validate();
}

void output_sweep(const SweepResult& r, const Common& c) {
  const EmitFormat f = emit_format_from_string(c.format);
  if (c.out.empty() || c.out == "-")
    std::cout << (f == EmitFormat::Csv ? to_csv(r) : to_json(r).dump(2) + "\n");
  else
    emit(r, f, c.out);
}

int cmd_solve(const Common& c, double zeta_r, double zeta_c, int samples, const std::string& waveform_prefix) {
  const ScenarioConfig cfg = c.config.empty() ? ScenarioConfig::defaults() : scenario_from_json(read_json(c.config));
  const ChannelSet ch = generate_channels(cfg);
  const Thresholds th = Thresholds::uniform(zeta_r, zeta_c, cfg.n_users);
  nlohmann::json out;
  out["scenario"] = to_json(cfg);
  out["zeta_r_db"] = zeta_r;
  out["zeta_c_db"] = zeta_c;
  bool all_ok = true;
  for (PowerMode mode : parse_modes(c.mode.empty() ? "both" : c.mode)) {
    const ConicProblem prob = build_problem(ch, th, cfg, BuildOptions{.mode = mode});
    const SdpSolution sol = solve(prob);
    nlohmann::json j;
    j["solution"] = to_json(sol);
    if (sol.status == SolveStatus::Optimal) {
      const CertificateReport cert = dual_certificate(sol, prob);
      j["certificate"] = {{"primal_obj", cert.primal_obj}, {"dual_obj", cert.dual_obj}, {"gap", cert.gap}};
      j["feasibility"] = to_json(check_feasible(sol.blocks, sol.t_star, prob));
      const PrecoderSet pre = recover(sol, prob, RecoveryOptions{.samples = samples, .seed = cfg.seed,
                                                                 .stream_len = cfg.stream_len});
      j["precoders"] = to_json(pre);
      if (pre.feasible) {
        MetricsOptions mo;
        mo.radar_cross = RadarCrossForm::LosRow;
        j["metrics"] = to_json(compute_metrics(pre.covariances(), ch, cfg.sigma_c2(), cfg.sigma_r2(), mo));
        if (!waveform_prefix.empty())
          for (int b = 0; b < kStations; ++b)
            write_waveform_csv(pre.waveforms[b],
                               waveform_prefix + "_" + to_string(mode) + "_bs" + std::to_string(b) + ".csv");
      }
    } else if (sol.status == SolveStatus::Infeasible) {
      const InfeasibilityReport f = check_farkas(sol, prob);
      j["farkas"] = {{"dual_objective", f.dual_objective}, {"cone_violation", f.cone_violation}};
    } else {
      all_ok = false;
    }
    out[to_string(mode)] = std::move(j);
  }
  write_text(out.dump(2) + "\n", c.out);
  return all_ok ? 0 : 2;
}

int cmd_sweep(const Common& c) {
  if (c.config.empty()) throw std::runtime_error("sweep needs --config <spec.json>");
  SweepSpec spec = sweep_spec_from_json(read_json(c.config));
  apply_overrides(spec, c);
  output_sweep(run_sweep(spec), c);
  return 0;
}

int cmd_bench(const Common& c) {
  SweepSpec spec;
  spec.kind = SweepKind::Timing;
  spec.sizes.clear();
  for (int k : {2, 3, 4, 5})
    for (int n : {6, 8, 10}) spec.sizes.emplace_back(k, n);
  spec.n_seeds = 10;
  if (!c.config.empty()) spec = sweep_spec_from_json(read_json(c.config));
  spec.kind = SweepKind::Timing;
  apply_overrides(spec, c);
  const SweepResult r = run_sweep(spec);
  output_sweep(r, c);

  const double coef = fit_flop_constant(spec.sizes);
  std::fprintf(stderr, "assembly flops, fitted c = %.4g\n%4s %4s %12s %12s %8s\n", coef, "K", "N", "measured",
               "model", "ratio");
  for (const auto& [k, n] : spec.sizes) {
    const FlopEstimate e = flop_estimate(k, n, coef);
    std::fprintf(stderr, "%4d %4d %12llu %12.0f %8.3f\n", k, n, static_cast<unsigned long long>(e.measured), e.model,
                 e.measured / e.model);
  }
  return 0;
}

int cmd_selftest() {
  bool ok = true;
  for (const SelftestCase& t : run_selftest()) {
    std::printf("%s  %s (%s)\n", t.passed ? "PASS" : "FAIL", t.name.c_str(), t.detail.c_str());
    ok = ok && t.passed;
  }
  return ok ? 0 : 1;
}

void add_common(CLI::App* app, Common& c, bool sweep_flags) {
  app->add_option("--config", c.config, "input JSON");
  app->add_option("--out", c.out, "output path (stdout when omitted)");
  app->add_option("--mode", c.mode, "tpc, ppc or both")->check(CLI::IsMember({"tpc", "ppc", "both"}));
  if (!sweep_flags) return;
  app->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app->add_option("--seeds", c.seeds, "number of seeds")->check(CLI::PositiveNumber);
  app->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collaborative precoding for two ISAC base stations"};
  app.require_subcommand(1);

  Common solve_args, sweep_args, bench_args;
  double zeta_r = 10.0, zeta_c = 10.0;
  int samples = 100;
  std::string waveforms;
  auto* solve_cmd = app.add_subcommand("solve", "solve one scenario and recover precoders");
  add_common(solve_cmd, solve_args, false);
  solve_cmd->add_option("--zeta-r", zeta_r, "radar SINR threshold (dB)");
  solve_cmd->add_option("--zeta-c", zeta_c, "comm SINR threshold for every user (dB)");
  solve_cmd->add_option("--samples", samples, "randomization samples")->check(CLI::NonNegativeNumber);
  solve_cmd->add_option("--waveforms", waveforms, "write waveform CSVs with this path prefix");

  auto* sweep_cmd = app.add_subcommand("sweep", "run a sweep spec");
  add_common(sweep_cmd, sweep_args, true);
  auto* bench_cmd = app.add_subcommand("bench", "timing sweep and flop fit");
  add_common(bench_cmd, bench_args, true);
  auto* self_cmd = app.add_subcommand("selftest", "run the oracle suite");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*solve_cmd) return cmd_solve(solve_args, zeta_r, zeta_c, samples, waveforms);
    if (*sweep_cmd) return cmd_sweep(sweep_args);
    if (*bench_cmd) return cmd_bench(bench_args);
    if (*self_cmd) return cmd_selftest();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
