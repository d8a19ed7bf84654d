// emitloc command line: Monte Carlo sweeps, data generation and localization
// of recorded observations.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "emitloc/baseline.hpp"
#include "emitloc/cwc.hpp"
#include "emitloc/harness.hpp"
#include "emitloc/io.hpp"

using namespace emitloc;

namespace {

// Command line values that override the JSON config when given.
struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::vector<double> values;
  std::optional<int> K, D, stations, configs, trials, psk_order, empirical_count, refine_levels, max_iters;
  std::optional<double> fs, snr, extent, step, beta, rel_tol, emitter_radius, station_rmin, station_rmax, eps_rank;
  std::optional<std::string> signal, channel, profile, pdp_source, cache_dir;
  std::vector<std::string> estimators;
  bool known_magnitudes{false};
  bool no_crlb{false};
  bool keep_trials{false};
  std::optional<unsigned> threads;
};

void add_run_flags(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config_path, "RunConfig JSON file; flags override its fields");
  app->add_option("--K", o.K, "frequency bins per window");
  app->add_option("--D", o.D, "time windows");
  app->add_option("--fs", o.fs, "sampling frequency [Hz]");
  app->add_option("--snr", o.snr, "SNR [dB] when it is not the sweep axis");
  app->add_option("--stations", o.stations, "number of base stations when it is not the sweep axis");
  app->add_option("--configs", o.configs, "position configurations per axis point");
  app->add_option("--trials", o.trials, "trials per configuration");
  app->add_option("--signal", o.signal, "white | flat")->check(CLI::IsMember({"white", "flat"}));
  app->add_option("--psk-order", o.psk_order, "PSK order of the flat signal");
  app->add_option("--channel", o.channel, "exp | cluster")->check(CLI::IsMember({"exp", "cluster"}));
  app->add_option("--profile", o.profile, "exp1 | exp2 parameter preset")->check(CLI::IsMember({"exp1", "exp2"}));
  app->add_option("--pdp-source", o.pdp_source, "analytic | empirical")
      ->check(CLI::IsMember({"analytic", "empirical"}));
  app->add_option("--empirical-count", o.empirical_count, "realizations averaged for an empirical profile");
  app->add_option("--eps-rank", o.eps_rank, "relative eigenvalue cut of the eigen factor");
  app->add_option("--extent", o.extent, "grid half extent [m]");
  app->add_option("--step", o.step, "coarse grid step [m]");
  app->add_option("--refine-levels", o.refine_levels, "local refinement levels after the coarse grid");
  app->add_option("--emitter-radius", o.emitter_radius, "emitter disc radius [m]");
  app->add_option("--station-rmin", o.station_rmin, "inner station radius [m]");
  app->add_option("--station-rmax", o.station_rmax, "outer station radius [m]");
  app->add_option("--beta", o.beta, "GPM step size");
  app->add_option("--rel-tol", o.rel_tol, "GPM relative stopping tolerance");
  app->add_option("--max-iters", o.max_iters, "GPM iteration cap");
  app->add_option("--estimators", o.estimators, "subset of usage, usage_cwc, baseline")
      ->check(CLI::IsMember({"usage", "usage_cwc", "baseline"}));
  app->add_flag("--known-magnitudes", o.known_magnitudes, "use the true signal magnitudes");
  app->add_flag("--no-crlb", o.no_crlb, "skip the Fisher information");
  app->add_flag("--keep-trials", o.keep_trials, "write per-trial records to the JSON output");
  app->add_option("--threads", o.threads, "worker threads, 0 = all cores");
  app->add_option("--cache-dir", o.cache_dir, "directory for cached channel covariances");
}

RunConfig build_config(const Overrides& o) {
  RunConfig c = o.config_path.empty() ? RunConfig{} : run_config_from_json(io::read_text(o.config_path));
  if (o.seed) c.seed = *o.seed;
  if (!o.values.empty()) c.axis_values = o.values;
  if (o.K) c.K = *o.K;
  if (o.D) c.D = *o.D;
  if (o.fs) c.fs = *o.fs;
  if (o.snr) c.snr_db = *o.snr;
  if (o.stations) c.geometry.num_stations = *o.stations;
  if (o.configs) c.num_configs = *o.configs;
  if (o.trials) c.trials_per_config = *o.trials;
  if (o.signal) c.signal.type = *o.signal == "white" ? SignalType::White : SignalType::Flat;
  if (o.psk_order) c.signal.order = *o.psk_order;
  if (o.channel) c.channel.type = *o.channel == "exp" ? ChannelType::Exp : ChannelType::Cluster;
  if (o.profile) c.channel.exp = *o.profile == "exp1" ? ExpPdpParams::exp1() : ExpPdpParams::exp2();
  if (o.pdp_source) c.channel.pdp_source = *o.pdp_source == "analytic" ? PdpSource::Analytic : PdpSource::Empirical;
  if (o.empirical_count) c.channel.empirical_count = *o.empirical_count;
  if (o.eps_rank) c.channel.eps_rank = *o.eps_rank;
  if (o.extent) c.grid.half_extent = *o.extent;
  if (o.step) c.grid.step = *o.step;
  if (o.refine_levels) c.grid.refine_levels = *o.refine_levels;
  if (o.emitter_radius) c.geometry.emitter_radius = *o.emitter_radius;
  if (o.station_rmin) c.geometry.station_radius_min = *o.station_rmin;
  if (o.station_rmax) c.geometry.station_radius_max = *o.station_rmax;
  if (o.beta) c.gpm.beta = *o.beta;
  if (o.rel_tol) c.gpm.rel_tol = *o.rel_tol;
  if (o.max_iters) c.gpm.max_iters = *o.max_iters;
  if (!o.estimators.empty()) {
    c.estimators.clear();
    for (const auto& e : o.estimators) c.estimators.push_back(parse_estimator(e));
  }
  if (o.known_magnitudes) c.known_magnitudes = true;
  if (o.no_crlb) c.crlb = false;
  if (o.keep_trials) c.keep_trials = true;
  if (o.threads) c.threads = *o.threads;
  if (o.cache_dir) c.cache_dir = *o.cache_dir;
  return c;
}

struct SweepCommand {
  SweepAxis axis;
  Overrides o;
  std::string csv_path;
  std::string json_path;
  bool quiet{false};
};

void add_sweep(CLI::App& app, const char* name, const char* help, SweepCommand& cmd) {
  CLI::App* sub = app.add_subcommand(name, help);
  sub->add_option("--seed", cmd.o.seed, "master seed")->required();
  sub->add_option("--values", cmd.o.values, "axis values");
  sub->add_option("--csv", cmd.csv_path, "CSV output path (default: stdout)");
  sub->add_option("--json", cmd.json_path, "JSON output path");
  sub->add_flag("--quiet", cmd.quiet, "no progress on stderr");
  add_run_flags(sub, cmd.o);
  sub->callback([&cmd] {
    RunConfig cfg = build_config(cmd.o);
    cfg.axis = cmd.axis;
    if (cmd.o.values.empty() && cmd.o.config_path.empty()) {
      if (cmd.axis == SweepAxis::Stations) cfg.axis_values = {4, 8, 16};
      if (cmd.axis == SweepAxis::DelaySpread) cfg.axis_values = {10, 20, 30, 40};
    }
    validate(cfg);
    ProgressCallback progress;
    if (!cmd.quiet) {
      progress = [&cfg](int a, int done, int total) {
        std::cerr << "\r" << to_string(cfg.axis) << " = " << cfg.axis_values[a] << ": " << done << "/" << total
                  << std::flush;
        if (done == total) std::cerr << "\n";
      };
    }
    const SweepResult result = run_monte_carlo(cfg, progress);
    emit_results(result, cmd.csv_path, cmd.json_path);
    if (cmd.csv_path.empty()) std::cout << results_csv(result);
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Emitter localization in dense multipath: Monte Carlo sweeps and offline localization"};
  app.require_subcommand(1);

  SweepCommand snr{SweepAxis::Snr, {}, {}, {}, false};
  SweepCommand stations{SweepAxis::Stations, {}, {}, {}, false};
  SweepCommand spread{SweepAxis::DelaySpread, {}, {}, {}, false};
  add_sweep(app, "sweep-snr", "RMSE and CRLB versus SNR [dB]", snr);
  add_sweep(app, "sweep-stations", "RMSE and CRLB versus number of base stations", stations);
  add_sweep(app, "sweep-delayspread", "RMSE and CRLB versus delay spread mu1 [ns]", spread);

  // gen-data
  Overrides gen;
  std::string gen_out;
  int gen_config = 0;
  int gen_trial = 0;
  CLI::App* gen_cmd = app.add_subcommand("gen-data", "synthesize one observation set and save it");
  gen_cmd->add_option("--seed", gen.seed, "master seed")->required();
  gen_cmd->add_option("--out", gen_out, "observation file; writes <out>.json, <out>.pdp.json, <out>.scenario.json")
      ->required();
  gen_cmd->add_option("--config-id", gen_config, "position configuration index");
  gen_cmd->add_option("--trial-id", gen_trial, "trial index");
  add_run_flags(gen_cmd, gen);
  gen_cmd->callback([&] {
    RunConfig cfg = build_config(gen);
    cfg.axis = SweepAxis::Snr;
    cfg.axis_values = {cfg.snr_db};
    validate(cfg);
    const FrequencyGrid grid{cfg.K, cfg.fs};
    GeometryConfig geo = cfg.geometry;
    Rng geo_rng = make_rng(cfg.seed, gen_config, 0, "geometry");
    const Scenario scenario = sample_scenario(geo, geo_rng);
    Rng ch_rng = make_rng(cfg.seed, gen_config, gen_trial, "channel");
    std::vector<ChannelRealization> channels;
    Pdp pdp;
    if (cfg.channel.type == ChannelType::Exp) {
      pdp = exp_pdp(cfg.channel.exp);
      for (std::size_t m = 0; m < scenario.stations.size(); ++m) channels.push_back(sample_rayleigh_channel(pdp, ch_rng));
    } else {
      for (std::size_t m = 0; m < scenario.stations.size(); ++m)
        channels.push_back(sample_cluster_channel(cfg.channel.cluster, ch_rng));
      Rng pdp_rng = make_rng(cfg.seed, 0, 0, "pdp");
      std::vector<ChannelRealization> draws;
      for (int i = 0; i < cfg.channel.empirical_count; ++i)
        draws.push_back(sample_cluster_channel(cfg.channel.cluster, pdp_rng));
      const int n_h = static_cast<int>(std::ceil(cfg.channel.cluster.max_delay / cfg.channel.pdp_delta_tau)) + 1;
      pdp = empirical_pdp(draws, cfg.channel.pdp_delta_tau, n_h);
    }
    Rng sig_rng = make_rng(cfg.seed, gen_config, gen_trial, "signal");
    const TransmitSignal x = cfg.signal.type == SignalType::White ? gen_white(cfg.K, cfg.D, sig_rng)
                                                                  : gen_flat_psk(cfg.K, cfg.D, cfg.signal.order, sig_rng);
    const double nv = noise_variance_for_snr(x, pdp.total_power(), cfg.snr_db);
    Rng noise_rng = make_rng(cfg.seed, gen_config, gen_trial, "noise");
    const ObservationSet obs = synthesize_observations(scenario, channels, x, grid, nv, noise_rng);
    io::write_observations(obs, gen_out);
    io::write_text(gen_out + ".pdp.json", io::pdp_to_json(pdp));
    io::write_text(gen_out + ".scenario.json", io::scenario_to_json(scenario));
    std::cout << "wrote " << gen_out << " (M=" << obs.M() << ", K=" << obs.K() << ", D=" << obs.D
              << "), emitter at " << scenario.emitter.x << " " << scenario.emitter.y << " " << scenario.emitter.z
              << "\n";
  });

  // localize
  std::string loc_obs, loc_pdp, loc_stations, loc_json, loc_estimator = "usage_cwc";
  GridSearchConfig loc_grid;
  GpmConfig loc_gpm;
  double loc_eps = -1.0;
  CLI::App* loc = app.add_subcommand("localize", "estimate the emitter position from a saved observation set");
  loc->add_option("--obs", loc_obs, "observation file (sidecar <obs>.json next to it)")->required();
  loc->add_option("--pdp", loc_pdp, "power delay profile JSON")->required();
  loc->add_option("--stations", loc_stations, "scenario JSON holding the station positions")->required();
  loc->add_option("--estimator", loc_estimator, "usage | usage_cwc | baseline")
      ->check(CLI::IsMember({"usage", "usage_cwc", "baseline"}));
  loc->add_option("--center-x", loc_grid.center_x, "grid center x [m]");
  loc->add_option("--center-y", loc_grid.center_y, "grid center y [m]");
  loc->add_option("--z", loc_grid.z, "grid plane height [m]");
  loc->add_option("--extent", loc_grid.half_extent, "grid half extent [m]");
  loc->add_option("--step", loc_grid.step, "coarse grid step [m]");
  loc->add_option("--refine-levels", loc_grid.refine_levels, "local refinement levels");
  loc->add_option("--beta", loc_gpm.beta, "GPM step size");
  loc->add_option("--eps-rank", loc_eps, "use the eigen factor with this cut (default: grid factor)");
  loc->add_option("--json", loc_json, "write the estimate and coarse cost map as JSON");
  loc->callback([&] {
    validate(loc_grid);
    const ObservationSet obs = io::read_observations(loc_obs);
    const Pdp pdp = io::pdp_from_json(io::read_text(loc_pdp));
    const Scenario sc = io::scenario_from_json(io::read_text(loc_stations));
    if (static_cast<int>(sc.stations.size()) != obs.M())
      throw ValidationError("station count does not match the observation file");
    const ChannelCovariance cov = loc_eps >= 0.0 || pdp.size() > obs.K()
                                      ? channel_covariance_eigen(pdp, obs.grid, loc_eps >= 0.0 ? loc_eps : 1e-10)
                                      : channel_covariance(pdp, obs.grid);
    const std::vector<ChannelCovariance> covs(obs.M(), cov);
    GridSearchResult res;
    const auto kind = parse_estimator(loc_estimator);
    if (kind == EstimatorKind::Baseline) {
      const CrossPowerSurface surface(obs, sc.stations);
      res = refined_grid_search(loc_grid, [&](const CandidateSet& c) { return surface.scores(c); });
    } else {
      const ObservationSet used = kind == EstimatorKind::UsageCwc ? cwc_combine(obs).combined : obs;
      const UsageProblem problem(used, covs, sc.stations, estimate_magnitudes(used, covs));
      res = refined_grid_search(loc_grid, [&](const CandidateSet& c) {
        return problem.evaluate(c, loc_gpm, UsageOptions{0, false});
      });
    }
    std::cout << res.q_hat.x << " " << res.q_hat.y << " " << res.q_hat.z << "\n";
    if (!loc_json.empty()) {
      UsageResult ur;
      ur.q_hat = res.q_hat;
      ur.best_index = res.coarse_best;
      ur.costs = res.coarse_costs;
      io::write_text(loc_json, io::usage_result_to_json(ur, res.coarse));
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
