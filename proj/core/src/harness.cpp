#include "emitloc/harness.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "emitloc/baseline.hpp"
#include "emitloc/crlb.hpp"
#include "emitloc/cwc.hpp"
#include "emitloc/io.hpp"
#include "emitloc/parallel.hpp"
#include "emitloc/signal.hpp"

namespace emitloc {

using nlohmann::json;

std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::Snr: return "snr_db";
    case SweepAxis::Stations: return "stations";
    case SweepAxis::DelaySpread: return "mu1_ns";
  }
  return "?";
}

std::string to_string(EstimatorKind e) {
  switch (e) {
    case EstimatorKind::Usage: return "usage";
    case EstimatorKind::UsageCwc: return "usage_cwc";
    case EstimatorKind::Baseline: return "baseline";
  }
  return "?";
}

SweepAxis parse_axis(const std::string& s) {
  if (s == "snr_db" || s == "snr") return SweepAxis::Snr;
  if (s == "stations" || s == "M") return SweepAxis::Stations;
  if (s == "mu1_ns" || s == "delayspread") return SweepAxis::DelaySpread;
  throw ConfigError("unknown sweep axis '" + s + "'");
}

EstimatorKind parse_estimator(const std::string& s) {
  if (s == "usage") return EstimatorKind::Usage;
  if (s == "usage_cwc") return EstimatorKind::UsageCwc;
  if (s == "baseline") return EstimatorKind::Baseline;
  throw ConfigError("unknown estimator '" + s + "'");
}

void validate(const RunConfig& cfg) {
  if (cfg.axis_values.empty()) throw ConfigError("run: axis has no values");
  if (cfg.estimators.empty()) throw ConfigError("run: at least one estimator is required");
  if (cfg.num_configs < 1 || cfg.trials_per_config < 1) throw ConfigError("run: trial counts must be >= 1");
  if (cfg.K < 1 || cfg.D < 1) throw ConfigError("run: K and D must be >= 1");
  validate(FrequencyGrid{cfg.K, cfg.fs});
  validate(cfg.geometry);
  validate(cfg.grid);
  validate(cfg.gpm);
  if (cfg.grid.half_extent < cfg.geometry.emitter_radius)
    throw ConfigError("run: grid does not cover the emitter disc");
  if (cfg.signal.type == SignalType::Flat && (cfg.signal.order < 2 || (cfg.signal.order & (cfg.signal.order - 1))))
    throw ConfigError("run: PSK order must be a power of two >= 2");
  if (cfg.channel.type == ChannelType::Exp) {
    validate(cfg.channel.exp);
  } else {
    validate(cfg.channel.cluster);
    if (cfg.channel.pdp_source == PdpSource::Analytic)
      throw ConfigError("run: the cluster channel needs an empirical profile");
    if (!(cfg.channel.pdp_delta_tau > 0.0)) throw ConfigError("run: pdp_delta_tau must be > 0");
  }
  if (cfg.channel.pdp_source == PdpSource::Empirical && cfg.channel.empirical_count < 1)
    throw ConfigError("run: empirical_count must be >= 1");
  if (!(cfg.channel.eps_rank >= 0.0)) throw ConfigError("run: eps_rank must be >= 0");
  for (double v : cfg.axis_values) {
    if (!std::isfinite(v)) throw ConfigError("run: non-finite axis value");
    if (cfg.axis == SweepAxis::Stations && (v < 2.0 || v != std::floor(v)))
      throw ConfigError("run: station counts must be integers >= 2");
    if (cfg.axis == SweepAxis::DelaySpread && !(v > 0.0)) throw ConfigError("run: mu1 values must be > 0");
  }
  if (cfg.axis == SweepAxis::DelaySpread && cfg.channel.type != ChannelType::Exp)
    throw ConfigError("run: the delay-spread sweep needs the exponential channel");
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json to_json(const GpmConfig& g) {
  return {{"beta", g.beta},
          {"rel_tol", g.rel_tol},
          {"max_iters", g.max_iters},
          {"power_tol", g.power_tol},
          {"power_max_iters", g.power_max_iters}};
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

std::string run_config_to_json(const RunConfig& c) {
  json j;
  j["axis"] = to_string(c.axis);
  j["axis_values"] = c.axis_values;
  j["signal"] = {{"type", c.signal.type == SignalType::White ? "white" : "flat"}, {"order", c.signal.order}};
  const auto& e = c.channel.exp;
  const auto& cl = c.channel.cluster;
  j["channel"] = {
      {"type", c.channel.type == ChannelType::Exp ? "exp" : "cluster"},
      {"exp",
       {{"mu0_los", e.mu0_los}, {"mu0_nlos", e.mu0_nlos}, {"mu1_s", e.mu1}, {"delta_tau_s", e.delta_tau}, {"L", e.L}}},
      {"cluster",
       {{"cluster_rate_hz", cl.cluster_rate},
        {"ray_rate_hz", cl.ray_rate},
        {"cluster_decay_s", cl.cluster_decay},
        {"ray_decay_s", cl.ray_decay},
        {"max_delay_s", cl.max_delay},
        {"omega0", cl.omega0},
        {"max_clusters", cl.max_clusters}}},
      {"pdp_source", c.channel.pdp_source == PdpSource::Analytic ? "analytic" : "empirical"},
      {"empirical_count", c.channel.empirical_count},
      {"pdp_delta_tau_s", c.channel.pdp_delta_tau},
      {"eps_rank", c.channel.eps_rank}};
  j["geometry"] = {{"emitter_radius_m", c.geometry.emitter_radius},
                   {"station_radius_min_m", c.geometry.station_radius_min},
                   {"station_radius_max_m", c.geometry.station_radius_max},
                   {"num_stations", c.geometry.num_stations},
                   {"plane_height_m", c.geometry.plane_height}};
  j["grid"] = {{"center_x_m", c.grid.center_x},     {"center_y_m", c.grid.center_y},
               {"extent_m", c.grid.half_extent},    {"step_m", c.grid.step},
               {"refine_levels", c.grid.refine_levels}, {"refine_factor", c.grid.refine_factor}};
  j["gpm"] = to_json(c.gpm);
  j["K"] = c.K;
  j["D"] = c.D;
  j["fs_hz"] = c.fs;
  j["snr_db"] = c.snr_db;
  j["num_configs"] = c.num_configs;
  j["trials_per_config"] = c.trials_per_config;
  j["seed"] = c.seed;
  j["estimators"] = json::array();
  for (auto est : c.estimators) j["estimators"].push_back(to_string(est));
  j["known_magnitudes"] = c.known_magnitudes;
  j["crlb"] = c.crlb;
  j["threads"] = c.threads;
  j["keep_trials"] = c.keep_trials;
  j["cache_dir"] = c.cache_dir;
  return j.dump(2);
}

RunConfig run_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  // A results file carries the configuration it ran with.
  if (j.is_object() && j.contains("config") && j.contains("points")) j = j.at("config");
  RunConfig c;
  try {
    if (j.contains("axis")) c.axis = parse_axis(j.at("axis").get<std::string>());
    read_opt(j, "axis_values", c.axis_values);
    if (j.contains("signal")) {
      const auto& s = j.at("signal");
      if (s.contains("type")) {
        const auto t = s.at("type").get<std::string>();
        if (t != "white" && t != "flat") throw ConfigError("run config: signal type must be white or flat");
        c.signal.type = t == "white" ? SignalType::White : SignalType::Flat;
      }
      read_opt(s, "order", c.signal.order);
    }
    if (j.contains("channel")) {
      const auto& ch = j.at("channel");
      if (ch.contains("type")) {
        const auto t = ch.at("type").get<std::string>();
        if (t != "exp" && t != "cluster") throw ConfigError("run config: channel type must be exp or cluster");
        c.channel.type = t == "exp" ? ChannelType::Exp : ChannelType::Cluster;
      }
      if (ch.contains("exp")) {
        const auto& e = ch.at("exp");
        read_opt(e, "mu0_los", c.channel.exp.mu0_los);
        read_opt(e, "mu0_nlos", c.channel.exp.mu0_nlos);
        read_opt(e, "mu1_s", c.channel.exp.mu1);
        read_opt(e, "delta_tau_s", c.channel.exp.delta_tau);
        read_opt(e, "L", c.channel.exp.L);
      }
      if (ch.contains("cluster")) {
        const auto& cl = ch.at("cluster");
        read_opt(cl, "cluster_rate_hz", c.channel.cluster.cluster_rate);
        read_opt(cl, "ray_rate_hz", c.channel.cluster.ray_rate);
        read_opt(cl, "cluster_decay_s", c.channel.cluster.cluster_decay);
        read_opt(cl, "ray_decay_s", c.channel.cluster.ray_decay);
        read_opt(cl, "max_delay_s", c.channel.cluster.max_delay);
        read_opt(cl, "omega0", c.channel.cluster.omega0);
        read_opt(cl, "max_clusters", c.channel.cluster.max_clusters);
      }
      if (ch.contains("pdp_source")) {
        const auto t = ch.at("pdp_source").get<std::string>();
        if (t != "analytic" && t != "empirical")
          throw ConfigError("run config: pdp_source must be analytic or empirical");
        c.channel.pdp_source = t == "analytic" ? PdpSource::Analytic : PdpSource::Empirical;
      }
      read_opt(ch, "empirical_count", c.channel.empirical_count);
      read_opt(ch, "pdp_delta_tau_s", c.channel.pdp_delta_tau);
      read_opt(ch, "eps_rank", c.channel.eps_rank);
    }
    if (j.contains("geometry")) {
      const auto& g = j.at("geometry");
      read_opt(g, "emitter_radius_m", c.geometry.emitter_radius);
      read_opt(g, "station_radius_min_m", c.geometry.station_radius_min);
      read_opt(g, "station_radius_max_m", c.geometry.station_radius_max);
      read_opt(g, "num_stations", c.geometry.num_stations);
      read_opt(g, "plane_height_m", c.geometry.plane_height);
    }
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      read_opt(g, "center_x_m", c.grid.center_x);
      read_opt(g, "center_y_m", c.grid.center_y);
      read_opt(g, "extent_m", c.grid.half_extent);
      read_opt(g, "step_m", c.grid.step);
      read_opt(g, "refine_levels", c.grid.refine_levels);
      read_opt(g, "refine_factor", c.grid.refine_factor);
    }
    if (j.contains("gpm")) {
      const auto& g = j.at("gpm");
      read_opt(g, "beta", c.gpm.beta);
      read_opt(g, "rel_tol", c.gpm.rel_tol);
      read_opt(g, "max_iters", c.gpm.max_iters);
      read_opt(g, "power_tol", c.gpm.power_tol);
      read_opt(g, "power_max_iters", c.gpm.power_max_iters);
    }
    read_opt(j, "K", c.K);
    read_opt(j, "D", c.D);
    read_opt(j, "fs_hz", c.fs);
    read_opt(j, "snr_db", c.snr_db);
    read_opt(j, "num_configs", c.num_configs);
    read_opt(j, "trials_per_config", c.trials_per_config);
    read_opt(j, "seed", c.seed);
    if (j.contains("estimators")) {
      c.estimators.clear();
      for (const auto& e : j.at("estimators")) c.estimators.push_back(parse_estimator(e.get<std::string>()));
    }
    read_opt(j, "known_magnitudes", c.known_magnitudes);
    read_opt(j, "crlb", c.crlb);
    read_opt(j, "threads", c.threads);
    read_opt(j, "keep_trials", c.keep_trials);
    read_opt(j, "cache_dir", c.cache_dir);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------
// Monte Carlo

ExpPdpParams exp_params_for_axis(const RunConfig& cfg, double axis_value) {
  ExpPdpParams p = cfg.channel.exp;
  if (cfg.axis != SweepAxis::DelaySpread) return p;
  auto nlos_sum = [&](double mu1) {
    double s = 0.0;
    for (int l = 1; l < p.L; ++l) s += std::exp(-l * p.delta_tau / mu1);
    return s;
  };
  const double target = p.mu0_nlos * nlos_sum(p.mu1);
  p.mu1 = axis_value * 1e-9;
  const double s = nlos_sum(p.mu1);
  p.mu0_nlos = s > 0.0 ? target / s : 0.0;
  return p;
}

namespace {

struct PointModel {
  int M{0};
  double snr_db{0.0};
  Pdp true_pdp;   // exp channel generator profile
  Pdp model_pdp;  // profile the estimators and the bound see
  ChannelCovariance cov;
};

PointModel build_point_model(const RunConfig& cfg, int axis_index) {
  const double v = cfg.axis_values[axis_index];
  PointModel pm;
  pm.M = cfg.axis == SweepAxis::Stations ? static_cast<int>(v) : cfg.geometry.num_stations;
  pm.snr_db = cfg.axis == SweepAxis::Snr ? v : cfg.snr_db;
  const FrequencyGrid grid{cfg.K, cfg.fs};

  if (cfg.channel.type == ChannelType::Exp) pm.true_pdp = exp_pdp(exp_params_for_axis(cfg, v));

  if (cfg.channel.pdp_source == PdpSource::Analytic) {
    pm.model_pdp = pm.true_pdp;
  } else {
    // The profile only changes along the delay-spread axis.
    const std::uint64_t stream = cfg.axis == SweepAxis::DelaySpread ? static_cast<std::uint64_t>(axis_index) : 0;
    Rng rng = make_rng(cfg.seed, stream, 0, "pdp");
    std::vector<ChannelRealization> draws;
    draws.reserve(cfg.channel.empirical_count);
    if (cfg.channel.type == ChannelType::Exp) {
      for (int i = 0; i < cfg.channel.empirical_count; ++i) draws.push_back(sample_rayleigh_channel(pm.true_pdp, rng));
      pm.model_pdp = empirical_pdp(draws, pm.true_pdp.delta_tau, pm.true_pdp.size());
    } else {
      for (int i = 0; i < cfg.channel.empirical_count; ++i)
        draws.push_back(sample_cluster_channel(cfg.channel.cluster, rng));
      const int n_h = static_cast<int>(std::ceil(cfg.channel.cluster.max_delay / cfg.channel.pdp_delta_tau)) + 1;
      pm.model_pdp = empirical_pdp(draws, cfg.channel.pdp_delta_tau, n_h);
    }
  }

  const bool truncate = pm.model_pdp.size() > cfg.K;
  const double eps = truncate ? cfg.channel.eps_rank : -1.0;
  if (!cfg.cache_dir.empty()) {
    io::CovarianceCache cache(cfg.cache_dir);
    pm.cov = cache.get(pm.model_pdp, grid, eps);
  } else {
    pm.cov = truncate ? channel_covariance_eigen(pm.model_pdp, grid, eps) : channel_covariance(pm.model_pdp, grid);
  }
  return pm;
}

struct TrialOutput {
  TrialRecord record;
  std::optional<FimResult> fim;
};

TrialOutput run_trial(const RunConfig& cfg, const PointModel& pm, int axis_index, int config_id, int trial_id) {
  const FrequencyGrid grid{cfg.K, cfg.fs};
  GeometryConfig geo = cfg.geometry;
  geo.num_stations = pm.M;
  Rng geo_rng = make_rng(cfg.seed, static_cast<std::uint64_t>(config_id), 0, "geometry");
  const Scenario scenario = sample_scenario(geo, geo_rng);

  Rng ch_rng = make_rng(cfg.seed, config_id, trial_id, "channel");
  std::vector<ChannelRealization> channels;
  channels.reserve(pm.M);
  for (int m = 0; m < pm.M; ++m) {
    channels.push_back(cfg.channel.type == ChannelType::Exp ? sample_rayleigh_channel(pm.true_pdp, ch_rng)
                                                            : sample_cluster_channel(cfg.channel.cluster, ch_rng));
  }

  Rng sig_rng = make_rng(cfg.seed, config_id, trial_id, "signal");
  const TransmitSignal x = cfg.signal.type == SignalType::White ? gen_white(cfg.K, cfg.D, sig_rng)
                                                                : gen_flat_psk(cfg.K, cfg.D, cfg.signal.order, sig_rng);
  const double noise_var = noise_variance_for_snr(x, pm.model_pdp.total_power(), pm.snr_db);
  Rng noise_rng = make_rng(cfg.seed, config_id, trial_id, "noise");
  const ObservationSet obs = synthesize_observations(scenario, channels, x, grid, noise_var, noise_rng);

  const std::vector<ChannelCovariance> covs(pm.M, pm.cov);
  GridSearchConfig search = cfg.grid;
  search.z = cfg.geometry.plane_height;
  const UsageOptions one_thread{1, false};

  TrialOutput out;
  out.record.axis_index = axis_index;
  out.record.config_id = config_id;
  out.record.trial_id = trial_id;
  out.record.truth = scenario.emitter;

  std::optional<RVector> known;
  if (cfg.known_magnitudes) known = x.magnitudes();

  for (EstimatorKind kind : cfg.estimators) {
    const auto t0 = std::chrono::steady_clock::now();
    Position q_hat;
    if (kind == EstimatorKind::Baseline) {
      const CrossPowerSurface surface(obs, scenario.stations);
      q_hat = refined_grid_search(search, [&](const CandidateSet& c) { return surface.scores(c); }).q_hat;
    } else {
      const bool combine = kind == EstimatorKind::UsageCwc;
      const ObservationSet used = combine ? cwc_combine(obs).combined : obs;
      MagnitudeEstimate gamma_hat;
      if (known) {
        gamma_hat.values = combine ? combined_magnitudes(*known, cfg.K, cfg.D) : *known;
      } else {
        gamma_hat = estimate_magnitudes(used, covs);
      }
      const UsageProblem problem(used, covs, scenario.stations, gamma_hat);
      q_hat = refined_grid_search(search, [&](const CandidateSet& c) {
                return problem.evaluate(c, cfg.gpm, one_thread);
              }).q_hat;
    }
    const auto t1 = std::chrono::steady_clock::now();
    out.record.estimates.push_back(
        {kind, q_hat, squared_distance(q_hat, scenario.emitter), std::chrono::duration<double>(t1 - t0).count()});
  }

  if (cfg.crlb) {
    FimOptions fo;
    fo.known_magnitudes = cfg.known_magnitudes;
    out.fim = fim(x, covs, scenario, grid, noise_var, fo);
  }
  return out;
}

}  // namespace

SweepResult run_monte_carlo(const RunConfig& cfg, const ProgressCallback& progress) {
  validate(cfg);
  SweepResult result;
  result.config = cfg;
  const int total = cfg.num_configs * cfg.trials_per_config;
  const std::size_t n_est = cfg.estimators.size();
  unsigned threads = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.threads;

  for (int a = 0; a < static_cast<int>(cfg.axis_values.size()); ++a) {
    const PointModel pm = build_point_model(cfg, a);
    std::vector<double> sq_sum(n_est, 0.0), sec_sum(n_est, 0.0);
    std::optional<FimResult> fim_sum;

    // Batches keep memory bounded; reduction runs in trial order so the
    // sums do not depend on the thread count.
    const int batch = static_cast<int>(std::max(1u, threads) * 4);
    for (int start = 0; start < total; start += batch) {
      const int count = std::min(batch, total - start);
      std::vector<TrialOutput> outs(count);
      parallel_for(static_cast<std::size_t>(count), threads, [&](std::size_t i) {
        const int n = start + static_cast<int>(i);
        outs[i] = run_trial(cfg, pm, a, n / cfg.trials_per_config, n % cfg.trials_per_config);
      });
      for (auto& o : outs) {
        for (std::size_t e = 0; e < n_est; ++e) {
          sq_sum[e] += o.record.estimates[e].squared_error;
          sec_sum[e] += o.record.estimates[e].seconds;
        }
        if (o.fim) {
          if (!fim_sum) {
            fim_sum = *o.fim;
          } else {
            fim_sum->J += o.fim->J;
          }
        }
        if (cfg.keep_trials) result.trials.push_back(std::move(o.record));
      }
      if (progress) progress(a, start + count, total);
    }

    SweepPoint pt;
    pt.axis_value = cfg.axis_values[a];
    pt.n_trials = total;
    for (std::size_t e = 0; e < n_est; ++e) {
      pt.rmse.push_back(std::sqrt(sq_sum[e] / total));
      pt.mean_seconds.push_back(sec_sum[e] / total);
    }
    if (fim_sum) {
      fim_sum->J /= static_cast<double>(total);
      try {
        pt.crlb_m = std::sqrt(crlb_position(*fim_sum, true).sigma_q_sq);
      } catch (const RankDeficiencyError&) {
        pt.crlb_m = std::numeric_limits<double>::infinity();
      }
    }
    result.points.push_back(std::move(pt));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Output

namespace {

std::string fmt_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream ss;
  ss << std::setprecision(10) << v;
  return ss.str();
}

}  // namespace

std::string results_csv(const SweepResult& r) {
  std::ostringstream ss;
  ss << "axis,estimator,rmse_m,crlb_m,n_trials\n";
  for (const auto& pt : r.points)
    for (std::size_t e = 0; e < r.config.estimators.size(); ++e)
      ss << fmt_num(pt.axis_value) << ',' << to_string(r.config.estimators[e]) << ',' << fmt_num(pt.rmse[e]) << ','
         << fmt_num(pt.crlb_m) << ',' << pt.n_trials << '\n';
  return ss.str();
}

std::string results_json(const SweepResult& r) {
  json j;
  j["config"] = json::parse(run_config_to_json(r.config));
  j["axis"] = to_string(r.config.axis);
  j["points"] = json::array();
  for (const auto& pt : r.points) {
    json p;
    p["axis_value"] = pt.axis_value;
    p["n_trials"] = pt.n_trials;
    p["crlb_m"] = std::isfinite(pt.crlb_m) ? json(pt.crlb_m) : json(nullptr);
    for (std::size_t e = 0; e < r.config.estimators.size(); ++e) {
      const auto name = to_string(r.config.estimators[e]);
      p["rmse_m"][name] = pt.rmse[e];
      p["mean_seconds"][name] = pt.mean_seconds[e];
    }
    j["points"].push_back(std::move(p));
  }
  if (!r.trials.empty()) {
    j["trials"] = json::array();
    for (const auto& t : r.trials) {
      json tj;
      tj["axis_index"] = t.axis_index;
      tj["config_id"] = t.config_id;
      tj["trial_id"] = t.trial_id;
      tj["truth"] = {t.truth.x, t.truth.y, t.truth.z};
      for (const auto& e : t.estimates) {
        tj["estimates"][to_string(e.estimator)] = {{"position", {e.estimate.x, e.estimate.y, e.estimate.z}},
                                                   {"squared_error_m2", e.squared_error},
                                                   {"seconds", e.seconds}};
      }
      j["trials"].push_back(std::move(tj));
    }
  }
  return j.dump(2);
}

void emit_results(const SweepResult& result, const std::filesystem::path& csv_path,
                  const std::filesystem::path& json_path) {
  if (!csv_path.empty()) io::write_text(csv_path, results_csv(result));
  if (!json_path.empty()) io::write_text(json_path, results_json(result));
}

}  // namespace emitloc
