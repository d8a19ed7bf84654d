#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "emitloc/channel.hpp"
#include "emitloc/estimator.hpp"
#include "emitloc/gpm.hpp"
#include "emitloc/scenario.hpp"

namespace emitloc {

enum class SignalType { White, Flat };
enum class ChannelType { Exp, Cluster };
enum class PdpSource { Analytic, Empirical };
enum class SweepAxis { Snr, Stations, DelaySpread };
enum class EstimatorKind { Usage, UsageCwc, Baseline };

std::string to_string(SweepAxis a);
std::string to_string(EstimatorKind e);
SweepAxis parse_axis(const std::string& s);
EstimatorKind parse_estimator(const std::string& s);

struct SignalConfig {
  SignalType type{SignalType::White};
  int order{256};
};

struct ChannelConfig {
  ChannelType type{ChannelType::Exp};
  ExpPdpParams exp{ExpPdpParams::exp2()};
  ClusterParams cluster{};
  PdpSource pdp_source{PdpSource::Analytic};
  int empirical_count{1000};
  // Grid of the empirical profile for the cluster generator.
  double pdp_delta_tau{1e-9};
  // Relative eigenvalue cut for the eigen factor, used when the profile has
  // more taps than frequency bins.
  double eps_rank{1e-10};
};

struct RunConfig {
  SweepAxis axis{SweepAxis::Snr};
  // SNR in dB, station counts, or mu1 in nanoseconds depending on the axis.
  std::vector<double> axis_values{10.0, 20.0, 30.0};

  SignalConfig signal{};
  ChannelConfig channel{};
  GeometryConfig geometry{};
  GridSearchConfig grid{};
  GpmConfig gpm{};

  int K{16};
  int D{10};
  double fs{50e6};
  double snr_db{25.0};  // used when the axis is not SNR

  int num_configs{10};
  int trials_per_config{20};
  std::uint64_t seed{1};

  std::vector<EstimatorKind> estimators{EstimatorKind::UsageCwc, EstimatorKind::Baseline};
  bool known_magnitudes{false};
  bool crlb{true};

  unsigned threads{0};  // 0 = hardware concurrency
  bool keep_trials{false};
  std::string cache_dir;  // empty: no on-disk covariance cache
};

/// Throws ConfigError for anything that would fail later in a run.
void validate(const RunConfig& cfg);

std::string run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const std::string& text);

struct EstimateRecord {
  EstimatorKind estimator{EstimatorKind::UsageCwc};
  Position estimate;
  double squared_error{0.0};
  double seconds{0.0};
};

struct TrialRecord {
  int axis_index{0};
  int config_id{0};
  int trial_id{0};
  Position truth;
  std::vector<EstimateRecord> estimates;
};

struct SweepPoint {
  double axis_value{0.0};
  std::vector<double> rmse;          // per estimator, in cfg.estimators order
  std::vector<double> mean_seconds;  // per estimator
  double crlb_m{std::numeric_limits<double>::quiet_NaN()};
  int n_trials{0};
};

struct SweepResult {
  RunConfig config;
  std::vector<SweepPoint> points;
  std::vector<TrialRecord> trials;  // only with keep_trials
};

using ProgressCallback = std::function<void(int axis_index, int done, int total)>;

SweepResult run_monte_carlo(const RunConfig& cfg, const ProgressCallback& progress = {});

/// Profile used by the channel model at one axis point (delay-spread axis
/// rescales mu0_nlos to keep the NLOS energy fixed).
ExpPdpParams exp_params_for_axis(const RunConfig& cfg, double axis_value);

/// "axis,estimator,rmse_m,crlb_m,n_trials" followed by one row per axis
/// point and estimator.
std::string results_csv(const SweepResult& result);
std::string results_json(const SweepResult& result);
void emit_results(const SweepResult& result, const std::filesystem::path& csv_path,
                  const std::filesystem::path& json_path);

}  // namespace emitloc
