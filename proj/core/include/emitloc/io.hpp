#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "emitloc/channel.hpp"
#include "emitloc/crlb.hpp"
#include "emitloc/estimator.hpp"
#include "emitloc/scenario.hpp"
#include "emitloc/signal.hpp"

namespace emitloc::io {

// Scenario: {"emitter": [x, y, z], "stations": [[x, y, z], ...]} in meters.
std::string scenario_to_json(const Scenario& s);
Scenario scenario_from_json(std::string_view text);

// Pdp: {"delta_tau_s": ..., "variances": [...]}.
std::string pdp_to_json(const Pdp& pdp);
Pdp pdp_from_json(std::string_view text);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

/// Observation file pair: `path` holds little-endian float64 (re, im)
/// interleaved, station-major, sample index k + K d inside each station;
/// `path` + ".json" holds {"M", "K", "D", "Fs", "noise_variance"}.
void write_observations(const ObservationSet& obs, const std::filesystem::path& path);
ObservationSet read_observations(const std::filesystem::path& path);
std::filesystem::path sidecar_path(const std::filesystem::path& path);

/// Channel covariances cached on disk, keyed by the profile contents, K, Fs
/// and the factorization choice.
class CovarianceCache {
 public:
  explicit CovarianceCache(std::filesystem::path dir);

  /// eps_rank < 0 selects the grid factor; otherwise the eigen factor.
  ChannelCovariance get(const Pdp& pdp, const FrequencyGrid& grid, double eps_rank = -1.0);

  static std::uint64_t key(const Pdp& pdp, const FrequencyGrid& grid, double eps_rank);
  std::filesystem::path file_for(std::uint64_t key) const;

  int hits() const { return hits_; }
  int misses() const { return misses_; }

 private:
  std::filesystem::path dir_;
  int hits_{0};
  int misses_{0};
};

void write_covariance(const ChannelCovariance& cov, const std::filesystem::path& path);
ChannelCovariance read_covariance(const std::filesystem::path& path);

/// Estimate, argmax index and the full cost map with candidate coordinates.
std::string usage_result_to_json(const UsageResult& result, const CandidateSet& candidates);

std::string fim_to_json(const FimResult& fim);
std::string crlb_to_json(const CrlbResult& crlb);

}  // namespace emitloc::io
