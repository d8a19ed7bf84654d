#include "emitloc/scenario.hpp"

#include <string>

namespace emitloc {

namespace {

bool finite(const Position& p) { return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z); }

}  // namespace

void validate(const Scenario& s) {
  if (s.stations.size() < 2) throw ValidationError("scenario needs at least two stations");
  if (!finite(s.emitter)) throw ValidationError("emitter position is not finite");
  for (std::size_t i = 0; i < s.stations.size(); ++i) {
    if (!finite(s.stations[i])) throw ValidationError("station " + std::to_string(i) + " is not finite");
    if (s.stations[i] == s.emitter) throw ValidationError("emitter coincides with station " + std::to_string(i));
    for (std::size_t j = 0; j < i; ++j) {
      if (s.stations[i] == s.stations[j])
        throw ValidationError("stations " + std::to_string(j) + " and " + std::to_string(i) + " coincide");
    }
  }
}

void validate(const GeometryConfig& cfg) {
  if (cfg.num_stations < 2) throw ConfigError("geometry: num_stations must be >= 2");
  if (!(cfg.emitter_radius > 0.0 && cfg.emitter_radius < cfg.station_radius_min &&
        cfg.station_radius_min < cfg.station_radius_max))
    throw ConfigError("geometry: need 0 < emitter_radius < station_radius_min < station_radius_max");
  if (!std::isfinite(cfg.plane_height) || !std::isfinite(cfg.station_radius_max))
    throw ConfigError("geometry: non-finite value");
}

Scenario sample_scenario(const GeometryConfig& cfg, Rng& rng) {
  validate(cfg);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Scenario s;

  // Uniform in area: radius ~ R sqrt(u).
  const double r0 = cfg.emitter_radius * std::sqrt(unit(rng));
  const double a0 = kTwoPi * unit(rng);
  s.emitter = {r0 * std::cos(a0), r0 * std::sin(a0), cfg.plane_height};

  const int m_count = cfg.num_stations;
  const double arc = kTwoPi / m_count;
  s.stations.reserve(m_count);
  for (int m = 0; m < m_count; ++m) {
    const double r = cfg.station_radius_min + (cfg.station_radius_max - cfg.station_radius_min) * unit(rng);
    const double a = arc * (m + unit(rng));
    s.stations.push_back({r * std::cos(a), r * std::sin(a), cfg.plane_height});
  }
  return s;
}

}  // namespace emitloc
