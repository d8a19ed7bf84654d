#pragma once

#include <cmath>
#include <vector>

#include "emitloc/random.hpp"
#include "emitloc/types.hpp"

namespace emitloc {

/// Cartesian position in meters.
struct Position {
  double x{0.0};
  double y{0.0};
  double z{0.0};

  friend bool operator==(const Position&, const Position&) = default;
};

inline Position operator-(const Position& a, const Position& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Position operator+(const Position& a, const Position& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }

inline double norm(const Position& p) { return std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z); }
inline double distance(const Position& a, const Position& b) { return norm(a - b); }
inline double squared_distance(const Position& a, const Position& b) {
  const Position d = a - b;
  return d.x * d.x + d.y * d.y + d.z * d.z;
}

/// Line-of-sight propagation delay ||q - p|| / c in seconds.
inline double toa(const Position& q, const Position& p) { return distance(q, p) / kSpeedOfLight; }

struct Scenario {
  Position emitter;
  std::vector<Position> stations;
};

/// Throws ValidationError unless M >= 2, stations are distinct and the
/// emitter does not sit on a station.
void validate(const Scenario& s);

/// Placement protocol: emitter in a disc, station m in the m-th annular
/// segment of the ring [station_radius_min, station_radius_max].
struct GeometryConfig {
  double emitter_radius{25.0};
  double station_radius_min{45.0};
  double station_radius_max{55.0};
  int num_stations{6};
  double plane_height{0.0};
};

void validate(const GeometryConfig& cfg);

Scenario sample_scenario(const GeometryConfig& cfg, Rng& rng);

}  // namespace emitloc
