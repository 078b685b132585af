#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "marlnav/geometry.hpp"
#include "marlnav/rng.hpp"

namespace marlnav {

/// Beam geometry of the simulated rangefinder.
struct LidarConfig {
  int n_beams = 24;
  double max_range = 10.0;
  double fov = 2.0 * kPi;  // full sweep, radians
};

/// Raised for unreadable, malformed, or invariant-violating map documents.
class MapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Clearance required around every spawn cell (vehicle radius + goal radius
/// at their default values). Checked at load time.
inline constexpr double kSpawnClearance = 0.8;

/// Bounded rectangular arena with axis-aligned rectangular obstacles and
/// candidate start/goal cells. Immutable after load; all queries are pure.
struct WorldMap {
  std::string name;
  double width = 0.0;
  double height = 0.0;
  std::vector<Rect> obstacles;
  std::vector<Point2> spawn_cells;

  double diagonal() const { return std::hypot(width, height); }

  bool inside_arena(const Point2& p) const {
    return p.x >= 0.0 && p.x <= width && p.y >= 0.0 && p.y <= height;
  }
};

bool operator==(const WorldMap& a, const WorldMap& b);

/// Parses a map document; throws MapError on malformed input or any
/// invariant violation (unknown keys, out-of-bounds obstacles, spawn cells
/// without clearance, fewer than 4 spawn cells).
WorldMap parse_map(const std::string& json_text);
WorldMap load_map(const std::string& path);

std::string serialize_map(const WorldMap& map);
void save_map(const WorldMap& map, const std::string& path);

/// Validates every WorldMap invariant; throws MapError on the first violation.
void validate_map(const WorldMap& map);

/// Distance from origin along the ray at world angle `angle` (ccw from +x)
/// to the nearest arena wall or obstacle edge, capped at cfg.max_range.
/// Origin must be inside the arena and outside all obstacles.
double raycast(const WorldMap& map, const Point2& origin, double angle,
               const LidarConfig& cfg);

/// n_beams distances; beam k has world angle yaw + fov*(k/n_beams) - fov/2.
std::vector<double> scan(const WorldMap& map, const Pose& pose, const LidarConfig& cfg);

/// True iff the disc of the given radius around p intersects any obstacle or
/// leaves the arena.
bool collides(const WorldMap& map, const Point2& p, double radius);

struct TaskPair {
  Point2 start;
  Point2 goal;
};

/// Draws 4 distinct spawn cells without replacement and assigns
/// (start1, goal1, start2, goal2). Requires at least 4 spawn cells.
std::array<TaskPair, 2> sample_tasks(const WorldMap& map, Rng& rng);

}  // namespace marlnav
