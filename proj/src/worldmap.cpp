#include "marlnav/worldmap.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace marlnav {

using nlohmann::json;

bool operator==(const WorldMap& a, const WorldMap& b) {
  return a.name == b.name && a.width == b.width && a.height == b.height &&
         a.obstacles == b.obstacles && a.spawn_cells == b.spawn_cells;
}

namespace {

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const char* where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw MapError("unknown key \"" + it.key() + "\" in " + where);
    }
  }
}

double require_number(const json& obj, const char* key, const char* where) {
  if (!obj.contains(key) || !obj[key].is_number()) {
    throw MapError(std::string("missing or non-numeric \"") + key + "\" in " + where);
  }
  return obj[key].get<double>();
}

}  // namespace

void validate_map(const WorldMap& map) {
  if (!(map.width > 0.0) || !(map.height > 0.0) || !std::isfinite(map.width) ||
      !std::isfinite(map.height)) {
    throw MapError("map size must be positive and finite");
  }
  for (size_t i = 0; i < map.obstacles.size(); ++i) {
    const Rect& r = map.obstacles[i];
    std::ostringstream tag;
    tag << "obstacle " << i;
    if (!std::isfinite(r.x_min) || !std::isfinite(r.y_min) || !std::isfinite(r.x_max) ||
        !std::isfinite(r.y_max)) {
      throw MapError(tag.str() + " has non-finite coordinates");
    }
    if (!r.valid()) {
      throw MapError(tag.str() + " is degenerate (min must be < max)");
    }
    if (r.x_min < 0.0 || r.y_min < 0.0 || r.x_max > map.width || r.y_max > map.height) {
      throw MapError(tag.str() + " extends outside the arena bounds");
    }
  }
  if (map.spawn_cells.size() < 4) {
    throw MapError("map needs at least 4 spawn cells, got " +
                   std::to_string(map.spawn_cells.size()));
  }
  for (size_t i = 0; i < map.spawn_cells.size(); ++i) {
    const Point2& c = map.spawn_cells[i];
    std::ostringstream tag;
    tag << "spawn cell " << i;
    if (!std::isfinite(c.x) || !std::isfinite(c.y)) {
      throw MapError(tag.str() + " has non-finite coordinates");
    }
    if (collides(map, c, kSpawnClearance)) {
      throw MapError(tag.str() + " lacks " + std::to_string(kSpawnClearance) +
                     " m clearance from obstacles and walls");
    }
  }
}

WorldMap parse_map(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw MapError(std::string("malformed map document: ") + e.what());
  }
  if (!doc.is_object()) {
    throw MapError("map document must be a JSON object");
  }
  reject_unknown_keys(doc, {"name", "width", "height", "obstacles", "spawn_cells"},
                      "map document");

  WorldMap map;
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) throw MapError("\"name\" must be a string");
    map.name = doc["name"].get<std::string>();
  }
  map.width = require_number(doc, "width", "map document");
  map.height = require_number(doc, "height", "map document");

  if (doc.contains("obstacles")) {
    if (!doc["obstacles"].is_array()) throw MapError("\"obstacles\" must be an array");
    for (const auto& o : doc["obstacles"]) {
      if (!o.is_object()) throw MapError("obstacle entries must be objects");
      reject_unknown_keys(o, {"x_min", "y_min", "x_max", "y_max"}, "obstacle");
      Rect r;
      r.x_min = require_number(o, "x_min", "obstacle");
      r.y_min = require_number(o, "y_min", "obstacle");
      r.x_max = require_number(o, "x_max", "obstacle");
      r.y_max = require_number(o, "y_max", "obstacle");
      map.obstacles.push_back(r);
    }
  }
  if (doc.contains("spawn_cells")) {
    if (!doc["spawn_cells"].is_array()) throw MapError("\"spawn_cells\" must be an array");
    for (const auto& c : doc["spawn_cells"]) {
      if (!c.is_object()) throw MapError("spawn cell entries must be objects");
      reject_unknown_keys(c, {"x", "y"}, "spawn cell");
      Point2 p;
      p.x = require_number(c, "x", "spawn cell");
      p.y = require_number(c, "y", "spawn cell");
      map.spawn_cells.push_back(p);
    }
  }
  validate_map(map);
  return map;
}

WorldMap load_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw MapError("cannot open map file: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_map(buf.str());
}

std::string serialize_map(const WorldMap& map) {
  json doc;
  doc["name"] = map.name;
  doc["width"] = map.width;
  doc["height"] = map.height;
  doc["obstacles"] = json::array();
  for (const Rect& r : map.obstacles) {
    doc["obstacles"].push_back(
        {{"x_min", r.x_min}, {"y_min", r.y_min}, {"x_max", r.x_max}, {"y_max", r.y_max}});
  }
  doc["spawn_cells"] = json::array();
  for (const Point2& c : map.spawn_cells) {
    doc["spawn_cells"].push_back({{"x", c.x}, {"y", c.y}});
  }
  return doc.dump(2) + "\n";
}

void save_map(const WorldMap& map, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw MapError("cannot write map file: " + path);
  }
  out << serialize_map(map);
}

namespace {

// Entry distance of a ray into an axis-aligned box (slab method); returns
// +inf when the ray misses. Assumes the origin is outside the box.
double ray_box_entry(const Point2& o, double dx, double dy, const Rect& r) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  double t_near = -inf;
  double t_far = inf;

  if (dx != 0.0) {
    double t1 = (r.x_min - o.x) / dx;
    double t2 = (r.x_max - o.x) / dx;
    if (t1 > t2) std::swap(t1, t2);
    t_near = std::max(t_near, t1);
    t_far = std::min(t_far, t2);
  } else if (o.x < r.x_min || o.x > r.x_max) {
    return inf;
  }
  if (dy != 0.0) {
    double t1 = (r.y_min - o.y) / dy;
    double t2 = (r.y_max - o.y) / dy;
    if (t1 > t2) std::swap(t1, t2);
    t_near = std::max(t_near, t1);
    t_far = std::min(t_far, t2);
  } else if (o.y < r.y_min || o.y > r.y_max) {
    return inf;
  }
  if (t_near > t_far || t_far < 0.0) return inf;
  return t_near > 0.0 ? t_near : inf;
}

}  // namespace

double raycast(const WorldMap& map, const Point2& origin, double angle,
               const LidarConfig& cfg) {
  if (!map.inside_arena(origin)) {
    throw std::invalid_argument("raycast origin outside the arena");
  }
  for (const Rect& r : map.obstacles) {
    if (r.contains(origin)) {
      throw std::invalid_argument("raycast origin inside an obstacle");
    }
  }

  double dx = std::cos(angle);
  double dy = std::sin(angle);

  // Exit distance through the arena walls (origin is inside the box).
  double t_wall = std::numeric_limits<double>::infinity();
  if (dx > 0.0) t_wall = std::min(t_wall, (map.width - origin.x) / dx);
  if (dx < 0.0) t_wall = std::min(t_wall, (0.0 - origin.x) / dx);
  if (dy > 0.0) t_wall = std::min(t_wall, (map.height - origin.y) / dy);
  if (dy < 0.0) t_wall = std::min(t_wall, (0.0 - origin.y) / dy);

  double t_hit = t_wall;
  for (const Rect& r : map.obstacles) {
    t_hit = std::min(t_hit, ray_box_entry(origin, dx, dy, r));
  }
  return std::min(t_hit, cfg.max_range);
}

std::vector<double> scan(const WorldMap& map, const Pose& pose, const LidarConfig& cfg) {
  std::vector<double> ranges(static_cast<size_t>(cfg.n_beams));
  for (int k = 0; k < cfg.n_beams; ++k) {
    double beam_angle =
        pose.yaw + cfg.fov * (static_cast<double>(k) / cfg.n_beams) - cfg.fov / 2.0;
    ranges[static_cast<size_t>(k)] = raycast(map, pose.position, beam_angle, cfg);
  }
  return ranges;
}

bool collides(const WorldMap& map, const Point2& p, double radius) {
  if (p.x - radius < 0.0 || p.y - radius < 0.0 || p.x + radius > map.width ||
      p.y + radius > map.height) {
    return true;
  }
  for (const Rect& r : map.obstacles) {
    if (r.distance_to(p) < radius) return true;
  }
  return false;
}

std::array<TaskPair, 2> sample_tasks(const WorldMap& map, Rng& rng) {
  size_t n = map.spawn_cells.size();
  if (n < 4) {
    throw std::invalid_argument("sample_tasks needs at least 4 spawn cells");
  }
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  // Partial Fisher-Yates: the first four entries are a uniform draw
  // without replacement.
  for (size_t i = 0; i < 4; ++i) {
    size_t j = i + static_cast<size_t>(rng.uniform_int(n - i));
    std::swap(idx[i], idx[j]);
  }
  return {TaskPair{map.spawn_cells[idx[0]], map.spawn_cells[idx[1]]},
          TaskPair{map.spawn_cells[idx[2]], map.spawn_cells[idx[3]]}};
}

}  // namespace marlnav
