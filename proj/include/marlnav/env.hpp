#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "marlnav/geometry.hpp"
#include "marlnav/rng.hpp"
#include "marlnav/worldmap.hpp"

namespace marlnav {

/// The 15-way discrete action set: 3 forward speeds x 5 yaw rates.
/// Negative yaw rate turns counterclockwise, positive clockwise.
struct ActionSpec {
  double base_speed = 0.5;                                 // m/s
  std::array<double, 3> speed_multipliers{0.0, 1.0, 2.0};
  double base_yaw_rate = kPi / 12.0;                       // rad/s
  std::array<double, 5> yaw_multipliers{-2.0, -1.0, 0.0, 1.0, 2.0};

  static constexpr int kNumActions = 15;
  /// Zero speed, zero yaw rate (index 5*0 + 2).
  static constexpr int kStationaryIndex = 2;
};

struct Action {
  int index = ActionSpec::kStationaryIndex;
};

/// Maps an action index to (forward speed, yaw rate).
/// index = 5 * speed_idx + yaw_idx, speed-major.
std::pair<double, double> decode_action(Action a, const ActionSpec& spec);

/// Counterclockwise rotation needed for the pose to face the target,
/// wrapped into [-pi, pi). Returns 0 for a coincident target.
double heading_to(const Pose& pose, const Point2& target);

double distance_to(const Pose& pose, const Point2& target);

/// Rotate-then-translate kinematics. The commanded yaw rate is
/// clockwise-positive, so it is subtracted from the ccw-positive yaw.
Pose integrate(const Pose& pose, double speed, double yaw_rate, double dt);

struct EnvConfig {
  double dt = 0.5;          // seconds per step
  int max_steps = 400;      // per episode
  double goal_radius = 0.5; // m
  double uav_radius = 0.3;  // m
  LidarConfig lidar;
  bool opponent_features = true;
};

struct RewardConfig {
  double r_success = 100.0;
  double r_collision = -100.0;
  double r_step = -0.05;
  double k_progress = 5.0;  // per meter of distance reduction
  double k_heading = 0.05;  // weight on cos(heading)
};

enum class StepEvent { none, goal, collision, timeout };
enum class AgentStatus { active, reached_goal, collided, timed_out };

const char* to_string(StepEvent e);
StepEvent step_event_from_string(const std::string& s);

/// reward = r_step + k_progress*(prev - new) + k_heading*cos(heading)
///          + r_success on goal, + r_collision on collision, +0 on timeout.
double compute_reward(double prev_dist, double new_dist, double new_heading,
                      StepEvent event, const RewardConfig& rc);

struct AgentState {
  Pose pose;
  Point2 goal;
  AgentStatus status = AgentStatus::active;
  Action last_action{ActionSpec::kStationaryIndex};
  double prev_goal_distance = 0.0;
};

struct AgentStepResult {
  std::vector<double> observation;
  double reward = 0.0;
  bool terminated = false;
  StepEvent event = StepEvent::none;
};

struct StepOutcome {
  std::array<AgentStepResult, 2> agents;
  bool episode_done = false;
};

/// Two-agent episodic environment. Observation layout per agent:
///   [0] heading to goal / pi
///   [1] goal distance / arena diagonal
///   [2 .. 2+B)  lidar ranges / max_range
/// and, when opponent features are on:
///   [2+B]   heading to the other agent / pi
///   [3+B]   distance to the other agent / arena diagonal
///   [4+B]   relative heading of the other agent / pi
///   [5+B .. 20+B)  one-hot of the other agent's last executed action
class UavEnv {
 public:
  UavEnv(const WorldMap& map, EnvConfig cfg, RewardConfig rc, Rng rng);

  /// Samples tasks and initial yaws; both agents become active.
  std::array<std::vector<double>, 2> reset();

  /// Advances one step. Exactly the active agents must carry an action.
  StepOutcome step(const std::array<std::optional<Action>, 2>& actions);

  std::vector<double> build_observation(int self_id) const;

  int obs_dim() const;
  static int obs_dim(const EnvConfig& cfg);

  bool episode_done() const { return episode_done_; }
  int step_count() const { return step_count_; }
  const AgentState& agent(int i) const { return agents_[static_cast<size_t>(i)]; }
  const std::vector<double>& last_observation(int i) const {
    return last_obs_[static_cast<size_t>(i)];
  }
  const WorldMap& map() const { return *map_; }
  const EnvConfig& config() const { return cfg_; }
  const RewardConfig& reward_config() const { return rc_; }
  Rng& rng() { return rng_; }

 private:
  const WorldMap* map_;
  EnvConfig cfg_;
  RewardConfig rc_;
  Rng rng_;
  std::array<AgentState, 2> agents_;
  std::array<std::vector<double>, 2> last_obs_;
  int step_count_ = 0;
  bool episode_done_ = true;  // must reset() before stepping
};

}  // namespace marlnav
