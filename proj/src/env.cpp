#include "marlnav/env.hpp"

#include <cmath>
#include <stdexcept>

namespace marlnav {

std::pair<double, double> decode_action(Action a, const ActionSpec& spec) {
  if (a.index < 0 || a.index >= ActionSpec::kNumActions) {
    throw std::out_of_range("action index out of range: " + std::to_string(a.index));
  }
  int speed_idx = a.index / 5;
  int yaw_idx = a.index % 5;
  return {spec.base_speed * spec.speed_multipliers[static_cast<size_t>(speed_idx)],
          spec.base_yaw_rate * spec.yaw_multipliers[static_cast<size_t>(yaw_idx)]};
}

double heading_to(const Pose& pose, const Point2& target) {
  double dx = target.x - pose.position.x;
  double dy = target.y - pose.position.y;
  if (dx == 0.0 && dy == 0.0) return 0.0;
  return wrap_angle(std::atan2(dy, dx) - pose.yaw);
}

double distance_to(const Pose& pose, const Point2& target) {
  return distance(pose.position, target);
}

Pose integrate(const Pose& pose, double speed, double yaw_rate, double dt) {
  Pose out;
  out.yaw = wrap_angle(pose.yaw - yaw_rate * dt);
  out.position.x = pose.position.x + speed * std::cos(out.yaw) * dt;
  out.position.y = pose.position.y + speed * std::sin(out.yaw) * dt;
  return out;
}

const char* to_string(StepEvent e) {
  switch (e) {
    case StepEvent::none: return "none";
    case StepEvent::goal: return "goal";
    case StepEvent::collision: return "collision";
    case StepEvent::timeout: return "timeout";
  }
  return "none";
}

StepEvent step_event_from_string(const std::string& s) {
  if (s == "none") return StepEvent::none;
  if (s == "goal") return StepEvent::goal;
  if (s == "collision") return StepEvent::collision;
  if (s == "timeout") return StepEvent::timeout;
  throw std::invalid_argument("unknown step event: " + s);
}

double compute_reward(double prev_dist, double new_dist, double new_heading,
                      StepEvent event, const RewardConfig& rc) {
  double r = rc.r_step + rc.k_progress * (prev_dist - new_dist) +
             rc.k_heading * std::cos(new_heading);
  if (event == StepEvent::goal) r += rc.r_success;
  if (event == StepEvent::collision) r += rc.r_collision;
  return r;
}

UavEnv::UavEnv(const WorldMap& map, EnvConfig cfg, RewardConfig rc, Rng rng)
    : map_(&map), cfg_(std::move(cfg)), rc_(rc), rng_(rng) {}

int UavEnv::obs_dim(const EnvConfig& cfg) {
  int dim = 2 + cfg.lidar.n_beams;
  if (cfg.opponent_features) dim += 3 + ActionSpec::kNumActions;
  return dim;
}

int UavEnv::obs_dim() const { return obs_dim(cfg_); }

std::vector<double> UavEnv::build_observation(int self_id) const {
  const AgentState& self = agents_[static_cast<size_t>(self_id)];
  const AgentState& other = agents_[static_cast<size_t>(1 - self_id)];

  std::vector<double> obs;
  obs.reserve(static_cast<size_t>(obs_dim()));
  obs.push_back(heading_to(self.pose, self.goal) / kPi);
  obs.push_back(distance_to(self.pose, self.goal) / map_->diagonal());
  for (double r : scan(*map_, self.pose, cfg_.lidar)) {
    obs.push_back(r / cfg_.lidar.max_range);
  }
  if (cfg_.opponent_features) {
    obs.push_back(heading_to(self.pose, other.pose.position) / kPi);
    obs.push_back(distance_to(self.pose, other.pose.position) / map_->diagonal());
    obs.push_back(wrap_angle(other.pose.yaw - self.pose.yaw) / kPi);
    for (int a = 0; a < ActionSpec::kNumActions; ++a) {
      obs.push_back(a == other.last_action.index ? 1.0 : 0.0);
    }
  }
  return obs;
}

std::array<std::vector<double>, 2> UavEnv::reset() {
  auto tasks = sample_tasks(*map_, rng_);
  for (size_t i = 0; i < 2; ++i) {
    AgentState& ag = agents_[i];
    ag.pose.position = tasks[i].start;
    ag.pose.yaw = rng_.uniform(-kPi, kPi);
    ag.goal = tasks[i].goal;
    ag.status = AgentStatus::active;
    ag.last_action = Action{ActionSpec::kStationaryIndex};
    ag.prev_goal_distance = distance_to(ag.pose, ag.goal);
  }
  step_count_ = 0;
  episode_done_ = false;
  for (size_t i = 0; i < 2; ++i) {
    last_obs_[i] = build_observation(static_cast<int>(i));
  }
  return last_obs_;
}

StepOutcome UavEnv::step(const std::array<std::optional<Action>, 2>& actions) {
  if (episode_done_) {
    throw std::logic_error("step called on a finished episode");
  }
  std::array<bool, 2> was_active{};
  for (size_t i = 0; i < 2; ++i) {
    was_active[i] = agents_[i].status == AgentStatus::active;
    if (was_active[i] && !actions[i].has_value()) {
      throw std::logic_error("missing action for active agent " + std::to_string(i + 1));
    }
    if (!was_active[i] && actions[i].has_value()) {
      throw std::logic_error("action supplied for non-active agent " +
                             std::to_string(i + 1));
    }
  }
  step_count_ += 1;

  // Integrate both active agents, agent 1 first.
  for (size_t i = 0; i < 2; ++i) {
    if (!was_active[i]) continue;
    auto [speed, yaw_rate] = decode_action(*actions[i], ActionSpec{});
    agents_[i].pose = integrate(agents_[i].pose, speed, yaw_rate, cfg_.dt);
    agents_[i].last_action = *actions[i];
  }

  // Event detection on the post-step positions. Goal takes precedence over
  // collision; a pair collision marks every active agent that has not just
  // reached its goal.
  std::array<StepEvent, 2> events{StepEvent::none, StepEvent::none};
  std::array<double, 2> new_dist{};
  for (size_t i = 0; i < 2; ++i) {
    if (!was_active[i]) continue;
    new_dist[i] = distance_to(agents_[i].pose, agents_[i].goal);
    if (new_dist[i] < cfg_.goal_radius) {
      events[i] = StepEvent::goal;
    } else if (collides(*map_, agents_[i].pose.position, cfg_.uav_radius)) {
      events[i] = StepEvent::collision;
    }
  }
  if (distance(agents_[0].pose.position, agents_[1].pose.position) <
      2.0 * cfg_.uav_radius) {
    for (size_t i = 0; i < 2; ++i) {
      if (was_active[i] && events[i] != StepEvent::goal) {
        events[i] = StepEvent::collision;
      }
    }
  }
  if (step_count_ >= cfg_.max_steps) {
    for (size_t i = 0; i < 2; ++i) {
      if (was_active[i] && events[i] == StepEvent::none) {
        events[i] = StepEvent::timeout;
      }
    }
  }

  StepOutcome outcome;
  for (size_t i = 0; i < 2; ++i) {
    AgentStepResult& res = outcome.agents[i];
    if (!was_active[i]) {
      res.observation = last_obs_[i];
      res.terminated = true;
      continue;
    }
    AgentState& ag = agents_[i];
    double heading_new = heading_to(ag.pose, ag.goal);
    res.event = events[i];
    res.reward = compute_reward(ag.prev_goal_distance, new_dist[i], heading_new,
                                events[i], rc_);
    ag.prev_goal_distance = new_dist[i];
    switch (events[i]) {
      case StepEvent::goal: ag.status = AgentStatus::reached_goal; break;
      case StepEvent::collision: ag.status = AgentStatus::collided; break;
      case StepEvent::timeout: ag.status = AgentStatus::timed_out; break;
      case StepEvent::none: break;
    }
    res.terminated = ag.status != AgentStatus::active;
    if (!res.terminated) {
      last_obs_[i] = build_observation(static_cast<int>(i));
    }
    res.observation = last_obs_[i];
  }

  episode_done_ = (agents_[0].status != AgentStatus::active &&
                   agents_[1].status != AgentStatus::active) ||
                  step_count_ >= cfg_.max_steps;
  outcome.episode_done = episode_done_;
  return outcome;
}

}  // namespace marlnav
