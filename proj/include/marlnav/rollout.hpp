#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "marlnav/env.hpp"
#include "marlnav/mlp.hpp"

namespace marlnav {

/// Parallel arrays over agent-transitions. Segments (one per episode and
/// agent) are contiguous and end with a terminal or truncation flag.
struct TransitionBatch {
  int obs_dim = 0;
  std::vector<double> obs;  // size() x obs_dim
  std::vector<int> actions;
  std::vector<double> behavior_logp;
  std::vector<double> values;
  std::vector<double> rewards;
  std::vector<uint8_t> terminals;
  std::vector<uint8_t> truncateds;
  std::vector<double> bootstrap_values;  // value at the cut, truncated tails only
  std::vector<int64_t> episode_ids;
  std::vector<int> agent_ids;

  size_t size() const { return actions.size(); }
  const double* obs_row(size_t t) const { return &obs[t * static_cast<size_t>(obs_dim)]; }
};

/// Goal statistics over the episodes that completed inside a rollout window.
struct RolloutStats {
  int episodes = 0;
  int agent_goals = 0;
  double episode_reward_sum = 0.0;  // both agents, summed per episode
};

/// A set of independent environments advanced round-robin. Each env owns its
/// random stream, so stepping order across envs never changes outcomes.
class EnvPool {
 public:
  EnvPool(const WorldMap& map, const EnvConfig& env_cfg, const RewardConfig& rc,
          int n_envs, uint64_t seed, uint64_t stream_base);

  struct Slot {
    UavEnv env;
    int64_t episode_id = 0;
    double episode_reward = 0.0;
    int episode_goals = 0;
    std::array<std::vector<double>, 2> current_obs;

    explicit Slot(UavEnv e) : env(std::move(e)) {}
  };

  int size() const { return static_cast<int>(slots_.size()); }
  Slot& slot(int i) { return slots_[static_cast<size_t>(i)]; }
  const Slot& slot(int i) const { return slots_[static_cast<size_t>(i)]; }
  int64_t allocate_episode_id() { return next_episode_id_++; }

 private:
  std::vector<Slot> slots_;
  int64_t next_episode_id_ = 0;
};

struct RolloutResult {
  TransitionBatch batch;
  RolloutStats stats;
};

/// Steps the pool until exactly n agent-transitions are stored, resetting
/// episodes as they finish. Episodes cut by the window are marked truncated
/// and bootstrapped with the value network at the final observation.
///
/// The batch is merged env-major then agent-major, so single- and
/// multi-worker collection produce identical batches for the same seed.
RolloutResult collect_rollout(EnvPool& pool, const Mlp& policy, const Mlp& value,
                              int n, bool parallel);

}  // namespace marlnav
