#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "marlnav/rollout.hpp"

namespace marlnav {

struct PpoConfig {
  int train_batch_size = 20000;  // agent-transitions per iteration
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_epsilon = 0.2;
  int epochs = 10;
  int minibatch_size = 2000;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double grad_clip_norm = 0.5;
  double learning_rate = 3e-4;
  int n_envs = 8;
  int checkpoint_interval = 25;  // iterations between checkpoints
};

/// Signals a non-finite probability ratio or logits during the update.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> value_targets;
};

/// Backward GAE recursion per episode segment. Truncated tails continue
/// into the stored bootstrap value; terminal tails stop.
GaeResult compute_gae(const TransitionBatch& batch, double gamma, double lambda);

/// In-place shift/scale to zero mean and unit standard deviation
/// (1e-8 guard on the denominator).
void normalize_advantages(std::span<double> advantages);

/// Per-sample clipped surrogate: min(r*A, clamp(r, 1-eps, 1+eps)*A).
double clipped_surrogate(double ratio, double advantage, double clip_epsilon);

struct MinibatchStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
};

/// Mean losses over the minibatch plus gradients of
///   policy_loss + value_coef * value_loss - entropy_coef * entropy
/// w.r.t. both networks. Gradient buffers are overwritten.
///
/// Samples are accumulated in fixed 256-sample blocks reduced in block
/// order, so the parallel path is bit-identical to the serial one for any
/// thread count. Throws DivergenceError on non-finite ratios.
MinibatchStats ppo_minibatch_gradients(
    const Mlp& policy, const Mlp& value, const TransitionBatch& batch,
    std::span<const int> indices, std::span<const double> advantages,
    std::span<const double> value_targets, const PpoConfig& cfg,
    std::vector<double>& policy_grad, std::vector<double>& value_grad, bool parallel);

/// Contiguous [start, end) ranges covering 0..n in chunks of minibatch_size.
std::vector<std::pair<int, int>> make_minibatches(int n, int minibatch_size);

struct IterationReport {
  int iteration = 0;
  int episodes = 0;
  int agent_goals = 0;
  double goal_rate = 0.0;
  double mean_episode_reward = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double wall_clock_seconds = 0.0;
};

/// Hidden layer widths shared by the policy and value networks.
inline const std::vector<int> kHiddenLayers = {64, 64};

/// PPO training state: shared policy for both agents, a value network, one
/// Adam optimizer over both parameter sets, and the environment pool.
class Trainer {
 public:
  Trainer(const WorldMap& map, const EnvConfig& env_cfg, const RewardConfig& rc,
          const PpoConfig& ppo_cfg, uint64_t seed, int workers = 1);

  /// Stage switch: rebuilds the env pool on the new map with fresh streams;
  /// policy, value, and optimizer state carry over untouched.
  void switch_map(const WorldMap& map);

  /// Rollout + GAE + clipped-surrogate epochs; returns iteration stats.
  IterationReport train_iteration();

  const Mlp& policy() const { return policy_; }
  const Mlp& value() const { return value_; }
  Mlp& policy() { return policy_; }
  Mlp& value() { return value_; }
  AdamState& optimizer() { return optimizer_; }
  const AdamState& optimizer() const { return optimizer_; }
  EnvPool& pool() { return *pool_; }
  Rng& shuffle_rng() { return shuffle_rng_; }
  int iteration() const { return iteration_; }
  int workers() const { return workers_; }
  const PpoConfig& config() const { return cfg_; }

 private:
  EnvConfig env_cfg_;
  RewardConfig reward_cfg_;
  PpoConfig cfg_;
  uint64_t seed_;
  int workers_;
  int stage_index_ = 0;
  int iteration_ = 0;
  Mlp policy_;
  Mlp value_;
  AdamState optimizer_;
  Rng shuffle_rng_;
  std::unique_ptr<EnvPool> pool_;
};

}  // namespace marlnav
