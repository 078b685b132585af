#include "marlnav/rollout.hpp"

#include <stdexcept>

namespace marlnav {

EnvPool::EnvPool(const WorldMap& map, const EnvConfig& env_cfg, const RewardConfig& rc,
                 int n_envs, uint64_t seed, uint64_t stream_base) {
  if (n_envs < 1) {
    throw std::invalid_argument("env pool needs at least one environment");
  }
  slots_.reserve(static_cast<size_t>(n_envs));
  for (int i = 0; i < n_envs; ++i) {
    Rng stream = Rng::substream(seed, stream_base + static_cast<uint64_t>(i));
    slots_.emplace_back(UavEnv(map, env_cfg, rc, stream));
  }
  for (Slot& s : slots_) {
    s.current_obs = s.env.reset();
    s.episode_id = allocate_episode_id();
  }
}

namespace {

struct Pending {
  std::vector<double> obs;
  int action = 0;
  double logp = 0.0;
  double value = 0.0;
  double reward = 0.0;
  bool terminal = false;
  int64_t episode_id = 0;
};

}  // namespace

RolloutResult collect_rollout(EnvPool& pool, const Mlp& policy, const Mlp& value,
                              int n, bool parallel) {
  if (n < 1) {
    throw std::invalid_argument("rollout size must be positive");
  }
  const int n_envs = pool.size();
  const int obs_dim = policy.shape.input_dim();
  const int n_actions = policy.shape.output_dim();

  RolloutResult result;
  RolloutStats& stats = result.stats;

  // Per (env, agent) transition streams, concatenated at the end.
  std::vector<std::array<std::vector<Pending>, 2>> streams(
      static_cast<size_t>(n_envs));
  // Observation following each stream's last stored transition; the
  // bootstrap point if that stream ends truncated.
  std::vector<std::array<std::vector<double>, 2>> bootstrap_obs(
      static_cast<size_t>(n_envs));

  int stored = 0;
  std::vector<double> row_obs;
  std::vector<double> row_logits;
  std::vector<double> row_values;
  std::vector<std::array<int, 2>> row_of(static_cast<size_t>(n_envs));
  std::vector<StepOutcome> outcomes(static_cast<size_t>(n_envs));
  std::vector<std::array<std::optional<Action>, 2>> chosen(static_cast<size_t>(n_envs));
  std::vector<std::array<double, 2>> chosen_logp(static_cast<size_t>(n_envs));

  while (stored < n) {
    // Plan which envs act this sweep; the batch cut can fall mid-sweep.
    int remaining = n - stored;
    int stepped = 0;
    int rows = 0;
    for (int e = 0; e < n_envs && remaining > 0; ++e) {
      EnvPool::Slot& s = pool.slot(e);
      int active = 0;
      for (int a = 0; a < 2; ++a) {
        if (s.env.agent(a).status == AgentStatus::active) {
          row_of[static_cast<size_t>(e)][static_cast<size_t>(a)] = rows++;
        } else {
          row_of[static_cast<size_t>(e)][static_cast<size_t>(a)] = -1;
        }
        active += s.env.agent(a).status == AgentStatus::active ? 1 : 0;
      }
      remaining -= std::min(active, remaining);
      stepped = e + 1;
    }

    // Gather observation rows in env-major, agent-minor order.
    row_obs.resize(static_cast<size_t>(rows) * obs_dim);
    for (int e = 0; e < stepped; ++e) {
      EnvPool::Slot& s = pool.slot(e);
      for (int a = 0; a < 2; ++a) {
        int r = row_of[static_cast<size_t>(e)][static_cast<size_t>(a)];
        if (r < 0) continue;
        const std::vector<double>& o = s.current_obs[static_cast<size_t>(a)];
        std::copy(o.begin(), o.end(), row_obs.begin() + static_cast<size_t>(r) * obs_dim);
      }
    }

    // Batched forward passes (row-parallel, order-independent).
    row_logits.resize(static_cast<size_t>(rows) * n_actions);
    row_values.resize(static_cast<size_t>(rows));
    mlp_forward_batch(policy, row_obs.data(), rows, row_logits.data(), parallel);
    mlp_forward_batch(value, row_obs.data(), rows, row_values.data(), parallel);

    // Sample and step each env. Envs are independent (own rng, own state),
    // so this loop parallelizes without affecting results. Exceptions may
    // not escape the omp region; they are stashed and rethrown below.
    std::string sweep_error;
#pragma omp parallel for schedule(static) if (parallel)
    for (int e = 0; e < stepped; ++e) {
      try {
        EnvPool::Slot& s = pool.slot(e);
        chosen[static_cast<size_t>(e)] = {std::nullopt, std::nullopt};
        for (int a = 0; a < 2; ++a) {
          int r = row_of[static_cast<size_t>(e)][static_cast<size_t>(a)];
          if (r < 0) continue;
          auto [idx, logp] = sample_action(
              {&row_logits[static_cast<size_t>(r) * n_actions],
               static_cast<size_t>(n_actions)},
              s.env.rng());
          chosen[static_cast<size_t>(e)][static_cast<size_t>(a)] = Action{idx};
          chosen_logp[static_cast<size_t>(e)][static_cast<size_t>(a)] = logp;
        }
        outcomes[static_cast<size_t>(e)] = s.env.step(chosen[static_cast<size_t>(e)]);
      } catch (const std::exception& ex) {
#pragma omp critical
        sweep_error = ex.what();
      }
    }
    if (!sweep_error.empty()) {
      throw std::runtime_error("rollout aborted: " + sweep_error);
    }

    // Commit transitions in fixed order; resets consume only env-local rng.
    for (int e = 0; e < stepped; ++e) {
      EnvPool::Slot& s = pool.slot(e);
      const StepOutcome& out = outcomes[static_cast<size_t>(e)];
      for (int a = 0; a < 2; ++a) {
        int r = row_of[static_cast<size_t>(e)][static_cast<size_t>(a)];
        if (r < 0) continue;
        const AgentStepResult& res = out.agents[static_cast<size_t>(a)];
        s.episode_reward += res.reward;
        if (res.event == StepEvent::goal) s.episode_goals += 1;
        if (stored < n) {
          Pending t;
          t.obs.assign(row_obs.begin() + static_cast<size_t>(r) * obs_dim,
                       row_obs.begin() + static_cast<size_t>(r + 1) * obs_dim);
          t.action = chosen[static_cast<size_t>(e)][static_cast<size_t>(a)]->index;
          t.logp = chosen_logp[static_cast<size_t>(e)][static_cast<size_t>(a)];
          t.value = row_values[static_cast<size_t>(r)];
          t.reward = res.reward;
          t.terminal = res.terminated;
          t.episode_id = s.episode_id;
          streams[static_cast<size_t>(e)][static_cast<size_t>(a)].push_back(std::move(t));
          stored += 1;
          if (!res.terminated) {
            bootstrap_obs[static_cast<size_t>(e)][static_cast<size_t>(a)] = res.observation;
          }
        }
        // A transition past the cut is dropped; its stream was already cut
        // one step earlier and bootstraps from the observation kept there.
      }
      if (out.episode_done) {
        stats.episodes += 1;
        stats.agent_goals += s.episode_goals;
        stats.episode_reward_sum += s.episode_reward;
        s.episode_reward = 0.0;
        s.episode_goals = 0;
        s.current_obs = s.env.reset();
        s.episode_id = pool.allocate_episode_id();
      } else {
        for (int a = 0; a < 2; ++a) {
          if (s.env.agent(a).status == AgentStatus::active) {
            s.current_obs[static_cast<size_t>(a)] =
                out.agents[static_cast<size_t>(a)].observation;
          }
        }
      }
    }
  }

  TransitionBatch& batch = result.batch;
  batch.obs_dim = obs_dim;
  batch.obs.reserve(static_cast<size_t>(n) * obs_dim);
  for (int e = 0; e < n_envs; ++e) {
    for (int a = 0; a < 2; ++a) {
      auto& stream = streams[static_cast<size_t>(e)][static_cast<size_t>(a)];
      for (size_t t = 0; t < stream.size(); ++t) {
        Pending& p = stream[t];
        batch.obs.insert(batch.obs.end(), p.obs.begin(), p.obs.end());
        batch.actions.push_back(p.action);
        batch.behavior_logp.push_back(p.logp);
        batch.values.push_back(p.value);
        batch.rewards.push_back(p.reward);
        bool is_tail = t + 1 == stream.size();
        bool truncated = is_tail && !p.terminal;
        batch.terminals.push_back(p.terminal ? 1 : 0);
        batch.truncateds.push_back(truncated ? 1 : 0);
        double bootstrap = 0.0;
        if (truncated) {
          bootstrap = mlp_forward_scalar(
              value, bootstrap_obs[static_cast<size_t>(e)][static_cast<size_t>(a)]);
        }
        batch.bootstrap_values.push_back(bootstrap);
        batch.episode_ids.push_back(p.episode_id);
        batch.agent_ids.push_back(a);
      }
    }
  }
  return result;
}

}  // namespace marlnav
