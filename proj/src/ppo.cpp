#include "marlnav/ppo.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "marlnav/metrics.hpp"

namespace marlnav {

GaeResult compute_gae(const TransitionBatch& batch, double gamma, double lambda) {
  size_t n = batch.size();
  GaeResult out;
  out.advantages.resize(n);
  out.value_targets.resize(n);

  size_t start = 0;
  while (start < n) {
    size_t end = start + 1;
    while (end < n && batch.episode_ids[end] == batch.episode_ids[start] &&
           batch.agent_ids[end] == batch.agent_ids[start]) {
      ++end;
    }
    size_t last = end - 1;
    if (!batch.terminals[last] && !batch.truncateds[last]) {
      throw std::invalid_argument(
          "malformed episode segment: must end terminal or truncated");
    }
    for (size_t t = start; t < last; ++t) {
      if (batch.terminals[t] || batch.truncateds[t]) {
        throw std::invalid_argument(
            "malformed episode segment: terminal/truncation before its end");
      }
    }
    double next_adv = 0.0;
    for (size_t t = end; t-- > start;) {
      double delta;
      if (batch.terminals[t]) {
        delta = batch.rewards[t] - batch.values[t];
        next_adv = delta;
      } else {
        double v_next = (t == last) ? batch.bootstrap_values[t] : batch.values[t + 1];
        delta = batch.rewards[t] + gamma * v_next - batch.values[t];
        next_adv = delta + gamma * lambda * next_adv;
      }
      out.advantages[t] = next_adv;
      out.value_targets[t] = next_adv + batch.values[t];
    }
    start = end;
  }
  return out;
}

void normalize_advantages(std::span<double> advantages) {
  if (advantages.empty()) return;
  double mean = 0.0;
  for (double a : advantages) mean += a;
  mean /= static_cast<double>(advantages.size());
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  var /= static_cast<double>(advantages.size());
  double denom = std::sqrt(var) + 1e-8;
  for (double& a : advantages) a = (a - mean) / denom;
}

double clipped_surrogate(double ratio, double advantage, double clip_epsilon) {
  double clamped = std::clamp(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
  return std::min(ratio * advantage, clamped * advantage);
}

std::vector<std::pair<int, int>> make_minibatches(int n, int minibatch_size) {
  std::vector<std::pair<int, int>> out;
  for (int start = 0; start < n; start += minibatch_size) {
    out.emplace_back(start, std::min(start + minibatch_size, n));
  }
  return out;
}

namespace {

constexpr int kGradBlockSize = 256;

struct BlockScratch {
  ForwardCache policy_cache;
  ForwardCache value_cache;
  std::vector<double> dz;
};

struct BlockResult {
  std::vector<double> policy_grad;
  std::vector<double> value_grad;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  std::string error;
};

}  // namespace

MinibatchStats ppo_minibatch_gradients(
    const Mlp& policy, const Mlp& value, const TransitionBatch& batch,
    std::span<const int> indices, std::span<const double> advantages,
    std::span<const double> value_targets, const PpoConfig& cfg,
    std::vector<double>& policy_grad, std::vector<double>& value_grad, bool parallel) {
  const int m = static_cast<int>(indices.size());
  if (m == 0) {
    throw std::invalid_argument("empty minibatch");
  }
  const int n_blocks = (m + kGradBlockSize - 1) / kGradBlockSize;
  const double inv_m = 1.0 / static_cast<double>(m);
  const int n_actions = policy.shape.output_dim();

  std::vector<BlockResult> blocks(static_cast<size_t>(n_blocks));

#pragma omp parallel for schedule(static) if (parallel)
  for (int b = 0; b < n_blocks; ++b) {
    BlockResult& res = blocks[static_cast<size_t>(b)];
    res.policy_grad.assign(policy.params.size(), 0.0);
    res.value_grad.assign(value.params.size(), 0.0);
    BlockScratch scratch;
    scratch.dz.resize(static_cast<size_t>(n_actions));

    int lo = b * kGradBlockSize;
    int hi = std::min(lo + kGradBlockSize, m);
    for (int s = lo; s < hi; ++s) {
      const size_t t = static_cast<size_t>(indices[static_cast<size_t>(s)]);
      std::span<const double> obs{batch.obs_row(t), static_cast<size_t>(batch.obs_dim)};

      mlp_forward(policy, obs, scratch.policy_cache);
      const std::vector<double>& logits = scratch.policy_cache.act.back();
      bool finite = true;
      for (double v : logits) finite = finite && std::isfinite(v);
      if (!finite) {
        res.error = "non-finite policy logits at transition " + std::to_string(t);
        break;
      }
      std::vector<double> logp = log_softmax(logits);
      const int a = batch.actions[t];
      const double ratio = std::exp(logp[static_cast<size_t>(a)] - batch.behavior_logp[t]);
      if (!std::isfinite(ratio)) {
        res.error = "non-finite probability ratio at transition " + std::to_string(t);
        break;
      }
      const double adv = advantages[t];
      const double surr_raw = ratio * adv;
      const double clamped = std::clamp(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon);
      const double surr_clip = clamped * adv;
      res.policy_loss += -std::min(surr_raw, surr_clip);

      // d(policy loss)/d(logp_a): the min picks the raw branch on ties.
      double d_lpa = 0.0;
      if (surr_raw <= surr_clip) {
        d_lpa = -adv * ratio;
      } else if (ratio > 1.0 - cfg.clip_epsilon && ratio < 1.0 + cfg.clip_epsilon) {
        d_lpa = -adv * ratio;
      }

      double entropy = 0.0;
      for (int k = 0; k < n_actions; ++k) {
        entropy -= std::exp(logp[static_cast<size_t>(k)]) * logp[static_cast<size_t>(k)];
      }
      res.entropy += entropy;

      for (int k = 0; k < n_actions; ++k) {
        const double pk = std::exp(logp[static_cast<size_t>(k)]);
        double dz = d_lpa * ((k == a ? 1.0 : 0.0) - pk);
        dz += cfg.entropy_coef * pk * (logp[static_cast<size_t>(k)] + entropy);
        scratch.dz[static_cast<size_t>(k)] = dz * inv_m;
      }
      mlp_backward(policy, scratch.policy_cache, scratch.dz, res.policy_grad);

      mlp_forward(value, obs, scratch.value_cache);
      const double v_pred = scratch.value_cache.act.back()[0];
      const double v_err = v_pred - value_targets[t];
      res.value_loss += v_err * v_err;
      const double dv = cfg.value_coef * 2.0 * v_err * inv_m;
      mlp_backward(value, scratch.value_cache, std::span<const double>(&dv, 1),
                   res.value_grad);
    }
  }

  for (const BlockResult& res : blocks) {
    if (!res.error.empty()) {
      throw DivergenceError(res.error);
    }
  }

  // Deterministic reduction: block partials summed in block order.
  policy_grad.assign(policy.params.size(), 0.0);
  value_grad.assign(value.params.size(), 0.0);
  MinibatchStats stats;
  for (const BlockResult& res : blocks) {
    for (size_t i = 0; i < policy_grad.size(); ++i) policy_grad[i] += res.policy_grad[i];
    for (size_t i = 0; i < value_grad.size(); ++i) value_grad[i] += res.value_grad[i];
    stats.policy_loss += res.policy_loss;
    stats.value_loss += res.value_loss;
    stats.entropy += res.entropy;
  }
  stats.policy_loss *= inv_m;
  stats.value_loss *= inv_m;
  stats.entropy *= inv_m;
  return stats;
}

namespace {

uint64_t env_stream_base(int stage_index, int n_envs) {
  return 1000 + static_cast<uint64_t>(stage_index) * static_cast<uint64_t>(n_envs);
}

void adam_slice(std::span<double> params, std::span<const double> grads,
                AdamState& st, size_t offset, double bc1, double bc2) {
  for (size_t i = 0; i < params.size(); ++i) {
    size_t j = offset + i;
    st.m[j] = st.beta1 * st.m[j] + (1.0 - st.beta1) * grads[i];
    st.v[j] = st.beta2 * st.v[j] + (1.0 - st.beta2) * grads[i] * grads[i];
    double m_hat = st.m[j] / bc1;
    double v_hat = st.v[j] / bc2;
    params[i] -= st.learning_rate * m_hat / (std::sqrt(v_hat) + st.epsilon);
  }
}

}  // namespace

Trainer::Trainer(const WorldMap& map, const EnvConfig& env_cfg, const RewardConfig& rc,
                 const PpoConfig& ppo_cfg, uint64_t seed, int workers)
    : env_cfg_(env_cfg),
      reward_cfg_(rc),
      cfg_(ppo_cfg),
      seed_(seed),
      workers_(workers),
      shuffle_rng_(Rng::substream(seed, 1)) {
  int obs_dim = UavEnv::obs_dim(env_cfg_);
  std::vector<int> policy_dims{obs_dim};
  std::vector<int> value_dims{obs_dim};
  for (int h : kHiddenLayers) {
    policy_dims.push_back(h);
    value_dims.push_back(h);
  }
  policy_dims.push_back(ActionSpec::kNumActions);
  value_dims.push_back(1);

  Rng init_rng = Rng::substream(seed, 0);
  policy_ = make_mlp(policy_dims, init_rng, 0.01);
  value_ = make_mlp(value_dims, init_rng, 1.0);
  optimizer_ = AdamState(policy_.params.size() + value_.params.size());
  optimizer_.learning_rate = cfg_.learning_rate;
  pool_ = std::make_unique<EnvPool>(map, env_cfg_, reward_cfg_, cfg_.n_envs, seed_,
                                    env_stream_base(0, cfg_.n_envs));
}

void Trainer::switch_map(const WorldMap& map) {
  stage_index_ += 1;
  pool_ = std::make_unique<EnvPool>(map, env_cfg_, reward_cfg_, cfg_.n_envs, seed_,
                                    env_stream_base(stage_index_, cfg_.n_envs));
}

IterationReport Trainer::train_iteration() {
  auto t0 = std::chrono::steady_clock::now();
  const bool parallel = workers_ > 1;

  RolloutResult rollout =
      collect_rollout(*pool_, policy_, value_, cfg_.train_batch_size, parallel);
  GaeResult gae = compute_gae(rollout.batch, cfg_.gamma, cfg_.gae_lambda);
  normalize_advantages(gae.advantages);

  const int n = static_cast<int>(rollout.batch.size());
  std::vector<int> indices(static_cast<size_t>(n));
  std::iota(indices.begin(), indices.end(), 0);

  std::vector<double> policy_grad;
  std::vector<double> value_grad;
  MinibatchStats totals;
  int updates = 0;

  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    for (int i = n - 1; i > 0; --i) {
      int j = static_cast<int>(shuffle_rng_.uniform_int(static_cast<uint64_t>(i) + 1));
      std::swap(indices[static_cast<size_t>(i)], indices[static_cast<size_t>(j)]);
    }
    for (auto [lo, hi] : make_minibatches(n, cfg_.minibatch_size)) {
      MinibatchStats stats = ppo_minibatch_gradients(
          policy_, value_, rollout.batch,
          std::span<const int>(&indices[static_cast<size_t>(lo)],
                               static_cast<size_t>(hi - lo)),
          gae.advantages, gae.value_targets, cfg_, policy_grad, value_grad, parallel);

      // Joint global-norm clip over both networks.
      double np = global_norm(policy_grad);
      double nv = global_norm(value_grad);
      double norm = std::sqrt(np * np + nv * nv);
      if (norm > cfg_.grad_clip_norm && norm > 0.0) {
        double scale = cfg_.grad_clip_norm / norm;
        for (double& g : policy_grad) g *= scale;
        for (double& g : value_grad) g *= scale;
      }

      optimizer_.step += 1;
      double bc1 = 1.0 - std::pow(optimizer_.beta1, static_cast<double>(optimizer_.step));
      double bc2 = 1.0 - std::pow(optimizer_.beta2, static_cast<double>(optimizer_.step));
      adam_slice(policy_.params, policy_grad, optimizer_, 0, bc1, bc2);
      adam_slice(value_.params, value_grad, optimizer_, policy_.params.size(), bc1, bc2);

      totals.policy_loss += stats.policy_loss;
      totals.value_loss += stats.value_loss;
      totals.entropy += stats.entropy;
      updates += 1;
    }
  }

  iteration_ += 1;
  IterationReport report;
  report.iteration = iteration_;
  report.episodes = rollout.stats.episodes;
  report.agent_goals = rollout.stats.agent_goals;
  report.goal_rate = goal_rate(rollout.stats.episodes, rollout.stats.agent_goals);
  report.mean_episode_reward =
      rollout.stats.episodes > 0
          ? rollout.stats.episode_reward_sum / rollout.stats.episodes
          : 0.0;
  report.policy_loss = totals.policy_loss / updates;
  report.value_loss = totals.value_loss / updates;
  report.entropy = totals.entropy / updates;
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace marlnav
