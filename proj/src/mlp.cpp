#include "marlnav/mlp.hpp"

#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace marlnav {

size_t MlpShape::weight_offset(size_t layer) const {
  size_t off = 0;
  for (size_t l = 0; l < layer; ++l) {
    off += static_cast<size_t>(dims[l]) * dims[l + 1] + dims[l + 1];
  }
  return off;
}

size_t MlpShape::bias_offset(size_t layer) const {
  return weight_offset(layer) + static_cast<size_t>(dims[layer]) * dims[layer + 1];
}

size_t MlpShape::param_count() const { return weight_offset(layer_count()); }

namespace {

// Orthonormal k x n row set via modified Gram-Schmidt on Gaussian draws.
std::vector<double> orthonormal_rows(size_t k, size_t n, Rng& rng) {
  std::vector<double> q(k * n);
  for (size_t i = 0; i < k; ++i) {
    double* row = &q[i * n];
    while (true) {
      for (size_t j = 0; j < n; ++j) row[j] = rng.normal();
      for (size_t p = 0; p < i; ++p) {
        const double* prev = &q[p * n];
        double dot = 0.0;
        for (size_t j = 0; j < n; ++j) dot += row[j] * prev[j];
        for (size_t j = 0; j < n; ++j) row[j] -= dot * prev[j];
      }
      double norm = 0.0;
      for (size_t j = 0; j < n; ++j) norm += row[j] * row[j];
      norm = std::sqrt(norm);
      if (norm > 1e-6) {
        for (size_t j = 0; j < n; ++j) row[j] /= norm;
        break;
      }
    }
  }
  return q;
}

}  // namespace

Mlp make_mlp(std::vector<int> dims, Rng& rng, double final_gain) {
  if (dims.size() < 2) {
    throw std::invalid_argument("network needs at least one layer");
  }
  Mlp net;
  net.shape.dims = std::move(dims);
  net.params.assign(net.shape.param_count(), 0.0);
  for (size_t l = 0; l < net.shape.layer_count(); ++l) {
    size_t in = static_cast<size_t>(net.shape.dims[l]);
    size_t out = static_cast<size_t>(net.shape.dims[l + 1]);
    double gain = (l + 1 == net.shape.layer_count()) ? final_gain : std::sqrt(2.0);
    double* w = &net.params[net.shape.weight_offset(l)];
    if (in >= out) {
      // Columns orthonormal in R^in.
      auto q = orthonormal_rows(out, in, rng);
      for (size_t i = 0; i < in; ++i) {
        for (size_t j = 0; j < out; ++j) w[i * out + j] = gain * q[j * in + i];
      }
    } else {
      auto q = orthonormal_rows(in, out, rng);
      for (size_t i = 0; i < in; ++i) {
        for (size_t j = 0; j < out; ++j) w[i * out + j] = gain * q[i * out + j];
      }
    }
    // Biases stay zero.
  }
  return net;
}

void mlp_forward(const Mlp& net, std::span<const double> input, ForwardCache& cache) {
  const MlpShape& s = net.shape;
  if (static_cast<int>(input.size()) != s.input_dim()) {
    throw std::invalid_argument("input dimension mismatch");
  }
  cache.act.resize(s.dims.size());
  cache.act[0].assign(input.begin(), input.end());
  for (size_t l = 0; l < s.layer_count(); ++l) {
    size_t in = static_cast<size_t>(s.dims[l]);
    size_t out = static_cast<size_t>(s.dims[l + 1]);
    const double* w = &net.params[s.weight_offset(l)];
    const double* b = &net.params[s.bias_offset(l)];
    const std::vector<double>& a = cache.act[l];
    std::vector<double>& z = cache.act[l + 1];
    z.assign(b, b + out);
    for (size_t i = 0; i < in; ++i) {
      double ai = a[i];
      const double* wrow = &w[i * out];
      for (size_t j = 0; j < out; ++j) z[j] += ai * wrow[j];
    }
    if (l + 1 < s.layer_count()) {
      for (size_t j = 0; j < out; ++j) z[j] = std::tanh(z[j]);
    }
  }
}

std::vector<double> mlp_forward(const Mlp& net, std::span<const double> input) {
  ForwardCache cache;
  mlp_forward(net, input, cache);
  return cache.act.back();
}

double mlp_forward_scalar(const Mlp& net, std::span<const double> input) {
  return mlp_forward(net, input)[0];
}

void mlp_backward(const Mlp& net, const ForwardCache& cache,
                  std::span<const double> d_output, std::span<double> grad) {
  const MlpShape& s = net.shape;
  if (grad.size() != net.params.size()) {
    throw std::invalid_argument("gradient buffer shape mismatch");
  }
  std::vector<double> d(d_output.begin(), d_output.end());
  for (size_t l = s.layer_count(); l-- > 0;) {
    size_t in = static_cast<size_t>(s.dims[l]);
    size_t out = static_cast<size_t>(s.dims[l + 1]);
    const double* w = &net.params[s.weight_offset(l)];
    double* dw = &grad[s.weight_offset(l)];
    double* db = &grad[s.bias_offset(l)];
    const std::vector<double>& a = cache.act[l];

    for (size_t j = 0; j < out; ++j) db[j] += d[j];
    std::vector<double> d_prev(in, 0.0);
    for (size_t i = 0; i < in; ++i) {
      double ai = a[i];
      const double* wrow = &w[i * out];
      double* dwrow = &dw[i * out];
      double acc = 0.0;
      for (size_t j = 0; j < out; ++j) {
        dwrow[j] += ai * d[j];
        acc += wrow[j] * d[j];
      }
      d_prev[i] = acc;
    }
    if (l > 0) {
      // Through the tanh of the previous layer.
      for (size_t i = 0; i < in; ++i) d_prev[i] *= 1.0 - a[i] * a[i];
    }
    d = std::move(d_prev);
  }
}

void mlp_forward_batch(const Mlp& net, const double* inputs, int n_rows,
                       double* outputs, bool parallel) {
  int in_dim = net.shape.input_dim();
  int out_dim = net.shape.output_dim();
  if (parallel) {
#pragma omp parallel
    {
      ForwardCache cache;
#pragma omp for schedule(static)
      for (int r = 0; r < n_rows; ++r) {
        mlp_forward(net, {inputs + static_cast<size_t>(r) * in_dim,
                          static_cast<size_t>(in_dim)}, cache);
        const std::vector<double>& out = cache.act.back();
        std::copy(out.begin(), out.end(), outputs + static_cast<size_t>(r) * out_dim);
      }
    }
  } else {
    ForwardCache cache;
    for (int r = 0; r < n_rows; ++r) {
      mlp_forward(net, {inputs + static_cast<size_t>(r) * in_dim,
                        static_cast<size_t>(in_dim)}, cache);
      const std::vector<double>& out = cache.act.back();
      std::copy(out.begin(), out.end(), outputs + static_cast<size_t>(r) * out_dim);
    }
  }
}

std::vector<double> log_softmax(std::span<const double> logits) {
  double max_logit = logits[0];
  for (double v : logits) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("non-finite logit");
    }
    max_logit = std::max(max_logit, v);
  }
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - max_logit);
  double lse = max_logit + std::log(sum);
  std::vector<double> out(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

std::pair<int, double> sample_action(std::span<const double> logits, Rng& rng) {
  std::vector<double> logp = log_softmax(logits);
  double u = rng.uniform();
  double cum = 0.0;
  int idx = static_cast<int>(logits.size()) - 1;
  for (size_t i = 0; i < logp.size(); ++i) {
    cum += std::exp(logp[i]);
    if (u < cum) {
      idx = static_cast<int>(i);
      break;
    }
  }
  return {idx, logp[static_cast<size_t>(idx)]};
}

int greedy_action(std::span<const double> logits) {
  int best = 0;
  for (size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[static_cast<size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

void adam_update(std::span<double> params, std::span<const double> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw std::invalid_argument("optimizer shape mismatch");
  }
  state.step += 1;
  double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
    double m_hat = state.m[i] / bc1;
    double v_hat = state.v[i] / bc2;
    params[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

double global_norm(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return std::sqrt(sum);
}

void clip_global_norm(std::span<double> grads, double max_norm) {
  double norm = global_norm(grads);
  if (norm > max_norm && norm > 0.0) {
    double scale = max_norm / norm;
    for (double& g : grads) g *= scale;
  }
}

}  // namespace marlnav
