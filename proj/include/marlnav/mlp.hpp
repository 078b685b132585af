#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "marlnav/rng.hpp"

namespace marlnav {

/// Fully-connected network with tanh hidden activations and identity output.
/// Parameters live in one flat vector: for each layer l the weight matrix
/// (fan_in x fan_out, row-major) followed by the bias vector.
struct MlpShape {
  std::vector<int> dims;  // e.g. {44, 64, 64, 15}

  int input_dim() const { return dims.front(); }
  int output_dim() const { return dims.back(); }
  size_t layer_count() const { return dims.size() - 1; }

  size_t weight_offset(size_t layer) const;
  size_t bias_offset(size_t layer) const;
  size_t param_count() const;
};

struct Mlp {
  MlpShape shape;
  std::vector<double> params;
};

/// Orthogonally initialized network: hidden layers scaled by sqrt(2),
/// the final layer by final_gain (small for a near-uniform initial policy).
Mlp make_mlp(std::vector<int> dims, Rng& rng, double final_gain);

/// Post-activation values per layer, reused across forward calls.
struct ForwardCache {
  std::vector<std::vector<double>> act;  // act[0] = input, act[L] = output
};

/// Deterministic forward pass; writes the output into cache.act.back().
void mlp_forward(const Mlp& net, std::span<const double> input, ForwardCache& cache);

std::vector<double> mlp_forward(const Mlp& net, std::span<const double> input);

/// Scalar-output convenience.
double mlp_forward_scalar(const Mlp& net, std::span<const double> input);

/// Accumulates d(loss)/d(params) into grad (+=) given d(loss)/d(output).
/// cache must hold the activations of the matching forward pass.
void mlp_backward(const Mlp& net, const ForwardCache& cache,
                  std::span<const double> d_output, std::span<double> grad);

/// Row-parallel batched forward: n rows of input, n rows of output.
/// The parallel path distributes rows over OpenMP threads; outputs are
/// identical to the serial path for any thread count.
void mlp_forward_batch(const Mlp& net, const double* inputs, int n_rows,
                       double* outputs, bool parallel);

/// Numerically stable log-softmax (subtracts the max logit).
std::vector<double> log_softmax(std::span<const double> logits);

/// Samples an index from softmax(logits); returns (index, log-probability).
/// Throws on non-finite logits.
std::pair<int, double> sample_action(std::span<const double> logits, Rng& rng);

/// Argmax with lowest-index tie breaking.
int greedy_action(std::span<const double> logits);

/// Bias-corrected Adam over one flat parameter vector.
struct AdamState {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;

  explicit AdamState(size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// One Adam step: updates params in place and advances the moment estimates.
void adam_update(std::span<double> params, std::span<const double> grads, AdamState& state);

/// L2 norm of a flat vector.
double global_norm(std::span<const double> v);

/// Scales grads in place so the global norm does not exceed max_norm.
void clip_global_norm(std::span<double> grads, double max_norm);

}  // namespace marlnav
