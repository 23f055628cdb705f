#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nptad/tensor.hpp"

namespace nptad {

struct LambConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-6;
  double weight_decay = 0.0;
};

// Per-tensor first/second moment buffers plus the shared step count.
struct LambState {
  std::int64_t t = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  explicit LambState(std::span<const TensorPtr> params);
};

struct LookaheadConfig {
  double alpha = 0.5;
  int k = 6;
};

// Slow-weight copies; sync happens every k-th inner step.
struct LookaheadState {
  std::int64_t inner = 0;
  std::vector<std::vector<double>> slow;
  explicit LookaheadState(std::span<const TensorPtr> params);
};

// Scales all gradients by max_norm/g when the global L2 norm g exceeds
// max_norm.  Returns the pre-clip norm.
double clip_gradients(std::span<const TensorPtr> params, double max_norm);

// One LAMB update with bias-corrected moments and the per-tensor trust ratio
// phi = ||w|| / ||u|| (phi := 1 when either norm vanishes).
void lamb_step(std::span<const TensorPtr> params, LambState& state, const LambConfig& cfg,
               double lr);

// Every k-th call: slow += alpha * (fast - slow), then fast := slow.
void lookahead_update(std::span<const TensorPtr> params, LookaheadState& state,
                      const LookaheadConfig& cfg);

// Flat-then-anneal: base for the first flat_fraction of total steps, then a
// cosine decay to zero.  step is 0-indexed and must be < total.
double lr_at(std::int64_t step, std::int64_t total, double base, double flat_fraction = 0.7);

}  // namespace nptad
