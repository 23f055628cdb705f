#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nptad/rng.hpp"
#include "nptad/tensor.hpp"

// Differentiable primitives.  Every op evaluates eagerly and, when `tape` is
// non-null and some input requires grad, records a backward closure on it.
// Passing tape == nullptr gives a plain (inference) evaluation.
namespace nptad::ops {

// c[n x m] = a[n x k] * b[k x m]
TensorPtr matmul(Tape* tape, const TensorPtr& a, const TensorPtr& b);
// batched: [g,t,k] x [g,k,m] -> [g,t,m]
TensorPtr bmm(Tape* tape, const TensorPtr& a, const TensorPtr& b);
// batched with transposed rhs and a fixed scale: alpha * a[g,t,k] * b[g,m,k]^T -> [g,t,m]
TensorPtr bmm_nt(Tape* tape, const TensorPtr& a, const TensorPtr& b, double alpha);

TensorPtr add(Tape* tape, const TensorPtr& a, const TensorPtr& b);  // same shape
// x viewed as [numel/b.numel, b.numel] plus broadcast b (bias / embeddings)
TensorPtr add_rows(Tape* tape, const TensorPtr& x, const TensorPtr& b);
TensorPtr scale(Tape* tape, const TensorPtr& x, double c);
TensorPtr sum_all(Tape* tape, const TensorPtr& x);  // -> [1]
TensorPtr reshape(Tape* tape, const TensorPtr& x, std::vector<std::int64_t> shape);

TensorPtr softmax(Tape* tape, const TensorPtr& x, int axis);
// normalizes the last axis; population variance, eps inside the sqrt
TensorPtr layer_norm(Tape* tape, const TensorPtr& x, const TensorPtr& gain, const TensorPtr& bias,
                     double eps = 1e-5);
// exact-CDF form x * Phi(x)
TensorPtr gelu(Tape* tape, const TensorPtr& x);
// inverted dropout (train-time op; callers skip it at inference). p in [0,1).
TensorPtr dropout(Tape* tape, const TensorPtr& x, double p, Rng& rng);

// [b,t,h] -> [b*heads, t, h/heads]; head j takes columns [j*h/heads, (j+1)*h/heads)
TensorPtr split_heads(Tape* tape, const TensorPtr& x, int heads);
TensorPtr merge_heads(Tape* tape, const TensorPtr& x, int heads);  // inverse

TensorPtr slice_feature(Tape* tape, const TensorPtr& x, std::int64_t j);  // [n,d,e] -> [n,e]
TensorPtr stack_features(Tape* tape, const std::vector<TensorPtr>& feats);  // d x [n,e] -> [n,d,e]
TensorPtr gather_rows(Tape* tape, const TensorPtr& table, std::vector<std::int64_t> idx);

// Masked losses, each the *sum* over selected entries (callers normalize).
// mask entries are 0/1 per row; rows with mask 0 contribute nothing.
TensorPtr masked_sq_err(Tape* tape, const TensorPtr& pred, std::span<const double> targets,
                        std::span<const std::uint8_t> mask);
// logits [n,c]; labels in [0,c) or -1 to skip the row even when masked
TensorPtr masked_ce(Tape* tape, const TensorPtr& logits, std::span<const int> labels,
                    std::span<const std::uint8_t> mask);

}  // namespace nptad::ops
