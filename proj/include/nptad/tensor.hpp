#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace nptad {

// Dense row-major tensor of doubles.  Gradients are held next to the values
// and are accumulated (+=) by backward passes; call zero_grad between steps.
struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<double> values;
  bool requires_grad = false;
  std::vector<double> grad;  // empty until ensure_grad

  std::int64_t numel() const {
    std::int64_t n = 1;
    for (auto s : shape) n *= s;
    return n;
  }
  std::int64_t dim(std::size_t i) const { return shape[i]; }
  void ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
  }
  void zero_grad() { grad.assign(grad.size(), 0.0); }
};

using TensorPtr = std::shared_ptr<Tensor>;

TensorPtr make_tensor(std::vector<std::int64_t> shape, bool requires_grad = false);
TensorPtr make_tensor(std::vector<std::int64_t> shape, std::vector<double> values,
                      bool requires_grad = false);
TensorPtr scalar_tensor(double v);

// Records the forward pass as an ordered list of nodes (op id, inputs,
// output, backward closure over saved intermediates).  Construction order is
// the topological order, so backward is a single reverse sweep.
class Tape {
 public:
  struct Node {
    const char* op;
    std::vector<TensorPtr> inputs;
    TensorPtr output;
    std::function<void()> pull;  // accumulates input grads from output grad
  };

  void record(const char* op, std::vector<TensorPtr> inputs, TensorPtr output,
              std::function<void()> pull);

  // Seeds d(loss)/d(loss) = 1 and pulls gradients through every node in
  // reverse order.  loss must be a scalar produced by this tape.  Repeated
  // calls accumulate into existing grads.
  void backward(const TensorPtr& loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  std::vector<Node> nodes_;
};

// Central finite-difference check: returns the max over parameter entries of
// |analytic - numeric| / max(1, |analytic|).  loss_fn must build the loss
// from `params` on the given tape (tape == nullptr -> plain evaluation).
double grad_check(std::span<const TensorPtr> params,
                  const std::function<TensorPtr(Tape*)>& loss_fn, double eps = 1e-5);

}  // namespace nptad
