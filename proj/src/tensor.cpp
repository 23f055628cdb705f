#include "nptad/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace nptad {

TensorPtr make_tensor(std::vector<std::int64_t> shape, bool requires_grad) {
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  t->values.assign(static_cast<std::size_t>(t->numel()), 0.0);
  t->requires_grad = requires_grad;
  return t;
}

TensorPtr make_tensor(std::vector<std::int64_t> shape, std::vector<double> values,
                      bool requires_grad) {
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  if (static_cast<std::int64_t>(values.size()) != t->numel())
    throw std::invalid_argument("make_tensor: value count does not match shape");
  t->values = std::move(values);
  t->requires_grad = requires_grad;
  return t;
}

TensorPtr scalar_tensor(double v) { return make_tensor({1}, std::vector<double>{v}); }

void Tape::record(const char* op, std::vector<TensorPtr> inputs, TensorPtr output,
                  std::function<void()> pull) {
  nodes_.push_back(Node{op, std::move(inputs), std::move(output), std::move(pull)});
}

void Tape::backward(const TensorPtr& loss) {
  if (loss == nullptr || loss->numel() != 1)
    throw std::invalid_argument("Tape::backward: loss must be a scalar tensor");
  // Node outputs are intermediates: their grads are scratch for this sweep.
  // Leaf tensors are never node outputs, so their grads accumulate across
  // repeated backward calls.
  for (auto& node : nodes_) {
    node.output->ensure_grad();
    node.output->zero_grad();
  }
  loss->ensure_grad();
  loss->grad[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->pull) it->pull();
  }
}

double grad_check(std::span<const TensorPtr> params,
                  const std::function<TensorPtr(Tape*)>& loss_fn, double eps) {
  // Analytic pass.
  for (const auto& p : params) {
    p->ensure_grad();
    p->zero_grad();
  }
  {
    Tape tape;
    TensorPtr loss = loss_fn(&tape);
    tape.backward(loss);
  }
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(p->grad);

  double worst = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = *params[pi];
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      const double saved = p.values[i];
      p.values[i] = saved + eps;
      const double fp = loss_fn(nullptr)->values[0];
      p.values[i] = saved - eps;
      const double fm = loss_fn(nullptr)->values[0];
      p.values[i] = saved;
      if (!std::isfinite(fp) || !std::isfinite(fm))
        throw std::runtime_error("grad_check: non-finite loss during finite differences");
      const double numeric = (fp - fm) / (2.0 * eps);
      const double a = analytic[pi][i];
      const double err = std::fabs(a - numeric) / std::fmax(1.0, std::fabs(a));
      if (err > worst) worst = err;
    }
  }
  return worst;
}

}  // namespace nptad
