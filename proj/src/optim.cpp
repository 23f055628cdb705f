#include "nptad/optim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "nptad/kernels.hpp"

namespace nptad {

namespace {

std::vector<std::vector<double>> zero_buffers(std::span<const TensorPtr> params) {
  std::vector<std::vector<double>> out;
  out.reserve(params.size());
  for (const auto& p : params) out.emplace_back(p->values.size(), 0.0);
  return out;
}

}  // namespace

LambState::LambState(std::span<const TensorPtr> params)
    : m(zero_buffers(params)), v(zero_buffers(params)) {}

LookaheadState::LookaheadState(std::span<const TensorPtr> params) {
  slow.reserve(params.size());
  for (const auto& p : params) slow.push_back(p->values);
}

double clip_gradients(std::span<const TensorPtr> params, double max_norm) {
  if (max_norm <= 0.0) throw std::invalid_argument("clip_gradients: max_norm must be positive");
  double sq = 0.0;
  for (const auto& p : params) {
    p->ensure_grad();
    sq += kernels::dot(p->grad.data(), p->grad.data(), p->grad.size());
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (const auto& p : params) kernels::scale(s, p->grad.data(), p->grad.data(), p->grad.size());
  }
  return norm;
}

void lamb_step(std::span<const TensorPtr> params, LambState& state, const LambConfig& cfg,
               double lr) {
  if (state.m.size() != params.size())
    throw std::invalid_argument("lamb_step: state does not match parameter list");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = *params[pi];
    p.ensure_grad();
    std::vector<double>& m = state.m[pi];
    std::vector<double>& v = state.v[pi];
    double w_sq = 0.0;
    double u_sq = 0.0;
    std::vector<double> u(p.values.size());
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      const double g = p.grad[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const double mh = m[i] / bc1;
      const double vh = v[i] / bc2;
      u[i] = mh / (std::sqrt(vh) + cfg.eps) + cfg.weight_decay * p.values[i];
      w_sq += p.values[i] * p.values[i];
      u_sq += u[i] * u[i];
    }
    const double wn = std::sqrt(w_sq);
    const double un = std::sqrt(u_sq);
    const double phi = (wn == 0.0 || un == 0.0) ? 1.0 : wn / un;
    const double step = lr * phi;
    for (std::size_t i = 0; i < p.values.size(); ++i) p.values[i] -= step * u[i];
  }
}

void lookahead_update(std::span<const TensorPtr> params, LookaheadState& state,
                      const LookaheadConfig& cfg) {
  if (state.slow.size() != params.size())
    throw std::invalid_argument("lookahead_update: state does not match parameter list");
  if (cfg.k < 1) throw std::invalid_argument("lookahead_update: k must be >= 1");
  state.inner += 1;
  if (state.inner % cfg.k != 0) return;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = *params[pi];
    std::vector<double>& slow = state.slow[pi];
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      slow[i] += cfg.alpha * (p.values[i] - slow[i]);
      p.values[i] = slow[i];
    }
  }
}

double lr_at(std::int64_t step, std::int64_t total, double base, double flat_fraction) {
  if (total < 1) throw std::invalid_argument("lr_at: total must be >= 1");
  if (step < 0 || step >= total) throw std::invalid_argument("lr_at: step out of range");
  if (flat_fraction < 0.0 || flat_fraction > 1.0)
    throw std::invalid_argument("lr_at: flat_fraction must be in [0,1]");
  const double flat_steps = flat_fraction * static_cast<double>(total);
  if (static_cast<double>(step) < flat_steps) return base;
  const double span = static_cast<double>(total) - flat_steps;
  if (span <= 0.0) return base;
  const double progress = (static_cast<double>(step) - flat_steps) / span;
  return base * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace nptad
