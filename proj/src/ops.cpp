#include "nptad/ops.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

#include "nptad/kernels.hpp"

namespace nptad::ops {

namespace {

namespace kk = nptad::kernels;

bool want_grad(Tape* tape, std::initializer_list<const TensorPtr*> ins) {
  if (tape == nullptr) return false;
  for (const TensorPtr* t : ins)
    if ((*t)->requires_grad) return true;
  return false;
}

void check(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

std::int64_t prod(std::span<const std::int64_t> s) {
  std::int64_t p = 1;
  for (auto v : s) p *= v;
  return p;
}

}  // namespace

TensorPtr matmul(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
  check(a->shape.size() == 2 && b->shape.size() == 2 && a->shape[1] == b->shape[0],
        "matmul: expected [n,k] x [k,m]");
  const auto n = static_cast<std::size_t>(a->shape[0]);
  const auto k = static_cast<std::size_t>(a->shape[1]);
  const auto m = static_cast<std::size_t>(b->shape[1]);
  TensorPtr out = make_tensor({a->shape[0], b->shape[1]});
  kk::matmul_nn(a->values.data(), b->values.data(), out->values.data(), n, k, m);
  if (want_grad(tape, {&a, &b})) {
    out->requires_grad = true;
    tape->record("matmul", {a, b}, out, [a, b, out, n, k, m] {
      if (a->requires_grad) {
        a->ensure_grad();
        kk::matmul_nt_acc(out->grad.data(), b->values.data(), a->grad.data(), n, m, k);
      }
      if (b->requires_grad) {
        b->ensure_grad();
        kk::matmul_tn_acc(a->values.data(), out->grad.data(), b->grad.data(), k, n, m);
      }
    });
  }
  return out;
}

TensorPtr bmm(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
  check(a->shape.size() == 3 && b->shape.size() == 3 && a->shape[0] == b->shape[0] &&
            a->shape[2] == b->shape[1],
        "bmm: expected [g,t,k] x [g,k,m]");
  const auto g = static_cast<std::size_t>(a->shape[0]);
  const auto t = static_cast<std::size_t>(a->shape[1]);
  const auto k = static_cast<std::size_t>(a->shape[2]);
  const auto m = static_cast<std::size_t>(b->shape[2]);
  TensorPtr out = make_tensor({a->shape[0], a->shape[1], b->shape[2]});
  for (std::size_t i = 0; i < g; ++i)
    kk::matmul_nn(a->values.data() + i * t * k, b->values.data() + i * k * m,
                  out->values.data() + i * t * m, t, k, m);
  if (want_grad(tape, {&a, &b})) {
    out->requires_grad = true;
    tape->record("bmm", {a, b}, out, [a, b, out, g, t, k, m] {
      for (std::size_t i = 0; i < g; ++i) {
        const double* go = out->grad.data() + i * t * m;
        if (a->requires_grad) {
          a->ensure_grad();
          kk::matmul_nt_acc(go, b->values.data() + i * k * m, a->grad.data() + i * t * k, t, m, k);
        }
        if (b->requires_grad) {
          b->ensure_grad();
          kk::matmul_tn_acc(a->values.data() + i * t * k, go, b->grad.data() + i * k * m, k, t, m);
        }
      }
    });
  }
  return out;
}

TensorPtr bmm_nt(Tape* tape, const TensorPtr& a, const TensorPtr& b, double alpha) {
  check(a->shape.size() == 3 && b->shape.size() == 3 && a->shape[0] == b->shape[0] &&
            a->shape[2] == b->shape[2],
        "bmm_nt: expected [g,t,k] x [g,m,k]");
  const auto g = static_cast<std::size_t>(a->shape[0]);
  const auto t = static_cast<std::size_t>(a->shape[1]);
  const auto k = static_cast<std::size_t>(a->shape[2]);
  const auto m = static_cast<std::size_t>(b->shape[1]);
  TensorPtr out = make_tensor({a->shape[0], a->shape[1], b->shape[1]});
  for (std::size_t i = 0; i < g; ++i) {
    double* slice = out->values.data() + i * t * m;
    kk::matmul_nt(a->values.data() + i * t * k, b->values.data() + i * m * k, slice, t, k, m);
    kk::scale(alpha, slice, slice, t * m);
  }
  if (want_grad(tape, {&a, &b})) {
    out->requires_grad = true;
    tape->record("bmm_nt", {a, b}, out, [a, b, out, alpha, g, t, k, m] {
      std::vector<double> tmp;
      for (std::size_t i = 0; i < g; ++i) {
        const double* go = out->grad.data() + i * t * m;
        if (a->requires_grad) {
          a->ensure_grad();
          tmp.assign(t * k, 0.0);
          kk::matmul_nn(go, b->values.data() + i * m * k, tmp.data(), t, m, k);
          kk::axpy(alpha, tmp.data(), a->grad.data() + i * t * k, t * k);
        }
        if (b->requires_grad) {
          b->ensure_grad();
          tmp.assign(m * k, 0.0);
          kk::matmul_tn(go, a->values.data() + i * t * k, tmp.data(), m, t, k);
          kk::axpy(alpha, tmp.data(), b->grad.data() + i * m * k, m * k);
        }
      }
    });
  }
  return out;
}

TensorPtr add(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
  check(a->shape == b->shape, "add: shapes differ");
  TensorPtr out = make_tensor(a->shape);
  kk::add(a->values.data(), b->values.data(), out->values.data(), a->values.size());
  if (want_grad(tape, {&a, &b})) {
    out->requires_grad = true;
    tape->record("add", {a, b}, out, [a, b, out] {
      if (a->requires_grad) {
        a->ensure_grad();
        kk::add(a->grad.data(), out->grad.data(), a->grad.data(), a->grad.size());
      }
      if (b->requires_grad) {
        b->ensure_grad();
        kk::add(b->grad.data(), out->grad.data(), b->grad.data(), b->grad.size());
      }
    });
  }
  return out;
}

TensorPtr add_rows(Tape* tape, const TensorPtr& x, const TensorPtr& b) {
  const std::int64_t c = b->numel();
  check(c > 0 && x->numel() % c == 0, "add_rows: bias size must divide input size");
  const auto rows = static_cast<std::size_t>(x->numel() / c);
  const auto cols = static_cast<std::size_t>(c);
  TensorPtr out = make_tensor(x->shape);
  for (std::size_t r = 0; r < rows; ++r)
    kk::add(x->values.data() + r * cols, b->values.data(), out->values.data() + r * cols, cols);
  if (want_grad(tape, {&x, &b})) {
    out->requires_grad = true;
    tape->record("add_rows", {x, b}, out, [x, b, out, rows, cols] {
      if (x->requires_grad) {
        x->ensure_grad();
        kk::add(x->grad.data(), out->grad.data(), x->grad.data(), x->grad.size());
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (std::size_t r = 0; r < rows; ++r)
          kk::add(b->grad.data(), out->grad.data() + r * cols, b->grad.data(), cols);
      }
    });
  }
  return out;
}

TensorPtr scale(Tape* tape, const TensorPtr& x, double c) {
  TensorPtr out = make_tensor(x->shape);
  kk::scale(c, x->values.data(), out->values.data(), x->values.size());
  if (want_grad(tape, {&x})) {
    out->requires_grad = true;
    tape->record("scale", {x}, out, [x, out, c] {
      x->ensure_grad();
      kk::axpy(c, out->grad.data(), x->grad.data(), x->grad.size());
    });
  }
  return out;
}

TensorPtr sum_all(Tape* tape, const TensorPtr& x) {
  TensorPtr out = scalar_tensor(kk::sum(x->values.data(), x->values.size()));
  if (want_grad(tape, {&x})) {
    out->requires_grad = true;
    tape->record("sum_all", {x}, out, [x, out] {
      x->ensure_grad();
      const double g = out->grad[0];
      for (double& v : x->grad) v += g;
    });
  }
  return out;
}

TensorPtr reshape(Tape* tape, const TensorPtr& x, std::vector<std::int64_t> shape) {
  check(prod(shape) == x->numel(), "reshape: element count mismatch");
  TensorPtr out = make_tensor(std::move(shape), x->values);
  if (want_grad(tape, {&x})) {
    out->requires_grad = true;
    tape->record("reshape", {x}, out, [x, out] {
      x->ensure_grad();
      kk::add(x->grad.data(), out->grad.data(), x->grad.data(), x->grad.size());
    });
  }
  return out;
}

TensorPtr softmax(Tape* tape, const TensorPtr& x, int axis) {
  const int nd = static_cast<int>(x->shape.size());
  check(axis >= -nd && axis < nd, "softmax: axis out of range");
  if (axis < 0) axis += nd;
  const auto outer = static_cast<std::size_t>(
      prod(std::span(x->shape).subspan(0, static_cast<std::size_t>(axis))));
  const auto len = static_cast<std::size_t>(x->shape[static_cast<std::size_t>(axis)]);
  const auto inner = static_cast<std::size_t>(
      prod(std::span(x->shape).subspan(static_cast<std::size_t>(axis) + 1)));
  TensorPtr out = make_tensor(x->shape);
  const double* xv = x->values.data();
  double* ov = out->values.data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * len * inner + in;
      double mx = xv[base];
      for (std::size_t t = 1; t < len; ++t) mx = std::fmax(mx, xv[base + t * inner]);
      double s = 0.0;
      for (std::size_t t = 0; t < len; ++t) {
        const double e = std::exp(xv[base + t * inner] - mx);
        ov[base + t * inner] = e;
        s += e;
      }
      for (std::size_t t = 0; t < len; ++t) ov[base + t * inner] /= s;
    }
  }
  if (want_grad(tape, {&x})) {
    out->requires_grad = true;
    tape->record("softmax", {x}, out, [x, out, outer, len, inner] {
      x->ensure_grad();
      const double* y = out->values.data();
      const double* g = out->grad.data();
      double* xg = x->grad.data();
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t in = 0; in < inner; ++in) {
          const std::size_t base = o * len * inner + in;
          double dotgy = 0.0;
          for (std::size_t t = 0; t < len; ++t) dotgy += g[base + t * inner] * y[base + t * inner];
          for (std::size_t t = 0; t < len; ++t) {
            const std::size_t i = base + t * inner;
            xg[i] += y[i] * (g[i] - dotgy);
          }
        }
      }
    });
  }
  return out;
}

TensorPtr layer_norm(Tape* tape, const TensorPtr& x, const TensorPtr& gain, const TensorPtr& bias,
                     double eps) {
  check(!x->shape.empty(), "layer_norm: input must have rank >= 1");
  const auto cols = static_cast<std::size_t>(x->shape.back());
  check(gain->numel() == static_cast<std::int64_t>(cols) &&
            bias->numel() == static_cast<std::int64_t>(cols),
        "layer_norm: gain/bias must match the last axis");
  const auto rows = static_cast<std::size_t>(x->numel()) / cols;
  TensorPtr out = make_tensor(x->shape);
  auto mean = std::make_shared<std::vector<double>>(rows);
  auto inv = std::make_shared<std::vector<double>>(rows);
  const double* xv = x->values.data();
  double* ov = out->values.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = xv + r * cols;
    const double mu = kk::sum(row, cols) / static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double d = row[c] - mu;
      var += d * d;
    }
    var /= static_cast<double>(cols);
    const double is = 1.0 / std::sqrt(var + eps);
    (*mean)[r] = mu;
    (*inv)[r] = is;
    for (std::size_t c = 0; c < cols; ++c)
      ov[r * cols + c] = (row[c] - mu) * is * gain->values[c] + bias->values[c];
  }
  if (want_grad(tape, {&x, &gain, &bias})) {
    out->requires_grad = true;
    tape->record("layer_norm", {x, gain, bias}, out, [x, gain, bias, out, mean, inv, rows, cols] {
      const double* xv2 = x->values.data();
      const double* g = out->grad.data();
      for (std::size_t r = 0; r < rows; ++r) {
        const double mu = (*mean)[r];
        const double is = (*inv)[r];
        const double* xrow = xv2 + r * cols;
        const double* grow = g + r * cols;
        if (gain->requires_grad) {
          gain->ensure_grad();
          for (std::size_t c = 0; c < cols; ++c)
            gain->grad[c] += grow[c] * (xrow[c] - mu) * is;
        }
        if (bias->requires_grad) {
          bias->ensure_grad();
          for (std::size_t c = 0; c < cols; ++c) bias->grad[c] += grow[c];
        }
        if (x->requires_grad) {
          x->ensure_grad();
          double m1 = 0.0;  // mean of gain*g
          double m2 = 0.0;  // mean of gain*g*xhat
          for (std::size_t c = 0; c < cols; ++c) {
            const double gg = gain->values[c] * grow[c];
            m1 += gg;
            m2 += gg * (xrow[c] - mu) * is;
          }
          m1 /= static_cast<double>(cols);
          m2 /= static_cast<double>(cols);
          double* xg = x->grad.data() + r * cols;
          for (std::size_t c = 0; c < cols; ++c) {
            const double gg = gain->values[c] * grow[c];
            const double xhat = (xrow[c] - mu) * is;
            xg[c] += is * (gg - m1 - xhat * m2);
          }
        }
      }
    });
  }
  return out;
}

TensorPtr gelu(Tape* tape, const TensorPtr& x) {
  TensorPtr out = make_tensor(x->shape);
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  for (std::size_t i = 0; i < x->values.size(); ++i) {
    const double v = x->values[i];
    out->values[i] = 0.5 * v * (1.0 + std::erf(v * inv_sqrt2));
  }
  if (want_grad(tape, {&x})) {
    out->requires_grad = true;
    tape->record("gelu", {x}, out, [x, out, inv_sqrt2] {
      x->ensure_grad();
      const double inv_sqrt2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
      for (std::size_t i = 0; i < x->values.size(); ++i) {
        const double v = x->values[i];
        const double cdf = 0.5 * (1.0 + std::erf(v * inv_sqrt2));
        const double pdf = inv_sqrt2pi * std::exp(-0.5 * v * v);
        x->grad[i] += out->grad[i] * (cdf + v * pdf);
      }
    });
  }
  return out;
}

TensorPtr dropout(Tape* tape, const TensorPtr& x, double p, Rng& rng) {
  check(p >= 0.0 && p < 1.0, "dropout: p must be in [0,1)");
  if (p == 0.0) return x;
  auto factors = std::make_shared<std::vector<double>>(x->values.size());
  const double keep_scale = 1.0 / (1.0 - p);
  for (std::size_t i = 0; i < x->values.size(); ++i)
    (*factors)[i] = rng.bernoulli(p) ? 0.0 : keep_scale;
  TensorPtr out = make_tensor(x->shape);
  kk::mul(x->values.data(), factors->data(), out->values.data(), x->values.size());
  if (want_grad(tape, {&x})) {
    out->requires_grad = true;
    tape->record("dropout", {x}, out, [x, out, factors] {
      x->ensure_grad();
      for (std::size_t i = 0; i < x->grad.size(); ++i)
        x->grad[i] += out->grad[i] * (*factors)[i];
    });
  }
  return out;
}

TensorPtr split_heads(Tape* tape, const TensorPtr& x, int heads) {
  check(x->shape.size() == 3, "split_heads: expected [b,t,h]");
  const auto b = static_cast<std::size_t>(x->shape[0]);
  const auto t = static_cast<std::size_t>(x->shape[1]);
  const auto h = static_cast<std::size_t>(x->shape[2]);
  check(heads > 0 && h % static_cast<std::size_t>(heads) == 0,
        "split_heads: width not divisible by heads");
  const auto nh = static_cast<std::size_t>(heads);
  const std::size_t hk = h / nh;
  TensorPtr out = make_tensor({static_cast<std::int64_t>(b * nh), static_cast<std::int64_t>(t),
                               static_cast<std::int64_t>(hk)});
  for (std::size_t bi = 0; bi < b; ++bi)
    for (std::size_t j = 0; j < nh; ++j)
      for (std::size_t ti = 0; ti < t; ++ti) {
        const double* src = x->values.data() + (bi * t + ti) * h + j * hk;
        double* dst = out->values.data() + ((bi * nh + j) * t + ti) * hk;
        for (std::size_t c = 0; c < hk; ++c) dst[c] = src[c];
      }
  if (want_grad(tape, {&x})) {
    out->requires_grad = true;
    tape->record("split_heads", {x}, out, [x, out, b, t, h, nh, hk] {
      x->ensure_grad();
      for (std::size_t bi = 0; bi < b; ++bi)
        for (std::size_t j = 0; j < nh; ++j)
          for (std::size_t ti = 0; ti < t; ++ti) {
            double* dst = x->grad.data() + (bi * t + ti) * h + j * hk;
            const double* src = out->grad.data() + ((bi * nh + j) * t + ti) * hk;
            for (std::size_t c = 0; c < hk; ++c) dst[c] += src[c];
          }
    });
  }
  return out;
}

TensorPtr merge_heads(Tape* tape, const TensorPtr& x, int heads) {
  check(x->shape.size() == 3, "merge_heads: expected [b*heads,t,hk]");
  const auto nh = static_cast<std::size_t>(heads);
  check(heads > 0 && static_cast<std::size_t>(x->shape[0]) % nh == 0,
        "merge_heads: leading dim not divisible by heads");
  const std::size_t b = static_cast<std::size_t>(x->shape[0]) / nh;
  const auto t = static_cast<std::size_t>(x->shape[1]);
  const auto hk = static_cast<std::size_t>(x->shape[2]);
  const std::size_t h = hk * nh;
  TensorPtr out = make_tensor({static_cast<std::int64_t>(b), static_cast<std::int64_t>(t),
                               static_cast<std::int64_t>(h)});
  for (std::size_t bi = 0; bi < b; ++bi)
    for (std::size_t j = 0; j < nh; ++j)
      for (std::size_t ti = 0; ti < t; ++ti) {
        const double* src = x->values.data() + ((bi * nh + j) * t + ti) * hk;
        double* dst = out->values.data() + (bi * t + ti) * h + j * hk;
        for (std::size_t c = 0; c < hk; ++c) dst[c] = src[c];
      }
  if (want_grad(tape, {&x})) {
    out->requires_grad = true;
    tape->record("merge_heads", {x}, out, [x, out, b, t, h, nh, hk] {
      x->ensure_grad();
      for (std::size_t bi = 0; bi < b; ++bi)
        for (std::size_t j = 0; j < nh; ++j)
          for (std::size_t ti = 0; ti < t; ++ti) {
            double* dst = x->grad.data() + ((bi * nh + j) * t + ti) * hk;
            const double* src = out->grad.data() + (bi * t + ti) * h + j * hk;
            for (std::size_t c = 0; c < hk; ++c) dst[c] += src[c];
          }
    });
  }
  return out;
}

TensorPtr slice_feature(Tape* tape, const TensorPtr& x, std::int64_t j) {
  check(x->shape.size() == 3, "slice_feature: expected [n,d,e]");
  check(j >= 0 && j < x->shape[1], "slice_feature: index out of range");
  const auto n = static_cast<std::size_t>(x->shape[0]);
  const auto d = static_cast<std::size_t>(x->shape[1]);
  const auto e = static_cast<std::size_t>(x->shape[2]);
  const auto jj = static_cast<std::size_t>(j);
  TensorPtr out = make_tensor({x->shape[0], x->shape[2]});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < e; ++c) out->values[i * e + c] = x->values[(i * d + jj) * e + c];
  if (want_grad(tape, {&x})) {
    out->requires_grad = true;
    tape->record("slice_feature", {x}, out, [x, out, n, d, e, jj] {
      x->ensure_grad();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < e; ++c)
          x->grad[(i * d + jj) * e + c] += out->grad[i * e + c];
    });
  }
  return out;
}

TensorPtr stack_features(Tape* tape, const std::vector<TensorPtr>& feats) {
  check(!feats.empty(), "stack_features: empty input");
  const auto n = feats[0]->shape[0];
  const auto e = feats[0]->shape[1];
  for (const auto& f : feats)
    check(f->shape.size() == 2 && f->shape[0] == n && f->shape[1] == e,
          "stack_features: all inputs must be [n,e]");
  const auto d = static_cast<std::int64_t>(feats.size());
  TensorPtr out = make_tensor({n, d, e});
  const auto un = static_cast<std::size_t>(n);
  const auto ud = static_cast<std::size_t>(d);
  const auto ue = static_cast<std::size_t>(e);
  for (std::size_t j = 0; j < ud; ++j)
    for (std::size_t i = 0; i < un; ++i)
      for (std::size_t c = 0; c < ue; ++c)
        out->values[(i * ud + j) * ue + c] = feats[j]->values[i * ue + c];
  bool any = false;
  for (const auto& f : feats) any = any || f->requires_grad;
  if (tape != nullptr && any) {
    out->requires_grad = true;
    tape->record("stack_features", feats, out, [feats, out, un, ud, ue] {
      for (std::size_t j = 0; j < ud; ++j) {
        if (!feats[j]->requires_grad) continue;
        feats[j]->ensure_grad();
        for (std::size_t i = 0; i < un; ++i)
          for (std::size_t c = 0; c < ue; ++c)
            feats[j]->grad[i * ue + c] += out->grad[(i * ud + j) * ue + c];
      }
    });
  }
  return out;
}

TensorPtr gather_rows(Tape* tape, const TensorPtr& table, std::vector<std::int64_t> idx) {
  check(table->shape.size() == 2, "gather_rows: table must be [v,e]");
  const auto e = static_cast<std::size_t>(table->shape[1]);
  for (auto i : idx) check(i >= 0 && i < table->shape[0], "gather_rows: index out of range");
  TensorPtr out = make_tensor({static_cast<std::int64_t>(idx.size()), table->shape[1]});
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (std::size_t c = 0; c < e; ++c)
      out->values[r * e + c] = table->values[static_cast<std::size_t>(idx[r]) * e + c];
  if (want_grad(tape, {&table})) {
    out->requires_grad = true;
    auto ix = std::make_shared<std::vector<std::int64_t>>(std::move(idx));
    tape->record("gather_rows", {table}, out, [table, out, ix, e] {
      table->ensure_grad();
      for (std::size_t r = 0; r < ix->size(); ++r)
        for (std::size_t c = 0; c < e; ++c)
          table->grad[static_cast<std::size_t>((*ix)[r]) * e + c] += out->grad[r * e + c];
    });
  }
  return out;
}

TensorPtr masked_sq_err(Tape* tape, const TensorPtr& pred, std::span<const double> targets,
                        std::span<const std::uint8_t> mask) {
  const auto n = static_cast<std::size_t>(pred->shape[0]);
  check(pred->shape.size() == 2 && pred->shape[1] == 1, "masked_sq_err: pred must be [n,1]");
  check(targets.size() == n && mask.size() == n, "masked_sq_err: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i] == 0) continue;
    const double d = pred->values[i] - targets[i];
    s += d * d;
  }
  TensorPtr out = scalar_tensor(s);
  if (want_grad(tape, {&pred})) {
    out->requires_grad = true;
    std::vector<double> tgt(targets.begin(), targets.end());
    std::vector<std::uint8_t> msk(mask.begin(), mask.end());
    tape->record("masked_sq_err", {pred}, out,
                 [pred, out, tgt = std::move(tgt), msk = std::move(msk), n] {
                   pred->ensure_grad();
                   const double g = out->grad[0];
                   for (std::size_t i = 0; i < n; ++i) {
                     if (msk[i] == 0) continue;
                     pred->grad[i] += g * 2.0 * (pred->values[i] - tgt[i]);
                   }
                 });
  }
  return out;
}

TensorPtr masked_ce(Tape* tape, const TensorPtr& logits, std::span<const int> labels,
                    std::span<const std::uint8_t> mask) {
  check(logits->shape.size() == 2, "masked_ce: logits must be [n,c]");
  const auto n = static_cast<std::size_t>(logits->shape[0]);
  const auto c = static_cast<std::size_t>(logits->shape[1]);
  check(labels.size() == n && mask.size() == n, "masked_ce: size mismatch");
  for (std::size_t i = 0; i < n; ++i)
    check(labels[i] >= -1 && labels[i] < static_cast<int>(c), "masked_ce: label out of range");
  double s = 0.0;
  // Probabilities saved for the backward pass (only contributing rows used).
  auto probs = std::make_shared<std::vector<double>>(n * c, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i] == 0 || labels[i] < 0) continue;
    const double* row = logits->values.data() + i * c;
    double mx = row[0];
    for (std::size_t j = 1; j < c; ++j) mx = std::fmax(mx, row[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(row[j] - mx);
    for (std::size_t j = 0; j < c; ++j) (*probs)[i * c + j] = std::exp(row[j] - mx) / z;
    s += std::log(z) + mx - row[static_cast<std::size_t>(labels[i])];
  }
  TensorPtr out = scalar_tensor(s);
  if (want_grad(tape, {&logits})) {
    out->requires_grad = true;
    std::vector<int> lab(labels.begin(), labels.end());
    std::vector<std::uint8_t> msk(mask.begin(), mask.end());
    tape->record("masked_ce", {logits}, out,
                 [logits, out, probs, lab = std::move(lab), msk = std::move(msk), n, c] {
                   logits->ensure_grad();
                   const double g = out->grad[0];
                   for (std::size_t i = 0; i < n; ++i) {
                     if (msk[i] == 0 || lab[i] < 0) continue;
                     double* lg = logits->grad.data() + i * c;
                     const double* p = probs->data() + i * c;
                     for (std::size_t j = 0; j < c; ++j) lg[j] += g * p[j];
                     lg[static_cast<std::size_t>(lab[i])] -= g;
                   }
                 });
  }
  return out;
}

}  // namespace nptad::ops
