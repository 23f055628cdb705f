#include "nptad/npt.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "nptad/ops.hpp"
#include "nptad/optim.hpp"

namespace nptad {

// ------------------------------------------------------------- schema ----

FeatureSchema FeatureSchema::fit(const TabularDataset& train) {
  if (train.n_rows() == 0) throw schema_error("FeatureSchema::fit: empty train split");
  FeatureSchema out;
  for (const Column& col : train.features) {
    FeatureSpec spec;
    spec.name = col.name;
    if (col.categorical) {
      spec.kind = FeatureKind::categorical;
      std::set<std::string> uniq(col.cat.begin(), col.cat.end());
      spec.categories.assign(uniq.begin(), uniq.end());  // sorted by std::set
    } else {
      spec.kind = FeatureKind::numerical;
      const double n = static_cast<double>(col.num.size());
      double mean = 0.0;
      for (double v : col.num) mean += v;
      mean /= n;
      double var = 0.0;
      for (double v : col.num) var += (v - mean) * (v - mean);
      var /= n;  // population variance
      spec.mean = mean;
      spec.stdev = var > 0.0 ? std::sqrt(var) : 1.0;  // constant column guard
    }
    out.features.push_back(std::move(spec));
  }
  return out;
}

int FeatureSchema::category_index(std::size_t j, const std::string& value) const {
  const auto& cats = features[j].categories;
  const auto it = std::lower_bound(cats.begin(), cats.end(), value);
  if (it == cats.end() || *it != value) return -1;
  return static_cast<int>(it - cats.begin());
}

// ------------------------------------------------------------- config ----

namespace {

void check_config_shape(const NptConfig& c, int d_features, bool require_depth) {
  if (require_depth && c.depth < 1)
    throw std::invalid_argument("NptConfig: depth must be >= 1");
  if (c.depth < 0) throw std::invalid_argument("NptConfig: depth must be non-negative");
  if (c.heads < 1) throw std::invalid_argument("NptConfig: heads must be >= 1");
  if (c.embed_dim < 1) throw std::invalid_argument("NptConfig: embed_dim must be >= 1");
  if (c.ff_mult < 1) throw std::invalid_argument("NptConfig: ff_mult must be >= 1");
  if (c.dropout < 0.0 || c.dropout >= 1.0)
    throw std::invalid_argument("NptConfig: dropout must be in [0,1)");
  if (c.ln_eps <= 0.0) throw std::invalid_argument("NptConfig: ln_eps must be positive");
  if (d_features < 1) throw std::invalid_argument("NptConfig: need at least one feature");
  bool has_abd = false;
  bool has_aba = false;
  for (int l = 0; l < c.depth; ++l)
    (!c.aba_only && l % 2 == 0 ? has_abd : has_aba) = true;
  if (has_aba && c.embed_dim % c.heads != 0)
    throw std::invalid_argument("NptConfig: embed_dim must be divisible by heads");
  if (has_abd && (static_cast<std::int64_t>(d_features) * c.embed_dim) % c.heads != 0)
    throw std::invalid_argument("NptConfig: d*embed_dim must be divisible by heads");
}

}  // namespace

void NptConfig::validate(int d_features) const { check_config_shape(*this, d_features, true); }

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (batch_size == 0 || batch_size < -1)
    throw std::invalid_argument("TrainConfig: batch_size must be -1 (full) or positive");
  if (lr <= 0.0) throw std::invalid_argument("TrainConfig: lr must be positive");
  if (p_mask < 0.0 || p_mask >= 1.0)
    throw std::invalid_argument("TrainConfig: p_mask must be in [0,1)");
  if (clip_norm <= 0.0) throw std::invalid_argument("TrainConfig: clip_norm must be positive");
  if (flat_fraction < 0.0 || flat_fraction > 1.0)
    throw std::invalid_argument("TrainConfig: flat_fraction must be in [0,1]");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
    throw std::invalid_argument("TrainConfig: betas must be in [0,1)");
  if (adam_eps <= 0.0) throw std::invalid_argument("TrainConfig: adam_eps must be positive");
  if (weight_decay < 0.0) throw std::invalid_argument("TrainConfig: weight_decay must be >= 0");
  if (la_alpha <= 0.0 || la_alpha > 1.0)
    throw std::invalid_argument("TrainConfig: la_alpha must be in (0,1]");
  if (la_k < 1) throw std::invalid_argument("TrainConfig: la_k must be >= 1");
}

// ------------------------------------------------------------- encode ----

EncodedBatch encode(const TabularDataset& rows, const FeatureSchema& schema,
                    std::vector<std::uint8_t> mask) {
  const std::size_t n = rows.n_rows();
  const auto d = static_cast<std::size_t>(schema.d());
  if (rows.d() != d) throw schema_error("encode: dataset feature count does not match schema");
  if (mask.size() != n * d) throw std::invalid_argument("encode: mask must be n*d entries");
  for (std::size_t j = 0; j < d; ++j) {
    const bool is_cat = schema.features[j].kind == FeatureKind::categorical;
    if (rows.features[j].name != schema.features[j].name ||
        rows.features[j].categorical != is_cat)
      throw schema_error("encode: column '" + rows.features[j].name +
                         "' does not match the fitted schema");
  }

  EncodedBatch out;
  out.n = n;
  out.mask = std::move(mask);
  out.num_targets.resize(d);
  out.cat_targets.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    const int w = schema.features[j].width();
    out.feats.push_back(make_tensor({static_cast<std::int64_t>(n), w + 1}));
    if (schema.features[j].kind == FeatureKind::numerical)
      out.num_targets[j].resize(n);
    else
      out.cat_targets[j].resize(n);
  }

  std::set<std::pair<std::size_t, std::string>> warned;
  std::vector<std::vector<double>> enc_row(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const FeatureSpec& spec = schema.features[j];
      if (spec.kind == FeatureKind::numerical) {
        const double z = (rows.features[j].num[i] - spec.mean) / spec.stdev;
        enc_row[j].assign(1, z);
        out.num_targets[j][i] = z;
      } else {
        const std::string& v = rows.features[j].cat[i];
        const int idx = schema.category_index(j, v);
        enc_row[j].assign(spec.categories.size(), 0.0);
        if (idx >= 0) {
          enc_row[j][static_cast<std::size_t>(idx)] = 1.0;
        } else if (warned.insert({j, v}).second) {
          out.warnings.push_back("feature '" + spec.name + "': unseen category '" + v +
                                 "' encoded as zeros");
        }
        out.cat_targets[j][i] = idx;
      }
    }
    Mask row_mask;
    row_mask.bits.assign(out.mask.begin() + static_cast<std::ptrdiff_t>(i * d),
                         out.mask.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
    const auto masked = apply_mask(enc_row, row_mask);
    for (std::size_t j = 0; j < d; ++j) {
      const auto w1 = masked[j].size();  // width_j + 1
      std::copy(masked[j].begin(), masked[j].end(), out.feats[j]->values.begin() +
                                                        static_cast<std::ptrdiff_t>(i * w1));
    }
  }
  return out;
}

// -------------------------------------------------------------- model ----

namespace {

TensorPtr param(std::vector<std::int64_t> shape) { return make_tensor(std::move(shape), true); }

}  // namespace

NptModel::NptModel(NptConfig cfg, FeatureSchema schema)
    : cfg_(cfg), schema_(std::move(schema)) {
  check_config_shape(cfg_, schema_.d(), /*require_depth=*/false);
  const int d = schema_.d();
  const int e = cfg_.embed_dim;
  for (int j = 0; j < d; ++j) {
    const int w = schema_.features[static_cast<std::size_t>(j)].width();
    params_.in_w.push_back(param({w + 1, e}));
    params_.in_b.push_back(param({e}));
    params_.out_w.push_back(param({e, w}));
    params_.out_b.push_back(param({w}));
  }
  params_.index_embed = param({d, e});
  params_.type_embed = param({2, e});
  for (int l = 0; l < cfg_.depth; ++l) {
    const bool is_abd = !cfg_.aba_only && l % 2 == 0;
    const int h = is_abd ? d * e : e;
    LayerParams lp;
    lp.width = h;
    lp.ln1_g = param({h});
    lp.ln1_b = param({h});
    lp.wq = param({h, h});
    lp.wk = param({h, h});
    lp.wv = param({h, h});
    lp.wo = param({h, h});
    lp.w_res = param({h, h});
    lp.ln2_g = param({h});
    lp.ln2_b = param({h});
    lp.ff1_w = param({h, cfg_.ff_mult * h});
    lp.ff1_b = param({cfg_.ff_mult * h});
    lp.ff2_w = param({cfg_.ff_mult * h, h});
    lp.ff2_b = param({h});
    params_.layers.push_back(std::move(lp));
  }
}

std::vector<std::pair<std::string, TensorPtr>> NptParameters::named() const {
  std::vector<std::pair<std::string, TensorPtr>> out;
  for (std::size_t j = 0; j < in_w.size(); ++j) {
    out.emplace_back("in." + std::to_string(j) + ".w", in_w[j]);
    out.emplace_back("in." + std::to_string(j) + ".b", in_b[j]);
  }
  out.emplace_back("index_embed", index_embed);
  out.emplace_back("type_embed", type_embed);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string p = "layer." + std::to_string(l) + ".";
    const LayerParams& lp = layers[l];
    out.emplace_back(p + "ln1.g", lp.ln1_g);
    out.emplace_back(p + "ln1.b", lp.ln1_b);
    out.emplace_back(p + "wq", lp.wq);
    out.emplace_back(p + "wk", lp.wk);
    out.emplace_back(p + "wv", lp.wv);
    out.emplace_back(p + "wo", lp.wo);
    out.emplace_back(p + "w_res", lp.w_res);
    out.emplace_back(p + "ln2.g", lp.ln2_g);
    out.emplace_back(p + "ln2.b", lp.ln2_b);
    out.emplace_back(p + "ff1.w", lp.ff1_w);
    out.emplace_back(p + "ff1.b", lp.ff1_b);
    out.emplace_back(p + "ff2.w", lp.ff2_w);
    out.emplace_back(p + "ff2.b", lp.ff2_b);
  }
  for (std::size_t j = 0; j < out_w.size(); ++j) {
    out.emplace_back("out." + std::to_string(j) + ".w", out_w[j]);
    out.emplace_back("out." + std::to_string(j) + ".b", out_b[j]);
  }
  return out;
}

std::vector<TensorPtr> NptParameters::all() const {
  std::vector<TensorPtr> out;
  for (const auto& [name, t] : named()) out.push_back(t);
  return out;
}

void NptModel::init_params(Rng& rng) {
  const int e = cfg_.embed_dim;
  auto uniform_fill = [&rng](const TensorPtr& t, double fan_in) {
    const double bound = 1.0 / std::sqrt(fan_in);
    for (auto& v : t->values) v = (rng.uniform() * 2.0 - 1.0) * bound;
  };
  for (std::size_t j = 0; j < params_.in_w.size(); ++j) {
    const double fan = static_cast<double>(params_.in_w[j]->shape[0]);
    uniform_fill(params_.in_w[j], fan);
    uniform_fill(params_.in_b[j], fan);
  }
  uniform_fill(params_.index_embed, e);
  uniform_fill(params_.type_embed, e);
  for (LayerParams& lp : params_.layers) {
    const double h = static_cast<double>(lp.width);
    std::fill(lp.ln1_g->values.begin(), lp.ln1_g->values.end(), 1.0);
    std::fill(lp.ln1_b->values.begin(), lp.ln1_b->values.end(), 0.0);
    uniform_fill(lp.wq, h);
    uniform_fill(lp.wk, h);
    uniform_fill(lp.wv, h);
    uniform_fill(lp.wo, h);
    uniform_fill(lp.w_res, h);
    std::fill(lp.ln2_g->values.begin(), lp.ln2_g->values.end(), 1.0);
    std::fill(lp.ln2_b->values.begin(), lp.ln2_b->values.end(), 0.0);
    uniform_fill(lp.ff1_w, h);
    uniform_fill(lp.ff1_b, h);
    uniform_fill(lp.ff2_w, cfg_.ff_mult * h);
    uniform_fill(lp.ff2_b, cfg_.ff_mult * h);
  }
  for (std::size_t j = 0; j < params_.out_w.size(); ++j) {
    uniform_fill(params_.out_w[j], e);
    uniform_fill(params_.out_b[j], e);
  }
}

TensorPtr NptModel::mhsa_block(Tape* tape, const TensorPtr& x, const LayerParams& lp,
                               Rng* train_rng) const {
  if (x->shape.size() != 3 || x->shape[2] != lp.width)
    throw std::invalid_argument("mhsa_block: input must be [B,T,h] with h matching the layer");
  const std::int64_t b = x->shape[0];
  const std::int64_t t = x->shape[1];
  const std::int64_t h = x->shape[2];
  const std::int64_t bt = b * t;
  const int heads = cfg_.heads;
  const double alpha = 1.0 / std::sqrt(static_cast<double>(h / heads));

  // Res(H) = H * W_res + MHSelfAtt(LN(H))
  TensorPtr ln1 = ops::layer_norm(tape, x, lp.ln1_g, lp.ln1_b, cfg_.ln_eps);
  TensorPtr flat = ops::reshape(tape, ln1, {bt, h});
  TensorPtr qh = ops::split_heads(tape, ops::reshape(tape, ops::matmul(tape, flat, lp.wq), {b, t, h}), heads);
  TensorPtr kh = ops::split_heads(tape, ops::reshape(tape, ops::matmul(tape, flat, lp.wk), {b, t, h}), heads);
  TensorPtr vh = ops::split_heads(tape, ops::reshape(tape, ops::matmul(tape, flat, lp.wv), {b, t, h}), heads);
  TensorPtr attn = ops::softmax(tape, ops::bmm_nt(tape, qh, kh, alpha), -1);
  if (train_rng != nullptr) attn = ops::dropout(tape, attn, cfg_.dropout, *train_rng);
  TensorPtr ctx = ops::merge_heads(tape, ops::bmm(tape, attn, vh), heads);
  TensorPtr att_out = ops::matmul(tape, ops::reshape(tape, ctx, {bt, h}), lp.wo);
  TensorPtr res =
      ops::add(tape, ops::matmul(tape, ops::reshape(tape, x, {bt, h}), lp.w_res), att_out);

  // MHSA(H) = Res(H) + rFF(LN(Res(H)))
  TensorPtr ln2 = ops::layer_norm(tape, res, lp.ln2_g, lp.ln2_b, cfg_.ln_eps);
  TensorPtr hidden = ops::gelu(tape, ops::add_rows(tape, ops::matmul(tape, ln2, lp.ff1_w), lp.ff1_b));
  if (train_rng != nullptr) hidden = ops::dropout(tape, hidden, cfg_.dropout, *train_rng);
  TensorPtr ff = ops::add_rows(tape, ops::matmul(tape, hidden, lp.ff2_w), lp.ff2_b);
  return ops::reshape(tape, ops::add(tape, res, ff), {b, t, h});
}

TensorPtr NptModel::abd(Tape* tape, const TensorPtr& h, const LayerParams& lp,
                        Rng* train_rng) const {
  // attention between datapoints: one sequence of n tokens of width d*e
  const std::int64_t n = h->shape[0];
  const std::int64_t de = h->shape[1] * h->shape[2];
  TensorPtr y = mhsa_block(tape, ops::reshape(tape, h, {1, n, de}), lp, train_rng);
  return ops::reshape(tape, y, h->shape);
}

TensorPtr NptModel::aba(Tape* tape, const TensorPtr& h, const LayerParams& lp,
                        Rng* train_rng) const {
  // attention between attributes: n independent sequences of d tokens
  return mhsa_block(tape, h, lp, train_rng);
}

std::vector<TensorPtr> NptModel::forward(Tape* tape, const EncodedBatch& batch,
                                         Rng* train_rng) const {
  const auto d = static_cast<std::size_t>(schema_.d());
  if (batch.feats.size() != d) throw std::invalid_argument("forward: batch/schema mismatch");

  std::vector<TensorPtr> embedded;
  embedded.reserve(d);
  for (std::size_t j = 0; j < d; ++j)
    embedded.push_back(ops::add_rows(
        tape, ops::matmul(tape, batch.feats[j], params_.in_w[j]), params_.in_b[j]));
  TensorPtr h = ops::stack_features(tape, embedded);  // [n, d, e]
  h = ops::add_rows(tape, h, params_.index_embed);
  std::vector<std::int64_t> kinds;
  kinds.reserve(d);
  for (std::size_t j = 0; j < d; ++j)
    kinds.push_back(schema_.features[j].kind == FeatureKind::numerical ? 0 : 1);
  TensorPtr type_rows = ops::gather_rows(tape, params_.type_embed, std::move(kinds));
  h = ops::add_rows(tape, h, type_rows);

  for (int l = 0; l < cfg_.depth; ++l) {
    const LayerParams& lp = params_.layers[static_cast<std::size_t>(l)];
    const bool is_abd = !cfg_.aba_only && l % 2 == 0;
    h = is_abd ? abd(tape, h, lp, train_rng) : aba(tape, h, lp, train_rng);
  }

  std::vector<TensorPtr> outs;
  outs.reserve(d);
  for (std::size_t j = 0; j < d; ++j)
    outs.push_back(ops::add_rows(
        tape, ops::matmul(tape, ops::slice_feature(tape, h, static_cast<std::int64_t>(j)),
                          params_.out_w[j]),
        params_.out_b[j]));
  return outs;
}

namespace {

// Masked entries that actually contribute loss (categoricals with an unseen
// target are skipped in both the numerator and the denominator).
std::size_t valid_masked_count(const EncodedBatch& batch) {
  const std::size_t d = batch.num_targets.size();
  std::size_t count = 0;
  for (std::size_t i = 0; i < batch.n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      if (batch.mask[i * d + j] == 0) continue;
      if (!batch.cat_targets[j].empty() && batch.cat_targets[j][i] < 0) continue;
      ++count;
    }
  return count;
}

}  // namespace

TensorPtr NptModel::masked_loss(Tape* tape, const std::vector<TensorPtr>& outs,
                                const EncodedBatch& batch) const {
  const auto d = static_cast<std::size_t>(schema_.d());
  if (outs.size() != d) throw std::invalid_argument("masked_loss: output/schema mismatch");
  const std::size_t count = valid_masked_count(batch);
  if (count == 0) return scalar_tensor(0.0);

  std::vector<std::uint8_t> col(batch.n);
  TensorPtr total;
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < batch.n; ++i) col[i] = batch.mask[i * d + j];
    TensorPtr term;
    if (schema_.features[j].kind == FeatureKind::numerical)
      term = ops::masked_sq_err(tape, outs[j], batch.num_targets[j], col);
    else
      term = ops::masked_ce(tape, outs[j], batch.cat_targets[j], col);
    total = total == nullptr ? term : ops::add(tape, total, term);
  }
  return ops::scale(tape, total, 1.0 / static_cast<double>(count));
}

std::vector<double> NptModel::per_sample_losses(const std::vector<TensorPtr>& outs,
                                                const EncodedBatch& batch) const {
  const auto d = static_cast<std::size_t>(schema_.d());
  std::vector<double> losses(batch.n, 0.0);
  for (std::size_t i = 0; i < batch.n; ++i) {
    double acc = 0.0;
    std::size_t cnt = 0;
    for (std::size_t j = 0; j < d; ++j) {
      if (batch.mask[i * d + j] == 0) continue;
      if (schema_.features[j].kind == FeatureKind::numerical) {
        const double diff = outs[j]->values[i] - batch.num_targets[j][i];
        acc += diff * diff;
        ++cnt;
      } else {
        const int label = batch.cat_targets[j][i];
        if (label < 0) continue;
        const auto c = static_cast<std::size_t>(outs[j]->shape[1]);
        const double* row = outs[j]->values.data() + i * c;
        double mx = row[0];
        for (std::size_t k = 1; k < c; ++k) mx = std::fmax(mx, row[k]);
        double z = 0.0;
        for (std::size_t k = 0; k < c; ++k) z += std::exp(row[k] - mx);
        acc += std::log(z) + mx - row[static_cast<std::size_t>(label)];
        ++cnt;
      }
    }
    losses[i] = cnt == 0 ? 0.0 : acc / static_cast<double>(cnt);
  }
  return losses;
}

// ----------------------------------------------------------- training ----

NptModel train_npt(const NptConfig& cfg, const TrainConfig& tc, const TabularDataset& train,
                   std::uint64_t seed, const TrainLogFn& log) {
  tc.validate();
  const FeatureSchema schema = FeatureSchema::fit(train);
  cfg.validate(schema.d());

  NptModel model(cfg, schema);
  Rng init_rng(seed, "init");
  model.init_params(init_rng);

  Rng mask_rng(seed, "train-mask");
  Rng drop_rng(seed, "dropout");
  Rng shuffle_rng(seed, "shuffle");

  const std::size_t n = train.n_rows();
  const std::size_t batch =
      tc.batch_size <= 0 ? n : std::min<std::size_t>(static_cast<std::size_t>(tc.batch_size), n);
  const auto steps_per_epoch = static_cast<std::int64_t>((n + batch - 1) / batch);
  const std::int64_t total_steps = static_cast<std::int64_t>(tc.epochs) * steps_per_epoch;

  const std::vector<TensorPtr> params = model.params().all();
  LambState lamb_state(params);
  LambConfig lamb_cfg{tc.beta1, tc.beta2, tc.adam_eps, tc.weight_decay};
  LookaheadState la_state(params);
  LookaheadConfig la_cfg{tc.la_alpha, tc.la_k};

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  std::int64_t step = 0;
  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    if (batch < n) shuffle_rng.shuffle(order.begin(), order.end());
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(n, start + batch);
      EncodedBatch enc;
      if (batch == n) {
        enc = encode(train, schema,
                     sample_train_mask(n, schema.d(), tc.p_mask, mask_rng));
      } else {
        const std::span<const std::size_t> idx(order.data() + start, stop - start);
        const TabularDataset sub = train.select(idx);
        enc = encode(sub, schema,
                     sample_train_mask(sub.n_rows(), schema.d(), tc.p_mask, mask_rng));
      }

      Tape tape;
      const std::vector<TensorPtr> outs = model.forward(&tape, enc, &drop_rng);
      const TensorPtr loss = model.masked_loss(&tape, outs, enc);
      for (const TensorPtr& p : params) {
        p->ensure_grad();
        p->zero_grad();
      }
      tape.backward(loss);

      const double gnorm = clip_gradients(params, tc.clip_norm);
      const double lr = lr_at(step, total_steps, tc.lr, tc.flat_fraction);
      lamb_step(params, lamb_state, lamb_cfg, lr);
      lookahead_update(params, la_state, la_cfg);

      if (log) log(TrainLogEntry{epoch, step, lr, loss->values[0], gnorm});
      ++step;
    }
  }
  return model;
}

// --------------------------------------------------------- checkpoints ----

namespace {

constexpr char kMagic[8] = {'N', 'P', 'T', 'A', 'D', 'C', 'K', '1'};

nlohmann::json schema_to_json(const FeatureSchema& schema) {
  nlohmann::json feats = nlohmann::json::array();
  for (const FeatureSpec& f : schema.features) {
    nlohmann::json jf;
    jf["name"] = f.name;
    jf["kind"] = f.kind == FeatureKind::numerical ? "numerical" : "categorical";
    if (f.kind == FeatureKind::numerical) {
      jf["mean"] = f.mean;
      jf["stdev"] = f.stdev;
    } else {
      jf["categories"] = f.categories;
    }
    feats.push_back(std::move(jf));
  }
  return nlohmann::json{{"features", std::move(feats)}};
}

FeatureSchema schema_from_json(const nlohmann::json& j) {
  FeatureSchema schema;
  for (const auto& jf : j.at("features")) {
    FeatureSpec f;
    f.name = jf.at("name").get<std::string>();
    const std::string kind = jf.at("kind").get<std::string>();
    if (kind == "numerical") {
      f.kind = FeatureKind::numerical;
      f.mean = jf.at("mean").get<double>();
      f.stdev = jf.at("stdev").get<double>();
    } else if (kind == "categorical") {
      f.kind = FeatureKind::categorical;
      f.categories = jf.at("categories").get<std::vector<std::string>>();
    } else {
      throw io_error("checkpoint: unknown feature kind '" + kind + "'");
    }
    schema.features.push_back(std::move(f));
  }
  return schema;
}

}  // namespace

void save_checkpoint(const std::string& path, const NptModel& model, const TrainConfig& tc) {
  const NptConfig& c = model.config();
  nlohmann::json header;
  header["format"] = "nptad-checkpoint";
  header["version"] = 1;
  header["config"] = {{"depth", c.depth},     {"heads", c.heads},
                      {"embed_dim", c.embed_dim}, {"dropout", c.dropout},
                      {"ff_mult", c.ff_mult}, {"aba_only", c.aba_only},
                      {"ln_eps", c.ln_eps}};
  header["train"] = {{"epochs", tc.epochs},
                     {"batch_size", tc.batch_size},
                     {"lr", tc.lr},
                     {"p_mask", tc.p_mask},
                     {"clip_norm", tc.clip_norm},
                     {"flat_fraction", tc.flat_fraction},
                     {"beta1", tc.beta1},
                     {"beta2", tc.beta2},
                     {"adam_eps", tc.adam_eps},
                     {"weight_decay", tc.weight_decay},
                     {"la_alpha", tc.la_alpha},
                     {"la_k", tc.la_k}};
  header["schema"] = schema_to_json(model.schema());
  nlohmann::json manifest = nlohmann::json::array();
  const auto named = model.params().named();
  for (const auto& [name, t] : named)
    manifest.push_back({{"name", name}, {"shape", t->shape}});
  header["tensors"] = std::move(manifest);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write checkpoint " + path);
  const std::string htext = header.dump();
  const std::uint64_t hlen = htext.size();
  out.write(kMagic, sizeof(kMagic));
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
  for (const auto& [name, t] : named)
    out.write(reinterpret_cast<const char*>(t->values.data()),
              static_cast<std::streamsize>(t->values.size() * sizeof(double)));
  if (!out) throw io_error("short write while saving checkpoint " + path);
}

NptModel load_checkpoint(const std::string& path, TrainConfig* train_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot read checkpoint " + path);
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw io_error("checkpoint " + path + " has a bad magic header");
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  if (!in || hlen == 0 || hlen > (1ull << 30))
    throw io_error("checkpoint " + path + " has a corrupt header length");
  std::string htext(hlen, '\0');
  in.read(htext.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw io_error("checkpoint " + path + " is truncated in the header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(htext);
  } catch (const nlohmann::json::exception& e) {
    throw io_error("checkpoint " + path + " header is not valid JSON: " + e.what());
  }
  if (header.value("format", "") != "nptad-checkpoint" || header.value("version", 0) != 1)
    throw io_error("checkpoint " + path + " has an unsupported format/version");

  NptConfig cfg;
  const auto& jc = header.at("config");
  cfg.depth = jc.at("depth").get<int>();
  cfg.heads = jc.at("heads").get<int>();
  cfg.embed_dim = jc.at("embed_dim").get<int>();
  cfg.dropout = jc.at("dropout").get<double>();
  cfg.ff_mult = jc.at("ff_mult").get<int>();
  cfg.aba_only = jc.at("aba_only").get<bool>();
  cfg.ln_eps = jc.at("ln_eps").get<double>();

  if (train_out != nullptr) {
    const auto& jt = header.at("train");
    train_out->epochs = jt.at("epochs").get<int>();
    train_out->batch_size = jt.at("batch_size").get<int>();
    train_out->lr = jt.at("lr").get<double>();
    train_out->p_mask = jt.at("p_mask").get<double>();
    train_out->clip_norm = jt.at("clip_norm").get<double>();
    train_out->flat_fraction = jt.at("flat_fraction").get<double>();
    train_out->beta1 = jt.at("beta1").get<double>();
    train_out->beta2 = jt.at("beta2").get<double>();
    train_out->adam_eps = jt.at("adam_eps").get<double>();
    train_out->weight_decay = jt.at("weight_decay").get<double>();
    train_out->la_alpha = jt.at("la_alpha").get<double>();
    train_out->la_k = jt.at("la_k").get<int>();
  }

  NptModel model(cfg, schema_from_json(header.at("schema")));
  const auto named = model.params().named();
  const auto& manifest = header.at("tensors");
  if (manifest.size() != named.size())
    throw io_error("checkpoint " + path + ": expected " + std::to_string(named.size()) +
                   " tensors, header lists " + std::to_string(manifest.size()));
  for (std::size_t i = 0; i < named.size(); ++i) {
    const auto& [name, t] = named[i];
    if (manifest[i].at("name").get<std::string>() != name)
      throw io_error("checkpoint " + path + ": tensor " + std::to_string(i) + " is '" +
                     manifest[i].at("name").get<std::string>() + "', expected '" + name + "'");
    const auto shape = manifest[i].at("shape").get<std::vector<std::int64_t>>();
    if (shape != t->shape) {
      std::ostringstream msg;
      msg << "checkpoint " << path << ": tensor '" << name << "' shape mismatch";
      throw io_error(msg.str());
    }
    in.read(reinterpret_cast<char*>(t->values.data()),
            static_cast<std::streamsize>(t->values.size() * sizeof(double)));
    if (!in) throw io_error("checkpoint " + path + " is truncated at tensor '" + name + "'");
  }
  in.peek();
  if (!in.eof()) throw io_error("checkpoint " + path + " has trailing bytes");
  return model;
}

}  // namespace nptad
