#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "nptad/data.hpp"
#include "nptad/masking.hpp"
#include "nptad/rng.hpp"
#include "nptad/tensor.hpp"

namespace nptad {

enum class FeatureKind { numerical, categorical };

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::numerical;
  double mean = 0.0;   // numerical only; fitted on train
  double stdev = 1.0;  // population std; constant columns fall back to 1
  std::vector<std::string> categories;  // categorical only; sorted
  int width() const {
    return kind == FeatureKind::numerical ? 1 : static_cast<int>(categories.size());
  }
};

struct FeatureSchema {
  std::vector<FeatureSpec> features;
  int d() const { return static_cast<int>(features.size()); }
  // Normalization stats and category tables come from the train split only.
  static FeatureSchema fit(const TabularDataset& train);
  // -1 when the value was never seen during fitting
  int category_index(std::size_t j, const std::string& value) const;
};

struct NptConfig {
  int depth = 4;      // alternating ABD/ABA, starting with ABD
  int heads = 4;
  int embed_dim = 16;
  double dropout = 0.1;  // attention weights + rFF hidden
  int ff_mult = 4;
  bool aba_only = false;  // per-sample-only baseline variant
  double ln_eps = 1e-5;
  // Throws std::invalid_argument on inconsistent settings for d features.
  void validate(int d_features) const;
};

// One batch ready for the network: masked payloads with indicators, plus the
// reconstruction targets in normalized/index space.
struct EncodedBatch {
  std::size_t n = 0;
  std::vector<TensorPtr> feats;                  // per feature [n, width_j+1]
  std::vector<std::vector<double>> num_targets;  // per feature; empty for cat
  std::vector<std::vector<int>> cat_targets;     // per feature; -1 = unseen
  std::vector<std::uint8_t> mask;                // n x d, row-major
  std::vector<std::string> warnings;             // e.g. unseen categories
};

// mask must be n*d entries (1 = hidden).  Unseen categories encode as an
// all-zero one-hot and produce one warning per (feature, value).
EncodedBatch encode(const TabularDataset& rows, const FeatureSchema& schema,
                    std::vector<std::uint8_t> mask);

struct LayerParams {
  int width = 0;  // token width h for this block (d*e for ABD, e for ABA)
  TensorPtr ln1_g, ln1_b;
  TensorPtr wq, wk, wv, wo, w_res;
  TensorPtr ln2_g, ln2_b;
  TensorPtr ff1_w, ff1_b, ff2_w, ff2_b;
};

struct NptParameters {
  std::vector<TensorPtr> in_w, in_b;   // per feature: [width_j+1, e], [e]
  TensorPtr index_embed;               // [d, e]
  TensorPtr type_embed;                // [2, e]: numerical row 0, categorical row 1
  std::vector<LayerParams> layers;
  std::vector<TensorPtr> out_w, out_b;  // per feature: [e, width_j], [width_j]
  // Stable flat views used by the optimizer and the checkpoint container.
  std::vector<TensorPtr> all() const;
  std::vector<std::pair<std::string, TensorPtr>> named() const;
};

class NptModel {
 public:
  NptModel(NptConfig cfg, FeatureSchema schema);

  // Symmetric uniform fan-in init for linear maps and embeddings; LN gain 1,
  // bias 0.  Deterministic given the rng stream.
  void init_params(Rng& rng);

  // Per-feature reconstructions [n, width_j] (normalized values for
  // numericals, logits for categoricals).  Dropout fires only when
  // train_rng != nullptr.
  std::vector<TensorPtr> forward(Tape* tape, const EncodedBatch& batch, Rng* train_rng) const;

  // Mean reconstruction loss over the masked entries (squared error for
  // numericals in normalized space, cross-entropy for categoricals); a batch
  // with nothing masked yields a constant 0.
  TensorPtr masked_loss(Tape* tape, const std::vector<TensorPtr>& outs,
                        const EncodedBatch& batch) const;

  // Row-wise mean masked loss (inference path for scoring).
  std::vector<double> per_sample_losses(const std::vector<TensorPtr>& outs,
                                        const EncodedBatch& batch) const;

  // One attention block on x[B,T,h]; exposed for the layer-level tests.
  TensorPtr mhsa_block(Tape* tape, const TensorPtr& x, const LayerParams& lp,
                       Rng* train_rng) const;
  TensorPtr abd(Tape* tape, const TensorPtr& h, const LayerParams& lp, Rng* train_rng) const;
  TensorPtr aba(Tape* tape, const TensorPtr& h, const LayerParams& lp, Rng* train_rng) const;

  const NptConfig& config() const { return cfg_; }
  const FeatureSchema& schema() const { return schema_; }
  NptParameters& params() { return params_; }
  const NptParameters& params() const { return params_; }

 private:
  NptConfig cfg_;
  FeatureSchema schema_;
  NptParameters params_;
};

struct TrainConfig {
  int epochs = 100;
  int batch_size = -1;  // -1 = full batch
  double lr = 0.01;
  double p_mask = 0.15;
  double clip_norm = 1.0;
  double flat_fraction = 0.7;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-6;
  double weight_decay = 0.0;
  double la_alpha = 0.5;
  int la_k = 6;
  void validate() const;
};

struct TrainLogEntry {
  int epoch = 0;
  std::int64_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
  double grad_norm = 0.0;
};
using TrainLogFn = std::function<void(const TrainLogEntry&)>;

// Fits the schema on `train`, initializes a model from `seed` and runs the
// full masked-reconstruction training loop (LAMB + Lookahead, flat-then-
// anneal schedule, global-norm clipping).  Labels in `train` are ignored.
NptModel train_npt(const NptConfig& cfg, const TrainConfig& tc, const TabularDataset& train,
                   std::uint64_t seed, const TrainLogFn& log = nullptr);

// Self-describing binary container: JSON header (config, train config,
// schema, tensor manifest) + raw little-endian doubles.  Loading validates
// the magic, version and every tensor shape.
void save_checkpoint(const std::string& path, const NptModel& model, const TrainConfig& tc);
NptModel load_checkpoint(const std::string& path, TrainConfig* train_out = nullptr);

}  // namespace nptad
