#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nptad {

// Raised for unreadable/malformed input files (message cites row/column).
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Raised for schema-level problems (unknown columns, bad labels, ...).
struct schema_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Column {
  std::string name;
  bool categorical = false;
  std::vector<double> num;       // used when !categorical
  std::vector<std::string> cat;  // used when categorical
};

struct TabularDataset {
  std::string source;                 // file path or generator tag
  std::vector<Column> features;       // label column excluded
  std::vector<std::uint8_t> labels;   // 0 = normal, 1 = anomaly
  std::vector<std::int64_t> row_ids;  // original row indices

  std::size_t n_rows() const { return labels.size(); }
  std::size_t d() const { return features.size(); }
  std::size_t anomaly_count() const;
  TabularDataset select(std::span<const std::size_t> idx) const;
};

// UTF-8 CSV with a header row, comma separated, double quotes honored.
// `label_col` must name a 0/1 column.  Categorical columns come from the
// optional sidecar `<path>.schema.json` ({"categorical": [...]}) plus the
// explicit override list; all names must exist.  Missing values and malformed
// numerics abort with the offending row cited.
TabularDataset load_csv(const std::string& path, const std::string& label_col,
                        std::span<const std::string> categorical = {});

struct SplitSpec {
  double train_fraction = 0.5;  // of the normal samples, rounded down
  std::uint64_t seed = 0;
};

struct Split {
  TabularDataset train;  // seeded uniform draw of the normals
  TabularDataset val;    // remaining normals + all anomalies, original order
};

Split split_dataset(const TabularDataset& data, const SplitSpec& spec);

// Two well-separated isotropic Gaussians in 4-D: normals at the origin,
// anomalies at (8,8,8,8), unit variance.  The train side holds
// `train_normals` normals plus ceil(train_normals * share / (1 - share))
// anomalies; the validation side is fixed at 90% normals / 10% anomalies.
struct SyntheticSpec {
  double contamination_share = 0.0;  // in [0, 0.5)
  std::uint64_t seed = 0;
  int train_normals = 900;
  int val_normals = 900;
  int val_anomalies = 100;
  int dims = 4;
  double anomaly_offset = 8.0;
};

Split gen_synthetic(const SyntheticSpec& spec);

}  // namespace nptad
