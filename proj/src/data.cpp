#include "nptad/data.hpp"

#include <algorithm>
#include <cfloat>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "nptad/rng.hpp"

namespace nptad {

namespace {

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted)
    throw io_error("line " + std::to_string(line_no) + ": unterminated quoted field");
  fields.push_back(std::move(cur));
  return fields;
}

double parse_number(const std::string& text, std::size_t line_no, const std::string& col) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last || !std::isfinite(v))
    throw io_error("line " + std::to_string(line_no) + ", column '" + col +
                   "': malformed numeric value '" + text + "'");
  return v;
}

std::vector<std::string> sidecar_categoricals(const std::string& csv_path) {
  const std::string side = csv_path + ".schema.json";
  if (!std::filesystem::exists(side)) return {};
  std::ifstream in(side);
  if (!in) throw io_error("cannot read schema sidecar " + side);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw io_error("schema sidecar " + side + " is not valid JSON: " + e.what());
  }
  std::vector<std::string> cats;
  if (doc.contains("categorical")) {
    if (!doc["categorical"].is_array())
      throw schema_error("schema sidecar " + side + ": 'categorical' must be an array");
    for (const auto& v : doc["categorical"]) {
      if (!v.is_string())
        throw schema_error("schema sidecar " + side + ": categorical entries must be strings");
      cats.push_back(v.get<std::string>());
    }
  }
  return cats;
}

}  // namespace

std::size_t TabularDataset::anomaly_count() const {
  std::size_t c = 0;
  for (auto l : labels) c += l;
  return c;
}

TabularDataset TabularDataset::select(std::span<const std::size_t> idx) const {
  TabularDataset out;
  out.source = source;
  out.features.reserve(features.size());
  for (const Column& col : features) {
    Column c;
    c.name = col.name;
    c.categorical = col.categorical;
    for (std::size_t i : idx) {
      if (col.categorical)
        c.cat.push_back(col.cat[i]);
      else
        c.num.push_back(col.num[i]);
    }
    out.features.push_back(std::move(c));
  }
  out.labels.reserve(idx.size());
  out.row_ids.reserve(idx.size());
  for (std::size_t i : idx) {
    out.labels.push_back(labels[i]);
    out.row_ids.push_back(row_ids[i]);
  }
  return out;
}

TabularDataset load_csv(const std::string& path, const std::string& label_col,
                        std::span<const std::string> categorical) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot read dataset file " + path);

  std::string line;
  if (!std::getline(in, line)) throw io_error("dataset file " + path + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_csv_line(line, 1);

  std::set<std::string> seen;
  for (const auto& h : header)
    if (!seen.insert(h).second)
      throw schema_error("duplicate column '" + h + "' in " + path);

  std::set<std::string> cat_names;
  for (const auto& c : sidecar_categoricals(path)) cat_names.insert(c);
  for (const auto& c : categorical) cat_names.insert(c);
  for (const auto& c : cat_names)
    if (std::find(header.begin(), header.end(), c) == header.end())
      throw schema_error("categorical column '" + c + "' not present in " + path);
  if (std::find(header.begin(), header.end(), label_col) == header.end())
    throw schema_error("label column '" + label_col + "' not present in " + path);
  if (cat_names.count(label_col) != 0)
    throw schema_error("label column '" + label_col + "' cannot be categorical");

  std::size_t label_idx = 0;
  TabularDataset data;
  data.source = path;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == label_col) {
      label_idx = j;
      continue;
    }
    Column col;
    col.name = header[j];
    col.categorical = cat_names.count(header[j]) != 0;
    data.features.push_back(std::move(col));
  }
  if (data.features.empty()) throw schema_error("dataset " + path + " has no feature columns");

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;  // ignore trailing blank lines
    const std::vector<std::string> fields = split_csv_line(line, line_no);
    if (fields.size() != header.size())
      throw io_error("line " + std::to_string(line_no) + ": expected " +
                     std::to_string(header.size()) + " fields, found " +
                     std::to_string(fields.size()));
    std::size_t fi = 0;
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (j == label_idx) continue;
      Column& col = data.features[fi++];
      if (fields[j].empty())
        throw io_error("line " + std::to_string(line_no) + ", column '" + col.name +
                       "': missing value");
      if (col.categorical)
        col.cat.push_back(fields[j]);
      else
        col.num.push_back(parse_number(fields[j], line_no, col.name));
    }
    const double lv = parse_number(fields[label_idx], line_no, label_col);
    if (lv != 0.0 && lv != 1.0)
      throw schema_error("line " + std::to_string(line_no) + ": label must be 0 or 1, got '" +
                         fields[label_idx] + "'");
    data.labels.push_back(lv == 1.0 ? 1 : 0);
    data.row_ids.push_back(static_cast<std::int64_t>(data.labels.size()) - 1);
  }
  if (data.labels.empty()) throw io_error("dataset " + path + " has a header but no rows");
  return data;
}

Split split_dataset(const TabularDataset& data, const SplitSpec& spec) {
  if (spec.train_fraction <= 0.0 || spec.train_fraction >= 1.0)
    throw std::invalid_argument("split_dataset: train_fraction must be in (0,1)");
  std::vector<std::size_t> normals;
  std::vector<std::size_t> anomalies;
  for (std::size_t i = 0; i < data.n_rows(); ++i)
    (data.labels[i] == 0 ? normals : anomalies).push_back(i);
  if (normals.empty()) throw schema_error("split_dataset: dataset has no normal samples");

  const auto train_count =
      static_cast<std::size_t>(spec.train_fraction * static_cast<double>(normals.size()));
  Rng rng(spec.seed, "split");
  std::vector<std::size_t> pool = normals;
  rng.shuffle(pool.begin(), pool.end());
  std::vector<std::size_t> train_idx(pool.begin(), pool.begin() + train_count);
  std::sort(train_idx.begin(), train_idx.end());

  std::vector<std::uint8_t> in_train(data.n_rows(), 0);
  for (std::size_t i : train_idx) in_train[i] = 1;
  std::vector<std::size_t> val_idx;
  for (std::size_t i = 0; i < data.n_rows(); ++i)
    if (!in_train[i]) val_idx.push_back(i);

  return Split{data.select(train_idx), data.select(val_idx)};
}

Split gen_synthetic(const SyntheticSpec& spec) {
  if (spec.contamination_share < 0.0 || spec.contamination_share >= 0.5)
    throw std::invalid_argument("gen_synthetic: contamination_share must be in [0, 0.5)");
  if (spec.dims < 1 || spec.train_normals < 1 || spec.val_normals < 1 || spec.val_anomalies < 1)
    throw std::invalid_argument("gen_synthetic: sizes must be positive");

  const auto train_anoms = static_cast<int>(std::ceil(
      static_cast<double>(spec.train_normals) * spec.contamination_share /
      (1.0 - spec.contamination_share)));

  Rng rng(spec.seed, "synthetic");
  std::ostringstream tag;
  tag << "synthetic(share=" << spec.contamination_share << ",seed=" << spec.seed << ")";

  auto make_set = [&](int n_normal, int n_anom, std::int64_t id_base) {
    TabularDataset ds;
    ds.source = tag.str();
    for (int j = 0; j < spec.dims; ++j) {
      Column col;
      col.name = "x" + std::to_string(j);
      ds.features.push_back(std::move(col));
    }
    for (int i = 0; i < n_normal + n_anom; ++i) {
      const bool anomaly = i >= n_normal;
      for (int j = 0; j < spec.dims; ++j)
        ds.features[static_cast<std::size_t>(j)].num.push_back(
            rng.normal() + (anomaly ? spec.anomaly_offset : 0.0));
      ds.labels.push_back(anomaly ? 1 : 0);
      ds.row_ids.push_back(id_base + i);
    }
    return ds;
  };

  Split out;
  out.train = make_set(spec.train_normals, train_anoms, 0);
  out.val = make_set(spec.val_normals, spec.val_anomalies,
                     static_cast<std::int64_t>(out.train.n_rows()));
  return out;
}

}  // namespace nptad
