// Copyright 2026 The fedsched Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fedsched/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string_view>
#include <unordered_map>

#include "fedsched/error.hpp"
#include "fedsched/rng.hpp"

namespace fedsched {

namespace {

// Largest-remainder apportionment of `total` over `weights` (summing to 1).
std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& weights) {
  std::vector<std::size_t> counts(weights.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = weights[i] * static_cast<double>(total);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) {
    ++counts[remainders[k % remainders.size()].second];
  }
  return counts;
}

std::vector<std::size_t> split_sizes(std::size_t total, std::size_t parts) {
  std::vector<std::size_t> sizes(parts, total / parts);
  for (std::size_t i = 0; i < total % parts; ++i) ++sizes[i];
  return sizes;
}

Dataset sample_gaussian_classes(const Eigen::MatrixXd& means, const std::vector<std::size_t>& counts,
                                Rng& rng) {
  std::vector<int> labels;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    labels.insert(labels.end(), counts[c], static_cast<int>(c));
  }
  std::shuffle(labels.begin(), labels.end(), rng);

  std::normal_distribution<double> noise(0.0, 1.0);
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(labels.size()), means.cols());
  for (Eigen::Index i = 0; i < out.features.rows(); ++i) {
    for (Eigen::Index j = 0; j < means.cols(); ++j) {
      out.features(i, j) = means(labels[static_cast<std::size_t>(i)], j) + noise(rng);
    }
  }
  out.labels = std::move(labels);
  return out;
}

std::size_t holdout_count(std::size_t n, std::size_t clients, double fraction) {
  const auto wanted = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  return std::min(wanted, n - clients);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

}  // namespace

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(rows[i]));
    out.labels.push_back(labels[rows[i]]);
    if (!sources.empty()) out.sources.push_back(sources[rows[i]]);
  }
  return out;
}

const char* to_string(PartitionMode mode) {
  switch (mode) {
    case PartitionMode::kIid: return "iid";
    case PartitionMode::kByLabelShard: return "by-label-shard";
    case PartitionMode::kBySource: return "by-source";
  }
  return "?";
}

PartitionMode partition_mode_from_string(const std::string& name) {
  if (name == "iid") return PartitionMode::kIid;
  if (name == "by-label-shard") return PartitionMode::kByLabelShard;
  if (name == "by-source") return PartitionMode::kBySource;
  throw Error("unknown partition mode '" + name + "' (expected iid, by-label-shard, by-source)");
}

DatasetPartition generate_synthetic(const SyntheticSpec& spec) {
  if (spec.clients < 1) throw Error("generate_synthetic: need at least one client");
  if (spec.samples < spec.clients) {
    throw Error("generate_synthetic: " + std::to_string(spec.samples) + " samples cannot cover " +
                std::to_string(spec.clients) + " clients");
  }
  if (spec.classes < 1 || spec.features < 1) {
    throw Error("generate_synthetic: need at least one class and one feature");
  }
  if (!(spec.heterogeneity >= 0.0 && spec.heterogeneity <= 1.0)) {
    throw Error("generate_synthetic: heterogeneity must lie in [0, 1]");
  }
  if (!(spec.holdout_fraction >= 0.0 && spec.holdout_fraction < 1.0)) {
    throw Error("generate_synthetic: holdout fraction must lie in [0, 1)");
  }

  Rng rng = make_rng(spec.seed, Stream::kData);
  const auto n_classes = static_cast<std::size_t>(spec.classes);

  std::normal_distribution<double> centre(0.0, spec.class_separation);
  Eigen::MatrixXd means(spec.classes, static_cast<Eigen::Index>(spec.features));
  for (Eigen::Index c = 0; c < means.rows(); ++c) {
    for (Eigen::Index j = 0; j < means.cols(); ++j) means(c, j) = centre(rng);
  }

  const std::size_t n_test = holdout_count(spec.samples, spec.clients, spec.holdout_fraction);
  const std::vector<std::size_t> sizes = split_sizes(spec.samples - n_test, spec.clients);
  const std::vector<double> uniform(n_classes, 1.0 / static_cast<double>(n_classes));

  DatasetPartition out;
  out.mode = spec.heterogeneity == 0.0 ? PartitionMode::kIid : PartitionMode::kByLabelShard;
  out.num_classes = spec.classes;
  for (std::size_t n = 0; n < spec.clients; ++n) {
    std::vector<double> mix(n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) {
      mix[c] = (1.0 - spec.heterogeneity) * uniform[c] +
               (c == n % n_classes ? spec.heterogeneity : 0.0);
    }
    out.clients.push_back(sample_gaussian_classes(means, apportion(sizes[n], mix), rng));
  }
  out.test = sample_gaussian_classes(means, apportion(n_test, uniform), rng);
  return out;
}

Dataset read_csv_dataset(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open " + path.string());

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    for (auto f : split_fields(line)) header.emplace_back(f);
  }
  if (header.empty()) throw ParseError(0, path.string() + ": empty file");

  std::ptrdiff_t label_col = -1;
  std::ptrdiff_t source_col = -1;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == schema.label_column) {
      label_col = static_cast<std::ptrdiff_t>(c);
    } else if (header[c] == schema.source_column) {
      source_col = static_cast<std::ptrdiff_t>(c);
    } else {
      feature_cols.push_back(c);
    }
  }
  if (label_col < 0) throw ParseError(line_no, "missing '" + schema.label_column + "' column");
  if (feature_cols.empty()) throw ParseError(line_no, "no feature columns");

  std::vector<double> values;
  Dataset out;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw ParseError(line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                    std::to_string(fields.size()));
    }
    for (std::size_t c : feature_cols) {
      double v = 0.0;
      if (!parse_number(fields[c], v) || !std::isfinite(v)) {
        throw ParseError(line_no, "column '" + header[c] + "': not a finite number: '" +
                                      std::string(fields[c]) + "'");
      }
      values.push_back(v);
    }
    int label = 0;
    if (!parse_number(fields[static_cast<std::size_t>(label_col)], label)) {
      throw ParseError(line_no, "label is not an integer: '" +
                                    std::string(fields[static_cast<std::size_t>(label_col)]) + "'");
    }
    if (label < 0) throw ParseError(line_no, "label must be >= 0");
    out.labels.push_back(label);
    if (source_col >= 0) out.sources.emplace_back(fields[static_cast<std::size_t>(source_col)]);
  }
  if (out.labels.empty()) throw ParseError(0, path.string() + ": no data rows");

  const auto rows = static_cast<Eigen::Index>(out.labels.size());
  const auto cols = static_cast<Eigen::Index>(feature_cols.size());
  out.features = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                Eigen::RowMajor>>(values.data(), rows, cols);
  return out;
}

DatasetPartition load_csv_dataset(const std::filesystem::path& path, const CsvSchema& schema) {
  Dataset data = read_csv_dataset(path, schema);
  return partition_dataset(data, schema.mode, schema.clients, schema.holdout_fraction, schema.seed);
}

DatasetPartition partition_dataset(const Dataset& data, PartitionMode mode, std::size_t clients,
                                   double holdout_fraction, std::uint64_t seed) {
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
    throw Error("partition: holdout fraction must lie in [0, 1)");
  }
  Rng rng = make_rng(seed, Stream::kData, 1);

  DatasetPartition out;
  out.mode = mode;
  out.num_classes =
      data.labels.empty() ? 0 : *std::max_element(data.labels.begin(), data.labels.end()) + 1;

  if (mode == PartitionMode::kBySource) {
    if (data.sources.size() != data.size()) throw Error("partition: by-source mode needs a source column");
    std::vector<std::string> order;
    std::unordered_map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < data.size(); ++i) {
      auto [it, inserted] = groups.try_emplace(data.sources[i]);
      if (inserted) order.push_back(data.sources[i]);
      it->second.push_back(i);
    }
    std::vector<std::size_t> test_rows;
    for (const auto& name : order) {
      auto& rows = groups[name];
      std::shuffle(rows.begin(), rows.end(), rng);
      const std::size_t n_test = holdout_count(rows.size(), 1, holdout_fraction);
      test_rows.insert(test_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_test));
      out.clients.push_back(data.subset({rows.begin() + static_cast<std::ptrdiff_t>(n_test), rows.end()}));
    }
    std::sort(test_rows.begin(), test_rows.end());
    out.test = data.subset(test_rows);
    return out;
  }

  if (clients < 1) throw Error("partition: need at least one client");
  if (data.size() < clients) {
    throw Error("partition: " + std::to_string(data.size()) + " rows cannot cover " +
                std::to_string(clients) + " clients");
  }
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::shuffle(rows.begin(), rows.end(), rng);

  const std::size_t n_test = holdout_count(rows.size(), clients, holdout_fraction);
  out.test = data.subset({rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_test)});
  rows.erase(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_test));
  if (mode == PartitionMode::kByLabelShard) {
    std::stable_sort(rows.begin(), rows.end(),
                     [&](std::size_t a, std::size_t b) { return data.labels[a] < data.labels[b]; });
  }
  auto cursor = rows.begin();
  for (std::size_t size : split_sizes(rows.size(), clients)) {
    out.clients.push_back(data.subset({cursor, cursor + static_cast<std::ptrdiff_t>(size)}));
    cursor += static_cast<std::ptrdiff_t>(size);
  }
  return out;
}

}  // namespace fedsched
