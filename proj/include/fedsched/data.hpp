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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace fedsched {

/// Row-major sample store: row i of `features` belongs to `labels[i]`.
/// `sources` is either empty or holds one source tag per row.
struct Dataset {
  Eigen::MatrixXd features;
  std::vector<int> labels;
  std::vector<std::string> sources;

  std::size_t size() const noexcept { return labels.size(); }
  Eigen::Index dimension() const noexcept { return features.cols(); }

  /// Copies the rows named by `rows`, in that order.
  Dataset subset(const std::vector<std::size_t>& rows) const;
};

enum class PartitionMode { kIid, kByLabelShard, kBySource };

const char* to_string(PartitionMode mode);
PartitionMode partition_mode_from_string(const std::string& name);

struct DatasetPartition {
  std::vector<Dataset> clients;
  Dataset test;
  PartitionMode mode = PartitionMode::kIid;
  int num_classes = 0;
};

struct SyntheticSpec {
  std::size_t samples = 1000;
  std::size_t features = 10;
  int classes = 2;
  std::size_t clients = 1;
  double heterogeneity = 0.0;  // 0: same label mix everywhere, 1: one label per client
  double class_separation = 1.0;
  double holdout_fraction = 0.1;
  std::uint64_t seed = 0;
};

/// Gaussian class-conditional data. Each client's label proportions are
/// (1 - h) * uniform + h * onehot(n mod classes); label counts are allocated
/// by largest remainder so the mix is exact rather than sampled. The holdout
/// set uses the uniform mix.
DatasetPartition generate_synthetic(const SyntheticSpec& spec);

struct CsvSchema {
  std::string label_column = "label";
  std::string source_column = "source";
  PartitionMode mode = PartitionMode::kIid;
  std::size_t clients = 1;  // ignored in by-source mode
  double holdout_fraction = 0.1;
  std::uint64_t seed = 0;
};

/// Reads a CSV with a header row; every column other than the label and
/// source columns is a numeric feature. Throws ParseError naming the line.
Dataset read_csv_dataset(const std::filesystem::path& path, const CsvSchema& schema);

DatasetPartition load_csv_dataset(const std::filesystem::path& path, const CsvSchema& schema);

/// Splits off floor(holdout_fraction * n) test rows and distributes the rest.
/// In by-source mode the holdout is taken per source and one client is made
/// per distinct source (in order of first appearance).
DatasetPartition partition_dataset(const Dataset& data, PartitionMode mode, std::size_t clients,
                                   double holdout_fraction, std::uint64_t seed);

}  // namespace fedsched
