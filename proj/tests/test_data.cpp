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

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>

#include "fedsched/data.hpp"
#include "fedsched/error.hpp"
#include "test_util.hpp"

using namespace fedsched;

namespace {

std::vector<double> class_histogram(const Dataset& d, int classes) {
  std::vector<double> h(static_cast<std::size_t>(classes), 0.0);
  for (int y : d.labels) h[static_cast<std::size_t>(y)] += 1.0;
  for (double& v : h) v /= static_cast<double>(d.size());
  return h;
}

// Multiset of rows as strings so disjoint-cover checks are order-free.
std::multiset<std::string> row_keys(const Dataset& d) {
  std::multiset<std::string> keys;
  for (std::size_t i = 0; i < d.size(); ++i) {
    std::string k = std::to_string(d.labels[i]);
    for (Eigen::Index c = 0; c < d.features.cols(); ++c) {
      k += ',' + std::to_string(d.features(static_cast<Eigen::Index>(i), c));
    }
    keys.insert(k);
  }
  return keys;
}

}  // namespace

TEST_CASE("iid synthetic data has matching label mixes") {
  SyntheticSpec spec;
  spec.samples = 100;
  spec.classes = 2;
  spec.clients = 2;
  spec.heterogeneity = 0.0;
  spec.seed = 4;
  const auto part = generate_synthetic(spec);
  CHECK(part.mode == PartitionMode::kIid);
  REQUIRE(part.clients.size() == 2);
  for (const auto& c : part.clients) {
    for (double share : class_histogram(c, 2)) CHECK(std::abs(share - 0.5) <= 0.1);
  }
}

TEST_CASE("fully heterogeneous synthetic data is single-class per client") {
  SyntheticSpec spec;
  spec.samples = 1000;
  spec.classes = 10;
  spec.clients = 10;
  spec.heterogeneity = 1.0;
  spec.seed = 4;
  const auto part = generate_synthetic(spec);
  CHECK(part.mode == PartitionMode::kByLabelShard);
  for (const auto& c : part.clients) {
    const auto h = class_histogram(c, 10);
    CHECK(*std::max_element(h.begin(), h.end()) >= 0.9);
  }
}

TEST_CASE("synthetic partitions are deterministic, disjoint and non-empty") {
  SyntheticSpec spec;
  spec.samples = 503;
  spec.classes = 4;
  spec.clients = 7;
  spec.heterogeneity = 0.6;
  spec.seed = 99;
  const auto a = generate_synthetic(spec);
  const auto b = generate_synthetic(spec);
  std::size_t total = a.test.size();
  for (std::size_t n = 0; n < a.clients.size(); ++n) {
    CHECK(a.clients[n].features == b.clients[n].features);
    CHECK(a.clients[n].labels == b.clients[n].labels);
    CHECK(a.clients[n].size() >= 1);
    total += a.clients[n].size();
  }
  CHECK(total == 503);
  CHECK(a.test.size() == 50);

  spec.samples = 6;
  CHECK_THROWS_AS(generate_synthetic(spec), Error);
}

TEST_CASE("csv with two clients splits rows evenly") {
  test_util::TempDir dir;
  const auto path = dir.write("four.csv", "f1,f2,label\n1,2,0\n3,4,1\n5,6,0\n7,8,1\n");
  CsvSchema schema;
  schema.clients = 2;
  schema.holdout_fraction = 0.0;
  const auto part = load_csv_dataset(path, schema);
  REQUIRE(part.clients.size() == 2);
  CHECK(part.clients[0].size() == 2);
  CHECK(part.clients[1].size() == 2);
  CHECK(part.num_classes == 2);
}

TEST_CASE("csv parse errors name the line") {
  test_util::TempDir dir;
  const auto path = dir.write("bad.csv", "f1,f2,label\n1,2,0\n3,oops,1\n");
  try {
    read_csv_dataset(path, CsvSchema{});
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }

  const auto empty = dir.write("empty.csv", "");
  CHECK_THROWS_AS(read_csv_dataset(empty, CsvSchema{}), ParseError);
  const auto header_only = dir.write("header.csv", "f1,label\n");
  CHECK_THROWS_AS(read_csv_dataset(header_only, CsvSchema{}), ParseError);
  const auto bad_label = dir.write("label.csv", "f1,label\n1.5,x\n");
  CHECK_THROWS_AS(read_csv_dataset(bad_label, CsvSchema{}), ParseError);
}

TEST_CASE("csv by-source mode makes one client per source") {
  test_util::TempDir dir;
  const auto path = dir.write("src.csv",
                              "x,label,source\n"
                              "0.1,0,alice\n0.2,1,bob\n0.3,0,carol\n0.4,1,alice\n0.5,0,bob\n"
                              "0.6,1,carol\n0.7,0,alice\n0.8,1,bob\n0.9,0,carol\n1.0,1,alice\n");
  CsvSchema schema;
  schema.mode = PartitionMode::kBySource;
  schema.holdout_fraction = 0.0;
  const auto part = load_csv_dataset(path, schema);
  REQUIRE(part.clients.size() == 3);
  CHECK(part.clients[0].size() == 4);
  CHECK(part.clients[1].size() == 3);
  CHECK(part.clients[2].size() == 3);
  for (const auto& c : part.clients) {
    CHECK(std::all_of(c.sources.begin(), c.sources.end(), [&](const std::string& s) { return s == c.sources.front(); }));
  }
}

TEST_CASE("csv partition is a disjoint cover and deterministic") {
  std::string text = "a,b,label\n";
  for (int i = 0; i < 57; ++i) {
    text += std::to_string(i) + "," + std::to_string(i * i % 13) + "," + std::to_string(i % 3) + "\n";
  }
  test_util::TempDir dir;
  const auto path = dir.write("many.csv", text);
  CsvSchema schema;
  schema.clients = 5;
  schema.holdout_fraction = 0.1;
  schema.seed = 7;
  const Dataset all = read_csv_dataset(path, schema);
  const auto a = load_csv_dataset(path, schema);
  const auto b = load_csv_dataset(path, schema);

  std::multiset<std::string> union_keys = row_keys(a.test);
  for (std::size_t n = 0; n < a.clients.size(); ++n) {
    CHECK(a.clients[n].labels == b.clients[n].labels);
    CHECK(a.clients[n].features == b.clients[n].features);
    CHECK(a.clients[n].size() >= 1);
    const auto keys = row_keys(a.clients[n]);
    union_keys.insert(keys.begin(), keys.end());
  }
  CHECK(a.test.size() == 5);
  CHECK(union_keys == row_keys(all));
}

TEST_CASE("partition mode names round-trip") {
  for (auto m : {PartitionMode::kIid, PartitionMode::kByLabelShard, PartitionMode::kBySource}) {
    CHECK(partition_mode_from_string(to_string(m)) == m);
  }
  CHECK_THROWS_AS(partition_mode_from_string("random"), Error);
}
