// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "alr/matrix.hpp"

namespace alr {

// Labeled feature vectors with a disjoint train/test split. Labels are dense
// in [0, num_classes).
struct Dataset {
  int feature_dim = 0;
  int num_classes = 0;
  Matrix train_x;
  std::vector<int> train_y;
  Matrix test_x;
  std::vector<int> test_y;

  std::size_t train_size() const { return train_y.size(); }
  std::size_t test_size() const { return test_y.size(); }
};

struct SyntheticSpec {
  std::uint64_t seed = 0;
  int classes = 2;
  int dim = 2;
  int per_class = 50;
  double separation = 4.0;  // cluster means sit on a sphere of this radius
};

// Gaussian clusters (unit covariance) with class means drawn on a sphere of
// radius `separation`; stratified 80/20 train/test split, deterministic in seed.
Dataset gen_synthetic(const SyntheticSpec& spec);

// Reads "f0,...,f{D-1},label" rows; malformed rows are rejected with their
// line number. Labels must be dense integers starting at 0. The first 80% of
// each class (in file order) goes to train, the rest to test.
Dataset load_csv(const std::string& path);

// Writes train rows then test rows in the same CSV format.
void save_csv(const Dataset& ds, const std::string& path);

}  // namespace alr
