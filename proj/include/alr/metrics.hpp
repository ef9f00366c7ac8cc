// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "alr/matrix.hpp"

namespace alr {

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels);

// Fraction of samples whose K nearest neighbors (Euclidean, self excluded,
// ties broken by index) contain at least one same-label sample.
double recall_at_k(const Matrix& embeddings, const std::vector<int>& labels, int k);

}  // namespace alr
