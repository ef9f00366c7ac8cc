// SPDX-License-Identifier: Apache-2.0
#include "alr/metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace alr {

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.size() != labels.size())
    throw std::invalid_argument("accuracy: prediction/label length mismatch");
  if (predictions.empty()) throw std::invalid_argument("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i] == labels[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double recall_at_k(const Matrix& embeddings, const std::vector<int>& labels, int k) {
  const std::size_t n = embeddings.rows();
  if (labels.size() != n) throw std::invalid_argument("recall_at_k: label count mismatch");
  if (n < 2) throw std::invalid_argument("recall_at_k: need at least 2 samples");
  if (k < 1) throw std::invalid_argument("recall_at_k: K must be >= 1");
  if (static_cast<std::size_t>(k) >= n)
    throw std::invalid_argument("recall_at_k: K must be smaller than the sample count");

  std::size_t hits = 0;
  std::vector<std::pair<double, std::size_t>> cand;
  cand.reserve(n - 1);
  for (std::size_t q = 0; q < n; ++q) {
    cand.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == q) continue;
      double d2 = 0.0;
      for (std::size_t c = 0; c < embeddings.cols(); ++c) {
        const double d = embeddings(q, c) - embeddings(j, c);
        d2 += d * d;
      }
      cand.emplace_back(d2, j);
    }
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    for (int i = 0; i < k; ++i) {
      if (labels[cand[static_cast<std::size_t>(i)].second] == labels[q]) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

}  // namespace alr
