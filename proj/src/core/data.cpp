/*
 *  Copyright 2026 The hesslab Authors
 *
 *  Licensed under the Apache License, Version 2.0 (the "License");
 *  you may not use this file except in compliance with the License.
 *  You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 *  Unless required by applicable law or agreed to in writing, software
 *  distributed under the License is distributed on an "AS IS" BASIS,
 *  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *  See the License for the specific language governing permissions and
 *  limitations under the License.
 */

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "hesslab/nn.hpp"
#include "hesslab/parallel.hpp"

namespace hesslab::nn {

int Dataset::classes() const {
  if (labels.empty()) return 0;
  return *std::max_element(labels.begin(), labels.end()) + 1;
}

void Dataset::validate() const {
  require(inputs.rows() >= 1 && inputs.cols() >= 1, ErrorCode::Domain, "dataset is empty");
  require(labels.empty() != (targets.size() == 0), ErrorCode::Domain,
          "dataset needs exactly one of integer labels or regression targets");
  if (!labels.empty()) {
    require(static_cast<Index>(labels.size()) == size(), ErrorCode::Domain, "dataset label count mismatch");
    for (int y : labels) require(y >= 0, ErrorCode::Domain, "dataset labels must be >= 0");
  } else {
    require(targets.rows() == size(), ErrorCode::Domain, "dataset target row count mismatch");
  }
  require(inputs.allFinite(), ErrorCode::Domain, "dataset inputs must be finite");
}

Dataset Dataset::subset(std::span<const Index> indices) const {
  Dataset out;
  out.inputs.resize(static_cast<Index>(indices.size()), input_dim());
  if (!labels.empty()) out.labels.reserve(indices.size());
  if (targets.size() > 0) out.targets.resize(static_cast<Index>(indices.size()), targets.cols());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const Index i = indices[k];
    require(i >= 0 && i < size(), ErrorCode::Domain, "dataset index out of range");
    out.inputs.row(static_cast<Index>(k)) = inputs.row(i);
    if (!labels.empty()) out.labels.push_back(labels[i]);
    if (targets.size() > 0) out.targets.row(static_cast<Index>(k)) = targets.row(i);
  }
  return out;
}

Batch make_batch(const Dataset& data, std::span<const Index> indices) {
  require(!indices.empty(), ErrorCode::Domain, "empty batch");
  Batch b;
  const auto n = static_cast<Index>(indices.size());
  b.inputs.resize(data.input_dim(), n);
  if (data.is_classification()) b.labels.reserve(indices.size());
  else b.targets.resize(data.targets.cols(), n);
  for (Index k = 0; k < n; ++k) {
    const Index i = indices[k];
    require(i >= 0 && i < data.size(), ErrorCode::Domain, "batch index out of range");
    b.inputs.col(k) = data.inputs.row(i).transpose();
    if (data.is_classification()) b.labels.push_back(data.labels[i]);
    else b.targets.col(k) = data.targets.row(i).transpose();
  }
  return b;
}

Batch full_batch(const Dataset& data) {
  std::vector<Index> all(static_cast<std::size_t>(data.size()));
  std::iota(all.begin(), all.end(), Index{0});
  return make_batch(data, all);
}

namespace {

Vector random_direction(Index dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(dim);
  for (Index i = 0; i < dim; ++i) v(i) = normal(rng);
  const double n = v.norm();
  return n > 0.0 ? Vector(v / n) : Vector::Unit(dim, 0);
}

// Uniform integer in [0, bound) without library-dependent distributions.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(rng()) * bound) >> 64);
}

}  // namespace

Dataset gaussian_mixture(int classes, Index dim, Index per_class, double separation, std::uint64_t seed) {
  require(classes >= 1, ErrorCode::Domain, "gaussian_mixture: k must be >= 1");
  require(dim >= 1, ErrorCode::Domain, "gaussian_mixture: d_x must be >= 1");
  require(per_class >= 1, ErrorCode::Domain, "gaussian_mixture: n_per_class must be >= 1");
  require(std::isfinite(separation), ErrorCode::Domain, "gaussian_mixture: separation must be finite");

  std::mt19937_64 mean_rng(derive_seed(seed, 0));
  constexpr int kAttempts = 1000;
  std::vector<Vector> means;
  for (int c = 0; c < classes; ++c) {
    // Keep the least-aligned candidate if no draw meets the bound.
    Vector best;
    double best_overlap = 2.0;
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
      Vector m = random_direction(dim, mean_rng);
      double overlap = 0.0;
      for (const auto& other : means) overlap = std::max(overlap, std::abs(m.dot(other)));
      if (overlap < best_overlap) {
        best_overlap = overlap;
        best = std::move(m);
      }
      if (best_overlap < 0.5) break;
    }
    means.push_back(std::move(best));
  }

  std::mt19937_64 rng(derive_seed(seed, 1));
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset out;
  const Index n = static_cast<Index>(classes) * per_class;
  out.inputs.resize(n, dim);
  out.labels.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % classes);
    out.labels[i] = c;
    for (Index j = 0; j < dim; ++j) out.inputs(i, j) = separation * means[c](j) + normal(rng);
  }
  return out;
}

BatchSampler::BatchSampler(Index dataset_size, Index batch_size, std::uint64_t seed)
    : size_(dataset_size), batch_(batch_size), seed_(seed) {
  require(dataset_size >= 1, ErrorCode::Domain, "BatchSampler: dataset is empty");
  require(batch_size >= 1, ErrorCode::Domain, "BatchSampler: B must be >= 1");
  if (batch_size > dataset_size)
    fail(ErrorCode::Domain, "BatchSampler: B = " + std::to_string(batch_size) + " exceeds N = " +
                                std::to_string(dataset_size));
}

std::vector<std::vector<Index>> BatchSampler::next_epoch() {
  std::vector<Index> order(static_cast<std::size_t>(size_));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(derive_seed(seed_, epoch_));
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[bounded(rng, i)]);
  ++epoch_;

  std::vector<std::vector<Index>> batches;
  for (Index start = 0; start < size_; start += batch_) {
    const Index stop = std::min(size_, start + batch_);
    batches.emplace_back(order.begin() + start, order.begin() + stop);
  }
  return batches;
}

std::vector<Index> BatchSampler::next_batch() {
  if (cursor_ >= pending_.size()) {
    pending_ = next_epoch();
    cursor_ = 0;
  }
  return pending_[cursor_++];
}

}  // namespace hesslab::nn
