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

#pragma once

// Small ReLU feed-forward networks with exact gradients, Hessian-vector and
// Gauss-Newton-vector products, plus the datasets and batch sampling used to
// study their curvature.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hesslab/common.hpp"
#include "hesslab/lanczos.hpp"

namespace hesslab::nn {

enum class Loss { SoftmaxCrossEntropy, SquaredError };

/// Layer widths [d_x, h_1, ..., d_y]; ReLU on hidden layers, linear output.
/// Two widths give a linear (logistic / least-squares) model.
struct MlpSpec {
  std::vector<Index> layer_widths;
  Loss loss = Loss::SoftmaxCrossEntropy;

  Index input_dim() const { return layer_widths.front(); }
  Index output_dim() const { return layer_widths.back(); }
  Index layers() const { return static_cast<Index>(layer_widths.size()) - 1; }
  Index param_count() const;
  void validate() const;
};

/// Flat parameters, layer-major: for each layer the weight matrix
/// (out x in, row-major) followed by its bias.
using ParamVector = Vector;

struct LayerOffsets {
  Index weight = 0;
  Index bias = 0;
  Index rows = 0;
  Index cols = 0;
};
std::vector<LayerOffsets> layer_offsets(const MlpSpec& spec);

/// Gaussian weights with std scale / sqrt(fan_in); zero biases.
ParamVector init_params(const MlpSpec& spec, std::uint64_t seed, double scale = 1.0);

struct Dataset {
  Matrix inputs;            // N x d_x
  std::vector<int> labels;  // classification targets, or empty
  Matrix targets;           // N x d_y regression targets, or empty

  Index size() const { return inputs.rows(); }
  Index input_dim() const { return inputs.cols(); }
  bool is_classification() const { return !labels.empty(); }
  int classes() const;
  void validate() const;

  Dataset subset(std::span<const Index> indices) const;
};

/// A gathered mini-batch: one column per sample.
struct Batch {
  Matrix inputs;            // d_x x B
  std::vector<int> labels;  // size B, or empty
  Matrix targets;           // d_y x B, or empty

  Index size() const { return inputs.cols(); }
};

Batch make_batch(const Dataset& data, std::span<const Index> indices);
Batch full_batch(const Dataset& data);

double batch_loss(const ParamVector& params, const MlpSpec& spec, const Batch& batch);
ParamVector gradient(const ParamVector& params, const MlpSpec& spec, const Batch& batch);
ParamVector hvp(const ParamVector& params, const MlpSpec& spec, const Batch& batch, const Vector& v);
ParamVector ggn_vp(const ParamVector& params, const MlpSpec& spec, const Batch& batch, const Vector& v);

/// Output logits, d_y x B.
Matrix forward(const ParamVector& params, const MlpSpec& spec, const Matrix& inputs);

/// Fraction of misclassified samples; NaN for regression data.
double error_rate(const ParamVector& params, const MlpSpec& spec, const Batch& batch);

inline constexpr Index kDenseHessianCap = 500;

/// Column j is hvp(e_j). Throws Domain when P exceeds `cap`.
Matrix exact_hessian(const ParamVector& params, const MlpSpec& spec, const Batch& batch,
                     Index cap = kDenseHessianCap);
Matrix exact_ggn(const ParamVector& params, const MlpSpec& spec, const Batch& batch, Index cap = kDenseHessianCap);

enum class Curvature { Hessian, GaussNewton };

/// Matrix-free curvature of the batch loss at `params`. The operator owns
/// copies of everything it needs.
lanczos::LinearOperator curvature_operator(const ParamVector& params, const MlpSpec& spec, Batch batch,
                                           Curvature kind = Curvature::Hessian);

/// k Gaussian classes with identity covariance, n_per_class samples each.
/// Means are separation * m_i for random unit m_i with pairwise |<m_i, m_j>| < 0.5.
Dataset gaussian_mixture(int classes, Index dim, Index per_class, double separation, std::uint64_t seed);

/// Shuffled epoch partitions (sampling without replacement). The last batch
/// of an epoch is short when B does not divide N.
class BatchSampler {
 public:
  BatchSampler(Index dataset_size, Index batch_size, std::uint64_t seed);

  std::vector<std::vector<Index>> next_epoch();
  /// Next batch, starting a new epoch when the current one is exhausted.
  std::vector<Index> next_batch();

  Index batch_size() const noexcept { return batch_; }
  Index dataset_size() const noexcept { return size_; }
  std::uint64_t epoch() const noexcept { return epoch_; }

 private:
  Index size_;
  Index batch_;
  std::uint64_t seed_;
  std::uint64_t epoch_ = 0;
  std::vector<std::vector<Index>> pending_;
  std::size_t cursor_ = 0;
};

}  // namespace hesslab::nn
