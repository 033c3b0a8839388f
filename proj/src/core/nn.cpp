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
#include <functional>
#include <memory>
#include <random>
#include <string>

#include "hesslab/nn.hpp"
#include "hesslab/parallel.hpp"

namespace hesslab::nn {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWeights = Eigen::Map<const RowMajor>;
using Weights = Eigen::Map<RowMajor>;

Index MlpSpec::param_count() const {
  validate();
  Index p = 0;
  for (std::size_t i = 0; i + 1 < layer_widths.size(); ++i) p += layer_widths[i + 1] * layer_widths[i] + layer_widths[i + 1];
  return p;
}

void MlpSpec::validate() const {
  require(layer_widths.size() >= 2, ErrorCode::Domain, "MlpSpec: need at least input and output widths");
  for (Index w : layer_widths) require(w >= 1, ErrorCode::Domain, "MlpSpec: layer widths must be >= 1");
}

std::vector<LayerOffsets> layer_offsets(const MlpSpec& spec) {
  spec.validate();
  std::vector<LayerOffsets> out;
  Index cursor = 0;
  for (Index l = 0; l < spec.layers(); ++l) {
    LayerOffsets o;
    o.rows = spec.layer_widths[l + 1];
    o.cols = spec.layer_widths[l];
    o.weight = cursor;
    o.bias = cursor + o.rows * o.cols;
    cursor = o.bias + o.rows;
    out.push_back(o);
  }
  return out;
}

namespace {

struct Layer {
  ConstWeights w;
  Eigen::Map<const Vector> b;
};

std::vector<Layer> view(const Vector& params, const MlpSpec& spec) {
  const auto offsets = layer_offsets(spec);
  const Index total = offsets.back().bias + offsets.back().rows;
  if (params.size() != total)
    fail(ErrorCode::Domain, "parameter vector has length " + std::to_string(params.size()) + ", model expects " +
                                std::to_string(total));
  std::vector<Layer> layers;
  for (const auto& o : offsets)
    layers.push_back({ConstWeights(params.data() + o.weight, o.rows, o.cols),
                      Eigen::Map<const Vector>(params.data() + o.bias, o.rows)});
  return layers;
}

Matrix relu_mask(const Matrix& z) { return (z.array() > 0.0).cast<double>().matrix(); }

// Activations and loss derivatives at one point, shared by every product
// evaluated there.
struct Cache {
  MlpSpec spec;
  Vector params;
  std::vector<Matrix> z;       // pre-activations per layer
  std::vector<Matrix> a;       // a[0] = inputs, a[l] = relu(z[l-1]); a[L] unused
  std::vector<Matrix> masks;   // relu'(z) for hidden layers
  Matrix probs;                // softmax outputs (cross-entropy only)
  Matrix out_grad;             // dL/dz_L
  std::vector<Matrix> deltas;  // dL/dz_l, filled by backward()
  double loss = 0.0;
  Index batch = 0;
};

Matrix target_matrix(const MlpSpec& spec, const Batch& batch) {
  const Index dy = spec.output_dim();
  if (!batch.labels.empty()) {
    Matrix t = Matrix::Zero(dy, batch.size());
    for (Index i = 0; i < batch.size(); ++i) t(batch.labels[i], i) = 1.0;
    return t;
  }
  require(batch.targets.rows() == dy && batch.targets.cols() == batch.size(), ErrorCode::Domain,
          "batch targets do not match the model output width");
  return batch.targets;
}

void check_batch(const MlpSpec& spec, const Batch& batch) {
  require(batch.size() >= 1, ErrorCode::Domain, "empty batch");
  require(batch.inputs.rows() == spec.input_dim(), ErrorCode::Domain, "batch inputs do not match the model input width");
  if (!batch.labels.empty()) {
    require(static_cast<Index>(batch.labels.size()) == batch.size(), ErrorCode::Domain, "batch label count mismatch");
    for (int y : batch.labels)
      require(y >= 0 && y < spec.output_dim(), ErrorCode::Domain, "label outside [0, d_y)");
  } else {
    require(spec.loss == Loss::SquaredError, ErrorCode::Domain, "cross-entropy needs integer labels");
  }
}

std::shared_ptr<Cache> forward_cache(const Vector& params, const MlpSpec& spec, const Batch& batch) {
  check_batch(spec, batch);
  auto c = std::make_shared<Cache>();
  c->spec = spec;
  c->params = params;
  c->batch = batch.size();
  const auto layers = view(c->params, spec);
  const Index L = spec.layers();
  c->a.push_back(batch.inputs);
  for (Index l = 0; l < L; ++l) {
    Matrix z = layers[l].w * c->a[l];
    z.colwise() += layers[l].b;
    if (!z.allFinite()) fail(ErrorCode::Numeric, "non-finite activations in forward pass");
    if (l + 1 < L) {
      c->masks.push_back(relu_mask(z));
      c->a.push_back(z.cwiseMax(0.0));
    }
    c->z.push_back(std::move(z));
  }

  const Matrix& logits = c->z.back();
  const double inv_b = 1.0 / static_cast<double>(c->batch);
  if (spec.loss == Loss::SoftmaxCrossEntropy) {
    c->probs.resize(logits.rows(), logits.cols());
    double total = 0.0;
    for (Index i = 0; i < logits.cols(); ++i) {
      const double mx = logits.col(i).maxCoeff();
      const Vector e = (logits.col(i).array() - mx).exp().matrix();
      const double s = e.sum();
      c->probs.col(i) = e / s;
      total += mx + std::log(s) - logits(batch.labels[i], i);
    }
    c->loss = total * inv_b;
    c->out_grad = c->probs;
    for (Index i = 0; i < logits.cols(); ++i) c->out_grad(batch.labels[i], i) -= 1.0;
    c->out_grad *= inv_b;
  } else {
    const Matrix diff = logits - target_matrix(spec, batch);
    c->loss = 0.5 * diff.squaredNorm() * inv_b;
    c->out_grad = diff * inv_b;
  }
  if (!std::isfinite(c->loss)) fail(ErrorCode::Numeric, "non-finite loss");
  return c;
}

void backward(Cache& c) {
  const auto layers = view(c.params, c.spec);
  const Index L = c.spec.layers();
  c.deltas.assign(L, Matrix());
  c.deltas[L - 1] = c.out_grad;
  for (Index l = L - 1; l > 0; --l)
    c.deltas[l - 1] = (layers[l].w.transpose() * c.deltas[l]).cwiseProduct(c.masks[l - 1]);
}

// Output-layer curvature applied per sample: d^2 loss / dz_L^2 times r.
Matrix output_hessian_times(const Cache& c, const Matrix& r) {
  const double inv_b = 1.0 / static_cast<double>(c.batch);
  if (c.spec.loss == Loss::SquaredError) return r * inv_b;
  Matrix out = c.probs.cwiseProduct(r);
  const Eigen::RowVectorXd pr = out.colwise().sum();
  for (Index i = 0; i < r.cols(); ++i) out.col(i) -= c.probs.col(i) * pr(i);
  return out * inv_b;
}

// Accumulates delta_l a_{l-1}^T and row sums of delta_l into `out`.
void write_layer(Vector& out, const LayerOffsets& o, const Matrix& delta, const Matrix& input) {
  Weights(out.data() + o.weight, o.rows, o.cols).noalias() += delta * input.transpose();
  out.segment(o.bias, o.rows) += delta.rowwise().sum();
}

// Forward R-pass: directional derivatives of pre-activations along v.
std::vector<Matrix> forward_r(const Cache& c, const std::vector<Layer>& layers, const std::vector<Layer>& dir,
                              std::vector<Matrix>& r_acts) {
  const Index L = c.spec.layers();
  std::vector<Matrix> rz(L);
  r_acts.assign(L, Matrix());
  r_acts[0] = Matrix::Zero(c.a[0].rows(), c.a[0].cols());
  for (Index l = 0; l < L; ++l) {
    Matrix r = dir[l].w * c.a[l];
    r.colwise() += dir[l].b;
    if (l > 0) r.noalias() += layers[l].w * r_acts[l];
    if (l + 1 < L) r_acts[l + 1] = r.cwiseProduct(c.masks[l]);
    rz[l] = std::move(r);
  }
  return rz;
}

Vector hvp_cached(const Cache& c, const Vector& v) {
  require(v.size() == c.params.size(), ErrorCode::Domain, "hvp: direction has the wrong length");
  require(v.allFinite(), ErrorCode::Domain, "hvp: direction must be finite");
  const auto layers = view(c.params, c.spec);
  const auto dir = view(v, c.spec);
  const auto offsets = layer_offsets(c.spec);
  const Index L = c.spec.layers();

  std::vector<Matrix> r_acts;
  const auto rz = forward_r(c, layers, dir, r_acts);

  Vector out = Vector::Zero(v.size());
  Matrix r_delta = output_hessian_times(c, rz[L - 1]);
  for (Index l = L - 1; l >= 0; --l) {
    write_layer(out, offsets[l], r_delta, c.a[l]);
    if (l > 0) {
      Weights(out.data() + offsets[l].weight, offsets[l].rows, offsets[l].cols).noalias() +=
          c.deltas[l] * r_acts[l].transpose();
      r_delta = (dir[l].w.transpose() * c.deltas[l] + layers[l].w.transpose() * r_delta).cwiseProduct(c.masks[l - 1]);
    }
  }
  if (!out.allFinite()) fail(ErrorCode::Numeric, "hvp: non-finite result");
  return out;
}

Vector ggn_cached(const Cache& c, const Vector& v) {
  require(v.size() == c.params.size(), ErrorCode::Domain, "ggn_vp: direction has the wrong length");
  require(v.allFinite(), ErrorCode::Domain, "ggn_vp: direction must be finite");
  const auto layers = view(c.params, c.spec);
  const auto dir = view(v, c.spec);
  const auto offsets = layer_offsets(c.spec);
  const Index L = c.spec.layers();

  std::vector<Matrix> r_acts;
  const auto rz = forward_r(c, layers, dir, r_acts);

  Vector out = Vector::Zero(v.size());
  Matrix delta = output_hessian_times(c, rz[L - 1]);
  for (Index l = L - 1; l >= 0; --l) {
    write_layer(out, offsets[l], delta, c.a[l]);
    if (l > 0) delta = (layers[l].w.transpose() * delta).cwiseProduct(c.masks[l - 1]);
  }
  if (!out.allFinite()) fail(ErrorCode::Numeric, "ggn_vp: non-finite result");
  return out;
}

std::shared_ptr<Cache> full_cache(const Vector& params, const MlpSpec& spec, const Batch& batch) {
  auto c = forward_cache(params, spec, batch);
  backward(*c);
  return c;
}

Matrix dense(Index p, Index cap, const std::function<Vector(const Vector&)>& product) {
  if (p > cap)
    fail(ErrorCode::Domain, "dense curvature requested for P = " + std::to_string(p) + " above cap " + std::to_string(cap));
  Matrix out(p, p);
  parallel_for(static_cast<std::size_t>(p), [&](std::size_t j) {
    out.col(static_cast<Index>(j)) = product(Vector::Unit(p, static_cast<Index>(j)));
  });
  return out;
}

}  // namespace

ParamVector init_params(const MlpSpec& spec, std::uint64_t seed, double scale) {
  const auto offsets = layer_offsets(spec);
  ParamVector p = ParamVector::Zero(offsets.back().bias + offsets.back().rows);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const auto& o : offsets) {
    const double std_dev = scale / std::sqrt(static_cast<double>(o.cols));
    for (Index i = 0; i < o.rows * o.cols; ++i) p(o.weight + i) = std_dev * normal(rng);
  }
  return p;
}

Matrix forward(const ParamVector& params, const MlpSpec& spec, const Matrix& inputs) {
  require(inputs.rows() == spec.input_dim(), ErrorCode::Domain, "forward: input width mismatch");
  const auto layers = view(params, spec);
  Matrix a = inputs;
  for (Index l = 0; l < spec.layers(); ++l) {
    Matrix z = layers[l].w * a;
    z.colwise() += layers[l].b;
    if (!z.allFinite()) fail(ErrorCode::Numeric, "non-finite activations in forward pass");
    a = l + 1 < spec.layers() ? Matrix(z.cwiseMax(0.0)) : z;
  }
  return a;
}

double batch_loss(const ParamVector& params, const MlpSpec& spec, const Batch& batch) {
  return forward_cache(params, spec, batch)->loss;
}

ParamVector gradient(const ParamVector& params, const MlpSpec& spec, const Batch& batch) {
  auto c = full_cache(params, spec, batch);
  const auto offsets = layer_offsets(spec);
  Vector out = Vector::Zero(params.size());
  for (Index l = 0; l < spec.layers(); ++l) write_layer(out, offsets[l], c->deltas[l], c->a[l]);
  return out;
}

ParamVector hvp(const ParamVector& params, const MlpSpec& spec, const Batch& batch, const Vector& v) {
  return hvp_cached(*full_cache(params, spec, batch), v);
}

ParamVector ggn_vp(const ParamVector& params, const MlpSpec& spec, const Batch& batch, const Vector& v) {
  return ggn_cached(*forward_cache(params, spec, batch), v);
}

double error_rate(const ParamVector& params, const MlpSpec& spec, const Batch& batch) {
  if (batch.labels.empty()) return std::nan("");
  const Matrix logits = forward(params, spec, batch.inputs);
  Index wrong = 0;
  for (Index i = 0; i < logits.cols(); ++i) {
    Index arg = 0;
    logits.col(i).maxCoeff(&arg);
    if (arg != batch.labels[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(logits.cols());
}

Matrix exact_hessian(const ParamVector& params, const MlpSpec& spec, const Batch& batch, Index cap) {
  const auto c = full_cache(params, spec, batch);
  return dense(params.size(), cap, [&](const Vector& e) { return hvp_cached(*c, e); });
}

Matrix exact_ggn(const ParamVector& params, const MlpSpec& spec, const Batch& batch, Index cap) {
  const auto c = forward_cache(params, spec, batch);
  return dense(params.size(), cap, [&](const Vector& e) { return ggn_cached(*c, e); });
}

lanczos::LinearOperator curvature_operator(const ParamVector& params, const MlpSpec& spec, Batch batch,
                                           Curvature kind) {
  std::shared_ptr<const Cache> c = full_cache(params, spec, batch);
  if (kind == Curvature::Hessian)
    return lanczos::LinearOperator(params.size(), [c](const Vector& in, Vector& out) { out = hvp_cached(*c, in); });
  return lanczos::LinearOperator(params.size(), [c](const Vector& in, Vector& out) { out = ggn_cached(*c, in); });
}

}  // namespace hesslab::nn
