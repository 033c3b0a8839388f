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
#include <limits>

#include "hesslab/autolr.hpp"

namespace hesslab::autolr {

void sgd_step(SgdMomentum& state, Vector& params, const Vector& grad) {
  require(grad.size() == params.size(), ErrorCode::Domain, "sgd_step: gradient length mismatch");
  if (state.velocity.size() != params.size()) state.velocity = Vector::Zero(params.size());
  state.velocity = state.momentum * state.velocity - state.lr * grad;
  if (state.nesterov) params += state.momentum * state.velocity - state.lr * grad;
  else params += state.velocity;
}

void adam_step(Adam& state, Vector& params, const Vector& grad) {
  require(grad.size() == params.size(), ErrorCode::Domain, "adam_step: gradient length mismatch");
  require(state.delta > 0.0, ErrorCode::Domain, "adam_step: delta must be > 0");
  if (state.m1.size() != params.size()) state.m1 = Vector::Zero(params.size());
  if (state.m2.size() != params.size()) state.m2 = Vector::Zero(params.size());
  ++state.step;
  state.m1 = state.beta1 * state.m1 + (1.0 - state.beta1) * grad;
  state.m2 = state.beta2 * state.m2 + (1.0 - state.beta2) * grad.cwiseAbs2();
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  params.array() -= state.lr * (state.m1.array() / c1) / ((state.m2.array() / c2).sqrt() + state.delta);
}

void optimizer_step(OptimizerState& state, Vector& params, const Vector& grad) {
  std::visit(
      [&](auto& s) {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, SgdMomentum>) sgd_step(s, params, grad);
        else adam_step(s, params, grad);
      },
      state);
}

Vector adam_eta(const Adam& state) {
  if (state.step == 0) return Vector::Zero(state.m2.size());
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  return (state.m2.array() / c2).sqrt().matrix();
}

lanczos::RitzSpectrum probe_curvature(const nn::ParamVector& params, const nn::MlpSpec& spec, const nn::Batch& batch,
                                      Index steps, std::uint64_t seed, nn::Curvature kind) {
  require(steps >= 1, ErrorCode::Domain, "probe_curvature: m must be >= 1");
  const auto op = nn::curvature_operator(params, spec, batch, kind);
  lanczos::LanczosOptions options;
  options.steps = std::min(steps, op.dim());
  options.seed = seed;
  return lanczos::ritz_quadrature(lanczos::lanczos_decompose(op, options));
}

CurvatureBounds filter_ritz(const lanczos::RitzSpectrum& spectrum, double mass_threshold, double psd_floor) {
  require(spectrum.size() >= 1, ErrorCode::Domain, "filter_ritz: empty spectrum");
  require(mass_threshold > 0.0 && mass_threshold < 1.0, ErrorCode::Domain, "filter_ritz: mass threshold must be in (0, 1)");
  require(psd_floor > 0.0, ErrorCode::Domain, "filter_ritz: psd floor must be > 0");

  const auto heaviest = static_cast<std::size_t>(
      std::max_element(spectrum.weights.begin(), spectrum.weights.end()) - spectrum.weights.begin());
  const bool drop = spectrum.weights[heaviest] > mass_threshold;

  CurvatureBounds out{-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  bool any = false;
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    if (drop && i == heaviest) continue;
    const double node = std::max(spectrum.nodes[i], psd_floor);
    out.top = std::max(out.top, node);
    out.bottom = std::min(out.bottom, node);
    any = true;
  }
  if (!any) fail(ErrorCode::FilterEmpty, "filter_ritz: no Ritz node survived filtering; keep the previous hyperparameters");
  return out;
}

namespace {
void check_bounds(double top, double bottom) {
  require(std::isfinite(top) && std::isfinite(bottom) && bottom > 0.0 && bottom <= top, ErrorCode::Domain,
          "hyperparameters require 0 < lambda_bottom <= lambda_top");
}
}  // namespace

Hyperparams polyak_hyperparams(double lambda_top, double lambda_bottom, PolyakStep step) {
  check_bounds(lambda_top, lambda_bottom);
  const double a = std::sqrt(lambda_top);
  const double b = std::sqrt(lambda_bottom);
  const double r = (a - b) / (a + b);
  const double lr = step == PolyakStep::Optimal ? 4.0 / ((a + b) * (a + b)) : 2.0 / (a + b);
  return {lr, r * r};
}

Hyperparams nesterov_hyperparams(double lambda_top, double lambda_bottom, bool normalized_lr) {
  check_bounds(lambda_top, lambda_bottom);
  const double a = std::sqrt(lambda_top);
  const double b = std::sqrt(lambda_bottom);
  double lr = b / a;
  if (normalized_lr) lr /= lambda_top;
  return {lr, (a - b) / (a + b)};
}

void AveragedIterate::add(const Vector& w) {
  ++count;
  if (count == 1) mean = w;
  else mean += (w - mean) / static_cast<double>(count);
}

MlpObjective::MlpObjective(nn::MlpSpec spec, nn::Dataset train, nn::Dataset validation, nn::Curvature curvature)
    : spec_(std::move(spec)), train_(std::move(train)), validation_(std::move(validation)), curvature_(curvature) {
  spec_.validate();
  train_.validate();
  require(train_.input_dim() == spec_.input_dim(), ErrorCode::InvalidArgument,
          "model input width does not match the dataset");
  if (train_.is_classification())
    require(train_.classes() <= spec_.output_dim(), ErrorCode::InvalidArgument,
            "model output width is smaller than the number of classes");
  if (validation_.size() > 0) {
    validation_.validate();
    require(validation_.input_dim() == spec_.input_dim(), ErrorCode::InvalidArgument,
            "validation input width does not match the model");
  }
  train_all_ = nn::full_batch(train_);
}

double MlpObjective::loss(const Vector& w, std::span<const Index> batch) const {
  return nn::batch_loss(w, spec_, nn::make_batch(train_, batch));
}

Vector MlpObjective::gradient(const Vector& w, std::span<const Index> batch) const {
  return nn::gradient(w, spec_, nn::make_batch(train_, batch));
}

lanczos::LinearOperator MlpObjective::curvature(const Vector& w, std::span<const Index> batch) const {
  return nn::curvature_operator(w, spec_, nn::make_batch(train_, batch), curvature_);
}

double MlpObjective::full_loss(const Vector& w) const { return nn::batch_loss(w, spec_, train_all_); }

double MlpObjective::train_error(const Vector& w) const { return nn::error_rate(w, spec_, train_all_); }

double MlpObjective::validation_error(const Vector& w) const {
  if (validation_.size() == 0) return std::nan("");
  return nn::error_rate(w, spec_, nn::full_batch(validation_));
}

QuadraticObjective::QuadraticObjective(Vector eigenvalues, Index train_size)
    : eigenvalues_(std::move(eigenvalues)), train_size_(train_size) {
  require(eigenvalues_.size() >= 1, ErrorCode::InvalidArgument, "quadratic objective needs eigenvalues");
  require(eigenvalues_.allFinite(), ErrorCode::InvalidArgument, "quadratic eigenvalues must be finite");
  require(train_size_ >= 1, ErrorCode::InvalidArgument, "quadratic objective needs train_size >= 1");
}

double QuadraticObjective::loss(const Vector& w, std::span<const Index>) const { return full_loss(w); }

Vector QuadraticObjective::gradient(const Vector& w, std::span<const Index>) const {
  require(w.size() == dim(), ErrorCode::Domain, "quadratic: parameter length mismatch");
  return eigenvalues_.cwiseProduct(w);
}

lanczos::LinearOperator QuadraticObjective::curvature(const Vector&, std::span<const Index>) const {
  return lanczos::LinearOperator::diagonal(eigenvalues_);
}

double QuadraticObjective::full_loss(const Vector& w) const {
  require(w.size() == dim(), ErrorCode::Domain, "quadratic: parameter length mismatch");
  return 0.5 * eigenvalues_.dot(w.cwiseAbs2());
}

double QuadraticObjective::train_error(const Vector& w) const { return full_loss(w); }
double QuadraticObjective::validation_error(const Vector& w) const { return full_loss(w); }

}  // namespace hesslab::autolr
