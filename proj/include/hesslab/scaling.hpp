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

// Learning-rate scaling rules and the batch-Hessian outlier prediction
// pipeline.

#include <cstdint>
#include <optional>
#include <string>

#include "hesslab/lanczos.hpp"
#include "hesslab/nn.hpp"
#include "hesslab/rmt.hpp"

namespace hesslab::scaling {

enum class RuleKind { LinearSgd, SqrtAdaptive };

struct ScalingRule {
  RuleKind kind = RuleKind::LinearSgd;
  double base_lr = 0.0;
  std::int64_t base_batch = 1;
  std::optional<double> threshold_batch;  // cap on the batch size used for scaling
};

/// 2 / lambda: largest step for which the second-order loss change is negative.
double max_lr_sgd(double lambda_batch);

rmt::SpikePrediction predict_batch_lambda(double lambda_full, double s2, std::int64_t params, std::int64_t batch,
                                          std::int64_t dataset, rmt::LawKind law = rmt::LawKind::Wigner);

double scale_lr(const ScalingRule& rule, std::int64_t batch);

/// Batch size at which the noise term q s2 / lambda equals lambda.
struct ThresholdBatch {
  double b_eff = 0.0;  // P s2 / lambda^2
  double batch = 0.0;  // b_eff / (1 + b_eff / N)
};
ThresholdBatch threshold_batch(double lambda_full, double s2, std::int64_t params,
                               double dataset = rmt::kInfiniteBatch);

/// sqrt(b) kappa / (sqrt(P) sqrt(s2)); infinite when s2 == 0.
double adaptive_max_lr(double kappa, double s2, std::int64_t params, double b_eff);

/// True when the loss grows faster along a bulk-edge direction than along
/// the outlier direction j under an adaptive preconditioner.
bool edge_vs_outlier_condition(double eta_i, double eta_j, double delta, double lambda_j, const rmt::NoiseScale& ns);

struct CurvatureReport {
  double lambda1_full = 0.0;
  double lambda1_batch_predicted = 0.0;
  double lambda1_batch_measured_mean = 0.0;
  double lambda1_batch_measured_std = 0.0;
  double s2 = 0.0;
  double b_eff = 0.0;
  std::int64_t params = 0;
  std::int64_t batch = 0;
  std::int64_t dataset = 0;
  rmt::Regime regime = rmt::Regime::BulkAbsorbed;
  std::string to_json() const;
};

struct CurvatureOptions {
  std::int64_t batch = 128;
  Index batches = 10;          // measured batches
  Index lanczos_steps = 80;
  Index variance_probes = 4;   // unit directions averaged in the variance estimate
  nn::Curvature curvature = nn::Curvature::Hessian;
  rmt::LawKind law = rmt::LawKind::Wigner;
  std::uint64_t seed = 0;
};

/// Full-data top eigenvalue, per-element variance from per-sample operators,
/// the predicted batch outlier, and the measured batch top eigenvalue over
/// `batches` disjoint batches drawn without replacement.
CurvatureReport curvature_report(const nn::ParamVector& params, const nn::MlpSpec& spec, const nn::Dataset& data,
                                 const CurvatureOptions& options);

}  // namespace hesslab::scaling
