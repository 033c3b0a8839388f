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

#include "hesslab/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "hesslab/parallel.hpp"

namespace hesslab::scaling {

double max_lr_sgd(double lambda_batch) {
  require(std::isfinite(lambda_batch) && lambda_batch > 0.0, ErrorCode::Domain, "max_lr_sgd requires lambda > 0");
  return 2.0 / lambda_batch;
}

rmt::SpikePrediction predict_batch_lambda(double lambda_full, double s2, std::int64_t params, std::int64_t batch,
                                          std::int64_t dataset, rmt::LawKind law) {
  const auto ns = rmt::NoiseScale::make(params, batch, dataset, s2);
  if (law == rmt::LawKind::Wigner) return rmt::wigner_spike(lambda_full, ns, rmt::Tail::Top);
  return rmt::mp_spike(lambda_full, ns, rmt::MpRoute::ClosedForm);
}

double scale_lr(const ScalingRule& rule, std::int64_t batch) {
  require(batch >= 1, ErrorCode::Domain, "scale_lr requires B >= 1");
  require(rule.base_lr > 0.0, ErrorCode::Domain, "scale_lr requires base_lr > 0");
  require(rule.base_batch >= 1, ErrorCode::Domain, "scale_lr requires base_batch >= 1");
  double b = static_cast<double>(batch);
  if (rule.threshold_batch) {
    require(*rule.threshold_batch > 0.0, ErrorCode::Domain, "scale_lr: threshold batch must be > 0");
    b = std::min(b, *rule.threshold_batch);
  }
  const double ratio = b / static_cast<double>(rule.base_batch);
  return rule.kind == RuleKind::LinearSgd ? rule.base_lr * ratio : rule.base_lr * std::sqrt(ratio);
}

ThresholdBatch threshold_batch(double lambda_full, double s2, std::int64_t params, double dataset) {
  require(std::isfinite(lambda_full) && lambda_full > 0.0, ErrorCode::Domain, "threshold_batch requires lambda > 0");
  require(std::isfinite(s2) && s2 >= 0.0, ErrorCode::Domain, "threshold_batch requires s2 >= 0");
  require(params > 0, ErrorCode::Domain, "threshold_batch requires P > 0");
  require(dataset > 0.0, ErrorCode::Domain, "threshold_batch requires N > 0");
  ThresholdBatch out;
  out.b_eff = static_cast<double>(params) * s2 / (lambda_full * lambda_full);
  out.batch = std::isinf(dataset) ? out.b_eff : out.b_eff / (1.0 + out.b_eff / dataset);
  return out;
}

double adaptive_max_lr(double kappa, double s2, std::int64_t params, double b_eff) {
  require(std::isfinite(kappa) && kappa > 0.0, ErrorCode::Domain, "adaptive_max_lr requires kappa > 0");
  require(s2 >= 0.0, ErrorCode::Domain, "adaptive_max_lr requires s2 >= 0");
  require(params > 0, ErrorCode::Domain, "adaptive_max_lr requires P > 0");
  require(b_eff > 0.0, ErrorCode::Domain, "adaptive_max_lr requires b_eff > 0");
  if (s2 == 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(b_eff) * kappa / (std::sqrt(static_cast<double>(params)) * std::sqrt(s2));
}

bool edge_vs_outlier_condition(double eta_i, double eta_j, double delta, double lambda_j, const rmt::NoiseScale& ns) {
  require(eta_i >= 0.0 && eta_j >= 0.0 && delta >= 0.0 && lambda_j >= 0.0, ErrorCode::Domain,
          "edge_vs_outlier_condition requires non-negative inputs");
  require(eta_i + delta > 0.0, ErrorCode::Domain, "edge_vs_outlier_condition: eta_i + delta must be > 0");
  if (std::isinf(delta)) return false;
  const double sigma = std::sqrt(ns.s2);
  const double x = lambda_j * std::sqrt(ns.b_eff) / (std::sqrt(static_cast<double>(ns.params)) * sigma);
  const double rhs = x + 1.0 / x;
  const double lhs = (eta_j + delta) / (eta_i + delta);
  return lhs > rhs;
}

std::string CurvatureReport::to_json() const {
  auto finite_or_null = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json j;
  j["lambda1_full"] = lambda1_full;
  j["lambda1_batch_predicted"] = lambda1_batch_predicted;
  j["lambda1_batch_measured_mean"] = lambda1_batch_measured_mean;
  j["lambda1_batch_measured_std"] = lambda1_batch_measured_std;
  j["s2"] = s2;
  j["b_eff"] = finite_or_null(b_eff);
  j["params"] = params;
  j["batch"] = batch;
  j["dataset"] = dataset;
  j["regime"] = regime == rmt::Regime::Separated ? "separated" : "bulk_absorbed";
  return j.dump(2);
}

CurvatureReport curvature_report(const nn::ParamVector& params, const nn::MlpSpec& spec, const nn::Dataset& data,
                                 const CurvatureOptions& options) {
  data.validate();
  const Index n = data.size();
  const Index p = params.size();
  require(options.batch >= 1 && options.batch <= n, ErrorCode::Domain, "curvature_report requires 1 <= B <= N");
  require(options.batches >= 1, ErrorCode::Domain, "curvature_report requires at least one batch");
  require(options.variance_probes >= 1, ErrorCode::Domain, "curvature_report requires at least one variance probe");
  require(options.lanczos_steps >= 2, ErrorCode::Domain, "curvature_report requires at least two Lanczos steps");
  const Index steps = std::min<Index>(options.lanczos_steps, p);

  CurvatureReport report;
  report.params = p;
  report.batch = options.batch;
  report.dataset = n;

  const auto full_op = nn::curvature_operator(params, spec, nn::full_batch(data), options.curvature);
  report.lambda1_full =
      lanczos::extremal_eigenpair(full_op, lanczos::End::Top, steps, derive_seed(options.seed, 0)).value;

  std::vector<nn::Batch> samples;
  samples.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const Index idx[1] = {i};
    samples.push_back(nn::make_batch(data, idx));
  }
  double variance = 0.0;
  for (Index k = 0; k < options.variance_probes; ++k) {
    const Vector v = lanczos::random_unit_vector(p, derive_seed(options.seed, 1000 + static_cast<std::uint64_t>(k)));
    variance += lanczos::hessian_variance(
        n, [&](Index i) { return nn::curvature_operator(params, spec, samples[i], options.curvature); }, v, true);
  }
  variance /= static_cast<double>(options.variance_probes);
  report.s2 = lanczos::per_element_variance(variance, p);

  const auto prediction = predict_batch_lambda(report.lambda1_full, report.s2, p, options.batch, n, options.law);
  report.lambda1_batch_predicted = prediction.lambda_prime;
  report.regime = prediction.regime;
  report.b_eff = rmt::effective_batch(options.batch, n);

  nn::BatchSampler sampler(n, options.batch, derive_seed(options.seed, 1));
  std::vector<std::vector<Index>> chosen;
  while (static_cast<Index>(chosen.size()) < options.batches) {
    for (auto& b : sampler.next_epoch()) {
      if (static_cast<Index>(b.size()) == options.batch && static_cast<Index>(chosen.size()) < options.batches)
        chosen.push_back(std::move(b));
    }
  }
  std::vector<double> tops(chosen.size());
  parallel_for(chosen.size(), [&](std::size_t i) {
    const auto op = nn::curvature_operator(params, spec, nn::make_batch(data, chosen[i]), options.curvature);
    tops[i] = lanczos::extremal_eigenpair(op, lanczos::End::Top, steps, derive_seed(options.seed, 2 + i)).value;
  });
  const double count = static_cast<double>(tops.size());
  const double mean = std::accumulate(tops.begin(), tops.end(), 0.0) / count;
  double ss = 0.0;
  for (double t : tops) ss += (t - mean) * (t - mean);
  report.lambda1_batch_measured_mean = mean;
  report.lambda1_batch_measured_std = tops.size() > 1 ? std::sqrt(ss / (count - 1.0)) : 0.0;
  return report;
}

}  // namespace hesslab::scaling
