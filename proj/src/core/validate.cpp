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

#include "hesslab/validate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "hesslab/lanczos.hpp"
#include "hesslab/parallel.hpp"

namespace hesslab::validate {

namespace {
constexpr Index kMaxSteps = 300;
constexpr double kResidualTol = 1e-8;
}  // namespace

Stats summarize(std::span<const double> xs) {
  require(!xs.empty(), ErrorCode::Domain, "summarize: no samples");
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, xs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0};
}

WignerResult run_wigner_cell(const WignerCell& cell) {
  require(cell.dim >= 2, ErrorCode::Domain, "wigner cell: dim must be >= 2");
  require(cell.trials >= 1, ErrorCode::Domain, "wigner cell: trials must be >= 1");
  require(cell.q > 0.0 && cell.s2 > 0.0, ErrorCode::Domain, "wigner cell: q and s2 must be > 0");
  const double sigma = std::sqrt(cell.q * cell.s2);
  const double spikes[1] = {cell.lambda};

  const auto n = static_cast<std::size_t>(cell.trials);
  std::vector<double> tops(n), overlaps(n);
  parallel_for(n, [&](std::size_t t) {
    const auto seed = derive_seed(cell.seed, t);
    auto sample = rmt::sample_spiked_goe(cell.dim, sigma, spikes, seed);
    const Vector u = sample.planted.col(0);
    const auto op = lanczos::LinearOperator::from_dense(std::move(sample.matrix));
    const auto pair = lanczos::extremal_eigenpair(op, lanczos::End::Top, kMaxSteps, derive_seed(seed, 1), kResidualTol);
    tops[t] = pair.value;
    const double dot = pair.vector.dot(u);
    overlaps[t] = dot * dot;
  });

  WignerResult out;
  out.predicted = rmt::wigner_spike(cell.lambda, cell.q, cell.s2, rmt::Tail::Top);
  out.top = summarize(tops);
  out.overlap = summarize(overlaps);
  out.rel_error = std::abs(out.top.mean - out.predicted.lambda_prime) / std::abs(out.predicted.lambda_prime);
  return out;
}

MpResult run_mp_cell(const MpCell& cell) {
  require(cell.dim >= 2, ErrorCode::Domain, "mp cell: dim must be >= 2");
  require(cell.trials >= 1, ErrorCode::Domain, "mp cell: trials must be >= 1");
  require(cell.beta > 0.0 && cell.sigma2 > 0.0, ErrorCode::Domain, "mp cell: beta and sigma2 must be > 0");
  const auto samples = static_cast<Index>(std::llround(static_cast<double>(cell.dim) / cell.beta));
  require(samples >= 1, ErrorCode::Domain, "mp cell: dim / beta must be >= 1");
  const double sigma = std::sqrt(cell.sigma2);
  const double spikes[1] = {cell.lambda};

  const auto n = static_cast<std::size_t>(cell.trials);
  std::vector<double> tops(n);
  parallel_for(n, [&](std::size_t t) {
    const auto seed = derive_seed(cell.seed, t);
    const auto factor = rmt::sample_spiked_wishart_factor(cell.dim, samples, sigma, spikes, seed, cell.construction);
    const lanczos::LinearOperator op(cell.dim, [&factor](const Vector& in, Vector& out) { out = factor.apply(in); });
    tops[t] = lanczos::extremal_eigenpair(op, lanczos::End::Top, kMaxSteps, derive_seed(seed, 1), kResidualTol).value;
  });

  MpResult out;
  out.top = summarize(tops);
  out.closed_form = rmt::mp_spike(cell.lambda, cell.beta, cell.sigma2, rmt::MpRoute::ClosedForm).lambda_prime;
  out.t_transform = rmt::mp_t_transform_closed_form(1.0 / cell.lambda, cell.sigma2, cell.beta);
  out.closed_form_rel_error = std::abs(out.top.mean - out.closed_form) / std::abs(out.top.mean);
  out.t_transform_rel_error = std::abs(out.top.mean - out.t_transform) / std::abs(out.top.mean);
  out.selected = out.t_transform_rel_error < out.closed_form_rel_error ? rmt::MpRoute::TTransform
                                                                       : rmt::MpRoute::ClosedForm;
  return out;
}

}  // namespace hesslab::validate
