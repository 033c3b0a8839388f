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

#include "hesslab/rmt.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace hesslab::rmt {

namespace {

using cplx = std::complex<double>;

// sqrt((z - lo)(z - hi)) on the branch that behaves like z at infinity.
cplx branch_sqrt(cplx z, double lo, double hi) { return std::sqrt(z - lo) * std::sqrt(z - hi); }

SpikePrediction noiseless(double lambda) { return {lambda, 1.0, Regime::Separated}; }

}  // namespace

double effective_batch(std::int64_t batch, std::int64_t dataset) {
  if (batch <= 0 || dataset <= 0 || batch > dataset)
    fail(ErrorCode::Domain, "effective_batch requires 1 <= B <= N (B=" + std::to_string(batch) +
                                ", N=" + std::to_string(dataset) + ")");
  if (batch == dataset) return kInfiniteBatch;
  const double b = static_cast<double>(batch);
  return b / (1.0 - b / static_cast<double>(dataset));
}

NoiseScale NoiseScale::make(std::int64_t params, std::int64_t batch, std::int64_t dataset, double s2) {
  require(params > 0, ErrorCode::Domain, "NoiseScale requires P > 0");
  require(s2 >= 0.0 && std::isfinite(s2), ErrorCode::Domain, "NoiseScale requires finite s2 >= 0");
  NoiseScale ns;
  ns.params = params;
  ns.batch = batch;
  ns.dataset = dataset;
  ns.b_eff = effective_batch(batch, dataset);
  ns.s2 = s2;
  return ns;
}

double NoiseScale::q() const noexcept {
  if (noiseless()) return 0.0;
  return static_cast<double>(params) / b_eff;
}

std::pair<double, double> support(const SpectralLaw& law) {
  if (const auto* w = std::get_if<WignerLaw>(&law)) return {-2.0 * w->sigma, 2.0 * w->sigma};
  const auto& mp = std::get<MarchenkoPasturLaw>(law);
  const double r = std::sqrt(mp.beta);
  return {mp.sigma2 * (1.0 - r) * (1.0 - r), mp.sigma2 * (1.0 + r) * (1.0 + r)};
}

double semicircle_density(double lambda, double sigma) {
  require(sigma > 0.0, ErrorCode::Domain, "semicircle_density requires sigma > 0");
  const double s2 = sigma * sigma;
  const double d = 4.0 * s2 - lambda * lambda;
  if (d <= 0.0) return 0.0;
  return std::sqrt(d) / (2.0 * std::numbers::pi * s2);
}

std::complex<double> semicircle_stieltjes(std::complex<double> z, double sigma) {
  require(sigma > 0.0, ErrorCode::Domain, "semicircle_stieltjes requires sigma > 0");
  if (z.imag() == 0.0 && std::abs(z.real()) <= 2.0 * sigma)
    fail(ErrorCode::Domain, "semicircle_stieltjes: real argument on the support");
  // (z - r) / (2 sigma^2) rewritten as 2 / (z + r) to avoid cancellation for large |z|.
  return 2.0 / (z + branch_sqrt(z, -2.0 * sigma, 2.0 * sigma));
}

double semicircle_r_transform(double w, double sigma) { return sigma * sigma * w; }

SpikePrediction wigner_spike(double lambda, double q, double s2, Tail tail) {
  require(q >= 0.0 && s2 >= 0.0, ErrorCode::Domain, "wigner_spike requires q >= 0 and s2 >= 0");
  const double variance = q * s2;
  const double threshold = std::sqrt(variance);
  const bool separated = tail == Tail::Top ? lambda > threshold : lambda < -threshold;
  if (!separated) {
    const double edge = 2.0 * threshold;
    return {tail == Tail::Top ? edge : -edge, 0.0, Regime::BulkAbsorbed};
  }
  return {lambda + variance / lambda, 1.0 - variance / (lambda * lambda), Regime::Separated};
}

SpikePrediction wigner_spike(double lambda, const NoiseScale& ns, Tail tail) {
  if (ns.noiseless()) return noiseless(lambda);
  return wigner_spike(lambda, ns.q(), ns.s2, tail);
}

double mp_density(double y, double sigma2, double beta) {
  require(sigma2 > 0.0 && beta > 0.0, ErrorCode::Domain, "mp_density requires sigma2 > 0 and beta > 0");
  if (y <= 0.0) return 0.0;
  const double shifted = y - sigma2 * (1.0 - beta);
  const double d = 4.0 * beta * sigma2 * y - shifted * shifted;
  if (d <= 0.0) return 0.0;
  return std::sqrt(d) / (2.0 * std::numbers::pi * beta * sigma2 * y);
}

std::complex<double> mp_stieltjes(std::complex<double> z, double sigma2, double beta) {
  require(sigma2 > 0.0 && beta > 0.0, ErrorCode::Domain, "mp_stieltjes requires sigma2 > 0 and beta > 0");
  const auto [lo, hi] = support(MarchenkoPasturLaw{sigma2, beta});
  if (z.imag() == 0.0 && z.real() >= lo && z.real() <= hi)
    fail(ErrorCode::Domain, "mp_stieltjes: real argument on the support");
  if (z == cplx(0.0)) fail(ErrorCode::Domain, "mp_stieltjes: z = 0");
  return 2.0 / (z - sigma2 * (1.0 - beta) + branch_sqrt(z, lo, hi));
}

double mp_t_transform_closed_form(double z, double sigma2, double beta) {
  const double shifted = z + sigma2 * (1.0 - beta);
  const double d = shifted * shifted - 4.0 * beta * sigma2 * z;
  if (d < 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (z - sigma2 * (1.0 + beta) - std::sqrt(d)) / (2.0 * beta * sigma2);
}

namespace {

// -G(rho)^2 / G'(rho) for the MP Stieltjes transform at a real rho above the bulk.
double additive_overlap(double rho, double sigma2, double beta) {
  const auto [lo, hi] = support(MarchenkoPasturLaw{sigma2, beta});
  if (rho <= hi) return 0.0;
  const double root = std::sqrt((rho - lo) * (rho - hi));
  const double numer = rho - sigma2 * (1.0 - beta) - root;
  const double scale = 2.0 * beta * sigma2;
  const double g = numer / (scale * rho);
  const double dnumer = 1.0 - (2.0 * rho - lo - hi) / (2.0 * root);
  const double dg = (dnumer * rho - numer) / (scale * rho * rho);
  if (dg >= 0.0) return 0.0;
  return std::clamp(-g * g / dg, 0.0, 1.0);
}

}  // namespace

SpikePrediction mp_spike(double lambda, double beta, double sigma2, MpRoute route) {
  require(lambda > 0.0, ErrorCode::Domain, "mp_spike requires lambda > 0");
  require(beta > 0.0 && sigma2 >= 0.0, ErrorCode::Domain, "mp_spike requires beta > 0 and sigma2 >= 0");
  if (sigma2 == 0.0) return noiseless(lambda);

  if (route == MpRoute::TTransform) {
    const double raw = mp_t_transform_closed_form(1.0 / lambda, sigma2, beta);
    const double edge = support(MarchenkoPasturLaw{sigma2, beta}).second;
    if (std::isfinite(raw) && raw > edge)
      return {raw, std::numeric_limits<double>::quiet_NaN(), Regime::Separated};
    return {edge, 0.0, Regime::BulkAbsorbed};
  }

  const double threshold = sigma2 * (1.0 + beta);
  if (!(lambda > threshold)) return {2.0 * threshold, 0.0, Regime::BulkAbsorbed};
  const double denom = 1.0 - beta * sigma2 / lambda;
  if (denom <= 0.0) fail(ErrorCode::Regime, "mp_spike: non-positive denominator in the separated branch");
  const double lp = (lambda + sigma2 * (1.0 - beta)) / denom;
  return {lp, additive_overlap(lp, sigma2, beta), Regime::Separated};
}

SpikePrediction mp_spike(double lambda, const NoiseScale& ns, MpRoute route) {
  if (ns.noiseless()) return noiseless(lambda);
  return mp_spike(lambda, ns.q(), ns.s2, route);
}

double invert_spike(double observed, const SpectralLaw& law) {
  if (const auto* w = std::get_if<WignerLaw>(&law)) {
    const double s2 = w->sigma * w->sigma;
    if (!(std::abs(observed) > 2.0 * w->sigma))
      fail(ErrorCode::NotInvertible, "invert_spike: observation at or inside the semicircle edge");
    const double root = std::sqrt(observed * observed - 4.0 * s2);
    return observed > 0.0 ? 0.5 * (observed + root) : 0.5 * (observed - root);
  }
  const auto& mp = std::get<MarchenkoPasturLaw>(law);
  const double edge = 2.0 * mp.sigma2 * (1.0 + mp.beta);
  if (!(observed > edge)) fail(ErrorCode::NotInvertible, "invert_spike: observation at or below the MP edge");
  const double bs = mp.beta * mp.sigma2;
  const double b = observed + bs - mp.sigma2;
  return 0.5 * (b + std::sqrt(b * b - 4.0 * observed * bs));
}

double invert_spike(double observed, const NoiseScale& ns, LawKind kind) {
  if (ns.noiseless()) return observed;
  if (kind == LawKind::Wigner) return invert_spike(observed, WignerLaw{std::sqrt(ns.q() * ns.s2)});
  return invert_spike(observed, MarchenkoPasturLaw{ns.s2, ns.q()});
}

RankBound rank_bound_ffn(const FfnArch& arch) {
  require(arch.d_x > 0 && arch.d_y > 0, ErrorCode::Domain, "rank_bound_ffn requires d_x, d_y > 0");
  require(arch.params > 0, ErrorCode::Domain, "rank_bound_ffn requires P > 0");
  std::int64_t neurons = 0;
  for (auto n : arch.hidden_neurons) {
    require(n >= 0, ErrorCode::Domain, "rank_bound_ffn: negative neuron count");
    neurons += n;
  }
  RankBound out;
  out.bound = 4 * arch.d_y * (neurons + arch.d_x);
  out.degeneracy_floor =
      std::max(0.0, 1.0 - static_cast<double>(out.bound) / static_cast<double>(arch.params));
  return out;
}

}  // namespace hesslab::rmt
