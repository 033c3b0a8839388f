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

// Random-matrix laws for mini-batch Hessian fluctuations: bulk densities,
// transforms, spiked-eigenvalue predictions (forward and inverse), spiked
// ensemble samplers and the feed-forward rank bound.

#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "hesslab/common.hpp"

namespace hesslab::rmt {

inline constexpr double kInfiniteBatch = std::numeric_limits<double>::infinity();

/// B / (1 - B/N); kInfiniteBatch when B == N (no sub-sampling noise).
double effective_batch(std::int64_t batch, std::int64_t dataset);

/// Sub-sampling noise parameters for one (P, B, N) configuration.
struct NoiseScale {
  std::int64_t params = 0;   // P
  std::int64_t batch = 0;    // B
  std::int64_t dataset = 0;  // N
  double b_eff = 0.0;        // effective batch, infinite when B == N
  double s2 = 0.0;           // per-element variance of a single-sample Hessian entry

  static NoiseScale make(std::int64_t params, std::int64_t batch, std::int64_t dataset, double s2);

  /// Shape factor P / b_eff; zero at B == N.
  double q() const noexcept;
  bool noiseless() const noexcept { return b_eff == kInfiniteBatch; }
};

struct WignerLaw {
  double sigma = 1.0;
};
struct MarchenkoPasturLaw {
  double sigma2 = 1.0;
  double beta = 1.0;
};
using SpectralLaw = std::variant<WignerLaw, MarchenkoPasturLaw>;

/// Support [lo, hi] of the continuous bulk.
std::pair<double, double> support(const SpectralLaw& law);

enum class Regime { Separated, BulkAbsorbed };
enum class Tail { Top, Bottom };

struct SpikePrediction {
  double lambda_prime = 0.0;
  double overlap_sq = 0.0;
  Regime regime = Regime::BulkAbsorbed;
};

// --- Wigner bulk ---------------------------------------------------------

double semicircle_density(double lambda, double sigma);

/// S(z) = (z - sqrt(z^2 - 4 sigma^2)) / (2 sigma^2) on the branch with
/// z S(z) -> 1. Throws Domain for real z inside [-2 sigma, 2 sigma].
std::complex<double> semicircle_stieltjes(std::complex<double> z, double sigma);

/// R(w) = sigma^2 w.
double semicircle_r_transform(double w, double sigma);

/// Outlier location and eigenvector overlap for a rank-one perturbation of
/// a semicircle bulk of variance q * s2. Works for any isolated outlier,
/// not only the extremal one.
SpikePrediction wigner_spike(double lambda, double q, double s2, Tail tail = Tail::Top);
SpikePrediction wigner_spike(double lambda, const NoiseScale& ns, Tail tail = Tail::Top);

// --- Marchenko-Pastur bulk -----------------------------------------------

double mp_density(double y, double sigma2, double beta);

/// Standard Stieltjes transform G(z) = E[1/(z - t)] of the MP law.
std::complex<double> mp_stieltjes(std::complex<double> z, double sigma2, double beta);

/// The T-transform closed form as written for the GGN noise model:
/// (z - s(1+b) - sqrt((z + s(1-b))^2 - 4 b s z)) / (2 b s).
/// Returns NaN where the square root is not real.
double mp_t_transform_closed_form(double z, double sigma2, double beta);

enum class MpRoute {
  ClosedForm,  // (l + s(1 - b)) / (1 - b s / l), threshold s(1 + b)
  TTransform,  // T(1/l) with the closed-form T above
};

/// Outlier prediction for the PSD (GGN) noise model.
///
/// ClosedForm is the default reference. For that route the overlap is the
/// additive-spike overlap -G(l')^2 / G'(l') clamped to [0, 1]; the TTransform
/// route carries no overlap prediction (overlap_sq = NaN when Separated).
SpikePrediction mp_spike(double lambda, double beta, double sigma2, MpRoute route = MpRoute::ClosedForm);
SpikePrediction mp_spike(double lambda, const NoiseScale& ns, MpRoute route = MpRoute::ClosedForm);

// --- inverse map ---------------------------------------------------------

/// Recovers the unperturbed outlier from an observed separated outlier.
/// Wigner: quadratic inversion; MP: inversion of the closed-form route.
/// Throws NotInvertible at or inside the bulk edge.
double invert_spike(double lambda_observed, const SpectralLaw& law);
enum class LawKind { Wigner, MarchenkoPastur };

/// Builds the law from the noise scale (Wigner sigma^2 = q s2; MP sigma^2 = s2,
/// beta = q). Noiseless scales invert to the observation itself.
double invert_spike(double lambda_observed, const NoiseScale& ns, LawKind kind);

// --- samplers ------------------------------------------------------------

struct SpikedSample {
  Matrix matrix;  // P x P symmetric
  Matrix planted; // P x r orthonormal spike directions
};

/// GOE noise (off-diagonal variance sigma^2/P, diagonal 2 sigma^2/P) plus
/// sum_i spike_i u_i u_i^T with random orthonormal u_i.
SpikedSample sample_spiked_goe(Index dim, double sigma, std::span<const double> spikes, std::uint64_t seed);

enum class WishartConstruction {
  Product,  // (J + E)(J + E)^T
  Additive, // J J^T + E E^T
};

struct SpikedWishartFactor {
  Matrix noise;     // E, P x n, entries N(0, sigma^2 / n)
  Matrix planted;   // P x r left singular directions of J
  Matrix right;     // n x r right singular directions of J
  Vector singular;  // r singular values of J; J J^T has eigenvalues singular^2
  WishartConstruction construction = WishartConstruction::Product;

  Index dim() const { return noise.rows(); }
  Vector apply(const Vector& v) const;
  Matrix dense() const;
};

SpikedWishartFactor sample_spiked_wishart_factor(Index dim, Index samples, double sigma,
                                                 std::span<const double> spikes, std::uint64_t seed,
                                                 WishartConstruction construction = WishartConstruction::Product);

/// Dense PSD matrix built from sample_spiked_wishart_factor.
SpikedSample sample_spiked_wishart(Index dim, Index samples, double sigma, std::span<const double> spikes,
                                   std::uint64_t seed,
                                   WishartConstruction construction = WishartConstruction::Product);

// --- rank bound ----------------------------------------------------------

struct FfnArch {
  std::int64_t d_x = 0;
  std::int64_t d_y = 0;
  std::vector<std::int64_t> hidden_neurons;
  std::int64_t params = 0;
};

struct RankBound {
  std::int64_t bound = 0;
  double degeneracy_floor = 0.0;
};

/// 4 d_y (sum N_l + d_x) and the implied minimum spectral mass at zero.
RankBound rank_bound_ffn(const FfnArch& arch);

}  // namespace hesslab::rmt
