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

// Matrix-free spectral estimation: Lanczos with full reorthogonalisation,
// Gauss-quadrature (Ritz) spectra, stochastic Lanczos quadrature, Hutchinson
// trace estimation and the per-sample Hessian variance estimator.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hesslab/common.hpp"

namespace hesslab::lanczos {

/// A symmetric linear map on R^dim given only through its action.
class LinearOperator {
 public:
  using Apply = std::function<void(const Vector& in, Vector& out)>;

  LinearOperator() = default;
  LinearOperator(Index dim, Apply apply) : dim_(dim), apply_(std::move(apply)) {}

  static LinearOperator from_dense(Matrix m);
  static LinearOperator identity(Index dim);
  static LinearOperator diagonal(Vector d);

  Index dim() const noexcept { return dim_; }
  Vector operator()(const Vector& v) const;
  void apply(const Vector& in, Vector& out) const;

 private:
  Index dim_ = 0;
  Apply apply_;
};

enum class SeedKind { Rademacher, Gaussian };

/// Unit-norm start vector.
Vector random_unit_vector(Index dim, std::uint64_t seed, SeedKind kind = SeedKind::Rademacher);

struct TridiagonalFactor {
  std::vector<double> alphas;  // length m
  std::vector<double> betas;   // length m - 1, all >= 0
  Matrix basis;                // dim x m when retained, else empty
  bool breakdown = false;      // invariant subspace found before the requested m

  Index size() const noexcept { return static_cast<Index>(alphas.size()); }
};

struct LanczosOptions {
  Index steps = 100;
  std::uint64_t seed = 0;
  SeedKind seed_kind = SeedKind::Rademacher;
  bool keep_basis = false;
  double breakdown_tol = 1e-12;
};

TridiagonalFactor lanczos_decompose(const LinearOperator& op, const LanczosOptions& options);
TridiagonalFactor lanczos_decompose(const LinearOperator& op, const Vector& start, Index steps,
                                    bool keep_basis = false, double breakdown_tol = 1e-12);

/// Eigen-decomposition of a symmetric tridiagonal matrix by implicit QL with
/// Wilkinson shifts. Eigenvalues ascending; vectors column-wise.
struct TridiagonalEigen {
  Vector values;
  Matrix vectors;
};
TridiagonalEigen tridiagonal_eigen(std::span<const double> diagonal, std::span<const double> off_diagonal);

/// Discrete spectral density: Gauss quadrature nodes and weights.
struct RitzSpectrum {
  std::vector<double> nodes;    // ascending
  std::vector<double> weights;  // in [0, 1], sum to 1

  std::size_t size() const noexcept { return nodes.size(); }
  double moment(int k) const;
};

RitzSpectrum ritz_quadrature(const TridiagonalFactor& factor);

struct SlqOptions {
  Index steps = 100;
  Index vectors = 1;
  std::uint64_t seed = 0;
  SeedKind seed_kind = SeedKind::Rademacher;
};

/// Average of per-probe Ritz spectra. Probe i uses derive_seed(seed, i).
RitzSpectrum slq_density(const LinearOperator& op, const SlqOptions& options);

/// Mean of v^T A v over Rademacher probes; probe i uses derive_seed(seed, i).
double hutchinson_trace(const LinearOperator& op, Index probes, std::uint64_t seed);

/// Largest (Top) or smallest (Bottom) eigenpair by Lanczos, stopping when
/// the Ritz residual falls below tol * |value| or after max_steps.
struct Eigenpair {
  double value = 0.0;
  Vector vector;
  double residual = 0.0;
  Index steps = 0;
};
enum class End { Top, Bottom };
Eigenpair extremal_eigenpair(const LinearOperator& op, End end, Index max_steps, std::uint64_t seed,
                             double tol = 1e-10);

/// Per-sample Hessian variance along a unit direction v.
///
/// normalized: (1/N) sum_i |H_i v|^2 - (v^T Hbar v)^2
/// otherwise the first sum is left unnormalised.
double hessian_variance(std::span<const LinearOperator> sample_ops, const Vector& v, bool normalize = true);

/// Streaming form: `sample_op(i)` yields the operator of sample i.
double hessian_variance(Index count, const std::function<LinearOperator(Index)>& sample_op, const Vector& v,
                        bool normalize = true);

/// s^2 = max(0, variance) / P.
double per_element_variance(double variance, std::int64_t params);

enum class DegeneracyMode { NearestOrigin, MergeTwoClosest };

struct Degeneracy {
  double mass = 0.0;
  double value = 0.0;
};
Degeneracy degeneracy_estimate(const RitzSpectrum& spectrum, DegeneracyMode mode);

}  // namespace hesslab::lanczos
