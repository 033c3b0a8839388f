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

#include "hesslab/lanczos.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "hesslab/parallel.hpp"

namespace hesslab::lanczos {

LinearOperator LinearOperator::from_dense(Matrix m) {
  require(m.rows() == m.cols(), ErrorCode::Domain, "LinearOperator::from_dense: matrix must be square");
  const Index n = m.rows();
  return LinearOperator(n, [m = std::move(m)](const Vector& in, Vector& out) { out.noalias() = m * in; });
}

LinearOperator LinearOperator::identity(Index dim) {
  return LinearOperator(dim, [](const Vector& in, Vector& out) { out = in; });
}

LinearOperator LinearOperator::diagonal(Vector d) {
  const Index n = d.size();
  return LinearOperator(n, [d = std::move(d)](const Vector& in, Vector& out) { out = d.cwiseProduct(in); });
}

void LinearOperator::apply(const Vector& in, Vector& out) const {
  require(in.size() == dim_, ErrorCode::Domain, "LinearOperator: input has the wrong dimension");
  out.resize(dim_);
  apply_(in, out);
}

Vector LinearOperator::operator()(const Vector& v) const {
  Vector out(dim_);
  apply(v, out);
  return out;
}

Vector random_unit_vector(Index dim, std::uint64_t seed, SeedKind kind) {
  require(dim >= 1, ErrorCode::Domain, "random_unit_vector: dim must be >= 1");
  std::mt19937_64 rng(seed);
  Vector v(dim);
  if (kind == SeedKind::Rademacher) {
    for (Index i = 0; i < dim; ++i) v(i) = (rng() >> 63) ? 1.0 : -1.0;
  } else {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index i = 0; i < dim; ++i) v(i) = normal(rng);
  }
  return v / v.norm();
}

namespace {

constexpr double kReorthTol = 1e-10;

// Incremental Lanczos with full (two-pass when needed) reorthogonalisation.
class Krylov {
 public:
  Krylov(const LinearOperator& op, const Vector& start, Index capacity, double breakdown_tol)
      : op_(op), basis_(op.dim(), capacity), tol_(breakdown_tol) {
    require(start.size() == op.dim(), ErrorCode::Domain, "lanczos: start vector has the wrong dimension");
    const double norm = start.norm();
    require(norm > 0.0 && std::isfinite(norm), ErrorCode::Domain, "lanczos: start vector must be finite and nonzero");
    basis_.col(0) = start / norm;
  }

  Index size() const { return static_cast<Index>(alphas_.size()); }
  bool broken() const { return broken_; }
  double last_beta() const { return residual_beta_; }
  const std::vector<double>& alphas() const { return alphas_; }
  const std::vector<double>& betas() const { return betas_; }
  auto basis() const { return basis_.leftCols(size()); }

  // Extends the factorisation by one step. Returns false once no further
  // step is possible (breakdown or capacity reached).
  bool step() {
    const Index j = size();
    if (broken_ || j >= basis_.cols()) return false;

    op_.apply(basis_.col(j), w_);
    if (!w_.allFinite()) fail(ErrorCode::Numeric, "lanczos: operator returned non-finite values");

    double alpha = basis_.col(j).dot(w_);
    w_.noalias() -= alpha * basis_.col(j);
    if (j > 0) w_.noalias() -= betas_.back() * basis_.col(j - 1);

    alpha += orthogonalize(j);
    double worst = 0.0;
    const double wnorm = w_.norm();
    if (wnorm > 0.0) {
      for (Index i = 0; i <= j; ++i) worst = std::max(worst, std::abs(basis_.col(i).dot(w_)) / wnorm);
      if (worst > kReorthTol) alpha += orthogonalize(j);
    }

    alphas_.push_back(alpha);
    scale_ = std::max(scale_, std::abs(alpha));
    residual_beta_ = w_.norm();
    scale_ = std::max(scale_, residual_beta_);

    if (residual_beta_ < tol_ * std::max(1.0, scale_)) {
      broken_ = true;
      return false;
    }
    if (j + 1 < basis_.cols()) {
      betas_.push_back(residual_beta_);
      basis_.col(j + 1) = w_ / residual_beta_;
    }
    return j + 1 < basis_.cols();
  }

 private:
  // Modified Gram-Schmidt of w against q_0..q_j; returns the q_j coefficient.
  double orthogonalize(Index j) {
    double own = 0.0;
    for (Index i = 0; i <= j; ++i) {
      const double c = basis_.col(i).dot(w_);
      w_.noalias() -= c * basis_.col(i);
      if (i == j) own = c;
    }
    return own;
  }

  const LinearOperator& op_;
  Matrix basis_;
  Vector w_;
  std::vector<double> alphas_;
  std::vector<double> betas_;
  double tol_;
  double scale_ = 0.0;
  double residual_beta_ = 0.0;
  bool broken_ = false;
};

}  // namespace

TridiagonalFactor lanczos_decompose(const LinearOperator& op, const Vector& start, Index steps, bool keep_basis,
                                    double breakdown_tol) {
  require(steps >= 1, ErrorCode::Domain, "lanczos_decompose: m must be >= 1");
  if (steps > op.dim())
    fail(ErrorCode::Domain, "lanczos_decompose: m = " + std::to_string(steps) + " exceeds dimension " +
                                std::to_string(op.dim()));

  Krylov krylov(op, start, steps, breakdown_tol);
  while (krylov.step()) {
  }

  TridiagonalFactor out;
  out.alphas = krylov.alphas();
  out.betas = krylov.betas();
  out.betas.resize(out.alphas.size() - 1);
  out.breakdown = krylov.broken() && krylov.size() < steps;
  if (keep_basis) out.basis = krylov.basis();
  return out;
}

TridiagonalFactor lanczos_decompose(const LinearOperator& op, const LanczosOptions& options) {
  require(options.steps >= 1, ErrorCode::Domain, "lanczos_decompose: m must be >= 1");
  if (options.steps > op.dim())
    fail(ErrorCode::Domain, "lanczos_decompose: m = " + std::to_string(options.steps) + " exceeds dimension " +
                                std::to_string(op.dim()));
  const Vector start = random_unit_vector(op.dim(), options.seed, options.seed_kind);
  return lanczos_decompose(op, start, options.steps, options.keep_basis, options.breakdown_tol);
}

double RitzSpectrum::moment(int k) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * std::pow(nodes[i], k);
  return acc;
}

RitzSpectrum ritz_quadrature(const TridiagonalFactor& factor) {
  require(factor.size() >= 1, ErrorCode::Domain, "ritz_quadrature: empty factor");
  const auto eig = tridiagonal_eigen(factor.alphas, factor.betas);
  RitzSpectrum out;
  out.nodes.assign(eig.values.data(), eig.values.data() + eig.values.size());
  out.weights.resize(out.nodes.size());
  double total = 0.0;
  for (Index k = 0; k < eig.vectors.cols(); ++k) {
    const double first = eig.vectors(0, k);
    out.weights[k] = first * first;
    total += out.weights[k];
  }
  for (auto& w : out.weights) w /= total;
  return out;
}

RitzSpectrum slq_density(const LinearOperator& op, const SlqOptions& options) {
  require(options.vectors >= 1, ErrorCode::Domain, "slq_density: n_vectors must be >= 1");
  const auto n = static_cast<std::size_t>(options.vectors);
  std::vector<RitzSpectrum> parts(n);
  parallel_for(n, [&](std::size_t i) {
    LanczosOptions lo;
    lo.steps = options.steps;
    lo.seed = derive_seed(options.seed, i);
    lo.seed_kind = options.seed_kind;
    parts[i] = ritz_quadrature(lanczos_decompose(op, lo));
  });
  if (n == 1) return parts.front();

  std::vector<std::pair<double, double>> all;
  for (const auto& p : parts)
    for (std::size_t k = 0; k < p.size(); ++k) all.emplace_back(p.nodes[k], p.weights[k] / static_cast<double>(n));
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  RitzSpectrum out;
  double total = 0.0;
  for (const auto& [node, weight] : all) {
    if (!out.nodes.empty() && out.nodes.back() == node) {
      out.weights.back() += weight;
    } else {
      out.nodes.push_back(node);
      out.weights.push_back(weight);
    }
    total += weight;
  }
  for (auto& w : out.weights) w /= total;
  return out;
}

double hutchinson_trace(const LinearOperator& op, Index probes, std::uint64_t seed) {
  require(probes >= 1, ErrorCode::Domain, "hutchinson_trace: n_probes must be >= 1");
  std::vector<double> quad(static_cast<std::size_t>(probes));
  const double scale = std::sqrt(static_cast<double>(op.dim()));
  parallel_for(quad.size(), [&](std::size_t i) {
    const Vector v = scale * random_unit_vector(op.dim(), derive_seed(seed, i), SeedKind::Rademacher);
    quad[i] = v.dot(op(v));
  });
  return std::accumulate(quad.begin(), quad.end(), 0.0) / static_cast<double>(probes);
}

Eigenpair extremal_eigenpair(const LinearOperator& op, End end, Index max_steps, std::uint64_t seed, double tol) {
  require(max_steps >= 1, ErrorCode::Domain, "extremal_eigenpair: max_steps must be >= 1");
  const Index cap = std::min(max_steps, op.dim());
  Krylov krylov(op, random_unit_vector(op.dim(), seed), cap, 1e-12);

  Eigenpair best;
  auto evaluate = [&] {
    const Index k = krylov.size();
    std::vector<double> betas(krylov.betas().begin(), krylov.betas().begin() + (k - 1));
    const auto eig = tridiagonal_eigen(krylov.alphas(), betas);
    const Index pick = end == End::Top ? k - 1 : 0;
    best.value = eig.values(pick);
    best.residual = krylov.last_beta() * std::abs(eig.vectors(k - 1, pick));
    best.steps = k;
    best.vector = krylov.basis() * eig.vectors.col(pick);
    return best.residual <= tol * std::max(std::abs(best.value), 1e-300);
  };

  constexpr Index kCheckEvery = 5;
  for (;;) {
    const bool more = krylov.step();
    const Index k = krylov.size();
    if (!more || k % kCheckEvery == 0) {
      if (evaluate() || !more) break;
    }
  }
  best.vector.normalize();
  return best;
}

double hessian_variance(Index count, const std::function<LinearOperator(Index)>& sample_op, const Vector& v,
                        bool normalize) {
  require(count >= 1, ErrorCode::Domain, "hessian_variance: empty operator stream");
  require(std::abs(v.norm() - 1.0) < 1e-8, ErrorCode::Domain, "hessian_variance: v must be a unit vector");

  const auto n = static_cast<std::size_t>(count);
  std::vector<double> squares(n), quads(n);
  parallel_for(n, [&](std::size_t i) {
    const auto op = sample_op(static_cast<Index>(i));
    require(op.dim() == v.size(), ErrorCode::Domain, "hessian_variance: operator dimension mismatch");
    const Vector hv = op(v);
    squares[i] = hv.squaredNorm();
    quads[i] = v.dot(hv);
  });

  const double sum_squares = std::accumulate(squares.begin(), squares.end(), 0.0);
  const double mean_quad = std::accumulate(quads.begin(), quads.end(), 0.0) / static_cast<double>(count);
  const double first = normalize ? sum_squares / static_cast<double>(count) : sum_squares;
  return first - mean_quad * mean_quad;
}

double hessian_variance(std::span<const LinearOperator> sample_ops, const Vector& v, bool normalize) {
  return hessian_variance(
      static_cast<Index>(sample_ops.size()), [&](Index i) { return sample_ops[i]; }, v, normalize);
}

double per_element_variance(double variance, std::int64_t params) {
  require(params > 0, ErrorCode::Domain, "per_element_variance requires P > 0");
  return std::max(0.0, variance) / static_cast<double>(params);
}

Degeneracy degeneracy_estimate(const RitzSpectrum& spectrum, DegeneracyMode mode) {
  require(spectrum.size() >= 1, ErrorCode::Domain, "degeneracy_estimate: empty spectrum");
  std::vector<std::size_t> order(spectrum.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(spectrum.nodes[a]) < std::abs(spectrum.nodes[b]);
  });

  const std::size_t first = order[0];
  if (mode == DegeneracyMode::NearestOrigin || spectrum.size() == 1)
    return {spectrum.weights[first], spectrum.nodes[first]};

  const std::size_t second = order[1];
  const double mass = spectrum.weights[first] + spectrum.weights[second];
  const double weighted = spectrum.weights[first] * spectrum.nodes[first] +
                          spectrum.weights[second] * spectrum.nodes[second];
  const double value = mass > 0.0 ? weighted / mass : 0.5 * (spectrum.nodes[first] + spectrum.nodes[second]);
  return {mass, value};
}

}  // namespace hesslab::lanczos
