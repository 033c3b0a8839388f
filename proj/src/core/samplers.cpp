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

#include <cmath>
#include <random>

#include <Eigen/QR>

#include "hesslab/rmt.hpp"

namespace hesslab::rmt {

namespace {

Matrix gaussian_matrix(Index rows, Index cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = stddev * normal(rng);
  return m;
}

Matrix random_orthonormal(Index rows, Index cols, std::mt19937_64& rng) {
  if (cols == 0) return Matrix(rows, 0);
  Matrix g = gaussian_matrix(rows, cols, 1.0, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  return qr.householderQ() * Matrix::Identity(rows, cols);
}

}  // namespace

SpikedSample sample_spiked_goe(Index dim, double sigma, std::span<const double> spikes, std::uint64_t seed) {
  require(dim >= 2, ErrorCode::Domain, "sample_spiked_goe requires P >= 2");
  require(sigma >= 0.0, ErrorCode::Domain, "sample_spiked_goe requires sigma >= 0");
  require(static_cast<Index>(spikes.size()) < dim, ErrorCode::Domain, "sample_spiked_goe: too many spikes");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double off = sigma / std::sqrt(static_cast<double>(dim));
  const double diag = off * std::sqrt(2.0);

  SpikedSample out;
  out.matrix.resize(dim, dim);
  for (Index j = 0; j < dim; ++j) {
    for (Index i = 0; i < j; ++i) {
      const double x = off * normal(rng);
      out.matrix(i, j) = x;
      out.matrix(j, i) = x;
    }
    out.matrix(j, j) = diag * normal(rng);
  }

  const auto r = static_cast<Index>(spikes.size());
  out.planted = random_orthonormal(dim, r, rng);
  for (Index k = 0; k < r; ++k) {
    const auto u = out.planted.col(k);
    for (Index j = 0; j < dim; ++j) {
      for (Index i = 0; i <= j; ++i) {
        const double x = out.matrix(i, j) + spikes[k] * u(i) * u(j);
        out.matrix(i, j) = x;
        out.matrix(j, i) = x;
      }
    }
  }
  return out;
}

Vector SpikedWishartFactor::apply(const Vector& v) const {
  const Vector signal_proj = singular.asDiagonal() * (planted.transpose() * v);
  if (construction == WishartConstruction::Additive) {
    Vector out = noise * (noise.transpose() * v);
    out.noalias() += planted * (singular.asDiagonal() * signal_proj);
    return out;
  }
  // X^T v with X = E + U S V^T
  Vector y = noise.transpose() * v;
  y.noalias() += right * signal_proj;
  Vector out = noise * y;
  out.noalias() += planted * (singular.asDiagonal() * (right.transpose() * y));
  return out;
}

Matrix SpikedWishartFactor::dense() const {
  const Matrix j = planted * singular.asDiagonal() * right.transpose();
  if (construction == WishartConstruction::Additive) {
    Matrix out = noise * noise.transpose();
    out.noalias() += j * j.transpose();
    return out;
  }
  const Matrix x = noise + j;
  Matrix out = x * x.transpose();
  return 0.5 * (out + out.transpose());
}

SpikedWishartFactor sample_spiked_wishart_factor(Index dim, Index samples, double sigma,
                                                 std::span<const double> spikes, std::uint64_t seed,
                                                 WishartConstruction construction) {
  require(dim >= 2 && samples >= 1, ErrorCode::Domain, "sample_spiked_wishart requires P >= 2, n >= 1");
  require(sigma >= 0.0, ErrorCode::Domain, "sample_spiked_wishart requires sigma >= 0");
  const auto r = static_cast<Index>(spikes.size());
  require(r < dim && r <= samples, ErrorCode::Domain, "sample_spiked_wishart: too many spikes");

  std::mt19937_64 rng(seed);
  SpikedWishartFactor f;
  f.construction = construction;
  f.noise = gaussian_matrix(dim, samples, sigma / std::sqrt(static_cast<double>(samples)), rng);
  f.planted = random_orthonormal(dim, r, rng);
  f.right = random_orthonormal(samples, r, rng);
  f.singular.resize(r);
  for (Index k = 0; k < r; ++k) {
    require(spikes[k] >= 0.0, ErrorCode::Domain, "sample_spiked_wishart: spikes must be >= 0");
    f.singular(k) = std::sqrt(spikes[k]);
  }
  return f;
}

SpikedSample sample_spiked_wishart(Index dim, Index samples, double sigma, std::span<const double> spikes,
                                   std::uint64_t seed, WishartConstruction construction) {
  auto f = sample_spiked_wishart_factor(dim, samples, sigma, spikes, seed, construction);
  return {f.dense(), f.planted};
}

}  // namespace hesslab::rmt
