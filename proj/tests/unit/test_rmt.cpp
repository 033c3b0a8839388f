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
#include <numbers>
#include <random>

#include <doctest.h>

#include "hesslab/rmt.hpp"
#include "../support/oracles.hpp"

using namespace hesslab;
using namespace hesslab::rmt;
using doctest::Approx;

TEST_CASE("effective batch") {
  CHECK(effective_batch(128, 50000) == Approx(128.0 / (1.0 - 128.0 / 50000.0)).epsilon(1e-15));
  CHECK(effective_batch(128, 50000) == Approx(128.3285).epsilon(1e-6));
  CHECK(std::isinf(effective_batch(7, 7)));
  CHECK(effective_batch(1, 2) == 2.0);
  CHECK_THROWS_AS(effective_batch(3, 2), Error);
  CHECK_THROWS_AS(effective_batch(0, 2), Error);

  const auto ns = NoiseScale::make(1000, 10, 10, 1.0);
  CHECK(ns.noiseless());
  CHECK(ns.q() == 0.0);
  const auto ns2 = NoiseScale::make(1000, 100, 1000, 1.0);
  CHECK(ns2.q() == Approx(1000.0 * (1.0 / 100 - 1.0 / 1000)).epsilon(1e-14));
}

TEST_CASE("semicircle density") {
  CHECK(semicircle_density(0.0, 1.0) == Approx(1.0 / std::numbers::pi).epsilon(1e-15));
  CHECK(semicircle_density(2.5, 1.0) == 0.0);
  CHECK_THROWS_AS(semicircle_density(0.0, 0.0), Error);
  for (double sigma : {0.5, 1.0, 3.0}) {
    const double mass = oracle::integrate([&](double x) { return semicircle_density(x, sigma); }, -2 * sigma,
                                          2 * sigma, 1e-13);
    CHECK(mass == Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("semicircle Stieltjes transform") {
  CHECK(semicircle_stieltjes({3.0, 0.0}, 1.0).real() == Approx((3.0 - std::sqrt(5.0)) / 2.0).epsilon(1e-14));
  CHECK(semicircle_stieltjes({-3.0, 0.0}, 1.0).real() == Approx(-(3.0 - std::sqrt(5.0)) / 2.0).epsilon(1e-14));
  const std::complex<double> far(1e6, 0.0);
  CHECK((far * semicircle_stieltjes(far, 1.0)).real() == Approx(1.0).epsilon(1e-10));
  CHECK_THROWS_AS(semicircle_stieltjes({1.0, 0.0}, 1.0), Error);

  // The density is recovered from the boundary value, with S(z) = int rho(t) / (z - t).
  for (double x : {-1.7, -0.4, 0.0, 0.9, 1.95}) {
    const auto s = semicircle_stieltjes({x, 1e-6}, 1.0);
    CHECK(-s.imag() / std::numbers::pi == Approx(semicircle_density(x, 1.0)).epsilon(1e-4).scale(1.0));
  }

  // Against a direct quadrature of the defining integral off the real line.
  const std::complex<double> z(0.7, 0.9);
  const double re = oracle::integrate([&](double t) { return (semicircle_density(t, 1.0) / (z - t)).real(); }, -2, 2, 1e-12);
  const double im = oracle::integrate([&](double t) { return (semicircle_density(t, 1.0) / (z - t)).imag(); }, -2, 2, 1e-12);
  CHECK(semicircle_stieltjes(z, 1.0).real() == Approx(re).epsilon(1e-7));
  CHECK(semicircle_stieltjes(z, 1.0).imag() == Approx(im).epsilon(1e-7));
  CHECK(semicircle_r_transform(0.3, 2.0) == Approx(1.2));
}

TEST_CASE("wigner spike forward law") {
  const auto a = wigner_spike(3.0, 0.5, 1.0);
  CHECK(a.lambda_prime == Approx(3.0 + 0.5 / 3.0).epsilon(1e-15));
  CHECK(a.lambda_prime == Approx(3.1667).epsilon(1e-4));
  CHECK(a.overlap_sq == Approx(1.0 - 0.5 / 9.0).epsilon(1e-15));
  CHECK(a.regime == Regime::Separated);

  const auto b = wigner_spike(0.5, 1.0, 1.0);
  CHECK(b.lambda_prime == 2.0);
  CHECK(b.overlap_sq == 0.0);
  CHECK(b.regime == Regime::BulkAbsorbed);

  const auto bottom = wigner_spike(-3.0, 0.5, 1.0, Tail::Bottom);
  CHECK(bottom.lambda_prime == Approx(-3.0 - 0.5 / 3.0));
  CHECK(bottom.regime == Regime::Separated);
  CHECK(wigner_spike(-0.2, 0.5, 1.0, Tail::Bottom).lambda_prime == Approx(-2.0 * std::sqrt(0.5)));

  // Continuity and tie-breaking exactly at the threshold.
  const double q = 0.64, s2 = 2.0, thr = std::sqrt(q * s2);
  const auto at = wigner_spike(thr, q, s2);
  CHECK(at.regime == Regime::BulkAbsorbed);
  CHECK(at.lambda_prime == Approx(2.0 * thr).epsilon(1e-15));
  CHECK(wigner_spike(thr * (1 + 1e-12), q, s2).lambda_prime == Approx(2.0 * thr).epsilon(1e-9));

  // B = N maps to the noiseless prediction.
  const auto nl = wigner_spike(4.0, NoiseScale::make(100, 50, 50, 3.0));
  CHECK(nl.lambda_prime == 4.0);
  CHECK(nl.overlap_sq == 1.0);
}

TEST_CASE("wigner spike properties") {
  // Strictly decreasing in the effective batch, limits in s2 and lambda.
  double prev = std::numeric_limits<double>::infinity();
  for (std::int64_t b : {10, 20, 50, 100, 200, 500}) {
    const auto p = wigner_spike(5.0, NoiseScale::make(1000, b, 100000, 0.01));
    REQUIRE(p.regime == Regime::Separated);
    CHECK(p.lambda_prime < prev);
    prev = p.lambda_prime;
  }
  CHECK(wigner_spike(2.0, 0.5, 1e-14).lambda_prime == Approx(2.0).epsilon(1e-12));
  CHECK(wigner_spike(2.0, 0.5, 1e-14).overlap_sq == Approx(1.0).epsilon(1e-12));
  CHECK(wigner_spike(1e9, 0.5, 1.0).lambda_prime / 1e9 == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("wigner inversion round trip") {
  CHECK(invert_spike(wigner_spike(3.0, 0.5, 1.0).lambda_prime, WignerLaw{std::sqrt(0.5)}) ==
        Approx(3.0).epsilon(1e-12));
  CHECK_THROWS_AS(invert_spike(2.0 * std::sqrt(0.5), WignerLaw{std::sqrt(0.5)}), Error);
  try {
    invert_spike(1.0, WignerLaw{1.0});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotInvertible);
  }

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> q_dist(0.05, 2.0), u(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double q = q_dist(rng), s2 = 1.0;
    const double thr = std::sqrt(q * s2);
    const double lambda = thr + (10.0 - thr) * (1e-3 + 0.999 * u(rng));
    const double exact = invert_spike(wigner_spike(lambda, q, s2).lambda_prime, WignerLaw{thr});
    worst = std::max(worst, std::abs(exact - lambda));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("marchenko-pastur density") {
  CHECK(mp_density(2.0, 1.0, 1.0) == Approx(1.0 / (2.0 * std::numbers::pi)).epsilon(1e-14));
  CHECK(mp_density(5.0, 1.0, 1.0) == 0.0);
  CHECK(mp_density(0.0, 1.0, 0.5) == 0.0);
  for (double beta : {0.1, 0.5, 1.0}) {
    for (double sigma2 : {0.5, 2.0}) {
      const auto [lo, hi] = support(MarchenkoPasturLaw{sigma2, beta});
      const double mass = oracle::integrate([&](double y) { return mp_density(y, sigma2, beta); }, lo, hi, 1e-12);
      CHECK(mass == Approx(1.0).epsilon(1e-6));
    }
  }
  // Mean of the law is sigma2.
  const auto [lo, hi] = support(MarchenkoPasturLaw{1.5, 0.3});
  CHECK(oracle::integrate([](double y) { return y * mp_density(y, 1.5, 0.3); }, lo, hi, 1e-12) ==
        Approx(1.5).epsilon(1e-6));
}

TEST_CASE("marchenko-pastur Stieltjes transform") {
  const double sigma2 = 1.3, beta = 0.4;
  const auto [lo, hi] = support(MarchenkoPasturLaw{sigma2, beta});
  for (double x : {hi + 0.5, hi + 3.0, 20.0}) {
    const double ref = oracle::integrate([&](double t) { return mp_density(t, sigma2, beta) / (x - t); }, lo, hi, 1e-13);
    CHECK(mp_stieltjes({x, 0.0}, sigma2, beta).real() == Approx(ref).epsilon(1e-7));
  }
  for (double x : {lo + 0.1, 0.5 * (lo + hi), hi - 0.1}) {
    const auto s = mp_stieltjes({x, 1e-7}, sigma2, beta);
    CHECK(-s.imag() / std::numbers::pi == Approx(mp_density(x, sigma2, beta)).epsilon(1e-4).scale(1.0));
  }
  CHECK_THROWS_AS(mp_stieltjes({0.5 * (lo + hi), 0.0}, sigma2, beta), Error);
}

TEST_CASE("marchenko-pastur spike closed form") {
  const auto p = mp_spike(5.0, 0.5, 1.0);
  CHECK(p.lambda_prime == Approx(5.5 / 0.9).epsilon(1e-15));
  CHECK(p.lambda_prime == Approx(6.1111).epsilon(1e-4));
  CHECK(p.regime == Regime::Separated);
  CHECK(p.overlap_sq > 0.0);
  CHECK(p.overlap_sq < 1.0);

  CHECK(mp_spike(5.0, 0.5, 0.0).lambda_prime == 5.0);
  const auto absorbed = mp_spike(1.2, 0.5, 1.0);
  CHECK(absorbed.regime == Regime::BulkAbsorbed);
  CHECK(absorbed.lambda_prime == Approx(3.0));
  CHECK(mp_spike(4.0, NoiseScale::make(10, 5, 5, 1.0)).lambda_prime == 4.0);

  // The separated branch is the root of G(lambda') = 1 / lambda for the
  // additive spike; check against a quadrature-evaluated Stieltjes transform.
  for (double lambda : {2.0, 5.0, 9.0}) {
    const double lp = mp_spike(lambda, 0.5, 1.0).lambda_prime;
    const auto [lo, hi] = support(MarchenkoPasturLaw{1.0, 0.5});
    const double g = oracle::integrate([&](double t) { return mp_density(t, 1.0, 0.5) / (lp - t); }, lo, hi, 1e-13);
    CHECK(g == Approx(1.0 / lambda).epsilon(1e-7));
  }
}

TEST_CASE("marchenko-pastur T-transform route") {
  const double raw = mp_t_transform_closed_form(0.2, 1.0, 0.5);
  CHECK(std::isfinite(raw));
  const auto t = mp_spike(5.0, 0.5, 1.0, MpRoute::TTransform);
  // T(1/lambda) lands below the bulk edge here, so the route reports absorption.
  CHECK(t.regime == Regime::BulkAbsorbed);
  CHECK(t.lambda_prime == Approx(support(MarchenkoPasturLaw{1.0, 0.5}).second));
}

TEST_CASE("marchenko-pastur inversion") {
  for (double lambda : {2.0, 5.0, 11.0}) {
    const double lp = mp_spike(lambda, 0.5, 1.0).lambda_prime;
    CHECK(invert_spike(lp, MarchenkoPasturLaw{1.0, 0.5}) == Approx(lambda).epsilon(1e-10));
  }
  CHECK_THROWS_AS(invert_spike(2.9, MarchenkoPasturLaw{1.0, 0.5}), Error);
}

TEST_CASE("spiked GOE sampler") {
  const double spikes[1] = {5.0};
  const auto pure = sample_spiked_goe(50, 0.0, spikes, 3);
  const auto ev = oracle::eigenvalues(pure.matrix);
  CHECK(ev(49) == Approx(5.0).epsilon(1e-12));
  CHECK(ev.head(49).cwiseAbs().maxCoeff() < 1e-12);

  const auto a = sample_spiked_goe(40, 1.0, spikes, 9);
  const auto b = sample_spiked_goe(40, 1.0, spikes, 9);
  CHECK(a.matrix == b.matrix);
  CHECK((a.matrix - a.matrix.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(std::abs((a.planted.transpose() * a.planted)(0, 0) - 1.0) < 1e-12);

  // Unspiked bulk edge and trace-power moments at P = 2000.
  const auto bulk = sample_spiked_goe(2000, 1.0, {}, 21);
  const auto e = oracle::eigenvalues(bulk.matrix);
  CHECK(e(1999) > 1.9);
  CHECK(e(1999) < 2.1);
  const double n = 2000.0;
  const double m2 = e.array().square().sum() / n;
  const double m4 = e.array().pow(4).sum() / n;
  CHECK(m2 == Approx(1.0).epsilon(0.02));
  CHECK(m4 == Approx(2.0).epsilon(0.02));
}

TEST_CASE("spiked Wishart sampler") {
  const double spikes[1] = {4.0};
  const auto pure = sample_spiked_wishart(30, 60, 0.0, spikes, 5);
  const auto ev = oracle::eigenvalues(pure.matrix);
  CHECK(ev(29) == Approx(4.0).epsilon(1e-12));
  CHECK(ev.head(29).cwiseAbs().maxCoeff() < 1e-12);

  const auto noisy = sample_spiked_wishart(1000, 2000, 1.0, {}, 8);
  const auto e = oracle::eigenvalues(noisy.matrix);
  CHECK(e.minCoeff() > -1e-10);
  const double edge = std::pow(1.0 + std::sqrt(0.5), 2);
  CHECK(e(999) == Approx(edge).epsilon(0.03));

  // The factor form applies the same matrix as the dense build.
  for (auto c : {WishartConstruction::Product, WishartConstruction::Additive}) {
    const auto f = sample_spiked_wishart_factor(40, 70, 0.8, spikes, 13, c);
    const Matrix d = f.dense();
    std::mt19937 rng(2);
    std::normal_distribution<double> normal;
    Vector v(40);
    for (auto& x : v) x = normal(rng);
    CHECK((f.apply(v) - d * v).norm() < 1e-12 * (d * v).norm());
  }
}

TEST_CASE("feed-forward rank bound") {
  FfnArch arch{1024, 10, {13416}, 16000000};
  const auto r = rank_bound_ffn(arch);
  CHECK(r.bound == 577600);
  CHECK(r.degeneracy_floor == Approx(0.9639).epsilon(1e-12));

  CHECK(rank_bound_ffn(FfnArch{1, 1, {0}, 100}).bound == 4);
  CHECK(rank_bound_ffn(FfnArch{10, 10, {100}, 1000}).degeneracy_floor == 0.0);
}
