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
#include <random>
#include <set>

#include <doctest.h>

#include "hesslab/nn.hpp"
#include "../support/oracles.hpp"

using namespace hesslab;
using namespace hesslab::nn;
using doctest::Approx;

namespace {

struct Toy {
  MlpSpec spec;
  Dataset data;
  Batch batch;
  ParamVector params;
  std::vector<int> widths;
  std::vector<std::vector<double>> rows;
};

Toy make_toy(std::vector<Index> widths, Loss loss, Index n, std::uint64_t seed) {
  Toy t;
  t.spec = MlpSpec{widths, loss};
  std::mt19937 rng(static_cast<unsigned>(seed));
  std::normal_distribution<double> normal;
  t.data.inputs = Matrix(n, widths.front());
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < widths.front(); ++j) t.data.inputs(i, j) = normal(rng);
  for (Index i = 0; i < n; ++i) t.data.labels.push_back(static_cast<int>(i % widths.back()));
  t.batch = full_batch(t.data);
  t.params = init_params(t.spec, seed + 100, 1.0);
  // Non-zero biases so every parameter is exercised.
  for (auto& x : t.params) x += 0.05 * normal(rng);
  for (auto w : widths) t.widths.push_back(static_cast<int>(w));
  for (Index i = 0; i < n; ++i) {
    std::vector<double> r(widths.front());
    for (Index j = 0; j < widths.front(); ++j) r[j] = t.data.inputs(i, j);
    t.rows.push_back(r);
  }
  return t;
}

double oracle_loss(const Toy& t, const Vector& w) {
  const std::vector<double> flat(w.data(), w.data() + w.size());
  return oracle::mlp_loss(flat, t.widths, t.rows, t.data.labels, t.spec.loss == Loss::SoftmaxCrossEntropy);
}

}  // namespace

TEST_CASE("parameter layout") {
  const MlpSpec spec{{4, 8, 3}, Loss::SoftmaxCrossEntropy};
  CHECK(spec.param_count() == 4 * 8 + 8 + 8 * 3 + 3);
  const auto off = layer_offsets(spec);
  REQUIRE(off.size() == 2u);
  CHECK(off[0].weight == 0);
  CHECK(off[0].bias == 32);
  CHECK(off[1].weight == 40);
  CHECK(off[1].bias == 64);
  CHECK_THROWS_AS(MlpSpec{{4}}.validate(), Error);

  const auto p = init_params(spec, 3, 1.0);
  CHECK(p.segment(off[0].bias, 8).cwiseAbs().maxCoeff() == 0.0);
  CHECK(p == init_params(spec, 3, 1.0));
}

TEST_CASE("loss and gradient against independent references") {
  for (auto loss : {Loss::SoftmaxCrossEntropy, Loss::SquaredError}) {
    const auto t = make_toy({4, 8, 3}, loss, 7, 5);
    CHECK(batch_loss(t.params, t.spec, t.batch) == Approx(oracle_loss(t, t.params)).epsilon(1e-12));
    const Vector g = gradient(t.params, t.spec, t.batch);
    const Vector fd = oracle::fd_gradient([&](const Vector& w) { return oracle_loss(t, w); }, t.params, 1e-6);
    CHECK((g - fd).cwiseAbs().maxCoeff() < 1e-7);
  }
}

TEST_CASE("hessian-vector products against hyper-dual Hessian") {
  for (auto loss : {Loss::SoftmaxCrossEntropy, Loss::SquaredError}) {
    const auto t = make_toy({4, 8, 3}, loss, 6, 11);
    const Matrix ref = oracle::mlp_hessian(t.params, t.widths, t.rows, t.data.labels,
                                           loss == Loss::SoftmaxCrossEntropy);
    const Matrix h = exact_hessian(t.params, t.spec, t.batch);
    CHECK((h - ref).cwiseAbs().maxCoeff() < 1e-10 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
    CHECK((h - h.transpose()).cwiseAbs().maxCoeff() < 1e-12);

    std::mt19937 rng(1);
    std::normal_distribution<double> normal;
    Vector v(t.params.size());
    for (auto& x : v) x = normal(rng);
    CHECK((hvp(t.params, t.spec, t.batch, v) - ref * v).norm() < 1e-10 * (ref * v).norm());
    const auto op = curvature_operator(t.params, t.spec, t.batch);
    CHECK((op(v) - ref * v).norm() < 1e-10 * (ref * v).norm());
  }
}

TEST_CASE("gauss-newton matrix") {
  const auto t = make_toy({4, 8, 3}, Loss::SoftmaxCrossEntropy, 5, 2);
  const Matrix g = exact_ggn(t.params, t.spec, t.batch);
  CHECK((g - g.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  const Vector ev = oracle::eigenvalues(g);
  CHECK(ev.minCoeff() > -1e-12);
  Index rank = 0;
  for (double x : ev) rank += x > 1e-10 * ev.maxCoeff();
  // Softmax output Hessians have rank d_y - 1 per sample.
  CHECK(rank <= 5 * 2);

  // GGN = J^T H_out J, built independently from a finite-difference Jacobian.
  const Index p = t.params.size();
  Matrix jac(3 * 5, p);
  for (Index j = 0; j < p; ++j) {
    Vector a = t.params, b = t.params;
    a(j) += 1e-6;
    b(j) -= 1e-6;
    const Matrix d = (forward(a, t.spec, t.batch.inputs) - forward(b, t.spec, t.batch.inputs)) / 2e-6;
    jac.col(j) = Vector::Map(d.data(), d.size());
  }
  const Matrix z = forward(t.params, t.spec, t.batch.inputs);
  Matrix hout = Matrix::Zero(15, 15);
  for (Index s = 0; s < 5; ++s) {
    const Vector pr = (z.col(s).array() - z.col(s).maxCoeff()).exp();
    const Vector q = pr / pr.sum();
    hout.block(3 * s, 3 * s, 3, 3) = (Matrix(q.asDiagonal()) - q * q.transpose()) / 5.0;
  }
  const Matrix ref = jac.transpose() * hout * jac;
  CHECK((g - ref).cwiseAbs().maxCoeff() < 1e-6);

  // For a linear least-squares model the Gauss-Newton matrix is the Hessian.
  const auto lin = make_toy({5, 3}, Loss::SquaredError, 9, 4);
  CHECK((exact_ggn(lin.params, lin.spec, lin.batch) - exact_hessian(lin.params, lin.spec, lin.batch))
            .cwiseAbs()
            .maxCoeff() < 1e-13);
  const auto gop = curvature_operator(t.params, t.spec, t.batch, Curvature::GaussNewton);
  const Vector v = Vector::Ones(p);
  CHECK((gop(v) - g * v).norm() < 1e-12 * (g * v).norm());
  CHECK((ggn_vp(t.params, t.spec, t.batch, v) - g * v).norm() < 1e-12 * (g * v).norm());
}

TEST_CASE("dense Hessian cap") {
  const auto t = make_toy({4, 8, 3}, Loss::SoftmaxCrossEntropy, 3, 1);
  CHECK_THROWS_AS(exact_hessian(t.params, t.spec, t.batch, 10), Error);
}

TEST_CASE("error rate") {
  const auto t = make_toy({2, 2}, Loss::SoftmaxCrossEntropy, 4, 1);
  ParamVector w = ParamVector::Zero(6);
  w(0) = 1;  // class 0 logit = x_0
  w(3) = 1;  // class 1 logit = x_1
  Batch b;
  b.inputs = Matrix(2, 4);
  b.inputs << 1, 0, 2, 0, 0, 1, 0, 3;
  b.labels = {0, 1, 1, 1};
  CHECK(error_rate(w, t.spec, b) == 0.25);
}

TEST_CASE("batch sampler partitions each epoch") {
  BatchSampler s(103, 10, 42);
  const auto epoch = s.next_epoch();
  CHECK(epoch.size() == 11u);
  CHECK(epoch.back().size() == 3u);
  std::set<Index> seen;
  for (const auto& b : epoch) seen.insert(b.begin(), b.end());
  CHECK(seen.size() == 103u);
  CHECK(*seen.begin() == 0);
  CHECK(*seen.rbegin() == 102);

  BatchSampler a(50, 7, 3), b(50, 7, 3);
  for (int i = 0; i < 20; ++i) CHECK(a.next_batch() == b.next_batch());
  BatchSampler c(50, 50, 3);
  const auto e1 = c.next_epoch(), e2 = c.next_epoch();
  CHECK(e1 != e2);
}

TEST_CASE("gaussian mixture") {
  const auto d = gaussian_mixture(4, 6, 25, 3.0, 9);
  CHECK(d.size() == 100);
  CHECK(d.input_dim() == 6);
  CHECK(d.classes() == 4);
  const auto again = gaussian_mixture(4, 6, 25, 3.0, 9);
  CHECK(d.inputs == again.inputs);

  // Class means sit near separation * unit vectors.
  const auto big = gaussian_mixture(3, 5, 4000, 4.0, 1);
  std::vector<Vector> means(3, Vector::Zero(5));
  for (Index i = 0; i < big.size(); ++i) means[big.labels[i]] += big.inputs.row(i).transpose() / 4000.0;
  for (const auto& m : means) CHECK(m.norm() == Approx(4.0).epsilon(0.03));
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) CHECK(std::abs(means[i].dot(means[j])) / 16.0 < 0.55);
}
