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

// Acceptance suite: one line per criterion, nonzero exit if any fails.
// Expected values are computed here from closed forms or independent
// references (dense eigensolvers, hyper-dual derivatives, finite
// differences, finite-population sampling formulas); the library supplies
// only the quantity under test.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hesslab/autolr.hpp"
#include "hesslab/lanczos.hpp"
#include "hesslab/nn.hpp"
#include "hesslab/parallel.hpp"
#include "hesslab/rmt.hpp"
#include "hesslab/scaling.hpp"
#include "hesslab/validate.hpp"
#include "../support/cli.hpp"
#include "../support/oracles.hpp"

using namespace hesslab;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// --- 1-3: spiked Wigner ------------------------------------------------------

Verdict wigner_location() {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v{true, ""};
  for (double q : {0.25, 0.5, 1.0}) {
    validate::WignerCell cell;
    cell.dim = 4000;
    cell.lambda = 3.0;
    cell.q = q;
    cell.s2 = 1.0;
    cell.trials = 20;
    cell.seed = 101;
    const auto r = validate::run_wigner_cell(cell);
    const double expect = 3.0 + q / 3.0;
    const double err = rel(r.top.mean, expect);
    v.pass = v.pass && err < 0.02;
    v.detail += fmt("q=%g mean=%.4f expect=%.4f err=%.2f%%; ", q, r.top.mean, expect, 100 * err);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  v.pass = v.pass && secs < 120.0;
  v.detail += fmt("runtime %.1fs (limit 120s)", secs);
  return v;
}

Verdict wigner_absorbed() {
  Verdict v{true, ""};
  for (double q : {0.25, 0.5, 1.0}) {
    validate::WignerCell cell;
    cell.dim = 4000;
    cell.lambda = 0.5 * std::sqrt(q);
    cell.q = q;
    cell.s2 = 1.0;
    cell.trials = 10;
    cell.seed = 202;
    const auto r = validate::run_wigner_cell(cell);
    const double expect = 2.0 * std::sqrt(q);
    const double err = rel(r.top.mean, expect);
    v.pass = v.pass && err < 0.02;
    v.detail += fmt("q=%g mean=%.4f edge=%.4f err=%.2f%%; ", q, r.top.mean, expect, 100 * err);
  }
  v.detail += "P=4000, 10 draws per q";
  return v;
}

Verdict wigner_overlap() {
  validate::WignerCell cell;
  cell.dim = 4000;
  cell.lambda = 3.0;
  cell.q = 0.5;
  cell.s2 = 1.0;
  cell.trials = 20;
  cell.seed = 303;
  const auto r = validate::run_wigner_cell(cell);
  const double expect = 1.0 - 0.5 / 9.0;
  const double gap = std::abs(r.overlap.mean - expect);
  return {gap < 0.05, fmt("mean overlap^2=%.4f (sd %.4f) expect=%.4f |diff|=%.4f (limit 0.05)", r.overlap.mean,
                          r.overlap.std, expect, gap)};
}

// --- 4: spiked Wishart -------------------------------------------------------

Verdict mp_spike() {
  validate::MpCell cell;
  cell.dim = 2000;
  cell.beta = 0.5;
  cell.lambda = 5.0;
  cell.sigma2 = 1.0;
  cell.trials = 20;
  cell.seed = 404;
  const auto r = validate::run_mp_cell(cell);
  const bool closed = r.selected == rmt::MpRoute::ClosedForm;
  const double err = closed ? r.closed_form_rel_error : r.t_transform_rel_error;

  // Independent check of the closed form: the additive construction J J^T + E E^T
  // must put the outlier at the root of G(x) = 1 / lambda, with G integrated here.
  cell.construction = rmt::WishartConstruction::Additive;
  cell.seed = 405;
  const auto add = validate::run_mp_cell(cell);
  const double lo = std::pow(1 - std::sqrt(0.5), 2), hi = std::pow(1 + std::sqrt(0.5), 2);
  auto g = [&](double x) {
    return oracle::integrate(
        [&](double t) { return std::sqrt(std::max(0.0, (hi - t) * (t - lo))) / (2 * M_PI * 0.5 * t) / (x - t); }, lo,
        hi, 1e-12);
  };
  double a = hi + 1e-6, b = 100.0;
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (a + b);
    (g(m) > 0.2 ? a : b) = m;
  }
  const double root = 0.5 * (a + b);

  return {err < 0.05,
          fmt("product (J+E)(J+E)^T mean=%.4f (sd %.4f); selected=%s %.4f err=%.2f%%; other=%s %.4f err=%.2f%%; "
              "additive J J^T + E E^T mean=%.4f vs G-root %.4f vs closed form %.4f",
              r.top.mean, r.top.std, closed ? "closed-form" : "t-transform", closed ? r.closed_form : r.t_transform,
              100 * err, closed ? "t-transform" : "closed-form", closed ? r.t_transform : r.closed_form,
              100 * (closed ? r.t_transform_rel_error : r.closed_form_rel_error), add.top.mean, root,
              add.closed_form)};
}

// --- 5-6: Lanczos ------------------------------------------------------------

Verdict lanczos_exactness() {
  const Eigen::MatrixXd a = oracle::random_symmetric(50, 55);
  const Eigen::VectorXd ev = oracle::eigenvalues(a);
  const auto op = lanczos::LinearOperator::from_dense(a);
  const auto full = lanczos::ritz_quadrature(lanczos::lanczos_decompose(op, lanczos::LanczosOptions{.steps = 50, .seed = 5}));
  double worst = 0.0;
  if (full.size() != 50) return {false, fmt("only %zu Ritz values at m=P", full.size())};
  for (int i = 0; i < 50; ++i) worst = std::max(worst, std::abs(full.nodes[i] - ev(i)));

  // Moments scaled by ||A||^k so the tolerance is independent of the matrix scale.
  const Vector start = lanczos::random_unit_vector(50, 9);
  const auto small = lanczos::ritz_quadrature(lanczos::lanczos_decompose(op, start, 4));
  const double norm = ev.cwiseAbs().maxCoeff();
  double worst_moment = 0.0;
  Vector w = start;
  for (int k = 0; k <= 7; ++k) {
    worst_moment = std::max(worst_moment, std::abs(small.moment(k) - start.dot(w)) / std::pow(norm, k));
    w = a * w;
  }
  return {worst < 1e-8 && worst_moment < 1e-8,
          fmt("max |ritz - eig| = %.2e; max moment error (k<=7, m=4, scaled by ||A||^k) = %.2e", worst, worst_moment)};
}

Verdict slq_moments() {
  const auto goe = rmt::sample_spiked_goe(2000, 1.0, {}, 606);
  const auto op = lanczos::LinearOperator::from_dense(goe.matrix);
  const auto s = lanczos::slq_density(op, lanczos::SlqOptions{.steps = 100, .vectors = 64, .seed = 7});
  const double expect[5] = {1.0, 0.0, 1.0, 0.0, 2.0};
  bool ok = true;
  std::string detail;
  for (int k = 1; k <= 4; ++k) {
    const double m = s.moment(k);
    // Odd moments vanish; measure them against the unit scale of the law.
    const double err = expect[k] != 0.0 ? rel(m, expect[k]) : std::abs(m);
    ok = ok && err < 0.02;
    detail += fmt("m%d=%.4f (expect %g, err %.2f%%); ", k, m, expect[k], 100 * err);
  }
  return {ok, detail + "64 Rademacher probes"};
}

// --- 7-9: network curvature --------------------------------------------------

struct Toy {
  nn::MlpSpec spec;
  nn::Dataset data;
  nn::Batch batch;
  nn::ParamVector params;
  std::vector<int> widths;
  std::vector<std::vector<double>> rows;
};

Toy toy(std::vector<Index> widths, nn::Loss loss, int classes, Index per_class, std::uint64_t seed) {
  Toy t;
  t.spec = {widths, loss};
  t.data = nn::gaussian_mixture(classes, widths.front(), per_class, 2.0, seed);
  t.batch = nn::full_batch(t.data);
  t.params = nn::init_params(t.spec, seed + 1);
  std::mt19937 rng(static_cast<unsigned>(seed));
  std::normal_distribution<double> normal;
  for (auto& x : t.params) x += 0.1 * normal(rng);
  for (auto w : widths) t.widths.push_back(static_cast<int>(w));
  for (Index i = 0; i < t.data.size(); ++i) {
    const Vector r = t.data.inputs.row(i);
    t.rows.emplace_back(r.data(), r.data() + r.size());
  }
  return t;
}

Verdict hvp_correctness() {
  const auto t = toy({4, 8, 3}, nn::Loss::SoftmaxCrossEntropy, 3, 3, 77);
  const Matrix ref = oracle::mlp_hessian(t.params, t.widths, t.rows, t.data.labels, true);
  double worst = 0.0;
  for (Index j = 0; j < t.params.size(); ++j) {
    const Vector col = nn::hvp(t.params, t.spec, t.batch, Vector::Unit(t.params.size(), j));
    worst = std::max(worst, (col - ref.col(j)).norm() / std::max(ref.col(j).norm(), 1e-300));
  }
  std::mt19937 rng(3);
  std::normal_distribution<double> normal;
  Vector v(t.params.size());
  for (auto& x : v) x = normal(rng);
  const double dir = (nn::hvp(t.params, t.spec, t.batch, v) - ref * v).norm() / (ref * v).norm();

  auto f = [&](const Vector& w) {
    return oracle::mlp_loss(std::vector<double>(w.data(), w.data() + w.size()), t.widths, t.rows, t.data.labels, true);
  };
  const Vector fd = oracle::fd_gradient(f, t.params, 1e-5);
  const double grad = (nn::gradient(t.params, t.spec, t.batch) - fd).norm() / fd.norm();
  return {worst < 1e-8 && dir < 1e-8 && grad < 1e-5,
          fmt("max column rel err vs hyper-dual Hessian %.2e; random direction %.2e; gradient vs central FD %.2e", worst,
              dir, grad)};
}

Verdict ggn_rank() {
  bool ok = true;
  std::string detail;
  for (auto loss : {nn::Loss::SquaredError, nn::Loss::SoftmaxCrossEntropy}) {
    const auto t = toy({5, 6, 3}, loss, 2, 2, 88);  // B = 4, d_y = 3
    const Matrix g = nn::exact_ggn(t.params, t.spec, t.batch);
    const Vector ev = oracle::eigenvalues(g);
    Index rank = 0;
    for (double x : ev) rank += std::abs(x) > 1e-8;
    ok = ok && rank <= 12;
    detail += fmt("%s: %ld nonzero of P=%ld; ", loss == nn::Loss::SquaredError ? "squared error" : "cross-entropy",
                  static_cast<long>(rank), static_cast<long>(g.rows()));
  }
  return {ok, detail + "bound B*d_y = 12"};
}

Verdict variance_scaling() {
  const nn::MlpSpec spec{{10, 12, 5}, nn::Loss::SoftmaxCrossEntropy};
  const auto data = nn::gaussian_mixture(5, 10, 400, 2.0, 909);
  const Index n = data.size(), p = spec.param_count();
  const auto params = nn::init_params(spec, 910);
  const Matrix hbar = nn::exact_hessian(params, spec, nn::full_batch(data));

  // Population element variance from every per-sample Hessian.
  std::vector<double> dev(static_cast<std::size_t>(n));
  parallel_for(dev.size(), [&](std::size_t i) {
    const Index idx[1] = {static_cast<Index>(i)};
    dev[i] = (nn::exact_hessian(params, spec, nn::make_batch(data, idx)) - hbar).squaredNorm();
  });
  double pop = 0.0;
  for (double d : dev) pop += d;
  pop /= static_cast<double>(n);

  bool ok = true;
  std::string detail = fmt("P=%ld N=%ld; ", static_cast<long>(p), static_cast<long>(n));
  for (Index b : {10, 20, 40}) {
    nn::BatchSampler sampler(n, b, 911 + b);
    std::vector<std::vector<Index>> batches;
    while (batches.size() < 200) batches.push_back(sampler.next_batch());
    std::vector<double> sq(batches.size());
    parallel_for(batches.size(), [&](std::size_t k) {
      sq[k] = (nn::exact_hessian(params, spec, nn::make_batch(data, batches[k])) - hbar).squaredNorm();
    });
    double measured = 0.0;
    for (double x : sq) measured += x;
    measured /= static_cast<double>(sq.size());
    // Without-replacement sampling: Var(mean) = (1/B - 1/N) * N / (N - 1) * population variance.
    const double bb = static_cast<double>(b), nn_ = static_cast<double>(n);
    const double expect = (1.0 / bb - 1.0 / nn_) * nn_ / (nn_ - 1.0) * pop;
    const double ratio = measured / expect;
    ok = ok && std::abs(ratio - 1.0) < 0.15;
    detail += fmt("B=%ld measured/predicted=%.3f; ", static_cast<long>(b), ratio);
  }
  return {ok, detail + "200 batches per B"};
}

// --- 10: batch outlier prediction ------------------------------------------

Verdict batch_lambda() {
  const nn::MlpSpec spec{{10, 16, 3}, nn::Loss::SoftmaxCrossEntropy};
  const auto data = nn::gaussian_mixture(3, 10, 500, 3.0, 1010);
  const autolr::MlpObjective objective(spec, data, nn::Dataset{});
  autolr::RunConfig config;
  config.optimizer.lr = 0.1;
  config.batch_size = 50;
  config.epochs = 10;
  config.seeds.batch = 1011;
  const auto history = autolr::train(config, objective, nn::init_params(spec, 1012));

  bool ok = true;
  std::string detail = fmt("P=%ld N=1500 after 10 SGD epochs; ", static_cast<long>(spec.param_count()));
  for (std::int64_t b : {25, 50, 100}) {
    scaling::CurvatureOptions options;
    options.batch = b;
    options.batches = 10;
    options.lanczos_steps = 100;
    options.variance_probes = 8;
    options.seed = 1013;
    const auto r = scaling::curvature_report(history.final_params, spec, data, options);
    const double gap = std::abs(r.lambda1_batch_predicted - r.lambda1_batch_measured_mean);
    ok = ok && gap <= r.lambda1_batch_measured_std;
    detail += fmt("B=%ld full=%.4f predicted=%.4f measured=%.4f+-%.4f; ", static_cast<long>(b), r.lambda1_full,
                  r.lambda1_batch_predicted, r.lambda1_batch_measured_mean, r.lambda1_batch_measured_std);
  }
  return {ok, detail};
}

// --- 11-14 -------------------------------------------------------------------

Verdict rank_bound() {
  const auto r = rmt::rank_bound_ffn(rmt::FfnArch{1024, 10, {13416}, 16000000});
  const double floor = 1.0 - 577600.0 / 16000000.0;
  return {r.bound == 577600 && std::abs(r.degeneracy_floor - 0.9639) < 5e-5 && std::abs(r.degeneracy_floor - floor) < 1e-15,
          fmt("bound=%ld floor=%.6f", static_cast<long>(r.bound), r.degeneracy_floor)};
}

double heavy_ball_rate(const autolr::Hyperparams& hp, const Vector& ev) {
  autolr::SgdMomentum s;
  s.lr = hp.lr;
  s.momentum = hp.momentum;
  Vector w = Vector::Ones(ev.size());
  double before = 0.0;
  const int steps = 300, tail = 100;
  for (int i = 0; i < steps; ++i) {
    if (i == steps - tail) before = w.norm();
    autolr::sgd_step(s, w, ev.cwiseProduct(w));
  }
  return std::pow(w.norm() / before, 1.0 / tail);
}

Verdict polyak() {
  const Vector ev = Vector::LinSpaced(10, 1.0, 4.0);
  const auto hp = autolr::polyak_hyperparams(4.0, 1.0);
  const double rate = heavy_ball_rate(hp, ev);
  const double root = heavy_ball_rate(autolr::polyak_hyperparams(4.0, 1.0, autolr::PolyakStep::RootSum), ev);
  return {std::abs(rate / (1.0 / 3.0) - 1.0) < 0.10,
          fmt("lr=%.4f momentum=%.4f rate=%.4f expect 1/3 (err %.1f%%); root-sum step variant rate=%.3g", hp.lr,
              hp.momentum, rate, 100 * std::abs(3 * rate - 1), root)};
}

struct StabilityRun {
  double lambda_prime = 0.0;
  autolr::TrainingHistory low, high;
};

// Predicts the batch outlier at the initial point and trains at 0.5x and 2.5x of 2 / lambda'.
StabilityRun stability_run(autolr::RunConfig config) {
  const auto objective = autolr::make_objective(config);
  const auto& mlp = dynamic_cast<const autolr::MlpObjective&>(*objective);
  const Vector w0 = autolr::initial_point(config, *objective);
  scaling::CurvatureOptions options;
  options.batch = config.batch_size;
  options.lanczos_steps = 100;
  options.variance_probes = 8;
  options.seed = 1305;
  StabilityRun out;
  out.lambda_prime = scaling::curvature_report(w0, mlp.spec(), mlp.train_data(), options).lambda1_batch_predicted;
  const double bound = scaling::max_lr_sgd(out.lambda_prime);
  config.optimizer.lr = 0.5 * bound;
  out.low = autolr::train(config, *objective, w0);
  config.optimizer.lr = 2.5 * bound;
  out.high = autolr::train(config, *objective, w0);
  return out;
}

std::string describe(const autolr::TrainingHistory& h) {
  if (h.outcome == autolr::Outcome::Diverged) return fmt("diverged at epoch %ld", static_cast<long>(h.diverged_epoch));
  return fmt("completed, final loss %.4g", h.epochs.back().train_loss);
}

Verdict sgd_stability() {
  autolr::RunConfig config;
  config.classes = 3;
  config.dim = 10;
  config.per_class = 200;
  config.batch_size = 32;
  config.epochs = 20;
  config.seeds = {1301, 1302, 1303, 1304};

  // Least-squares linear model: the loss is exactly quadratic in the weights.
  config.model = {{10, 3}, nn::Loss::SquaredError};
  const auto lin = stability_run(config);
  const bool ok = lin.low.outcome == autolr::Outcome::Completed && lin.high.outcome == autolr::Outcome::Diverged &&
                  lin.high.diverged_epoch <= 20;

  // Same protocol on a ReLU network, reported only.
  config.model = {{10, 16, 3}, nn::Loss::SquaredError};
  const auto relu = stability_run(config);
  return {ok, fmt("linear: lambda'=%.4f, 0.5x %s, 2.5x %s; relu [10,16,3] (reported only): lambda'=%.4f, 0.5x %s, "
                  "2.5x %s",
                  lin.lambda_prime, describe(lin.low).c_str(), describe(lin.high).c_str(), relu.lambda_prime,
                  describe(relu.low).c_str(), describe(relu.high).c_str())};
}

Verdict scaling_curve() {
  const double lambda = 10.0, s2 = 4.0;
  const std::int64_t p = 10000, n = 1000000000;
  const double threshold = scaling::threshold_batch(lambda, s2, p, static_cast<double>(n)).batch;
  std::vector<double> bs, lr;
  for (double b = 1.0; b <= 1e6; b *= std::pow(10.0, 0.125)) {
    bs.push_back(std::round(b));
    lr.push_back(scaling::max_lr_sgd(
        scaling::predict_batch_lambda(lambda, s2, p, static_cast<std::int64_t>(bs.back()), n).lambda_prime));
  }
  bool monotone = true;
  for (std::size_t i = 1; i < lr.size(); ++i) monotone = monotone && (bs[i] == bs[i - 1] || lr[i] > lr[i - 1]);
  double worst = 0.0;
  double early = 0.0;
  for (std::size_t i = 1; i < lr.size(); ++i) {
    if (bs[i] == bs[i - 1]) continue;
    const double slope = std::log(lr[i] / lr[i - 1]) / std::log(bs[i] / bs[i - 1]);
    if (bs[i - 1] > 4.0 * threshold) worst = std::max(worst, slope);
    if (bs[i] < 0.25 * threshold) early = std::max(early, slope);
  }
  return {monotone && worst < 0.2,
          fmt("B*=%.1f; monotone=%s; max log-log slope beyond 4B* = %.3f; max slope below B*/4 = %.3f", threshold,
              monotone ? "yes" : "no", worst, early)};
}

// --- 15: CLI determinism -----------------------------------------------------

struct CliCase {
  std::string name;
  std::string args;
};

Verdict cli_determinism() {
  const auto work = cli::scratch("determinism");
  {
    std::ofstream run(work / "run.json");
    run << R"({"model": {"layer_widths": [6, 8, 3]}, "data": {"classes": 3, "dim": 6, "per_class": 40},
               "schedule": {"kind": "autolr", "autolr": {"probe_period_epochs": 2, "lanczos_steps": 10}},
               "batch_size": 16, "epochs": 4, "swa_start_epoch": 2})";
  }
  const std::string run = "'" + (work / "run.json").string() + "'";
  const std::vector<CliCase> cases = {
      {"predict-spike", "predict-spike --lambda1 25 --s2 4 --p 10000 --n 10000 --batches 10,50,100,1000"},
      {"validate-rmt", "validate-rmt --p 200 --trials 3 --lambdas 3 --qs 0.5,1 --mp-beta 0.5 --mp-lambda 5 --dump-matrix --seed 5"},
      {"spectrum", "spectrum --classes 3 --dim 5 --per-class 30 --widths 5,8,3 --steps 30 --vectors 3 --seed 6"},
      {"variance", "variance --classes 3 --dim 5 --per-class 30 --widths 5,8,3 --batch-size 20 --batches 3 --steps 30 --seed 7"},
      {"scale-lr", "scale-lr --rule linear --base-lr 0.01 --base-batch 128 --batch 64,256,512,4096 --lambda1 10 --s2 4 --p 10000"},
      {"rank-bound", "rank-bound --d-x 1024 --d-y 10 --hidden 13416 --params 1.6e7"},
      {"train", "train --config " + run + " --seed 11"},
      {"lr-grid", "lr-grid --config " + run + " --lo 0.01 --hi 1 --points 3 --seed 12"},
  };

  bool ok = true;
  std::string detail;
  for (const auto& c : cases) {
    const auto a = cli::scratch("determinism/" + c.name + "_a");
    const auto b = cli::scratch("determinism/" + c.name + "_b");
    const int ca = cli::run(a, c.args);
    // The rerun uses the recorded manifest where there is one, and a different worker count.
    std::string rerun = c.args;
    if (fs::exists(a / "manifest.json")) {
      const auto m = nlohmann::json::parse(cli::slurp(a / "manifest.json"));
      std::ofstream(work / (c.name + "_manifest_config.json")) << m["config"].dump();
      rerun = c.name + " --config '" + (work / (c.name + "_manifest_config.json")).string() + "'";
      if (c.name == "lr-grid") rerun += " --lo 0.01 --hi 1 --points 3";
    }
    const int cb = cli::run(b, rerun, "HESSLAB_THREADS=3");
    std::size_t files = 0, same = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
      const auto name = entry.path().filename().string();
      if (name == "log.txt") continue;
      ++files;
      same += fs::exists(b / name) && cli::slurp(entry.path()) == cli::slurp(b / name);
    }
    const bool good = ca == 0 && cb == 0 && files > 0 && same == files;
    ok = ok && good;
    detail += fmt("%s %zu/%zu identical%s; ", c.name.c_str(), same, files, good ? "" : fmt(" (exit %d/%d)", ca, cb).c_str());
  }
  return {ok, detail};
}

}  // namespace

// Optional arguments select criteria by number; no arguments runs all of them.
int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"wigner outlier location", wigner_location},
      {"sub-threshold absorption", wigner_absorbed},
      {"outlier eigenvector overlap", wigner_overlap},
      {"marchenko-pastur outlier", mp_spike},
      {"lanczos exactness", lanczos_exactness},
      {"slq bulk moments", slq_moments},
      {"hessian-vector products", hvp_correctness},
      {"gauss-newton rank bound", ggn_rank},
      {"fluctuation variance scaling", variance_scaling},
      {"batch outlier prediction", batch_lambda},
      {"rank bound arithmetic", rank_bound},
      {"polyak heavy-ball rate", polyak},
      {"sgd stability law", sgd_stability},
      {"scaling curve shape", scaling_curve},
      {"cli determinism", cli_determinism},
  };
  std::vector<bool> selected(criteria.size(), argc == 1);
  for (int a = 1; a < argc; ++a) {
    const auto k = static_cast<std::size_t>(std::atoi(argv[a]));
    if (k >= 1 && k <= criteria.size()) selected[k - 1] = true;
  }
  int failed = 0, ran = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected[i]) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !v.pass;
    std::printf("[%s] %2zu %-30s %s (%.1fs)\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail.c_str(),
                secs);
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
