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

#include "hesslab/hesslab.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>

#include <json.hpp>

#include "hesslab/autolr.hpp"
#include "hesslab/io.hpp"
#include "hesslab/lanczos.hpp"
#include "hesslab/nn.hpp"
#include "hesslab/parallel.hpp"
#include "hesslab/rmt.hpp"
#include "hesslab/scaling.hpp"
#include "hesslab/validate.hpp"

using namespace hesslab;

struct hl_dataset {
  nn::Dataset data;
};
struct hl_model {
  nn::MlpSpec spec;
  nn::ParamVector params;
};
struct hl_spectrum {
  lanczos::RitzSpectrum spectrum;
};
struct hl_history {
  autolr::TrainingHistory history;
};
struct hl_grid {
  autolr::GridReport report;
};

namespace {

thread_local std::string last_error;

template <typename F>
hl_status guard(F&& body) {
  try {
    body();
    last_error.clear();
    return HL_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return static_cast<hl_status>(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return HL_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return HL_ERR_INTERNAL;
  }
}

template <typename T>
T& deref(T* p, const char* what) {
  if (!p) fail(ErrorCode::InvalidArgument, std::string(what) + " must not be null");
  return *p;
}

template <typename T>
T* nonnull(T* p, const char* what) {
  if (!p) fail(ErrorCode::InvalidArgument, std::string(what) + " must not be null");
  return p;
}

hl_spike to_c(const rmt::SpikePrediction& p) {
  return {p.lambda_prime, p.overlap_sq,
          p.regime == rmt::Regime::Separated ? HL_REGIME_SEPARATED : HL_REGIME_BULK_ABSORBED};
}

std::int64_t dataset_or_infinite(std::int64_t dataset) {
  return dataset <= 0 ? std::numeric_limits<std::int64_t>::max() : dataset;
}

rmt::LawKind to_law(hl_law law) {
  if (law == HL_LAW_WIGNER) return rmt::LawKind::Wigner;
  if (law == HL_LAW_MP) return rmt::LawKind::MarchenkoPastur;
  fail(ErrorCode::InvalidArgument, "unknown law");
}

nn::Curvature to_curvature(hl_curvature c) {
  if (c == HL_CURVATURE_HESSIAN) return nn::Curvature::Hessian;
  if (c == HL_CURVATURE_GGN) return nn::Curvature::GaussNewton;
  fail(ErrorCode::InvalidArgument, "unknown curvature kind");
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename Writer>
void write_file(const char* path, Writer&& writer, bool binary = false) {
  if (!path) fail(ErrorCode::InvalidArgument, "path must not be null");
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) fail(ErrorCode::Io, std::string("cannot write '") + path + "'");
  writer(out);
  out.flush();
  if (!out) fail(ErrorCode::Io, std::string("failed writing '") + path + "'");
}

std::ifstream open_input(const char* path, bool binary = false) {
  if (!path) fail(ErrorCode::InvalidArgument, "path must not be null");
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) fail(ErrorCode::Io, std::string("cannot open '") + path + "'");
  return in;
}

}  // namespace

extern "C" {

const char* hl_version(void) { return "0.1.0"; }
const char* hl_last_error(void) { return last_error.c_str(); }
void hl_string_free(char* s) { delete[] s; }

hl_status hl_effective_batch(int64_t batch, int64_t dataset, double* out) {
  return guard([&] {
    if (dataset <= 0) require(batch >= 1, ErrorCode::Domain, "effective_batch requires B >= 1");
    deref(out, "out") = dataset <= 0 ? static_cast<double>(batch) : rmt::effective_batch(batch, dataset);
  });
}

hl_status hl_wigner_spike(double lambda, double q, double s2, hl_tail tail, hl_spike* out) {
  return guard([&] {
    deref(out, "out") = to_c(rmt::wigner_spike(lambda, q, s2, tail == HL_TAIL_TOP ? rmt::Tail::Top : rmt::Tail::Bottom));
  });
}

hl_status hl_mp_spike(double lambda, double beta, double sigma2, hl_mp_route route, hl_spike* out) {
  return guard([&] {
    const auto r = route == HL_MP_CLOSED_FORM ? rmt::MpRoute::ClosedForm : rmt::MpRoute::TTransform;
    deref(out, "out") = to_c(rmt::mp_spike(lambda, beta, sigma2, r));
  });
}

hl_status hl_invert_spike(double observed, hl_law law, double sigma2, double beta, double* out) {
  return guard([&] {
    require(sigma2 >= 0.0, ErrorCode::Domain, "invert_spike requires sigma2 >= 0");
    rmt::SpectralLaw l = law == HL_LAW_WIGNER ? rmt::SpectralLaw(rmt::WignerLaw{std::sqrt(sigma2)})
                                              : rmt::SpectralLaw(rmt::MarchenkoPasturLaw{sigma2, beta});
    deref(out, "out") = rmt::invert_spike(observed, l);
  });
}

hl_status hl_semicircle_density(double lambda, double sigma, double* out) {
  return guard([&] { deref(out, "out") = rmt::semicircle_density(lambda, sigma); });
}

hl_status hl_mp_density(double y, double sigma2, double beta, double* out) {
  return guard([&] { deref(out, "out") = rmt::mp_density(y, sigma2, beta); });
}

hl_status hl_rank_bound(int64_t d_x, int64_t d_y, const int64_t* hidden, size_t layers, int64_t params,
                        int64_t* bound, double* degeneracy_floor) {
  return guard([&] {
    rmt::FfnArch arch;
    arch.d_x = d_x;
    arch.d_y = d_y;
    arch.params = params;
    if (layers > 0) arch.hidden_neurons.assign(nonnull(hidden, "hidden"), hidden + layers);
    const auto r = rmt::rank_bound_ffn(arch);
    deref(bound, "bound") = r.bound;
    deref(degeneracy_floor, "degeneracy_floor") = r.degeneracy_floor;
  });
}

hl_status hl_predict_batch_lambda(double lambda_full, double s2, int64_t params, int64_t batch, int64_t dataset,
                                  hl_law law, hl_spike* out) {
  return guard([&] {
    deref(out, "out") =
        to_c(scaling::predict_batch_lambda(lambda_full, s2, params, batch, dataset_or_infinite(dataset), to_law(law)));
  });
}

hl_status hl_scale_lr(hl_rule rule, double base_lr, int64_t base_batch, double threshold_batch, int64_t batch,
                      double* out) {
  return guard([&] {
    scaling::ScalingRule r;
    r.kind = rule == HL_RULE_LINEAR_SGD ? scaling::RuleKind::LinearSgd : scaling::RuleKind::SqrtAdaptive;
    r.base_lr = base_lr;
    r.base_batch = base_batch;
    if (threshold_batch > 0.0) r.threshold_batch = threshold_batch;
    deref(out, "out") = scaling::scale_lr(r, batch);
  });
}

hl_status hl_threshold_batch(double lambda_full, double s2, int64_t params, int64_t dataset, double* b_eff,
                             double* batch) {
  return guard([&] {
    const double n = dataset <= 0 ? rmt::kInfiniteBatch : static_cast<double>(dataset);
    const auto t = scaling::threshold_batch(lambda_full, s2, params, n);
    deref(b_eff, "b_eff") = t.b_eff;
    deref(batch, "batch") = t.batch;
  });
}

hl_status hl_max_lr_sgd(double lambda_batch, double* out) {
  return guard([&] { deref(out, "out") = scaling::max_lr_sgd(lambda_batch); });
}

hl_status hl_adaptive_max_lr(double kappa, double s2, int64_t params, double b_eff, double* out) {
  return guard([&] { deref(out, "out") = scaling::adaptive_max_lr(kappa, s2, params, b_eff); });
}

hl_status hl_validate_wigner_cell(int64_t dim, double lambda, double q, double s2, int64_t trials, uint64_t seed,
                                  double* predicted, double* top_mean, double* top_std, double* overlap_mean) {
  return guard([&] {
    validate::WignerCell cell;
    cell.dim = dim;
    cell.lambda = lambda;
    cell.q = q;
    cell.s2 = s2;
    cell.trials = trials;
    cell.seed = seed;
    const auto r = validate::run_wigner_cell(cell);
    deref(predicted, "predicted") = r.predicted.lambda_prime;
    deref(top_mean, "top_mean") = r.top.mean;
    deref(top_std, "top_std") = r.top.std;
    deref(overlap_mean, "overlap_mean") = r.overlap.mean;
  });
}

hl_status hl_validate_mp_cell(int64_t dim, double beta, double lambda, double sigma2, int64_t trials, uint64_t seed,
                              hl_wishart construction, double* closed_form, double* t_transform, double* top_mean,
                              double* top_std) {
  return guard([&] {
    validate::MpCell cell;
    cell.dim = dim;
    cell.beta = beta;
    cell.lambda = lambda;
    cell.sigma2 = sigma2;
    cell.trials = trials;
    cell.seed = seed;
    cell.construction =
        construction == HL_WISHART_PRODUCT ? rmt::WishartConstruction::Product : rmt::WishartConstruction::Additive;
    const auto r = validate::run_mp_cell(cell);
    deref(closed_form, "closed_form") = r.closed_form;
    deref(t_transform, "t_transform") = r.t_transform;
    deref(top_mean, "top_mean") = r.top.mean;
    deref(top_std, "top_std") = r.top.std;
  });
}

hl_status hl_sample_spiked_goe_csv(int64_t dim, double sigma, double lambda, uint64_t seed, const char* path) {
  return guard([&] {
    const double spikes[1] = {lambda};
    const auto sample = rmt::sample_spiked_goe(dim, sigma, spikes, seed);
    write_file(path, [&](std::ostream& out) { io::write_matrix_csv(out, sample.matrix); });
  });
}

hl_status hl_dataset_gmm(int classes, int64_t dim, int64_t per_class, double separation, uint64_t seed,
                         hl_dataset** out) {
  return guard([&] {
    auto d = std::make_unique<hl_dataset>();
    d->data = nn::gaussian_mixture(classes, dim, per_class, separation, seed);
    deref(out, "out") = d.release();
  });
}

hl_status hl_dataset_load_csv(const char* path, hl_dataset** out) {
  return guard([&] {
    auto in = open_input(path);
    auto d = std::make_unique<hl_dataset>();
    d->data = io::read_dataset_csv(in);
    deref(out, "out") = d.release();
  });
}

hl_status hl_dataset_save_csv(const hl_dataset* data, const char* path) {
  return guard([&] {
    const auto& d = deref(data, "data");
    write_file(path, [&](std::ostream& out) { io::write_dataset_csv(out, d.data); });
  });
}

hl_status hl_dataset_size(const hl_dataset* data, int64_t* rows, int64_t* dim) {
  return guard([&] {
    const auto& d = deref(data, "data");
    deref(rows, "rows") = d.data.size();
    deref(dim, "dim") = d.data.input_dim();
  });
}

void hl_dataset_free(hl_dataset* data) { delete data; }

hl_status hl_model_create(const int64_t* widths, size_t count, int loss, uint64_t seed, double init_scale,
                          hl_model** out) {
  return guard([&] {
    require(count >= 2, ErrorCode::InvalidArgument, "model needs at least two layer widths");
    auto m = std::make_unique<hl_model>();
    m->spec.layer_widths.assign(nonnull(widths, "widths"), widths + count);
    require(loss == 0 || loss == 1, ErrorCode::InvalidArgument, "loss must be 0 (cross-entropy) or 1 (squared error)");
    m->spec.loss = loss == 0 ? nn::Loss::SoftmaxCrossEntropy : nn::Loss::SquaredError;
    m->spec.validate();
    m->params = nn::init_params(m->spec, seed, init_scale);
    deref(out, "out") = m.release();
  });
}

hl_status hl_model_load(const char* spec_path, const char* params_path, hl_model** out) {
  return guard([&] {
    if (!spec_path) fail(ErrorCode::InvalidArgument, "spec path must not be null");
    auto m = std::make_unique<hl_model>();
    m->spec = io::spec_from_json(io::load_text(spec_path));
    auto in = open_input(params_path, true);
    m->params = io::read_params(in);
    if (m->params.size() != m->spec.param_count())
      fail(ErrorCode::Io, "parameter file length does not match the model spec");
    deref(out, "out") = m.release();
  });
}

hl_status hl_model_save(const hl_model* model, const char* spec_path, const char* params_path) {
  return guard([&] {
    const auto& m = deref(model, "model");
    if (!spec_path) fail(ErrorCode::InvalidArgument, "spec path must not be null");
    io::save_text(spec_path, io::spec_to_json(m.spec) + "\n");
    write_file(params_path, [&](std::ostream& o) { io::write_params(o, m.params); }, true);
  });
}

hl_status hl_model_param_count(const hl_model* model, int64_t* out) {
  return guard([&] { deref(out, "out") = deref(model, "model").params.size(); });
}

hl_status hl_model_set_params(hl_model* model, const double* params, size_t count) {
  return guard([&] {
    auto& m = deref(model, "model");
    require(static_cast<Index>(count) == m.params.size(), ErrorCode::InvalidArgument, "parameter count mismatch");
    m.params = Eigen::Map<const Vector>(nonnull(params, "params"), m.params.size());
  });
}

hl_status hl_model_get_params(const hl_model* model, double* params, size_t count) {
  return guard([&] {
    const auto& m = deref(model, "model");
    require(static_cast<Index>(count) == m.params.size(), ErrorCode::InvalidArgument, "parameter count mismatch");
    Eigen::Map<Vector>(nonnull(params, "params"), m.params.size()) = m.params;
  });
}

void hl_model_free(hl_model* model) { delete model; }

namespace {

nn::Batch pick_batch(const nn::Dataset& data, int64_t batch, uint64_t seed) {
  if (batch <= 0 || batch >= data.size()) return nn::full_batch(data);
  nn::BatchSampler sampler(data.size(), batch, seed);
  return nn::make_batch(data, sampler.next_batch());
}

}  // namespace

hl_status hl_slq(const hl_model* model, const hl_dataset* data, hl_curvature curvature, int64_t batch, int64_t steps,
                 int64_t vectors, uint64_t seed, hl_spectrum** out) {
  return guard([&] {
    const auto& m = deref(model, "model");
    const auto& d = deref(data, "data");
    const auto b = pick_batch(d.data, batch, derive_seed(seed, 1));
    const auto op = nn::curvature_operator(m.params, m.spec, b, to_curvature(curvature));
    lanczos::SlqOptions options;
    options.steps = steps;
    options.vectors = vectors;
    options.seed = derive_seed(seed, 2);
    auto s = std::make_unique<hl_spectrum>();
    s->spectrum = lanczos::slq_density(op, options);
    deref(out, "out") = s.release();
  });
}

hl_status hl_spectrum_size(const hl_spectrum* s, size_t* out) {
  return guard([&] { deref(out, "out") = deref(s, "spectrum").spectrum.size(); });
}

hl_status hl_spectrum_get(const hl_spectrum* s, double* nodes, double* weights, size_t count) {
  return guard([&] {
    const auto& sp = deref(s, "spectrum").spectrum;
    require(count == sp.size(), ErrorCode::InvalidArgument, "spectrum size mismatch");
    nonnull(nodes, "nodes");
    nonnull(weights, "weights");
    for (size_t i = 0; i < count; ++i) {
      nodes[i] = sp.nodes[i];
      weights[i] = sp.weights[i];
    }
  });
}

hl_status hl_spectrum_save_csv(const hl_spectrum* s, const char* path) {
  return guard([&] {
    const auto& sp = deref(s, "spectrum").spectrum;
    write_file(path, [&](std::ostream& out) { io::write_spectrum_csv(out, sp); });
  });
}

void hl_spectrum_free(hl_spectrum* s) { delete s; }

hl_status hl_hessian_variance(const hl_model* model, const hl_dataset* data, hl_curvature curvature, int64_t probes,
                              uint64_t seed, double* normalized, double* unnormalized, double* s2) {
  return guard([&] {
    const auto& m = deref(model, "model");
    const auto& d = deref(data, "data");
    require(probes >= 1, ErrorCode::Domain, "variance needs at least one probe");
    const auto kind = to_curvature(curvature);
    const Index n = d.data.size();
    std::vector<nn::Batch> samples;
    samples.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
      const Index idx[1] = {i};
      samples.push_back(nn::make_batch(d.data, idx));
    }
    auto sample_op = [&](Index i) { return nn::curvature_operator(m.params, m.spec, samples[i], kind); };
    double norm_sum = 0.0, raw_sum = 0.0;
    for (int64_t k = 0; k < probes; ++k) {
      const Vector v = lanczos::random_unit_vector(m.params.size(), derive_seed(seed, static_cast<uint64_t>(k)));
      norm_sum += lanczos::hessian_variance(n, sample_op, v, true);
      raw_sum += lanczos::hessian_variance(n, sample_op, v, false);
    }
    const double count = static_cast<double>(probes);
    deref(normalized, "normalized") = norm_sum / count;
    deref(unnormalized, "unnormalized") = raw_sum / count;
    deref(s2, "s2") = lanczos::per_element_variance(norm_sum / count, m.params.size());
  });
}

hl_status hl_curvature_report(const hl_model* model, const hl_dataset* data, hl_curvature curvature, hl_law law,
                              int64_t batch, int64_t batches, int64_t steps, int64_t probes, uint64_t seed,
                              char** json_out) {
  return guard([&] {
    const auto& m = deref(model, "model");
    const auto& d = deref(data, "data");
    scaling::CurvatureOptions options;
    options.batch = batch;
    options.batches = batches;
    options.lanczos_steps = steps;
    options.variance_probes = probes;
    options.curvature = to_curvature(curvature);
    options.law = to_law(law);
    options.seed = seed;
    const auto report = scaling::curvature_report(m.params, m.spec, d.data, options);
    deref(json_out, "json_out") = dup_string(report.to_json());
  });
}

hl_status hl_train(const char* config_json, hl_history** out) {
  return guard([&] {
    if (!config_json) fail(ErrorCode::InvalidArgument, "config must not be null");
    const auto config = autolr::RunConfig::from_json(config_json);
    auto h = std::make_unique<hl_history>();
    h->history = autolr::train(config);
    deref(out, "out") = h.release();
  });
}

hl_status hl_history_diverged(const hl_history* h, int* diverged, int64_t* epoch) {
  return guard([&] {
    const auto& hist = deref(h, "history").history;
    deref(diverged, "diverged") = hist.outcome == autolr::Outcome::Diverged ? 1 : 0;
    deref(epoch, "epoch") = hist.diverged_epoch;
  });
}

hl_status hl_history_save_csv(const hl_history* h, const char* path) {
  return guard([&] {
    const auto& hist = deref(h, "history").history;
    write_file(path, [&](std::ostream& out) { io::write_history_csv(out, hist); });
  });
}

hl_status hl_history_save_probes_csv(const hl_history* h, const char* path) {
  return guard([&] {
    const auto& hist = deref(h, "history").history;
    write_file(path, [&](std::ostream& out) { io::write_probes_csv(out, hist); });
  });
}

hl_status hl_history_save_adam_eta_csv(const hl_history* h, const char* path) {
  return guard([&] {
    const auto& hist = deref(h, "history").history;
    write_file(path, [&](std::ostream& out) {
      out << "index,eta\n";
      for (Index i = 0; i < hist.adam_eta.size(); ++i) out << i << ',' << io::format_double(hist.adam_eta(i)) << '\n';
    });
  });
}

hl_status hl_history_save_params(const hl_history* h, const char* path) {
  return guard([&] {
    const auto& hist = deref(h, "history").history;
    write_file(path, [&](std::ostream& out) { io::write_params(out, hist.final_params); }, true);
  });
}

hl_status hl_history_summary(const hl_history* h, char** json_out) {
  return guard([&] {
    const auto& hist = deref(h, "history").history;
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    nlohmann::json j;
    j["outcome"] = hist.outcome == autolr::Outcome::Completed ? "completed" : "diverged";
    j["diverged_epoch"] = hist.diverged_epoch;
    j["epochs_run"] = hist.epochs.size();
    if (!hist.epochs.empty()) {
      j["final_train_loss"] = num(hist.epochs.back().train_loss);
      j["final_train_err"] = num(hist.epochs.back().train_err);
      j["final_val_err"] = num(hist.epochs.back().val_err);
    }
    j["probes"] = hist.probes.size();
    if (hist.swa && hist.swa->count > 0) {
      j["swa_count"] = hist.swa->count;
      j["swa_train_loss"] = num(hist.swa_train_loss);
      j["swa_val_err"] = num(hist.swa_val_err);
    }
    deref(json_out, "json_out") = dup_string(j.dump(2));
  });
}

void hl_history_free(hl_history* h) { delete h; }

hl_status hl_lr_grid(const char* config_json, const double* grid, size_t count, hl_grid** out) {
  return guard([&] {
    if (!config_json) fail(ErrorCode::InvalidArgument, "config must not be null");
    require(count >= 1, ErrorCode::InvalidArgument, "grid must not be empty");
    const auto config = autolr::RunConfig::from_json(config_json);
    auto g = std::make_unique<hl_grid>();
    g->report = autolr::lr_grid_search(config, std::span<const double>(nonnull(grid, "grid"), count));
    deref(out, "out") = g.release();
  });
}

hl_status hl_grid_best(const hl_grid* g, double* best_lr) {
  return guard([&] { deref(best_lr, "best_lr") = autolr::best_stable_lr(deref(g, "grid").report); });
}

hl_status hl_grid_save_csv(const hl_grid* g, const char* path) {
  return guard([&] {
    const auto& r = deref(g, "grid").report;
    write_file(path, [&](std::ostream& out) { io::write_grid_csv(out, r); });
  });
}

void hl_grid_free(hl_grid* g) { delete g; }

hl_status hl_config_normalize(const char* config_json, char** json_out) {
  return guard([&] {
    if (!config_json) fail(ErrorCode::InvalidArgument, "config must not be null");
    deref(json_out, "json_out") = dup_string(autolr::RunConfig::from_json(config_json).to_json());
  });
}

}  // extern "C"
