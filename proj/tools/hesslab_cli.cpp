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

// hesslab command-line front end. Links only the C interface.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hesslab/hesslab.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Failure {
  int code;
  std::string message;
};

[[noreturn]] void usage(const std::string& message) { throw Failure{kExitUsage, message}; }

void check(hl_status status) {
  if (status == HL_OK) return;
  const int code = status == HL_ERR_DOMAIN || status == HL_ERR_INVALID_ARGUMENT ? kExitUsage : kExitFailure;
  throw Failure{code, hl_last_error()};
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream in(text);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    if (cell.empty()) continue;
    std::istringstream c(cell);
    T value{};
    if (!(c >> value) || !(c >> std::ws).eof()) usage(std::string("bad value '") + cell + "' in " + what);
    out.push_back(value);
  }
  if (out.empty()) usage(std::string(what) + " must list at least one value");
  return out;
}

// Output directory shared by every command.
struct Common {
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string config;

  void add(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Master random seed");
    cmd->add_option("--out-dir", out_dir, "Directory for output files");
    cmd->add_option("--config", config, "JSON config file; command-line flags take precedence");
  }
  fs::path dir(const char* fallback = ".") const {
    fs::path p = out_dir.empty() ? fs::path(fallback) : fs::path(out_dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw Failure{kExitFailure, "cannot create output directory '" + p.string() + "'"};
    return p;
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw Failure{kExitFailure, "cannot write '" + path.string() + "'"};
}

void emit(const Common& common, const char* name, const json& j) {
  const std::string text = j.dump(2) + "\n";
  std::cout << text;
  if (!common.out_dir.empty()) write_text(common.dir() / name, text);
}

// Flat commands accept their JSON config as leading --key=value arguments so
// that anything given on the command line later wins.
std::string config_arg(const std::string& key, const json& value) {
  std::string text;
  if (value.is_string()) text = value.get<std::string>();
  else if (value.is_array()) {
    for (const auto& v : value) {
      if (!text.empty()) text += ",";
      text += v.is_string() ? v.get<std::string>() : v.dump();
    }
  } else if (value.is_number() || value.is_boolean()) text = value.dump();
  else usage("config key '" + key + "' must be a string, number, boolean or array");
  return "--" + key + "=" + text;
}

std::optional<std::string> find_config(const std::vector<std::string>& args) {
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  return path;
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) usage("cannot open config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    usage("config '" + path + "' is not valid JSON: " + e.what());
  }
}

void inject_config(std::vector<std::string>& args) {
  if (args.empty()) return;
  const std::string& cmd = args[0];
  if (cmd == "train" || cmd == "lr-grid") return;
  const auto path = find_config(args);
  if (!path) return;
  const json j = load_json(*path);
  if (!j.is_object()) usage("config '" + *path + "' must hold a JSON object");
  std::vector<std::string> injected;
  for (const auto& item : j.items()) {
    if (item.key() == "config") continue;
    injected.push_back(config_arg(item.key(), item.value()));
  }
  args.insert(args.begin() + 1, injected.begin(), injected.end());
}

// --- model and data plumbing -------------------------------------------------

struct ModelData {
  std::string data_path;
  int classes = 3;
  std::int64_t dim = 20;
  std::int64_t per_class = 100;
  double separation = 3.0;
  std::string widths;
  std::string loss = "cross_entropy";
  std::string model_spec;
  std::string params_path;
  double init_scale = 1.0;

  void add(CLI::App* cmd) {
    cmd->add_option("--data", data_path, "Dataset CSV (x_0..,label); default is a Gaussian mixture");
    cmd->add_option("--classes", classes, "Mixture classes");
    cmd->add_option("--dim", dim, "Mixture input dimension");
    cmd->add_option("--per-class", per_class, "Mixture samples per class");
    cmd->add_option("--separation", separation, "Mixture mean separation");
    cmd->add_option("--widths", widths, "Layer widths d_x,h_1,...,d_y (default d_x,32,classes)");
    cmd->add_option("--loss", loss, "cross_entropy or squared_error")
        ->check(CLI::IsMember({"cross_entropy", "squared_error"}));
    cmd->add_option("--model-spec", model_spec, "Model spec JSON (with --params)");
    cmd->add_option("--params", params_path, "Parameter file written by train");
    cmd->add_option("--init-scale", init_scale, "Initial weight scale");
  }

  hl_dataset* dataset(std::uint64_t seed) const {
    hl_dataset* d = nullptr;
    if (!data_path.empty()) check(hl_dataset_load_csv(data_path.c_str(), &d));
    else check(hl_dataset_gmm(classes, dim, per_class, separation, seed, &d));
    return d;
  }

  hl_model* model(std::uint64_t seed, std::int64_t d_x) const {
    hl_model* m = nullptr;
    if (!model_spec.empty() || !params_path.empty()) {
      if (model_spec.empty() || params_path.empty()) usage("--model-spec and --params must be given together");
      check(hl_model_load(model_spec.c_str(), params_path.c_str(), &m));
      return m;
    }
    std::vector<std::int64_t> w =
        widths.empty() ? std::vector<std::int64_t>{d_x, 32, classes} : parse_list<std::int64_t>(widths, "--widths");
    check(hl_model_create(w.data(), w.size(), loss == "cross_entropy" ? 0 : 1, seed, init_scale, &m));
    return m;
  }
};

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  explicit Handle(T* ptr) : p(ptr) {}
  ~Handle() { Free(p); }
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  T* get() const { return p; }
};
using Dataset = Handle<hl_dataset, hl_dataset_free>;
using Model = Handle<hl_model, hl_model_free>;

std::string take_string(char* s) {
  std::string out(s);
  hl_string_free(s);
  return out;
}

hl_curvature parse_curvature(const std::string& s) { return s == "ggn" ? HL_CURVATURE_GGN : HL_CURVATURE_HESSIAN; }

// --- predict-spike -------------------------------------------------------------

struct PredictSpike {
  Common common;
  std::string law = "wigner";
  std::string route = "closed-form";
  std::string tail = "top";
  double lambda1 = 0.0;
  double s2 = 1.0;
  std::optional<double> q;
  std::optional<std::int64_t> p, b, n;
  std::string batches;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("predict-spike", "Predicted batch outlier for a full-data eigenvalue");
    common.add(cmd);
    cmd->add_option("--law", law, "wigner (additive noise) or mp (multiplicative noise)")
        ->check(CLI::IsMember({"wigner", "mp"}));
    cmd->add_option("--route", route, "MP evaluation: closed-form or t-transform")
        ->check(CLI::IsMember({"closed-form", "t-transform"}));
    cmd->add_option("--tail", tail, "Wigner outlier side: top or bottom")->check(CLI::IsMember({"top", "bottom"}));
    cmd->add_option("--lambda1", lambda1, "Full-data eigenvalue")->required();
    cmd->add_option("--s2", s2, "Per-element variance (sigma^2 for mp)");
    cmd->add_option("--q", q, "Shape factor P / b_eff (beta for mp)");
    cmd->add_option("--p", p, "Parameter count P");
    cmd->add_option("--b", b, "Batch size B");
    cmd->add_option("--n", n, "Dataset size N (omit for infinite)");
    cmd->add_option("--batches", batches, "Comma-separated batch sizes to sweep (needs --p)");
    cmd->callback([this] { run(); });
  }

  json predict(std::optional<double> shape, std::optional<std::int64_t> batch) const {
    hl_spike s{};
    if (shape) {
      if (law == "wigner") check(hl_wigner_spike(lambda1, *shape, s2, tail == "top" ? HL_TAIL_TOP : HL_TAIL_BOTTOM, &s));
      else check(hl_mp_spike(lambda1, *shape, s2, route == "closed-form" ? HL_MP_CLOSED_FORM : HL_MP_T_TRANSFORM, &s));
    } else {
      const std::int64_t nn = n.value_or(0);
      if (law == "mp" && route == "t-transform" && !(nn > 0 && *batch == nn)) {
        double beff = 0.0;
        check(hl_effective_batch(*batch, nn, &beff));
        check(hl_mp_spike(lambda1, static_cast<double>(*p) / beff, s2, HL_MP_T_TRANSFORM, &s));
      } else {
        check(hl_predict_batch_lambda(lambda1, s2, *p, *batch, nn, law == "wigner" ? HL_LAW_WIGNER : HL_LAW_MP, &s));
      }
    }
    json j;
    j["lambda_prime"] = number(s.lambda_prime);
    j["overlap_sq"] = number(s.overlap_sq);
    j["regime"] = s.regime == HL_REGIME_SEPARATED ? "separated" : "bulk_absorbed";
    double max_lr = 0.0;
    j["max_lr"] = s.lambda_prime > 0.0 && hl_max_lr_sgd(s.lambda_prime, &max_lr) == HL_OK ? number(max_lr) : json(nullptr);
    return j;
  }

  void run() {
    if (!batches.empty()) {
      if (!p) usage("--batches needs --p");
      if (q) usage("--batches cannot be combined with --q");
      std::ostringstream csv;
      csv << "batch,b_eff,lambda_prime,overlap_sq,regime,max_lr\n";
      for (auto batch : parse_list<std::int64_t>(batches, "--batches")) {
        const json r = predict(std::nullopt, batch);
        double beff = 0.0;
        check(hl_effective_batch(batch, n.value_or(0), &beff));
        auto val = [](const json& v) { return v.is_null() ? std::string("nan") : fmt(v.get<double>()); };
        csv << batch << ',' << fmt(beff) << ',' << val(r["lambda_prime"]) << ',' << val(r["overlap_sq"]) << ','
            << r["regime"].get<std::string>() << ',' << val(r["max_lr"]) << '\n';
      }
      std::cout << csv.str();
      write_text(common.dir() / "predict_sweep.csv", csv.str());
      return;
    }
    json out;
    out["law"] = law;
    out["lambda1"] = lambda1;
    out["s2"] = s2;
    if (q) {
      if (p || b) usage("give either --q or --p/--b, not both");
      out["q"] = *q;
      out["prediction"] = predict(q, std::nullopt);
    } else {
      if (!p || !b) usage("predict-spike needs --q or both --p and --b");
      double beff = 0.0;
      check(hl_effective_batch(*b, n.value_or(0), &beff));
      out["p"] = *p;
      out["b"] = *b;
      out["n"] = n ? json(*n) : json(nullptr);
      out["b_eff"] = number(beff);
      out["prediction"] = predict(std::nullopt, b);
    }
    if (law == "mp") out["route"] = route;
    emit(common, "predict_spike.json", out);
  }
};

// --- validate-rmt ------------------------------------------------------------

struct ValidateRmt {
  Common common;
  std::int64_t dim = 1000;
  std::int64_t trials = 20;
  std::string lambdas = "2,3,5";
  std::string qs = "0.25,0.5,1";
  double s2 = 1.0;
  double tol = 0.02;
  bool skip_mp = false;
  double mp_beta = 0.5;
  double mp_lambda = 5.0;
  bool dump_matrix = false;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("validate-rmt", "Monte-Carlo check of the spiked-eigenvalue laws");
    common.add(cmd);
    cmd->add_option("--p", dim, "Matrix dimension")->check(CLI::Range(2, 100000));
    cmd->add_option("--trials", trials, "Draws per cell")->check(CLI::Range(1, 100000));
    cmd->add_option("--lambdas", lambdas, "Planted eigenvalues");
    cmd->add_option("--qs", qs, "Shape factors q");
    cmd->add_option("--s2", s2, "Per-element variance");
    cmd->add_option("--tol", tol, "Relative tolerance for a passing cell");
    cmd->add_flag("--skip-mp", skip_mp, "Skip the Wishart cells");
    cmd->add_option("--mp-beta", mp_beta, "Wishart aspect ratio P / n");
    cmd->add_option("--mp-lambda", mp_lambda, "Wishart planted eigenvalue");
    cmd->add_flag("--dump-matrix", dump_matrix, "Also write one sampled spiked GOE matrix");
    cmd->callback([this] { run(); });
  }

  void run() {
    const auto ls = parse_list<double>(lambdas, "--lambdas");
    const auto qv = parse_list<double>(qs, "--qs");
    std::ostringstream csv;
    csv << "law,construction,route,lambda,q,dim,trials,predicted,measured_mean,measured_std,rel_error,"
           "overlap_predicted,overlap_measured,regime,pass\n";
    int cells = 0, passed = 0, sep_cells = 0, sep_passed = 0;
    std::uint64_t cell_index = 0;

    auto wigner = [&](double lambda, double q) {
      double predicted = 0, mean = 0, sd = 0, overlap = 0;
      check(hl_validate_wigner_cell(dim, lambda, q, s2, trials, common.seed + 1000003ULL * cell_index++, &predicted,
                                    &mean, &sd, &overlap));
      hl_spike s{};
      check(hl_wigner_spike(lambda, q, s2, HL_TAIL_TOP, &s));
      const double rel = std::abs(mean - predicted) / std::abs(predicted);
      const bool ok = rel <= tol;
      const bool sep = s.regime == HL_REGIME_SEPARATED;
      ++cells;
      passed += ok;
      sep_cells += sep;
      sep_passed += sep && ok;
      csv << "wigner,goe,closed-form," << fmt(lambda) << ',' << fmt(q) << ',' << dim << ',' << trials << ','
          << fmt(predicted) << ',' << fmt(mean) << ',' << fmt(sd) << ',' << fmt(rel) << ',' << fmt(s.overlap_sq) << ','
          << fmt(overlap) << ',' << (sep ? "separated" : "bulk_absorbed") << ',' << (ok ? 1 : 0) << '\n';
    };
    for (double q : qv)
      for (double lambda : ls) wigner(lambda, q);
    for (double q : qv) wigner(0.5 * std::sqrt(q * s2), q);

    json mp = nullptr;
    if (!skip_mp) {
      mp = json::object();
      for (hl_wishart c : {HL_WISHART_PRODUCT, HL_WISHART_ADDITIVE}) {
        double closed = 0, tt = 0, mean = 0, sd = 0;
        check(hl_validate_mp_cell(dim, mp_beta, mp_lambda, s2, trials, common.seed + 1000003ULL * cell_index++, c,
                                  &closed, &tt, &mean, &sd));
        const char* cname = c == HL_WISHART_PRODUCT ? "product" : "additive";
        hl_spike s{};
        check(hl_mp_spike(mp_lambda, mp_beta, s2, HL_MP_CLOSED_FORM, &s));
        for (int r = 0; r < 2; ++r) {
          const double pred = r == 0 ? closed : tt;
          const double rel = std::abs(mean - pred) / std::abs(mean);
          const bool ok = rel <= tol;
          ++cells;
          passed += ok;
          csv << "mp," << cname << ',' << (r == 0 ? "closed-form" : "t-transform") << ',' << fmt(mp_lambda) << ','
              << fmt(mp_beta) << ',' << dim << ',' << trials << ',' << fmt(pred) << ',' << fmt(mean) << ','
              << fmt(sd) << ',' << fmt(rel) << ",nan,nan," << (s.regime == HL_REGIME_SEPARATED ? "separated" : "bulk_absorbed")
              << ',' << (ok ? 1 : 0) << '\n';
          mp[cname][r == 0 ? "closed_form_rel_error" : "t_transform_rel_error"] = number(rel);
        }
        mp[cname]["measured_mean"] = mean;
      }
    }

    const fs::path dir = common.dir();
    write_text(dir / "validate_rmt.csv", csv.str());
    if (dump_matrix) check(hl_sample_spiked_goe_csv(dim, std::sqrt(qv.front() * s2), ls.front(), common.seed,
                                                    (dir / "spiked_goe.csv").string().c_str()));
    json summary;
    summary["cells"] = cells;
    summary["passed"] = passed;
    summary["tolerance"] = tol;
    summary["wigner_separated_cells"] = sep_cells;
    summary["wigner_separated_passed"] = sep_passed;
    summary["mp"] = mp;
    const std::string text = summary.dump(2) + "\n";
    write_text(dir / "validate_rmt_summary.json", text);
    std::cout << text;
  }
};

// --- spectrum ----------------------------------------------------------------

struct Spectrum {
  Common common;
  ModelData md;
  std::string curvature = "hessian";
  std::int64_t batch = 0;
  std::int64_t steps = 100;
  std::int64_t vectors = 1;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("spectrum", "Stochastic Lanczos quadrature spectrum of a model's curvature");
    common.add(cmd);
    md.add(cmd);
    cmd->add_option("--curvature", curvature, "hessian or ggn")->check(CLI::IsMember({"hessian", "ggn"}));
    cmd->add_option("--batch-size", batch, "Batch size (0 = full dataset)");
    cmd->add_option("--steps", steps, "Lanczos steps m (capped at P)")->check(CLI::PositiveNumber);
    cmd->add_option("--vectors", vectors, "Random start vectors")->check(CLI::PositiveNumber);
    cmd->callback([this] { run(); });
  }

  void run() {
    Dataset data(md.dataset(common.seed));
    std::int64_t rows = 0, d_x = 0, p = 0;
    check(hl_dataset_size(data.get(), &rows, &d_x));
    Model model(md.model(common.seed + 1, d_x));
    check(hl_model_param_count(model.get(), &p));
    hl_spectrum* s = nullptr;
    check(hl_slq(model.get(), data.get(), parse_curvature(curvature), batch, std::min(steps, p), vectors,
                 common.seed + 2, &s));
    Handle<hl_spectrum, hl_spectrum_free> spec(s);
    const fs::path out = common.dir() / "spectrum.csv";
    check(hl_spectrum_save_csv(s, out.string().c_str()));
    std::size_t size = 0;
    check(hl_spectrum_size(s, &size));
    std::vector<double> nodes(size), weights(size);
    check(hl_spectrum_get(s, nodes.data(), weights.data(), size));
    json j;
    j["params"] = p;
    j["dataset"] = rows;
    j["nodes"] = size;
    j["lambda_min"] = nodes.front();
    j["lambda_max"] = nodes.back();
    j["output"] = out.string();
    std::cout << j.dump(2) << "\n";
  }
};

// --- variance ----------------------------------------------------------------

struct Variance {
  Common common;
  ModelData md;
  std::string curvature = "hessian";
  std::int64_t probes = 1;
  std::optional<std::int64_t> batch;
  std::int64_t batches = 10;
  std::int64_t steps = 80;
  std::string law = "wigner";

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("variance", "Per-sample curvature variance and the implied batch outlier");
    common.add(cmd);
    md.add(cmd);
    cmd->add_option("--curvature", curvature, "hessian or ggn")->check(CLI::IsMember({"hessian", "ggn"}));
    cmd->add_option("--probes", probes, "Random unit directions averaged")->check(CLI::PositiveNumber);
    cmd->add_option("--batch-size", batch, "Also predict and measure the batch top eigenvalue at this B");
    cmd->add_option("--batches", batches, "Measured batches for the report")->check(CLI::PositiveNumber);
    cmd->add_option("--steps", steps, "Lanczos steps for extremal eigenvalues")->check(CLI::Range(2, 100000));
    cmd->add_option("--law", law, "wigner or mp")->check(CLI::IsMember({"wigner", "mp"}));
    cmd->callback([this] { run(); });
  }

  void run() {
    Dataset data(md.dataset(common.seed));
    std::int64_t rows = 0, d_x = 0, p = 0;
    check(hl_dataset_size(data.get(), &rows, &d_x));
    Model model(md.model(common.seed + 1, d_x));
    check(hl_model_param_count(model.get(), &p));
    double normalized = 0, raw = 0, s2 = 0;
    check(hl_hessian_variance(model.get(), data.get(), parse_curvature(curvature), probes, common.seed + 2,
                              &normalized, &raw, &s2));
    json j;
    j["params"] = p;
    j["dataset"] = rows;
    j["variance_normalized"] = normalized;
    j["variance_unnormalized"] = raw;
    j["s2"] = s2;
    if (batch) {
      char* report = nullptr;
      check(hl_curvature_report(model.get(), data.get(), parse_curvature(curvature),
                                law == "wigner" ? HL_LAW_WIGNER : HL_LAW_MP, *batch, batches, steps, probes,
                                common.seed + 3, &report));
      j["report"] = json::parse(take_string(report));
    }
    const std::string text = j.dump(2) + "\n";
    write_text(common.dir() / "variance.json", text);
    std::cout << text;
  }
};

// --- scale-lr ----------------------------------------------------------------

struct ScaleLr {
  Common common;
  std::string rule = "linear";
  double base_lr = 0.0;
  std::int64_t base_batch = 128;
  std::string batches;
  std::optional<double> threshold;
  std::optional<double> lambda1, s2;
  std::optional<std::int64_t> p, n;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("scale-lr", "Scale a base learning rate to other batch sizes");
    common.add(cmd);
    cmd->add_option("--rule", rule, "linear (SGD) or sqrt (adaptive)")->check(CLI::IsMember({"linear", "sqrt"}));
    cmd->add_option("--base-lr", base_lr, "Learning rate at the base batch size")->required();
    cmd->add_option("--base-batch", base_batch, "Base batch size");
    cmd->add_option("--batch", batches, "Target batch size(s), comma-separated")->required();
    cmd->add_option("--threshold-batch", threshold, "Cap on the batch size used for scaling");
    cmd->add_option("--lambda1", lambda1, "Full-data top eigenvalue (derives the cap with --s2 and --p)");
    cmd->add_option("--s2", s2, "Per-element variance");
    cmd->add_option("--p", p, "Parameter count");
    cmd->add_option("--n", n, "Dataset size (omit for infinite)");
    cmd->callback([this] { run(); });
  }

  void run() {
    json out;
    std::optional<double> cap = threshold;
    if (lambda1 || s2 || p) {
      if (!(lambda1 && s2 && p)) usage("--lambda1, --s2 and --p must be given together");
      if (threshold) usage("give --threshold-batch or --lambda1/--s2/--p, not both");
      double beff = 0, b = 0;
      check(hl_threshold_batch(*lambda1, *s2, *p, n.value_or(0), &beff, &b));
      out["threshold_b_eff"] = beff;
      out["threshold_batch"] = b;
      if (b > 0.0) cap = b;
    }
    json rows = json::array();
    for (auto b : parse_list<std::int64_t>(batches, "--batch")) {
      double lr = 0.0;
      check(hl_scale_lr(rule == "linear" ? HL_RULE_LINEAR_SGD : HL_RULE_SQRT_ADAPTIVE, base_lr, base_batch,
                        cap.value_or(0.0), b, &lr));
      rows.push_back({{"batch", b}, {"lr", lr}});
    }
    out["rule"] = rule;
    out["base_lr"] = base_lr;
    out["base_batch"] = base_batch;
    out["cap"] = cap ? json(*cap) : json(nullptr);
    out["rates"] = rows;
    emit(common, "scale_lr.json", out);
  }
};

// --- rank-bound --------------------------------------------------------------

struct RankBound {
  Common common;
  std::int64_t d_x = 0, d_y = 0;
  std::string hidden;
  double params = 0;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("rank-bound", "Rank bound and zero-eigenvalue mass of a feed-forward net");
    common.add(cmd);
    cmd->add_option("--d-x", d_x, "Input dimension")->required();
    cmd->add_option("--d-y", d_y, "Output dimension")->required();
    cmd->add_option("--hidden", hidden, "Hidden-layer widths (or their total)")->required();
    cmd->add_option("--params", params, "Parameter count P")->required();
    cmd->callback([this] { run(); });
  }

  void run() {
    const auto h = parse_list<std::int64_t>(hidden, "--hidden");
    if (!(params >= 1.0) || params > 9.0e18 || params != std::floor(params)) usage("--params must be a positive integer");
    std::int64_t bound = 0;
    double floor = 0;
    check(hl_rank_bound(d_x, d_y, h.data(), h.size(), static_cast<std::int64_t>(params), &bound, &floor));
    json out;
    out["bound"] = bound;
    out["degeneracy_floor"] = floor;
    emit(common, "rank_bound.json", out);
  }
};

// --- train / lr-grid ----------------------------------------------------------

struct RunOverrides {
  std::optional<std::int64_t> epochs, batch, swa_start;
  std::optional<double> lr, momentum, weight_decay;
  std::optional<std::string> optimizer, schedule, mode, objective, widths;
  std::optional<std::uint64_t> seed;

  void add(CLI::App* cmd) {
    cmd->add_option("--epochs", epochs, "Epoch budget");
    cmd->add_option("--batch-size", batch, "Batch size");
    cmd->add_option("--lr", lr, "Learning rate");
    cmd->add_option("--momentum", momentum, "Momentum");
    cmd->add_option("--weight-decay", weight_decay, "Weight decay");
    cmd->add_option("--optimizer", optimizer, "sgd or adam")->check(CLI::IsMember({"sgd", "adam"}));
    cmd->add_option("--schedule", schedule, "constant, linear_decay or autolr")
        ->check(CLI::IsMember({"constant", "linear_decay", "autolr"}));
    cmd->add_option("--autolr-mode", mode, "polyak or nesterov")->check(CLI::IsMember({"polyak", "nesterov"}));
    cmd->add_option("--swa-start", swa_start, "First averaged epoch (negative disables)");
    cmd->add_option("--objective", objective, "mlp or quadratic")->check(CLI::IsMember({"mlp", "quadratic"}));
    cmd->add_option("--widths", widths, "Model layer widths");
  }

  json apply(json cfg, std::uint64_t seed, bool seed_given) const {
    if (!cfg.is_object()) usage("run config must be a JSON object");
    if (epochs) cfg["epochs"] = *epochs;
    if (batch) cfg["batch_size"] = *batch;
    if (lr) cfg["optimizer"]["lr"] = *lr;
    if (momentum) cfg["optimizer"]["momentum"] = *momentum;
    if (weight_decay) cfg["weight_decay"] = *weight_decay;
    if (optimizer) cfg["optimizer"]["kind"] = *optimizer;
    if (schedule) cfg["schedule"]["kind"] = *schedule;
    if (mode) cfg["schedule"]["autolr"]["mode"] = *mode;
    if (swa_start) cfg["swa_start_epoch"] = *swa_start;
    if (objective) cfg["objective"] = *objective;
    if (widths) cfg["model"]["layer_widths"] = parse_list<std::int64_t>(*widths, "--widths");
    if (seed_given) cfg["seeds"] = {{"data", seed}, {"init", seed + 1}, {"batch", seed + 2}, {"probe", seed + 3}};
    return cfg;
  }
};

std::string normalized_config(const Common& common, const RunOverrides& o, CLI::App* cmd) {
  json base = json::object();
  if (!common.config.empty()) base = load_json(common.config);
  const json merged = o.apply(base, common.seed, cmd->count("--seed") > 0);
  char* text = nullptr;
  check(hl_config_normalize(merged.dump().c_str(), &text));
  return take_string(text);
}

json manifest(const char* command, const std::string& config, const json& outputs, const std::string& outcome) {
  json m;
  m["command"] = command;
  m["version"] = hl_version();
  m["config"] = json::parse(config);
  m["seeds"] = m["config"]["seeds"];
  m["outputs"] = outputs;
  m["outcome"] = outcome;
  return m;
}

struct Train {
  Common common;
  RunOverrides overrides;
  CLI::App* cmd = nullptr;
  int exit_code = 0;

  void add(CLI::App& app) {
    cmd = app.add_subcommand("train", "Train a model or quadratic from a JSON run config");
    common.add(cmd);
    overrides.add(cmd);
    cmd->callback([this] { run(); });
  }

  void run() {
    const std::string config = normalized_config(common, overrides, cmd);
    hl_history* h = nullptr;
    check(hl_train(config.c_str(), &h));
    Handle<hl_history, hl_history_free> history(h);
    const fs::path dir = common.dir();
    const json cfg = json::parse(config);
    json outputs = json::array();
    auto save = [&](const char* name, hl_status (*fn)(const hl_history*, const char*)) {
      const fs::path path = dir / name;
      check(fn(h, path.string().c_str()));
      outputs.push_back(name);
    };
    save("history.csv", hl_history_save_csv);
    if (cfg["schedule"]["kind"] == "autolr") save("probes.csv", hl_history_save_probes_csv);
    if (cfg["optimizer"]["kind"] == "adam") save("adam_eta.csv", hl_history_save_adam_eta_csv);
    save("params.bin", hl_history_save_params);
    if (cfg["objective"] == "mlp") {
      write_text(dir / "model.json", json{{"layer_widths", cfg["model"]["layer_widths"]}, {"loss", cfg["model"]["loss"]}}.dump(2) + "\n");
      outputs.push_back("model.json");
    }
    int diverged = 0;
    std::int64_t epoch = -1;
    check(hl_history_diverged(h, &diverged, &epoch));
    outputs.push_back("manifest.json");
    write_text(dir / "manifest.json",
               manifest("train", config, outputs, diverged ? "diverged" : "completed").dump(2) + "\n");
    char* summary = nullptr;
    check(hl_history_summary(h, &summary));
    std::cout << take_string(summary) << "\n";
    if (diverged) {
      std::cerr << "training diverged at epoch " << epoch << "\n";
      exit_code = kExitFailure;
    }
  }
};

struct LrGrid {
  Common common;
  RunOverrides overrides;
  CLI::App* cmd = nullptr;
  double lo = 1e-3, hi = 1.0;
  std::int64_t points = 7;
  std::string grid;
  int exit_code = 0;

  void add(CLI::App& app) {
    cmd = app.add_subcommand("lr-grid", "Largest stable learning rate on a logarithmic grid");
    common.add(cmd);
    overrides.add(cmd);
    cmd->add_option("--lo", lo, "Smallest grid value");
    cmd->add_option("--hi", hi, "Largest grid value");
    cmd->add_option("--points", points, "Grid points")->check(CLI::Range(2, 1000));
    cmd->add_option("--grid", grid, "Explicit comma-separated grid (overrides --lo/--hi/--points)");
    cmd->callback([this] { run(); });
  }

  void run() {
    std::vector<double> values;
    if (!grid.empty()) {
      values = parse_list<double>(grid, "--grid");
    } else {
      if (!(lo > 0.0 && hi > lo)) usage("--lo and --hi must satisfy 0 < lo < hi");
      for (std::int64_t i = 0; i < points; ++i)
        values.push_back(lo * std::exp(std::log(hi / lo) * static_cast<double>(i) / static_cast<double>(points - 1)));
      values.front() = lo;
      values.back() = hi;
    }
    const std::string config = normalized_config(common, overrides, cmd);
    hl_grid* g = nullptr;
    check(hl_lr_grid(config.c_str(), values.data(), values.size(), &g));
    Handle<hl_grid, hl_grid_free> report(g);
    const fs::path dir = common.dir();
    check(hl_grid_save_csv(g, (dir / "grid.csv").string().c_str()));
    double best = 0.0;
    const hl_status st = hl_grid_best(g, &best);
    json out;
    out["best_lr"] = st == HL_OK ? json(best) : json(nullptr);
    write_text(dir / "manifest.json",
               manifest("lr-grid", config, json::array({"grid.csv", "manifest.json"}),
                        st == HL_OK ? "completed" : "all_diverged")
                       .dump(2) +
                   "\n");
    std::cout << out.dump(2) << "\n";
    if (st != HL_OK) {
      std::cerr << hl_last_error();
      exit_code = kExitFailure;
    }
  }
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  CLI::App app{"hesslab: batch-Hessian spectra, spiked random-matrix predictions and learning-rate tools"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(hl_version()));

  PredictSpike predict;
  ValidateRmt validate;
  Spectrum spectrum;
  Variance variance;
  ScaleLr scale;
  RankBound rank;
  Train train;
  LrGrid grid;
  predict.add(app);
  validate.add(app);
  spectrum.add(app);
  variance.add(app);
  scale.add(app);
  rank.add(app);
  train.add(app);
  grid.add(app);

  try {
    inject_config(args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.code;
  }
  return std::max(train.exit_code, grid.exit_code);
}
