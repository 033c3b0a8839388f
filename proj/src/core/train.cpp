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
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "hesslab/autolr.hpp"
#include "hesslab/io.hpp"
#include "hesslab/parallel.hpp"

namespace hesslab::autolr {

using nlohmann::json;

double scheduled_lr(double lr0, double ratio, Index epoch, Index total_epochs) {
  require(total_epochs >= 1, ErrorCode::Domain, "scheduled_lr requires T >= 1");
  const double t = static_cast<double>(epoch) / static_cast<double>(total_epochs);
  if (t <= 0.5) return lr0;
  if (t <= 0.9) return lr0 * (1.0 - (1.0 - ratio) * (t - 0.5) / 0.4);
  return lr0 * ratio;
}

// --- config ----------------------------------------------------------------

namespace {

template <typename Enum>
Enum parse_enum(const json& j, const char* what, std::initializer_list<std::pair<const char*, Enum>> names) {
  const auto text = j.get<std::string>();
  for (const auto& [name, value] : names)
    if (text == name) return value;
  fail(ErrorCode::InvalidArgument, std::string("unknown ") + what + " '" + text + "'");
}

template <typename Enum>
const char* enum_name(Enum value, std::initializer_list<std::pair<const char*, Enum>> names) {
  for (const auto& [name, v] : names)
    if (v == value) return name;
  return "";
}

const std::initializer_list<std::pair<const char*, ObjectiveKind>> kObjectives = {{"mlp", ObjectiveKind::Mlp},
                                                                                  {"quadratic", ObjectiveKind::Quadratic}};
const std::initializer_list<std::pair<const char*, nn::Loss>> kLosses = {
    {"cross_entropy", nn::Loss::SoftmaxCrossEntropy}, {"squared_error", nn::Loss::SquaredError}};
const std::initializer_list<std::pair<const char*, nn::Curvature>> kCurvatures = {
    {"hessian", nn::Curvature::Hessian}, {"ggn", nn::Curvature::GaussNewton}};
const std::initializer_list<std::pair<const char*, OptimizerKind>> kOptimizers = {{"sgd", OptimizerKind::Sgd},
                                                                                  {"adam", OptimizerKind::Adam}};
const std::initializer_list<std::pair<const char*, ScheduleKind>> kSchedules = {
    {"constant", ScheduleKind::Constant}, {"linear_decay", ScheduleKind::LinearDecay}, {"autolr", ScheduleKind::AutoLr}};
const std::initializer_list<std::pair<const char*, AutoLrMode>> kModes = {{"polyak", AutoLrMode::Polyak},
                                                                          {"nesterov", AutoLrMode::Nesterov}};
const std::initializer_list<std::pair<const char*, PolyakStep>> kPolyakSteps = {{"optimal", PolyakStep::Optimal},
                                                                                {"root_sum", PolyakStep::RootSum}};

void check_keys(const json& j, const char* where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(ErrorCode::InvalidArgument, std::string(where) + " must be a JSON object");
  for (const auto& item : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; }))
      fail(ErrorCode::InvalidArgument, std::string("unknown key '") + item.key() + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig RunConfig::from_json(const std::string& text) {
  RunConfig c;
  try {
    const json j = json::parse(text);
    check_keys(j, "run config",
               {"objective", "model", "init_scale", "curvature", "data", "eigenvalues", "initial_point",
                "steps_per_epoch", "optimizer", "schedule", "batch_size", "epochs", "swa_start_epoch", "weight_decay",
                "seeds"});
    if (j.contains("objective")) c.objective = parse_enum(j["objective"], "objective", kObjectives);
    if (j.contains("model")) {
      const auto& m = j["model"];
      check_keys(m, "model", {"layer_widths", "loss"});
      read(m, "layer_widths", c.model.layer_widths);
      if (m.contains("loss")) c.model.loss = parse_enum(m["loss"], "loss", kLosses);
    }
    read(j, "init_scale", c.init_scale);
    if (j.contains("curvature")) c.curvature = parse_enum(j["curvature"], "curvature", kCurvatures);
    if (j.contains("data")) {
      const auto& d = j["data"];
      check_keys(d, "data", {"kind", "classes", "dim", "per_class", "separation", "val_fraction", "path", "val_path"});
      read(d, "kind", c.data_kind);
      read(d, "classes", c.classes);
      read(d, "dim", c.dim);
      read(d, "per_class", c.per_class);
      read(d, "separation", c.separation);
      read(d, "val_fraction", c.val_fraction);
      read(d, "path", c.data_path);
      read(d, "val_path", c.val_path);
    }
    read(j, "eigenvalues", c.eigenvalues);
    read(j, "initial_point", c.initial_point);
    read(j, "steps_per_epoch", c.steps_per_epoch);
    if (j.contains("optimizer")) {
      const auto& o = j["optimizer"];
      check_keys(o, "optimizer", {"kind", "lr", "momentum", "nesterov", "beta1", "beta2", "delta"});
      if (o.contains("kind")) c.optimizer.kind = parse_enum(o["kind"], "optimizer", kOptimizers);
      read(o, "lr", c.optimizer.lr);
      read(o, "momentum", c.optimizer.momentum);
      read(o, "nesterov", c.optimizer.nesterov);
      read(o, "beta1", c.optimizer.beta1);
      read(o, "beta2", c.optimizer.beta2);
      read(o, "delta", c.optimizer.delta);
    }
    if (j.contains("schedule")) {
      const auto& s = j["schedule"];
      check_keys(s, "schedule", {"kind", "ratio", "autolr"});
      if (s.contains("kind")) c.schedule.kind = parse_enum(s["kind"], "schedule", kSchedules);
      read(s, "ratio", c.schedule.ratio);
      if (s.contains("autolr")) {
        const auto& a = s["autolr"];
        check_keys(a, "autolr",
                   {"mode", "probe_period_epochs", "lanczos_steps", "mass_threshold", "psd_floor",
                    "nesterov_lr_normalized", "polyak_step"});
        if (a.contains("mode")) c.schedule.autolr.mode = parse_enum(a["mode"], "autolr mode", kModes);
        read(a, "probe_period_epochs", c.schedule.autolr.probe_period_epochs);
        read(a, "lanczos_steps", c.schedule.autolr.lanczos_steps);
        read(a, "mass_threshold", c.schedule.autolr.mass_threshold);
        read(a, "psd_floor", c.schedule.autolr.psd_floor);
        read(a, "nesterov_lr_normalized", c.schedule.autolr.nesterov_lr_normalized);
        if (a.contains("polyak_step"))
          c.schedule.autolr.polyak_step = parse_enum(a["polyak_step"], "polyak step", kPolyakSteps);
      }
    }
    read(j, "batch_size", c.batch_size);
    read(j, "epochs", c.epochs);
    read(j, "swa_start_epoch", c.swa_start_epoch);
    read(j, "weight_decay", c.weight_decay);
    if (j.contains("seeds")) {
      const auto& s = j["seeds"];
      check_keys(s, "seeds", {"data", "init", "batch", "probe"});
      read(s, "data", c.seeds.data);
      read(s, "init", c.seeds.init);
      read(s, "batch", c.seeds.batch);
      read(s, "probe", c.seeds.probe);
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("invalid run config: ") + e.what());
  }
  return c;
}

std::string RunConfig::to_json() const {
  json j;
  j["objective"] = enum_name(objective, kObjectives);
  j["model"] = {{"layer_widths", model.layer_widths}, {"loss", enum_name(model.loss, kLosses)}};
  j["init_scale"] = init_scale;
  j["curvature"] = enum_name(curvature, kCurvatures);
  j["data"] = {{"kind", data_kind},         {"classes", classes},       {"dim", dim},
               {"per_class", per_class},    {"separation", separation}, {"val_fraction", val_fraction},
               {"path", data_path},         {"val_path", val_path}};
  j["eigenvalues"] = eigenvalues;
  j["initial_point"] = initial_point;
  j["steps_per_epoch"] = steps_per_epoch;
  j["optimizer"] = {{"kind", enum_name(optimizer.kind, kOptimizers)},
                    {"lr", optimizer.lr},
                    {"momentum", optimizer.momentum},
                    {"nesterov", optimizer.nesterov},
                    {"beta1", optimizer.beta1},
                    {"beta2", optimizer.beta2},
                    {"delta", optimizer.delta}};
  j["schedule"] = {{"kind", enum_name(schedule.kind, kSchedules)},
                   {"ratio", schedule.ratio},
                   {"autolr",
                    {{"mode", enum_name(schedule.autolr.mode, kModes)},
                     {"probe_period_epochs", schedule.autolr.probe_period_epochs},
                     {"lanczos_steps", schedule.autolr.lanczos_steps},
                     {"mass_threshold", schedule.autolr.mass_threshold},
                     {"psd_floor", schedule.autolr.psd_floor},
                     {"nesterov_lr_normalized", schedule.autolr.nesterov_lr_normalized},
                     {"polyak_step", enum_name(schedule.autolr.polyak_step, kPolyakSteps)}}}};
  j["batch_size"] = batch_size;
  j["epochs"] = epochs;
  j["swa_start_epoch"] = swa_start_epoch;
  j["weight_decay"] = weight_decay;
  j["seeds"] = {{"data", seeds.data}, {"init", seeds.init}, {"batch", seeds.batch}, {"probe", seeds.probe}};
  return j.dump(2);
}

// --- objectives --------------------------------------------------------------

namespace {

nn::Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open dataset '" + path + "'");
  return io::read_dataset_csv(in);
}

std::pair<nn::Dataset, nn::Dataset> split(const nn::Dataset& data, double fraction, std::uint64_t seed) {
  require(fraction >= 0.0 && fraction < 1.0, ErrorCode::InvalidArgument, "val_fraction must be in [0, 1)");
  const Index n = data.size();
  const auto n_val = static_cast<Index>(std::llround(fraction * static_cast<double>(n)));
  require(n - n_val >= 1, ErrorCode::InvalidArgument, "validation split leaves no training data");
  // Draw one epoch of a sampler with B = N to get a permutation.
  nn::BatchSampler sampler(n, n, seed);
  const auto order = sampler.next_epoch().front();
  const std::span<const Index> all(order);
  return {data.subset(all.subspan(static_cast<std::size_t>(n_val))), data.subset(all.first(static_cast<std::size_t>(n_val)))};
}

}  // namespace

std::unique_ptr<Objective> make_objective(const RunConfig& config) {
  if (config.objective == ObjectiveKind::Quadratic) {
    require(!config.eigenvalues.empty(), ErrorCode::InvalidArgument, "quadratic objective needs 'eigenvalues'");
    require(config.steps_per_epoch >= 1, ErrorCode::InvalidArgument, "steps_per_epoch must be >= 1");
    require(config.batch_size >= 1, ErrorCode::InvalidArgument, "batch_size must be >= 1");
    const Vector eig = Eigen::Map<const Vector>(config.eigenvalues.data(), static_cast<Index>(config.eigenvalues.size()));
    return std::make_unique<QuadraticObjective>(eig, config.batch_size * config.steps_per_epoch);
  }

  nn::Dataset train_data, val_data;
  if (config.data_kind == "gmm") {
    const auto data = nn::gaussian_mixture(config.classes, config.dim, config.per_class, config.separation,
                                           config.seeds.data);
    std::tie(train_data, val_data) = split(data, config.val_fraction, derive_seed(config.seeds.data, 7));
  } else if (config.data_kind == "csv") {
    require(!config.data_path.empty(), ErrorCode::InvalidArgument, "csv data needs 'path'");
    const auto data = load_dataset(config.data_path);
    if (!config.val_path.empty()) {
      train_data = data;
      val_data = load_dataset(config.val_path);
    } else {
      std::tie(train_data, val_data) = split(data, config.val_fraction, derive_seed(config.seeds.data, 7));
    }
  } else {
    fail(ErrorCode::InvalidArgument, "unknown data kind '" + config.data_kind + "'");
  }
  return std::make_unique<MlpObjective>(config.model, std::move(train_data), std::move(val_data), config.curvature);
}

Vector initial_point(const RunConfig& config, const Objective& objective) {
  if (config.objective == ObjectiveKind::Mlp) return nn::init_params(config.model, config.seeds.init, config.init_scale);
  if (config.initial_point.empty()) return Vector::Ones(objective.dim());
  require(static_cast<Index>(config.initial_point.size()) == objective.dim(), ErrorCode::InvalidArgument,
          "initial_point length does not match the eigenvalues");
  return Eigen::Map<const Vector>(config.initial_point.data(), objective.dim());
}

// --- training ----------------------------------------------------------------

namespace {

class DivergenceWatch {
 public:
  explicit DivergenceWatch(double initial) : initial_(initial) {}
  bool diverged(double loss) {
    if (!std::isfinite(loss)) return true;
    streak_ = loss > kDivergenceFactor * initial_ ? streak_ + 1 : 0;
    return streak_ >= kDivergencePatience;
  }

 private:
  double initial_;
  Index streak_ = 0;
};

struct Prober {
  const RunConfig& config;
  const Objective& objective;
  nn::BatchSampler sampler;
  std::uint64_t count = 0;

  // Returns nullopt when the filter left nothing usable.
  std::optional<std::pair<CurvatureBounds, Hyperparams>> probe(const Vector& w) {
    const auto& cfg = config.schedule.autolr;
    const auto batch = sampler.next_batch();
    const auto op = objective.curvature(w, batch);
    lanczos::LanczosOptions options;
    options.steps = std::min(cfg.lanczos_steps, op.dim());
    options.seed = derive_seed(config.seeds.probe, count++);
    const auto spectrum = lanczos::ritz_quadrature(lanczos::lanczos_decompose(op, options));
    double scale = 0.0;
    for (double node : spectrum.nodes) scale = std::max(scale, std::abs(node));
    const double floor = std::max(cfg.psd_floor * scale, std::numeric_limits<double>::min());
    try {
      const auto bounds = filter_ritz(spectrum, cfg.mass_threshold, floor);
      const auto hp = cfg.mode == AutoLrMode::Polyak
                          ? polyak_hyperparams(bounds.top, bounds.bottom, cfg.polyak_step)
                          : nesterov_hyperparams(bounds.top, bounds.bottom, cfg.nesterov_lr_normalized);
      if (!(hp.lr > 0.0) || !std::isfinite(hp.lr) || !(hp.momentum >= 0.0 && hp.momentum < 1.0)) return std::nullopt;
      return std::make_pair(bounds, hp);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::FilterEmpty || e.code() == ErrorCode::Domain) return std::nullopt;
      throw;
    }
  }
};

}  // namespace

TrainingHistory train(const RunConfig& config, const Objective& objective, const Vector& initial) {
  require(config.epochs >= 1, ErrorCode::InvalidArgument, "epochs must be >= 1");
  require(initial.size() == objective.dim(), ErrorCode::InvalidArgument, "initial point has the wrong length");
  const bool autolr = config.schedule.kind == ScheduleKind::AutoLr;
  if (autolr) {
    require(config.optimizer.kind == OptimizerKind::Sgd, ErrorCode::InvalidArgument, "autolr schedule needs the sgd optimizer");
    const auto& a = config.schedule.autolr;
    require(a.probe_period_epochs >= 1, ErrorCode::InvalidArgument, "probe_period_epochs must be >= 1");
    require(a.lanczos_steps >= 2, ErrorCode::InvalidArgument, "autolr lanczos_steps must be >= 2");
    require(a.mass_threshold > 0.0 && a.mass_threshold < 1.0, ErrorCode::InvalidArgument,
            "mass_threshold must be in (0, 1)");
    require(a.psd_floor > 0.0, ErrorCode::InvalidArgument, "psd_floor must be > 0");
  }
  require(config.optimizer.lr > 0.0, ErrorCode::InvalidArgument, "lr must be > 0");

  OptimizerState state;
  if (config.optimizer.kind == OptimizerKind::Sgd) {
    SgdMomentum s;
    s.lr = config.optimizer.lr;
    s.momentum = config.optimizer.momentum;
    s.nesterov = config.optimizer.nesterov || (autolr && config.schedule.autolr.mode == AutoLrMode::Nesterov);
    state = s;
  } else {
    Adam a;
    a.lr = config.optimizer.lr;
    a.beta1 = config.optimizer.beta1;
    a.beta2 = config.optimizer.beta2;
    a.delta = config.optimizer.delta;
    state = a;
  }
  auto set_hyper = [&](double lr, double momentum) {
    if (auto* s = std::get_if<SgdMomentum>(&state)) {
      s->lr = lr;
      s->momentum = momentum;
    } else {
      std::get<Adam>(state).lr = lr;
    }
  };

  TrainingHistory history;
  Vector w = initial;
  const double initial_loss = objective.full_loss(w);
  DivergenceWatch watch(initial_loss);
  nn::BatchSampler sampler(objective.train_size(), config.batch_size, config.seeds.batch);
  Prober prober{config, objective, nn::BatchSampler(objective.train_size(), config.batch_size, config.seeds.probe)};
  Hyperparams current{config.optimizer.lr, config.optimizer.momentum};
  if (config.swa_start_epoch >= 0) history.swa.emplace();

  for (Index epoch = 0; epoch < config.epochs; ++epoch) {
    bool blew_up = false;
    try {
      if (autolr && epoch % config.schedule.autolr.probe_period_epochs == 0) {
        ProbeRecord record;
        record.epoch = epoch;
        if (auto result = prober.probe(w)) {
          current = result->second;
          record.lambda_top = result->first.top;
          record.lambda_bottom = result->first.bottom;
        } else {
          record.fallback = true;
          record.lambda_top = record.lambda_bottom = std::nan("");
        }
        record.lr = current.lr;
        record.momentum = current.momentum;
        history.probes.push_back(record);
      }
      double lr = current.lr;
      if (config.schedule.kind == ScheduleKind::LinearDecay)
        lr = scheduled_lr(config.optimizer.lr, config.schedule.ratio, epoch, config.epochs);
      set_hyper(lr, current.momentum);

      for (const auto& batch : sampler.next_epoch()) {
        Vector g = objective.gradient(w, batch);
        if (config.weight_decay != 0.0) g += config.weight_decay * w;
        optimizer_step(state, w, g);
        if (!w.allFinite()) {
          blew_up = true;
          break;
        }
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Numeric) throw;
      blew_up = true;
    }

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.lr = std::visit([](const auto& s) { return s.lr; }, state);
    rec.momentum = std::holds_alternative<SgdMomentum>(state) ? std::get<SgdMomentum>(state).momentum : 0.0;
    if (blew_up) {
      rec.train_loss = rec.train_err = rec.val_err = std::nan("");
    } else {
      try {
        rec.train_loss = objective.full_loss(w);
        rec.train_err = objective.train_error(w);
        rec.val_err = objective.validation_error(w);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::Numeric) throw;
        rec.train_loss = rec.train_err = rec.val_err = std::nan("");
      }
    }
    history.epochs.push_back(rec);

    if (watch.diverged(rec.train_loss)) {
      history.outcome = Outcome::Diverged;
      history.diverged_epoch = epoch + 1;
      break;
    }
    if (history.swa && epoch + 1 >= config.swa_start_epoch) history.swa->add(w);
  }

  history.final_params = w;
  if (history.swa && history.swa->count > 0 && history.outcome == Outcome::Completed) {
    history.swa_train_loss = objective.full_loss(history.swa->mean);
    history.swa_val_err = objective.validation_error(history.swa->mean);
  }
  if (const auto* a = std::get_if<Adam>(&state)) history.adam_eta = adam_eta(*a);
  return history;
}

TrainingHistory train(const RunConfig& config) {
  const auto objective = make_objective(config);
  return train(config, *objective, initial_point(config, *objective));
}

// --- grid search -------------------------------------------------------------

std::vector<double> log_grid(double lo, double hi, Index points) {
  require(lo > 0.0 && hi > lo && std::isfinite(hi), ErrorCode::Domain, "log_grid requires 0 < lo < hi");
  require(points >= 2, ErrorCode::Domain, "log_grid requires at least two points");
  std::vector<double> out(static_cast<std::size_t>(points));
  const double step = std::log(hi / lo) / static_cast<double>(points - 1);
  for (Index i = 0; i < points; ++i) out[i] = lo * std::exp(step * static_cast<double>(i));
  out.front() = lo;
  out.back() = hi;
  return out;
}

std::string GridReport::summary() const {
  std::ostringstream out;
  for (const auto& e : entries) {
    out << "alpha=" << io::format_double(e.lr) << ' '
        << (e.outcome == Outcome::Completed ? "completed" : "diverged");
    if (e.outcome == Outcome::Diverged) out << " at epoch " << e.diverged_epoch;
    out << '\n';
  }
  return out.str();
}

GridReport lr_grid_search(const RunConfig& config, std::span<const double> grid) {
  require(!grid.empty(), ErrorCode::Domain, "lr_grid_search: empty grid");
  for (double lr : grid) require(std::isfinite(lr) && lr > 0.0, ErrorCode::Domain, "lr_grid_search: grid values must be > 0");
  const auto objective = make_objective(config);
  const Vector start = initial_point(config, *objective);

  GridReport report;
  report.entries.resize(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    RunConfig run = config;
    run.optimizer.lr = grid[i];
    const auto history = train(run, *objective, start);
    GridEntry& e = report.entries[i];
    e.lr = grid[i];
    e.outcome = history.outcome;
    e.diverged_epoch = history.diverged_epoch;
    e.final_train_loss = history.epochs.back().train_loss;
    e.final_val_err = history.epochs.back().val_err;
  });

  const GridEntry* best = nullptr;
  for (const auto& e : report.entries) {
    if (e.outcome != Outcome::Completed) continue;
    const bool better_val = best && e.lr == best->lr && e.final_val_err < best->final_val_err;
    if (!best || e.lr > best->lr || better_val) best = &e;
  }
  if (best) report.best_lr = best->lr;
  return report;
}

double best_stable_lr(const GridReport& report) {
  if (!report.best_lr) fail(ErrorCode::AllDiverged, "every learning rate diverged:\n" + report.summary());
  return *report.best_lr;
}

}  // namespace hesslab::autolr
