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

// Optimisers, the Lanczos-driven learning-rate / momentum learner and the
// training loop built on them.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hesslab/lanczos.hpp"
#include "hesslab/nn.hpp"

namespace hesslab::autolr {

// --- optimisers ----------------------------------------------------------

struct SgdMomentum {
  Vector velocity;
  double lr = 0.1;
  double momentum = 0.0;
  bool nesterov = false;
};

struct Adam {
  Vector m1;
  Vector m2;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double delta = 1e-8;
  std::int64_t step = 0;
};

using OptimizerState = std::variant<SgdMomentum, Adam>;

/// Heavy ball: v <- rho v - lr g; w <- w + v. Nesterov adds the look-ahead
/// w <- w + rho v - lr g instead.
void sgd_step(SgdMomentum& state, Vector& params, const Vector& grad);

/// Bias-corrected Adam with the damping added after the square root.
void adam_step(Adam& state, Vector& params, const Vector& grad);

void optimizer_step(OptimizerState& state, Vector& params, const Vector& grad);

/// Per-coordinate curvature proxies sqrt(m2_hat).
Vector adam_eta(const Adam& state);

// --- curvature-driven hyperparameters -------------------------------------

lanczos::RitzSpectrum probe_curvature(const nn::ParamVector& params, const nn::MlpSpec& spec, const nn::Batch& batch,
                                      Index steps, std::uint64_t seed,
                                      nn::Curvature kind = nn::Curvature::Hessian);

struct CurvatureBounds {
  double top = 0.0;
  double bottom = 0.0;
};

/// Drops the heaviest node when it carries more than `mass_threshold` of the
/// mass, then clamps what is left to >= psd_floor. Throws FilterEmpty when
/// nothing survives.
CurvatureBounds filter_ritz(const lanczos::RitzSpectrum& spectrum, double mass_threshold, double psd_floor);

struct Hyperparams {
  double lr = 0.0;
  double momentum = 0.0;
};

enum class PolyakStep {
  Optimal,  // 4 / (sqrt(top) + sqrt(bottom))^2
  RootSum,  // 2 / (sqrt(top) + sqrt(bottom)); unstable once top > 2 bottom
};

/// momentum = ((sqrt(top) - sqrt(bottom)) / (sqrt(top) + sqrt(bottom)))^2.
Hyperparams polyak_hyperparams(double lambda_top, double lambda_bottom, PolyakStep step = PolyakStep::Optimal);
/// lr = sqrt(bottom / top), momentum = (sqrt(top) - sqrt(bottom)) / (sqrt(top) + sqrt(bottom)).
/// `normalized_lr` divides the step by lambda_top.
Hyperparams nesterov_hyperparams(double lambda_top, double lambda_bottom, bool normalized_lr = false);

struct AveragedIterate {
  Vector mean;
  std::int64_t count = 0;
  void add(const Vector& w);
};

// --- objectives ----------------------------------------------------------

class Objective {
 public:
  virtual ~Objective() = default;
  virtual Index dim() const = 0;
  virtual Index train_size() const = 0;
  virtual double loss(const Vector& w, std::span<const Index> batch) const = 0;
  virtual Vector gradient(const Vector& w, std::span<const Index> batch) const = 0;
  virtual lanczos::LinearOperator curvature(const Vector& w, std::span<const Index> batch) const = 0;
  virtual double full_loss(const Vector& w) const = 0;
  virtual double train_error(const Vector& w) const = 0;
  virtual double validation_error(const Vector& w) const = 0;
};

class MlpObjective final : public Objective {
 public:
  MlpObjective(nn::MlpSpec spec, nn::Dataset train, nn::Dataset validation,
               nn::Curvature curvature = nn::Curvature::Hessian);

  Index dim() const override { return spec_.param_count(); }
  Index train_size() const override { return train_.size(); }
  double loss(const Vector& w, std::span<const Index> batch) const override;
  Vector gradient(const Vector& w, std::span<const Index> batch) const override;
  lanczos::LinearOperator curvature(const Vector& w, std::span<const Index> batch) const override;
  double full_loss(const Vector& w) const override;
  double train_error(const Vector& w) const override;
  double validation_error(const Vector& w) const override;

  const nn::MlpSpec& spec() const { return spec_; }
  const nn::Dataset& train_data() const { return train_; }

 private:
  nn::MlpSpec spec_;
  nn::Dataset train_;
  nn::Dataset validation_;
  nn::Batch train_all_;
  nn::Curvature curvature_;
};

/// 0.5 sum_i lambda_i w_i^2, identical for every batch. The loss doubles as
/// the train and validation error.
class QuadraticObjective final : public Objective {
 public:
  QuadraticObjective(Vector eigenvalues, Index train_size = 1);

  Index dim() const override { return eigenvalues_.size(); }
  Index train_size() const override { return train_size_; }
  double loss(const Vector& w, std::span<const Index> batch) const override;
  Vector gradient(const Vector& w, std::span<const Index> batch) const override;
  lanczos::LinearOperator curvature(const Vector& w, std::span<const Index> batch) const override;
  double full_loss(const Vector& w) const override;
  double train_error(const Vector& w) const override;
  double validation_error(const Vector& w) const override;

 private:
  Vector eigenvalues_;
  Index train_size_;
};

// --- training ------------------------------------------------------------

enum class AutoLrMode { Polyak, Nesterov };

struct AutoLrConfig {
  AutoLrMode mode = AutoLrMode::Polyak;
  Index probe_period_epochs = 20;
  Index lanczos_steps = 20;
  double mass_threshold = 0.5;
  double psd_floor = 1e-6;  // relative to the largest Ritz node
  bool nesterov_lr_normalized = false;
  PolyakStep polyak_step = PolyakStep::Optimal;
};

enum class ScheduleKind { Constant, LinearDecay, AutoLr };

struct Schedule {
  ScheduleKind kind = ScheduleKind::Constant;
  double ratio = 0.01;  // final / initial for LinearDecay
  AutoLrConfig autolr;
};

/// Flat for the first half of the budget, linear decay to ratio * lr0 by
/// 90%, flat afterwards.
double scheduled_lr(double lr0, double ratio, Index epoch, Index total_epochs);

enum class OptimizerKind { Sgd, Adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Sgd;
  double lr = 0.1;
  double momentum = 0.0;
  bool nesterov = false;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double delta = 1e-8;
};

struct Seeds {
  std::uint64_t data = 1;
  std::uint64_t init = 2;
  std::uint64_t batch = 3;
  std::uint64_t probe = 4;
};

enum class ObjectiveKind { Mlp, Quadratic };

struct RunConfig {
  ObjectiveKind objective = ObjectiveKind::Mlp;

  // Mlp
  nn::MlpSpec model{{20, 32, 10}, nn::Loss::SoftmaxCrossEntropy};
  double init_scale = 1.0;
  nn::Curvature curvature = nn::Curvature::Hessian;
  std::string data_kind = "gmm";  // "gmm" or "csv"
  int classes = 10;
  Index dim = 20;
  Index per_class = 100;
  double separation = 3.0;
  double val_fraction = 0.2;
  std::string data_path;
  std::string val_path;

  // Quadratic
  std::vector<double> eigenvalues;
  std::vector<double> initial_point;  // defaults to all ones
  Index steps_per_epoch = 10;

  OptimizerConfig optimizer;
  Schedule schedule;
  Index batch_size = 32;
  Index epochs = 10;
  Index swa_start_epoch = -1;  // negative disables averaging
  double weight_decay = 0.0;
  Seeds seeds;

  static RunConfig from_json(const std::string& text);
  std::string to_json() const;
};

struct EpochRecord {
  Index epoch = 0;
  double train_loss = 0.0;
  double train_err = 0.0;
  double val_err = 0.0;
  double lr = 0.0;
  double momentum = 0.0;
};

struct ProbeRecord {
  Index epoch = 0;
  double lambda_top = 0.0;
  double lambda_bottom = 0.0;
  double lr = 0.0;
  double momentum = 0.0;
  bool fallback = false;  // filter emptied; previous values kept
};

enum class Outcome { Completed, Diverged };

struct TrainingHistory {
  std::vector<EpochRecord> epochs;
  std::vector<ProbeRecord> probes;
  Outcome outcome = Outcome::Completed;
  Index diverged_epoch = -1;
  Vector final_params;
  std::optional<AveragedIterate> swa;
  double swa_train_loss = 0.0;
  double swa_val_err = 0.0;
  Vector adam_eta;  // empty unless the optimiser is Adam
};

/// Non-finite loss, or loss above this multiple of the initial loss for
/// kDivergencePatience consecutive epochs, marks a run Diverged.
inline constexpr double kDivergenceFactor = 10.0;
inline constexpr Index kDivergencePatience = 3;

TrainingHistory train(const RunConfig& config, const Objective& objective, const Vector& initial);
/// Builds objective and initial point from the config.
TrainingHistory train(const RunConfig& config);

std::unique_ptr<Objective> make_objective(const RunConfig& config);
Vector initial_point(const RunConfig& config, const Objective& objective);

struct GridEntry {
  double lr = 0.0;
  Outcome outcome = Outcome::Completed;
  Index diverged_epoch = -1;
  double final_train_loss = 0.0;
  double final_val_err = 0.0;
};

struct GridReport {
  std::vector<GridEntry> entries;
  std::optional<double> best_lr;  // largest stable lr
  std::string summary() const;
};

std::vector<double> log_grid(double lo, double hi, Index points);

/// Runs the config once per grid value (overriding the optimiser lr) and
/// picks the largest stable value; equal values fall back to validation error.
GridReport lr_grid_search(const RunConfig& config, std::span<const double> grid);

/// Throws AllDiverged (listing every outcome) when nothing was stable.
double best_stable_lr(const GridReport& report);

}  // namespace hesslab::autolr
