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

#ifndef HESSLAB_HESSLAB_H_
#define HESSLAB_HESSLAB_H_

/* C interface to libhesslab.
 *
 * Every function returns an hl_status. On failure the message of the last
 * error on the calling thread is available from hl_last_error(). Objects are
 * opaque handles released with the matching *_free function. Strings returned
 * through char** out-parameters are released with hl_string_free.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define HL_API __declspec(dllexport)
#elif defined(HL_BUILDING_LIBRARY)
#define HL_API __attribute__((visibility("default")))
#else
#define HL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hl_status {
  HL_OK = 0,
  HL_ERR_DOMAIN = 1,
  HL_ERR_NUMERIC = 2,
  HL_ERR_REGIME = 3,
  HL_ERR_NOT_INVERTIBLE = 4,
  HL_ERR_FILTER_EMPTY = 5,
  HL_ERR_ALL_DIVERGED = 6,
  HL_ERR_IO = 7,
  HL_ERR_INVALID_ARGUMENT = 8,
  HL_ERR_INTERNAL = 99
} hl_status;

typedef enum hl_law { HL_LAW_WIGNER = 0, HL_LAW_MP = 1 } hl_law;
typedef enum hl_tail { HL_TAIL_TOP = 0, HL_TAIL_BOTTOM = 1 } hl_tail;
typedef enum hl_mp_route { HL_MP_CLOSED_FORM = 0, HL_MP_T_TRANSFORM = 1 } hl_mp_route;
typedef enum hl_regime { HL_REGIME_SEPARATED = 0, HL_REGIME_BULK_ABSORBED = 1 } hl_regime;
typedef enum hl_rule { HL_RULE_LINEAR_SGD = 0, HL_RULE_SQRT_ADAPTIVE = 1 } hl_rule;
typedef enum hl_curvature { HL_CURVATURE_HESSIAN = 0, HL_CURVATURE_GGN = 1 } hl_curvature;
typedef enum hl_wishart { HL_WISHART_PRODUCT = 0, HL_WISHART_ADDITIVE = 1 } hl_wishart;

typedef struct hl_spike {
  double lambda_prime;
  double overlap_sq; /* NaN when the route does not define it */
  hl_regime regime;
} hl_spike;

typedef struct hl_dataset hl_dataset;
typedef struct hl_model hl_model;
typedef struct hl_spectrum hl_spectrum;
typedef struct hl_history hl_history;
typedef struct hl_grid hl_grid;

HL_API const char* hl_version(void);
HL_API const char* hl_last_error(void);
HL_API void hl_string_free(char* s);

/* Spiked random-matrix laws. Pass dataset = 0 for an infinite dataset. */
HL_API hl_status hl_effective_batch(int64_t batch, int64_t dataset, double* out);
HL_API hl_status hl_wigner_spike(double lambda, double q, double s2, hl_tail tail, hl_spike* out);
HL_API hl_status hl_mp_spike(double lambda, double beta, double sigma2, hl_mp_route route, hl_spike* out);
HL_API hl_status hl_invert_spike(double observed, hl_law law, double sigma2, double beta, double* out);
HL_API hl_status hl_semicircle_density(double lambda, double sigma, double* out);
HL_API hl_status hl_mp_density(double y, double sigma2, double beta, double* out);
HL_API hl_status hl_rank_bound(int64_t d_x, int64_t d_y, const int64_t* hidden, size_t layers, int64_t params,
                               int64_t* bound, double* degeneracy_floor);

/* Learning-rate scaling. threshold_batch <= 0 disables the cap. */
HL_API hl_status hl_predict_batch_lambda(double lambda_full, double s2, int64_t params, int64_t batch,
                                         int64_t dataset, hl_law law, hl_spike* out);
HL_API hl_status hl_scale_lr(hl_rule rule, double base_lr, int64_t base_batch, double threshold_batch,
                             int64_t batch, double* out);
HL_API hl_status hl_threshold_batch(double lambda_full, double s2, int64_t params, int64_t dataset, double* b_eff,
                                    double* batch);
HL_API hl_status hl_max_lr_sgd(double lambda_batch, double* out);
HL_API hl_status hl_adaptive_max_lr(double kappa, double s2, int64_t params, double b_eff, double* out);

/* Monte-Carlo cells. */
HL_API hl_status hl_validate_wigner_cell(int64_t dim, double lambda, double q, double s2, int64_t trials,
                                         uint64_t seed, double* predicted, double* top_mean, double* top_std,
                                         double* overlap_mean);
HL_API hl_status hl_validate_mp_cell(int64_t dim, double beta, double lambda, double sigma2, int64_t trials,
                                     uint64_t seed, hl_wishart construction, double* closed_form,
                                     double* t_transform, double* top_mean, double* top_std);
HL_API hl_status hl_sample_spiked_goe_csv(int64_t dim, double sigma, double lambda, uint64_t seed, const char* path);

/* Datasets. */
HL_API hl_status hl_dataset_gmm(int classes, int64_t dim, int64_t per_class, double separation, uint64_t seed,
                                hl_dataset** out);
HL_API hl_status hl_dataset_load_csv(const char* path, hl_dataset** out);
HL_API hl_status hl_dataset_save_csv(const hl_dataset* data, const char* path);
HL_API hl_status hl_dataset_size(const hl_dataset* data, int64_t* rows, int64_t* dim);
HL_API void hl_dataset_free(hl_dataset* data);

/* Models: layer widths [d_x, ..., d_y]; loss 0 = cross-entropy, 1 = squared error. */
HL_API hl_status hl_model_create(const int64_t* widths, size_t count, int loss, uint64_t seed, double init_scale,
                                 hl_model** out);
HL_API hl_status hl_model_load(const char* spec_path, const char* params_path, hl_model** out);
HL_API hl_status hl_model_save(const hl_model* model, const char* spec_path, const char* params_path);
HL_API hl_status hl_model_param_count(const hl_model* model, int64_t* out);
HL_API hl_status hl_model_set_params(hl_model* model, const double* params, size_t count);
HL_API hl_status hl_model_get_params(const hl_model* model, double* params, size_t count);
HL_API void hl_model_free(hl_model* model);

/* Spectral estimation. batch <= 0 uses the whole dataset. */
HL_API hl_status hl_slq(const hl_model* model, const hl_dataset* data, hl_curvature curvature, int64_t batch,
                        int64_t steps, int64_t vectors, uint64_t seed, hl_spectrum** out);
HL_API hl_status hl_spectrum_size(const hl_spectrum* s, size_t* out);
HL_API hl_status hl_spectrum_get(const hl_spectrum* s, double* nodes, double* weights, size_t count);
HL_API hl_status hl_spectrum_save_csv(const hl_spectrum* s, const char* path);
HL_API void hl_spectrum_free(hl_spectrum* s);

/* Per-sample curvature variance along random unit probes. */
HL_API hl_status hl_hessian_variance(const hl_model* model, const hl_dataset* data, hl_curvature curvature,
                                     int64_t probes, uint64_t seed, double* normalized, double* unnormalized,
                                     double* s2);
/* CurvatureReport as a JSON document. */
HL_API hl_status hl_curvature_report(const hl_model* model, const hl_dataset* data, hl_curvature curvature,
                                     hl_law law, int64_t batch, int64_t batches, int64_t steps, int64_t probes,
                                     uint64_t seed, char** json_out);

/* Training from a JSON run config. */
HL_API hl_status hl_train(const char* config_json, hl_history** out);
HL_API hl_status hl_history_diverged(const hl_history* h, int* diverged, int64_t* epoch);
HL_API hl_status hl_history_save_csv(const hl_history* h, const char* path);
HL_API hl_status hl_history_save_probes_csv(const hl_history* h, const char* path);
HL_API hl_status hl_history_save_adam_eta_csv(const hl_history* h, const char* path);
HL_API hl_status hl_history_save_params(const hl_history* h, const char* path);
HL_API hl_status hl_history_summary(const hl_history* h, char** json_out);
HL_API void hl_history_free(hl_history* h);

HL_API hl_status hl_lr_grid(const char* config_json, const double* grid, size_t count, hl_grid** out);
HL_API hl_status hl_grid_best(const hl_grid* g, double* best_lr);
HL_API hl_status hl_grid_save_csv(const hl_grid* g, const char* path);
HL_API void hl_grid_free(hl_grid* g);

/* Normalised run config (defaults filled in) as JSON. */
HL_API hl_status hl_config_normalize(const char* config_json, char** json_out);

#ifdef __cplusplus
}
#endif

#endif /* HESSLAB_HESSLAB_H_ */
