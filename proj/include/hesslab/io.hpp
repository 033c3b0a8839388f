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

// File formats. Every table is CSV with a header row; numbers are written
// with 17 significant digits so reruns are byte-identical.

#include <cstdint>
#include <iosfwd>
#include <string>

#include "hesslab/autolr.hpp"
#include "hesslab/lanczos.hpp"
#include "hesslab/nn.hpp"

namespace hesslab::io {

std::string format_double(double x);

/// `node,weight`
void write_spectrum_csv(std::ostream& out, const lanczos::RitzSpectrum& spectrum);
lanczos::RitzSpectrum read_spectrum_csv(std::istream& in);

/// `alpha,beta`; the last row has an empty beta.
void write_tridiagonal_csv(std::ostream& out, const lanczos::TridiagonalFactor& factor);

/// Row-major, no header.
void write_matrix_csv(std::ostream& out, const Matrix& m);

/// `x_0..x_{d-1},label` for classification, `x_0..,y_0..` for regression.
void write_dataset_csv(std::ostream& out, const nn::Dataset& data);
nn::Dataset read_dataset_csv(std::istream& in);

/// `epoch,train_loss,train_err,val_err,alpha,rho`
void write_history_csv(std::ostream& out, const autolr::TrainingHistory& history);
/// `epoch,lambda_top,lambda_bottom,alpha,rho,fallback`
void write_probes_csv(std::ostream& out, const autolr::TrainingHistory& history);
/// `alpha,outcome,diverged_epoch,final_train_loss,final_val_err`
void write_grid_csv(std::ostream& out, const autolr::GridReport& report);

std::string spec_to_json(const nn::MlpSpec& spec);
nn::MlpSpec spec_from_json(const std::string& text);

/// 8-byte magic, little-endian int64 P, then P little-endian float64.
inline constexpr char kParamMagic[8] = {'H', 'L', 'P', 'A', 'R', 'A', 'M', '1'};
void write_params(std::ostream& out, const nn::ParamVector& params);
nn::ParamVector read_params(std::istream& in);

// Path helpers that throw Io on failure.
void save_text(const std::string& path, const std::string& text);
std::string load_text(const std::string& path);

}  // namespace hesslab::io
