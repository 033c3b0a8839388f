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

// Monte-Carlo checks of the spiked-eigenvalue laws against sampled ensembles.

#include <cstdint>
#include <span>
#include <string>

#include "hesslab/rmt.hpp"

namespace hesslab::validate {

struct Stats {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation
};

Stats summarize(std::span<const double> xs);

struct WignerCell {
  Index dim = 1000;
  double lambda = 3.0;  // planted outlier
  double q = 0.5;
  double s2 = 1.0;
  Index trials = 20;
  std::uint64_t seed = 0;
};

struct WignerResult {
  rmt::SpikePrediction predicted;
  Stats top;      // measured top eigenvalue
  Stats overlap;  // measured |<u, phi_1>|^2
  double rel_error = 0.0;
};

/// Samples GOE(sigma^2 = q s2) + lambda u u^T `trials` times.
WignerResult run_wigner_cell(const WignerCell& cell);

struct MpCell {
  Index dim = 2000;
  double beta = 0.5;  // dim / samples
  double lambda = 5.0;
  double sigma2 = 1.0;
  Index trials = 20;
  std::uint64_t seed = 0;
  rmt::WishartConstruction construction = rmt::WishartConstruction::Product;
};

struct MpResult {
  double closed_form = 0.0;   // lambda' via the closed form
  double t_transform = 0.0;   // raw T(1/lambda)
  Stats top;
  double closed_form_rel_error = 0.0;
  double t_transform_rel_error = 0.0;
  rmt::MpRoute selected = rmt::MpRoute::ClosedForm;  // smaller error
};

MpResult run_mp_cell(const MpCell& cell);

}  // namespace hesslab::validate
