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

#include <doctest.h>
#include <json.hpp>

#include "../support/cli.hpp"

using nlohmann::json;

TEST_CASE("predict-spike writes the forward law") {
  const auto dir = cli::scratch("cli_predict");
  REQUIRE(cli::run(dir, "predict-spike --law wigner --lambda1 3 --q 0.5 --s2 1") == 0);
  const auto j = json::parse(cli::slurp(dir / "predict_spike.json"));
  CHECK(j["prediction"]["lambda_prime"].get<double>() == doctest::Approx(3.0 + 0.5 / 3.0));
  CHECK(j["prediction"]["regime"] == "separated");

  const auto sweep = cli::scratch("cli_sweep");
  REQUIRE(cli::run(sweep, "predict-spike --lambda1 25 --s2 4 --p 10000 --n 10000 --batches 10,100,1000") == 0);
  const auto csv = cli::slurp(sweep / "predict_sweep.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("usage and domain errors exit with 2") {
  const auto dir = cli::scratch("cli_usage");
  CHECK(cli::run(dir, "predict-spike --q 0.5") == 2);
  CHECK(cli::run(dir, "no-such-command") == 2);
  CHECK(cli::run(dir, "scale-lr --base-lr -1 --batch 10") == 2);
  CHECK(cli::run(dir, "predict-spike --law wigner --lambda1 3 --q 0.5 --s2 1 --config /nonexistent.json") != 0);
}

TEST_CASE("rank-bound and scale-lr") {
  const auto dir = cli::scratch("cli_rank");
  REQUIRE(cli::run(dir, "rank-bound --d-x 1024 --d-y 10 --hidden 13416 --params 1.6e7") == 0);
  const auto j = json::parse(cli::slurp(dir / "rank_bound.json"));
  CHECK(j["bound"] == 577600);
  CHECK(j["degeneracy_floor"].get<double>() == doctest::Approx(0.9639));

  const auto s = cli::scratch("cli_scale");
  REQUIRE(cli::run(s, "scale-lr --rule linear --base-lr 0.01 --base-batch 128 --batch 512") == 0);
  CHECK(cli::slurp(s / "scale_lr.json").find("0.04") != std::string::npos);
}

TEST_CASE("train on a quadratic reports divergence") {
  const auto dir = cli::scratch("cli_train");
  {
    std::ofstream cfg(dir / "run.json");
    cfg << R"({"objective": "quadratic", "eigenvalues": [1, 2], "optimizer": {"lr": 0.5}, "epochs": 5})";
  }
  REQUIRE(cli::run(dir, "train --config '" + (dir / "run.json").string() + "'") == 0);
  CHECK(std::filesystem::exists(dir / "history.csv"));
  CHECK(std::filesystem::exists(dir / "manifest.json"));
  CHECK(cli::run(dir, "train --config '" + (dir / "run.json").string() + "' --lr 2.5") == 1);
}

TEST_CASE("spectrum on a small mixture model") {
  const auto dir = cli::scratch("cli_spectrum");
  REQUIRE(cli::run(dir, "spectrum --classes 3 --dim 4 --per-class 20 --widths 4,6,3 --steps 20 --vectors 2") == 0);
  const auto csv = cli::slurp(dir / "spectrum.csv");
  CHECK(csv.rfind("node,weight\n", 0) == 0);
}
