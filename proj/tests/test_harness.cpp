// Copyright 2026 The mixprop Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "doctest.h"
#include "mixprop/error.hpp"
#include "mixprop/harness.hpp"
#include "mixprop/rng.hpp"

using namespace mixprop;

namespace {

ExperimentConfig small_table1(int threads) {
  ExperimentConfig c = default_experiment("table1", false);
  c.seed = 11;
  c.trials = 3;
  c.sizes = {300};
  c.poolPerClass = 1500;
  c.threads = threads;
  return c;
}

}  // namespace

TEST_CASE("summarize matches hand values") {
  const SummaryRow r = summarize("s", "m", {0, 1, 1, 0});
  CHECK(r.value == doctest::Approx(0.5));
  CHECK(r.sd == doctest::Approx(std::sqrt(1.0 / 3)));
  CHECK(r.stderror == doctest::Approx(std::sqrt(1.0 / 3) / 2));
  CHECK(r.count == 4);

  const SummaryRow one = summarize("s", "m", {2.5});
  CHECK(one.value == 2.5);
  CHECK(one.stderror == 0.0);

  CHECK_THROWS_AS(summarize("s", "m", {}), InvalidArgument);
}

TEST_CASE("summarize agrees with a two-pass computation") {
  Rng rng(5);
  std::vector<double> v(10);
  for (auto& x : v) x = rng.normal() * 3 + 1;
  double mean = 0;
  for (double x : v) mean += x;
  mean /= v.size();
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const SummaryRow r = summarize("s", "m", v, 2);
  CHECK(r.value == doctest::Approx(mean).epsilon(1e-12));
  CHECK(r.sd == doctest::Approx(std::sqrt(ss / 9)).epsilon(1e-12));
  CHECK(r.failures == 2);
}

TEST_CASE("run_trials keeps trial order and records failures") {
  for (int threads : {1, 3}) {
    const auto recs = run_trials(7, threads, [](int t) {
      if (t == 4) throw NumericalError("boom");
      TrialRecord r;
      r.values = {{"t", double(t)}};
      return r;
    });
    REQUIRE(recs.size() == 7);
    for (int t = 0; t < 7; ++t) {
      CHECK(recs[t].trial == t);
      CHECK(recs[t].ok == (t != 4));
      if (t != 4) CHECK(recs[t].values[0].second == t);
    }
    CHECK(recs[4].error == "boom");
  }
}

TEST_CASE("empirical_quantile interpolates") {
  CHECK(empirical_quantile({3, 1, 2, 4, 5}, 0.5) == 3);
  CHECK(empirical_quantile({0, 10}, 0.25) == doctest::Approx(2.5));
  CHECK(empirical_quantile({7}, 0.95) == 7);
  CHECK_THROWS_AS(empirical_quantile({}, 0.5), InvalidArgument);
}

TEST_CASE("experiments are byte-identical across reruns and thread counts") {
  const ResultsTable a = run_experiment(small_table1(1));
  const ResultsTable b = run_experiment(small_table1(1));
  const ResultsTable c = run_experiment(small_table1(4));
  CHECK(a.to_csv() == b.to_csv());
  CHECK(a.to_csv() == c.to_csv());
  CHECK(a.trials_csv() == c.trials_csv());
  CHECK(a.provenance().dump() == c.provenance().dump());
  REQUIRE(a.find("overall", "abs_err_theta_prime") != nullptr);
  CHECK(a.find("overall", "abs_err_theta_prime")->count == 9);
}

TEST_CASE("provenance config reproduces the results") {
  const ResultsTable a = run_experiment(small_table1(1));
  ExperimentConfig back = experiment_from_json(a.provenance().at("config"));
  back.threads = 2;
  CHECK(back.to_json() == small_table1(1).to_json());
  CHECK(run_experiment(back).to_csv() == a.to_csv());
  CHECK_THROWS_AS(experiment_from_json(nlohmann::json{{"id", "table1"}}), ParseError);
}

TEST_CASE("config hash tracks the configuration") {
  ExperimentConfig c = small_table1(1);
  const std::string h = config_hash(c.to_json());
  CHECK(h.size() == 16);
  CHECK(config_hash(c.to_json()) == h);
  c.seed = 12;
  CHECK(config_hash(c.to_json()) != h);
}

TEST_CASE("unknown experiments are rejected") {
  CHECK_THROWS_AS(default_experiment("table2", false), InvalidArgument);
  ExperimentConfig c = small_table1(1);
  c.trials = 0;
  CHECK_THROWS_AS(run_experiment(c), InvalidArgument);
}

TEST_CASE("JSON reports carry the documented keys") {
  TestReport r;
  r.statistic = 2;
  r.nullMean = 1;
  r.nullVar = 0.5;
  r.level = 0.05;
  r.mode = "CI-known";
  finalize_report(r);
  const auto j = to_json(r);
  for (const char* k : {"statistic", "null_mean", "null_var", "gamma_shape", "gamma_scale",
                        "p_value", "reject", "level", "mode", "alpha_used", "diagnostics"})
    CHECK(j.contains(k));
  CHECK(j["gamma_shape"].get<double>() == doctest::Approx(2.0));

  AlphaEstimate e;
  e.method = "CI";
  e.alphaHat = 0.3;
  const auto je = to_json(e);
  for (const char* k : {"method", "alpha_hat", "search_range", "objective_at_hat", "roots_found",
                        "asymp_variance", "d0_hat", "flags", "evaluations", "grid_profile"})
    CHECK(je.contains(k));
  CHECK(je["asymp_variance"].is_null());
}

TEST_CASE("write_results emits the three files") {
  const ResultsTable a = run_experiment(small_table1(1));
  const std::string dir = "harness_out";
  write_results(a, dir);
  for (const char* suf : {".csv", ".trials.csv", ".json"}) {
    std::FILE* f = std::fopen((dir + "/table1" + suf).c_str(), "rb");
    CHECK(f != nullptr);
    if (f) std::fclose(f);
  }
}
