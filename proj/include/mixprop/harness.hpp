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

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "mixprop/kerneltest.hpp"
#include "mixprop/mpe.hpp"
#include "mixprop/plugin.hpp"

namespace mixprop {

inline constexpr const char* kVersion = "mixprop 0.1.0";

struct SummaryRow {
  std::string setting;
  std::string metric;
  double value = 0.0;
  double stderror = 0.0;
  double sd = 0.0;
  int count = 0;
  int failures = 0;
};

// Mean, sample standard deviation and standard error of the values.
SummaryRow summarize(const std::string& setting, const std::string& metric,
                     const std::vector<double>& values, int failures = 0);

struct TrialRecord {
  std::string setting;
  int trial = 0;
  bool ok = true;
  std::string error;
  std::vector<std::pair<std::string, double>> values;
};

struct ResultsTable {
  std::string experiment;
  std::string configHash;
  std::uint64_t seed = 0;
  nlohmann::json config;
  std::vector<SummaryRow> rows;
  std::vector<TrialRecord> trials;

  std::string to_csv() const;
  std::string trials_csv() const;
  nlohmann::json provenance() const;
  const SummaryRow* find(const std::string& setting, const std::string& metric) const;
};

struct ExperimentConfig {
  std::string id;
  std::uint64_t seed = 1;
  bool full = false;
  int threads = 1;

  int trials = 10;      // per setting
  int mciTrials = 100;  // MCI part of the test tables
  std::vector<int> sizes;
  std::vector<int> mciSizes;
  std::vector<ClassPriors> priors;
  std::vector<double> sigmaGrid;    // positive-class covariance sigma12
  std::vector<double> thetaPrimes;  // table1
  std::vector<std::string> parts;   // "ci", "mci"
  int poolPerClass = 10000;         // table1 labeled pool
  double cifyFraction = 0.2;
  TestConfig test;
  MciConfig mci;  // MCI proportion estimation

  nlohmann::json to_json() const;
};

// Desk-scale defaults, or the full scale when full is set.
ExperimentConfig default_experiment(const std::string& id, bool full);

// Inverse of ExperimentConfig::to_json.
ExperimentConfig experiment_from_json(const nlohmann::json& j);

std::string config_hash(const nlohmann::json& j);

ResultsTable run_experiment(const ExperimentConfig& cfg);

// Writes <dir>/<id>.csv, <dir>/<id>.trials.csv and <dir>/<id>.json.
void write_results(const ResultsTable& t, const std::string& dir);

// Runs fn(trial) for trial in [0, trials) on up to `threads` workers and
// returns the outcomes in trial order.
std::vector<TrialRecord> run_trials(int trials, int threads,
                                    const std::function<TrialRecord(int)>& fn);

nlohmann::json to_json(const TestReport& r);
nlohmann::json to_json(const AlphaEstimate& e);

// Upper empirical quantile used by the power comparison.
double empirical_quantile(std::vector<double> values, double q);

}  // namespace mixprop
