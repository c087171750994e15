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

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mixprop/kernels.hpp"
#include "mixprop/mixture.hpp"
#include "mixprop/mpe.hpp"

namespace mixprop {

enum class TestKind { CI, MCI };

struct GammaFit {
  bool valid = false;
  double shape = 0.0;
  double scale = 0.0;
  double sourceMean = 0.0;
  double sourceVar = 0.0;
};

GammaFit gamma_fit(double mean, double var);

struct TestReport {
  double statistic = 0.0;  // M * T
  double nullMean = 0.0;
  double nullVar = 0.0;
  GammaFit gamma;
  double pValue = 1.0;
  bool reject = false;
  double level = 0.05;
  std::string mode;  // CI-known, MCI-known, CI-plugin, MCI-plugin
  double alphaUsed = 0.0;
  std::vector<std::pair<std::string, double>> diagnostics;
  std::vector<std::string> flags;

  void set(const std::string& key, double value) { diagnostics.emplace_back(key, value); }
  std::optional<double> get(const std::string& key) const;
};

// Row, column and grand means of the three blocks of a product Gram over
// pooled rows (U block first).
struct BlockMeans {
  Vector rhoU;  // Guu row means
  Vector rhoV;  // Gvv row means
  Vector rU;    // Guv row means, indexed by U rows
  Vector cV;    // Guv column means, indexed by U' rows
  double gUU = 0.0;
  double gVV = 0.0;
  double gUV = 0.0;
};

BlockMeans block_means(const Matrix& G, int n, int nprime);

struct NullMoments {
  double mean = 0.0;
  double var = 0.0;
  double sigma20 = 0.0;
  double sigma02 = 0.0;
  double sigma11 = 0.0;
};

// V-statistic estimates of the asymptotic null mean and variance of M*T.
// nprime = 0 (with alpha = 1) is the labeled screening case.
NullMoments product_gram_null_moments(const Matrix& G, double alpha, int n, int nprime);

struct StatisticValue {
  double statistic = 0.0;  // M * T
  double T = 0.0;
  Matrix G;
};

// Raw Grams of X1 and X2; T(alpha) for any alpha.
class CiStatistic {
 public:
  CiStatistic(const TwoSampleData& data, const FeatureRoles& roles, const KernelSpec& k1,
              const KernelSpec& k2);
  StatisticValue evaluate(double alpha) const;
  double T(double alpha) const;
  int n() const { return n_; }
  int nprime() const { return nprime_; }

 private:
  int n_;
  int nprime_;
  Matrix K1_;
  Matrix K2_;
};

StatisticValue t_ci(const TwoSampleData& data, const FeatureRoles& roles, double alpha,
                    const KernelSpec& k1, const KernelSpec& k2);

// Empirical kernel maps of X1 and X2 are cached; only the residualization
// on X_S depends on alpha.
class MciStatistic {
 public:
  MciStatistic(const TwoSampleData& data, const FeatureRoles& roles, const KernelSpec& k1,
               const KernelSpec& k2, const KernelSpec& kS, double lambda, int kTop = 5,
               KrrRoute route = KrrRoute::Auto);
  StatisticValue evaluate(double alpha) const;
  double T(double alpha) const;
  int n() const { return n_; }
  int nprime() const { return nprime_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  int n_;
  int nprime_;
  double lambda_;
  Matrix Phi1_;
  Matrix Phi2_;
  KrrSystem sys_;
  std::vector<std::string> warnings_;
};

StatisticValue t_mci(const TwoSampleData& data, const FeatureRoles& roles, double alpha,
                     const KernelSpec& k1, const KernelSpec& k2, const KernelSpec& kS,
                     double lambda, int kTop = 5);

struct TestConfig {
  double level = 0.05;
  // CI statistic, both modes.
  KernelSpec ciKernel{2.5};
  // MCI statistic with known proportion.
  KernelSpec mciKernel{3.5};
  double mciLambda = 5e-4;
  int kTop = 5;
  // MCI statistic in plug-in mode.
  KernelSpec pluginMciKernel{2.5};
  double pluginMciLambda = 5e-6;
  // Proportion estimation in plug-in mode.
  Interval ciRange{1.0, 50.0};
  Interval mciRange{1.1, 1.5};
  MciConfig pluginMpe{1e-2, KernelSpec{3.0}, 1e-4, 25, KrrRoute::Auto};
  double c0StepCI = 0.25;
  double c0StepMCI = 0.01;
  KrrRoute route = KrrRoute::Auto;
};

// Turns a statistic and null moments into a report via the gamma fit.
void finalize_report(TestReport& r);

TestReport run_test_known(const TwoSampleData& data, const FeatureRoles& roles, double alpha,
                          TestKind kind, const TestConfig& cfg = {});

}  // namespace mixprop
