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

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mixprop/kernels.hpp"
#include "mixprop/mixture.hpp"

namespace mixprop {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  void validate() const;
  bool contains(double x) const { return x >= lo && x <= hi; }
};

// Maps a block of feature rows to a block of moment values. The dot product
// of the two outputs row by row is g12.
using MomentMap = std::function<Matrix(const Matrix&)>;

struct MomentFunctions {
  MomentMap g1;
  MomentMap g2;
  static MomentFunctions identity();
};

struct MomentQuadratic {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double operator()(double alpha) const { return (a * alpha + b) * alpha + c; }
};

struct AlphaEstimate {
  std::string method;  // "CI", "MCI" or "fixed"
  double alphaHat = 0.0;
  Interval searchRange;
  double objectiveAtHat = 0.0;  // squared moment at alphaHat
  std::vector<double> rootsFound;
  std::optional<double> asympVariance;
  double d0Hat = 0.0;
  std::vector<std::string> flags;
  std::vector<std::pair<double, double>> gridProfile;  // (alpha, squared moment)
  int evaluations = 0;
};

struct MomentValues {
  Matrix g1;   // M x p
  Matrix g2;   // M x p
  Vector g12;  // M
};

MomentValues moment_values(const TwoSampleData& data, const FeatureRoles& roles,
                           const MomentFunctions& g);

MomentQuadratic ci_moment_coeffs(const TwoSampleData& data, const FeatureRoles& roles,
                                 const MomentFunctions& g = MomentFunctions::identity());

// g~12 = (g1 - E_w g1) . (g2 - E_w g2) on every pooled row.
Vector ci_centered_moment(const MomentValues& mv, const SignedWeights& w);

AlphaEstimate estimate_alpha_ci(const TwoSampleData& data, const FeatureRoles& roles,
                                const Interval& range,
                                const MomentFunctions& g = MomentFunctions::identity(),
                                const MomentFunctions* gAlt = nullptr);

// Variance of alphaHat: (alpha^2 V_U/n + (1 - alpha)^2 V_U'/n') / d0^2.
double asymptotic_variance(const Vector& gtildeU, const Vector& gtildeUprime, double alphaHat,
                           double d0Hat);

struct MciConfig {
  double lambda = 5e-4;
  KernelSpec kS{3.5};
  double tol = 1e-4;
  int gridPoints = 25;
  KrrRoute route = KrrRoute::Auto;
};

// Evaluates the MCI moment at arbitrary alpha. K_S and its factor are built once.
class MciMoment {
 public:
  MciMoment(const TwoSampleData& data, const FeatureRoles& roles, const MciConfig& cfg,
            const MomentFunctions& g = MomentFunctions::identity());

  struct Eval {
    double m = 0.0;
    Vector r1;  // g1 residuals
    Vector r2;  // g2 residuals
  };

  Eval evaluate(double alpha) const;
  double operator()(double alpha) const { return evaluate(alpha).m; }

  const KrrSystem& system() const { return sys_; }
  int n() const { return n_; }
  int nprime() const { return nprime_; }

 private:
  int n_;
  int nprime_;
  double lambda_;
  Matrix targets_;  // M x 2, columns g1 and g2
  KrrSystem sys_;
};

double mci_moment(const TwoSampleData& data, const FeatureRoles& roles, double alpha,
                  const MciConfig& cfg, const MomentFunctions& g = MomentFunctions::identity());

// Coarse grid, then golden-section refinement inside the best bracket.
AlphaEstimate minimize_on_grid(const std::function<double(double)>& objective,
                               const Interval& range, int gridPoints, double tol);

AlphaEstimate estimate_alpha_mci(const TwoSampleData& data, const FeatureRoles& roles,
                                 const Interval& range, const MciConfig& cfg = {},
                                 const MomentFunctions& g = MomentFunctions::identity());

enum class MpeMethod { CI, MCI, Fixed };

struct SideConfig {
  MpeMethod method = MpeMethod::CI;
  FeatureRoles roles;
  Interval range;
  double fixedValue = 1.0;
  MciConfig mci;
};

struct PriorsResult {
  ClassPriors priors;
  AlphaEstimate plus;
  AlphaEstimate minus;
  std::vector<std::string> flags;
};

AlphaEstimate estimate_side(const TwoSampleData& data, const SideConfig& side);

PriorsResult estimate_class_priors(const TwoSampleData& data, const SideConfig& plus,
                                   const SideConfig& minus);

// Converts alphas to priors, clamping each prior into [0, 1].
PriorsResult priors_from_estimates(const AlphaEstimate& plus, const AlphaEstimate& minus);

Interval default_ci_range_plus();
Interval default_ci_range_minus();
Interval default_mci_range_plus();
Interval default_mci_range_minus();

}  // namespace mixprop
