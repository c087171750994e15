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

#include "mixprop/kerneltest.hpp"

namespace mixprop {

// Mean and variance of M*T at an estimated proportion, with the first and
// second order Taylor corrections for the estimation error.
struct PluginTerms {
  double c1 = 0.0;       // known-proportion mean
  double meanSTp = 0.0;  // M E[S T']
  double meanS2 = 0.0;   // M E[S^2]
  double meanHat = 0.0;

  double varT = 0.0;         // with the 16 nu nu' cross prefactor
  double varTKnown = 0.0;    // known-proportion variance, 4 nu nu' sigma11
  double varSTp = 0.0;
  double varS2 = 0.0;
  double covT_STp = 0.0;
  double covT_S2 = 0.0;
  double covSTp_S2 = 0.0;
  double varHat = 0.0;

  double A = 0.0;  // nu E[Lu^2] + nu' E[Lv^2]
  double B = 0.0;  // nu E[hU^2] + nu' E[hV^2]
  double C = 0.0;  // nu E[Lu hU] + nu' E[Lv hV]
  double d0 = 0.0;
  double c0 = 0.0;
};

// gtilde holds the centered moment on all pooled rows.
PluginTerms plugin_mean_var(const Matrix& G, int n, int nprime, double alpha,
                            const Vector& gtilde, double d0, double c0);

// Five-point second difference; exact for polynomials up to degree five.
double second_derivative_5pt(const std::function<double(double)>& f, double x, double h);
// Three-point central second difference.
double second_derivative_3pt(const std::function<double(double)>& f, double x, double h);

double t_second_derivative(const CiStatistic& st, double alphaHat, double h = 0.25);
double t_second_derivative(const MciStatistic& st, double alphaHat, double h = 0.01);

TestReport run_test_plugin(const TwoSampleData& data, const FeatureRoles& roles, TestKind kind,
                           const TestConfig& cfg = {});

// Plug-in test at a supplied proportion. With skipCorrections the null
// moments are the known-proportion ones.
TestReport run_test_plugin_at(const TwoSampleData& data, const FeatureRoles& roles, TestKind kind,
                              double alphaHat, const TestConfig& cfg = {},
                              bool skipCorrections = false);

}  // namespace mixprop
