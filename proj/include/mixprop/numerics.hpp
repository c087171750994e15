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

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace mixprop {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Real roots of a*x^2 + b*x + c, ascending. Falls back to the linear
// equation when |a| < eps * max(|a|, |b|, |c|).
std::vector<double> solve_quadratic(double a, double b, double c, double eps = 1e-10);

struct GoldenResult {
  double argmin = 0.0;
  double value = 0.0;
  double width = 0.0;  // final bracket width
  int iterations = 0;
};

// Golden-section search on [lo, hi]. Assumes unimodality; does not check it.
GoldenResult golden_section_min(const std::function<double(double)>& f, double lo, double hi,
                                double tol);

struct EigenPairs {
  Vector values;   // descending
  Matrix vectors;  // orthonormal columns
  int iterations = 0;
};

// Leading k eigenpairs of a symmetric matrix by algebraic value. The
// largest-magnitude component of every vector is made positive.
EigenPairs sym_eigen_topk(const Matrix& A, int k);

// Solves A x = b with partial-pivot LU. Throws NumericalError("singular system")
// when a pivot falls below 1e-12 * ||A||_inf.
Vector solve_linear(const Matrix& A, const Vector& b);

// Factor once, solve for many right-hand sides.
class LinearSolver {
 public:
  explicit LinearSolver(const Matrix& A);
  Matrix solve(const Matrix& B) const;
  Vector solve(const Vector& b) const;

 private:
  Eigen::PartialPivLU<Matrix> lu_;
};

struct PivotedCholesky {
  Matrix L;                  // A ~= L L^T, one column per pivot
  std::vector<int> pivots;
  double residualTrace = 0;  // trace of A - L L^T
};

// Greedy diagonal-pivoted Cholesky of a PSD matrix. Stops when the largest
// remaining diagonal entry drops below relTol * max(diag A) or at maxRank.
PivotedCholesky pivoted_cholesky(const Matrix& A, double relTol, int maxRank);

// Regularized lower incomplete gamma P(shape, z).
double gamma_p(double shape, double z);

// Upper tail of Gamma(shape, scale) at x, i.e. 1 - P(shape, x / scale).
double gamma_upper_tail(double x, double shape, double scale);

}  // namespace mixprop
