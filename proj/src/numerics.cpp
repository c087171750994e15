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

#include "mixprop/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mixprop/error.hpp"
#include "mixprop/rng.hpp"

namespace mixprop {

std::vector<double> solve_quadratic(double a, double b, double c, double eps) {
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) {
    throw InvalidArgument("solve_quadratic: non-finite coefficient");
  }
  const double scale = std::max({std::abs(a), std::abs(b), std::abs(c)});
  if (scale == 0.0) throw InvalidArgument("identically zero polynomial");

  std::vector<double> roots;
  if (std::abs(a) < eps * scale) {
    if (b != 0.0) roots.push_back(-c / b);
    return roots;
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return roots;
  const double sq = std::sqrt(disc);
  const double q = -0.5 * (b + std::copysign(sq, b));
  const double r1 = q / a;
  roots.push_back(r1);
  if (disc > 0.0) {
    roots.push_back(q != 0.0 ? c / q : -r1);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

GoldenResult golden_section_min(const std::function<double(double)>& f, double lo, double hi,
                                double tol) {
  if (!(lo < hi)) throw InvalidArgument("golden_section_min: empty bracket");
  if (!(tol > 0.0)) throw InvalidArgument("golden_section_min: tol must be positive");

  auto eval = [&](double x) {
    const double v = f(x);
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os.precision(17);
      os << "golden_section_min: non-finite objective at x=" << x;
      throw NumericalError(os.str());
    }
    return v;
  };

  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = eval(c), fd = eval(d);
  int it = 0;
  while (b - a > tol) {
    ++it;
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = eval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = eval(d);
    }
  }
  GoldenResult r;
  r.iterations = it;
  r.width = b - a;
  const double mid = 0.5 * (a + b);
  const double fm = eval(mid);
  r.argmin = mid;
  r.value = fm;
  if (fc < r.value) {
    r.argmin = c;
    r.value = fc;
  }
  if (fd < r.value) {
    r.argmin = d;
    r.value = fd;
  }
  return r;
}

namespace {

void fix_signs(Matrix& V) {
  for (Eigen::Index j = 0; j < V.cols(); ++j) {
    Eigen::Index imax = 0;
    V.col(j).cwiseAbs().maxCoeff(&imax);
    if (V(imax, j) < 0.0) V.col(j) = -V.col(j);
  }
}

EigenPairs topk_dense(const Matrix& A, int k) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(A);
  if (es.info() != Eigen::Success) throw NumericalError("sym_eigen_topk: dense solver failed");
  const Eigen::Index n = A.rows();
  EigenPairs out;
  out.values.resize(k);
  out.vectors.resize(n, k);
  for (int j = 0; j < k; ++j) {
    out.values(j) = es.eigenvalues()(n - 1 - j);
    out.vectors.col(j) = es.eigenvectors().col(n - 1 - j);
  }
  fix_signs(out.vectors);
  return out;
}

Matrix orthonormalize(const Matrix& Z) {
  Eigen::HouseholderQR<Matrix> qr(Z);
  return qr.householderQ() * Matrix::Identity(Z.rows(), Z.cols());
}

}  // namespace

EigenPairs sym_eigen_topk(const Matrix& A, int k) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n) throw InvalidArgument("sym_eigen_topk: matrix not square");
  if (k < 1 || k > n) throw InvalidArgument("sym_eigen_topk: k out of range");
  if (!A.allFinite()) throw NumericalError("sym_eigen_topk: non-finite entries");

  const Eigen::Index p = std::min<Eigen::Index>(n, k + std::max(8, k));
  if (n <= 256 || 2 * p >= n) return topk_dense(A, k);

  Rng rng(0x6569676eULL);
  Matrix Q(n, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < n; ++i) Q(i, j) = rng.normal();
  Q = orthonormalize(Q);

  const long budget = 100L * n;
  for (long it = 1; it <= budget; ++it) {
    Matrix Z = A * Q;
    Matrix H = Q.transpose() * Z;
    H = 0.5 * (H + H.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(H);
    // Ritz pairs in descending order.
    Vector theta = es.eigenvalues().reverse();
    Matrix U = es.eigenvectors().rowwise().reverse();
    Matrix X = Q * U;
    Matrix AX = Z * U;
    const double normA = std::max(theta.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    bool converged = true;
    for (int j = 0; j < k && converged; ++j) {
      const double res = (AX.col(j) - theta(j) * X.col(j)).norm();
      if (res > 1e-11 * normA) converged = false;
    }
    if (converged) {
      if (theta(p - 1) < 0.0 && -theta(p - 1) >= std::abs(theta(k - 1))) {
        // Strongly indefinite: magnitude ordering can miss algebraic leaders.
        return topk_dense(A, k);
      }
      EigenPairs out;
      out.values = theta.head(k);
      out.vectors = X.leftCols(k);
      out.iterations = static_cast<int>(it);
      fix_signs(out.vectors);
      return out;
    }
    Q = orthonormalize(Z);
  }
  throw NumericalError("sym_eigen_topk: no convergence after " + std::to_string(budget) +
                       " iterations");
}

namespace {

double norm_inf(const Matrix& A) { return A.cwiseAbs().rowwise().sum().maxCoeff(); }

}  // namespace

LinearSolver::LinearSolver(const Matrix& A) {
  if (A.rows() != A.cols()) throw InvalidArgument("solve_linear: matrix not square");
  if (!A.allFinite()) throw NumericalError("solve_linear: non-finite entries");
  const double nrm = A.size() ? norm_inf(A) : 0.0;
  lu_.compute(A);
  const double minPivot = A.size() ? lu_.matrixLU().diagonal().cwiseAbs().minCoeff() : 0.0;
  if (!(nrm > 0.0) || minPivot < 1e-12 * nrm) throw NumericalError("singular system");
}

Matrix LinearSolver::solve(const Matrix& B) const { return lu_.solve(B); }

Vector LinearSolver::solve(const Vector& b) const { return lu_.solve(b); }

Vector solve_linear(const Matrix& A, const Vector& b) {
  if (b.size() != A.rows()) throw InvalidArgument("solve_linear: dimension mismatch");
  return LinearSolver(A).solve(b);
}

PivotedCholesky pivoted_cholesky(const Matrix& A, double relTol, int maxRank) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n) throw InvalidArgument("pivoted_cholesky: matrix not square");
  maxRank = static_cast<int>(std::min<Eigen::Index>(maxRank, n));
  Vector d = A.diagonal();
  const double dmax = n ? d.maxCoeff() : 0.0;
  std::vector<char> used(n, 0);
  Matrix L(n, maxRank);
  PivotedCholesky out;
  int r = 0;
  for (; r < maxRank; ++r) {
    Eigen::Index j = -1;
    double best = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!used[i] && d(i) > best) {
        best = d(i);
        j = i;
      }
    }
    if (j < 0 || best <= relTol * dmax || best <= 0.0) break;
    const double piv = std::sqrt(best);
    Vector col = A.col(j);
    if (r > 0) col.noalias() -= L.leftCols(r) * L.row(j).head(r).transpose();
    col /= piv;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (used[i]) col(i) = 0.0;
    }
    col(j) = piv;
    L.col(r) = col;
    used[j] = 1;
    out.pivots.push_back(static_cast<int>(j));
    d -= col.cwiseAbs2();
    d(j) = 0.0;
  }
  out.L = L.leftCols(r);
  double tr = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (!used[i]) tr += std::max(d(i), 0.0);
  out.residualTrace = tr;
  return out;
}

namespace {

double gamma_series(double s, double z) {
  double ap = s, sum = 1.0 / s, del = sum;
  for (int i = 0; i < 100000; ++i) {
    ap += 1.0;
    del *= z / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-z + s * std::log(z) - std::lgamma(s));
}

// Upper regularized gamma by the modified Lentz continued fraction.
double gamma_cf(double s, double z) {
  const double tiny = 1e-300;
  double b = z + 1.0 - s;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 100000; ++i) {
    const double an = -i * (i - s);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-z + s * std::log(z) - std::lgamma(s)) * h;
}

}  // namespace

double gamma_p(double shape, double z) {
  if (!(shape > 0.0)) throw InvalidArgument("gamma_p: shape must be positive");
  if (std::isnan(z) || z < 0.0) throw InvalidArgument("gamma_p: argument must be >= 0");
  if (z == 0.0) return 0.0;
  if (std::isinf(z)) return 1.0;
  if (z < shape + 1.0) return std::clamp(gamma_series(shape, z), 0.0, 1.0);
  return std::clamp(1.0 - gamma_cf(shape, z), 0.0, 1.0);
}

double gamma_upper_tail(double x, double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0)) {
    throw InvalidArgument("gamma_upper_tail: shape and scale must be positive");
  }
  if (std::isnan(x) || x < 0.0) throw InvalidArgument("gamma_upper_tail: x must be >= 0");
  const double z = x / scale;
  if (z == 0.0) return 1.0;
  if (std::isinf(z)) return 0.0;
  if (z < shape + 1.0) return std::clamp(1.0 - gamma_series(shape, z), 0.0, 1.0);
  return std::clamp(gamma_cf(shape, z), 0.0, 1.0);
}

}  // namespace mixprop
