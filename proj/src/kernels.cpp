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

#include "mixprop/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mixprop/error.hpp"

namespace mixprop {

void KernelSpec::validate() const {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw InvalidArgument("kernel bandwidth must be finite and positive");
  }
}

Matrix gram(const Matrix& rows, const KernelSpec& spec) {
  spec.validate();
  const Eigen::Index m = rows.rows();
  const Eigen::Index p = rows.cols();
  if (p < 1) throw InvalidArgument("gram: no feature columns");
  const double inv = 1.0 / (2.0 * spec.bandwidth * spec.bandwidth);
  Matrix K(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    K(j, j) = 1.0;
    for (Eigen::Index i = j + 1; i < m; ++i) {
      double d2 = 0.0;
      for (Eigen::Index c = 0; c < p; ++c) {
        const double t = rows(i, c) - rows(j, c);
        d2 += t * t;
      }
      const double v = std::exp(-d2 * inv);
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return K;
}

Matrix weighted_center(const Matrix& K, const Vector& w) {
  if (K.rows() != K.cols() || K.rows() != w.size()) {
    throw InvalidArgument("weighted_center: dimension mismatch");
  }
  const Vector colTerm = K * w;
  const Eigen::RowVectorXd rowTerm = w.transpose() * K;
  const double s = w.dot(colTerm);
  Matrix out = K;
  out.rowwise() -= rowTerm;
  out.colwise() -= colTerm;
  out.array() += s;
  return out;
}

namespace {

[[noreturn]] void krr_singular() {
  throw NumericalError("indefinite KRR system singular; perturb lambda");
}

}  // namespace

KrrSystem::KrrSystem(Matrix KS, KrrRoute route, double lowRankTol, int maxRank) : K_(std::move(KS)) {
  if (K_.rows() != K_.cols()) throw InvalidArgument("KrrSystem: K_S not square");
  if (route == KrrRoute::Dense) return;
  const int m = static_cast<int>(K_.rows());
  const int cap = route == KrrRoute::LowRank ? m : std::min(maxRank, m);
  PivotedCholesky pc = pivoted_cholesky(K_, lowRankTol, cap);
  const int r = static_cast<int>(pc.L.cols());
  if (route == KrrRoute::LowRank || (r < cap && 2 * r < m)) {
    L_ = std::move(pc.L);
    lowRank_ = true;
  }
}

Matrix KrrSystem::weights(const Matrix& G, const Vector& w, double lambda) const {
  if (!(lambda > 0.0)) throw InvalidArgument("KRR: lambda must be positive");
  if (G.rows() != K_.rows() || w.size() != K_.rows()) throw InvalidArgument("KRR: dimension mismatch");
  const Matrix DG = w.asDiagonal() * G;
  if (!lowRank_) {
    Matrix A = w.asDiagonal() * K_;
    A.diagonal().array() += lambda;
    try {
      return LinearSolver(A).solve(DG);
    } catch (const NumericalError&) {
      krr_singular();
    }
  }
  // Woodbury: (D L L^T + lambda I)^{-1} = (I - D L C^{-1} L^T) / lambda.
  const Matrix DL = w.asDiagonal() * L_;
  Matrix C = L_.transpose() * DL;
  C.diagonal().array() += lambda;
  Matrix inner;
  try {
    inner = LinearSolver(C).solve(Matrix(L_.transpose() * DG));
  } catch (const NumericalError&) {
    krr_singular();
  }
  return (DG - DL * inner) / lambda;
}

Matrix KrrSystem::fitted(const Matrix& G, const Vector& w, double lambda) const {
  if (!lowRank_) return K_ * weights(G, w, lambda);
  if (!(lambda > 0.0)) throw InvalidArgument("KRR: lambda must be positive");
  if (G.rows() != K_.rows() || w.size() != K_.rows()) throw InvalidArgument("KRR: dimension mismatch");
  // K W = L C^{-1} L^T D G, avoiding the 1/lambda cancellation.
  Matrix C = L_.transpose() * (w.asDiagonal() * L_);
  C.diagonal().array() += lambda;
  try {
    return L_ * LinearSolver(C).solve(Matrix(L_.transpose() * (w.asDiagonal() * G)));
  } catch (const NumericalError&) {
    krr_singular();
  }
}

Vector ws_krr_fit(const Matrix& KS, const Vector& target, const SignedWeights& w, double lambda,
                  KrrRoute route) {
  if (target.size() != KS.rows()) throw InvalidArgument("ws_krr_fit: target length mismatch");
  KrrSystem sys(KS, route);
  return sys.weights(Matrix(target), w.w, lambda).col(0);
}

Matrix empirical_kernel_map_topk(const Matrix& K, int k, std::vector<std::string>* warnings) {
  EigenPairs ep = sym_eigen_topk(K, k);
  Matrix Phi = ep.vectors;
  for (int j = 0; j < k; ++j) {
    double lam = ep.values(j);
    if (lam < 0.0) {
      if (lam < -1e-8 && warnings) {
        std::ostringstream os;
        os << "clipped negative eigenvalue " << lam << " at index " << j;
        warnings->push_back(os.str());
      }
      lam = 0.0;
    }
    Phi.col(j) *= std::sqrt(lam);
  }
  return Phi;
}

ResidualMap residualize_map(const Matrix& Phi, const KrrSystem& sys, const SignedWeights& w,
                            double lambda) {
  ResidualMap r;
  r.Phi = Phi - sys.fitted(Phi, w.w, lambda);
  r.Ktilde = r.Phi * r.Phi.transpose();
  return r;
}

}  // namespace mixprop
