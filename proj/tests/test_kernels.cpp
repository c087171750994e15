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

#include "doctest.h"
#include "mixprop/error.hpp"
#include "mixprop/kernels.hpp"
#include "mixprop/rng.hpp"

using namespace mixprop;

namespace {

Matrix normal_rows(int m, int d, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  Matrix X(m, d);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < d; ++j) X(i, j) = scale * rng.normal();
  return X;
}

double krr_objective(const Matrix& K, const Vector& D, const Vector& g, const Vector& w,
                     double lambda) {
  const Vector r = g - K * w;
  return r.dot(D.asDiagonal() * r) + lambda * w.dot(K * w);
}

}  // namespace

TEST_CASE("gram examples") {
  const KernelSpec k{1.3};
  Matrix one(1, 2);
  one << 0.4, -2;
  CHECK(gram(one, k)(0, 0) == 1.0);

  Matrix same(2, 1);
  same << 3, 3;
  CHECK(gram(same, k).isOnes());

  Matrix pair(2, 1);
  pair << 0, 1.3 * std::sqrt(2.0);
  CHECK(gram(pair, k)(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));

  const Matrix K = gram(normal_rows(30, 3, 1), k);
  CHECK(K == K.transpose());
  CHECK(K.diagonal().isOnes());
  CHECK_THROWS_AS(gram(pair, KernelSpec{0.0}), InvalidArgument);
}

TEST_CASE("weighted centering") {
  const auto w = signed_weights(3, 4, 4.0 / 3);
  CHECK(weighted_center(Matrix::Ones(7, 7), w).cwiseAbs().maxCoeff() < 1e-14);

  const Matrix C = weighted_center(Matrix::Identity(2, 2), signed_weights(1, 1, 0.5));
  // H = I - 1 w^T is idempotent here, so H I H^T = H.
  CHECK(C(0, 0) == doctest::Approx(0.5));
  CHECK(C(0, 1) == doctest::Approx(-0.5));
  CHECK(C(1, 1) == doctest::Approx(0.5));

  const Matrix K = gram(normal_rows(7, 2, 2), KernelSpec{1.0});
  const Matrix Kc = weighted_center(K, w);
  CHECK((w.w.transpose() * Kc).cwiseAbs().maxCoeff() < 1e-13);
  CHECK((weighted_center(Kc, w) - Kc).cwiseAbs().maxCoeff() < 1e-10);

  const Matrix H = Matrix::Identity(7, 7) - Vector::Ones(7) * w.w.transpose();
  CHECK((H * K * H.transpose() - Kc).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("KRR closed forms") {
  const Matrix K1 = Matrix::Ones(1, 1);
  const Vector w = ws_krr_fit(K1, Vector::Ones(1), signed_weights(1, 0, 1.0), 1.0);
  CHECK(w(0) == doctest::Approx(0.5));

  const Matrix K = gram(normal_rows(12, 1, 3), KernelSpec{1.0});
  const Vector g = normal_rows(12, 1, 4).col(0);
  const Vector big = ws_krr_fit(K, g, signed_weights(6, 6, 0.4), 1e9);
  CHECK((K * big).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("KRR matches a gradient-descent minimiser in the convex case") {
  const int M = 8;
  const Matrix K = gram(normal_rows(M, 1, 5, 2.0), KernelSpec{0.7});
  const Vector g = normal_rows(M, 1, 6).col(0);
  const auto sw = signed_weights(4, 4, 0.35);
  const double lambda = 0.05;
  const Vector w = ws_krr_fit(K, g, sw, lambda);

  // Gradient descent on the objective, step from the Hessian spectrum.
  const Matrix Hs = 2.0 * (K * sw.w.asDiagonal() * K + lambda * K);
  Eigen::SelfAdjointEigenSolver<Matrix> es(Hs);
  const double step = 1.0 / es.eigenvalues().maxCoeff();
  Vector x = Vector::Zero(M);
  for (int it = 0; it < 400000; ++it) {
    const Vector grad = -2.0 * K * (sw.w.asDiagonal() * (g - K * x)) + 2.0 * lambda * K * x;
    x -= step * grad;
  }
  CHECK((K * x - K * w).cwiseAbs().maxCoeff() < 1e-6);

  Rng rng(7);
  const double f0 = krr_objective(K, sw.w, g, w, lambda);
  for (int t = 0; t < 100; ++t) {
    Vector d(M);
    for (int i = 0; i < M; ++i) d(i) = 1e-3 * rng.normal();
    CHECK(f0 <= krr_objective(K, sw.w, g, w + d, lambda) + 1e-15);
  }
}

TEST_CASE("KRR dense and low-rank routes agree") {
  const Matrix X = normal_rows(300, 1, 8);
  const Matrix K = gram(X, KernelSpec{3.5});
  const Matrix G = normal_rows(300, 3, 9);
  for (double alpha : {4.0 / 3, -1.0 / 3, 0.5}) {
    const auto sw = signed_weights(150, 150, alpha);
    const KrrSystem dense(K, KrrRoute::Dense), low(K, KrrRoute::Auto);
    CHECK(low.low_rank());
    const Matrix a = dense.fitted(G, sw.w, 5e-4);
    const Matrix b = low.fitted(G, sw.w, 5e-4);
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-7 * (1 + a.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("KRR singular system is reported") {
  // D K + lambda I with D = diag(2, -1), K = I and lambda = 1 has a zero pivot.
  const auto sw = signed_weights(1, 1, 2.0);
  CHECK_THROWS_WITH_AS(ws_krr_fit(Matrix::Identity(2, 2), Vector::Ones(2), sw, 1.0),
                       doctest::Contains("perturb lambda"), NumericalError);
}

TEST_CASE("empirical kernel map") {
  Matrix Phi = empirical_kernel_map_topk(Matrix::Identity(3, 3), 3);
  CHECK((Phi * Phi.transpose() - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);

  Vector v(4);
  v << 1, -2, 0.5, 3;
  const Matrix R = v * v.transpose();
  Phi = empirical_kernel_map_topk(R, 1);
  CHECK((Phi * Phi.transpose() - R).cwiseAbs().maxCoeff() < 1e-8);

  const Matrix K = gram(normal_rows(50, 2, 10), KernelSpec{1.0});
  Phi = empirical_kernel_map_topk(K, 5);
  Eigen::SelfAdjointEigenSolver<Matrix> es(K);
  const Matrix E = K - Phi * Phi.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> ee(E);
  const double spec = ee.eigenvalues().cwiseAbs().maxCoeff();
  CHECK(std::abs(spec - es.eigenvalues()(44)) <= 1e-8);

  std::vector<std::string> warn;
  Matrix N = Matrix::Zero(2, 2);
  N(0, 0) = 1;
  N(1, 1) = -1e-3;
  Phi = empirical_kernel_map_topk(N, 2, &warn);
  CHECK(warn.size() == 1);
  CHECK(Phi.col(1).norm() == 0.0);
}

TEST_CASE("residualized feature maps") {
  const Matrix Phi = normal_rows(10, 2, 11);
  const auto sw = signed_weights(5, 5, 0.3);

  const KrrSystem sys(gram(normal_rows(10, 1, 12), KernelSpec{1.0}), KrrRoute::Dense);
  auto r = residualize_map(Phi, sys, sw, 1e10);
  CHECK((r.Phi - Phi).cwiseAbs().maxCoeff() < 1e-9);

  const KrrSystem eye(Matrix::Identity(10, 10), KrrRoute::Dense);
  r = residualize_map(Phi, eye, sw, 1.0);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(r.Phi(i, j) == doctest::Approx(Phi(i, j) / (sw.w(i) + 1.0)));
  CHECK((r.Ktilde - r.Ktilde.transpose()).cwiseAbs().maxCoeff() == 0.0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(r.Ktilde);
  CHECK(es.eigenvalues().minCoeff() >= -1e-10);
}

TEST_CASE("residuals are weighted-orthogonal to the fit as lambda vanishes") {
  const int M = 16;
  const Matrix grid = Vector::LinSpaced(M, 0.0, M - 1.0);
  const KrrSystem sys(gram(grid, KernelSpec{0.6}), KrrRoute::Dense);
  const Matrix Phi = normal_rows(M, 2, 14);
  const auto sw = signed_weights(8, 8, 0.6);
  const auto r = residualize_map(Phi, sys, sw, 1e-8);
  const Matrix fit = Phi - r.Phi;
  const Matrix cross = fit.transpose() * sw.w.asDiagonal() * r.Phi;
  CHECK(cross.cwiseAbs().maxCoeff() <= 1e-6);
}
