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


// Slow reference implementations used by the unit tests and the acceptance suite.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "mixprop/kerneltest.hpp"
#include "mixprop/mixture.hpp"
#include "mixprop/plugin.hpp"
#include "mixprop/rng.hpp"

namespace oracle {

using mixprop::Matrix;
using mixprop::Vector;

inline double rbf(const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& y, double s) {
  return std::exp(-(x - y).squaredNorm() / (2.0 * s * s));
}

inline Vector block_weights(int n, int np, double alpha) {
  Vector w(n + np);
  for (int i = 0; i < n; ++i) w(i) = alpha / n;
  for (int q = 0; q < np; ++q) w(n + q) = (1.0 - alpha) / np;
  return w;
}

// Squared norm of the weighted cross-covariance embedding, expanded over index pairs.
inline double t_ci(const Matrix& X1, const Matrix& X2, const Vector& w, double s1, double s2) {
  const int M = static_cast<int>(X1.rows());
  Matrix k1(M, M), k2(M, M);
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j) {
      k1(i, j) = rbf(X1.row(i), X1.row(j), s1);
      k2(i, j) = rbf(X2.row(i), X2.row(j), s2);
    }
  double joint = 0.0, cross = 0.0, m1 = 0.0, m2 = 0.0;
  for (int i = 0; i < M; ++i) {
    double a = 0.0, b = 0.0;
    for (int j = 0; j < M; ++j) {
      joint += w(i) * w(j) * k1(i, j) * k2(i, j);
      a += w(j) * k1(i, j);
      b += w(j) * k2(i, j);
      m1 += w(i) * w(j) * k1(i, j);
      m2 += w(i) * w(j) * k2(i, j);
    }
    cross += w(i) * a * b;
  }
  return joint - 2.0 * cross + m1 * m2;
}

// Biased HSIC, trace(K H L H) / m^2.
inline double hsic_biased(const Matrix& K, const Matrix& L) {
  const int m = static_cast<int>(K.rows());
  const Matrix H = Matrix::Identity(m, m) - Matrix::Constant(m, m, 1.0 / m);
  return (K * H * L * H).trace() / (static_cast<double>(m) * m);
}

// <phi_{j1,r1}, phi_{j2,r2}> for the mixed feature a*phi(x_j) + (1-a)*phi(x'_r).
struct Mixed {
  const Matrix& G;
  int n;
  double a;
  double operator()(int j1, int r1, int j2, int r2) const {
    const double b = 1.0 - a;
    return a * a * G(j1, j2) + a * b * G(j1, n + r2) + a * b * G(n + r1, j2) +
           b * b * G(n + r1, n + r2);
  }
};

inline mixprop::NullMoments null_moments(const Matrix& G, double a, int n, int np) {
  const Mixed ip{G, n, a};
  const double M = n + np, nu = M / n, nup = M / np, b = 1.0 - a;
  mixprop::NullMoments out;
  double diagU = 0, allU = 0, diagV = 0, allV = 0;
  for (int i = 0; i < n; ++i) {
    diagU += G(i, i) / n;
    for (int j = 0; j < n; ++j) allU += G(i, j) / (double(n) * n);
  }
  for (int q = 0; q < np; ++q) {
    diagV += G(n + q, n + q) / np;
    for (int r = 0; r < np; ++r) allV += G(n + q, n + r) / (double(np) * np);
  }
  out.mean = nu * a * a * (diagU - allU) + nup * b * b * (diagV - allV);
  for (int i1 = 0; i1 < n; ++i1)
    for (int i2 = 0; i2 < n; ++i2) {
      double e = 0;
      for (int q1 = 0; q1 < np; ++q1)
        for (int q2 = 0; q2 < np; ++q2) e += ip(i1, q1, i2, q2);
      e /= double(np) * np;
      out.sigma20 += e * e / (double(n) * n);
    }
  for (int q1 = 0; q1 < np; ++q1)
    for (int q2 = 0; q2 < np; ++q2) {
      double e = 0;
      for (int i1 = 0; i1 < n; ++i1)
        for (int i2 = 0; i2 < n; ++i2) e += ip(i1, q1, i2, q2);
      e /= double(n) * n;
      out.sigma02 += e * e / (double(np) * np);
    }
  for (int i1 = 0; i1 < n; ++i1)
    for (int q2 = 0; q2 < np; ++q2) {
      double e = 0;
      for (int i2 = 0; i2 < n; ++i2)
        for (int q1 = 0; q1 < np; ++q1) e += ip(i1, q1, i2, q2);
      e /= double(n) * np;
      out.sigma11 += e * e / (double(n) * np);
    }
  out.var = 2 * nu * nu * out.sigma20 + 2 * nup * nup * out.sigma02 + 4 * nu * nup * out.sigma11;
  return out;
}

// Plug-in mean and variance terms from the symmetrized kernels h and h', by direct loops.
inline mixprop::PluginTerms plugin_terms(const Matrix& G, int n, int np, double a,
                                         const Vector& g, double d0, double c0) {
  const Mixed ip{G, n, a};
  const double b = 1.0 - a, M = n + np, nu = M / n, nup = M / np;
  auto hp_pair = [&](int j1, int r1, int j2, int r2) {
    return 2.0 * (a * G(j1, j2) - a * G(j1, n + r2) + b * G(n + r1, j2) - b * G(n + r1, n + r2));
  };
  const int N4 = n * n * np * np;
  std::vector<double> h(N4), hp(N4);
  auto at = [&](int i1, int i2, int q1, int q2) { return ((i1 * n + i2) * np + q1) * np + q2; };
  for (int i1 = 0; i1 < n; ++i1)
    for (int i2 = 0; i2 < n; ++i2)
      for (int q1 = 0; q1 < np; ++q1)
        for (int q2 = 0; q2 < np; ++q2) {
          const int js[2][2] = {{i1, i2}, {i2, i1}};
          const int rs[2][2] = {{q1, q2}, {q2, q1}};
          double s = 0, sp = 0;
          for (const auto& j : js)
            for (const auto& r : rs) {
              s += ip(j[0], r[0], j[1], r[1]);
              sp += hp_pair(j[0], r[0], j[1], r[1]);
            }
          h[at(i1, i2, q1, q2)] = s / 4;
          hp[at(i1, i2, q1, q2)] = sp / 4;
        }

  Matrix Ehq = Matrix::Zero(n, n), Ehi = Matrix::Zero(np, np), Ehx = Matrix::Zero(n, np);
  Vector Hi = Vector::Zero(n), Hq = Vector::Zero(np);
  for (int i1 = 0; i1 < n; ++i1)
    for (int i2 = 0; i2 < n; ++i2)
      for (int q1 = 0; q1 < np; ++q1)
        for (int q2 = 0; q2 < np; ++q2) {
          const double v = h[at(i1, i2, q1, q2)], vp = hp[at(i1, i2, q1, q2)];
          Ehq(i1, i2) += v / (double(np) * np);
          Ehi(q1, q2) += v / (double(n) * n);
          Ehx(i1, q1) += v / (double(n) * np);
          Hi(i1) += vp / (double(n) * np * np);
          Hq(q1) += vp / (double(n) * n * np);
        }

  Matrix l(n, np);
  for (int i = 0; i < n; ++i)
    for (int q = 0; q < np; ++q) l(i, q) = -(a * g(i) + b * g(n + q)) / d0;
  Vector Lq = Vector::Zero(n), Li = Vector::Zero(np);
  for (int i = 0; i < n; ++i)
    for (int q = 0; q < np; ++q) {
      Lq(i) += l(i, q) / np;
      Li(q) += l(i, q) / n;
    }

  auto mean_over = [](auto&& f, int m) {
    double s = 0;
    for (int k = 0; k < m; ++k) s += f(k);
    return s / m;
  };
  const Vector gU = g.head(n), gV = g.tail(np);
  const double vU = mean_over([&](int i) { return gU(i) * gU(i); }, n) - gU.mean() * gU.mean();
  const double vV = mean_over([&](int q) { return gV(q) * gV(q); }, np) - gV.mean() * gV.mean();

  mixprop::PluginTerms t;
  t.d0 = d0;
  t.c0 = c0;
  double diagU = 0, allU = 0, diagV = 0, allV = 0;
  for (int i = 0; i < n; ++i) {
    diagU += G(i, i) / n;
    for (int j = 0; j < n; ++j) allU += G(i, j) / (double(n) * n);
  }
  for (int q = 0; q < np; ++q) {
    diagV += G(n + q, n + q) / np;
    for (int r = 0; r < np; ++r) allV += G(n + q, n + r) / (double(np) * np);
  }
  t.c1 = nu * a * a * (diagU - allU) + nup * b * b * (diagV - allV);
  t.meanSTp = -(2.0 / d0) * (nu * a * mean_over([&](int i) { return gU(i) * Hi(i); }, n) +
                             nup * b * mean_over([&](int q) { return gV(q) * Hq(q); }, np));
  t.meanS2 = (nu * a * a * vU + nup * b * b * vV) / (d0 * d0);
  t.meanHat = t.c1 + t.meanSTp + 0.5 * c0 * t.meanS2;

  const double EHq2 = Ehq.array().square().mean(), EHi2 = Ehi.array().square().mean(),
               EHx2 = Ehx.array().square().mean();
  t.varT = 2 * nu * nu * EHq2 + 2 * nup * nup * EHi2 + 16 * nu * nup * EHx2;
  t.varTKnown = null_moments(G, a, n, np).var;

  const double ELq2 = Lq.array().square().mean(), ELi2 = Li.array().square().mean();
  const double EHi2p = Hi.array().square().mean(), EHq2p = Hq.array().square().mean();
  const double EHL_i = Lq.cwiseProduct(Hi).mean(), EHL_q = Li.cwiseProduct(Hq).mean();
  t.varSTp = 4 * nu * nu * ELq2 * EHi2p + 4 * nu * nup * ELq2 * EHq2p +
             4 * nu * nup * ELi2 * EHi2p + 4 * nup * nup * ELi2 * EHq2p +
             8 * nu * nu * EHL_i * EHL_i + 16 * nu * nup * EHL_i * EHL_q +
             8 * nup * nup * EHL_q * EHL_q - t.meanSTp * t.meanSTp;
  t.varS2 = 3 * nu * nu * ELq2 * ELq2 + 6 * nu * nup * ELq2 * ELi2 + 3 * nup * nup * ELi2 * ELi2 -
            t.meanS2 * t.meanS2;

  double c1 = 0, c2 = 0, c3 = 0, c4 = 0, s1 = 0, s2 = 0, s3 = 0;
  for (int i1 = 0; i1 < n; ++i1)
    for (int i2 = 0; i2 < n; ++i2) {
      c1 += Ehq(i1, i2) * Hi(i1) * Lq(i2) / (double(n) * n);
      s1 += Ehq(i1, i2) * Lq(i1) * Lq(i2) / (double(n) * n);
    }
  for (int i1 = 0; i1 < n; ++i1)
    for (int q1 = 0; q1 < np; ++q1) {
      c2 += Ehx(i1, q1) * Hi(i1) * Li(q1) / (double(n) * np);
      c3 += Ehx(i1, q1) * Hq(q1) * Lq(i1) / (double(n) * np);
      s2 += Ehx(i1, q1) * Lq(i1) * Li(q1) / (double(n) * np);
    }
  for (int q1 = 0; q1 < np; ++q1)
    for (int q2 = 0; q2 < np; ++q2) {
      c4 += Ehi(q1, q2) * Hq(q1) * Li(q2) / (double(np) * np);
      s3 += Ehi(q1, q2) * Li(q1) * Li(q2) / (double(np) * np);
    }
  t.covT_STp = 4 * nu * nu * c1 + 8 * nu * nup * c2 + 8 * nu * nup * c3 + 4 * nup * nup * c4;
  t.covT_S2 = 2 * nu * nu * s1 + 8 * nu * nup * s2 + 2 * nup * nup * s3;
  t.covSTp_S2 = 6 * nu * nu * EHL_i * ELq2 + 6 * nu * nup * EHL_i * ELi2 +
                6 * nu * nup * EHL_q * ELq2 + 6 * nup * nup * EHL_q * ELi2 -
                t.meanSTp * t.meanS2;
  t.varHat = t.varT + t.varSTp + 0.25 * c0 * c0 * t.varS2 +
             2.0 * (t.covT_STp + 0.5 * c0 * t.covT_S2 + 0.5 * c0 * t.covSTp_S2);
  return t;
}

// Random explicit features centered under the signed weights, and their Gram.
inline Matrix centered_feature_gram(int n, int np, int p, double alpha, unsigned seed) {
  mixprop::Rng rng(seed);
  Matrix Phi(n + np, p);
  for (int i = 0; i < Phi.rows(); ++i)
    for (int j = 0; j < p; ++j) Phi(i, j) = rng.normal() + (i < n ? 0.3 : -0.2);
  const Vector w = block_weights(n, np, alpha);
  const Eigen::RowVectorXd mu = w.transpose() * Phi;
  Phi.rowwise() -= mu;
  return Phi * Phi.transpose();
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

// Max residual of a least-squares quartic through (x, y), relative to max |y|.
inline double quartic_residual(const std::vector<double>& x, const std::vector<double>& y) {
  const int m = static_cast<int>(x.size());
  Matrix V(m, 5);
  Vector Y(m);
  for (int i = 0; i < m; ++i) {
    for (int k = 0; k < 5; ++k) V(i, k) = std::pow(x[i], k);
    Y(i) = y[i];
  }
  const Vector c = V.colPivHouseholderQr().solve(Y);
  return (V * c - Y).cwiseAbs().maxCoeff() / Y.cwiseAbs().maxCoeff();
}

}  // namespace oracle
