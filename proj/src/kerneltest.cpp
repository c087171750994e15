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

#include "mixprop/kerneltest.hpp"

#include <algorithm>
#include <cmath>

#include "mixprop/error.hpp"

namespace mixprop {

std::optional<double> TestReport::get(const std::string& key) const {
  for (const auto& [k, v] : diagnostics)
    if (k == key) return v;
  return std::nullopt;
}

GammaFit gamma_fit(double mean, double var) {
  GammaFit g;
  g.sourceMean = mean;
  g.sourceVar = var;
  if (mean > 0.0 && var > 0.0 && std::isfinite(mean) && std::isfinite(var)) {
    g.valid = true;
    g.shape = mean * mean / var;
    g.scale = var / mean;
  }
  return g;
}

BlockMeans block_means(const Matrix& G, int n, int nprime) {
  if (G.rows() != n + nprime || G.cols() != n + nprime) {
    throw InvalidArgument("block_means: Gram size does not match n + n'");
  }
  BlockMeans b;
  b.rhoU = G.topLeftCorner(n, n).rowwise().mean();
  b.gUU = b.rhoU.mean();
  if (nprime > 0) {
    b.rhoV = G.bottomRightCorner(nprime, nprime).rowwise().mean();
    b.rU = G.topRightCorner(n, nprime).rowwise().mean();
    b.cV = G.topRightCorner(n, nprime).colwise().mean().transpose();
    b.gVV = b.rhoV.mean();
    b.gUV = b.rU.mean();
  }
  return b;
}

NullMoments product_gram_null_moments(const Matrix& G, double alpha, int n, int nprime) {
  if (n < 1) throw InvalidArgument("null moments: n must be >= 1");
  if (nprime == 0 && alpha != 1.0) throw InvalidArgument("degenerate mixture");
  const BlockMeans bm = block_means(G, n, nprime);
  const double M = n + nprime;
  const double nu = M / n;
  const double a = alpha;
  const double b = 1.0 - alpha;
  NullMoments out;

  const auto Guu = G.topLeftCorner(n, n);
  out.mean = nu * a * a * (Guu.diagonal().mean() - bm.gUU);

  double s20 = 0.0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      double e = a * a * Guu(i, j);
      if (nprime > 0) e += a * b * (bm.rU(i) + bm.rU(j)) + b * b * bm.gVV;
      s20 += e * e;
    }
  }
  out.sigma20 = s20 / (static_cast<double>(n) * n);
  out.var = 2.0 * nu * nu * out.sigma20;
  if (nprime == 0) return out;

  const double nup = M / nprime;
  const auto Gvv = G.bottomRightCorner(nprime, nprime);
  const auto Guv = G.topRightCorner(n, nprime);
  out.mean += nup * b * b * (Gvv.diagonal().mean() - bm.gVV);

  double s02 = 0.0;
  for (int q2 = 0; q2 < nprime; ++q2) {
    for (int q1 = 0; q1 < nprime; ++q1) {
      const double e = a * a * bm.gUU + a * b * (bm.cV(q1) + bm.cV(q2)) + b * b * Gvv(q1, q2);
      s02 += e * e;
    }
  }
  out.sigma02 = s02 / (static_cast<double>(nprime) * nprime);

  double s11 = 0.0;
  for (int q = 0; q < nprime; ++q) {
    for (int i = 0; i < n; ++i) {
      const double e = a * a * bm.rhoU(i) + a * b * (Guv(i, q) + bm.gUV) + b * b * bm.rhoV(q);
      s11 += e * e;
    }
  }
  out.sigma11 = s11 / (static_cast<double>(n) * nprime);
  out.var += 2.0 * nup * nup * out.sigma02 + 4.0 * nu * nup * out.sigma11;
  return out;
}

CiStatistic::CiStatistic(const TwoSampleData& data, const FeatureRoles& roles, const KernelSpec& k1,
                         const KernelSpec& k2)
    : n_(data.n()), nprime_(data.nprime()) {
  roles.validate(data.dims());
  K1_ = gram(data.pooled(roles.idx1), k1);
  K2_ = gram(data.pooled(roles.idx2), k2);
}

StatisticValue CiStatistic::evaluate(double alpha) const {
  const SignedWeights w = signed_weights(n_, nprime_, alpha);
  StatisticValue v;
  v.G = weighted_center(K1_, w).cwiseProduct(weighted_center(K2_, w));
  v.T = w.w.dot(v.G * w.w);
  v.statistic = (n_ + nprime_) * v.T;
  return v;
}

double CiStatistic::T(double alpha) const { return evaluate(alpha).T; }

StatisticValue t_ci(const TwoSampleData& data, const FeatureRoles& roles, double alpha,
                    const KernelSpec& k1, const KernelSpec& k2) {
  return CiStatistic(data, roles, k1, k2).evaluate(alpha);
}

namespace {

Matrix conditioning_gram(const TwoSampleData& data, const FeatureRoles& roles,
                         const KernelSpec& kS) {
  roles.validate(data.dims());
  if (roles.idxS.empty()) throw InvalidArgument("MCI test needs a non-empty xs role");
  return gram(data.pooled(roles.idxS), kS);
}

}  // namespace

MciStatistic::MciStatistic(const TwoSampleData& data, const FeatureRoles& roles,
                           const KernelSpec& k1, const KernelSpec& k2, const KernelSpec& kS,
                           double lambda, int kTop, KrrRoute route)
    : n_(data.n()),
      nprime_(data.nprime()),
      lambda_(lambda),
      sys_(conditioning_gram(data, roles, kS), route) {
  if (!(lambda > 0.0)) throw InvalidArgument("MCI lambda must be positive");
  const int k = std::min(kTop, data.M());
  Phi1_ = empirical_kernel_map_topk(gram(data.pooled(roles.idx1), k1), k, &warnings_);
  Phi2_ = empirical_kernel_map_topk(gram(data.pooled(roles.idx2), k2), k, &warnings_);
}

StatisticValue MciStatistic::evaluate(double alpha) const {
  const SignedWeights w = signed_weights(n_, nprime_, alpha);
  const ResidualMap r1 = residualize_map(Phi1_, sys_, w, lambda_);
  const ResidualMap r2 = residualize_map(Phi2_, sys_, w, lambda_);
  StatisticValue v;
  v.G = r1.Ktilde.cwiseProduct(sys_.K()).cwiseProduct(r2.Ktilde);
  v.T = w.w.dot(v.G * w.w);
  v.statistic = (n_ + nprime_) * v.T;
  return v;
}

double MciStatistic::T(double alpha) const { return evaluate(alpha).T; }

StatisticValue t_mci(const TwoSampleData& data, const FeatureRoles& roles, double alpha,
                     const KernelSpec& k1, const KernelSpec& k2, const KernelSpec& kS,
                     double lambda, int kTop) {
  return MciStatistic(data, roles, k1, k2, kS, lambda, kTop).evaluate(alpha);
}

void finalize_report(TestReport& r) {
  r.gamma = gamma_fit(r.nullMean, r.nullVar);
  if (r.gamma.valid && std::isfinite(r.statistic)) {
    r.pValue = gamma_upper_tail(std::max(r.statistic, 0.0), r.gamma.shape, r.gamma.scale);
  } else {
    r.pValue = 1.0;
    r.flags.push_back("gamma-degenerate");
  }
  r.reject = r.pValue < r.level;
}

TestReport run_test_known(const TwoSampleData& data, const FeatureRoles& roles, double alpha,
                          TestKind kind, const TestConfig& cfg) {
  data.validate();
  TestReport r;
  r.level = cfg.level;
  r.alphaUsed = alpha;
  StatisticValue sv;
  if (kind == TestKind::CI) {
    r.mode = "CI-known";
    sv = t_ci(data, roles, alpha, cfg.ciKernel, cfg.ciKernel);
  } else {
    r.mode = "MCI-known";
    MciStatistic st(data, roles, cfg.mciKernel, cfg.mciKernel, cfg.mciKernel, cfg.mciLambda,
                    cfg.kTop, cfg.route);
    for (const auto& wmsg : st.warnings()) r.flags.push_back(wmsg);
    sv = st.evaluate(alpha);
  }
  const NullMoments nm = product_gram_null_moments(sv.G, alpha, data.n(), data.nprime());
  r.statistic = sv.statistic;
  r.nullMean = nm.mean;
  r.nullVar = nm.var;
  r.set("sigma20", nm.sigma20);
  r.set("sigma02", nm.sigma02);
  r.set("sigma11", nm.sigma11);
  finalize_report(r);
  return r;
}

}  // namespace mixprop
