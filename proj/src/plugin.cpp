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

#include "mixprop/plugin.hpp"

#include <cmath>

#include "mixprop/error.hpp"

namespace mixprop {

PluginTerms plugin_mean_var(const Matrix& G, int n, int nprime, double alpha,
                            const Vector& gtilde, double d0, double c0) {
  if (n < 1 || nprime < 1) throw InvalidArgument("plug-in moments need both samples");
  if (gtilde.size() != n + nprime) throw InvalidArgument("plug-in moments: gtilde length mismatch");
  if (!(std::abs(d0) >= 1e-10)) throw NumericalError("vanishing moment derivative");

  const BlockMeans bm = block_means(G, n, nprime);
  const double M = n + nprime;
  const double nu = M / n;
  const double nup = M / nprime;
  const double a = alpha;
  const double b = 1.0 - alpha;
  const auto Guu = G.topLeftCorner(n, n);
  const auto Gvv = G.bottomRightCorner(nprime, nprime);
  const auto Guv = G.topRightCorner(n, nprime);
  const Vector gU = gtilde.head(n);
  const Vector gV = gtilde.tail(nprime);

  const Vector hU = (-bm.rU).array() + bm.gUV;
  const Vector hV = bm.cV.array() - bm.gUV;
  const Vector u = -a * gU / d0;
  const Vector v = -b * gV / d0;
  const Vector Lu = u.array() + v.mean();
  const Vector Lv = v.array() + u.mean();

  auto variance = [](const Vector& x) { return (x.array() - x.mean()).square().mean(); };

  PluginTerms t;
  t.d0 = d0;
  t.c0 = c0;
  const NullMoments known = product_gram_null_moments(G, alpha, n, nprime);
  t.c1 = known.mean;
  t.varTKnown = known.var;
  t.meanSTp = -(2.0 / d0) * (nu * a * gU.dot(hU) / n + nup * b * gV.dot(hV) / nprime);
  t.meanS2 = (nu * a * a * variance(gU) + nup * b * b * variance(gV)) / (d0 * d0);
  t.meanHat = t.c1 + t.meanSTp + 0.5 * c0 * t.meanS2;

  t.A = nu * Lu.squaredNorm() / n + nup * Lv.squaredNorm() / nprime;
  t.B = nu * hU.squaredNorm() / n + nup * hV.squaredNorm() / nprime;
  t.C = nu * Lu.dot(hU) / n + nup * Lv.dot(hV) / nprime;

  const double nn = static_cast<double>(n) * n;
  const double qq = static_cast<double>(nprime) * nprime;
  const double nq = static_cast<double>(n) * nprime;

  // U x U block.
  double eq2 = 0.0, eqHL = 0.0, eqLL = 0.0;
  for (int i2 = 0; i2 < n; ++i2) {
    for (int i1 = 0; i1 < n; ++i1) {
      const double e = a * a * Guu(i1, i2) + a * b * (bm.rU(i1) + bm.rU(i2)) + b * b * bm.gVV;
      eq2 += e * e;
      eqHL += e * hU(i1) * Lu(i2);
      eqLL += e * Lu(i1) * Lu(i2);
    }
  }
  // U' x U' block.
  double ei2 = 0.0, eiHL = 0.0, eiLL = 0.0;
  for (int q2 = 0; q2 < nprime; ++q2) {
    for (int q1 = 0; q1 < nprime; ++q1) {
      const double e = a * a * bm.gUU + a * b * (bm.cV(q1) + bm.cV(q2)) + b * b * Gvv(q1, q2);
      ei2 += e * e;
      eiHL += e * hV(q1) * Lv(q2);
      eiLL += e * Lv(q1) * Lv(q2);
    }
  }
  // Cross block.
  double eiq2 = 0.0, eiqHuLv = 0.0, eiqHvLu = 0.0, eiqLL = 0.0;
  for (int q = 0; q < nprime; ++q) {
    for (int i = 0; i < n; ++i) {
      const double e =
          0.5 * (a * a * bm.rhoU(i) + a * b * (Guv(i, q) + bm.gUV) + b * b * bm.rhoV(q));
      eiq2 += e * e;
      eiqHuLv += e * hU(i) * Lv(q);
      eiqHvLu += e * hV(q) * Lu(i);
      eiqLL += e * Lu(i) * Lv(q);
    }
  }
  eq2 /= nn;
  eqHL /= nn;
  eqLL /= nn;
  ei2 /= qq;
  eiHL /= qq;
  eiLL /= qq;
  eiq2 /= nq;
  eiqHuLv /= nq;
  eiqHvLu /= nq;
  eiqLL /= nq;

  t.varT = 2.0 * nu * nu * eq2 + 2.0 * nup * nup * ei2 + 16.0 * nu * nup * eiq2;
  t.varSTp = 4.0 * t.A * t.B + 8.0 * t.C * t.C - t.meanSTp * t.meanSTp;
  t.varS2 = 3.0 * t.A * t.A - t.meanS2 * t.meanS2;
  t.covT_STp = 4.0 * nu * nu * eqHL + 8.0 * nu * nup * eiqHuLv + 8.0 * nu * nup * eiqHvLu +
               4.0 * nup * nup * eiHL;
  t.covT_S2 = 2.0 * nu * nu * eqLL + 8.0 * nu * nup * eiqLL + 2.0 * nup * nup * eiLL;
  t.covSTp_S2 = 6.0 * t.C * t.A - t.meanSTp * t.meanS2;
  t.varHat = t.varT + t.varSTp + 0.25 * c0 * c0 * t.varS2 +
             2.0 * (t.covT_STp + 0.5 * c0 * t.covT_S2 + 0.5 * c0 * t.covSTp_S2);
  return t;
}

double second_derivative_5pt(const std::function<double(double)>& f, double x, double h) {
  const double fm2 = f(x - 2 * h), fm1 = f(x - h), f0 = f(x), f1 = f(x + h), f2 = f(x + 2 * h);
  const double d = (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * f1 - f2) / (12.0 * h * h);
  if (!std::isfinite(d)) throw NumericalError("second derivative: non-finite evaluation");
  return d;
}

double second_derivative_3pt(const std::function<double(double)>& f, double x, double h) {
  const double d = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
  if (!std::isfinite(d)) throw NumericalError("second derivative: non-finite evaluation");
  return d;
}

double t_second_derivative(const CiStatistic& st, double alphaHat, double h) {
  return second_derivative_5pt([&](double a) { return st.T(a); }, alphaHat, h);
}

double t_second_derivative(const MciStatistic& st, double alphaHat, double h) {
  return second_derivative_3pt([&](double a) { return st.T(a); }, alphaHat, h);
}

namespace {

void add_terms(TestReport& r, const PluginTerms& t) {
  r.set("alpha_hat", r.alphaUsed);
  r.set("d0_hat", t.d0);
  r.set("c0_hat", t.c0);
  r.set("c1", t.c1);
  r.set("mean_s_tprime", t.meanSTp);
  r.set("mean_s2", t.meanS2);
  r.set("var_t", t.varT);
  r.set("var_t_known", t.varTKnown);
  r.set("var_s_tprime", t.varSTp);
  r.set("var_s2", t.varS2);
  r.set("cov_t_s_tprime", t.covT_STp);
  r.set("cov_t_s2", t.covT_S2);
  r.set("cov_s_tprime_s2", t.covSTp_S2);
}

struct PluginPieces {
  StatisticValue sv;
  Vector gtilde;
  double d0 = 0.0;
  double c0 = 0.0;
};

PluginPieces ci_pieces(const TwoSampleData& data, const FeatureRoles& roles, double alphaHat,
                       const TestConfig& cfg) {
  PluginPieces p;
  CiStatistic st(data, roles, cfg.ciKernel, cfg.ciKernel);
  p.sv = st.evaluate(alphaHat);
  p.c0 = t_second_derivative(st, alphaHat, cfg.c0StepCI);
  const MomentValues mv = moment_values(data, roles, MomentFunctions::identity());
  const MomentQuadratic q = ci_moment_coeffs(data, roles);
  p.gtilde = ci_centered_moment(mv, signed_weights(data.n(), data.nprime(), alphaHat));
  p.d0 = 2.0 * q.a * alphaHat + q.b;
  return p;
}

PluginPieces mci_pieces(const TwoSampleData& data, const FeatureRoles& roles, double alphaHat,
                        const TestConfig& cfg, std::vector<std::string>& flags) {
  PluginPieces p;
  const KernelSpec& k = cfg.pluginMciKernel;
  MciStatistic st(data, roles, k, k, k, cfg.pluginMciLambda, cfg.kTop, cfg.route);
  for (const auto& w : st.warnings()) flags.push_back(w);
  p.sv = st.evaluate(alphaHat);
  p.c0 = t_second_derivative(st, alphaHat, cfg.c0StepMCI);
  const MciMoment mom(data, roles, cfg.pluginMpe);
  const MciMoment::Eval e = mom.evaluate(alphaHat);
  p.gtilde = e.r1.cwiseProduct(e.r2);
  p.d0 = p.gtilde.head(data.n()).mean() - p.gtilde.tail(data.nprime()).mean();
  return p;
}

}  // namespace

TestReport run_test_plugin_at(const TwoSampleData& data, const FeatureRoles& roles, TestKind kind,
                              double alphaHat, const TestConfig& cfg, bool skipCorrections) {
  data.validate();
  TestReport r;
  r.level = cfg.level;
  r.alphaUsed = alphaHat;
  r.mode = kind == TestKind::CI ? "CI-plugin" : "MCI-plugin";
  PluginPieces p = kind == TestKind::CI ? ci_pieces(data, roles, alphaHat, cfg)
                                        : mci_pieces(data, roles, alphaHat, cfg, r.flags);
  r.statistic = p.sv.statistic;
  if (skipCorrections) {
    const NullMoments nm = product_gram_null_moments(p.sv.G, alphaHat, data.n(), data.nprime());
    r.nullMean = nm.mean;
    r.nullVar = nm.var;
  } else {
    const PluginTerms t =
        plugin_mean_var(p.sv.G, data.n(), data.nprime(), alphaHat, p.gtilde, p.d0, p.c0);
    r.nullMean = t.meanHat;
    r.nullVar = t.varHat;
    add_terms(r, t);
  }
  finalize_report(r);
  return r;
}

TestReport run_test_plugin(const TwoSampleData& data, const FeatureRoles& roles, TestKind kind,
                           const TestConfig& cfg) {
  TestReport r;
  r.level = cfg.level;
  r.mode = kind == TestKind::CI ? "CI-plugin" : "MCI-plugin";
  AlphaEstimate est;
  try {
    est = kind == TestKind::CI ? estimate_alpha_ci(data, roles, cfg.ciRange)
                               : estimate_alpha_mci(data, roles, cfg.mciRange, cfg.pluginMpe);
    r = run_test_plugin_at(data, roles, kind, est.alphaHat, cfg);
  } catch (const NumericalError& e) {
    r.alphaUsed = est.alphaHat;
    r.pValue = 1.0;
    r.reject = false;
    r.flags.push_back(std::string("failed: ") + e.what());
    return r;
  }
  for (const auto& f : est.flags) r.flags.push_back("mpe:" + f);
  r.set("mpe_objective", est.objectiveAtHat);
  return r;
}

}  // namespace mixprop
