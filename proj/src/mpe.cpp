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

#include "mixprop/mpe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mixprop/error.hpp"

namespace mixprop {

void Interval::validate() const {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo <= hi)) {
    throw InvalidArgument("search range must be a finite interval with lo <= hi");
  }
}

MomentFunctions MomentFunctions::identity() {
  MomentFunctions g;
  g.g1 = [](const Matrix& x) { return x; };
  g.g2 = [](const Matrix& x) { return x; };
  return g;
}

MomentValues moment_values(const TwoSampleData& data, const FeatureRoles& roles,
                           const MomentFunctions& g) {
  roles.validate(data.dims());
  MomentValues mv;
  mv.g1 = g.g1(data.pooled(roles.idx1));
  mv.g2 = g.g2(data.pooled(roles.idx2));
  if (mv.g1.rows() != data.M() || mv.g2.rows() != data.M() || mv.g1.cols() != mv.g2.cols()) {
    throw InvalidArgument("moment functions must return one row per sample and equal widths");
  }
  if (!mv.g1.allFinite() || !mv.g2.allFinite()) {
    throw NumericalError("moment functions returned non-finite values");
  }
  mv.g12 = mv.g1.cwiseProduct(mv.g2).rowwise().sum();
  return mv;
}

namespace {

// Mean of sorted values, so the result does not depend on row order.
double sorted_mean(const Eigen::Ref<const Vector>& x) {
  std::vector<double> v(x.data(), x.data() + x.size());
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double t : v) s += t;
  return s / static_cast<double>(v.size());
}

Vector column_means(const Matrix& block) {
  Vector m(block.cols());
  for (Eigen::Index j = 0; j < block.cols(); ++j) m(j) = sorted_mean(block.col(j));
  return m;
}

MomentQuadratic coeffs_from_values(const MomentValues& mv, int n, int nprime) {
  if (n < 1 || nprime < 1) throw InvalidArgument("CI moment needs both samples non-empty");
  const Vector g1U = column_means(mv.g1.topRows(n));
  const Vector g1V = column_means(mv.g1.bottomRows(nprime));
  const Vector g2U = column_means(mv.g2.topRows(n));
  const Vector g2V = column_means(mv.g2.bottomRows(nprime));
  const double eU = sorted_mean(mv.g12.head(n));
  const double eV = sorted_mean(mv.g12.tail(nprime));
  MomentQuadratic q;
  q.a = g1U.dot(g2V) + g1V.dot(g2U) - g1U.dot(g2U) - g1V.dot(g2V);
  q.b = eU - eV + 2.0 * g1V.dot(g2V) - g1U.dot(g2V) - g1V.dot(g2U);
  q.c = eV - g1V.dot(g2V);
  return q;
}

}  // namespace

MomentQuadratic ci_moment_coeffs(const TwoSampleData& data, const FeatureRoles& roles,
                                 const MomentFunctions& g) {
  return coeffs_from_values(moment_values(data, roles, g), data.n(), data.nprime());
}

Vector ci_centered_moment(const MomentValues& mv, const SignedWeights& w) {
  const Eigen::RowVectorXd mu1 = (mv.g1.transpose() * w.w).transpose();
  const Eigen::RowVectorXd mu2 = (mv.g2.transpose() * w.w).transpose();
  return (mv.g1.rowwise() - mu1).cwiseProduct(mv.g2.rowwise() - mu2).rowwise().sum();
}

double asymptotic_variance(const Vector& gtildeU, const Vector& gtildeUprime, double alphaHat,
                           double d0Hat) {
  if (!(std::abs(d0Hat) >= 1e-10)) throw NumericalError("vanishing moment derivative");
  auto var = [](const Vector& v) {
    if (v.size() == 0) return 0.0;
    return (v.array() - v.mean()).square().mean();
  };
  double s = 0.0;
  if (gtildeU.size() > 0) s += alphaHat * alphaHat * var(gtildeU) / gtildeU.size();
  if (gtildeUprime.size() > 0) {
    s += (1.0 - alphaHat) * (1.0 - alphaHat) * var(gtildeUprime) / gtildeUprime.size();
  }
  return s / (d0Hat * d0Hat);
}

AlphaEstimate minimize_on_grid(const std::function<double(double)>& objective,
                               const Interval& range, int gridPoints, double tol) {
  range.validate();
  if (gridPoints < 2) throw InvalidArgument("grid needs at least two points");
  AlphaEstimate est;
  est.searchRange = range;
  if (range.lo == range.hi) {
    est.alphaHat = range.lo;
    est.objectiveAtHat = objective(range.lo);
    est.evaluations = 1;
    return est;
  }
  const double step = (range.hi - range.lo) / (gridPoints - 1);
  int best = 0;
  double bestVal = std::numeric_limits<double>::infinity();
  for (int i = 0; i < gridPoints; ++i) {
    const double x = (i == gridPoints - 1) ? range.hi : range.lo + i * step;
    const double v = objective(x);
    est.gridProfile.emplace_back(x, v);
    if (!std::isfinite(v)) continue;
    if (v < bestVal) {
      bestVal = v;
      best = i;
    }
  }
  est.evaluations = gridPoints;
  if (!std::isfinite(bestVal)) throw NumericalError("objective non-finite on the whole grid");
  est.alphaHat = est.gridProfile[best].first;
  est.objectiveAtHat = bestVal;
  const double a = est.gridProfile[std::max(best - 1, 0)].first;
  const double b = est.gridProfile[std::min(best + 1, gridPoints - 1)].first;
  if (b - a > tol) {
    GoldenResult gr = golden_section_min(objective, a, b, tol);
    est.evaluations += gr.iterations + 3;
    if (gr.value <= est.objectiveAtHat) {
      est.alphaHat = gr.argmin;
      est.objectiveAtHat = gr.value;
    }
  }
  return est;
}

AlphaEstimate estimate_alpha_ci(const TwoSampleData& data, const FeatureRoles& roles,
                                const Interval& range, const MomentFunctions& g,
                                const MomentFunctions* gAlt) {
  range.validate();
  const MomentValues mv = moment_values(data, roles, g);
  const MomentQuadratic q = coeffs_from_values(mv, data.n(), data.nprime());
  auto obj = [&](double a) {
    const double m = q(a);
    return m * m;
  };

  AlphaEstimate est;
  std::vector<double> roots;
  try {
    roots = solve_quadratic(q.a, q.b, q.c);
  } catch (const InvalidArgument&) {
    est.flags.push_back("zero-moment-polynomial");
  }
  std::vector<double> inside;
  for (double r : roots)
    if (range.contains(r)) inside.push_back(r);

  if (inside.size() == 1) {
    est.alphaHat = inside[0];
  } else if (inside.size() == 2) {
    if (gAlt) {
      const MomentQuadratic qa = ci_moment_coeffs(data, roles, *gAlt);
      est.alphaHat = std::abs(qa(inside[0])) <= std::abs(qa(inside[1])) ? inside[0] : inside[1];
      est.flags.push_back("disambiguated-by-galt");
    } else {
      est.alphaHat = obj(inside[0]) <= obj(inside[1]) ? inside[0] : inside[1];
      est.flags.push_back("ambiguous-roots");
    }
  } else {
    AlphaEstimate g2 = minimize_on_grid(obj, range, 2001, 1e-10 * std::max(1.0, range.hi - range.lo));
    est.alphaHat = g2.alphaHat;
    est.evaluations = g2.evaluations;
    est.flags.push_back("no-root-in-range");
  }
  est.method = "CI";
  est.searchRange = range;
  est.rootsFound = roots;
  est.objectiveAtHat = obj(est.alphaHat);
  est.d0Hat = 2.0 * q.a * est.alphaHat + q.b;
  const SignedWeights w = signed_weights(data.n(), data.nprime(), est.alphaHat);
  const Vector gt = ci_centered_moment(mv, w);
  try {
    est.asympVariance = asymptotic_variance(gt.head(data.n()), gt.tail(data.nprime()),
                                            est.alphaHat, est.d0Hat);
  } catch (const NumericalError&) {
    est.flags.push_back("vanishing-moment-derivative");
  }
  return est;
}

MciMoment::MciMoment(const TwoSampleData& data, const FeatureRoles& roles, const MciConfig& cfg,
                     const MomentFunctions& g)
    : n_(data.n()),
      nprime_(data.nprime()),
      lambda_(cfg.lambda),
      sys_(gram(data.pooled(roles.idxS), cfg.kS), cfg.route) {
  if (roles.idxS.empty()) throw InvalidArgument("MCI needs a non-empty xs role");
  if (!(cfg.lambda > 0.0)) throw InvalidArgument("MCI lambda must be positive");
  const MomentValues mv = moment_values(data, roles, g);
  if (mv.g1.cols() != 1) throw InvalidArgument("MCI moment functions must be scalar-valued");
  targets_.resize(data.M(), 2);
  targets_.col(0) = mv.g1.col(0);
  targets_.col(1) = mv.g2.col(0);
}

MciMoment::Eval MciMoment::evaluate(double alpha) const {
  const SignedWeights w = signed_weights(n_, nprime_, alpha);
  const Matrix R = targets_ - sys_.fitted(targets_, w.w, lambda_);
  Eval e;
  e.r1 = R.col(0);
  e.r2 = R.col(1);
  e.m = w.w.dot(e.r1.cwiseProduct(e.r2));
  return e;
}

double mci_moment(const TwoSampleData& data, const FeatureRoles& roles, double alpha,
                  const MciConfig& cfg, const MomentFunctions& g) {
  return MciMoment(data, roles, cfg, g)(alpha);
}

AlphaEstimate estimate_alpha_mci(const TwoSampleData& data, const FeatureRoles& roles,
                                 const Interval& range, const MciConfig& cfg,
                                 const MomentFunctions& g) {
  range.validate();
  MciMoment mom(data, roles, cfg, g);
  auto obj = [&](double a) {
    const double m = mom(a);
    return m * m;
  };
  AlphaEstimate est = minimize_on_grid(obj, range, cfg.gridPoints, cfg.tol);
  est.method = "MCI";
  const MciMoment::Eval e = mom.evaluate(est.alphaHat);
  const Vector gt = e.r1.cwiseProduct(e.r2);
  const int n = data.n();
  const int np = data.nprime();
  est.d0Hat = gt.head(n).mean() - gt.tail(np).mean();
  try {
    est.asympVariance = asymptotic_variance(gt.head(n), gt.tail(np), est.alphaHat, est.d0Hat);
  } catch (const NumericalError&) {
    est.flags.push_back("vanishing-moment-derivative");
  }
  const double edge = 1e-9 * std::max(1.0, range.hi - range.lo);
  if (est.alphaHat - range.lo < edge || range.hi - est.alphaHat < edge) {
    est.flags.push_back("at-range-boundary");
  }
  return est;
}

AlphaEstimate estimate_side(const TwoSampleData& data, const SideConfig& side) {
  switch (side.method) {
    case MpeMethod::CI:
      return estimate_alpha_ci(data, side.roles, side.range);
    case MpeMethod::MCI:
      return estimate_alpha_mci(data, side.roles, side.range, side.mci);
    case MpeMethod::Fixed:
    default: {
      AlphaEstimate est;
      est.method = "fixed";
      est.alphaHat = side.fixedValue;
      est.searchRange = {side.fixedValue, side.fixedValue};
      return est;
    }
  }
}

PriorsResult priors_from_estimates(const AlphaEstimate& plus, const AlphaEstimate& minus) {
  if (plus.alphaHat == minus.alphaHat) throw NumericalError("non-identifiable estimates");
  PriorsResult r;
  r.plus = plus;
  r.minus = minus;
  r.priors = thetas_from_alphas({plus.alphaHat, minus.alphaHat});
  if (r.priors.theta < 0.0 || r.priors.theta > 1.0) {
    r.priors.theta = std::clamp(r.priors.theta, 0.0, 1.0);
    r.flags.push_back("theta-clamped");
  }
  if (r.priors.thetaPrime < 0.0 || r.priors.thetaPrime > 1.0) {
    r.priors.thetaPrime = std::clamp(r.priors.thetaPrime, 0.0, 1.0);
    r.flags.push_back("theta-prime-clamped");
  }
  return r;
}

PriorsResult estimate_class_priors(const TwoSampleData& data, const SideConfig& plus,
                                   const SideConfig& minus) {
  return priors_from_estimates(estimate_side(data, plus), estimate_side(data, minus));
}

Interval default_ci_range_plus() { return {1.0, 50.0}; }
Interval default_ci_range_minus() { return {-50.0, 0.0}; }
Interval default_mci_range_plus() { return {1.1, 1.5}; }
Interval default_mci_range_minus() { return {-0.7, 0.0}; }

}  // namespace mixprop
