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

#include <string>
#include <vector>

#include "mixprop/mixture.hpp"
#include "mixprop/numerics.hpp"

namespace mixprop {

// Gaussian kernel k(x, y) = exp(-|x - y|^2 / (2 sigma^2)).
struct KernelSpec {
  double bandwidth = 1.0;
  void validate() const;
};

Matrix gram(const Matrix& rows, const KernelSpec& spec);

// H K H^T with H = I - 1 w^T.
Matrix weighted_center(const Matrix& K, const Vector& w);
inline Matrix weighted_center(const Matrix& K, const SignedWeights& w) {
  return weighted_center(K, w.w);
}

enum class KrrRoute { Auto, Dense, LowRank };

// K_S together with an optional low-rank factor K_S ~= L L^T. The factor
// does not depend on alpha, so one instance serves a whole alpha search.
class KrrSystem {
 public:
  explicit KrrSystem(Matrix KS, KrrRoute route = KrrRoute::Auto, double lowRankTol = 1e-13,
                     int maxRank = 400);

  const Matrix& K() const { return K_; }
  bool low_rank() const { return lowRank_; }
  int rank() const { return static_cast<int>(L_.cols()); }

  // Solves (D K + lambda I) W = D G column by column.
  Matrix weights(const Matrix& G, const Vector& w, double lambda) const;
  // Fitted values K W.
  Matrix fitted(const Matrix& G, const Vector& w, double lambda) const;

 private:
  Matrix K_;
  Matrix L_;
  bool lowRank_ = false;
};

// Weakly-supervised kernel ridge regression weights for one target.
Vector ws_krr_fit(const Matrix& KS, const Vector& target, const SignedWeights& w, double lambda,
                  KrrRoute route = KrrRoute::Dense);

// Phi = V Lambda^{1/2} over the top-k eigenpairs. Negative eigenvalues are
// clipped to zero; magnitudes above 1e-8 add a message to warnings.
Matrix empirical_kernel_map_topk(const Matrix& K, int k, std::vector<std::string>* warnings = nullptr);

struct ResidualMap {
  Matrix Phi;     // residual features
  Matrix Ktilde;  // Phi Phi^T
};

ResidualMap residualize_map(const Matrix& Phi, const KrrSystem& sys, const SignedWeights& w,
                            double lambda);

}  // namespace mixprop
