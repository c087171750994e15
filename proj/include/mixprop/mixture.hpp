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

#include <cstdint>
#include <string>
#include <vector>

#include "mixprop/numerics.hpp"

namespace mixprop {

// Two unlabeled samples. Labels, when present, are provenance only.
struct TwoSampleData {
  Matrix U;       // n x d
  Matrix Uprime;  // n' x d, may be empty in screening mode
  std::vector<std::string> featureNames;
  std::vector<int> labelsU;       // empty or size n, entries in {-1, +1}
  std::vector<int> labelsUprime;  // empty or size n'

  int n() const { return static_cast<int>(U.rows()); }
  int nprime() const { return static_cast<int>(Uprime.rows()); }
  int M() const { return n() + nprime(); }
  int dims() const { return static_cast<int>(U.cols()); }

  // Pooled rows (U block first) restricted to the given columns.
  Matrix pooled(const std::vector<int>& cols) const;
  void validate() const;
};

struct FeatureRoles {
  std::vector<int> idx1;
  std::vector<int> idx2;
  std::vector<int> idxS;

  void validate(int d) const;
  // Parses "x1=0;x2=1;xs=2"; each list may hold comma-separated indices.
  static FeatureRoles parse(const std::string& spec);
  std::string to_string() const;
};

struct SignedWeights {
  double alpha = 1.0;
  int n = 0;
  int nprime = 0;
  Vector w;
};

SignedWeights signed_weights(int n, int nprime, double alpha);

Vector weighted_mean(const Matrix& values, const SignedWeights& w);

struct ClassPriors {
  double theta = 1.0;
  double thetaPrime = 0.0;
};

struct AlphaPair {
  double alphaPlus = 1.0;
  double alphaMinus = 0.0;
};

ClassPriors thetas_from_alphas(const AlphaPair& a);
AlphaPair alphas_from_thetas(const ClassPriors& p);

struct GaussianSpec {
  int n = 0;
  int nprime = 0;
  ClassPriors priors;
  double sigma12 = 0.0;
  bool withXs = false;
};

TwoSampleData gen_gaussian(const GaussianSpec& spec, std::uint64_t seed);

struct LabeledRows {
  Matrix X;
  std::vector<int> y;  // {-1, +1}
};

// Draws m rows per class from the class-conditional Gaussian model.
LabeledRows gen_gaussian_labeled(int positives, int negatives, double sigma12, bool withXs,
                                 std::uint64_t seed);

enum class ResampleMode { Bootstrap, Permutation, None };

LabeledRows break_irreducibility_and_cify(const LabeledRows& rows, double fraction,
                                          const FeatureRoles& split, std::uint64_t seed,
                                          ResampleMode mode = ResampleMode::Bootstrap);

// Builds a two-sample dataset by drawing rows (with replacement) from a
// labeled pool: each U row is positive with probability theta, each U'
// row with probability thetaPrime.
TwoSampleData draw_mixtures(const LabeledRows& pool, int n, int nprime, const ClassPriors& priors,
                            std::uint64_t seed);

// CSV with a header row and an optional trailing "y" label column.
void save_csv_block(const Matrix& X, const std::vector<int>& labels,
                    const std::vector<std::string>& names, const std::string& path);

struct CsvBlock {
  Matrix X;
  std::vector<int> labels;
  std::vector<std::string> names;
};

CsvBlock load_csv_block(const std::string& path);

// Writes <stem>.u.csv and <stem>.uprime.csv.
void save_csv(const TwoSampleData& data, const std::string& stem);
TwoSampleData load_csv(const std::string& stem);
TwoSampleData load_csv_pair(const std::string& uPath, const std::string& uprimePath);

}  // namespace mixprop
