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

#include "mixprop/mixture.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "mixprop/error.hpp"
#include "mixprop/rng.hpp"

namespace mixprop {

Matrix TwoSampleData::pooled(const std::vector<int>& cols) const {
  Matrix out(M(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    out.col(j).head(n()) = U.col(cols[j]);
    if (nprime() > 0) out.col(j).tail(nprime()) = Uprime.col(cols[j]);
  }
  return out;
}

void TwoSampleData::validate() const {
  if (n() < 1) throw InvalidArgument("U sample is empty");
  if (nprime() > 0 && Uprime.cols() != U.cols()) {
    throw InvalidArgument("U and U' have different column counts");
  }
  if (!U.allFinite() || !Uprime.allFinite()) throw InvalidArgument("non-finite data entries");
  if (!labelsU.empty() && static_cast<int>(labelsU.size()) != n()) {
    throw InvalidArgument("label count does not match U rows");
  }
  if (!labelsUprime.empty() && static_cast<int>(labelsUprime.size()) != nprime()) {
    throw InvalidArgument("label count does not match U' rows");
  }
}

void FeatureRoles::validate(int d) const {
  std::set<int> seen;
  auto check = [&](const std::vector<int>& idx, const char* name) {
    for (int i : idx) {
      if (i < 0 || i >= d) {
        throw InvalidArgument(std::string("role ") + name + ": column " + std::to_string(i) +
                              " out of range");
      }
      if (!seen.insert(i).second) {
        throw InvalidArgument("role index sets overlap at column " + std::to_string(i));
      }
    }
  };
  if (idx1.empty() || idx2.empty()) throw InvalidArgument("roles x1 and x2 must be non-empty");
  check(idx1, "x1");
  check(idx2, "x2");
  check(idxS, "xs");
}

FeatureRoles FeatureRoles::parse(const std::string& spec) {
  FeatureRoles r;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ParseError("roles: missing '=' in '" + item + "'");
    const std::string key = item.substr(0, eq);
    std::vector<int>* dst = nullptr;
    if (key == "x1") dst = &r.idx1;
    else if (key == "x2") dst = &r.idx2;
    else if (key == "xs") dst = &r.idxS;
    else throw ParseError("roles: unknown role '" + key + "'");
    std::stringstream vs(item.substr(eq + 1));
    std::string tok;
    while (std::getline(vs, tok, ',')) {
      int v = 0;
      const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
        throw ParseError("roles: bad column index '" + tok + "'");
      }
      dst->push_back(v);
    }
  }
  if (r.idx1.empty() || r.idx2.empty()) throw ParseError("roles: x1 and x2 are required");
  return r;
}

std::string FeatureRoles::to_string() const {
  auto join = [](const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
  };
  std::string s = "x1=" + join(idx1) + ";x2=" + join(idx2);
  if (!idxS.empty()) s += ";xs=" + join(idxS);
  return s;
}

SignedWeights signed_weights(int n, int nprime, double alpha) {
  if (n < 1) throw InvalidArgument("signed_weights: n must be >= 1");
  if (nprime < 0) throw InvalidArgument("signed_weights: negative n'");
  if (!std::isfinite(alpha)) throw InvalidArgument("signed_weights: non-finite alpha");
  if (nprime == 0 && alpha != 1.0) throw InvalidArgument("degenerate mixture");
  SignedWeights sw;
  sw.alpha = alpha;
  sw.n = n;
  sw.nprime = nprime;
  sw.w.resize(n + nprime);
  sw.w.head(n).setConstant(alpha / n);
  if (nprime > 0) sw.w.tail(nprime).setConstant((1.0 - alpha) / nprime);
  return sw;
}

Vector weighted_mean(const Matrix& values, const SignedWeights& w) {
  if (values.rows() != w.w.size()) throw InvalidArgument("weighted_mean: dimension mismatch");
  return values.transpose() * w.w;
}

ClassPriors thetas_from_alphas(const AlphaPair& a) {
  const double den = a.alphaPlus - a.alphaMinus;
  if (den == 0.0) throw InvalidArgument("non-identifiable: alphaPlus == alphaMinus");
  return {(1.0 - a.alphaMinus) / den, -a.alphaMinus / den};
}

AlphaPair alphas_from_thetas(const ClassPriors& p) {
  const double den = p.theta - p.thetaPrime;
  if (den == 0.0) throw InvalidArgument("alphas_from_thetas: theta == thetaPrime");
  return {(1.0 - p.thetaPrime) / den, -p.thetaPrime / den};
}

namespace {

void gauss_row(Rng& rng, int y, double s12, bool withXs, double* out) {
  const double z1 = rng.normal();
  const double z2 = rng.normal();
  double x1 = y + z1;
  double x2 = (y > 0) ? y + s12 * z1 + std::sqrt(1.0 - s12 * s12) * z2 : y + z2;
  if (withXs) {
    const double xs = rng.normal(0.5, 1.0);
    x1 += xs;
    x2 += xs;
    out[2] = xs;
  }
  out[0] = x1;
  out[1] = x2;
}

std::vector<std::string> gauss_names(bool withXs) {
  std::vector<std::string> names{"x1", "x2"};
  if (withXs) names.push_back("xs");
  return names;
}

}  // namespace

TwoSampleData gen_gaussian(const GaussianSpec& spec, std::uint64_t seed) {
  if (!(std::abs(spec.sigma12) < 1.0)) throw InvalidArgument("gen_gaussian: |sigma12| must be < 1");
  if (spec.n < 1 || spec.nprime < 1) throw InvalidArgument("gen_gaussian: n, n' must be >= 1");
  const auto& p = spec.priors;
  if (p.theta < 0 || p.theta > 1 || p.thetaPrime < 0 || p.thetaPrime > 1) {
    throw InvalidArgument("gen_gaussian: priors must lie in [0, 1]");
  }
  const int d = spec.withXs ? 3 : 2;
  Rng rng(seed);
  TwoSampleData data;
  data.featureNames = gauss_names(spec.withXs);
  auto fill = [&](int rows, double theta, Matrix& X, std::vector<int>& labels) {
    X.resize(rows, d);
    labels.resize(rows);
    double buf[3];
    for (int i = 0; i < rows; ++i) {
      const int y = rng.bernoulli(theta) ? 1 : -1;
      gauss_row(rng, y, spec.sigma12, spec.withXs, buf);
      for (int j = 0; j < d; ++j) X(i, j) = buf[j];
      labels[i] = y;
    }
  };
  fill(spec.n, p.theta, data.U, data.labelsU);
  fill(spec.nprime, p.thetaPrime, data.Uprime, data.labelsUprime);
  return data;
}

LabeledRows gen_gaussian_labeled(int positives, int negatives, double sigma12, bool withXs,
                                 std::uint64_t seed) {
  if (!(std::abs(sigma12) < 1.0)) throw InvalidArgument("gen_gaussian: |sigma12| must be < 1");
  const int d = withXs ? 3 : 2;
  Rng rng(seed);
  LabeledRows out;
  out.X.resize(positives + negatives, d);
  out.y.resize(positives + negatives);
  double buf[3];
  for (int i = 0; i < positives + negatives; ++i) {
    const int y = i < positives ? 1 : -1;
    gauss_row(rng, y, sigma12, withXs, buf);
    for (int j = 0; j < d; ++j) out.X(i, j) = buf[j];
    out.y[i] = y;
  }
  return out;
}

LabeledRows break_irreducibility_and_cify(const LabeledRows& rows, double fraction,
                                          const FeatureRoles& split, std::uint64_t seed,
                                          ResampleMode mode) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw InvalidArgument("cify: fraction must lie in [0, 1)");
  }
  if (static_cast<Eigen::Index>(rows.y.size()) != rows.X.rows()) {
    throw InvalidArgument("cify: label count mismatch");
  }
  split.validate(static_cast<int>(rows.X.cols()));
  Rng rng(seed);
  LabeledRows out = rows;

  std::vector<int> pos;
  for (std::size_t i = 0; i < out.y.size(); ++i)
    if (out.y[i] == 1) pos.push_back(static_cast<int>(i));
  const std::size_t negCount = out.y.size() - pos.size();
  if (pos.empty() || negCount == 0) throw InvalidArgument("cify: both classes must be present");

  const std::size_t move = static_cast<std::size_t>(std::floor(fraction * pos.size()));
  for (std::size_t k = 0; k < move; ++k) {
    const std::size_t j = k + rng.below(pos.size() - k);
    std::swap(pos[k], pos[j]);
    out.y[pos[k]] = -1;
  }
  if (mode == ResampleMode::None) return out;

  std::vector<char> inBlock2(rows.X.cols(), 0);
  for (int c : split.idx2) inBlock2[c] = 1;

  for (int cls : {1, -1}) {
    std::vector<int> members;
    for (std::size_t i = 0; i < out.y.size(); ++i)
      if (out.y[i] == cls) members.push_back(static_cast<int>(i));
    const std::size_t m = members.size();
    std::vector<int> src1(m), src2(m);
    if (mode == ResampleMode::Bootstrap) {
      for (std::size_t i = 0; i < m; ++i) src1[i] = members[rng.below(m)];
      for (std::size_t i = 0; i < m; ++i) src2[i] = members[rng.below(m)];
    } else {
      src1 = members;
      src2 = members;
      for (std::size_t i = m; i > 1; --i) std::swap(src1[i - 1], src1[rng.below(i)]);
      for (std::size_t i = m; i > 1; --i) std::swap(src2[i - 1], src2[rng.below(i)]);
    }
    for (std::size_t i = 0; i < m; ++i) {
      for (Eigen::Index c = 0; c < rows.X.cols(); ++c) {
        out.X(members[i], c) = rows.X(inBlock2[c] ? src2[i] : src1[i], c);
      }
    }
  }
  return out;
}

TwoSampleData draw_mixtures(const LabeledRows& pool, int n, int nprime, const ClassPriors& priors,
                            std::uint64_t seed) {
  std::vector<int> pos, neg;
  for (std::size_t i = 0; i < pool.y.size(); ++i)
    (pool.y[i] == 1 ? pos : neg).push_back(static_cast<int>(i));
  Rng rng(seed);
  TwoSampleData data;
  const int d = static_cast<int>(pool.X.cols());
  data.featureNames = gauss_names(d == 3);
  if (d != 2 && d != 3) {
    data.featureNames.clear();
    for (int j = 0; j < d; ++j) data.featureNames.push_back("f" + std::to_string(j));
  }
  auto fill = [&](int rows, double theta, Matrix& X, std::vector<int>& labels) {
    X.resize(rows, d);
    labels.resize(rows);
    for (int i = 0; i < rows; ++i) {
      const bool isPos = rng.bernoulli(theta);
      const auto& src = isPos ? pos : neg;
      if (src.empty()) throw InvalidArgument("draw_mixtures: requested class absent from pool");
      const int r = src[rng.below(src.size())];
      X.row(i) = pool.X.row(r);
      labels[i] = isPos ? 1 : -1;
    }
  };
  fill(n, priors.theta, data.U, data.labelsU);
  fill(nprime, priors.thetaPrime, data.Uprime, data.labelsUprime);
  return data;
}

void save_csv_block(const Matrix& X, const std::vector<int>& labels,
                    const std::vector<std::string>& names, const std::string& path) {
  if (static_cast<Eigen::Index>(names.size()) != X.cols()) {
    throw InvalidArgument("save_csv: feature name count mismatch");
  }
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw InvalidArgument("cannot open '" + path + "' for writing");
  for (std::size_t j = 0; j < names.size(); ++j) std::fprintf(f, "%s%s", j ? "," : "", names[j].c_str());
  const bool withY = !labels.empty();
  std::fprintf(f, withY ? ",y\n" : "\n");
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) std::fprintf(f, "%s%.17g", j ? "," : "", X(i, j));
    if (withY) std::fprintf(f, ",%d", labels[i]);
    std::fprintf(f, "\n");
  }
  if (std::fclose(f) != 0) throw InvalidArgument("write failed for '" + path + "'");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace

CsvBlock load_csv_block(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::string line;
  int lineNo = 0;
  CsvBlock blk;
  while (std::getline(in, line)) {
    ++lineNo;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw ParseError(path + ": missing header");
  blk.names = split_commas(trim(line));
  for (const auto& nm : blk.names) {
    if (nm.empty()) throw ParseError(path + ": line " + std::to_string(lineNo) + ": empty column name");
  }
  const bool withY = blk.names.back() == "y";
  if (withY) blk.names.pop_back();
  if (blk.names.empty()) throw ParseError(path + ": header has no feature columns");
  const std::size_t width = blk.names.size() + (withY ? 1 : 0);

  std::vector<double> vals;
  while (std::getline(in, line)) {
    ++lineNo;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto cells = split_commas(t);
    if (cells.size() != width) {
      throw ParseError(path + ": line " + std::to_string(lineNo) + ": expected " +
                       std::to_string(width) + " fields, found " + std::to_string(cells.size()));
    }
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const std::string& c = cells[j];
      double v = 0.0;
      const char* first = c.data();
      if (!c.empty() && c[0] == '+') ++first;
      const auto res = std::from_chars(first, c.data() + c.size(), v);
      if (c.empty() || res.ec != std::errc() || res.ptr != c.data() + c.size() || !std::isfinite(v)) {
        throw ParseError(path + ": line " + std::to_string(lineNo) + ": non-numeric cell '" + c + "'");
      }
      if (withY && j + 1 == cells.size()) {
        if (v != 1.0 && v != -1.0) {
          throw ParseError(path + ": line " + std::to_string(lineNo) + ": label must be -1 or 1");
        }
        blk.labels.push_back(static_cast<int>(v));
      } else {
        vals.push_back(v);
      }
    }
  }
  const std::size_t d = blk.names.size();
  const std::size_t rows = vals.size() / d;
  if (rows == 0) throw ParseError(path + ": no data rows");
  blk.X.resize(rows, d);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < d; ++j) blk.X(i, j) = vals[i * d + j];
  return blk;
}

void save_csv(const TwoSampleData& data, const std::string& stem) {
  data.validate();
  save_csv_block(data.U, data.labelsU, data.featureNames, stem + ".u.csv");
  save_csv_block(data.Uprime, data.labelsUprime, data.featureNames, stem + ".uprime.csv");
}

TwoSampleData load_csv_pair(const std::string& uPath, const std::string& uprimePath) {
  TwoSampleData data;
  CsvBlock u = load_csv_block(uPath);
  data.U = std::move(u.X);
  data.labelsU = std::move(u.labels);
  data.featureNames = u.names;
  if (!uprimePath.empty()) {
    CsvBlock v = load_csv_block(uprimePath);
    if (v.names != u.names) throw ParseError(uprimePath + ": header differs from " + uPath);
    data.Uprime = std::move(v.X);
    data.labelsUprime = std::move(v.labels);
  } else {
    data.Uprime.resize(0, data.U.cols());
  }
  data.validate();
  return data;
}

TwoSampleData load_csv(const std::string& stem) {
  const std::string up = stem + ".uprime.csv";
  return load_csv_pair(stem + ".u.csv", std::filesystem::exists(up) ? up : std::string());
}

}  // namespace mixprop
