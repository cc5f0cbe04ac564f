/*
 * Copyright 2026 The rccpfl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Straightforward reference implementations used to cross-check the library.
// They share no code with it: plain loops, closed-form eigensolves, and
// exhaustive search.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <set>
#include <stdexcept>
#include <vector>

#include "rccpfl/data_model.hpp"
#include "rccpfl/training.hpp"

namespace oracle {

using Mat = std::vector<std::vector<double>>;
using Vec = std::vector<double>;

inline Mat second_moment(const rccpfl::FeatureMatrix& x) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto d = static_cast<std::size_t>(x.cols());
  Mat s(d, Vec(d, 0.0));
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b < d; ++b) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) *
               x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b));
      }
      s[a][b] = acc / static_cast<double>(n);
    }
  }
  return s;
}

// Roots of the characteristic polynomial of a symmetric matrix, d <= 3,
// sorted descending.
inline Vec charpoly_eigenvalues(const Mat& s) {
  const std::size_t d = s.size();
  Vec ev;
  if (d == 1) {
    ev = {s[0][0]};
  } else if (d == 2) {
    const double tr = s[0][0] + s[1][1];
    const double det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
    ev = {tr / 2.0 + disc, tr / 2.0 - disc};
  } else if (d == 3) {
    // Trigonometric solution of det(S - lambda I) = 0.
    const double p1 = s[0][1] * s[0][1] + s[0][2] * s[0][2] + s[1][2] * s[1][2];
    const double q = (s[0][0] + s[1][1] + s[2][2]) / 3.0;
    const double p2 = (s[0][0] - q) * (s[0][0] - q) + (s[1][1] - q) * (s[1][1] - q) +
                      (s[2][2] - q) * (s[2][2] - q) + 2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    if (p == 0.0) {
      ev = {q, q, q};
    } else {
      Mat b(3, Vec(3));
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) b[i][j] = (s[i][j] - (i == j ? q : 0.0)) / p;
      }
      const double detb = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) -
                          b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0]) +
                          b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
      const double r = std::clamp(detb / 2.0, -1.0, 1.0);
      const double phi = std::acos(r) / 3.0;
      const double e1 = q + 2.0 * p * std::cos(phi);
      const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
      ev = {e1, 3.0 * q - e1 - e3, e3};
    }
  } else {
    throw std::invalid_argument("charpoly oracle handles d <= 3");
  }
  std::sort(ev.begin(), ev.end(), std::greater<>());
  for (auto& v : ev) v = std::max(v, 0.0);
  return ev;
}

// Unit null vector of (S - lambda I) for a simple eigenvalue.
inline Vec null_vector(const Mat& s, double lambda) {
  const std::size_t d = s.size();
  Mat a = s;
  for (std::size_t i = 0; i < d; ++i) a[i][i] -= lambda;
  Vec v(d, 0.0);
  if (d == 1) {
    v[0] = 1.0;
  } else if (d == 2) {
    // Pick the better conditioned row.
    if (std::hypot(a[0][0], a[0][1]) >= std::hypot(a[1][0], a[1][1])) {
      v = {-a[0][1], a[0][0]};
    } else {
      v = {-a[1][1], a[1][0]};
    }
    if (v[0] == 0.0 && v[1] == 0.0) v = {1.0, 0.0};
  } else {
    // Largest cross product of two rows.
    double best = -1.0;
    for (int i = 0; i < 3; ++i) {
      for (int j = i + 1; j < 3; ++j) {
        const Vec c{a[i][1] * a[j][2] - a[i][2] * a[j][1], a[i][2] * a[j][0] - a[i][0] * a[j][2],
                    a[i][0] * a[j][1] - a[i][1] * a[j][0]};
        const double n = c[0] * c[0] + c[1] * c[1] + c[2] * c[2];
        if (n > best) {
          best = n;
          v = c;
        }
      }
    }
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

inline Vec mat_vec(const Mat& a, const Vec& v) {
  Vec out(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < v.size(); ++j) out[i] += a[i][j] * v[j];
  }
  return out;
}

struct Spectrum {
  Mat s;
  Vec values;
  Mat vectors;  // vectors[k] pairs with values[k]
};

inline Spectrum spectrum(const rccpfl::FeatureMatrix& x) {
  Spectrum out;
  out.s = second_moment(x);
  out.values = charpoly_eigenvalues(out.s);
  for (double l : out.values) out.vectors.push_back(null_vector(out.s, l));
  return out;
}

// Smallest gap between eigenvalues relative to the largest one. Eigenvectors
// of nearly repeated eigenvalues are not well determined, so comparisons of
// anything built from them need a gap.
inline double relative_gap(const Vec& values) {
  double gap = 1.0;
  const double scale = std::max(values.front(), 1e-300);
  for (std::size_t k = 1; k < values.size(); ++k) {
    gap = std::min(gap, (values[k - 1] - values[k]) / scale);
  }
  return gap;
}

inline Vec cross_eigenvalues(const Spectrum& own, const Spectrum& foreign) {
  Vec out;
  for (const auto& v : foreign.vectors) {
    const Vec sv = mat_vec(own.s, v);
    double n = 0.0;
    for (double x : sv) n += x * x;
    out.push_back(std::sqrt(n));
  }
  return out;
}

inline double relevance(const Vec& own, const Vec& est, double eps) {
  const double floor = own.front() > 0.0 ? eps * own.front() : eps;
  double prod = 1.0;
  for (std::size_t k = 0; k < own.size(); ++k) {
    const double a = std::max(own[k], floor);
    const double b = std::max(est[k], floor);
    prod *= std::min(a, b) / std::max(a, b);
  }
  return std::pow(prod, 1.0 / static_cast<double>(own.size()));
}

inline Mat similarity(const std::vector<Spectrum>& spectra, double eps) {
  const std::size_t k = spectra.size();
  Mat r(k, Vec(k));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double rij = relevance(spectra[i].values, cross_eigenvalues(spectra[i], spectra[j]), eps);
      const double rji = relevance(spectra[j].values, cross_eigenvalues(spectra[j], spectra[i]), eps);
      r[i][j] = (rij + rji) / 2.0;
    }
  }
  return r;
}

// Average-linkage HAC recomputing every cluster distance from the member
// pairs at each step. Returns cluster ids ordered by smallest member.
inline std::vector<std::size_t> naive_hac(const Mat& r, std::size_t m) {
  std::vector<std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < r.size(); ++i) clusters.push_back({i});
  while (clusters.size() > m) {
    std::sort(clusters.begin(), clusters.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    double best = 0.0;
    std::size_t ba = 0, bb = 0;
    bool found = false;
    for (std::size_t a = 0; a < clusters.size(); ++a) {
      for (std::size_t b = a + 1; b < clusters.size(); ++b) {
        double sum = 0.0;
        for (auto i : clusters[a]) {
          for (auto j : clusters[b]) sum += 1.0 - r[i][j];
        }
        const double dist = sum / static_cast<double>(clusters[a].size() * clusters[b].size());
        if (!found || dist < best) {
          best = dist;
          ba = a;
          bb = b;
          found = true;
        }
      }
    }
    clusters[ba].insert(clusters[ba].end(), clusters[bb].begin(), clusters[bb].end());
    std::sort(clusters[ba].begin(), clusters[ba].end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bb));
  }
  std::sort(clusters.begin(), clusters.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  std::vector<std::size_t> label(r.size());
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    for (auto i : clusters[c]) label[i] = c;
  }
  return label;
}

// Logits by explicit loops over the documented parameter layout.
inline Mat forward(const rccpfl::ModelWeights& w, const rccpfl::FeatureMatrix& x) {
  const auto& a = w.arch;
  const auto& p = w.params;
  auto layer = [&](const Mat& in, std::size_t in_dim, std::size_t out_dim, std::size_t offset,
                   bool relu) {
    Mat out(in.size(), Vec(out_dim));
    for (std::size_t s = 0; s < in.size(); ++s) {
      for (std::size_t o = 0; o < out_dim; ++o) {
        double acc = p[static_cast<Eigen::Index>(offset + out_dim * in_dim + o)];
        for (std::size_t i = 0; i < in_dim; ++i) {
          acc += p[static_cast<Eigen::Index>(offset + o * in_dim + i)] * in[s][i];
        }
        out[s][o] = relu ? std::max(acc, 0.0) : acc;
      }
    }
    return out;
  };
  Mat in(static_cast<std::size_t>(x.rows()), Vec(a.input_dim));
  for (std::size_t s = 0; s < in.size(); ++s) {
    for (std::size_t i = 0; i < a.input_dim; ++i) {
      in[s][i] = x(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i));
    }
  }
  if (a.kind == rccpfl::ModelKind::logistic) return layer(in, a.input_dim, a.output_dim, 0, false);
  const auto hidden = layer(in, a.input_dim, a.hidden_dim, 0, true);
  return layer(hidden, a.hidden_dim, a.output_dim, a.hidden_dim * a.input_dim + a.hidden_dim,
               false);
}

inline double mean_cross_entropy(const Mat& logits, const std::vector<int>& labels) {
  double total = 0.0;
  for (std::size_t s = 0; s < logits.size(); ++s) {
    double mx = logits[s][0];
    for (double v : logits[s]) mx = std::max(mx, v);
    double z = 0.0;
    for (double v : logits[s]) z += std::exp(v - mx);
    total += -(logits[s][static_cast<std::size_t>(labels[s])] - mx - std::log(z));
  }
  return total / static_cast<double>(logits.size());
}

}  // namespace oracle
