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

#include "rccpfl/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include <Eigen/Eigenvalues>

#include "rccpfl/error.hpp"
#include "rccpfl/parallel.hpp"

namespace rccpfl {

Spectrum compute_spectrum(const FeatureMatrix& features) {
  if (features.rows() == 0 || features.cols() == 0) {
    throw ShapeError("compute_spectrum: empty feature matrix");
  }
  if (!features.allFinite()) {
    throw NumericError("compute_spectrum: non-finite feature value");
  }
  Spectrum s;
  s.second_moment = (features.transpose() * features) /
                    static_cast<double>(features.rows());
  // Symmetrize away rounding so the solver sees an exactly symmetric input.
  s.second_moment = 0.5 * (s.second_moment + s.second_moment.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s.second_moment);
  if (solver.info() != Eigen::Success) {
    throw NumericError("compute_spectrum: eigensolver did not converge");
  }
  // The solver returns ascending order.
  s.eigenvalues = solver.eigenvalues().reverse().cwiseMax(0.0);
  // Values below the solver's resolution are rounding residue of zero.
  const double resolution = static_cast<double>(s.dim()) *
                            std::numeric_limits<double>::epsilon() * s.eigenvalues(0);
  for (auto& v : s.eigenvalues) {
    if (v <= resolution) v = 0.0;
  }
  s.eigenvectors = solver.eigenvectors().rowwise().reverse();
  return s;
}

Eigen::VectorXd estimate_cross_eigenvalues(const Spectrum& own,
                                           const Eigen::MatrixXd& foreign_vectors) {
  if (foreign_vectors.rows() != own.second_moment.rows()) {
    throw ShapeError("estimate_cross_eigenvalues: dimension mismatch");
  }
  return (own.second_moment * foreign_vectors).colwise().norm().transpose();
}

double relevance(const Eigen::VectorXd& own_eigenvalues,
                 const Eigen::VectorXd& estimated, double floor) {
  if (own_eigenvalues.size() != estimated.size() || own_eigenvalues.size() == 0) {
    throw ShapeError("relevance: eigenvalue vectors differ in length");
  }
  if (!(floor > 0.0)) throw ConfigError("relevance: floor must be positive");
  const double top = own_eigenvalues.maxCoeff();
  const double cut = top > 0.0 ? floor * top : floor;
  double log_sum = 0.0;
  for (Eigen::Index k = 0; k < own_eigenvalues.size(); ++k) {
    const double a = std::max(own_eigenvalues(k), cut);
    const double b = std::max(estimated(k), cut);
    log_sum += std::log(std::min(a, b)) - std::log(std::max(a, b));
  }
  const double r = std::exp(log_sum / static_cast<double>(own_eigenvalues.size()));
  return std::clamp(r, 0.0, 1.0);
}

SimilarityMatrix::SimilarityMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
  if (values_.rows() != values_.cols()) {
    throw ConfigError("SimilarityMatrix: matrix must be square");
  }
  for (Eigen::Index i = 0; i < values_.rows(); ++i) {
    for (Eigen::Index j = 0; j < values_.cols(); ++j) {
      const double v = values_(i, j);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ConfigError("SimilarityMatrix: entries must lie in [0, 1]");
      }
      if (v != values_(j, i)) {
        throw ConfigError("SimilarityMatrix: matrix must be symmetric");
      }
    }
  }
}

SimilarityMatrix similarity_matrix(std::span<const Spectrum> spectra,
                                   double floor, std::size_t threads) {
  const std::size_t K = spectra.size();
  if (K < 2) throw ConfigError("similarity_matrix: need at least two users");
  for (const auto& s : spectra) {
    if (s.dim() != spectra.front().dim()) {
      throw ShapeError("similarity_matrix: spectra differ in dimension");
    }
  }
  Eigen::MatrixXd r(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));
  parallel_for(K * K, threads, [&](std::size_t idx) {
    const std::size_t i = idx / K;
    const std::size_t j = idx % K;
    const auto estimated = estimate_cross_eigenvalues(spectra[i], spectra[j].eigenvectors);
    r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
        relevance(spectra[i].eigenvalues, estimated, floor);
  });
  Eigen::MatrixXd R(r.rows(), r.cols());
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    for (Eigen::Index j = i; j < r.cols(); ++j) {
      const double v = (r(i, j) + r(j, i)) / 2.0;
      R(i, j) = v;
      R(j, i) = v;
    }
  }
  return SimilarityMatrix(std::move(R));
}

ClusterAssignment::ClusterAssignment(std::vector<std::size_t> cluster_of,
                                     std::size_t num_clusters)
    : cluster_of_(std::move(cluster_of)), num_clusters_(num_clusters) {
  for (auto m : cluster_of_) {
    if (m >= num_clusters_) {
      throw ConfigError("ClusterAssignment: cluster index out of range");
    }
  }
}

ClusterAssignment ClusterAssignment::from_matrix(const Eigen::MatrixXi& ci) {
  std::vector<std::size_t> labels;
  for (Eigen::Index k = 0; k < ci.rows(); ++k) {
    int ones = 0;
    std::size_t at = 0;
    for (Eigen::Index m = 0; m < ci.cols(); ++m) {
      if (ci(k, m) == 1) {
        ++ones;
        at = static_cast<std::size_t>(m);
      } else if (ci(k, m) != 0) {
        throw ConfigError("ClusterAssignment: entries must be 0 or 1");
      }
    }
    if (ones != 1) throw ConfigError("ClusterAssignment: each row must be one-hot");
    labels.push_back(at);
  }
  return ClusterAssignment(std::move(labels), static_cast<std::size_t>(ci.cols()));
}

std::vector<std::size_t> ClusterAssignment::members(std::size_t m) const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < cluster_of_.size(); ++k) {
    if (cluster_of_[k] == m) out.push_back(k);
  }
  return out;
}

std::vector<std::size_t> ClusterAssignment::sizes() const {
  std::vector<std::size_t> out(num_clusters_);
  for (auto m : cluster_of_) ++out[m];
  return out;
}

bool ClusterAssignment::all_clusters_nonempty() const {
  const auto s = sizes();
  return std::none_of(s.begin(), s.end(), [](std::size_t n) { return n == 0; });
}

Eigen::MatrixXi ClusterAssignment::matrix() const {
  Eigen::MatrixXi ci = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(cluster_of_.size()),
                                             static_cast<Eigen::Index>(num_clusters_));
  for (std::size_t k = 0; k < cluster_of_.size(); ++k) {
    ci(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(cluster_of_[k])) = 1;
  }
  return ci;
}

ClusterAssignment hac_cluster(const SimilarityMatrix& similarity,
                              std::size_t num_clusters) {
  const std::size_t K = similarity.size();
  if (num_clusters == 0 || num_clusters > K) {
    throw ConfigError("hac_cluster: need 1 <= M <= K");
  }
  // Kept sorted by smallest member: merging b into a (a < b) preserves order.
  std::vector<std::vector<std::size_t>> clusters(K);
  for (std::size_t k = 0; k < K; ++k) clusters[k] = {k};

  auto linkage = [&](const std::vector<std::size_t>& a,
                     const std::vector<std::size_t>& b) {
    double sum = 0.0;
    for (auto i : a) {
      for (auto j : b) sum += 1.0 - similarity(i, j);
    }
    return sum / static_cast<double>(a.size() * b.size());
  };

  while (clusters.size() > num_clusters) {
    std::size_t best_a = 0;
    std::size_t best_b = 1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < clusters.size(); ++a) {
      for (std::size_t b = a + 1; b < clusters.size(); ++b) {
        const double d = linkage(clusters[a], clusters[b]);
        if (d < best) {
          best = d;
          best_a = a;
          best_b = b;
        }
      }
    }
    auto& target = clusters[best_a];
    target.insert(target.end(), clusters[best_b].begin(), clusters[best_b].end());
    std::sort(target.begin(), target.end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(best_b));
  }

  std::vector<std::size_t> labels(K);
  for (std::size_t m = 0; m < clusters.size(); ++m) {
    for (auto k : clusters[m]) labels[k] = m;
  }
  return ClusterAssignment(std::move(labels), num_clusters);
}

SimilarityClustering cluster_by_data_similarity(
    std::span<const FeatureMatrix> mapped_features, std::size_t num_clusters,
    double floor, std::size_t threads) {
  SimilarityClustering out;
  out.spectra.resize(mapped_features.size());
  parallel_for(mapped_features.size(), threads, [&](std::size_t k) {
    out.spectra[k] = compute_spectrum(mapped_features[k]);
  });
  out.similarity = similarity_matrix(out.spectra, floor, threads);
  out.assignment = hac_cluster(out.similarity, num_clusters);
  return out;
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& values) {
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (j) out << ',';
      out << values(i, j);
    }
    out << '\n';
  }
  out.precision(old_precision);
}

void write_assignment_csv(std::ostream& out, const ClusterAssignment& ci) {
  out << "user";
  for (std::size_t m = 0; m < ci.num_clusters(); ++m) out << ",cluster_" << m;
  out << '\n';
  const auto matrix = ci.matrix();
  for (Eigen::Index k = 0; k < matrix.rows(); ++k) {
    out << k;
    for (Eigen::Index m = 0; m < matrix.cols(); ++m) out << ',' << matrix(k, m);
    out << '\n';
  }
}

}  // namespace rccpfl
