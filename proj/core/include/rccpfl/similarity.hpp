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

#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "rccpfl/data_model.hpp"

namespace rccpfl {

/// Eigen-decomposition of a user's feature second moment
/// S = (1/n) Phi(X)^T Phi(X). Eigenvalues are sorted descending and clamped at
/// zero; column k of `eigenvectors` pairs with eigenvalue k.
struct Spectrum {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
  Eigen::MatrixXd second_moment;

  std::size_t dim() const noexcept {
    return static_cast<std::size_t>(eigenvalues.size());
  }
};

/// Relative floor applied to eigenvalues before taking ratios.
inline constexpr double kDefaultEigenFloor = 1e-12;

/// Throws NumericError on non-finite input, ShapeError on an empty matrix.
Spectrum compute_spectrum(const FeatureMatrix& features);

/// lambda_hat_k = || S_own * v_k || for every column v_k of `foreign_vectors`:
/// how much of the own second moment lies along another user's eigenvectors.
Eigen::VectorXd estimate_cross_eigenvalues(const Spectrum& own,
                                           const Eigen::MatrixXd& foreign_vectors);

/// Geometric mean over k of min(a_k, b_k) / max(a_k, b_k), with a = own
/// eigenvalues and b = estimated ones, both floored at floor * a_1 (or at
/// `floor` itself when the own spectrum is all zero). Evaluated in log space.
double relevance(const Eigen::VectorXd& own_eigenvalues,
                 const Eigen::VectorXd& estimated,
                 double floor = kDefaultEigenFloor);

/// Symmetric K x K matrix of pairwise data similarities with entries in [0, 1].
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  /// Throws ConfigError unless `values` is square, exactly symmetric and every
  /// entry lies in [0, 1].
  explicit SimilarityMatrix(Eigen::MatrixXd values);

  std::size_t size() const noexcept {
    return static_cast<std::size_t>(values_.rows());
  }
  double operator()(std::size_t i, std::size_t j) const {
    return values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  const Eigen::MatrixXd& values() const noexcept { return values_; }

 private:
  Eigen::MatrixXd values_;
};

/// R(i, j) = (r(i, j) + r(j, i)) / 2 over every ordered pair, diagonal
/// included. The K^2 relevance evaluations may run on `threads` workers; the
/// result does not depend on the thread count.
SimilarityMatrix similarity_matrix(std::span<const Spectrum> spectra,
                                   double floor = kDefaultEigenFloor,
                                   std::size_t threads = 1);

/// One-hot user-to-cluster association (the K x M matrix CI), stored as a
/// cluster index per user.
class ClusterAssignment {
 public:
  ClusterAssignment() = default;
  /// Throws ConfigError if any label is >= num_clusters.
  ClusterAssignment(std::vector<std::size_t> cluster_of, std::size_t num_clusters);

  /// Throws ConfigError unless every row has exactly one 1.
  static ClusterAssignment from_matrix(const Eigen::MatrixXi& ci);

  std::size_t num_users() const noexcept { return cluster_of_.size(); }
  std::size_t num_clusters() const noexcept { return num_clusters_; }
  std::size_t cluster_of(std::size_t user) const { return cluster_of_.at(user); }
  const std::vector<std::size_t>& labels() const noexcept { return cluster_of_; }

  /// Users of cluster m in ascending id order.
  std::vector<std::size_t> members(std::size_t m) const;
  std::vector<std::size_t> sizes() const;
  bool all_clusters_nonempty() const;
  Eigen::MatrixXi matrix() const;

  friend bool operator==(const ClusterAssignment&, const ClusterAssignment&) = default;

 private:
  std::vector<std::size_t> cluster_of_;
  std::size_t num_clusters_ = 0;
};

/// Average-linkage agglomerative clustering on D = 1 - R, merging the closest
/// pair of clusters until `num_clusters` remain. Ties go to the
/// lexicographically smallest pair of cluster indices, where clusters are
/// ordered by their smallest member. Final cluster indices follow the same
/// order. Throws ConfigError unless 1 <= num_clusters <= K.
ClusterAssignment hac_cluster(const SimilarityMatrix& similarity,
                              std::size_t num_clusters);

struct SimilarityClustering {
  std::vector<Spectrum> spectra;
  SimilarityMatrix similarity;
  ClusterAssignment assignment;
};

/// Full data-similarity clustering over label-free mapped features, one
/// matrix per user.
SimilarityClustering cluster_by_data_similarity(
    std::span<const FeatureMatrix> mapped_features, std::size_t num_clusters,
    double floor = kDefaultEigenFloor, std::size_t threads = 1);

/// Row-major CSV with full round-trip precision.
void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& values);
void write_assignment_csv(std::ostream& out, const ClusterAssignment& ci);

}  // namespace rccpfl
