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

#include <Eigen/Core>

#include "rccpfl/data_model.hpp"

namespace rccpfl {

using Image = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct HogParams {
  std::size_t cell_size = 7;
  std::size_t num_bins = 9;
  bool unsigned_gradients = true;
  double per_cell_l2_epsilon = 1e-6;
};

/// Output dimension of `hog` for a square image of side `side`.
std::size_t hog_dimension(std::size_t side, const HogParams& params);

/// Histogram of oriented gradients of a square grayscale image.
///
/// Gradients use the [-1, 0, 1] stencil with replicated borders. Each pixel's
/// magnitude is split linearly between the two nearest orientation bins, whose
/// centers sit at multiples of the bin width (so 0 degrees is the center of
/// bin 0), wrapping around the orientation circle. Every cell histogram is
/// L2-normalized with h / sqrt(|h|^2 + eps^2) and the cells are concatenated
/// row-major. Throws ShapeError for non-square images or sides not divisible
/// by the cell size.
Eigen::VectorXd hog(const Image& image, const HogParams& params);

/// Applies `hog` to every row of `features`, read as a rows x cols image.
FeatureMatrix hog_features(const FeatureMatrix& features, std::size_t rows,
                           std::size_t cols, const HogParams& params);

inline FeatureMatrix identity_features(const FeatureMatrix& features) {
  return features;
}

}  // namespace rccpfl
