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

#include "rccpfl/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rccpfl/error.hpp"

namespace rccpfl {

std::size_t hog_dimension(std::size_t side, const HogParams& params) {
  const std::size_t cells = side / params.cell_size;
  return cells * cells * params.num_bins;
}

Eigen::VectorXd hog(const Image& image, const HogParams& params) {
  const auto H = static_cast<std::size_t>(image.rows());
  const auto W = static_cast<std::size_t>(image.cols());
  if (H != W) throw ShapeError("hog: image must be square");
  if (params.cell_size == 0 || H % params.cell_size != 0) {
    throw ShapeError("hog: image side not divisible by cell size");
  }
  if (params.num_bins < 2) throw ShapeError("hog: need at least two bins");

  const std::size_t bins = params.num_bins;
  const double range = params.unsigned_gradients ? 180.0 : 360.0;
  const double width = range / static_cast<double>(bins);
  const std::size_t cells = H / params.cell_size;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cells * cells * bins));

  auto at = [&](std::size_t r, std::size_t c) {
    return image(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  };

  for (std::size_t r = 0; r < H; ++r) {
    for (std::size_t c = 0; c < W; ++c) {
      const double gx = at(r, std::min(c + 1, W - 1)) - at(r, c == 0 ? 0 : c - 1);
      const double gy = at(std::min(r + 1, H - 1), c) - at(r == 0 ? 0 : r - 1, c);
      const double magnitude = std::sqrt(gx * gx + gy * gy);
      if (magnitude == 0.0) continue;

      double angle = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
      if (angle < 0.0) angle += 360.0;
      if (params.unsigned_gradients && angle >= 180.0) angle -= 180.0;
      const double pos = angle / width;
      const double base = std::floor(pos);
      const double frac = pos - base;
      const std::size_t lo = static_cast<std::size_t>(base) % bins;
      const std::size_t hi = (lo + 1) % bins;

      const std::size_t cell = (r / params.cell_size) * cells + c / params.cell_size;
      out(static_cast<Eigen::Index>(cell * bins + lo)) += magnitude * (1.0 - frac);
      out(static_cast<Eigen::Index>(cell * bins + hi)) += magnitude * frac;
    }
  }

  const double eps2 = params.per_cell_l2_epsilon * params.per_cell_l2_epsilon;
  for (std::size_t cell = 0; cell < cells * cells; ++cell) {
    auto block = out.segment(static_cast<Eigen::Index>(cell * bins),
                             static_cast<Eigen::Index>(bins));
    const double norm = std::sqrt(block.squaredNorm() + eps2);
    if (norm > 0.0) block /= norm;
  }
  return out;
}

FeatureMatrix hog_features(const FeatureMatrix& features, std::size_t rows,
                           std::size_t cols, const HogParams& params) {
  if (rows * cols != static_cast<std::size_t>(features.cols())) {
    throw ShapeError("hog_features: row length does not match image geometry");
  }
  if (rows != cols) throw ShapeError("hog: image must be square");
  const auto d = static_cast<Eigen::Index>(hog_dimension(rows, params));
  FeatureMatrix out(features.rows(), d);
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const Eigen::Map<const Image> image(features.row(i).data(),
                                        static_cast<Eigen::Index>(rows),
                                        static_cast<Eigen::Index>(cols));
    out.row(i) = hog(image, params).transpose();
  }
  return out;
}

}  // namespace rccpfl
