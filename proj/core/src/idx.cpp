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

#include <zlib.h>

#include <array>
#include <cstring>
#include <memory>

#include "rccpfl/data_model.hpp"
#include "rccpfl/error.hpp"

namespace rccpfl {
namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t at) {
  if (bytes.size() < at + 4) throw IoError("IDX file truncated in header");
  return (std::uint32_t{bytes[at]} << 24) | (std::uint32_t{bytes[at + 1]} << 16) |
         (std::uint32_t{bytes[at + 2]} << 8) | std::uint32_t{bytes[at + 3]};
}

// gzread passes uncompressed files through untouched.
std::vector<std::uint8_t> read_file(const std::string& path) {
  std::unique_ptr<gzFile_s, int (*)(gzFile)> file(gzopen(path.c_str(), "rb"),
                                                  &gzclose);
  if (!file) throw IoError("cannot open " + path);
  std::vector<std::uint8_t> out;
  std::array<std::uint8_t, 1 << 16> chunk{};
  for (;;) {
    const int n = gzread(file.get(), chunk.data(), static_cast<unsigned>(chunk.size()));
    if (n < 0) {
      int code = 0;
      throw IoError("read error in " + path + ": " + gzerror(file.get(), &code));
    }
    if (n == 0) break;
    out.insert(out.end(), chunk.begin(), chunk.begin() + n);
  }
  return out;
}

}  // namespace

GlobalDataset parse_idx_dataset(std::span<const std::uint8_t> images,
                                std::span<const std::uint8_t> labels,
                                Split split) {
  if (read_be32(images, 0) != kImageMagic) {
    throw FormatError("image file: expected magic 0x00000803");
  }
  if (read_be32(labels, 0) != kLabelMagic) {
    throw FormatError("label file: expected magic 0x00000801");
  }
  const std::size_t count = read_be32(images, 4);
  const std::size_t rows = read_be32(images, 8);
  const std::size_t cols = read_be32(images, 12);
  const std::size_t label_count = read_be32(labels, 4);
  if (count != label_count) {
    throw ConsistencyError("image count " + std::to_string(count) +
                           " != label count " + std::to_string(label_count));
  }
  const std::size_t p = rows * cols;
  if (images.size() < 16 + count * p) throw IoError("image file truncated");
  if (labels.size() < 8 + count) throw IoError("label file truncated");

  GlobalDataset out;
  out.split = split;
  out.image_rows = rows;
  out.image_cols = cols;
  out.features.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(p));
  const std::uint8_t* pixels = images.data() + 16;
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      out.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          static_cast<double>(pixels[i * p + j]) / 255.0;
    }
  }
  out.labels.assign(labels.begin() + 8, labels.begin() + 8 + static_cast<std::ptrdiff_t>(count));
  return out;
}

GlobalDataset load_idx_dataset(const std::string& images_path,
                               const std::string& labels_path, Split split) {
  const auto images = read_file(images_path);
  const auto labels = read_file(labels_path);
  return parse_idx_dataset(images, labels, split);
}

}  // namespace rccpfl
