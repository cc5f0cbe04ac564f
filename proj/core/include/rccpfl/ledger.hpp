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

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace rccpfl {

enum class CommCategory : std::size_t {
  eigenvector_exchange,
  relevance_report,
  weight_upload,
  weight_broadcast,
  // Extra model copies a user downloads to evaluate every cluster model
  // during loss-based re-association.
  model_probe,
};

inline constexpr std::size_t kCommCategoryCount = 5;

std::string to_string(CommCategory category);

struct CommCounts {
  std::uint64_t uploaded = 0;
  std::uint64_t downloaded = 0;

  CommCounts& operator+=(const CommCounts& o) {
    uploaded += o.uploaded;
    downloaded += o.downloaded;
    return *this;
  }
  friend bool operator==(const CommCounts&, const CommCounts&) = default;
};

/// Scalars moved per (round, user, category). Round 0 holds everything that
/// happens before the first training round.
class CommLedger {
 public:
  CommLedger() = default;
  explicit CommLedger(std::size_t num_users) : num_users_(num_users) {}

  void record(std::size_t round, std::size_t user, CommCategory category,
              std::uint64_t uploaded, std::uint64_t downloaded);

  std::size_t num_users() const noexcept { return num_users_; }
  std::size_t num_rounds() const noexcept { return rounds_.size(); }

  CommCounts at(std::size_t round, std::size_t user, CommCategory category) const;
  CommCounts round_total(std::size_t round, CommCategory category) const;
  /// Everything recorded for `category` in rounds [0, through_round].
  CommCounts cumulative(std::size_t through_round, CommCategory category) const;
  CommCounts total(CommCategory category) const;

  /// Long format: round,user,category,uploaded,downloaded,
  /// cumulative_uploaded,cumulative_downloaded. Zero rows are omitted.
  void write_csv(std::ostream& out) const;

 private:
  using Cell = std::array<CommCounts, kCommCategoryCount>;
  std::size_t num_users_ = 0;
  std::vector<std::vector<Cell>> rounds_;  // [round][user]
};

}  // namespace rccpfl
