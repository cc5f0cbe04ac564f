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

#include "rccpfl/ledger.hpp"

#include <ostream>

#include "rccpfl/error.hpp"

namespace rccpfl {

std::string to_string(CommCategory category) {
  switch (category) {
    case CommCategory::eigenvector_exchange: return "eigenvector_exchange";
    case CommCategory::relevance_report: return "relevance_report";
    case CommCategory::weight_upload: return "weight_upload";
    case CommCategory::weight_broadcast: return "weight_broadcast";
    case CommCategory::model_probe: return "model_probe";
  }
  return "unknown";
}

void CommLedger::record(std::size_t round, std::size_t user,
                        CommCategory category, std::uint64_t uploaded,
                        std::uint64_t downloaded) {
  if (user >= num_users_) throw ConfigError("ledger: user out of range");
  if (rounds_.size() <= round) rounds_.resize(round + 1, std::vector<Cell>(num_users_));
  rounds_[round][user][static_cast<std::size_t>(category)] += {uploaded, downloaded};
}

CommCounts CommLedger::at(std::size_t round, std::size_t user,
                          CommCategory category) const {
  if (round >= rounds_.size() || user >= num_users_) return {};
  return rounds_[round][user][static_cast<std::size_t>(category)];
}

CommCounts CommLedger::round_total(std::size_t round, CommCategory category) const {
  CommCounts sum;
  for (std::size_t k = 0; k < num_users_; ++k) sum += at(round, k, category);
  return sum;
}

CommCounts CommLedger::cumulative(std::size_t through_round,
                                  CommCategory category) const {
  CommCounts sum;
  for (std::size_t r = 0; r <= through_round && r < rounds_.size(); ++r) {
    sum += round_total(r, category);
  }
  return sum;
}

CommCounts CommLedger::total(CommCategory category) const {
  return rounds_.empty() ? CommCounts{} : cumulative(rounds_.size() - 1, category);
}

void CommLedger::write_csv(std::ostream& out) const {
  out << "round,user,category,uploaded,downloaded,cumulative_uploaded,"
         "cumulative_downloaded\n";
  std::vector<Cell> running(num_users_);
  for (std::size_t r = 0; r < rounds_.size(); ++r) {
    for (std::size_t k = 0; k < num_users_; ++k) {
      for (std::size_t c = 0; c < kCommCategoryCount; ++c) {
        const auto& cell = rounds_[r][k][c];
        running[k][c] += cell;
        if (cell.uploaded == 0 && cell.downloaded == 0) continue;
        out << r << ',' << k << ',' << to_string(static_cast<CommCategory>(c))
            << ',' << cell.uploaded << ',' << cell.downloaded << ','
            << running[k][c].uploaded << ',' << running[k][c].downloaded << '\n';
      }
    }
  }
}

}  // namespace rccpfl
