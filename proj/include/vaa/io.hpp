// Copyright 2026 The VAA Robustness Authors
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

#ifndef VAA__IO_HPP_
#define VAA__IO_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "vaa/election.hpp"

namespace vaa
{

inline constexpr int kSchemaVersion = 1;

/// Malformed election document; `path` names the offending field, e.g. "voters[3].answers".
class SchemaError : public Error
{
public:
  SchemaError(std::string path, const std::string & message)
  : Error(path + ": " + message), path_(std::move(path))
  {
  }
  const std::string & path() const noexcept { return path_; }

private:
  std::string path_;
};

/// \throws SchemaError
Election election_from_json(std::string_view text);
std::string election_to_json(const Election & e);

/// \throws SchemaError, or vaa::Error when the file cannot be read.
Election load_election(const std::string & path);
void save_election(const Election & e, const std::string & path);

std::string read_file(const std::string & path);
void write_file(const std::string & path, std::string_view content);

/// Youth wing -> main party.
std::map<std::string, std::string> default_youth_merge();

struct CleaningConfig
{
  std::size_t min_answered = 15;
  std::optional<std::int64_t> window_start;  // inclusive
  std::optional<std::int64_t> window_end;    // inclusive
  std::size_t max_consecutive_identical = 14;
  bool dedup = true;
  /// Drop voters without an election id (only while dedup or the window is active).
  bool drop_corrupt = true;
  std::map<std::string, std::string> youth_merge = default_youth_merge();
};

struct CleaningReport
{
  std::size_t input = 0;
  std::size_t corrupt = 0;
  std::size_t outside_window = 0;
  std::size_t too_few_answers = 0;
  std::size_t duplicates = 0;
  std::size_t straight_lining = 0;
  std::size_t merged_preferences = 0;
  std::size_t output = 0;
};

/// Longest run of identical answers on consecutively presented questions; a
/// skipped question ends the run.
std::size_t longest_identical_run(const Profile & p);

std::pair<Election, CleaningReport> clean_voters(const Election & e, const CleaningConfig & cfg = {});

/// 16 hex digits of FNV-1a over `text`.
std::string hash_hex(std::string_view text);

}  // namespace vaa

#endif  // VAA__IO_HPP_
