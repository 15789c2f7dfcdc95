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

#ifndef VAA__ELECTION_HPP_
#define VAA__ELECTION_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vaa
{

/// Base class for all errors raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

enum class ScaleKind { policy, value, budget, custom };

std::string_view to_string(ScaleKind kind);
std::optional<ScaleKind> parse_scale_kind(std::string_view text);

/// The ordered set of answers a question admits, with its neutral midpoint.
class AnswerScale
{
public:
  /// \throws vaa::Error if `allowed` is not strictly ascending or has fewer than two values.
  AnswerScale(ScaleKind kind, std::vector<double> allowed);

  static AnswerScale policy();  // {0, 25, 75, 100}
  static AnswerScale value();   // {0, 17, 33, 50, 67, 83, 100}
  static AnswerScale budget();  // {0, 25, 50, 75, 100}

  ScaleKind kind() const noexcept { return kind_; }
  const std::vector<double> & allowed() const noexcept { return allowed_; }
  std::size_t size() const noexcept { return allowed_.size(); }
  double min() const noexcept { return allowed_.front(); }
  double max() const noexcept { return allowed_.back(); }
  double neutral() const noexcept { return 0.5 * (allowed_.front() + allowed_.back()); }

  bool contains(double answer) const noexcept { return index_of(answer).has_value(); }
  std::optional<std::size_t> index_of(double answer) const noexcept;
  /// Allowed value closest to `x`; exact midpoints snap upward.
  double nearest(double x) const noexcept;

  bool operator==(const AnswerScale &) const = default;

private:
  ScaleKind kind_;
  std::vector<double> allowed_;
};

struct Question
{
  int index = 0;  // 1-based presentation position
  std::string id;
  AnswerScale scale = AnswerScale::policy();
  std::string text;

  bool operator==(const Question &) const = default;
};

/// Answers and per-question weights of a voter or candidate.
/// An absent answer always carries weight 0.
class Profile
{
public:
  Profile() = default;
  /// \throws vaa::Error on length mismatch.
  Profile(std::vector<std::optional<double>> answers, std::vector<double> weights);

  /// All answers present, all weights 1.
  static Profile complete(const std::vector<double> & answers);

  std::size_t size() const noexcept { return answers_.size(); }
  const std::vector<std::optional<double>> & answers() const noexcept { return answers_; }
  const std::vector<double> & weights() const noexcept { return weights_; }
  const std::optional<double> & answer(std::size_t t) const { return answers_.at(t); }
  double weight(std::size_t t) const { return weights_.at(t); }

  std::size_t answered_count() const noexcept;
  bool is_complete() const noexcept { return answered_count() == answers_.size(); }

  void set_answer(std::size_t t, std::optional<double> answer);
  void set_weight(std::size_t t, double weight);

  bool operator==(const Profile &) const = default;

private:
  std::vector<std::optional<double>> answers_;
  std::vector<double> weights_;
};

struct Candidate
{
  std::string id;
  std::string sort_key;
  std::string state;
  std::string party;
  std::string list;
  Profile profile;

  bool operator==(const Candidate &) const = default;
};

struct Voter
{
  std::string id;
  std::string state;
  std::optional<std::string> preferred_party;
  Profile profile;
  std::int64_t timestamp = 0;
  std::optional<std::string> election_id;

  bool operator==(const Voter &) const = default;
};

struct PartyList
{
  std::string id;
  std::string state;
  std::string party;
  std::vector<std::string> members;

  bool operator==(const PartyList &) const = default;
};

struct Party
{
  std::string id;
  std::string name;
  std::optional<double> vote_share;
  std::optional<std::string> youth_of;  // main party this youth wing merges into

  bool operator==(const Party &) const = default;
};

struct State
{
  std::string id;
  int seats = 1;

  bool operator==(const State &) const = default;
};

struct Election
{
  std::vector<Question> questions;
  std::vector<double> weight_set{0.0, 0.5, 1.0, 2.0};
  std::vector<State> states;
  std::vector<Party> parties;
  std::vector<Candidate> candidates;
  std::vector<Voter> voters;
  std::vector<PartyList> lists;

  std::size_t question_count() const noexcept { return questions.size(); }
  const State & state(std::string_view id) const;
  bool operator==(const Election &) const = default;
};

/// Party id -> vote share, present only when every party declares one.
std::optional<std::map<std::string, double>> party_vote_shares(const Election & e);

struct Violation
{
  std::string entity;
  std::string rule;
};

using ValidationReport = std::vector<Violation>;

ValidationReport validate_election(const Election & e);

enum class Target { candidate, party, list };

/// Seats for candidate/party targets, 1 for lists; `override_k` wins when given.
/// \throws vaa::Error for an unknown state.
int default_k(const Election & e, std::string_view state, Target target,
              std::optional<int> override_k = std::nullopt);

/// Integer lookups over an election, built once per computation.
class ElectionIndex
{
public:
  explicit ElectionIndex(const Election & e);

  std::size_t state_count() const noexcept { return state_ids_.size(); }
  const std::string & state_id(std::size_t s) const { return state_ids_.at(s); }
  std::size_t state_of(std::string_view id) const;
  std::optional<std::size_t> find_state(std::string_view id) const;

  const std::vector<std::size_t> & candidates_in(std::size_t s) const { return state_candidates_.at(s); }
  const std::vector<std::size_t> & voters_in(std::size_t s) const { return state_voters_.at(s); }
  const std::vector<std::size_t> & lists_in(std::size_t s) const { return state_lists_.at(s); }

  std::optional<std::size_t> find_candidate(std::string_view id) const;
  std::optional<std::size_t> find_voter(std::string_view id) const;
  std::optional<std::size_t> find_list(std::string_view id) const;

  /// Members of list `l` as candidate indices (unknown ids skipped).
  const std::vector<std::size_t> & list_members(std::size_t l) const { return list_members_.at(l); }

  /// Party ids in first-appearance order over parties, then candidates, then voters' preferences.
  const std::vector<std::string> & party_ids() const noexcept { return party_ids_; }
  std::optional<std::size_t> find_party(std::string_view id) const;
  std::size_t candidate_party(std::size_t c) const { return candidate_party_.at(c); }

  /// Position of each candidate in bytewise (sort_key, id) order.
  std::size_t sort_rank(std::size_t c) const { return sort_rank_.at(c); }

private:
  std::vector<std::string> state_ids_;
  std::unordered_map<std::string, std::size_t> state_lookup_;
  std::vector<std::vector<std::size_t>> state_candidates_;
  std::vector<std::vector<std::size_t>> state_voters_;
  std::vector<std::vector<std::size_t>> state_lists_;
  std::unordered_map<std::string, std::size_t> candidate_lookup_;
  std::unordered_map<std::string, std::size_t> voter_lookup_;
  std::unordered_map<std::string, std::size_t> list_lookup_;
  std::vector<std::vector<std::size_t>> list_members_;
  std::vector<std::string> party_ids_;
  std::unordered_map<std::string, std::size_t> party_lookup_;
  std::vector<std::size_t> candidate_party_;
  std::vector<std::size_t> sort_rank_;
};

}  // namespace vaa

#endif  // VAA__ELECTION_HPP_
