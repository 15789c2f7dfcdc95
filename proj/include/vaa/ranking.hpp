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

#ifndef VAA__RANKING_HPP_
#define VAA__RANKING_HPP_

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vaa/election.hpp"
#include "vaa/matching.hpp"

namespace vaa
{

enum class TieBreakKind { lexicographic, seeded_fair_random, proportional_credit };

std::string_view to_string(TieBreakKind kind);
std::optional<TieBreakKind> parse_tiebreak(std::string_view text);

/// How exact distance ties are resolved.
///
/// lexicographic: bytewise sort_key order (Smartvote's last-name rule).
/// seeded_fair_random: ties shuffled by a stream derived from (seed, voter id).
/// proportional_credit: boundary ties share the remaining top-k slots equally;
/// only meaningful for visibility accounting.
struct TieBreakPolicy
{
  TieBreakKind kind = TieBreakKind::lexicographic;
  std::uint64_t seed = 0;

  static TieBreakPolicy lexicographic() { return {TieBreakKind::lexicographic, 0}; }
  static TieBreakPolicy seeded(std::uint64_t seed) { return {TieBreakKind::seeded_fair_random, seed}; }
  static TieBreakPolicy proportional() { return {TieBreakKind::proportional_credit, 0}; }
};

struct RankEntry
{
  std::string id;
  double score = 0.0;     // similarity in [0, 100]
  double distance = 0.0;  // ordering key (after the neutral-profile fallback)
  bool flagged = false;   // distance undefined (no overlapping questions)
};

struct Ranking
{
  std::string voter_id;
  std::vector<RankEntry> entries;
  int k = 0;
};

enum class ListScoreMode { mean_of_scores, score_of_mean };

struct Credit
{
  std::size_t entity;
  double credit;
};

/// Ranking key of a distance: failed comparisons (no overlap) sort last.
inline double ordering_key(const Distance & d) noexcept
{
  return d.status == DistanceStatus::empty_overlap ? std::numeric_limits<double>::infinity() : d.value;
}

/// Top-k of `keys` (ascending; ties ordered by `tie_ranks`, then resolved per
/// policy). Returned in rank order. With k >= keys.size() and a non-credit
/// policy this is the full ranking.
std::vector<Credit> select_top_k(std::span<const double> keys, std::span<const std::size_t> tie_ranks,
                                 std::size_t k, const TieBreakPolicy & policy, std::string_view voter_id);

struct VisibilityRow
{
  std::string entity_id;
  std::string state;
  int k = 0;
  double visibility = 0.0;
};

struct StateSlots
{
  int k = 0;
  std::size_t voters = 0;
  std::size_t entities = 0;

  /// Number of recommendation slots handed out in the state.
  double slots() const noexcept
  {
    return static_cast<double>(voters) * static_cast<double>(std::min<std::size_t>(static_cast<std::size_t>(k), entities));
  }
};

struct VisibilityTable
{
  Target kind = Target::candidate;
  std::vector<VisibilityRow> rows;
  std::map<std::string, StateSlots> states;

  std::optional<double> find(std::string_view entity, std::string_view state) const;
  /// Slot-weighted visibility over every state (a party's share of all slots).
  double pooled(std::string_view entity) const;
  /// pooled() for every entity appearing in the table.
  std::map<std::string, double> pooled_all() const;
};

/// CSV columns: entity_id,state,kind,k,visibility
void write_visibility_csv(std::ostream & out, const VisibilityTable & table);

struct MitigationConfig
{
  bool deal_breaker = false;
  bool party_cap = false;
  bool relative_normalization = false;
  bool mean_vector_list_score = false;
};

/// Per-state matchers and prepared candidates for one election and method.
///
/// Rankings of different voters are independent; all const members are safe
/// to call concurrently.
class RankingEngine
{
public:
  RankingEngine(const Election & e, MatchingMethod method, unsigned threads = 1);

  const Election & election() const noexcept { return *election_; }
  const ElectionIndex & index() const noexcept { return index_; }
  const MatchingMethod & method() const noexcept { return method_; }
  unsigned threads() const noexcept { return threads_; }

  const Matcher & matcher(std::size_t state) const { return *matchers_.at(state); }
  const std::vector<Matcher::PreparedCandidate> & prepared_candidates(std::size_t state) const
  {
    return prepared_.at(state);
  }
  std::size_t voter_state(std::size_t voter) const { return voter_state_.at(voter); }

  /// Distances to the candidates of `state` in index order. Neutral Angular
  /// profiles are mapped to (worst valid distance + 1).
  void distances(const Matcher::PreparedVoter & v, std::size_t state, std::vector<Distance> & out) const;
  void distances(std::size_t voter, std::vector<Distance> & out) const;
  /// Re-applies the neutral-profile mapping after entries of `d` were replaced.
  void neutral_fallback(std::vector<Distance> & d) const;

  /// Top-k over distances to the candidates of `state` (global candidate indices).
  std::vector<Credit> select(std::size_t state, std::span<const Distance> d, std::size_t k,
                             const TieBreakPolicy & policy, std::string_view voter_id) const;

  /// Top-k candidate credits for an election voter (global candidate indices).
  std::vector<Credit> top_k(std::size_t voter, int k, const TieBreakPolicy & policy) const;

  Ranking rank_candidates(const Voter & voter, const TieBreakPolicy & policy) const;
  Ranking rank_lists(const Voter & voter, ListScoreMode mode) const;

  /// Scores of the lists of `state` (index order) for a prepared voter.
  void list_scores(const Matcher::PreparedVoter & v, std::size_t state, ListScoreMode mode,
                   std::span<const Distance> candidate_distances, std::vector<double> & out) const;
  /// Bytewise list-id rank, used to order tied lists.
  std::size_t list_rank(std::size_t list) const { return list_rank_.at(list); }

private:
  const Election * election_;
  ElectionIndex index_;
  MatchingMethod method_;
  unsigned threads_;
  std::vector<std::shared_ptr<const Matcher>> matchers_;
  std::vector<std::vector<Matcher::PreparedCandidate>> prepared_;
  std::vector<std::vector<Matcher::PreparedCandidate>> list_means_;  // per state, index order
  std::vector<std::vector<std::vector<std::size_t>>> list_local_members_;
  std::vector<std::size_t> voter_state_;
  std::vector<std::size_t> list_rank_;
};

/// Per-voter top-k credits for every voter of the election.
struct TopK
{
  std::vector<int> k_per_state;
  std::vector<std::vector<Credit>> per_voter;
};

TopK compute_top_k(const RankingEngine & engine, std::optional<int> k_override, const TieBreakPolicy & policy);

VisibilityTable candidate_visibility(const RankingEngine & engine, const TopK & top);
VisibilityTable party_visibility(const RankingEngine & engine, const TopK & top);
VisibilityTable list_visibility(const RankingEngine & engine, int k = 1,
                                ListScoreMode mode = ListScoreMode::mean_of_scores,
                                const TieBreakPolicy & policy = {});

VisibilityTable candidate_visibility(const Election & e, const MatchingMethod & method,
                                     std::optional<int> k_override, const TieBreakPolicy & policy);
VisibilityTable party_visibility(const Election & e, const MatchingMethod & method,
                                 std::optional<int> k_override, const TieBreakPolicy & policy);
VisibilityTable list_visibility(const Election & e, const MatchingMethod & method, int k = 1,
                                ListScoreMode mode = ListScoreMode::mean_of_scores);

Ranking rank_candidates(const Voter & voter, const Election & e, const MatchingMethod & method,
                        const TieBreakPolicy & policy);
Ranking rank_lists(const Voter & voter, const Election & e, const MatchingMethod & method, ListScoreMode mode);

/// Voter weights in {0, 1, inf}: sort by number of disagreements on infinite-weight
/// questions, then by the base distance with inf read as 1, then by sort_key.
Ranking deal_breaker_rank(const RankingEngine & engine, const Voter & voter);
Ranking deal_breaker_rank(const Voter & voter, const Election & e, const MatchingMethod & method);

/// Largest-remainder apportionment of k slots by `shares`, capped per party;
/// overflow from capped parties cascades down the remainder order.
std::vector<int> largest_remainder(std::span<const double> shares, std::span<const int> capacities, int k);

/// Re-selects the first k entries so that each party of the voter's state gets
/// slots proportional to the voter's similarity with that party's mean answers.
Ranking cap_party_topk(const RankingEngine & engine, const Ranking & ranking, int k);
Ranking cap_party_topk(const Ranking & ranking, const Election & e, const MatchingMethod & method, int k);

/// Scales scores so the top entry reads 100.
Ranking relative_score_normalization(const Ranking & ranking);

/// Per-question mean answers of a party's candidates in one state.
std::vector<double> party_mean_answers(const Election & e, std::string_view party, std::string_view state);

/// Distance between a candidate's answers and the mean answers of their party
/// in their state (all questions weighted 1).
double distance_to_party_mean(const RankingEngine & engine, std::size_t candidate);

struct Recommendation
{
  Ranking candidates;
  Ranking lists;
};

/// Candidate and list recommendations for one voter with optional mitigations.
Recommendation recommend(const RankingEngine & engine, const Voter & voter, const TieBreakPolicy & policy,
                         std::optional<int> k_override, const MitigationConfig & mitigations);

}  // namespace vaa

#endif  // VAA__RANKING_HPP_
