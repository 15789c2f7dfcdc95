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

#ifndef VAA__ATTACKS_HPP_
#define VAA__ATTACKS_HPP_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vaa/election.hpp"
#include "vaa/matching.hpp"
#include "vaa/random.hpp"
#include "vaa/ranking.hpp"

namespace vaa
{

struct AnnealingConfig
{
  int iterations = 20000;
  double initial_temperature = 0.005;  // in visibility units
  double cooling_factor = 0.9995;
  int restarts = 4;
  double voter_subsample_fraction = 1.0;
  std::uint64_t seed = 0;

  /// \throws vaa::Error when a field is out of range.
  void validate() const;
};

enum class CalibrationDirection { moderate, strong };

std::string_view to_string(CalibrationDirection d);
std::optional<CalibrationDirection> parse_direction(std::string_view text);

/// Probability f(t) that the question shown at 1-based position t is answered.
struct DropModel
{
  enum class Mode { fitted_linear, custom };

  Mode mode = Mode::fitted_linear;
  double intercept = 0.96;
  double slope = 0.0012;
  std::vector<double> table;  // custom: f(t) = table[t - 1], last entry repeats

  static DropModel constant(double p) { return {Mode::fitted_linear, p, 0.0, {}}; }
  static DropModel custom(std::vector<double> rates) { return {Mode::custom, 0.0, 0.0, std::move(rates)}; }

  /// Unclamped model value.
  double raw(int position) const;
  /// raw() clamped to [0, 1].
  double keep_probability(int position) const;
};

/// Drops each present answer independently; the answer shown at position p
/// (0-based, question `ordering[p]`) survives with probability f(p + 1).
/// Dropped answers get weight 0.
Profile apply_drop(const Profile & p, std::span<const std::size_t> ordering, const DropModel & drop, Rng & rng);

struct ReportRow
{
  std::string entity;
  double baseline = 0.0;
  double attacked = 0.0;
  std::optional<double> rel_change;      // undefined when baseline is 0
  std::optional<double> rel_change_std;  // set by repeated-trial experiments
};

struct AttackReport
{
  std::string scenario;
  std::vector<ReportRow> rows;
  std::map<std::string, std::string> metadata;

  const ReportRow * find(std::string_view entity) const;
};

std::optional<double> relative_change(double baseline, double attacked);

/// CSV columns: scenario,entity,baseline,attacked,rel_change (plus
/// rel_change_std when any row carries one). Undefined changes are empty cells.
void write_report_csv(std::ostream & out, const AttackReport & report);

// --- Answer optimization (AO) ---------------------------------------------

struct CraftResult
{
  Profile profile;
  double visibility = 0.0;      // over every voter of the state
  double objective = 0.0;       // over the (sub)sample the search ran on
  std::int64_t evaluations = 0;
};

/// Sort key given to a crafted candidate; loses every exact tie.
inline constexpr std::string_view kCraftedSortKey = "\xF4\x8F\xBF\xBF";

/// k-visibility of an extra candidate with `profile` in `state`. The
/// Mahalanobis precision context is taken from the real candidates only.
double crafted_visibility(const Election & e, std::string_view state, std::optional<int> k,
                          const MatchingMethod & method, const Profile & profile);

/// Simulated annealing over complete answer profiles.
CraftResult optimize_answers(const Election & e, std::string_view state, std::optional<int> k,
                             const MatchingMethod & method, const AnnealingConfig & cfg);

/// Exhaustive search; ties go to the lexicographically smallest answer vector.
/// \throws vaa::Error when the profile space exceeds `max_profiles`.
CraftResult brute_force_optimal(const Election & e, std::string_view state, std::optional<int> k,
                                const MatchingMethod & method, std::uint64_t max_profiles = 1000000);

/// Returns `e` with a crafted candidate appended to `state` (own list when
/// the election has lists).
Election inject_candidate(const Election & e, std::string_view state, std::string_view party,
                          const Profile & profile);

// --- Answer calibration (AC) ----------------------------------------------

/// Moves each present answer one allowed step toward (moderate) or away
/// from (strong) the scale neutral; answers exactly at neutral stay.
Profile calibrate_answers(const Profile & p, std::span<const Question> questions, CalibrationDirection dir);

Election calibrate_party(const Election & e, std::string_view party, CalibrationDirection dir);

/// Relative change of every party's pooled visibility after `party` calibrates.
AttackReport calibration_experiment(const Election & e, std::string_view party, const MatchingMethod & method,
                                    CalibrationDirection dir, std::optional<int> k = std::nullopt,
                                    unsigned threads = 1);

// --- Diversification (DIV) ------------------------------------------------

struct DiversificationRow
{
  std::string party;
  std::size_t candidates = 0;
  double vote_share = 0.0;
  double candidates_per_point = 0.0;  // candidates per vote-share percentage point
  double visibility = 0.0;
  double visibility_ratio = 0.0;      // visibility / vote share
};

struct DiversificationAnalysis
{
  std::vector<DiversificationRow> rows;
  std::optional<double> correlation;  // undefined for constant inputs
};

/// \throws vaa::Error when vote shares are missing.
DiversificationAnalysis diversification_analysis(const Election & e, const MatchingMethod & method,
                                                 std::optional<int> k = std::nullopt, unsigned threads = 1);

/// Appends `n_clones` candidates near the party's per-state mean answers,
/// each answer shifted by a uniform integer in [-noise_steps, noise_steps]
/// grid steps. Clones go round-robin over the states where the party runs.
Election add_clones(const Election & e, std::string_view party, int n_clones, int noise_steps, std::uint64_t seed);

AttackReport diversification_simulation(const Election & e, std::string_view party, int n_clones, int noise_steps,
                                        std::uint64_t seed, const MatchingMethod & method,
                                        std::optional<int> k = std::nullopt, unsigned threads = 1);

// --- List centralization (LC) ---------------------------------------------

/// Mean over questions of the population standard deviation of member answers.
double list_spread(const PartyList & list, const Election & e);

struct ListCentralizationRow
{
  std::string list;
  std::string state;
  double spread = 0.0;
  double visibility = 0.0;
};

struct ListCentralization
{
  std::vector<ListCentralizationRow> rows;
  std::optional<double> correlation;
};

ListCentralization list_centralization_analysis(const Election & e, const MatchingMethod & method,
                                                ListScoreMode mode = ListScoreMode::mean_of_scores,
                                                unsigned threads = 1);

// --- Weight selection (WS) ------------------------------------------------

using WeightMap = std::map<double, double>;

WeightMap strong_weights();  // {0, 1/10, 1, 10}
WeightMap weak_weights();    // {0, 9/10, 1, 10/9}

/// Party visibility under remapped weights, over voters that set at least one
/// non-default weight on an answered question.
/// \throws vaa::Error unless the map is a bijection on the weight set fixing 0 and 1.
AttackReport weight_scenario(const Election & e, const MatchingMethod & method, const WeightMap & alt,
                             std::optional<int> k = std::nullopt, unsigned threads = 1);

// --- Similarity score (SS) ------------------------------------------------

struct TopMatchHistogram
{
  std::vector<double> edges;  // bins + 1 edges over [0, 100]
  std::vector<std::size_t> overall;
  std::map<std::string, std::vector<std::size_t>> by_party;  // party of the top candidate
};

TopMatchHistogram top_match_distribution(const Election & e, const MatchingMethod & method, int bins,
                                         unsigned threads = 1);

// --- Question favoritism (QF) ---------------------------------------------

struct GreedySubsetResult
{
  std::vector<int> questions;     // question indices (1-based) in pick order
  std::vector<double> visibility; // party visibility after each pick
  std::vector<std::optional<double>> gain;  // relative to the full questionnaire
  double baseline = 0.0;
  std::size_t best_step = 0;      // position of the largest visibility (0-based)
};

GreedySubsetResult greedy_question_subset(const Election & e, std::string_view party, const MatchingMethod & method,
                                          std::optional<int> k, std::size_t max_size, unsigned threads = 1);

/// |Pearson| over pairwise-complete observations; undefined entries are nullopt.
std::vector<std::vector<std::optional<double>>> question_correlation_matrix(std::span<const Voter> voters,
                                                                            std::size_t question_count);

// --- Question copying (QC) ------------------------------------------------

/// Appends `copies` exact copies of the question at 0-based position `t`.
Election duplicate_question(const Election & e, std::size_t t, int copies);

AttackReport duplicate_question_attack(const Election & e, std::size_t t, int copies, const MatchingMethod & method,
                                       std::optional<int> k = std::nullopt, unsigned threads = 1);

// --- Question order (QO) --------------------------------------------------

/// Mean and standard deviation over trials of each party's relative change
/// between `ordering` and the identity order. Both arms of a trial share the
/// same uniforms per (voter, position).
/// \throws vaa::Error when no voter has a complete profile or `ordering` is not a permutation.
AttackReport question_order_experiment(const Election & e, std::span<const std::size_t> ordering,
                                       const DropModel & drop, int trials, std::uint64_t seed,
                                       const MatchingMethod & method, std::optional<int> k = std::nullopt,
                                       unsigned threads = 1);

// --- Tie-breaking (TB) ----------------------------------------------------

/// Per candidate: baseline = proportional credit, attacked = lexicographic.
AttackReport tiebreak_impact(const Election & e, const MatchingMethod & method, std::optional<int> k = std::nullopt,
                             unsigned threads = 1);

/// Pooled party visibility (slot-weighted over states), one entry per party id.
std::map<std::string, double> pooled_party_visibility(const Election & e, const MatchingMethod & method,
                                                      std::optional<int> k, const TieBreakPolicy & policy,
                                                      unsigned threads = 1);

}  // namespace vaa

#endif  // VAA__ATTACKS_HPP_
