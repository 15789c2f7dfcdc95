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

#ifndef VAA__METRICS_HPP_
#define VAA__METRICS_HPP_

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vaa/attacks.hpp"
#include "vaa/election.hpp"
#include "vaa/matching.hpp"
#include "vaa/ranking.hpp"

namespace vaa
{

struct MetricConfig
{
  /// Parties for BIA; empty selects the `bia_party_count` largest by vote
  /// share (every party when shares are missing).
  std::vector<std::string> bia_parties;
  std::size_t bia_party_count = 8;
  /// CP weights; empty uses vote shares, or equal weights when shares are missing.
  std::map<std::string, double> cp_weights;
  std::optional<int> k;
  /// ACC3 question weight; empty uses the maximum of the weight set.
  std::optional<double> strong_weight;
  TieBreakPolicy policy = TieBreakPolicy::lexicographic();
  unsigned threads = 1;
};

/// Mean absolute deviation of the answers from their scale neutrals.
/// \throws vaa::Error for an incomplete profile.
double answer_strength(const Profile & p, std::span<const Question> questions);

/// visibility * candidates / seats.
double expectation_normalized_visibility(double visibility, std::size_t candidates, int seats);

/// Population Gini coefficient via the mean absolute difference.
/// nullopt for empty or all-zero input. \throws vaa::Error on negative values.
std::optional<double> gini(std::span<const double> xs);

struct BiaResult
{
  std::optional<double> bia1;
  std::optional<double> bia2;
  std::string bia2_party;
  std::vector<std::string> excluded;  // parties whose median visibility is 0
};

/// Party bias of `method` against the median of every other method.
/// `visibilities` maps method name -> party -> visibility.
BiaResult bia(std::string_view method, const std::map<std::string, std::map<std::string, double>> & visibilities,
              std::span<const std::string> parties);

/// Default BIA party set for an election.
std::vector<std::string> bia_party_set(const Election & e, const MetricConfig & cfg);

struct WeightedChange
{
  std::optional<double> value;
  std::map<std::string, double> per_party;  // relative change of each included party
  std::vector<std::string> excluded;        // zero baseline visibility
};

WeightedChange calibration_potential(const Election & e, const MatchingMethod & method, CalibrationDirection dir,
                                     const MetricConfig & cfg = {});

/// Pearson correlation between answer strength and expectation-normalised
/// visibility, pooled over every candidate.
std::optional<double> asc(const Election & e, const MatchingMethod & method, const MetricConfig & cfg = {});

struct AccuracyResult
{
  std::optional<double> value;
  std::size_t counted = 0;   // voters (ACC1, ACC2) or triples (ACC3)
  std::size_t excluded = 0;  // ACC2: voters whose party runs no list in their state or whose state has one list
};

AccuracyResult acc1(const Election & e, const MatchingMethod & method, const MetricConfig & cfg = {});
AccuracyResult acc2(const Election & e, const MatchingMethod & method, const MetricConfig & cfg = {});
AccuracyResult acc3(const Election & e, const MatchingMethod & method, const MetricConfig & cfg = {});

struct MethodScorecard
{
  std::string method;
  std::optional<double> bia1;
  std::optional<double> bia2;
  std::string bia2_party;
  std::optional<double> cp_m;
  std::optional<double> cp_s;
  std::optional<double> asc;
  std::optional<double> gin;
  std::optional<double> acc1;
  std::optional<double> acc2;
  std::optional<double> acc3;
  std::map<std::string, double> party_visibility;
};

struct ScorecardTable
{
  std::vector<MethodScorecard> rows;
  /// Column -> method names marked best / worst (GIN carries no marker).
  std::map<std::string, std::string> best;
  std::map<std::string, std::string> worst;
};

ScorecardTable method_comparison(const Election & e, std::span<const MatchingMethod> methods,
                                 const MetricConfig & cfg = {});

/// Columns: method,BIA1,BIA2,BIA2_party,CP_M,CP_S,ASC,GIN,ACC1,ACC2,ACC3,best,worst
void write_scorecard_csv(std::ostream & out, const ScorecardTable & table);

}  // namespace vaa

#endif  // VAA__METRICS_HPP_
