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

#ifndef VAA__SYNTH_HPP_
#define VAA__SYNTH_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vaa/attacks.hpp"
#include "vaa/election.hpp"

namespace vaa
{

struct SynthState
{
  std::string id;
  int seats = 1;
  std::size_t candidates = 0;
  std::size_t voters = 0;
};

struct SynthParty
{
  std::string id;
  std::string name;
  double vote_share = 0.0;
  std::vector<double> mean;  // latent position, one entry per dimension
  double spread = 0.0;       // standard deviation of candidates around `mean`
};

/// Per-question response: answer = quantize(100 * logistic(slope * (loading . x + offset))).
struct QuestionLoading
{
  std::vector<double> loading;  // unit vector
  double offset = 0.0;
};

struct SynthConfig
{
  std::uint64_t seed = 1;
  std::size_t dimensions = 2;
  std::vector<SynthState> states;
  std::vector<SynthParty> parties;
  double voter_spread = 2.0;  // voters scatter this many times wider than candidates
  /// Scale of each question in presentation order.
  std::vector<ScaleKind> scales;
  /// Explicit loadings; generated from the seed when empty.
  std::vector<QuestionLoading> loadings;
  double loading_offset_sd = 0.3;
  double logistic_slope = 4.0;  // steep enough that candidates mostly answer at the poles
  double candidate_answer_noise = 0.25;  // latent-response noise per candidate answer
  double voter_answer_noise = 0.6;       // latent-response noise per voter answer
  /// Probability of each weight on an answered question.
  std::map<double, double> weight_model{{0.5, 0.1}, {1.0, 0.7}, {2.0, 0.2}};
  DropModel skip;
  double preferred_party_noise = 0.1;

  /// \throws vaa::Error when the configuration cannot produce a valid election.
  void validate() const;
};

/// Three states (36/24/12 seats), 500 candidates, 10^4 voters, five parties,
/// 75 questions (60 policy, 7 value, 8 budget).
SynthConfig default_synth_config();

SynthConfig synth_config_from_json(const std::string & text);
std::string synth_config_to_json(const SynthConfig & cfg);

Election generate_election(const SynthConfig & cfg);

struct StateSummary
{
  std::string id;
  int seats = 0;
  std::size_t candidates = 0;
  std::size_t voters = 0;
  std::size_t lists = 0;
};

struct PartySummary
{
  std::string id;
  std::size_t candidates = 0;
  std::optional<double> vote_share;
  std::size_t preferred_by = 0;
};

struct ElectionSummary
{
  std::vector<StateSummary> states;
  std::vector<PartySummary> parties;
  /// completeness[n] = voters who answered exactly n questions.
  std::vector<std::size_t> completeness;
  double mean_answered_fraction = 0.0;
};

ElectionSummary describe_election(const Election & e);

}  // namespace vaa

#endif  // VAA__SYNTH_HPP_
