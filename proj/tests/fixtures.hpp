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

#ifndef VAA__TESTS__FIXTURES_HPP_
#define VAA__TESTS__FIXTURES_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vaa/election.hpp"

namespace vaa::testing
{

using Answers = std::vector<std::optional<double>>;

inline std::vector<Question> questions_of(const std::vector<AnswerScale> & scales)
{
  std::vector<Question> qs;
  for (std::size_t t = 0; t < scales.size(); ++t) {
    qs.push_back({static_cast<int>(t + 1), "q" + std::to_string(t + 1), scales[t], ""});
  }
  return qs;
}

inline std::vector<Question> policy_questions(std::size_t n)
{
  return questions_of(std::vector<AnswerScale>(n, AnswerScale::policy()));
}

/// Weight 1 on answered questions, 0 elsewhere.
inline Profile answered(const Answers & a)
{
  std::vector<double> w(a.size());
  for (std::size_t t = 0; t < a.size(); ++t) w[t] = a[t] ? 1.0 : 0.0;
  return Profile(a, w);
}

/// Builds elections candidate by candidate; lists are "<state>-<party>"
/// unless given explicitly.
class Builder
{
public:
  explicit Builder(std::vector<Question> qs) { e_.questions = std::move(qs); }

  Builder & state(const std::string & id, int seats)
  {
    e_.states.push_back({id, seats});
    return *this;
  }

  Builder & party(const std::string & id, std::optional<double> share = std::nullopt)
  {
    e_.parties.push_back({id, id, share, std::nullopt});
    return *this;
  }

  Builder & candidate(const std::string & id, const std::string & state, const std::string & party,
                      const std::vector<double> & answers, std::string list = {})
  {
    if (list.empty()) list = state + "-" + party;
    e_.candidates.push_back({id, id, state, party, list, Profile::complete(answers)});
    return *this;
  }

  Builder & voter(const std::string & id, const std::string & state, const Answers & answers,
                  std::optional<std::vector<double>> weights = std::nullopt,
                  std::optional<std::string> preferred = std::nullopt)
  {
    Voter v;
    v.id = id;
    v.state = state;
    v.preferred_party = std::move(preferred);
    v.profile = weights ? Profile(answers, *weights) : answered(answers);
    v.election_id = "test";
    e_.voters.push_back(std::move(v));
    return *this;
  }

  Election build()
  {
    Election out = e_;
    std::map<std::string, std::size_t> pos;
    for (const auto & c : out.candidates) {
      auto it = pos.find(c.list);
      if (it == pos.end()) {
        it = pos.emplace(c.list, out.lists.size()).first;
        out.lists.push_back({c.list, c.state, c.party, {}});
      }
      out.lists[it->second].members.push_back(c.id);
    }
    return out;
  }

private:
  Election e_;
};

}  // namespace vaa::testing

#endif  // VAA__TESTS__FIXTURES_HPP_
