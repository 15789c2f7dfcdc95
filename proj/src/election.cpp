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

#include "vaa/election.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace vaa
{

std::string_view to_string(ScaleKind kind)
{
  switch (kind) {
    case ScaleKind::policy: return "policy";
    case ScaleKind::value: return "value";
    case ScaleKind::budget: return "budget";
    case ScaleKind::custom: return "custom";
  }
  return "custom";
}

std::optional<ScaleKind> parse_scale_kind(std::string_view text)
{
  if (text == "policy") return ScaleKind::policy;
  if (text == "value") return ScaleKind::value;
  if (text == "budget") return ScaleKind::budget;
  if (text == "custom") return ScaleKind::custom;
  return std::nullopt;
}

AnswerScale::AnswerScale(ScaleKind kind, std::vector<double> allowed)
: kind_(kind), allowed_(std::move(allowed))
{
  if (allowed_.size() < 2) {
    throw Error("answer scale needs at least two allowed values");
  }
  for (std::size_t i = 0; i < allowed_.size(); ++i) {
    if (!std::isfinite(allowed_[i])) throw Error("answer scale values must be finite");
    if (i > 0 && !(allowed_[i - 1] < allowed_[i])) {
      throw Error("answer scale values must be strictly ascending");
    }
  }
}

AnswerScale AnswerScale::policy() { return {ScaleKind::policy, {0, 25, 75, 100}}; }
AnswerScale AnswerScale::value() { return {ScaleKind::value, {0, 17, 33, 50, 67, 83, 100}}; }
AnswerScale AnswerScale::budget() { return {ScaleKind::budget, {0, 25, 50, 75, 100}}; }

std::optional<std::size_t> AnswerScale::index_of(double answer) const noexcept
{
  const auto it = std::lower_bound(allowed_.begin(), allowed_.end(), answer);
  if (it == allowed_.end() || *it != answer) return std::nullopt;
  return static_cast<std::size_t>(it - allowed_.begin());
}

double AnswerScale::nearest(double x) const noexcept
{
  const auto it = std::lower_bound(allowed_.begin(), allowed_.end(), x);
  if (it == allowed_.begin()) return allowed_.front();
  if (it == allowed_.end()) return allowed_.back();
  const double hi = *it;
  const double lo = *(it - 1);
  return (x - lo < hi - x) ? lo : hi;
}

Profile::Profile(std::vector<std::optional<double>> answers, std::vector<double> weights)
: answers_(std::move(answers)), weights_(std::move(weights))
{
  if (answers_.size() != weights_.size()) {
    throw Error("profile answers and weights differ in length");
  }
  for (std::size_t t = 0; t < answers_.size(); ++t) {
    if (!answers_[t]) weights_[t] = 0.0;
  }
}

Profile Profile::complete(const std::vector<double> & answers)
{
  std::vector<std::optional<double>> a(answers.begin(), answers.end());
  return Profile(std::move(a), std::vector<double>(answers.size(), 1.0));
}

std::size_t Profile::answered_count() const noexcept
{
  return static_cast<std::size_t>(
    std::count_if(answers_.begin(), answers_.end(), [](const auto & a) { return a.has_value(); }));
}

void Profile::set_answer(std::size_t t, std::optional<double> answer)
{
  answers_.at(t) = answer;
  if (!answer) weights_[t] = 0.0;
}

void Profile::set_weight(std::size_t t, double weight)
{
  weights_.at(t) = answers_[t] ? weight : 0.0;
}

const State & Election::state(std::string_view id) const
{
  for (const auto & s : states) {
    if (s.id == id) return s;
  }
  throw Error("unknown state '" + std::string(id) + "'");
}

std::optional<std::map<std::string, double>> party_vote_shares(const Election & e)
{
  if (e.parties.empty()) return std::nullopt;
  std::map<std::string, double> shares;
  for (const auto & p : e.parties) {
    if (!p.vote_share) return std::nullopt;
    shares[p.id] = *p.vote_share;
  }
  return shares;
}

namespace
{

void check_profile(const Election & e, const Profile & p, const std::string & entity,
                   bool check_weights, ValidationReport & out)
{
  if (p.size() != e.questions.size()) {
    out.push_back({entity, "answer count differs from question count"});
    return;
  }
  for (std::size_t t = 0; t < p.size(); ++t) {
    const auto & a = p.answer(t);
    if (a && !e.questions[t].scale.contains(*a)) {
      out.push_back({entity, "answer not in allowed set (question " + e.questions[t].id + ")"});
    }
    if (!check_weights) continue;
    const double w = p.weight(t);
    if (std::find(e.weight_set.begin(), e.weight_set.end(), w) == e.weight_set.end()) {
      out.push_back({entity, "weight not in weight_set (question " + e.questions[t].id + ")"});
    }
    if (!a && w != 0.0) {
      out.push_back({entity, "unanswered question carries nonzero weight (question " +
                               e.questions[t].id + ")"});
    }
  }
}

}  // namespace

ValidationReport validate_election(const Election & e)
{
  ValidationReport out;

  std::set<int> indices;
  for (const auto & q : e.questions) {
    if (!indices.insert(q.index).second) {
      out.push_back({q.id, "question index not unique"});
    }
    if (q.scale.neutral() != 0.5 * (q.scale.min() + q.scale.max())) {
      out.push_back({q.id, "neutral is not the scale midpoint"});
    }
  }
  if (std::find(e.weight_set.begin(), e.weight_set.end(), 0.0) == e.weight_set.end()) {
    out.push_back({"weight_set", "weight_set lacks 0"});
  }
  if (std::find(e.weight_set.begin(), e.weight_set.end(), 1.0) == e.weight_set.end()) {
    out.push_back({"weight_set", "weight_set lacks default weight 1"});
  }

  std::set<std::string> states;
  for (const auto & s : e.states) {
    if (!states.insert(s.id).second) out.push_back({s.id, "state declared twice"});
    if (s.seats < 1) out.push_back({s.id, "state has fewer than one seat"});
  }
  std::set<std::string> parties;
  for (const auto & p : e.parties) {
    if (!parties.insert(p.id).second) out.push_back({p.id, "party declared twice"});
  }

  std::map<std::string, const Candidate *> candidates;
  for (const auto & c : e.candidates) {
    if (!candidates.emplace(c.id, &c).second) out.push_back({c.id, "candidate id not unique"});
    if (!states.count(c.state)) out.push_back({c.id, "candidate references undeclared state"});
    if (c.party.empty()) out.push_back({c.id, "candidate has no party"});
    if (!parties.empty() && !parties.count(c.party)) {
      out.push_back({c.id, "candidate references undeclared party"});
    }
    if (c.list.empty()) out.push_back({c.id, "candidate has no list"});
    check_profile(e, c.profile, c.id, false, out);
    if (c.profile.size() == e.questions.size() && !c.profile.is_complete()) {
      out.push_back({c.id, "candidate profile incomplete"});
    }
  }

  std::map<std::string, int> appearances;
  std::set<std::string> list_ids;
  for (const auto & l : e.lists) {
    if (!list_ids.insert(l.id).second) out.push_back({l.id, "list id not unique"});
    if (!states.count(l.state)) out.push_back({l.id, "list references undeclared state"});
    if (l.members.empty()) out.push_back({l.id, "list is empty"});
    for (const auto & m : l.members) {
      const auto it = candidates.find(m);
      if (it == candidates.end()) {
        out.push_back({l.id, "list member '" + m + "' does not exist"});
        continue;
      }
      ++appearances[m];
      if (it->second->state != l.state) out.push_back({l.id, "list member '" + m + "' in another state"});
      if (it->second->list != l.id) out.push_back({m, "candidate list field disagrees with list membership"});
    }
  }
  for (const auto & c : e.candidates) {
    const int n = appearances.count(c.id) ? appearances[c.id] : 0;
    if (!e.lists.empty() && n != 1) out.push_back({c.id, "candidate must appear on exactly one list"});
  }

  std::set<std::string> voter_ids;
  for (const auto & v : e.voters) {
    if (!voter_ids.insert(v.id).second) out.push_back({v.id, "voter id not unique"});
    if (!states.count(v.state)) out.push_back({v.id, "voter references undeclared state"});
    check_profile(e, v.profile, v.id, true, out);
    if (v.profile.answered_count() == 0) out.push_back({v.id, "voter answered no question"});
  }
  return out;
}

int default_k(const Election & e, std::string_view state, Target target, std::optional<int> override_k)
{
  const auto & s = e.state(state);
  if (override_k) {
    if (*override_k < 1) throw Error("k must be positive");
    return *override_k;
  }
  return target == Target::list ? 1 : s.seats;
}

ElectionIndex::ElectionIndex(const Election & e)
{
  for (const auto & s : e.states) {
    if (state_lookup_.emplace(s.id, state_ids_.size()).second) state_ids_.push_back(s.id);
  }
  // Entities may reference states that were never declared; index them anyway so
  // that downstream reductions stay total. validate_election reports these.
  auto ensure_state = [this](const std::string & id) {
    const auto [it, inserted] = state_lookup_.emplace(id, state_ids_.size());
    if (inserted) state_ids_.push_back(id);
    return it->second;
  };
  for (const auto & c : e.candidates) ensure_state(c.state);
  for (const auto & v : e.voters) ensure_state(v.state);
  for (const auto & l : e.lists) ensure_state(l.state);

  state_candidates_.resize(state_ids_.size());
  state_voters_.resize(state_ids_.size());
  state_lists_.resize(state_ids_.size());

  auto add_party = [this](const std::string & id) {
    const auto [it, inserted] = party_lookup_.emplace(id, party_ids_.size());
    if (inserted) party_ids_.push_back(id);
    return it->second;
  };
  for (const auto & p : e.parties) add_party(p.id);

  candidate_party_.reserve(e.candidates.size());
  for (std::size_t c = 0; c < e.candidates.size(); ++c) {
    const auto & cand = e.candidates[c];
    state_candidates_[state_lookup_.at(cand.state)].push_back(c);
    candidate_lookup_.emplace(cand.id, c);
    candidate_party_.push_back(add_party(cand.party));
  }
  for (std::size_t v = 0; v < e.voters.size(); ++v) {
    state_voters_[state_lookup_.at(e.voters[v].state)].push_back(v);
    voter_lookup_.emplace(e.voters[v].id, v);
    if (e.voters[v].preferred_party) add_party(*e.voters[v].preferred_party);
  }
  list_members_.resize(e.lists.size());
  for (std::size_t l = 0; l < e.lists.size(); ++l) {
    state_lists_[state_lookup_.at(e.lists[l].state)].push_back(l);
    list_lookup_.emplace(e.lists[l].id, l);
    for (const auto & m : e.lists[l].members) {
      const auto it = candidate_lookup_.find(m);
      if (it != candidate_lookup_.end()) list_members_[l].push_back(it->second);
    }
  }

  std::vector<std::size_t> order(e.candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto & ca = e.candidates[a];
    const auto & cb = e.candidates[b];
    if (ca.sort_key != cb.sort_key) return ca.sort_key < cb.sort_key;
    if (ca.id != cb.id) return ca.id < cb.id;
    return a < b;
  });
  sort_rank_.resize(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) sort_rank_[order[r]] = r;
}

std::size_t ElectionIndex::state_of(std::string_view id) const
{
  const auto s = find_state(id);
  if (!s) throw Error("unknown state '" + std::string(id) + "'");
  return *s;
}

std::optional<std::size_t> ElectionIndex::find_state(std::string_view id) const
{
  const auto it = state_lookup_.find(std::string(id));
  if (it == state_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> ElectionIndex::find_candidate(std::string_view id) const
{
  const auto it = candidate_lookup_.find(std::string(id));
  if (it == candidate_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> ElectionIndex::find_voter(std::string_view id) const
{
  const auto it = voter_lookup_.find(std::string(id));
  if (it == voter_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> ElectionIndex::find_list(std::string_view id) const
{
  const auto it = list_lookup_.find(std::string(id));
  if (it == list_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> ElectionIndex::find_party(std::string_view id) const
{
  const auto it = party_lookup_.find(std::string(id));
  if (it == party_lookup_.end()) return std::nullopt;
  return it->second;
}

}  // namespace vaa
