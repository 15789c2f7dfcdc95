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

#include "vaa/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "vaa/random.hpp"
#include "vaa/util.hpp"

namespace vaa
{

std::string_view to_string(TieBreakKind kind)
{
  switch (kind) {
    case TieBreakKind::lexicographic: return "lexicographic";
    case TieBreakKind::seeded_fair_random: return "seeded";
    case TieBreakKind::proportional_credit: return "proportional";
  }
  return "lexicographic";
}

std::optional<TieBreakKind> parse_tiebreak(std::string_view text)
{
  if (text == "lexicographic" || text == "alphabetical" || text == "lex") return TieBreakKind::lexicographic;
  if (text == "seeded" || text == "random" || text == "seeded_fair_random") return TieBreakKind::seeded_fair_random;
  if (text == "proportional" || text == "fair" || text == "proportional_credit") {
    return TieBreakKind::proportional_credit;
  }
  return std::nullopt;
}

std::vector<Credit> select_top_k(std::span<const double> keys, std::span<const std::size_t> tie_ranks,
                                 std::size_t k, const TieBreakPolicy & policy, std::string_view voter_id)
{
  const std::size_t n = keys.size();
  k = std::min(k, n);
  std::vector<Credit> out;
  if (k == 0) return out;

  const auto less = [&](std::size_t a, std::size_t b) {
    if (keys[a] != keys[b]) return keys[a] < keys[b];
    return tie_ranks[a] < tie_ranks[b];
  };

  std::vector<std::size_t> prefix;
  if (k < n) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k - 1), order.end(), less);
    const double threshold = keys[order[k - 1]];
    prefix.reserve(k + 8);
    for (std::size_t i = 0; i < n; ++i) {
      if (keys[i] <= threshold) prefix.push_back(i);
    }
  } else {
    prefix.resize(n);
    std::iota(prefix.begin(), prefix.end(), std::size_t{0});
  }
  std::sort(prefix.begin(), prefix.end(), less);

  switch (policy.kind) {
    case TieBreakKind::lexicographic:
      break;
    case TieBreakKind::seeded_fair_random: {
      std::optional<Rng> rng;
      for (std::size_t a = 0; a < prefix.size();) {
        std::size_t b = a + 1;
        while (b < prefix.size() && keys[prefix[b]] == keys[prefix[a]]) ++b;
        if (b - a > 1) {
          if (!rng) rng = voter_stream(policy.seed, voter_id);
          shuffle_range(prefix.begin() + static_cast<std::ptrdiff_t>(a),
                        prefix.begin() + static_cast<std::ptrdiff_t>(b), *rng);
        }
        a = b;
      }
      break;
    }
    case TieBreakKind::proportional_credit: {
      for (std::size_t a = 0; a < prefix.size() && a < k;) {
        std::size_t b = a + 1;
        while (b < prefix.size() && keys[prefix[b]] == keys[prefix[a]]) ++b;
        const double share = b <= k ? 1.0 : static_cast<double>(k - a) / static_cast<double>(b - a);
        for (std::size_t i = a; i < b; ++i) out.push_back({prefix[i], share});
        a = b;
      }
      return out;
    }
  }
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back({prefix[i], 1.0});
  return out;
}

std::optional<double> VisibilityTable::find(std::string_view entity, std::string_view state) const
{
  for (const auto & r : rows) {
    if (r.entity_id == entity && (state.empty() || r.state == state)) return r.visibility;
  }
  return std::nullopt;
}

double VisibilityTable::pooled(std::string_view entity) const
{
  if (kind != Target::party) return find(entity, "").value_or(0.0);
  double total = 0.0;
  for (const auto & [id, s] : states) total += s.slots();
  if (total == 0.0) return 0.0;
  double num = 0.0;
  for (const auto & r : rows) {
    if (r.entity_id != entity) continue;
    num += r.visibility * states.at(r.state).slots();
  }
  return num / total;
}

std::map<std::string, double> VisibilityTable::pooled_all() const
{
  std::map<std::string, double> out;
  for (const auto & r : rows) {
    if (!out.count(r.entity_id)) out[r.entity_id] = pooled(r.entity_id);
  }
  return out;
}

namespace
{

std::string_view target_name(Target t)
{
  switch (t) {
    case Target::candidate: return "candidate";
    case Target::party: return "party";
    case Target::list: return "list";
  }
  return "candidate";
}

std::shared_ptr<const PrecisionContext> identity_context(std::size_t nq)
{
  auto ctx = std::make_shared<PrecisionContext>();
  const auto n = static_cast<Eigen::Index>(nq);
  ctx->covariance = Eigen::MatrixXd::Zero(n, n);
  ctx->precision = Eigen::MatrixXd::Identity(n, n);
  ctx->factor = Eigen::MatrixXd::Identity(n, n);
  ctx->ridge = 1.0;
  return ctx;
}

}  // namespace

void write_visibility_csv(std::ostream & out, const VisibilityTable & table)
{
  out << "entity_id,state,kind,k,visibility\n";
  for (const auto & r : table.rows) {
    out << csv_escape(r.entity_id) << ',' << csv_escape(r.state) << ',' << target_name(table.kind) << ','
        << r.k << ',' << format_double(r.visibility) << '\n';
  }
}

RankingEngine::RankingEngine(const Election & e, MatchingMethod method, unsigned threads)
: election_(&e), index_(e), method_(std::move(method)), threads_(std::max(1u, threads))
{
  const std::size_t ns = index_.state_count();
  matchers_.resize(ns);
  prepared_.resize(ns);
  list_means_.resize(ns);
  list_local_members_.resize(ns);

  std::shared_ptr<const PrecisionContext> global_ctx;
  if (method_.tag == MethodTag::mahalanobis) {
    std::vector<std::size_t> all(e.candidates.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    global_ctx = all.size() >= 2
                   ? std::make_shared<const PrecisionContext>(
                       build_precision_context(candidate_matrix(e, all), method_.ridge))
                   : identity_context(e.questions.size());
  }
  std::shared_ptr<const Matcher> shared_matcher;
  if (method_.tag != MethodTag::mahalanobis) {
    shared_matcher = std::make_shared<const Matcher>(e.questions, method_);
  }

  std::vector<std::size_t> local(e.candidates.size(), 0);
  for (std::size_t s = 0; s < ns; ++s) {
    const auto & cands = index_.candidates_in(s);
    if (method_.tag == MethodTag::mahalanobis) {
      std::shared_ptr<const PrecisionContext> ctx = global_ctx;
      if (method_.covariance_scope == CovarianceScope::per_state && cands.size() >= 2) {
        ctx = std::make_shared<const PrecisionContext>(
          build_precision_context(candidate_matrix(e, cands), method_.ridge));
      }
      matchers_[s] = std::make_shared<const Matcher>(e.questions, method_, ctx);
    } else {
      matchers_[s] = shared_matcher;
    }
    const Matcher & m = *matchers_[s];
    prepared_[s].reserve(cands.size());
    for (std::size_t i = 0; i < cands.size(); ++i) {
      local[cands[i]] = i;
      prepared_[s].push_back(m.prepare_candidate(e.candidates[cands[i]].profile));
    }
    for (const auto l : index_.lists_in(s)) {
      std::vector<std::size_t> members;
      std::vector<double> mean(e.questions.size(), 0.0);
      for (const auto c : index_.list_members(l)) {
        if (e.candidates[c].state != index_.state_id(s)) continue;
        members.push_back(local[c]);
        const auto & p = e.candidates[c].profile;
        for (std::size_t t = 0; t < mean.size(); ++t) {
          mean[t] += p.answer(t) ? *p.answer(t) : e.questions[t].scale.neutral();
        }
      }
      if (!members.empty()) {
        for (auto & x : mean) x /= static_cast<double>(members.size());
      } else {
        for (std::size_t t = 0; t < mean.size(); ++t) mean[t] = e.questions[t].scale.neutral();
      }
      list_local_members_[s].push_back(std::move(members));
      list_means_[s].push_back(m.prepare_candidate(mean));
    }
  }

  voter_state_.assign(e.voters.size(), 0);
  for (std::size_t s = 0; s < ns; ++s) {
    for (const auto v : index_.voters_in(s)) voter_state_[v] = s;
  }

  std::vector<std::size_t> order(e.lists.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (e.lists[a].id != e.lists[b].id) return e.lists[a].id < e.lists[b].id;
    return a < b;
  });
  list_rank_.resize(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) list_rank_[order[r]] = r;
}

void RankingEngine::distances(const Matcher::PreparedVoter & v, std::size_t state, std::vector<Distance> & out) const
{
  const Matcher & m = *matchers_.at(state);
  const auto & cands = prepared_[state];
  out.resize(cands.size());
  for (std::size_t i = 0; i < cands.size(); ++i) out[i] = m.distance(v, cands[i]);
  neutral_fallback(out);
}

void RankingEngine::neutral_fallback(std::vector<Distance> & out) const
{
  if (method_.tag != MethodTag::angular) return;
  double worst = 0.0;
  bool any_neutral = false;
  for (const auto & d : out) {
    if (d.ok()) worst = std::max(worst, d.value);
    any_neutral = any_neutral || d.status == DistanceStatus::neutral_profile;
  }
  if (!any_neutral) return;
  for (auto & d : out) {
    if (d.status == DistanceStatus::neutral_profile) d.value = worst + 1.0;
  }
}

void RankingEngine::distances(std::size_t voter, std::vector<Distance> & out) const
{
  const std::size_t s = voter_state_.at(voter);
  distances(matchers_[s]->prepare_voter(election_->voters[voter].profile), s, out);
}

std::vector<Credit> RankingEngine::select(std::size_t state, std::span<const Distance> d, std::size_t k,
                                          const TieBreakPolicy & policy, std::string_view voter_id) const
{
  const auto & cands = index_.candidates_in(state);
  thread_local std::vector<double> keys;
  thread_local std::vector<std::size_t> ranks;
  keys.resize(d.size());
  ranks.resize(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    keys[i] = ordering_key(d[i]);
    ranks[i] = index_.sort_rank(cands[i]);
  }
  auto credits = select_top_k(keys, ranks, k, policy, voter_id);
  for (auto & c : credits) c.entity = cands[c.entity];
  return credits;
}

std::vector<Credit> RankingEngine::top_k(std::size_t voter, int k, const TieBreakPolicy & policy) const
{
  thread_local std::vector<Distance> d;
  distances(voter, d);
  return select(voter_state_[voter], d, static_cast<std::size_t>(std::max(k, 0)), policy,
                election_->voters[voter].id);
}

Ranking RankingEngine::rank_candidates(const Voter & voter, const TieBreakPolicy & policy) const
{
  if (policy.kind == TieBreakKind::proportional_credit) {
    throw Error("proportional credit does not produce a single ranking");
  }
  const std::size_t s = index_.state_of(voter.state);
  const Matcher & m = *matchers_[s];
  const auto pv = m.prepare_voter(voter.profile);
  std::vector<Distance> d;
  distances(pv, s, d);
  const auto & cands = index_.candidates_in(s);
  std::vector<double> keys(d.size());
  std::vector<std::size_t> ranks(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    keys[i] = ordering_key(d[i]);
    ranks[i] = index_.sort_rank(cands[i]);
  }
  const auto order = select_top_k(keys, ranks, d.size(), policy, voter.id);
  Ranking r;
  r.voter_id = voter.id;
  r.k = default_k(*election_, voter.state, Target::candidate);
  r.entries.reserve(order.size());
  for (const auto & o : order) {
    const auto & dist = d[o.entity];
    r.entries.push_back({election_->candidates[cands[o.entity]].id, m.similarity(pv, dist), keys[o.entity],
                         dist.status == DistanceStatus::empty_overlap});
  }
  return r;
}

void RankingEngine::list_scores(const Matcher::PreparedVoter & v, std::size_t state, ListScoreMode mode,
                                std::span<const Distance> candidate_distances, std::vector<double> & out) const
{
  const Matcher & m = *matchers_.at(state);
  const auto & members = list_local_members_[state];
  out.resize(members.size());
  for (std::size_t j = 0; j < members.size(); ++j) {
    if (mode == ListScoreMode::score_of_mean) {
      out[j] = m.similarity(v, m.distance(v, list_means_[state][j]));
      continue;
    }
    if (members[j].empty()) {
      out[j] = 0.0;
      continue;
    }
    double sum = 0.0;
    for (const auto i : members[j]) sum += m.similarity(v, candidate_distances[i]);
    out[j] = sum / static_cast<double>(members[j].size());
  }
}

Ranking RankingEngine::rank_lists(const Voter & voter, ListScoreMode mode) const
{
  const std::size_t s = index_.state_of(voter.state);
  const Matcher & m = *matchers_[s];
  const auto pv = m.prepare_voter(voter.profile);
  std::vector<Distance> d;
  distances(pv, s, d);
  std::vector<double> scores;
  list_scores(pv, s, mode, d, scores);
  const auto & lists = index_.lists_in(s);
  std::vector<double> keys(scores.size());
  std::vector<std::size_t> ranks(scores.size());
  for (std::size_t j = 0; j < scores.size(); ++j) {
    keys[j] = -scores[j];
    ranks[j] = list_rank_[lists[j]];
  }
  const auto order = select_top_k(keys, ranks, keys.size(), TieBreakPolicy::lexicographic(), voter.id);
  Ranking r;
  r.voter_id = voter.id;
  r.k = 1;
  for (const auto & o : order) {
    r.entries.push_back({election_->lists[lists[o.entity]].id, scores[o.entity], keys[o.entity], false});
  }
  return r;
}

TopK compute_top_k(const RankingEngine & engine, std::optional<int> k_override, const TieBreakPolicy & policy)
{
  const auto & e = engine.election();
  const auto & idx = engine.index();
  TopK out;
  out.k_per_state.resize(idx.state_count());
  for (std::size_t s = 0; s < idx.state_count(); ++s) {
    out.k_per_state[s] = default_k(e, idx.state_id(s), Target::candidate, k_override);
  }
  out.per_voter.resize(e.voters.size());
  parallel_chunks(e.voters.size(), engine.threads(), 64, [&](std::size_t begin, std::size_t end) {
    for (std::size_t v = begin; v < end; ++v) {
      out.per_voter[v] = engine.top_k(v, out.k_per_state[engine.voter_state(v)], policy);
    }
  });
  return out;
}

VisibilityTable candidate_visibility(const RankingEngine & engine, const TopK & top)
{
  const auto & e = engine.election();
  const auto & idx = engine.index();
  std::vector<double> credit(e.candidates.size(), 0.0);
  for (std::size_t v = 0; v < top.per_voter.size(); ++v) {
    for (const auto & c : top.per_voter[v]) credit[c.entity] += c.credit;
  }
  VisibilityTable t;
  t.kind = Target::candidate;
  for (std::size_t s = 0; s < idx.state_count(); ++s) {
    t.states[idx.state_id(s)] = {top.k_per_state[s], idx.voters_in(s).size(), idx.candidates_in(s).size()};
  }
  for (std::size_t c = 0; c < e.candidates.size(); ++c) {
    const std::size_t s = idx.state_of(e.candidates[c].state);
    const double n = static_cast<double>(idx.voters_in(s).size());
    t.rows.push_back({e.candidates[c].id, e.candidates[c].state, top.k_per_state[s], n > 0 ? credit[c] / n : 0.0});
  }
  return t;
}

VisibilityTable party_visibility(const RankingEngine & engine, const TopK & top)
{
  const auto & e = engine.election();
  const auto & idx = engine.index();
  const std::size_t np = idx.party_ids().size();
  std::vector<std::vector<double>> credit(idx.state_count(), std::vector<double>(np, 0.0));
  for (std::size_t v = 0; v < top.per_voter.size(); ++v) {
    const std::size_t s = engine.voter_state(v);
    for (const auto & c : top.per_voter[v]) credit[s][idx.candidate_party(c.entity)] += c.credit;
  }
  VisibilityTable t;
  t.kind = Target::party;
  for (std::size_t s = 0; s < idx.state_count(); ++s) {
    const StateSlots slots{top.k_per_state[s], idx.voters_in(s).size(), idx.candidates_in(s).size()};
    t.states[idx.state_id(s)] = slots;
    std::vector<bool> present(np, false);
    for (const auto c : idx.candidates_in(s)) present[idx.candidate_party(c)] = true;
    const double denom = slots.slots();
    for (std::size_t p = 0; p < np; ++p) {
      if (!present[p]) continue;
      t.rows.push_back({idx.party_ids()[p], idx.state_id(s), top.k_per_state[s],
                        denom > 0 ? credit[s][p] / denom : 0.0});
    }
  }
  (void)e;
  return t;
}

VisibilityTable list_visibility(const RankingEngine & engine, int k, ListScoreMode mode, const TieBreakPolicy & policy)
{
  if (k < 1) throw Error("k must be positive");
  const auto & e = engine.election();
  const auto & idx = engine.index();
  std::vector<std::vector<Credit>> per_voter(e.voters.size());
  parallel_chunks(e.voters.size(), engine.threads(), 64, [&](std::size_t begin, std::size_t end) {
    std::vector<Distance> d;
    std::vector<double> scores;
    for (std::size_t v = begin; v < end; ++v) {
      const std::size_t s = engine.voter_state(v);
      const auto pv = engine.matcher(s).prepare_voter(e.voters[v].profile);
      engine.distances(pv, s, d);
      engine.list_scores(pv, s, mode, d, scores);
      const auto & lists = idx.lists_in(s);
      std::vector<double> keys(scores.size());
      std::vector<std::size_t> ranks(scores.size());
      for (std::size_t j = 0; j < scores.size(); ++j) {
        keys[j] = -scores[j];
        ranks[j] = engine.list_rank(lists[j]);
      }
      auto credits = select_top_k(keys, ranks, static_cast<std::size_t>(k), policy, e.voters[v].id);
      for (auto & c : credits) c.entity = lists[c.entity];
      per_voter[v] = std::move(credits);
    }
  });
  std::vector<double> credit(e.lists.size(), 0.0);
  for (const auto & cs : per_voter) {
    for (const auto & c : cs) credit[c.entity] += c.credit;
  }
  VisibilityTable t;
  t.kind = Target::list;
  for (std::size_t s = 0; s < idx.state_count(); ++s) {
    t.states[idx.state_id(s)] = {k, idx.voters_in(s).size(), idx.lists_in(s).size()};
  }
  for (std::size_t l = 0; l < e.lists.size(); ++l) {
    const std::size_t s = idx.state_of(e.lists[l].state);
    const double n = static_cast<double>(idx.voters_in(s).size());
    t.rows.push_back({e.lists[l].id, e.lists[l].state, k, n > 0 ? credit[l] / n : 0.0});
  }
  return t;
}

VisibilityTable candidate_visibility(const Election & e, const MatchingMethod & method,
                                     std::optional<int> k_override, const TieBreakPolicy & policy)
{
  const RankingEngine engine(e, method);
  return candidate_visibility(engine, compute_top_k(engine, k_override, policy));
}

VisibilityTable party_visibility(const Election & e, const MatchingMethod & method,
                                 std::optional<int> k_override, const TieBreakPolicy & policy)
{
  const RankingEngine engine(e, method);
  return party_visibility(engine, compute_top_k(engine, k_override, policy));
}

VisibilityTable list_visibility(const Election & e, const MatchingMethod & method, int k, ListScoreMode mode)
{
  const RankingEngine engine(e, method);
  return list_visibility(engine, k, mode);
}

Ranking rank_candidates(const Voter & voter, const Election & e, const MatchingMethod & method,
                        const TieBreakPolicy & policy)
{
  return RankingEngine(e, method).rank_candidates(voter, policy);
}

Ranking rank_lists(const Voter & voter, const Election & e, const MatchingMethod & method, ListScoreMode mode)
{
  return RankingEngine(e, method).rank_lists(voter, mode);
}

Ranking deal_breaker_rank(const RankingEngine & engine, const Voter & voter)
{
  const auto & e = engine.election();
  const auto & idx = engine.index();
  const std::size_t s = idx.state_of(voter.state);
  const Matcher & m = engine.matcher(s);

  std::vector<std::optional<double>> answers = voter.profile.answers();
  std::vector<double> weights = voter.profile.weights();
  std::vector<std::size_t> breakers;
  for (std::size_t t = 0; t < weights.size(); ++t) {
    if (std::isinf(weights[t]) && answers[t]) {
      breakers.push_back(t);
      weights[t] = 1.0;
    }
  }
  const auto pv = m.prepare_voter(Profile(answers, weights));
  std::vector<Distance> d;
  engine.distances(pv, s, d);

  const auto & cands = idx.candidates_in(s);
  std::vector<std::size_t> misses(cands.size(), 0);
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const auto & cp = e.candidates[cands[i]].profile;
    for (const auto t : breakers) {
      if (cp.answer(t) != answers[t]) ++misses[i];
    }
  }
  std::vector<std::size_t> order(cands.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (misses[a] != misses[b]) return misses[a] < misses[b];
    const double ka = ordering_key(d[a]);
    const double kb = ordering_key(d[b]);
    if (ka != kb) return ka < kb;
    return idx.sort_rank(cands[a]) < idx.sort_rank(cands[b]);
  });
  Ranking r;
  r.voter_id = voter.id;
  r.k = default_k(e, voter.state, Target::candidate);
  for (const auto i : order) {
    r.entries.push_back({e.candidates[cands[i]].id, m.similarity(pv, d[i]), ordering_key(d[i]),
                         d[i].status == DistanceStatus::empty_overlap});
  }
  return r;
}

Ranking deal_breaker_rank(const Voter & voter, const Election & e, const MatchingMethod & method)
{
  return deal_breaker_rank(RankingEngine(e, method), voter);
}

std::vector<int> largest_remainder(std::span<const double> shares, std::span<const int> capacities, int k)
{
  const std::size_t n = shares.size();
  if (capacities.size() != n) throw Error("shares and capacities differ in length");
  std::vector<int> alloc(n, 0);
  if (n == 0 || k <= 0) return alloc;
  const int total_cap = std::accumulate(capacities.begin(), capacities.end(), 0);
  k = std::min(k, total_cap);

  double total = 0.0;
  for (const double s : shares) total += std::max(0.0, s);
  std::vector<double> quota(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double share = total > 0.0 ? std::max(0.0, shares[i]) / total : 1.0 / static_cast<double>(n);
    quota[i] = static_cast<double>(k) * share;
  }
  std::vector<double> remainder(n);
  int used = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double whole = std::floor(quota[i] + 1e-9);
    remainder[i] = std::max(0.0, quota[i] - whole);
    alloc[i] = std::min(static_cast<int>(whole), capacities[i]);
    used += alloc[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  int left = k - used;
  while (left > 0) {
    bool progressed = false;
    for (const auto i : order) {
      if (left == 0) break;
      if (alloc[i] < capacities[i]) {
        ++alloc[i];
        --left;
        progressed = true;
      }
    }
    if (!progressed) break;
  }
  return alloc;
}

std::vector<double> party_mean_answers(const Election & e, std::string_view party, std::string_view state)
{
  std::vector<double> mean(e.questions.size(), 0.0);
  std::size_t n = 0;
  for (const auto & c : e.candidates) {
    if (c.party != party || c.state != state) continue;
    for (std::size_t t = 0; t < mean.size(); ++t) {
      mean[t] += c.profile.answer(t) ? *c.profile.answer(t) : e.questions[t].scale.neutral();
    }
    ++n;
  }
  if (n == 0) throw Error("party '" + std::string(party) + "' has no candidates in state '" + std::string(state) + "'");
  for (auto & x : mean) x /= static_cast<double>(n);
  return mean;
}

Ranking cap_party_topk(const RankingEngine & engine, const Ranking & ranking, int k)
{
  const auto & e = engine.election();
  const auto & idx = engine.index();
  const auto vi = idx.find_voter(ranking.voter_id);
  if (!vi) throw Error("ranking voter '" + ranking.voter_id + "' not in election");
  const Voter & voter = e.voters[*vi];
  const std::size_t s = idx.state_of(voter.state);
  const Matcher & m = engine.matcher(s);
  const auto pv = m.prepare_voter(voter.profile);

  std::vector<std::size_t> parties;
  std::vector<int> capacity(idx.party_ids().size(), 0);
  for (const auto c : idx.candidates_in(s)) {
    const auto p = idx.candidate_party(c);
    if (capacity[p]++ == 0) parties.push_back(p);
  }
  std::sort(parties.begin(), parties.end());
  std::vector<double> shares;
  std::vector<int> caps;
  for (const auto p : parties) {
    const auto mean = party_mean_answers(e, idx.party_ids()[p], voter.state);
    shares.push_back(m.similarity(pv, m.distance(pv, m.prepare_candidate(mean))));
    caps.push_back(capacity[p]);
  }
  const auto alloc = largest_remainder(shares, caps, k);
  std::vector<int> quota(idx.party_ids().size(), 0);
  for (std::size_t i = 0; i < parties.size(); ++i) quota[parties[i]] = alloc[i];

  Ranking out;
  out.voter_id = ranking.voter_id;
  out.k = k;
  std::vector<bool> taken(ranking.entries.size(), false);
  for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
    const auto c = idx.find_candidate(ranking.entries[i].id);
    if (!c) continue;
    const auto p = idx.candidate_party(*c);
    if (quota[p] > 0) {
      --quota[p];
      taken[i] = true;
      out.entries.push_back(ranking.entries[i]);
    }
  }
  for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
    if (!taken[i]) out.entries.push_back(ranking.entries[i]);
  }
  return out;
}

Ranking cap_party_topk(const Ranking & ranking, const Election & e, const MatchingMethod & method, int k)
{
  return cap_party_topk(RankingEngine(e, method), ranking, k);
}

Ranking relative_score_normalization(const Ranking & ranking)
{
  Ranking out = ranking;
  if (out.entries.empty()) return out;
  double top = 0.0;
  for (const auto & r : out.entries) top = std::max(top, r.score);
  for (auto & r : out.entries) r.score = top > 0.0 ? r.score * (100.0 / top) : 100.0;
  return out;
}

double distance_to_party_mean(const RankingEngine & engine, std::size_t candidate)
{
  const auto & e = engine.election();
  const auto & c = e.candidates.at(candidate);
  const std::size_t s = engine.index().state_of(c.state);
  const Matcher & m = engine.matcher(s);
  const auto & answers = c.profile.answers();
  const auto pv = m.prepare_voter(Profile(answers, std::vector<double>(answers.size(), 1.0)));
  const auto mean = party_mean_answers(e, c.party, c.state);
  const Distance d = m.distance(pv, m.prepare_candidate(mean));
  if (d.status == DistanceStatus::empty_overlap) {
    throw MatchingError(MatchingError::Code::empty_overlap, "candidate answered no question");
  }
  if (d.status == DistanceStatus::neutral_profile) {
    throw MatchingError(MatchingError::Code::neutral_profile, "neutral profile has no angular distance");
  }
  return d.value;
}

Recommendation recommend(const RankingEngine & engine, const Voter & voter, const TieBreakPolicy & policy,
                         std::optional<int> k_override, const MitigationConfig & mitigations)
{
  const int k = default_k(engine.election(), voter.state, Target::candidate, k_override);
  Recommendation r;
  r.candidates = mitigations.deal_breaker ? deal_breaker_rank(engine, voter) : engine.rank_candidates(voter, policy);
  if (mitigations.party_cap) r.candidates = cap_party_topk(engine, r.candidates, k);
  r.candidates.k = k;
  if (mitigations.relative_normalization) r.candidates = relative_score_normalization(r.candidates);
  r.lists = engine.rank_lists(
    voter, mitigations.mean_vector_list_score ? ListScoreMode::score_of_mean : ListScoreMode::mean_of_scores);
  return r;
}

}  // namespace vaa
