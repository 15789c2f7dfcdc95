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

#include "vaa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "vaa/util.hpp"

namespace vaa
{

double answer_strength(const Profile & p, std::span<const Question> questions)
{
  if (p.size() != questions.size()) throw Error("profile and questionnaire differ in length");
  if (!p.is_complete()) throw Error("answer strength needs a complete profile");
  if (questions.empty()) return 0.0;
  std::vector<double> dev(questions.size());
  for (std::size_t t = 0; t < questions.size(); ++t) dev[t] = std::abs(*p.answer(t) - questions[t].scale.neutral());
  return stable_mean(dev);
}

double expectation_normalized_visibility(double visibility, std::size_t candidates, int seats)
{
  if (seats < 1) throw Error("seats must be positive");
  return visibility * static_cast<double>(candidates) / static_cast<double>(seats);
}

std::optional<double> gini(std::span<const double> xs)
{
  if (xs.empty()) return std::nullopt;
  for (const double x : xs) {
    if (x < 0.0 || std::isnan(x)) throw Error("Gini coefficient needs non-negative values");
  }
  std::vector<double> sorted(xs.begin(), xs.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  const double total = stable_sum(sorted);
  if (total == 0.0) return std::nullopt;
  // sum_ij |xi - xj| = 2 * sum_i (2i - n + 1) x_(i) over the sorted values.
  std::vector<double> terms(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) terms[i] = (2.0 * static_cast<double>(i) - n + 1.0) * sorted[i];
  const double mad_sum = 2.0 * stable_sum(terms);
  const double mean = total / n;
  return mad_sum / (2.0 * n * n * mean);
}

namespace
{

double median(std::vector<double> xs)
{
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

}  // namespace

BiaResult bia(std::string_view method, const std::map<std::string, std::map<std::string, double>> & visibilities,
              std::span<const std::string> parties)
{
  BiaResult out;
  const auto self = visibilities.find(std::string(method));
  if (self == visibilities.end()) throw Error("no visibilities for method '" + std::string(method) + "'");
  if (visibilities.size() < 3) return out;  // fewer than two other methods

  const auto vis = [](const std::map<std::string, double> & m, const std::string & p) {
    const auto it = m.find(p);
    return it == m.end() ? 0.0 : it->second;
  };
  std::vector<double> deviations;
  double worst = -1.0;
  for (const auto & p : parties) {
    std::vector<double> others;
    for (const auto & [name, m] : visibilities) {
      if (name != method) others.push_back(vis(m, p));
    }
    const double med = median(others);
    if (med == 0.0) {
      out.excluded.push_back(p);
      continue;
    }
    const double rel = (vis(self->second, p) - med) / med;
    deviations.push_back(std::abs(rel));
    if (std::abs(rel) > worst) {
      worst = std::abs(rel);
      out.bia2 = rel;
      out.bia2_party = p;
    }
  }
  if (!deviations.empty()) out.bia1 = stable_mean(deviations);
  return out;
}

std::vector<std::string> bia_party_set(const Election & e, const MetricConfig & cfg)
{
  if (!cfg.bia_parties.empty()) return cfg.bia_parties;
  const ElectionIndex idx(e);
  std::vector<std::string> all;
  for (const auto & p : idx.party_ids()) {
    bool runs = false;
    for (const auto & c : e.candidates) runs = runs || c.party == p;
    if (runs) all.push_back(p);
  }
  const auto shares = party_vote_shares(e);
  if (!shares) return all;
  std::vector<std::string> ranked;
  for (const auto & p : all) {
    if (shares->count(p)) ranked.push_back(p);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [&](const std::string & a, const std::string & b) { return shares->at(a) > shares->at(b); });
  if (ranked.size() > cfg.bia_party_count) ranked.resize(cfg.bia_party_count);
  return ranked;
}

namespace
{

/// Baseline evaluation of one method: cached distances, top-k and list scores.
class MethodRun
{
public:
  MethodRun(const Election & e, const MatchingMethod & method, const MetricConfig & cfg)
  : e_(e), cfg_(cfg), engine_(e, method, cfg.threads)
  {
    const auto & idx = engine_.index();
    top_.k_per_state.resize(idx.state_count());
    for (std::size_t s = 0; s < idx.state_count(); ++s) {
      top_.k_per_state[s] = default_k(e, idx.state_id(s), Target::candidate, cfg.k);
    }
    const std::size_t nv = e.voters.size();
    prepared_.resize(nv);
    distances_.resize(nv);
    top_.per_voter.resize(nv);
    parallel_chunks(nv, engine_.threads(), 64, [&](std::size_t begin, std::size_t end) {
      for (std::size_t v = begin; v < end; ++v) {
        const std::size_t s = engine_.voter_state(v);
        prepared_[v] = engine_.matcher(s).prepare_voter(e.voters[v].profile);
        engine_.distances(prepared_[v], s, distances_[v]);
        top_.per_voter[v] = engine_.select(s, distances_[v], static_cast<std::size_t>(top_.k_per_state[s]),
                                           cfg.policy, e.voters[v].id);
      }
    });
  }

  const RankingEngine & engine() const { return engine_; }
  const TopK & top() const { return top_; }

  std::map<std::string, double> party_visibility() const
  {
    return vaa::party_visibility(engine_, top_).pooled_all();
  }

  /// Pooled party visibility after `party` calibrates its answers.
  std::map<std::string, double> calibrated_visibility(std::string_view party, CalibrationDirection dir) const
  {
    if (engine_.method().tag == MethodTag::mahalanobis) {
      // The precision matrix depends on the candidates themselves.
      return pooled_party_visibility(calibrate_party(e_, party, dir), engine_.method(), cfg_.k, cfg_.policy,
                                     cfg_.threads);
    }
    const auto & idx = engine_.index();
    std::vector<std::vector<std::pair<std::size_t, Matcher::PreparedCandidate>>> changed(idx.state_count());
    for (std::size_t s = 0; s < idx.state_count(); ++s) {
      const auto & cands = idx.candidates_in(s);
      for (std::size_t i = 0; i < cands.size(); ++i) {
        const auto & c = e_.candidates[cands[i]];
        if (c.party != party) continue;
        changed[s].emplace_back(
          i, engine_.matcher(s).prepare_candidate(calibrate_answers(c.profile, e_.questions, dir)));
      }
    }
    TopK top;
    top.k_per_state = top_.k_per_state;
    top.per_voter.resize(e_.voters.size());
    parallel_chunks(e_.voters.size(), engine_.threads(), 64, [&](std::size_t begin, std::size_t end) {
      std::vector<Distance> d;
      for (std::size_t v = begin; v < end; ++v) {
        const std::size_t s = engine_.voter_state(v);
        d = distances_[v];
        for (const auto & [i, pc] : changed[s]) d[i] = engine_.matcher(s).distance(prepared_[v], pc);
        engine_.neutral_fallback(d);
        top.per_voter[v] = engine_.select(s, d, static_cast<std::size_t>(top.k_per_state[s]), cfg_.policy,
                                          e_.voters[v].id);
      }
    });
    return vaa::party_visibility(engine_, top).pooled_all();
  }

  /// Expectation-normalised visibility and answer strength of every candidate.
  void candidate_series(std::vector<double> & strength, std::vector<double> & env) const
  {
    const auto table = candidate_visibility(engine_, top_);
    const auto & idx = engine_.index();
    strength.clear();
    env.clear();
    for (std::size_t c = 0; c < e_.candidates.size(); ++c) {
      const std::size_t s = idx.state_of(e_.candidates[c].state);
      env.push_back(expectation_normalized_visibility(table.rows[c].visibility, idx.candidates_in(s).size(),
                                                      top_.k_per_state[s]));
      strength.push_back(answer_strength(e_.candidates[c].profile, e_.questions));
    }
  }

  /// Per voter with a preferred party: (top list is the party's, normalised rank of its best list).
  struct ListOutcome
  {
    bool top_match = false;
    std::optional<double> normalized_rank;
  };

  std::vector<std::optional<ListOutcome>> list_outcomes() const
  {
    const auto & idx = engine_.index();
    std::vector<std::optional<ListOutcome>> out(e_.voters.size());
    parallel_chunks(e_.voters.size(), engine_.threads(), 64, [&](std::size_t begin, std::size_t end) {
      std::vector<double> scores;
      for (std::size_t v = begin; v < end; ++v) {
        const auto & pref = e_.voters[v].preferred_party;
        if (!pref) continue;
        const std::size_t s = engine_.voter_state(v);
        const auto & lists = idx.lists_in(s);
        if (lists.empty()) continue;
        engine_.list_scores(prepared_[v], s, ListScoreMode::mean_of_scores, distances_[v], scores);
        std::vector<std::size_t> order(lists.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
          if (scores[a] != scores[b]) return scores[a] > scores[b];
          return engine_.list_rank(lists[a]) < engine_.list_rank(lists[b]);
        });
        ListOutcome o;
        o.top_match = e_.lists[lists[order[0]]].party == *pref;
        if (lists.size() >= 2) {
          for (std::size_t r = 0; r < order.size(); ++r) {
            if (e_.lists[lists[order[r]]].party == *pref) {
              o.normalized_rank = static_cast<double>(r) / static_cast<double>(lists.size() - 1);
              break;
            }
          }
        }
        out[v] = o;
      }
    });
    return out;
  }

private:
  const Election & e_;
  const MetricConfig & cfg_;
  RankingEngine engine_;
  TopK top_;
  std::vector<Matcher::PreparedVoter> prepared_;
  std::vector<std::vector<Distance>> distances_;
};

std::map<std::string, double> cp_weights(const Election & e, const MetricConfig & cfg)
{
  if (!cfg.cp_weights.empty()) return cfg.cp_weights;
  std::map<std::string, double> out;
  if (const auto shares = party_vote_shares(e)) {
    for (const auto & [p, w] : *shares) {
      if (w > 0.0) out[p] = w;
    }
    return out;
  }
  for (const auto & c : e.candidates) out[c.party] = 1.0;
  return out;
}

WeightedChange calibration_potential(const MethodRun & run, const Election & e, CalibrationDirection dir,
                                     const MetricConfig & cfg)
{
  WeightedChange out;
  const auto base = run.party_visibility();
  double num = 0.0;
  double den = 0.0;
  for (const auto & [party, w] : cp_weights(e, cfg)) {
    bool runs = false;
    for (const auto & c : e.candidates) runs = runs || c.party == party;
    if (!runs) continue;
    const double b = base.count(party) ? base.at(party) : 0.0;
    if (b == 0.0) {
      out.excluded.push_back(party);
      continue;
    }
    const auto after = run.calibrated_visibility(party, dir);
    const double rel = (after.at(party) - b) / b;
    out.per_party[party] = rel;
    num += w * rel;
    den += w;
  }
  if (den > 0.0) out.value = num / den;
  return out;
}

std::optional<double> asc(const MethodRun & run)
{
  std::vector<double> strength;
  std::vector<double> env;
  run.candidate_series(strength, env);
  return pearson(strength, env);
}

std::optional<double> gin(const MethodRun & run)
{
  std::vector<double> strength;
  std::vector<double> env;
  run.candidate_series(strength, env);
  return gini(env);
}

AccuracyResult acc1(const MethodRun & run)
{
  AccuracyResult out;
  std::size_t hits = 0;
  for (const auto & o : run.list_outcomes()) {
    if (!o) continue;
    ++out.counted;
    if (o->top_match) ++hits;
  }
  if (out.counted > 0) out.value = static_cast<double>(hits) / static_cast<double>(out.counted);
  return out;
}

AccuracyResult acc2(const MethodRun & run, const Election & e)
{
  AccuracyResult out;
  std::vector<double> ranks;
  const auto outcomes = run.list_outcomes();
  for (std::size_t v = 0; v < outcomes.size(); ++v) {
    if (!e.voters[v].preferred_party) continue;
    if (!outcomes[v] || !outcomes[v]->normalized_rank) {
      ++out.excluded;
      continue;
    }
    ranks.push_back(*outcomes[v]->normalized_rank);
  }
  out.counted = ranks.size();
  if (!ranks.empty()) out.value = stable_mean(ranks);
  return out;
}

AccuracyResult acc3(const MethodRun & run, const Election & e, const MetricConfig & cfg)
{
  AccuracyResult out;
  const double strong =
    cfg.strong_weight ? *cfg.strong_weight : *std::max_element(e.weight_set.begin(), e.weight_set.end());
  double total = 0.0;
  double opposite = 0.0;
  for (std::size_t v = 0; v < e.voters.size(); ++v) {
    const auto & vp = e.voters[v].profile;
    for (const auto & credit : run.top().per_voter[v]) {
      const auto & cp = e.candidates[credit.entity].profile;
      for (std::size_t t = 0; t < vp.size(); ++t) {
        if (!vp.answer(t) || vp.weight(t) != strong || !cp.answer(t)) continue;
        const double n = e.questions[t].scale.neutral();
        ++out.counted;
        total += credit.credit;
        if ((*vp.answer(t) - n) * (*cp.answer(t) - n) < 0.0) opposite += credit.credit;
      }
    }
  }
  if (total > 0.0) out.value = opposite / total;
  return out;
}

}  // namespace

WeightedChange calibration_potential(const Election & e, const MatchingMethod & method, CalibrationDirection dir,
                                     const MetricConfig & cfg)
{
  return calibration_potential(MethodRun(e, method, cfg), e, dir, cfg);
}

std::optional<double> asc(const Election & e, const MatchingMethod & method, const MetricConfig & cfg)
{
  return asc(MethodRun(e, method, cfg));
}

AccuracyResult acc1(const Election & e, const MatchingMethod & method, const MetricConfig & cfg)
{
  return acc1(MethodRun(e, method, cfg));
}

AccuracyResult acc2(const Election & e, const MatchingMethod & method, const MetricConfig & cfg)
{
  return acc2(MethodRun(e, method, cfg), e);
}

AccuracyResult acc3(const Election & e, const MatchingMethod & method, const MetricConfig & cfg)
{
  return acc3(MethodRun(e, method, cfg), e, cfg);
}

namespace
{

enum class Better { higher, lower, closer_to_zero };

void mark(ScorecardTable & t, const std::string & column, Better better,
          std::optional<double> MethodScorecard::*field)
{
  std::optional<std::size_t> best;
  std::optional<std::size_t> worst;
  const auto goodness = [&](double x) {
    switch (better) {
      case Better::higher: return x;
      case Better::lower: return -x;
      case Better::closer_to_zero: return -std::abs(x);
    }
    return x;
  };
  std::size_t defined = 0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto & v = t.rows[i].*field;
    if (!v) continue;
    ++defined;
    if (!best || goodness(*v) > goodness(*(t.rows[*best].*field))) best = i;
    if (!worst || goodness(*v) < goodness(*(t.rows[*worst].*field))) worst = i;
  }
  if (defined < 2) return;
  t.best[column] = t.rows[*best].method;
  t.worst[column] = t.rows[*worst].method;
}

}  // namespace

ScorecardTable method_comparison(const Election & e, std::span<const MatchingMethod> methods,
                                 const MetricConfig & cfg)
{
  ScorecardTable table;
  std::map<std::string, std::map<std::string, double>> visibilities;
  for (const auto & m : methods) {
    const MethodRun run(e, m, cfg);
    MethodScorecard row;
    row.method = std::string(to_string(m.tag));
    row.party_visibility = run.party_visibility();
    row.cp_m = calibration_potential(run, e, CalibrationDirection::moderate, cfg).value;
    row.cp_s = calibration_potential(run, e, CalibrationDirection::strong, cfg).value;
    row.asc = asc(run);
    row.gin = gin(run);
    row.acc1 = acc1(run).value;
    row.acc2 = acc2(run, e).value;
    row.acc3 = acc3(run, e, cfg).value;
    visibilities[row.method] = row.party_visibility;
    table.rows.push_back(std::move(row));
  }
  const auto parties = bia_party_set(e, cfg);
  for (auto & row : table.rows) {
    const auto b = bia(row.method, visibilities, parties);
    row.bia1 = b.bia1;
    row.bia2 = b.bia2;
    row.bia2_party = b.bia2_party;
  }
  mark(table, "BIA1", Better::closer_to_zero, &MethodScorecard::bia1);
  mark(table, "BIA2", Better::closer_to_zero, &MethodScorecard::bia2);
  mark(table, "CP_M", Better::lower, &MethodScorecard::cp_m);
  mark(table, "CP_S", Better::lower, &MethodScorecard::cp_s);
  mark(table, "ASC", Better::closer_to_zero, &MethodScorecard::asc);
  mark(table, "ACC1", Better::higher, &MethodScorecard::acc1);
  mark(table, "ACC2", Better::lower, &MethodScorecard::acc2);
  mark(table, "ACC3", Better::lower, &MethodScorecard::acc3);
  return table;
}

void write_scorecard_csv(std::ostream & out, const ScorecardTable & table)
{
  static const std::vector<std::string> columns{"BIA1", "BIA2", "CP_M", "CP_S", "ASC", "ACC1", "ACC2", "ACC3"};
  out << "method,BIA1,BIA2,BIA2_party,CP_M,CP_S,ASC,GIN,ACC1,ACC2,ACC3,best,worst\n";
  for (const auto & r : table.rows) {
    std::string best;
    std::string worst;
    for (const auto & c : columns) {
      if (table.best.count(c) && table.best.at(c) == r.method) best += (best.empty() ? "" : ";") + c;
      if (table.worst.count(c) && table.worst.at(c) == r.method) worst += (worst.empty() ? "" : ";") + c;
    }
    out << r.method << ',' << format_optional(r.bia1) << ',' << format_optional(r.bia2) << ','
        << csv_escape(r.bia2_party) << ',' << format_optional(r.cp_m) << ',' << format_optional(r.cp_s) << ','
        << format_optional(r.asc) << ',' << format_optional(r.gin) << ',' << format_optional(r.acc1) << ','
        << format_optional(r.acc2) << ',' << format_optional(r.acc3) << ',' << best << ',' << worst << '\n';
  }
}

}  // namespace vaa
