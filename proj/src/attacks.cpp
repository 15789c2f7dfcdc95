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

#include "vaa/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>

#include "vaa/util.hpp"

namespace vaa
{

void AnnealingConfig::validate() const
{
  if (iterations < 1) throw Error("annealing needs at least one iteration");
  if (restarts < 1) throw Error("annealing needs at least one restart");
  if (!(cooling_factor > 0.0 && cooling_factor < 1.0)) throw Error("cooling factor must lie in (0, 1)");
  if (!(initial_temperature > 0.0)) throw Error("initial temperature must be positive");
  if (!(voter_subsample_fraction > 0.0 && voter_subsample_fraction <= 1.0)) {
    throw Error("voter subsample fraction must lie in (0, 1]");
  }
}

std::string_view to_string(CalibrationDirection d)
{
  return d == CalibrationDirection::moderate ? "moderate" : "strong";
}

std::optional<CalibrationDirection> parse_direction(std::string_view text)
{
  if (text == "moderate") return CalibrationDirection::moderate;
  if (text == "strong") return CalibrationDirection::strong;
  return std::nullopt;
}

double DropModel::raw(int position) const
{
  if (mode == Mode::custom) {
    if (table.empty()) return 1.0;
    const auto i = static_cast<std::size_t>(std::max(position, 1) - 1);
    return table[std::min(i, table.size() - 1)];
  }
  return intercept - slope * position;
}

double DropModel::keep_probability(int position) const { return std::clamp(raw(position), 0.0, 1.0); }

namespace
{

/// One uniform per presented position, consumed whether or not the answer exists.
void draw_uniforms(Rng & rng, std::size_t n, std::vector<double> & u)
{
  u.resize(n);
  for (auto & x : u) x = uniform01(rng);
}

Profile drop_with(const Profile & p, std::span<const std::size_t> ordering, const DropModel & drop,
                  std::span<const double> u)
{
  auto answers = p.answers();
  auto weights = p.weights();
  for (std::size_t pos = 0; pos < ordering.size(); ++pos) {
    const std::size_t q = ordering[pos];
    if (answers[q] && !(u[pos] < drop.keep_probability(static_cast<int>(pos) + 1))) {
      answers[q].reset();
      weights[q] = 0.0;
    }
  }
  return Profile(std::move(answers), std::move(weights));
}

void check_permutation(std::span<const std::size_t> ordering, std::size_t n)
{
  if (ordering.size() != n) throw Error("ordering must list every question exactly once");
  std::vector<bool> seen(n, false);
  for (const auto q : ordering) {
    if (q >= n || seen[q]) throw Error("ordering must list every question exactly once");
    seen[q] = true;
  }
}

}  // namespace

Profile apply_drop(const Profile & p, std::span<const std::size_t> ordering, const DropModel & drop, Rng & rng)
{
  check_permutation(ordering, p.size());
  std::vector<double> u;
  draw_uniforms(rng, ordering.size(), u);
  return drop_with(p, ordering, drop, u);
}

const ReportRow * AttackReport::find(std::string_view entity) const
{
  for (const auto & r : rows) {
    if (r.entity == entity) return &r;
  }
  return nullptr;
}

std::optional<double> relative_change(double baseline, double attacked)
{
  if (baseline == 0.0) return std::nullopt;
  return (attacked - baseline) / baseline;
}

void write_report_csv(std::ostream & out, const AttackReport & report)
{
  const bool with_std =
    std::any_of(report.rows.begin(), report.rows.end(), [](const ReportRow & r) { return r.rel_change_std.has_value(); });
  out << "scenario,entity,baseline,attacked,rel_change" << (with_std ? ",rel_change_std" : "") << '\n';
  for (const auto & r : report.rows) {
    out << csv_escape(report.scenario) << ',' << csv_escape(r.entity) << ',' << format_double(r.baseline) << ','
        << format_double(r.attacked) << ',' << format_optional(r.rel_change);
    if (with_std) out << ',' << format_optional(r.rel_change_std);
    out << '\n';
  }
}

std::map<std::string, double> pooled_party_visibility(const Election & e, const MatchingMethod & method,
                                                      std::optional<int> k, const TieBreakPolicy & policy,
                                                      unsigned threads)
{
  const RankingEngine engine(e, method, threads);
  return party_visibility(engine, compute_top_k(engine, k, policy)).pooled_all();
}

namespace
{

AttackReport party_report(std::string scenario, const std::map<std::string, double> & before,
                          const std::map<std::string, double> & after)
{
  AttackReport r;
  r.scenario = std::move(scenario);
  std::set<std::string> parties;
  for (const auto & [p, v] : before) parties.insert(p);
  for (const auto & [p, v] : after) parties.insert(p);
  for (const auto & p : parties) {
    const double b = before.count(p) ? before.at(p) : 0.0;
    const double a = after.count(p) ? after.at(p) : 0.0;
    r.rows.push_back({p, b, a, relative_change(b, a), std::nullopt});
  }
  return r;
}

std::string k_text(std::optional<int> k) { return k ? std::to_string(*k) : "seats"; }

// Ordering key of an extra candidate: neutral Angular profiles sort after
// every valid distance and before failed comparisons.
constexpr double kNeutralKey = std::numeric_limits<double>::max();

double crafted_key(const Distance & d)
{
  switch (d.status) {
    case DistanceStatus::ok: return d.value;
    case DistanceStatus::neutral_profile: return kNeutralKey;
    case DistanceStatus::empty_overlap: break;
  }
  return std::numeric_limits<double>::infinity();
}

/// Per-voter entry thresholds for one extra candidate in a state. Since the
/// extra candidate loses every tie, it enters voter v's top-k iff its key is
/// strictly below the k-th smallest real key.
struct CraftContext
{
  const Matcher * matcher = nullptr;
  std::vector<std::size_t> voters;  // election voter indices
  std::vector<Matcher::PreparedVoter> prepared;
  std::vector<double> threshold;
  std::vector<char> always;  // fewer than k real candidates

  bool enters(std::size_t i, const Distance & d) const { return always[i] || crafted_key(d) < threshold[i]; }
};

CraftContext make_craft_context(const RankingEngine & engine, std::size_t s, int k,
                                std::span<const std::size_t> voters)
{
  CraftContext ctx;
  ctx.matcher = &engine.matcher(s);
  ctx.voters.assign(voters.begin(), voters.end());
  ctx.prepared.resize(voters.size());
  ctx.threshold.assign(voters.size(), 0.0);
  ctx.always.assign(voters.size(), 0);
  const auto & e = engine.election();
  parallel_chunks(voters.size(), engine.threads(), 64, [&](std::size_t begin, std::size_t end) {
    std::vector<Distance> d;
    std::vector<double> keys;
    for (std::size_t i = begin; i < end; ++i) {
      ctx.prepared[i] = ctx.matcher->prepare_voter(e.voters[voters[i]].profile);
      engine.distances(ctx.prepared[i], s, d);
      if (d.size() < static_cast<std::size_t>(k)) {
        ctx.always[i] = 1;
        continue;
      }
      keys.resize(d.size());
      for (std::size_t j = 0; j < d.size(); ++j) keys[j] = crafted_key(d[j]);
      std::nth_element(keys.begin(), keys.begin() + (k - 1), keys.end());
      ctx.threshold[i] = keys[static_cast<std::size_t>(k - 1)];
    }
  });
  return ctx;
}

std::size_t count_entries(const CraftContext & ctx, const Matcher::PreparedCandidate & c)
{
  std::size_t n = 0;
  for (std::size_t i = 0; i < ctx.voters.size(); ++i) {
    if (ctx.enters(i, ctx.matcher->distance(ctx.prepared[i], c))) ++n;
  }
  return n;
}

int crafted_k(const Election & e, std::string_view state, std::optional<int> k)
{
  const int out = default_k(e, state, Target::candidate, k);
  if (out < 1) throw Error("k must be positive");
  return out;
}

}  // namespace

double crafted_visibility(const Election & e, std::string_view state, std::optional<int> k,
                          const MatchingMethod & method, const Profile & profile)
{
  const int kk = crafted_k(e, state, k);
  const RankingEngine engine(e, method);
  const std::size_t s = engine.index().state_of(state);
  const auto & voters = engine.index().voters_in(s);
  if (voters.empty()) return 0.0;
  const auto ctx = make_craft_context(engine, s, kk, voters);
  const auto c = ctx.matcher->prepare_candidate(profile);
  return static_cast<double>(count_entries(ctx, c)) / static_cast<double>(voters.size());
}

CraftResult brute_force_optimal(const Election & e, std::string_view state, std::optional<int> k,
                                const MatchingMethod & method, std::uint64_t max_profiles)
{
  const int kk = crafted_k(e, state, k);
  const std::size_t nq = e.questions.size();
  std::uint64_t space = 1;
  for (const auto & q : e.questions) {
    space *= q.scale.size();
    if (space > max_profiles) throw Error("profile space too large for exhaustive search");
  }
  const RankingEngine engine(e, method);
  const std::size_t s = engine.index().state_of(state);
  const auto & voters = engine.index().voters_in(s);
  const auto ctx = make_craft_context(engine, s, kk, voters);

  std::vector<std::size_t> digit(nq, 0);
  std::vector<double> answers(nq);
  std::vector<double> best_answers;
  std::size_t best = 0;
  CraftResult out;
  for (std::uint64_t n = 0; n < space; ++n) {
    for (std::size_t t = 0; t < nq; ++t) answers[t] = e.questions[t].scale.allowed()[digit[t]];
    const std::size_t count = count_entries(ctx, ctx.matcher->prepare_candidate(answers));
    ++out.evaluations;
    if (best_answers.empty() || count > best) {
      best = count;
      best_answers = answers;
    }
    // Odometer with the last question fastest: enumeration is lexicographic.
    for (std::size_t t = nq; t-- > 0;) {
      if (++digit[t] < e.questions[t].scale.size()) break;
      digit[t] = 0;
    }
  }
  out.profile = Profile::complete(best_answers);
  out.visibility = voters.empty() ? 0.0 : static_cast<double>(best) / static_cast<double>(voters.size());
  out.objective = out.visibility;
  return out;
}

CraftResult optimize_answers(const Election & e, std::string_view state, std::optional<int> k,
                             const MatchingMethod & method, const AnnealingConfig & cfg)
{
  cfg.validate();
  const int kk = crafted_k(e, state, k);
  const std::size_t nq = e.questions.size();
  if (nq == 0) throw Error("election has no questions");
  const RankingEngine engine(e, method);
  const std::size_t s = engine.index().state_of(state);
  const auto & all_voters = engine.index().voters_in(s);

  std::vector<std::size_t> voters(all_voters.begin(), all_voters.end());
  if (cfg.voter_subsample_fraction < 1.0 && !voters.empty()) {
    const auto n = static_cast<std::size_t>(
      std::max(1.0, std::ceil(cfg.voter_subsample_fraction * static_cast<double>(voters.size()))));
    Rng rng(derive_seed(cfg.seed, 0));
    shuffle_range(voters.begin(), voters.end(), rng);
    voters.resize(std::min(n, voters.size()));
    std::sort(voters.begin(), voters.end());
  }
  const auto ctx = make_craft_context(engine, s, kk, voters);
  const Matcher & m = *ctx.matcher;
  const std::size_t nv = voters.size();
  const double per_voter = nv > 0 ? 1.0 / static_cast<double>(nv) : 0.0;

  // Start of the first restart: the median voter answer per question.
  std::vector<double> start(nq);
  for (std::size_t t = 0; t < nq; ++t) {
    std::vector<double> seen;
    for (const auto v : voters) {
      if (const auto & a = e.voters[v].profile.answer(t)) seen.push_back(*a);
    }
    if (seen.empty()) {
      start[t] = e.questions[t].scale.nearest(e.questions[t].scale.neutral());
      continue;
    }
    const auto mid = seen.begin() + static_cast<std::ptrdiff_t>((seen.size() - 1) / 2);
    std::nth_element(seen.begin(), mid, seen.end());
    start[t] = e.questions[t].scale.nearest(*mid);
  }

  CraftResult out;
  std::vector<double> best_answers;
  std::size_t best = 0;

  std::vector<double> x(nq);
  std::vector<std::uint8_t> codes(nq);
  std::vector<Matcher::Terms> sums(nv);
  std::vector<Matcher::Terms> trial(nv);

  const auto full_count = [&](const std::vector<double> & answers) {
    const auto c = m.prepare_candidate(answers);
    return count_entries(ctx, c);
  };

  for (int r = 0; r < cfg.restarts; ++r) {
    Rng rng(derive_seed(cfg.seed, 1, static_cast<std::uint64_t>(r)));
    for (std::size_t t = 0; t < nq; ++t) {
      const auto & allowed = e.questions[t].scale.allowed();
      x[t] = r == 0 ? start[t] : allowed[uniform_index(rng, allowed.size())];
      codes[t] = m.code_of(t, x[t]);
    }
    std::size_t count = 0;
    if (m.additive()) {
      for (std::size_t i = 0; i < nv; ++i) {
        Matcher::Terms sum;
        for (std::size_t t = 0; t < nq; ++t) sum += m.term(ctx.prepared[i], t, x[t], codes[t]);
        sums[i] = sum;
        if (ctx.enters(i, m.finalize(sum))) ++count;
      }
    } else {
      count = full_count(x);
    }
    ++out.evaluations;
    if (best_answers.empty() || count > best) {
      best = count;
      best_answers = x;
    }

    double temperature = cfg.initial_temperature;
    for (int it = 0; it < cfg.iterations; ++it, temperature *= cfg.cooling_factor) {
      const auto t = static_cast<std::size_t>(uniform_index(rng, nq));
      const auto & allowed = e.questions[t].scale.allowed();
      const double answer = allowed[uniform_index(rng, allowed.size())];
      if (answer == x[t]) continue;
      const std::uint8_t code = m.code_of(t, answer);

      std::size_t next = 0;
      if (m.additive()) {
        for (std::size_t i = 0; i < nv; ++i) {
          Matcher::Terms sum = sums[i];
          sum -= m.term(ctx.prepared[i], t, x[t], codes[t]);
          sum += m.term(ctx.prepared[i], t, answer, code);
          trial[i] = sum;
          if (ctx.enters(i, m.finalize(sum))) ++next;
        }
      } else {
        const double old = x[t];
        x[t] = answer;
        next = full_count(x);
        x[t] = old;
      }
      ++out.evaluations;

      const double gain = (static_cast<double>(next) - static_cast<double>(count)) * per_voter;
      const bool accept = gain >= 0.0 || uniform01(rng) < std::exp(gain / temperature);
      if (!accept) continue;
      x[t] = answer;
      codes[t] = code;
      count = next;
      if (m.additive()) std::swap(sums, trial);
      if (count > best) {
        best = count;
        best_answers = x;
      }
    }
  }

  out.profile = Profile::complete(best_answers);
  out.objective = static_cast<double>(best) * per_voter;
  out.visibility = crafted_visibility(e, state, kk, method, out.profile);
  return out;
}

Election inject_candidate(const Election & e, std::string_view state, std::string_view party, const Profile & profile)
{
  Election out = e;
  const ElectionIndex idx(e);
  std::string id = "crafted";
  for (int n = 2; idx.find_candidate(id); ++n) id = "crafted-" + std::to_string(n);
  Candidate c;
  c.id = id;
  c.sort_key = std::string(kCraftedSortKey);
  c.state = std::string(state);
  c.party = std::string(party);
  c.list = id + "-list";
  c.profile = profile;
  if (!out.lists.empty()) out.lists.push_back({c.list, c.state, c.party, {c.id}});
  out.candidates.push_back(std::move(c));
  return out;
}

Profile calibrate_answers(const Profile & p, std::span<const Question> questions, CalibrationDirection dir)
{
  if (p.size() != questions.size()) throw Error("profile and questionnaire differ in length");
  auto answers = p.answers();
  for (std::size_t t = 0; t < answers.size(); ++t) {
    if (!answers[t]) continue;
    const auto & scale = questions[t].scale;
    const auto & allowed = scale.allowed();
    const double a = scale.nearest(*answers[t]);
    const double n = scale.neutral();
    if (a == n) continue;
    const std::size_t i = *scale.index_of(a);
    const bool low = a < n;
    if (dir == CalibrationDirection::moderate) {
      // One step toward neutral, never past it.
      const std::size_t j = low ? i + 1 : i - 1;
      if (low ? allowed[j] <= n : allowed[j] >= n) answers[t] = allowed[j];
    } else {
      if (low && i > 0) answers[t] = allowed[i - 1];
      if (!low && i + 1 < allowed.size()) answers[t] = allowed[i + 1];
    }
  }
  return Profile(std::move(answers), p.weights());
}

Election calibrate_party(const Election & e, std::string_view party, CalibrationDirection dir)
{
  Election out = e;
  for (auto & c : out.candidates) {
    if (c.party == party) c.profile = calibrate_answers(c.profile, e.questions, dir);
  }
  return out;
}

AttackReport calibration_experiment(const Election & e, std::string_view party, const MatchingMethod & method,
                                    CalibrationDirection dir, std::optional<int> k, unsigned threads)
{
  const auto policy = TieBreakPolicy::lexicographic();
  auto report = party_report("calibration", pooled_party_visibility(e, method, k, policy, threads),
                             pooled_party_visibility(calibrate_party(e, party, dir), method, k, policy, threads));
  report.metadata = {{"party", std::string(party)},
                     {"direction", std::string(to_string(dir))},
                     {"method", std::string(to_string(method.tag))},
                     {"k", k_text(k)}};
  return report;
}

DiversificationAnalysis diversification_analysis(const Election & e, const MatchingMethod & method,
                                                 std::optional<int> k, unsigned threads)
{
  const auto shares = party_vote_shares(e);
  if (!shares) throw Error("diversification analysis needs party vote shares");
  const auto vis = pooled_party_visibility(e, method, k, TieBreakPolicy::lexicographic(), threads);
  std::map<std::string, std::size_t> counts;
  for (const auto & c : e.candidates) ++counts[c.party];

  DiversificationAnalysis out;
  std::vector<double> x;
  std::vector<double> y;
  for (const auto & p : e.parties) {
    if (!shares->count(p.id)) continue;
    const double share = shares->at(p.id);
    if (!(share > 0.0)) continue;
    DiversificationRow r;
    r.party = p.id;
    r.candidates = counts.count(p.id) ? counts[p.id] : 0;
    r.vote_share = share;
    r.candidates_per_point = static_cast<double>(r.candidates) / (share * 100.0);
    r.visibility = vis.count(p.id) ? vis.at(p.id) : 0.0;
    r.visibility_ratio = r.visibility / share;
    x.push_back(r.candidates_per_point);
    y.push_back(r.visibility_ratio);
    out.rows.push_back(std::move(r));
  }
  out.correlation = pearson(x, y);
  return out;
}

Election add_clones(const Election & e, std::string_view party, int n_clones, int noise_steps, std::uint64_t seed)
{
  if (n_clones < 0 || noise_steps < 0) throw Error("clone count and noise must be non-negative");
  const ElectionIndex idx(e);
  std::vector<std::string> states;
  for (std::size_t s = 0; s < idx.state_count(); ++s) {
    for (const auto c : idx.candidates_in(s)) {
      if (e.candidates[c].party == party) {
        states.push_back(idx.state_id(s));
        break;
      }
    }
  }
  if (states.empty()) throw Error("party '" + std::string(party) + "' has no candidates");

  Election out = e;
  std::set<std::string> taken;
  for (const auto & c : e.candidates) taken.insert(c.id);
  for (const auto & l : e.lists) taken.insert(l.id);
  std::map<std::string, std::size_t> clone_list;
  for (int i = 0; i < n_clones; ++i) {
    const std::string & state = states[static_cast<std::size_t>(i) % states.size()];
    const auto mean = party_mean_answers(e, party, state);
    Rng rng(derive_seed(seed, 2, static_cast<std::uint64_t>(i)));
    std::vector<double> answers(mean.size());
    for (std::size_t t = 0; t < mean.size(); ++t) {
      const auto & scale = e.questions[t].scale;
      const auto base = static_cast<long>(*scale.index_of(scale.nearest(mean[t])));
      const long shift = static_cast<long>(uniform_index(rng, static_cast<std::uint64_t>(2 * noise_steps + 1))) -
                         noise_steps;
      const long j = std::clamp(base + shift, 0L, static_cast<long>(scale.size()) - 1);
      answers[t] = scale.allowed()[static_cast<std::size_t>(j)];
    }
    Candidate c;
    c.id = "clone-" + std::string(party) + "-" + std::to_string(i + 1);
    while (taken.count(c.id)) c.id += "'";
    taken.insert(c.id);
    c.sort_key = c.id;
    c.state = state;
    c.party = std::string(party);
    c.list = "clones-" + std::string(party) + "-" + state;
    c.profile = Profile::complete(answers);
    if (!e.lists.empty()) {
      auto it = clone_list.find(state);
      if (it == clone_list.end()) {
        while (taken.count(c.list)) c.list += "'";
        taken.insert(c.list);
        out.lists.push_back({c.list, state, c.party, {}});
        it = clone_list.emplace(state, out.lists.size() - 1).first;
      }
      c.list = out.lists[it->second].id;
      out.lists[it->second].members.push_back(c.id);
    }
    out.candidates.push_back(std::move(c));
  }
  return out;
}

AttackReport diversification_simulation(const Election & e, std::string_view party, int n_clones, int noise_steps,
                                        std::uint64_t seed, const MatchingMethod & method, std::optional<int> k,
                                        unsigned threads)
{
  const auto policy = TieBreakPolicy::lexicographic();
  auto report = party_report(
    "diversification", pooled_party_visibility(e, method, k, policy, threads),
    pooled_party_visibility(add_clones(e, party, n_clones, noise_steps, seed), method, k, policy, threads));
  report.metadata = {{"party", std::string(party)},
                     {"clones", std::to_string(n_clones)},
                     {"noise_steps", std::to_string(noise_steps)},
                     {"seed", std::to_string(seed)},
                     {"method", std::string(to_string(method.tag))},
                     {"k", k_text(k)}};
  return report;
}

double list_spread(const PartyList & list, const Election & e)
{
  const ElectionIndex idx(e);
  std::vector<const Profile *> members;
  for (const auto & id : list.members) {
    if (const auto c = idx.find_candidate(id)) members.push_back(&e.candidates[*c].profile);
  }
  if (members.empty() || e.questions.empty()) return 0.0;
  std::vector<double> spreads;
  std::vector<double> column;
  for (std::size_t t = 0; t < e.questions.size(); ++t) {
    column.clear();
    for (const auto * p : members) {
      if (p->answer(t)) column.push_back(*p->answer(t));
    }
    spreads.push_back(population_stddev(column));
  }
  return stable_mean(spreads);
}

ListCentralization list_centralization_analysis(const Election & e, const MatchingMethod & method,
                                                ListScoreMode mode, unsigned threads)
{
  const RankingEngine engine(e, method, threads);
  const auto vis = list_visibility(engine, 1, mode);
  ListCentralization out;
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t l = 0; l < e.lists.size(); ++l) {
    ListCentralizationRow r{e.lists[l].id, e.lists[l].state, list_spread(e.lists[l], e), vis.rows[l].visibility};
    x.push_back(r.spread);
    y.push_back(r.visibility);
    out.rows.push_back(std::move(r));
  }
  out.correlation = pearson(x, y);
  return out;
}

WeightMap strong_weights() { return {{0.0, 0.0}, {0.5, 0.1}, {1.0, 1.0}, {2.0, 10.0}}; }
WeightMap weak_weights() { return {{0.0, 0.0}, {0.5, 0.9}, {1.0, 1.0}, {2.0, 10.0 / 9.0}}; }

AttackReport weight_scenario(const Election & e, const MatchingMethod & method, const WeightMap & alt,
                             std::optional<int> k, unsigned threads)
{
  std::set<double> domain(e.weight_set.begin(), e.weight_set.end());
  std::set<double> image;
  for (const auto & [from, to] : alt) {
    if (!domain.count(from)) throw Error("weight map key " + format_double(from) + " not in weight set");
    if (!(to >= 0.0) || !std::isfinite(to)) throw Error("mapped weights must be finite and non-negative");
    image.insert(to);
  }
  if (alt.size() != domain.size() || image.size() != alt.size()) {
    throw Error("weight map must be a bijection on the weight set");
  }
  if (alt.at(0.0) != 0.0) throw Error("weight map must keep 0");
  if (!alt.count(1.0) || alt.at(1.0) != 1.0) throw Error("weight map must keep the default weight 1");

  Election base = e;
  base.voters.clear();
  for (const auto & v : e.voters) {
    bool custom = false;
    for (std::size_t t = 0; t < v.profile.size() && !custom; ++t) {
      custom = v.profile.answer(t).has_value() && v.profile.weight(t) != 1.0;
    }
    if (custom) base.voters.push_back(v);
  }
  Election remapped = base;
  for (auto & v : remapped.voters) {
    auto weights = v.profile.weights();
    for (auto & w : weights) {
      const auto it = alt.find(w);
      if (it != alt.end()) w = it->second;
    }
    v.profile = Profile(v.profile.answers(), std::move(weights));
  }
  const auto policy = TieBreakPolicy::lexicographic();
  auto report = party_report("weights", pooled_party_visibility(base, method, k, policy, threads),
                             pooled_party_visibility(remapped, method, k, policy, threads));
  std::string mapping;
  for (const auto & [from, to] : alt) {
    if (!mapping.empty()) mapping += ';';
    mapping += format_double(from) + "->" + format_double(to);
  }
  report.metadata = {{"weights", mapping},
                     {"voters", std::to_string(base.voters.size())},
                     {"method", std::string(to_string(method.tag))},
                     {"k", k_text(k)}};
  return report;
}

TopMatchHistogram top_match_distribution(const Election & e, const MatchingMethod & method, int bins,
                                         unsigned threads)
{
  if (bins < 1) throw Error("histogram needs at least one bin");
  const RankingEngine engine(e, method, threads);
  const auto & idx = engine.index();
  TopMatchHistogram h;
  for (int b = 0; b <= bins; ++b) h.edges.push_back(100.0 * b / bins);
  h.overall.assign(static_cast<std::size_t>(bins), 0);

  struct Top
  {
    std::size_t candidate;
    double score;
  };
  std::vector<std::optional<Top>> tops(e.voters.size());
  parallel_chunks(e.voters.size(), engine.threads(), 64, [&](std::size_t begin, std::size_t end) {
    std::vector<Distance> d;
    for (std::size_t v = begin; v < end; ++v) {
      const std::size_t s = engine.voter_state(v);
      const auto & cands = idx.candidates_in(s);
      if (cands.empty()) continue;
      const auto pv = engine.matcher(s).prepare_voter(e.voters[v].profile);
      engine.distances(pv, s, d);
      const auto first = engine.select(s, d, 1, TieBreakPolicy::lexicographic(), e.voters[v].id);
      const auto local = static_cast<std::size_t>(std::find(cands.begin(), cands.end(), first[0].entity) - cands.begin());
      tops[v] = Top{first[0].entity, engine.matcher(s).similarity(pv, d[local])};
    }
  });
  for (const auto & p : idx.party_ids()) h.by_party[p].assign(static_cast<std::size_t>(bins), 0);
  for (const auto & t : tops) {
    if (!t) continue;
    const auto b = static_cast<std::size_t>(std::clamp(static_cast<int>(std::floor(t->score / 100.0 * bins)), 0, bins - 1));
    ++h.overall[b];
    ++h.by_party[idx.party_ids()[idx.candidate_party(t->candidate)]][b];
  }
  return h;
}

GreedySubsetResult greedy_question_subset(const Election & e, std::string_view party, const MatchingMethod & method,
                                          std::optional<int> k, std::size_t max_size, unsigned threads)
{
  const std::size_t nq = e.questions.size();
  if (max_size > nq) throw Error("subset size exceeds the questionnaire");
  const auto policy = TieBreakPolicy::lexicographic();
  GreedySubsetResult out;
  {
    const auto full = pooled_party_visibility(e, method, k, policy, threads);
    out.baseline = full.count(std::string(party)) ? full.at(std::string(party)) : 0.0;
  }

  const RankingEngine engine(e, method, threads);
  const auto & idx = engine.index();
  const auto p = idx.find_party(party);
  if (!p) throw Error("unknown party '" + std::string(party) + "'");
  const auto top = compute_top_k(engine, k, policy);  // k per state and slot counts
  double total_slots = 0.0;
  for (std::size_t s = 0; s < idx.state_count(); ++s) {
    total_slots += StateSlots{top.k_per_state[s], idx.voters_in(s).size(), idx.candidates_in(s).size()}.slots();
  }

  std::vector<char> chosen(nq, 0);

  // Visibility of the party when voters keep only the answers in `subset` + {t}.
  std::function<double(std::size_t)> evaluate;

  if (method.tag != MethodTag::mahalanobis) {
    // Per (voter, candidate) partial sums over the chosen questions.
    std::vector<Matcher::PreparedVoter> prepared(e.voters.size());
    std::vector<std::vector<Matcher::Terms>> partial(e.voters.size());
    for (std::size_t v = 0; v < e.voters.size(); ++v) {
      const std::size_t s = engine.voter_state(v);
      prepared[v] = engine.matcher(s).prepare_voter(e.voters[v].profile);
      partial[v].assign(idx.candidates_in(s).size(), Matcher::Terms{});
    }
    const auto term_of = [&](std::size_t v, std::size_t i, std::size_t t) {
      const std::size_t s = engine.voter_state(v);
      const auto & pc = engine.prepared_candidates(s)[i];
      return engine.matcher(s).term(prepared[v], t, pc.answers[t], pc.codes[t]);
    };
    evaluate = [&, term_of](std::size_t t) {
      std::vector<double> credit(e.voters.size(), 0.0);
      parallel_chunks(e.voters.size(), engine.threads(), 64, [&](std::size_t begin, std::size_t end) {
        std::vector<Distance> d;
        for (std::size_t v = begin; v < end; ++v) {
          const std::size_t s = engine.voter_state(v);
          const Matcher & m = engine.matcher(s);
          d.resize(partial[v].size());
          for (std::size_t i = 0; i < d.size(); ++i) {
            Matcher::Terms sum = partial[v][i];
            sum += term_of(v, i, t);
            d[i] = m.finalize(sum);
          }
          engine.neutral_fallback(d);
          double c = 0.0;
          for (const auto & cr : engine.select(s, d, static_cast<std::size_t>(top.k_per_state[s]), policy,
                                               e.voters[v].id)) {
            if (idx.candidate_party(cr.entity) == *p) c += cr.credit;
          }
          credit[v] = c;
        }
      });
      return total_slots > 0.0 ? stable_sum(credit) / total_slots : 0.0;
    };
    const auto commit = [&, term_of](std::size_t t) {
      for (std::size_t v = 0; v < e.voters.size(); ++v) {
        for (std::size_t i = 0; i < partial[v].size(); ++i) partial[v][i] += term_of(v, i, t);
      }
    };
    for (std::size_t step = 0; step < max_size; ++step) {
      std::size_t pick = nq;
      double best = -1.0;
      for (std::size_t t = 0; t < nq; ++t) {
        if (chosen[t]) continue;
        const double vis = evaluate(t);
        if (vis > best) {
          best = vis;
          pick = t;
        }
      }
      chosen[pick] = 1;
      commit(pick);
      out.questions.push_back(e.questions[pick].index);
      out.visibility.push_back(best);
    }
  } else {
    // Non-additive distance: rebuild the masked election for every trial.
    const auto masked = [&](std::size_t extra) {
      Election m = e;
      for (auto & v : m.voters) {
        auto answers = v.profile.answers();
        auto weights = v.profile.weights();
        for (std::size_t t = 0; t < nq; ++t) {
          if (!chosen[t] && t != extra) {
            answers[t].reset();
            weights[t] = 0.0;
          }
        }
        v.profile = Profile(std::move(answers), std::move(weights));
      }
      const auto vis = pooled_party_visibility(m, method, k, policy, threads);
      return vis.count(std::string(party)) ? vis.at(std::string(party)) : 0.0;
    };
    for (std::size_t step = 0; step < max_size; ++step) {
      std::size_t pick = nq;
      double best = -1.0;
      for (std::size_t t = 0; t < nq; ++t) {
        if (chosen[t]) continue;
        const double vis = masked(t);
        if (vis > best) {
          best = vis;
          pick = t;
        }
      }
      chosen[pick] = 1;
      out.questions.push_back(e.questions[pick].index);
      out.visibility.push_back(best);
    }
  }

  for (const double v : out.visibility) out.gain.push_back(relative_change(out.baseline, v));
  if (!out.visibility.empty()) {
    out.best_step = static_cast<std::size_t>(std::max_element(out.visibility.begin(), out.visibility.end()) -
                                             out.visibility.begin());
  }
  return out;
}

std::vector<std::vector<std::optional<double>>> question_correlation_matrix(std::span<const Voter> voters,
                                                                            std::size_t question_count)
{
  std::vector<std::vector<std::optional<double>>> out(question_count,
                                                      std::vector<std::optional<double>>(question_count));
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t i = 0; i < question_count; ++i) {
    for (std::size_t j = i; j < question_count; ++j) {
      x.clear();
      y.clear();
      for (const auto & v : voters) {
        const auto & a = v.profile.answer(i);
        const auto & b = v.profile.answer(j);
        if (a && b) {
          x.push_back(*a);
          y.push_back(*b);
        }
      }
      std::optional<double> r = pearson(x, y);
      if (r) r = i == j ? 1.0 : std::abs(*r);
      out[i][j] = r;
      out[j][i] = r;
    }
  }
  return out;
}

Election duplicate_question(const Election & e, std::size_t t, int copies)
{
  if (t >= e.questions.size()) throw Error("question position out of range");
  if (copies < 1) throw Error("copies must be at least 1");
  Election out = e;
  int next_index = 0;
  for (const auto & q : e.questions) next_index = std::max(next_index, q.index);
  for (int c = 1; c <= copies; ++c) {
    Question q = e.questions[t];
    q.index = next_index + c;
    q.id = e.questions[t].id + "~copy" + std::to_string(c);
    out.questions.push_back(std::move(q));
  }
  const auto extend = [&](Profile & p) {
    auto answers = p.answers();
    auto weights = p.weights();
    for (int c = 0; c < copies; ++c) {
      answers.push_back(p.answer(t));
      weights.push_back(p.weight(t));
    }
    p = Profile(std::move(answers), std::move(weights));
  };
  for (auto & c : out.candidates) extend(c.profile);
  for (auto & v : out.voters) extend(v.profile);
  return out;
}

AttackReport duplicate_question_attack(const Election & e, std::size_t t, int copies, const MatchingMethod & method,
                                       std::optional<int> k, unsigned threads)
{
  const auto policy = TieBreakPolicy::lexicographic();
  auto report = party_report("duplicate_question", pooled_party_visibility(e, method, k, policy, threads),
                             pooled_party_visibility(duplicate_question(e, t, copies), method, k, policy, threads));
  report.metadata = {{"question", e.questions.at(t).id},
                     {"copies", std::to_string(copies)},
                     {"method", std::string(to_string(method.tag))},
                     {"k", k_text(k)}};
  return report;
}

AttackReport question_order_experiment(const Election & e, std::span<const std::size_t> ordering,
                                       const DropModel & drop, int trials, std::uint64_t seed,
                                       const MatchingMethod & method, std::optional<int> k, unsigned threads)
{
  const std::size_t nq = e.questions.size();
  check_permutation(ordering, nq);
  if (trials < 1) throw Error("trials must be at least 1");
  Election complete = e;
  complete.voters.clear();
  for (const auto & v : e.voters) {
    if (v.profile.is_complete()) complete.voters.push_back(v);
  }
  if (complete.voters.empty()) throw Error("no voter has a complete profile");

  std::vector<std::size_t> identity(nq);
  std::iota(identity.begin(), identity.end(), std::size_t{0});
  const auto policy = TieBreakPolicy::lexicographic();

  std::map<std::string, std::vector<double>> base_vis;
  std::map<std::string, std::vector<double>> att_vis;
  std::map<std::string, std::vector<double>> changes;
  Election arm_a = complete;
  Election arm_b = complete;
  std::vector<double> u;
  for (int trial = 0; trial < trials; ++trial) {
    for (std::size_t v = 0; v < complete.voters.size(); ++v) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(trial) + 1, v));
      draw_uniforms(rng, nq, u);
      arm_a.voters[v].profile = drop_with(complete.voters[v].profile, identity, drop, u);
      arm_b.voters[v].profile = drop_with(complete.voters[v].profile, ordering, drop, u);
    }
    const auto a = pooled_party_visibility(arm_a, method, k, policy, threads);
    const auto b = pooled_party_visibility(arm_b, method, k, policy, threads);
    for (const auto & [p, x] : a) {
      const double y = b.count(p) ? b.at(p) : 0.0;
      base_vis[p].push_back(x);
      att_vis[p].push_back(y);
      if (const auto r = relative_change(x, y)) changes[p].push_back(*r);
    }
  }

  AttackReport report;
  report.scenario = "question_order";
  for (const auto & [p, xs] : base_vis) {
    ReportRow row;
    row.entity = p;
    row.baseline = stable_mean(xs);
    row.attacked = stable_mean(att_vis[p]);
    if (!changes[p].empty()) {
      row.rel_change = stable_mean(changes[p]);
      row.rel_change_std = population_stddev(changes[p]);
    }
    report.rows.push_back(std::move(row));
  }
  std::string order_text;
  for (const auto q : ordering) {
    if (!order_text.empty()) order_text += ';';
    order_text += std::to_string(e.questions[q].index);
  }
  report.metadata = {{"ordering", order_text},
                     {"trials", std::to_string(trials)},
                     {"seed", std::to_string(seed)},
                     {"drop_intercept", format_double(drop.intercept)},
                     {"drop_slope", format_double(drop.slope)},
                     {"voters", std::to_string(complete.voters.size())},
                     {"method", std::string(to_string(method.tag))},
                     {"k", k_text(k)}};
  return report;
}

AttackReport tiebreak_impact(const Election & e, const MatchingMethod & method, std::optional<int> k, unsigned threads)
{
  const RankingEngine engine(e, method, threads);
  const auto fair = candidate_visibility(engine, compute_top_k(engine, k, TieBreakPolicy::proportional()));
  const auto lex = candidate_visibility(engine, compute_top_k(engine, k, TieBreakPolicy::lexicographic()));
  AttackReport report;
  report.scenario = "tiebreak";
  for (std::size_t i = 0; i < fair.rows.size(); ++i) {
    const double b = fair.rows[i].visibility;
    const double a = lex.rows[i].visibility;
    report.rows.push_back({fair.rows[i].entity_id, b, a, relative_change(b, a), std::nullopt});
  }
  report.metadata = {{"method", std::string(to_string(method.tag))}, {"k", k_text(k)}};
  return report;
}

}  // namespace vaa
