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

#include "vaa/synth.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "vaa/random.hpp"
#include "vaa/ranking.hpp"
#include "vaa/util.hpp"

namespace vaa
{

void SynthConfig::validate() const
{
  if (dimensions < 1) throw Error("latent space needs at least one dimension");
  if (states.empty()) throw Error("config declares no state");
  if (parties.empty()) throw Error("config declares no party");
  if (scales.empty()) throw Error("config declares no question");
  if (!(voter_spread >= 1.0)) throw Error("voter spread multiplier must be at least 1");
  if (!loadings.empty() && loadings.size() != scales.size()) throw Error("one loading per question required");
  for (const auto & l : loadings) {
    if (l.loading.size() != dimensions) throw Error("loading dimension mismatch");
  }
  std::set<std::string> ids;
  for (const auto & s : states) {
    if (!ids.insert(s.id).second) throw Error("state '" + s.id + "' declared twice");
    if (s.seats < 1) throw Error("state '" + s.id + "' needs at least one seat");
    if (s.candidates == 0) throw Error("state '" + s.id + "' has no candidates");
  }
  ids.clear();
  double total = 0.0;
  for (const auto & p : parties) {
    if (!ids.insert(p.id).second) throw Error("party '" + p.id + "' declared twice");
    if (p.mean.size() != dimensions) throw Error("party '" + p.id + "' mean has the wrong dimension");
    if (!(p.vote_share >= 0.0)) throw Error("party '" + p.id + "' has a negative vote share");
    if (!(p.spread >= 0.0)) throw Error("party '" + p.id + "' has a negative spread");
    total += p.vote_share;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error("party vote shares must sum to 1");
  double wsum = 0.0;
  for (const auto & [w, prob] : weight_model) {
    if (!(w > 0.0) || !(prob >= 0.0)) throw Error("weight model needs positive weights and probabilities");
    wsum += prob;
  }
  if (std::abs(wsum - 1.0) > 1e-9) throw Error("weight model probabilities must sum to 1");
  if (!(preferred_party_noise >= 0.0 && preferred_party_noise <= 1.0)) {
    throw Error("preferred-party noise must lie in [0, 1]");
  }
  if (candidate_answer_noise < 0.0 || voter_answer_noise < 0.0) throw Error("answer noise must be non-negative");
}

SynthConfig default_synth_config()
{
  SynthConfig cfg;
  cfg.seed = 2023;
  cfg.states = {{"ZH", 36, 250, 5000}, {"BE", 24, 160, 3300}, {"LU", 12, 90, 1700}};
  cfg.parties = {
    {"SOC", "Social Democrats", 0.22, {-1.1, 0.7}, 0.35},
    {"GRN", "Greens", 0.14, {-0.8, 1.1}, 0.35},
    {"LIB", "Liberals", 0.18, {0.9, 0.6}, 0.35},
    {"CEN", "Centre", 0.16, {0.1, -0.1}, 0.35},
    {"CON", "Conservatives", 0.30, {1.0, -1.0}, 0.35},
  };
  cfg.scales.assign(60, ScaleKind::policy);
  cfg.scales.insert(cfg.scales.end(), 7, ScaleKind::value);
  cfg.scales.insert(cfg.scales.end(), 8, ScaleKind::budget);
  return cfg;
}

namespace
{

using nlohmann::json;

AnswerScale preset(ScaleKind k)
{
  switch (k) {
    case ScaleKind::policy: return AnswerScale::policy();
    case ScaleKind::value: return AnswerScale::value();
    case ScaleKind::budget: return AnswerScale::budget();
    case ScaleKind::custom: break;
  }
  throw Error("synthetic questions must use a preset scale");
}

std::vector<QuestionLoading> make_loadings(const SynthConfig & cfg)
{
  if (!cfg.loadings.empty()) return cfg.loadings;
  std::vector<QuestionLoading> out(cfg.scales.size());
  for (std::size_t t = 0; t < out.size(); ++t) {
    Rng rng(derive_seed(cfg.seed, 12, t));
    std::vector<double> a(cfg.dimensions);
    double norm = 0.0;
    while (norm == 0.0) {
      for (auto & x : a) x = standard_normal(rng);
      norm = std::sqrt(std::inner_product(a.begin(), a.end(), a.begin(), 0.0));
    }
    for (auto & x : a) x /= norm;
    out[t].loading = std::move(a);
    out[t].offset = cfg.loading_offset_sd * standard_normal(rng);
  }
  return out;
}

double respond(const QuestionLoading & q, const std::vector<double> & x, double slope, double noise)
{
  double z = q.offset + noise;
  for (std::size_t d = 0; d < x.size(); ++d) z += q.loading[d] * x[d];
  return 100.0 / (1.0 + std::exp(-slope * z));
}

std::string surname(Rng & rng)
{
  static constexpr const char * kSyllables[] = {"ba", "ber", "bru", "da", "en", "fi", "gal", "ger", "hu", "ker",
                                                "la", "li", "ma", "mei", "mo", "na", "ri", "ro", "sch", "ster",
                                                "ta", "ter", "wal", "we", "zi", "zo", "ler", "ni", "ho", "ka"};
  const std::size_t n = 2 + uniform_index(rng, 2);
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += kSyllables[uniform_index(rng, std::size(kSyllables))];
  s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

std::string padded(const char * prefix, std::size_t n, int width)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, n);
  return buf;
}

std::size_t pick(std::span<const double> probs, double u)
{
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return probs.size() - 1;
}

}  // namespace

Election generate_election(const SynthConfig & cfg)
{
  cfg.validate();
  const auto loadings = make_loadings(cfg);
  const std::size_t nq = cfg.scales.size();
  const std::size_t np = cfg.parties.size();

  Election e;
  for (std::size_t t = 0; t < nq; ++t) {
    e.questions.push_back({static_cast<int>(t + 1), padded("q", t + 1, 2), preset(cfg.scales[t]), ""});
  }
  std::vector<double> shares;
  for (const auto & p : cfg.parties) {
    e.parties.push_back({p.id, p.name, p.vote_share, std::nullopt});
    shares.push_back(p.vote_share);
  }
  std::vector<double> weight_values;
  std::vector<double> weight_probs;
  for (const auto & [w, prob] : cfg.weight_model) {
    weight_values.push_back(w);
    weight_probs.push_back(prob);
  }

  std::size_t candidate_no = 0;
  std::size_t voter_no = 0;
  for (const auto & st : cfg.states) {
    e.states.push_back({st.id, st.seats});

    // Candidates per party by largest remainder on vote shares.
    const std::vector<int> caps(np, static_cast<int>(st.candidates));
    const auto per_party = largest_remainder(shares, caps, static_cast<int>(st.candidates));
    for (std::size_t p = 0; p < np; ++p) {
      const auto & party = cfg.parties[p];
      std::vector<std::string> members;
      for (int i = 0; i < per_party[p]; ++i, ++candidate_no) {
        Rng rng(derive_seed(cfg.seed, 10, candidate_no));
        std::vector<double> x(cfg.dimensions);
        for (std::size_t d = 0; d < x.size(); ++d) x[d] = party.mean[d] + party.spread * standard_normal(rng);
        std::vector<double> answers(nq);
        for (std::size_t t = 0; t < nq; ++t) {
          const double noise = cfg.candidate_answer_noise * standard_normal(rng);
          answers[t] = e.questions[t].scale.nearest(respond(loadings[t], x, cfg.logistic_slope, noise));
        }
        Candidate c;
        c.id = padded("c", candidate_no + 1, 5);
        c.sort_key = surname(rng);
        c.state = st.id;
        c.party = party.id;
        c.profile = Profile::complete(answers);
        members.push_back(c.id);
        e.candidates.push_back(std::move(c));
      }
      // Lists: chunks of at most `seats` members.
      for (std::size_t start = 0, n = 1; start < members.size(); start += static_cast<std::size_t>(st.seats), ++n) {
        PartyList l;
        l.id = st.id + "-" + party.id + "-" + std::to_string(n);
        l.state = st.id;
        l.party = party.id;
        const std::size_t stop = std::min(members.size(), start + static_cast<std::size_t>(st.seats));
        l.members.assign(members.begin() + static_cast<std::ptrdiff_t>(start),
                         members.begin() + static_cast<std::ptrdiff_t>(stop));
        for (auto & c : e.candidates) {
          if (c.party == party.id && c.state == st.id &&
              std::find(l.members.begin(), l.members.end(), c.id) != l.members.end()) {
            c.list = l.id;
          }
        }
        e.lists.push_back(std::move(l));
      }
    }

    for (std::size_t i = 0; i < st.voters; ++i, ++voter_no) {
      Rng rng(derive_seed(cfg.seed, 11, voter_no));
      const std::size_t p = pick(shares, uniform01(rng));
      const auto & party = cfg.parties[p];
      std::vector<double> x(cfg.dimensions);
      const double sd = party.spread * cfg.voter_spread;
      for (std::size_t d = 0; d < x.size(); ++d) x[d] = party.mean[d] + sd * standard_normal(rng);
      std::vector<std::optional<double>> answers(nq);
      std::vector<double> weights(nq, 0.0);
      for (std::size_t t = 0; t < nq; ++t) {
        const double noise = cfg.voter_answer_noise * standard_normal(rng);
        const double keep = uniform01(rng);
        const double wu = uniform01(rng);
        if (!(keep < cfg.skip.keep_probability(static_cast<int>(t) + 1))) continue;
        answers[t] = e.questions[t].scale.nearest(respond(loadings[t], x, cfg.logistic_slope, noise));
        weights[t] = weight_values[pick(weight_probs, wu)];
      }
      // Keep at least one answer so every voter is valid.
      if (std::none_of(answers.begin(), answers.end(), [](const auto & a) { return a.has_value(); })) {
        answers[0] = e.questions[0].scale.nearest(respond(loadings[0], x, cfg.logistic_slope, 0.0));
        weights[0] = 1.0;
      }
      std::size_t preferred = p;
      if (np > 1 && uniform01(rng) < cfg.preferred_party_noise) {
        preferred = uniform_index(rng, np - 1);
        if (preferred >= p) ++preferred;
      }
      Voter v;
      v.id = padded("v", voter_no + 1, 6);
      v.state = st.id;
      v.preferred_party = cfg.parties[preferred].id;
      v.profile = Profile(std::move(answers), std::move(weights));
      v.timestamp = static_cast<std::int64_t>(voter_no);
      v.election_id = "synthetic";
      e.voters.push_back(std::move(v));
    }
  }
  return e;
}

SynthConfig synth_config_from_json(const std::string & text)
{
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception & ex) {
    throw Error(std::string("synth config is not valid JSON: ") + ex.what());
  }
  if (!j.is_object()) throw Error("synth config must be a JSON object");
  SynthConfig cfg = default_synth_config();
  try {
    cfg.seed = j.value("seed", cfg.seed);
    cfg.dimensions = j.value("dimensions", cfg.dimensions);
    if (j.contains("states")) {
      cfg.states.clear();
      for (const auto & s : j.at("states")) {
        cfg.states.push_back({s.at("id").get<std::string>(), s.at("seats").get<int>(),
                              s.at("candidates").get<std::size_t>(), s.at("voters").get<std::size_t>()});
      }
    }
    if (j.contains("parties")) {
      cfg.parties.clear();
      for (const auto & p : j.at("parties")) {
        cfg.parties.push_back({p.at("id").get<std::string>(), p.value("name", p.at("id").get<std::string>()),
                               p.at("vote_share").get<double>(), p.at("mean").get<std::vector<double>>(),
                               p.at("spread").get<double>()});
      }
    }
    cfg.voter_spread = j.value("voter_spread", cfg.voter_spread);
    if (j.contains("scales")) {
      cfg.scales.clear();
      for (const auto & s : j.at("scales")) {
        const auto k = parse_scale_kind(s.get<std::string>());
        if (!k) throw Error("unknown scale '" + s.get<std::string>() + "'");
        cfg.scales.push_back(*k);
      }
    }
    if (j.contains("loadings")) {
      for (const auto & l : j.at("loadings")) {
        cfg.loadings.push_back({l.at("loading").get<std::vector<double>>(), l.value("offset", 0.0)});
      }
    }
    cfg.loading_offset_sd = j.value("loading_offset_sd", cfg.loading_offset_sd);
    cfg.logistic_slope = j.value("logistic_slope", cfg.logistic_slope);
    cfg.candidate_answer_noise = j.value("candidate_answer_noise", cfg.candidate_answer_noise);
    cfg.voter_answer_noise = j.value("voter_answer_noise", cfg.voter_answer_noise);
    if (j.contains("weight_model")) {
      cfg.weight_model.clear();
      for (const auto & w : j.at("weight_model")) {
        cfg.weight_model[w.at("weight").get<double>()] = w.at("probability").get<double>();
      }
    }
    if (j.contains("skip")) {
      const auto & s = j.at("skip");
      if (s.contains("table")) {
        cfg.skip = DropModel::custom(s.at("table").get<std::vector<double>>());
      } else {
        cfg.skip.intercept = s.value("intercept", cfg.skip.intercept);
        cfg.skip.slope = s.value("slope", cfg.skip.slope);
      }
    }
    cfg.preferred_party_noise = j.value("preferred_party_noise", cfg.preferred_party_noise);
  } catch (const json::exception & ex) {
    throw Error(std::string("synth config: ") + ex.what());
  }
  cfg.validate();
  return cfg;
}

std::string synth_config_to_json(const SynthConfig & cfg)
{
  json j;
  j["seed"] = cfg.seed;
  j["dimensions"] = cfg.dimensions;
  j["states"] = json::array();
  for (const auto & s : cfg.states) {
    j["states"].push_back({{"id", s.id}, {"seats", s.seats}, {"candidates", s.candidates}, {"voters", s.voters}});
  }
  j["parties"] = json::array();
  for (const auto & p : cfg.parties) {
    j["parties"].push_back(
      {{"id", p.id}, {"name", p.name}, {"vote_share", p.vote_share}, {"mean", p.mean}, {"spread", p.spread}});
  }
  j["voter_spread"] = cfg.voter_spread;
  j["scales"] = json::array();
  for (const auto k : cfg.scales) j["scales"].push_back(std::string(to_string(k)));
  if (!cfg.loadings.empty()) {
    j["loadings"] = json::array();
    for (const auto & l : cfg.loadings) j["loadings"].push_back({{"loading", l.loading}, {"offset", l.offset}});
  }
  j["loading_offset_sd"] = cfg.loading_offset_sd;
  j["logistic_slope"] = cfg.logistic_slope;
  j["candidate_answer_noise"] = cfg.candidate_answer_noise;
  j["voter_answer_noise"] = cfg.voter_answer_noise;
  j["weight_model"] = json::array();
  for (const auto & [w, prob] : cfg.weight_model) j["weight_model"].push_back({{"weight", w}, {"probability", prob}});
  if (cfg.skip.mode == DropModel::Mode::custom) {
    j["skip"] = {{"table", cfg.skip.table}};
  } else {
    j["skip"] = {{"intercept", cfg.skip.intercept}, {"slope", cfg.skip.slope}};
  }
  j["preferred_party_noise"] = cfg.preferred_party_noise;
  return j.dump(2);
}

ElectionSummary describe_election(const Election & e)
{
  ElectionSummary out;
  const ElectionIndex idx(e);
  for (std::size_t s = 0; s < idx.state_count(); ++s) {
    if (idx.voters_in(s).empty()) continue;
    StateSummary r;
    r.id = idx.state_id(s);
    for (const auto & st : e.states) {
      if (st.id == r.id) r.seats = st.seats;
    }
    r.candidates = idx.candidates_in(s).size();
    r.voters = idx.voters_in(s).size();
    r.lists = idx.lists_in(s).size();
    out.states.push_back(r);
  }
  if (!e.voters.empty()) {
    for (const auto & p : idx.party_ids()) {
      PartySummary r;
      r.id = p;
      for (const auto & c : e.candidates) r.candidates += c.party == p ? 1 : 0;
      for (const auto & party : e.parties) {
        if (party.id == p) r.vote_share = party.vote_share;
      }
      for (const auto & v : e.voters) r.preferred_by += v.preferred_party == p ? 1 : 0;
      out.parties.push_back(r);
    }
  }
  out.completeness.assign(e.questions.size() + 1, 0);
  std::vector<double> fractions;
  for (const auto & v : e.voters) {
    const std::size_t n = v.profile.answered_count();
    ++out.completeness[std::min(n, e.questions.size())];
    fractions.push_back(e.questions.empty() ? 0.0 : static_cast<double>(n) / static_cast<double>(e.questions.size()));
  }
  out.mean_answered_fraction = stable_mean(fractions);
  return out;
}

}  // namespace vaa
