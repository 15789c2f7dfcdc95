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

#include "vaa/io.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "vaa/random.hpp"

namespace vaa
{

namespace
{

using nlohmann::json;

std::string at(const std::string & path, std::string_view key) { return path + "." + std::string(key); }
std::string at(const std::string & path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

const json & field(const json & j, const std::string & path, std::string_view key)
{
  if (!j.is_object()) throw SchemaError(path, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw SchemaError(at(path, key), "missing");
  return *it;
}

std::string str(const json & j, const std::string & path)
{
  if (!j.is_string()) throw SchemaError(path, "expected a string");
  return j.get<std::string>();
}

double num(const json & j, const std::string & path)
{
  if (!j.is_number()) throw SchemaError(path, "expected a number");
  return j.get<double>();
}

std::optional<std::string> opt_str(const json & j, const std::string & path, std::string_view key)
{
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return str(*it, at(path, key));
}

const json & array(const json & j, const std::string & path)
{
  if (!j.is_array()) throw SchemaError(path, "expected an array");
  return j;
}

Profile read_profile(const json & j, const std::string & path, std::size_t nq, bool weights_required)
{
  const std::string apath = at(path, "answers");
  const auto & a = array(field(j, path, "answers"), apath);
  if (a.size() != nq) throw SchemaError(apath, "expected " + std::to_string(nq) + " entries");
  std::vector<std::optional<double>> answers(nq);
  for (std::size_t t = 0; t < nq; ++t) {
    if (!a[t].is_null()) answers[t] = num(a[t], at(apath, t));
  }
  std::vector<double> weights(nq, 1.0);
  const auto wit = j.find("weights");
  if (wit == j.end()) {
    if (weights_required) throw SchemaError(at(path, "weights"), "missing");
  } else {
    const std::string wpath = at(path, "weights");
    const auto & w = array(*wit, wpath);
    if (w.size() != nq) throw SchemaError(wpath, "expected " + std::to_string(nq) + " entries");
    for (std::size_t t = 0; t < nq; ++t) weights[t] = num(w[t], at(wpath, t));
  }
  return Profile(std::move(answers), std::move(weights));
}

json write_answers(const Profile & p)
{
  json a = json::array();
  for (const auto & x : p.answers()) a.push_back(x ? json(*x) : json(nullptr));
  return a;
}

bool default_candidate_weights(const Profile & p)
{
  for (std::size_t t = 0; t < p.size(); ++t) {
    if (p.weight(t) != (p.answer(t) ? 1.0 : 0.0)) return false;
  }
  return true;
}

}  // namespace

Election election_from_json(std::string_view text)
{
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error & ex) {
    throw SchemaError("$", std::string("invalid JSON: ") + ex.what());
  }
  const std::string root = "$";
  const auto & version = field(j, root, "schema_version");
  if (!version.is_number_integer() || version.get<int>() != kSchemaVersion) {
    throw SchemaError("schema_version", "unsupported version (expected " + std::to_string(kSchemaVersion) + ")");
  }

  Election e;
  if (const auto it = j.find("weight_set"); it != j.end()) {
    e.weight_set.clear();
    const auto & ws = array(*it, "weight_set");
    for (std::size_t i = 0; i < ws.size(); ++i) e.weight_set.push_back(num(ws[i], at("weight_set", i)));
  }

  const auto & qs = array(field(j, root, "questions"), "questions");
  for (std::size_t i = 0; i < qs.size(); ++i) {
    const std::string path = at("questions", i);
    Question q;
    const auto & idx = field(qs[i], path, "index");
    if (!idx.is_number_integer()) throw SchemaError(at(path, "index"), "expected an integer");
    q.index = idx.get<int>();
    q.id = str(field(qs[i], path, "id"), at(path, "id"));
    const std::string kind_text = str(field(qs[i], path, "kind"), at(path, "kind"));
    const auto kind = parse_scale_kind(kind_text);
    if (!kind) throw SchemaError(at(path, "kind"), "unknown scale kind '" + kind_text + "'");
    std::vector<double> allowed;
    if (const auto it = qs[i].find("allowed"); it != qs[i].end()) {
      const auto & a = array(*it, at(path, "allowed"));
      for (std::size_t k = 0; k < a.size(); ++k) allowed.push_back(num(a[k], at(at(path, "allowed"), k)));
    } else if (*kind == ScaleKind::custom) {
      throw SchemaError(at(path, "allowed"), "missing for a custom scale");
    } else {
      allowed = (*kind == ScaleKind::policy ? AnswerScale::policy()
                 : *kind == ScaleKind::value ? AnswerScale::value()
                                             : AnswerScale::budget())
                  .allowed();
    }
    try {
      q.scale = AnswerScale(*kind, std::move(allowed));
    } catch (const Error & ex) {
      throw SchemaError(at(path, "allowed"), ex.what());
    }
    q.text = opt_str(qs[i], path, "text").value_or("");
    e.questions.push_back(std::move(q));
  }
  const std::size_t nq = e.questions.size();

  const auto & ss = array(field(j, root, "states"), "states");
  for (std::size_t i = 0; i < ss.size(); ++i) {
    const std::string path = at("states", i);
    State s;
    s.id = str(field(ss[i], path, "id"), at(path, "id"));
    const auto & seats = field(ss[i], path, "seats");
    if (!seats.is_number_integer()) throw SchemaError(at(path, "seats"), "expected an integer");
    s.seats = seats.get<int>();
    e.states.push_back(std::move(s));
  }

  if (const auto it = j.find("parties"); it != j.end()) {
    const auto & ps = array(*it, "parties");
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const std::string path = at("parties", i);
      Party p;
      p.id = str(field(ps[i], path, "id"), at(path, "id"));
      p.name = opt_str(ps[i], path, "name").value_or(p.id);
      if (const auto v = ps[i].find("vote_share"); v != ps[i].end() && !v->is_null()) {
        p.vote_share = num(*v, at(path, "vote_share"));
      }
      p.youth_of = opt_str(ps[i], path, "youth_of");
      e.parties.push_back(std::move(p));
    }
  }

  const auto & cs = array(field(j, root, "candidates"), "candidates");
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const std::string path = at("candidates", i);
    Candidate c;
    c.id = str(field(cs[i], path, "id"), at(path, "id"));
    const std::string named = path + " (candidate '" + c.id + "')";
    c.sort_key = opt_str(cs[i], path, "sort_key").value_or(c.id);
    c.state = str(field(cs[i], named, "state"), at(path, "state"));
    c.party = str(field(cs[i], named, "party"), at(path, "party"));
    c.list = str(field(cs[i], named, "list"), at(path, "list"));
    c.profile = read_profile(cs[i], named, nq, false);
    e.candidates.push_back(std::move(c));
  }

  const auto & vs = array(field(j, root, "voters"), "voters");
  for (std::size_t i = 0; i < vs.size(); ++i) {
    const std::string path = at("voters", i);
    Voter v;
    v.id = str(field(vs[i], path, "id"), at(path, "id"));
    const std::string named = path + " (voter '" + v.id + "')";
    v.state = str(field(vs[i], named, "state"), at(path, "state"));
    v.preferred_party = opt_str(vs[i], path, "preferred_party");
    v.profile = read_profile(vs[i], named, nq, true);
    if (const auto t = vs[i].find("timestamp"); t != vs[i].end()) {
      if (!t->is_number_integer()) throw SchemaError(at(path, "timestamp"), "expected an integer");
      v.timestamp = t->get<std::int64_t>();
    }
    v.election_id = opt_str(vs[i], path, "election_id");
    e.voters.push_back(std::move(v));
  }

  if (const auto it = j.find("lists"); it != j.end()) {
    const auto & ls = array(*it, "lists");
    for (std::size_t i = 0; i < ls.size(); ++i) {
      const std::string path = at("lists", i);
      PartyList l;
      l.id = str(field(ls[i], path, "id"), at(path, "id"));
      l.state = str(field(ls[i], path, "state"), at(path, "state"));
      l.party = str(field(ls[i], path, "party"), at(path, "party"));
      const auto & ms = array(field(ls[i], path, "members"), at(path, "members"));
      for (std::size_t k = 0; k < ms.size(); ++k) l.members.push_back(str(ms[k], at(at(path, "members"), k)));
      e.lists.push_back(std::move(l));
    }
  }
  return e;
}

std::string election_to_json(const Election & e)
{
  json j;
  j["schema_version"] = kSchemaVersion;
  j["weight_set"] = e.weight_set;
  j["questions"] = json::array();
  for (const auto & q : e.questions) {
    json o{{"index", q.index}, {"id", q.id}, {"kind", std::string(to_string(q.scale.kind()))},
           {"allowed", q.scale.allowed()}};
    if (!q.text.empty()) o["text"] = q.text;
    j["questions"].push_back(std::move(o));
  }
  j["states"] = json::array();
  for (const auto & s : e.states) j["states"].push_back({{"id", s.id}, {"seats", s.seats}});
  j["parties"] = json::array();
  for (const auto & p : e.parties) {
    json o{{"id", p.id}, {"name", p.name}};
    o["vote_share"] = p.vote_share ? json(*p.vote_share) : json(nullptr);
    o["youth_of"] = p.youth_of ? json(*p.youth_of) : json(nullptr);
    j["parties"].push_back(std::move(o));
  }
  j["candidates"] = json::array();
  for (const auto & c : e.candidates) {
    json o{{"id", c.id},       {"sort_key", c.sort_key}, {"state", c.state},
           {"party", c.party}, {"list", c.list},         {"answers", write_answers(c.profile)}};
    if (!default_candidate_weights(c.profile)) o["weights"] = c.profile.weights();
    j["candidates"].push_back(std::move(o));
  }
  j["voters"] = json::array();
  for (const auto & v : e.voters) {
    json o{{"id", v.id}, {"state", v.state}};
    o["preferred_party"] = v.preferred_party ? json(*v.preferred_party) : json(nullptr);
    o["answers"] = write_answers(v.profile);
    o["weights"] = v.profile.weights();
    o["timestamp"] = v.timestamp;
    o["election_id"] = v.election_id ? json(*v.election_id) : json(nullptr);
    j["voters"].push_back(std::move(o));
  }
  j["lists"] = json::array();
  for (const auto & l : e.lists) {
    j["lists"].push_back({{"id", l.id}, {"state", l.state}, {"party", l.party}, {"members", l.members}});
  }
  return j.dump(1) + "\n";
}

std::string read_file(const std::string & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string & path, std::string_view content)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("cannot write '" + path + "'");
}

Election load_election(const std::string & path) { return election_from_json(read_file(path)); }

void save_election(const Election & e, const std::string & path) { write_file(path, election_to_json(e)); }

std::map<std::string, std::string> default_youth_merge()
{
  return {{"JUSO", "SP"}, {"JG", "Green"}, {"JGLP", "GLP"}, {"JEVP", "EVP"},
          {"JM", "Centre"}, {"JFS", "FDP"}, {"JSVP", "SVP"}};
}

std::size_t longest_identical_run(const Profile & p)
{
  std::size_t best = 0;
  std::size_t run = 0;
  double last = 0.0;
  for (const auto & a : p.answers()) {
    if (!a) {
      run = 0;
      continue;
    }
    run = (run > 0 && last == *a) ? run + 1 : 1;
    last = *a;
    best = std::max(best, run);
  }
  return best;
}

std::pair<Election, CleaningReport> clean_voters(const Election & e, const CleaningConfig & cfg)
{
  if (cfg.min_answered < 1) throw Error("min_answered must be at least 1");
  CleaningReport report;
  report.input = e.voters.size();
  const bool window = cfg.window_start || cfg.window_end;

  std::vector<const Voter *> kept;
  for (const auto & v : e.voters) {
    if (cfg.drop_corrupt && (cfg.dedup || window) && !v.election_id) {
      ++report.corrupt;
      continue;
    }
    if ((cfg.window_start && v.timestamp < *cfg.window_start) || (cfg.window_end && v.timestamp > *cfg.window_end)) {
      ++report.outside_window;
      continue;
    }
    if (v.profile.answered_count() < cfg.min_answered) {
      ++report.too_few_answers;
      continue;
    }
    kept.push_back(&v);
  }

  if (cfg.dedup) {
    std::unordered_map<std::string, std::size_t> best;
    for (std::size_t i = 0; i < kept.size(); ++i) {
      const auto [it, fresh] = best.emplace(kept[i]->id, i);
      if (fresh) continue;
      const Voter & cur = *kept[it->second];
      const Voter & cand = *kept[i];
      const bool newer = cand.timestamp > cur.timestamp ||
                         (cand.timestamp == cur.timestamp &&
                          cand.profile.answered_count() > cur.profile.answered_count());
      if (newer) it->second = i;
    }
    std::vector<const Voter *> unique;
    for (std::size_t i = 0; i < kept.size(); ++i) {
      if (best.at(kept[i]->id) == i) unique.push_back(kept[i]);
    }
    report.duplicates = kept.size() - unique.size();
    kept = std::move(unique);
  }

  Election out = e;
  out.voters.clear();
  for (const auto * v : kept) {
    if (longest_identical_run(v->profile) > cfg.max_consecutive_identical) {
      ++report.straight_lining;
      continue;
    }
    Voter copy = *v;
    if (copy.preferred_party) {
      auto it = cfg.youth_merge.find(*copy.preferred_party);
      std::optional<std::string> main;
      if (it != cfg.youth_merge.end()) main = it->second;
      for (const auto & p : e.parties) {
        if (!main && p.id == *copy.preferred_party && p.youth_of) main = p.youth_of;
      }
      if (main && *main != *copy.preferred_party) {
        copy.preferred_party = main;
        ++report.merged_preferences;
      }
    }
    out.voters.push_back(std::move(copy));
  }
  report.output = out.voters.size();
  return {std::move(out), report};
}

std::string hash_hex(std::string_view text)
{
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(text)));
  return buf;
}

}  // namespace vaa
