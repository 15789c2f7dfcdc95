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

// Command-line front end: synth, validate, clean, match, visibility, attack,
// metrics and report. Every CSV is written next to a "<file>.meta.json"
// sidecar naming the seed, method and configuration hash.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "vaa/attacks.hpp"
#include "vaa/io.hpp"
#include "vaa/metrics.hpp"
#include "vaa/synth.hpp"
#include "vaa/util.hpp"

namespace
{

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitUsage = 2;

/// Bad flag combination detected after parsing.
class UsageError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Input election failed the model's validation rules.
class InvalidElection : public std::runtime_error
{
public:
  InvalidElection(const std::string & path, vaa::ValidationReport report)
  : std::runtime_error("election '" + path + "' violates " + std::to_string(report.size()) + " rule(s)"),
    report_(std::move(report))
  {
  }
  const vaa::ValidationReport & report() const noexcept { return report_; }

private:
  vaa::ValidationReport report_;
};

void print_error(std::string_view kind, const std::string & message, const json & extra = json::object())
{
  json j{{"error", {{"kind", kind}, {"message", message}}}};
  for (const auto & [key, value] : extra.items()) j["error"][key] = value;
  std::cerr << j.dump() << "\n";
}

struct Common
{
  std::string input;
  std::string out;
  std::string method = "l2";
  std::optional<double> ridge;
  std::string matrix_csv;
  std::string covariance = "per-state";
  std::optional<int> k;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
};

void add_input(CLI::App * cmd, Common & c)
{
  cmd->add_option("-i,--input", c.input, "Election JSON")->required();
}

void add_out(CLI::App * cmd, Common & c, const std::string & what)
{
  cmd->add_option("-o,--out", c.out, what)->required();
}

void add_method(CLI::App * cmd, Common & c)
{
  cmd->add_option("--method", c.method, "l2, l1, angular, agreement, mahalanobis, l1bonus, hybrid");
  cmd->add_option("--ridge", c.ridge, "Mahalanobis ridge (default scales with the covariance trace)");
  cmd->add_option("--matrix", c.matrix_csv, "CSV distance table replacing the built-in L1 Bonus/Hybrid table");
  cmd->add_option("--covariance", c.covariance, "Mahalanobis covariance scope: per-state or global");
}

void add_k(CLI::App * cmd, Common & c) { cmd->add_option("--k", c.k, "Top-k size (default: seats, 1 for lists)"); }

void add_seed(CLI::App * cmd, Common & c) { cmd->add_option("--seed", c.seed, "Random seed"); }

void add_threads(CLI::App * cmd, Common & c)
{
  cmd->add_option("--threads", c.threads, "Worker threads (results do not depend on it)")->check(CLI::Range(1u, 1024u));
}

std::uint64_t require_seed(const Common & c, std::string_view what)
{
  if (!c.seed) throw UsageError(std::string(what) + " is randomized and requires --seed");
  return *c.seed;
}

vaa::MatchingMethod method_from(const std::string & name, const Common & c)
{
  const auto tag = vaa::parse_method(name);
  if (!tag) throw UsageError("unknown method '" + name + "'");
  auto m = vaa::MatchingMethod::of(*tag);
  m.ridge = c.ridge;
  if (!c.matrix_csv.empty()) {
    std::ifstream in(c.matrix_csv);
    if (!in) throw vaa::Error("cannot read '" + c.matrix_csv + "'");
    m.matrix = vaa::DistanceMatrix::from_csv(in);
  }
  if (c.covariance == "per-state" || c.covariance == "per_state") {
    m.covariance_scope = vaa::CovarianceScope::per_state;
  } else if (c.covariance == "global") {
    m.covariance_scope = vaa::CovarianceScope::global;
  } else {
    throw UsageError("unknown covariance scope '" + c.covariance + "'");
  }
  return m;
}

/// \param raw_voters tolerate repeated voter ids and empty voter profiles,
/// which the cleaning pipeline removes.
vaa::Election load_valid(const std::string & path, bool raw_voters = false)
{
  auto e = vaa::load_election(path);
  auto report = vaa::validate_election(e);
  if (raw_voters) {
    std::erase_if(report, [](const vaa::Violation & v) {
      return v.rule == "voter id not unique" || v.rule == "voter answered no question";
    });
  }
  if (!report.empty()) throw InvalidElection(path, std::move(report));
  return e;
}

vaa::TieBreakPolicy policy_from(const std::string & name, const Common & c)
{
  const auto kind = vaa::parse_tiebreak(name);
  if (!kind) throw UsageError("unknown tie-break policy '" + name + "'");
  if (*kind == vaa::TieBreakKind::seeded_fair_random) return vaa::TieBreakPolicy::seeded(require_seed(c, "--tiebreak seeded"));
  return {*kind, 0};
}

/// Writes `content` to `path` and the sidecar to `path`.meta.json.
class Emitter
{
public:
  Emitter(std::string command, const Common & c) : command_(std::move(command)), common_(c) {}

  json & config() { return config_; }
  json & summary() { return summary_; }

  void write(const std::string & path, const std::string & content, const std::string & format = "csv")
  {
    vaa::write_file(path, content);
    json meta;
    meta["command"] = command_;
    meta["format"] = format;
    meta["seed"] = common_.seed ? json(*common_.seed) : json(nullptr);
    meta["method"] = method_.empty() ? json(nullptr) : json(method_);
    meta["config"] = config_;
    meta["config_hash"] = vaa::hash_hex(config_.dump());
    if (!common_.input.empty()) meta["input_hash"] = vaa::hash_hex(vaa::read_file(common_.input));
    meta["output_hash"] = vaa::hash_hex(content);
    meta["schema_version"] = vaa::kSchemaVersion;
    if (!summary_.empty()) meta["summary"] = summary_;
    vaa::write_file(path + ".meta.json", meta.dump(2) + "\n");
    outputs_.push_back(path);
  }

  void set_method(std::string m) { method_ = std::move(m); }

  /// One-line JSON on stdout; echoes the seed.
  void announce() const
  {
    json j{{"command", command_}, {"outputs", outputs_}};
    j["seed"] = common_.seed ? json(*common_.seed) : json(nullptr);
    std::cout << j.dump() << "\n";
  }

private:
  std::string command_;
  const Common & common_;
  std::string method_;
  json config_ = json::object();
  json summary_ = json::object();
  std::vector<std::string> outputs_;
};

json method_config(const vaa::MatchingMethod & m, const Common & c)
{
  json j{{"name", std::string(vaa::to_string(m.tag))}};
  if (m.ridge) j["ridge"] = *m.ridge;
  if (m.tag == vaa::MethodTag::mahalanobis) j["covariance"] = c.covariance;
  if (!c.matrix_csv.empty()) j["matrix_hash"] = vaa::hash_hex(vaa::read_file(c.matrix_csv));
  return j;
}

json k_json(const std::optional<int> & k) { return k ? json(*k) : json(nullptr); }

std::string report_csv(const vaa::AttackReport & r)
{
  std::ostringstream out;
  vaa::write_report_csv(out, r);
  return out.str();
}

json report_summary(const vaa::AttackReport & r)
{
  json j = json::object();
  for (const auto & [key, value] : r.metadata) j[key] = value;
  return j;
}

std::vector<std::string> split(const std::string & text, char sep)
{
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

vaa::ListScoreMode list_mode_from(const std::string & name)
{
  if (name == "mean-of-scores") return vaa::ListScoreMode::mean_of_scores;
  if (name == "score-of-mean") return vaa::ListScoreMode::score_of_mean;
  throw UsageError("unknown list score '" + name + "' (mean-of-scores or score-of-mean)");
}

std::string profile_csv(const vaa::Election & e, const vaa::Profile & p)
{
  std::ostringstream out;
  out << "question_index,question_id,answer\n";
  for (std::size_t t = 0; t < e.questions.size(); ++t) {
    out << e.questions[t].index << "," << vaa::csv_escape(e.questions[t].id) << ","
        << vaa::format_optional(p.answer(t)) << "\n";
  }
  return out.str();
}

double best_real_visibility(const vaa::Election & e, const vaa::MatchingMethod & m, std::optional<int> k,
                            const std::string & state, unsigned threads)
{
  const vaa::RankingEngine engine(e, m, threads);
  const auto top = vaa::compute_top_k(engine, k, vaa::TieBreakPolicy::lexicographic());
  const auto table = vaa::candidate_visibility(engine, top);
  double best = 0.0;
  for (const auto & row : table.rows) {
    if (row.state == state) best = std::max(best, row.visibility);
  }
  return best;
}

// --- subcommands ---------------------------------------------------------

struct SynthArgs
{
  std::string config;
};

int run_synth(const Common & c, const SynthArgs & a)
{
  auto cfg = a.config.empty() ? vaa::default_synth_config() : vaa::synth_config_from_json(vaa::read_file(a.config));
  cfg.seed = require_seed(c, "synth");
  Emitter em("synth", c);
  em.config() = json::parse(vaa::synth_config_to_json(cfg));
  const auto e = vaa::generate_election(cfg);
  em.summary() = {{"states", e.states.size()}, {"candidates", e.candidates.size()}, {"voters", e.voters.size()},
                  {"questions", e.questions.size()}};
  em.write(c.out, vaa::election_to_json(e), "election-json");
  em.announce();
  return kExitOk;
}

int run_validate(const Common & c)
{
  const auto e = vaa::load_election(c.input);
  const auto report = vaa::validate_election(e);
  std::ostringstream out;
  out << "entity,rule\n";
  for (const auto & v : report) out << vaa::csv_escape(v.entity) << "," << vaa::csv_escape(v.rule) << "\n";
  if (c.out.empty()) {
    std::cout << out.str();
  } else {
    Emitter em("validate", c);
    em.summary() = {{"violations", report.size()}};
    em.write(c.out, out.str());
  }
  return report.empty() ? kExitOk : kExitValidation;
}

struct CleanArgs
{
  std::string config;
  std::optional<std::size_t> min_answered;
  std::optional<std::int64_t> window_start;
  std::optional<std::int64_t> window_end;
  std::optional<std::size_t> max_identical;
  bool no_dedup = false;
  bool keep_corrupt = false;
  std::string report;
};

vaa::CleaningConfig cleaning_from_json(const std::string & text)
{
  const json j = json::parse(text);
  vaa::CleaningConfig cfg;
  if (j.contains("min_answered")) cfg.min_answered = j.at("min_answered").get<std::size_t>();
  if (j.contains("window_start") && !j.at("window_start").is_null()) cfg.window_start = j.at("window_start").get<std::int64_t>();
  if (j.contains("window_end") && !j.at("window_end").is_null()) cfg.window_end = j.at("window_end").get<std::int64_t>();
  if (j.contains("max_consecutive_identical")) cfg.max_consecutive_identical = j.at("max_consecutive_identical").get<std::size_t>();
  if (j.contains("dedup")) cfg.dedup = j.at("dedup").get<bool>();
  if (j.contains("drop_corrupt")) cfg.drop_corrupt = j.at("drop_corrupt").get<bool>();
  if (j.contains("youth_merge")) cfg.youth_merge = j.at("youth_merge").get<std::map<std::string, std::string>>();
  return cfg;
}

int run_clean(const Common & c, const CleanArgs & a)
{
  const auto e = load_valid(c.input, true);
  auto cfg = a.config.empty() ? vaa::CleaningConfig{} : cleaning_from_json(vaa::read_file(a.config));
  if (a.min_answered) cfg.min_answered = *a.min_answered;
  if (a.window_start) cfg.window_start = a.window_start;
  if (a.window_end) cfg.window_end = a.window_end;
  if (a.max_identical) cfg.max_consecutive_identical = *a.max_identical;
  if (a.no_dedup) cfg.dedup = false;
  if (a.keep_corrupt) cfg.drop_corrupt = false;
  if (cfg.min_answered < 1) throw UsageError("--min-answered must be at least 1");

  const auto [cleaned, r] = vaa::clean_voters(e, cfg);
  Emitter em("clean", c);
  em.config() = {{"min_answered", cfg.min_answered},
                 {"window_start", cfg.window_start ? json(*cfg.window_start) : json(nullptr)},
                 {"window_end", cfg.window_end ? json(*cfg.window_end) : json(nullptr)},
                 {"max_consecutive_identical", cfg.max_consecutive_identical},
                 {"dedup", cfg.dedup},
                 {"drop_corrupt", cfg.drop_corrupt},
                 {"youth_merge", cfg.youth_merge}};
  const json counts{{"input", r.input},
                    {"corrupt", r.corrupt},
                    {"outside_window", r.outside_window},
                    {"too_few_answers", r.too_few_answers},
                    {"duplicates", r.duplicates},
                    {"straight_lining", r.straight_lining},
                    {"merged_preferences", r.merged_preferences},
                    {"output", r.output}};
  em.summary() = counts;
  em.write(c.out, vaa::election_to_json(cleaned), "election-json");
  if (!a.report.empty()) {
    std::ostringstream out;
    out << "rule,count\n";
    for (const auto * key : {"input", "corrupt", "outside_window", "too_few_answers", "duplicates",
                             "straight_lining", "merged_preferences", "output"}) {
      out << key << "," << counts.at(key).get<std::size_t>() << "\n";
    }
    em.write(a.report, out.str());
  }
  em.announce();
  return kExitOk;
}

struct MatchArgs
{
  std::string tiebreak = "lexicographic";
  std::vector<std::string> mitigations;
  bool full = false;
};

int run_match(const Common & c, const MatchArgs & a)
{
  const auto e = load_valid(c.input);
  const auto m = method_from(c.method, c);
  const auto policy = policy_from(a.tiebreak, c);
  if (policy.kind == vaa::TieBreakKind::proportional_credit) {
    throw UsageError("match needs a total order; use --tiebreak lexicographic or seeded");
  }
  vaa::MitigationConfig mit;
  for (const auto & name : a.mitigations) {
    if (name == "deal-breaker") {
      mit.deal_breaker = true;
    } else if (name == "party-cap") {
      mit.party_cap = true;
    } else if (name == "relative-normalization") {
      mit.relative_normalization = true;
    } else if (name == "mean-vector-list-score") {
      mit.mean_vector_list_score = true;
    } else {
      throw UsageError("unknown mitigation '" + name + "'");
    }
  }

  const vaa::RankingEngine engine(e, m, c.threads);
  std::vector<std::string> chunks(e.voters.size());
  vaa::parallel_chunks(e.voters.size(), c.threads, 64, [&](std::size_t begin, std::size_t end) {
    for (std::size_t v = begin; v < end; ++v) {
      const auto & voter = e.voters[v];
      const auto rec = vaa::recommend(engine, voter, policy, c.k, mit);
      std::ostringstream out;
      const std::size_t nc = a.full ? rec.candidates.entries.size()
                                    : std::min<std::size_t>(rec.candidates.entries.size(),
                                                            static_cast<std::size_t>(std::max(rec.candidates.k, 0)));
      const auto row = [&](std::string_view kind, std::size_t rank, const vaa::RankEntry & r) {
        out << vaa::csv_escape(voter.id) << "," << vaa::csv_escape(voter.state) << "," << kind << "," << rank << ","
            << vaa::csv_escape(r.id) << "," << vaa::format_double(r.score) << "," << vaa::format_double(r.distance)
            << "," << (r.flagged ? 1 : 0) << "\n";
      };
      for (std::size_t i = 0; i < nc; ++i) row("candidate", i + 1, rec.candidates.entries[i]);
      const std::size_t nl = a.full ? rec.lists.entries.size() : std::min<std::size_t>(1, rec.lists.entries.size());
      for (std::size_t i = 0; i < nl; ++i) row("list", i + 1, rec.lists.entries[i]);
      chunks[v] = out.str();
    }
  });
  std::string csv = "voter_id,state,kind,rank,entity_id,score,distance,flagged\n";
  for (const auto & s : chunks) csv += s;

  Emitter em("match", c);
  em.set_method(std::string(vaa::to_string(m.tag)));
  em.config() = {{"method", method_config(m, c)},
                 {"tiebreak", std::string(vaa::to_string(policy.kind))},
                 {"k", k_json(c.k)},
                 {"mitigations", a.mitigations},
                 {"full", a.full}};
  em.write(c.out, csv);
  em.announce();
  return kExitOk;
}

struct VisibilityArgs
{
  std::string target = "candidate";
  std::string tiebreak = "lexicographic";
  std::string list_score = "mean-of-scores";
};

int run_visibility(const Common & c, const VisibilityArgs & a)
{
  const auto e = load_valid(c.input);
  const auto m = method_from(c.method, c);
  const auto policy = policy_from(a.tiebreak, c);
  const vaa::RankingEngine engine(e, m, c.threads);
  vaa::VisibilityTable table;
  if (a.target == "candidate" || a.target == "party") {
    const auto top = vaa::compute_top_k(engine, c.k, policy);
    table = a.target == "candidate" ? vaa::candidate_visibility(engine, top) : vaa::party_visibility(engine, top);
  } else if (a.target == "list") {
    table = vaa::list_visibility(engine, c.k.value_or(1), list_mode_from(a.list_score), policy);
  } else {
    throw UsageError("unknown target '" + a.target + "' (candidate, party or list)");
  }
  std::ostringstream out;
  vaa::write_visibility_csv(out, table);

  Emitter em("visibility", c);
  em.set_method(std::string(vaa::to_string(m.tag)));
  em.config() = {{"method", method_config(m, c)},
                 {"target", a.target},
                 {"tiebreak", std::string(vaa::to_string(policy.kind))},
                 {"k", k_json(c.k)}};
  if (a.target == "list") em.config()["list_score"] = a.list_score;
  em.write(c.out, out.str());
  em.announce();
  return kExitOk;
}

struct AttackArgs
{
  std::string state;
  std::string party;
  std::string direction = "moderate";
  int iterations = vaa::AnnealingConfig{}.iterations;
  double temperature = vaa::AnnealingConfig{}.initial_temperature;
  double cooling = vaa::AnnealingConfig{}.cooling_factor;
  int restarts = vaa::AnnealingConfig{}.restarts;
  double subsample = 1.0;
  std::uint64_t max_profiles = 1000000;
  int clones = 10;
  int noise = 1;
  std::string scenario = "strong";
  int bins = 20;
  std::size_t max_size = 10;
  int question = 1;
  int copies = 1;
  std::string ordering = "identity";
  int trials = 10;
  double intercept = vaa::DropModel{}.intercept;
  double slope = vaa::DropModel{}.slope;
  std::string list_score = "mean-of-scores";
};

std::vector<std::size_t> ordering_from(const std::string & text, std::size_t nq)
{
  std::vector<std::size_t> order(nq);
  for (std::size_t t = 0; t < nq; ++t) order[t] = t;
  if (text == "identity") return order;
  if (text == "reverse") return {order.rbegin(), order.rend()};
  order.clear();
  for (const auto & part : split(text, ',')) {
    std::size_t pos = 0;
    int idx = 0;
    try {
      idx = std::stoi(part, &pos);
    } catch (const std::exception &) {
      pos = 0;
    }
    if (pos != part.size() || idx < 1 || static_cast<std::size_t>(idx) > nq) {
      throw UsageError("--ordering expects identity, reverse or a comma list of 1-based question positions");
    }
    order.push_back(static_cast<std::size_t>(idx - 1));
  }
  return order;
}

std::size_t question_position(const vaa::Election & e, int index)
{
  for (std::size_t t = 0; t < e.questions.size(); ++t) {
    if (e.questions[t].index == index) return t;
  }
  throw UsageError("no question with index " + std::to_string(index));
}

void require(const std::string & value, std::string_view flag)
{
  if (value.empty()) throw UsageError(std::string(flag) + " is required for this attack");
}

int run_attack(const std::string & name, const Common & c, const AttackArgs & a)
{
  const auto e = load_valid(c.input);
  const auto m = method_from(c.method, c);
  Emitter em("attack " + name, c);
  em.set_method(std::string(vaa::to_string(m.tag)));
  json & cfg = em.config();
  cfg = {{"attack", name}, {"method", method_config(m, c)}, {"k", k_json(c.k)}};
  std::string csv;

  if (name == "answer-optimization" || name == "brute-force") {
    require(a.state, "--state");
    cfg["state"] = a.state;
    vaa::CraftResult r;
    if (name == "answer-optimization") {
      vaa::AnnealingConfig ac;
      ac.iterations = a.iterations;
      ac.initial_temperature = a.temperature;
      ac.cooling_factor = a.cooling;
      ac.restarts = a.restarts;
      ac.voter_subsample_fraction = a.subsample;
      ac.seed = require_seed(c, "answer-optimization");
      ac.validate();
      cfg["annealing"] = {{"iterations", ac.iterations}, {"initial_temperature", ac.initial_temperature},
                          {"cooling_factor", ac.cooling_factor}, {"restarts", ac.restarts},
                          {"voter_subsample_fraction", ac.voter_subsample_fraction}, {"seed", ac.seed}};
      r = vaa::optimize_answers(e, a.state, c.k, m, ac);
    } else {
      cfg["max_profiles"] = a.max_profiles;
      r = vaa::brute_force_optimal(e, a.state, c.k, m, a.max_profiles);
    }
    const double best = best_real_visibility(e, m, c.k, a.state, c.threads);
    em.summary() = {{"state", a.state},
                    {"visibility", r.visibility},
                    {"objective", r.objective},
                    {"evaluations", r.evaluations},
                    {"best_real_visibility", best}};
    csv = profile_csv(e, r.profile);
  } else if (name == "calibration") {
    require(a.party, "--party");
    const auto dir = vaa::parse_direction(a.direction);
    if (!dir) throw UsageError("--direction must be moderate or strong");
    cfg["party"] = a.party;
    cfg["direction"] = a.direction;
    const auto r = vaa::calibration_experiment(e, a.party, m, *dir, c.k, c.threads);
    em.summary() = report_summary(r);
    csv = report_csv(r);
  } else if (name == "diversification") {
    const auto r = vaa::diversification_analysis(e, m, c.k, c.threads);
    std::ostringstream out;
    out << "party,candidates,vote_share,candidates_per_point,visibility,visibility_ratio\n";
    for (const auto & row : r.rows) {
      out << vaa::csv_escape(row.party) << "," << row.candidates << "," << vaa::format_double(row.vote_share) << ","
          << vaa::format_double(row.candidates_per_point) << "," << vaa::format_double(row.visibility) << ","
          << vaa::format_double(row.visibility_ratio) << "\n";
    }
    em.summary() = {{"correlation", r.correlation ? json(*r.correlation) : json(nullptr)}};
    csv = out.str();
  } else if (name == "clones") {
    require(a.party, "--party");
    const auto seed = require_seed(c, "clones");
    cfg["party"] = a.party;
    cfg["clones"] = a.clones;
    cfg["noise"] = a.noise;
    const auto r = vaa::diversification_simulation(e, a.party, a.clones, a.noise, seed, m, c.k, c.threads);
    em.summary() = report_summary(r);
    csv = report_csv(r);
  } else if (name == "list-centralization") {
    cfg["list_score"] = a.list_score;
    const auto r = vaa::list_centralization_analysis(e, m, list_mode_from(a.list_score), c.threads);
    std::ostringstream out;
    out << "list,state,spread,visibility\n";
    for (const auto & row : r.rows) {
      out << vaa::csv_escape(row.list) << "," << vaa::csv_escape(row.state) << "," << vaa::format_double(row.spread)
          << "," << vaa::format_double(row.visibility) << "\n";
    }
    em.summary() = {{"correlation", r.correlation ? json(*r.correlation) : json(nullptr)}};
    csv = out.str();
  } else if (name == "weights") {
    vaa::WeightMap alt;
    if (a.scenario == "strong") {
      alt = vaa::strong_weights();
    } else if (a.scenario == "weak") {
      alt = vaa::weak_weights();
    } else {
      throw UsageError("--scenario must be strong or weak");
    }
    cfg["scenario"] = a.scenario;
    const auto r = vaa::weight_scenario(e, m, alt, c.k, c.threads);
    em.summary() = report_summary(r);
    csv = report_csv(r);
  } else if (name == "top-match") {
    if (a.bins < 1) throw UsageError("--bins must be positive");
    cfg["bins"] = a.bins;
    const auto h = vaa::top_match_distribution(e, m, a.bins, c.threads);
    std::ostringstream out;
    out << "bin_low,bin_high,overall";
    for (const auto & [party, counts] : h.by_party) out << "," << vaa::csv_escape(party);
    out << "\n";
    for (std::size_t b = 0; b < h.overall.size(); ++b) {
      out << vaa::format_double(h.edges[b]) << "," << vaa::format_double(h.edges[b + 1]) << "," << h.overall[b];
      for (const auto & [party, counts] : h.by_party) out << "," << counts[b];
      out << "\n";
    }
    csv = out.str();
  } else if (name == "question-subset") {
    require(a.party, "--party");
    cfg["party"] = a.party;
    cfg["max_size"] = a.max_size;
    const auto r = vaa::greedy_question_subset(e, a.party, m, c.k, a.max_size, c.threads);
    std::ostringstream out;
    out << "step,question_index,visibility,gain\n";
    for (std::size_t i = 0; i < r.questions.size(); ++i) {
      out << i + 1 << "," << r.questions[i] << "," << vaa::format_double(r.visibility[i]) << ","
          << vaa::format_optional(r.gain[i]) << "\n";
    }
    em.summary() = {{"baseline", r.baseline}, {"best_step", r.best_step + 1}};
    csv = out.str();
  } else if (name == "question-correlation") {
    const auto mat = vaa::question_correlation_matrix(e.voters, e.questions.size());
    std::ostringstream out;
    out << "question";
    for (const auto & q : e.questions) out << "," << vaa::csv_escape(q.id);
    out << "\n";
    for (std::size_t i = 0; i < mat.size(); ++i) {
      out << vaa::csv_escape(e.questions[i].id);
      for (const auto & x : mat[i]) out << "," << vaa::format_optional(x);
      out << "\n";
    }
    csv = out.str();
  } else if (name == "duplicate-question") {
    if (a.copies < 1) throw UsageError("--copies must be positive");
    cfg["question"] = a.question;
    cfg["copies"] = a.copies;
    const auto r = vaa::duplicate_question_attack(e, question_position(e, a.question), a.copies, m, c.k, c.threads);
    em.summary() = report_summary(r);
    csv = report_csv(r);
  } else if (name == "question-order") {
    const auto seed = require_seed(c, "question-order");
    if (a.trials < 1) throw UsageError("--trials must be positive");
    const auto order = ordering_from(a.ordering, e.questions.size());
    vaa::DropModel drop;
    drop.intercept = a.intercept;
    drop.slope = a.slope;
    cfg["ordering"] = a.ordering;
    cfg["trials"] = a.trials;
    cfg["drop"] = {{"intercept", a.intercept}, {"slope", a.slope}};
    const auto r = vaa::question_order_experiment(e, order, drop, a.trials, seed, m, c.k, c.threads);
    em.summary() = report_summary(r);
    csv = report_csv(r);
  } else if (name == "tiebreak") {
    const auto r = vaa::tiebreak_impact(e, m, c.k, c.threads);
    em.summary() = report_summary(r);
    csv = report_csv(r);
  } else {
    throw UsageError("unknown attack '" + name + "'");
  }
  em.write(c.out, csv);
  em.announce();
  return kExitOk;
}

struct MetricsArgs
{
  std::string methods = "l2,l1,angular,agreement,mahalanobis,l1bonus,hybrid";
  std::string bia_parties;
  std::string tiebreak = "lexicographic";
};

std::vector<vaa::MatchingMethod> methods_from(const std::string & list, const Common & c)
{
  std::vector<vaa::MatchingMethod> out;
  for (const auto & name : split(list, ',')) out.push_back(method_from(name, c));
  if (out.empty()) throw UsageError("--methods is empty");
  return out;
}

vaa::MetricConfig metric_config(const Common & c, const MetricsArgs & a)
{
  vaa::MetricConfig mc;
  mc.k = c.k;
  mc.threads = c.threads;
  mc.bia_parties = split(a.bia_parties, ',');
  mc.policy = policy_from(a.tiebreak, c);
  return mc;
}

int run_metrics(const Common & c, const MetricsArgs & a)
{
  const auto e = load_valid(c.input);
  const auto methods = methods_from(a.methods, c);
  const auto mc = metric_config(c, a);
  const auto table = vaa::method_comparison(e, methods, mc);
  std::ostringstream out;
  vaa::write_scorecard_csv(out, table);
  Emitter em("metrics", c);
  em.set_method(a.methods);
  em.config() = {{"methods", split(a.methods, ',')},
                 {"k", k_json(c.k)},
                 {"bia_parties", mc.bia_parties},
                 {"tiebreak", std::string(vaa::to_string(mc.policy.kind))}};
  if (c.ridge) em.config()["ridge"] = *c.ridge;
  em.write(c.out, out.str());
  em.announce();
  return kExitOk;
}

struct ReportArgs
{
  std::string dir;
  std::string tiebreak = "lexicographic";
  bool with_metrics = false;
  MetricsArgs metrics;
};

int run_report(const Common & c, const ReportArgs & a)
{
  const auto e = load_valid(c.input);
  const auto m = method_from(c.method, c);
  const auto policy = policy_from(a.tiebreak, c);
  std::filesystem::create_directories(a.dir);
  const auto path = [&](const std::string & file) { return (std::filesystem::path(a.dir) / file).string(); };

  Emitter em("report", c);
  em.set_method(std::string(vaa::to_string(m.tag)));
  em.config() = {{"method", method_config(m, c)},
                 {"tiebreak", std::string(vaa::to_string(policy.kind))},
                 {"k", k_json(c.k)},
                 {"with_metrics", a.with_metrics}};

  const auto summary = vaa::describe_election(e);
  {
    std::ostringstream out;
    out << "state,seats,candidates,voters,lists\n";
    for (const auto & s : summary.states) {
      out << vaa::csv_escape(s.id) << "," << s.seats << "," << s.candidates << "," << s.voters << "," << s.lists << "\n";
    }
    em.write(path("states.csv"), out.str());
  }
  {
    std::ostringstream out;
    out << "party,candidates,vote_share,preferred_by\n";
    for (const auto & p : summary.parties) {
      out << vaa::csv_escape(p.id) << "," << p.candidates << "," << vaa::format_optional(p.vote_share) << ","
          << p.preferred_by << "\n";
    }
    em.write(path("parties.csv"), out.str());
  }
  {
    std::ostringstream out;
    out << "answered,voters\n";
    for (std::size_t n = 0; n < summary.completeness.size(); ++n) out << n << "," << summary.completeness[n] << "\n";
    em.write(path("completeness.csv"), out.str());
  }

  const vaa::RankingEngine engine(e, m, c.threads);
  const auto top = vaa::compute_top_k(engine, c.k, policy);
  const auto emit = [&](const std::string & file, const vaa::VisibilityTable & t) {
    std::ostringstream out;
    vaa::write_visibility_csv(out, t);
    em.write(path(file), out.str());
  };
  emit("visibility_candidate.csv", vaa::candidate_visibility(engine, top));
  emit("visibility_party.csv", vaa::party_visibility(engine, top));
  emit("visibility_list.csv", vaa::list_visibility(engine, 1, vaa::ListScoreMode::mean_of_scores, policy));

  if (a.with_metrics) {
    const auto table = vaa::method_comparison(e, methods_from(a.metrics.methods, c), metric_config(c, a.metrics));
    std::ostringstream out;
    vaa::write_scorecard_csv(out, table);
    em.write(path("scorecard.csv"), out.str());
  }
  em.announce();
  return kExitOk;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Voting advice application matching and robustness toolkit", "vaa"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "vaa 1.0.0");

  Common c;

  SynthArgs synth_args;
  auto * synth = app.add_subcommand("synth", "Generate a synthetic election");
  synth->add_option("--config", synth_args.config, "SynthConfig JSON (default: built-in three-state election)");
  add_seed(synth, c);
  add_out(synth, c, "Election JSON to write");

  auto * validate = app.add_subcommand("validate", "Check an election document; exit 1 on violations");
  add_input(validate, c);
  validate->add_option("-o,--out", c.out, "Violations CSV (default: stdout)");

  CleanArgs clean_args;
  auto * clean = app.add_subcommand("clean", "Apply the voter cleaning pipeline");
  add_input(clean, c);
  add_out(clean, c, "Cleaned election JSON");
  clean->add_option("--config", clean_args.config, "CleaningConfig JSON");
  clean->add_option("--min-answered", clean_args.min_answered, "Minimum answered questions");
  clean->add_option("--window-start", clean_args.window_start, "First accepted timestamp");
  clean->add_option("--window-end", clean_args.window_end, "Last accepted timestamp");
  clean->add_option("--max-identical", clean_args.max_identical, "Longest allowed run of identical answers");
  clean->add_flag("--no-dedup", clean_args.no_dedup, "Keep repeated voter ids");
  clean->add_flag("--keep-corrupt", clean_args.keep_corrupt, "Keep voters without an election id");
  clean->add_option("--report", clean_args.report, "Per-rule counts CSV");

  MatchArgs match_args;
  auto * match = app.add_subcommand("match", "Per-voter rankings");
  add_input(match, c);
  add_out(match, c, "Rankings CSV");
  add_method(match, c);
  add_k(match, c);
  add_seed(match, c);
  add_threads(match, c);
  match->add_option("--tiebreak", match_args.tiebreak, "lexicographic or seeded");
  match->add_option("--mitigations", match_args.mitigations,
                    "deal-breaker, party-cap, relative-normalization, mean-vector-list-score")
    ->delimiter(',');
  match->add_flag("--full", match_args.full, "Emit every candidate and list instead of the top-k and top list");

  VisibilityArgs vis_args;
  auto * visibility = app.add_subcommand("visibility", "k-visibility tables");
  add_input(visibility, c);
  add_out(visibility, c, "Visibility CSV");
  add_method(visibility, c);
  add_k(visibility, c);
  add_seed(visibility, c);
  add_threads(visibility, c);
  visibility->add_option("--target", vis_args.target, "candidate, party or list");
  visibility->add_option("--tiebreak", vis_args.tiebreak, "lexicographic, seeded or proportional");
  visibility->add_option("--list-score", vis_args.list_score, "mean-of-scores or score-of-mean");

  std::string attack_name;
  AttackArgs attack_args;
  auto * attack = app.add_subcommand("attack", "Run a manipulation scenario");
  attack->add_option("name", attack_name,
                     "answer-optimization, brute-force, calibration, diversification, clones, list-centralization, "
                     "weights, top-match, question-subset, question-correlation, duplicate-question, "
                     "question-order, tiebreak")
    ->required();
  add_input(attack, c);
  add_out(attack, c, "Result CSV");
  add_method(attack, c);
  add_k(attack, c);
  add_seed(attack, c);
  add_threads(attack, c);
  attack->add_option("--state", attack_args.state, "State of the crafted candidate");
  attack->add_option("--party", attack_args.party, "Targeted party");
  attack->add_option("--direction", attack_args.direction, "Calibration: moderate or strong");
  attack->add_option("--iterations", attack_args.iterations, "Annealing steps per restart");
  attack->add_option("--temperature", attack_args.temperature, "Initial annealing temperature");
  attack->add_option("--cooling", attack_args.cooling, "Cooling factor per step");
  attack->add_option("--restarts", attack_args.restarts, "Annealing restarts");
  attack->add_option("--subsample", attack_args.subsample, "Voter subsample fraction in (0, 1]");
  attack->add_option("--max-profiles", attack_args.max_profiles, "Brute-force enumeration limit");
  attack->add_option("--clones", attack_args.clones, "Clone candidates to add");
  attack->add_option("--noise", attack_args.noise, "Clone noise in answer-scale steps");
  attack->add_option("--scenario", attack_args.scenario, "Weights: strong or weak");
  attack->add_option("--bins", attack_args.bins, "Top-match histogram bins");
  attack->add_option("--max-size", attack_args.max_size, "Greedy subset size");
  attack->add_option("--question", attack_args.question, "Question index to duplicate");
  attack->add_option("--copies", attack_args.copies, "Extra copies of the question");
  attack->add_option("--ordering", attack_args.ordering, "identity, reverse or comma list of positions");
  attack->add_option("--trials", attack_args.trials, "Question-order trials");
  attack->add_option("--intercept", attack_args.intercept, "Answer-rate model intercept");
  attack->add_option("--slope", attack_args.slope, "Answer-rate model slope per position");
  attack->add_option("--list-score", attack_args.list_score, "mean-of-scores or score-of-mean");

  MetricsArgs metrics_args;
  auto * metrics = app.add_subcommand("metrics", "Robustness scorecard per matching method");
  add_input(metrics, c);
  add_out(metrics, c, "Scorecard CSV");
  add_k(metrics, c);
  add_seed(metrics, c);
  add_threads(metrics, c);
  metrics->add_option("--methods", metrics_args.methods, "Comma-separated methods");
  metrics->add_option("--ridge", c.ridge, "Mahalanobis ridge");
  metrics->add_option("--bia-parties", metrics_args.bia_parties, "Comma-separated BIA parties");
  metrics->add_option("--tiebreak", metrics_args.tiebreak, "lexicographic, seeded or proportional");

  ReportArgs report_args;
  auto * report = app.add_subcommand("report", "Bundle descriptive tables and visibility outputs");
  add_input(report, c);
  report->add_option("-d,--dir", report_args.dir, "Output directory")->required();
  add_method(report, c);
  add_k(report, c);
  add_seed(report, c);
  add_threads(report, c);
  report->add_option("--tiebreak", report_args.tiebreak, "lexicographic, seeded or proportional");
  report->add_flag("--with-metrics", report_args.with_metrics, "Include the method scorecard");
  report->add_option("--methods", report_args.metrics.methods, "Scorecard methods");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp & ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp & ex) {
    return app.exit(ex);
  } catch (const CLI::CallForVersion & ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError & ex) {
    print_error("usage", ex.what());
    return kExitUsage;
  }

  try {
    if (*synth) return run_synth(c, synth_args);
    if (*validate) return run_validate(c);
    if (*clean) return run_clean(c, clean_args);
    if (*match) return run_match(c, match_args);
    if (*visibility) return run_visibility(c, vis_args);
    if (*attack) return run_attack(attack_name, c, attack_args);
    if (*metrics) return run_metrics(c, metrics_args);
    if (*report) {
      report_args.metrics.tiebreak = report_args.tiebreak;
      return run_report(c, report_args);
    }
  } catch (const UsageError & ex) {
    print_error("usage", ex.what());
    return kExitUsage;
  } catch (const InvalidElection & ex) {
    json violations = json::array();
    for (const auto & v : ex.report()) violations.push_back({{"entity", v.entity}, {"rule", v.rule}});
    print_error("validation", ex.what(), {{"violations", violations}});
    return kExitValidation;
  } catch (const vaa::SchemaError & ex) {
    print_error("validation", ex.what(), {{"path", ex.path()}});
    return kExitValidation;
  } catch (const std::exception & ex) {
    print_error("validation", ex.what());
    return kExitValidation;
  }
  return kExitUsage;
}
