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

#include "vaa/matching.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <numbers>
#include <sstream>
#include <string>

namespace vaa
{

std::string_view to_string(MethodTag tag)
{
  switch (tag) {
    case MethodTag::l2: return "l2";
    case MethodTag::l1: return "l1";
    case MethodTag::agreement_count: return "agreement_count";
    case MethodTag::angular: return "angular";
    case MethodTag::mahalanobis: return "mahalanobis";
    case MethodTag::l1_bonus: return "l1_bonus";
    case MethodTag::hybrid: return "hybrid";
  }
  return "l2";
}

std::optional<MethodTag> parse_method(std::string_view text)
{
  std::string key;
  for (const char ch : text) {
    if (ch == '_' || ch == '-' || ch == ' ') continue;
    key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  if (key == "l2" || key == "euclidean") return MethodTag::l2;
  if (key == "l1" || key == "manhattan" || key == "cityblock") return MethodTag::l1;
  if (key == "agreementcount" || key == "agreement" || key == "ac") return MethodTag::agreement_count;
  if (key == "angular" || key == "cosine") return MethodTag::angular;
  if (key == "mahalanobis") return MethodTag::mahalanobis;
  if (key == "l1bonus") return MethodTag::l1_bonus;
  if (key == "hybrid") return MethodTag::hybrid;
  return std::nullopt;
}

DistanceMatrix::DistanceMatrix(std::vector<double> anchors, std::vector<double> entries)
: anchors_(std::move(anchors)), entries_(std::move(entries))
{
  const std::size_t n = anchors_.size();
  if (n == 0 || entries_.size() != n * n) throw Error("distance matrix must be square over its anchors");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(anchors_[i - 1] < anchors_[i])) throw Error("distance matrix anchors must ascend");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double x = entries_[i * n + j];
      if (!(x >= 0.0) || !std::isfinite(x)) throw Error("distance matrix entries must be non-negative");
      if (x != entries_[j * n + i]) throw Error("distance matrix must be symmetric");
    }
  }
}

const DistanceMatrix & DistanceMatrix::l1_bonus()
{
  static const DistanceMatrix m({0, 25, 50, 75, 100},
                                {0,   125, 150, 175, 200,  //
                                 125, 75,  125, 150, 175,  //
                                 150, 125, 100, 125, 150,  //
                                 175, 150, 125, 75,  125,  //
                                 200, 175, 150, 125, 0});
  return m;
}

const DistanceMatrix & DistanceMatrix::hybrid()
{
  static const DistanceMatrix m({0, 25, 50, 75, 100},
                                {0,   50,    100, 150,   200,  //
                                 50,  37.5,  75,  112.5, 150,  //
                                 100, 75,    50,  75,    100,  //
                                 150, 112.5, 75,  37.5,  50,   //
                                 200, 150,   100, 50,    0});
  return m;
}

namespace
{

std::vector<std::string> split_csv_line(const std::string & line)
{
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string & s)
{
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(s, &pos);
  } catch (const std::exception &) {
    throw Error("distance matrix CSV: not a number: '" + s + "'");
  }
  if (pos != s.size()) throw Error("distance matrix CSV: not a number: '" + s + "'");
  return x;
}

}  // namespace

DistanceMatrix DistanceMatrix::from_csv(std::istream & in)
{
  std::string line;
  std::vector<double> anchors;
  std::vector<double> entries;
  bool header = true;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    if (header) {
      for (std::size_t i = 1; i < cells.size(); ++i) anchors.push_back(parse_number(cells[i]));
      header = false;
      continue;
    }
    if (cells.size() != anchors.size() + 1) throw Error("distance matrix CSV: ragged row");
    if (row >= anchors.size() || parse_number(cells[0]) != anchors[row]) {
      throw Error("distance matrix CSV: row labels must repeat the column anchors");
    }
    for (std::size_t i = 1; i < cells.size(); ++i) entries.push_back(parse_number(cells[i]));
    ++row;
  }
  if (row != anchors.size()) throw Error("distance matrix CSV: expected one row per anchor");
  return DistanceMatrix(std::move(anchors), std::move(entries));
}

double DistanceMatrix::lookup(double voter_answer, double candidate_answer) const
{
  const auto find = [this](double x) {
    const auto it = std::find(anchors_.begin(), anchors_.end(), x);
    if (it == anchors_.end()) throw Error("value is not a distance matrix anchor");
    return static_cast<std::size_t>(it - anchors_.begin());
  };
  return at(find(voter_answer), find(candidate_answer));
}

std::size_t DistanceMatrix::nearest_anchor(double x) const
{
  if (!(x >= 0.0 && x <= 100.0)) throw Error("scale value outside [0, 100]");
  std::size_t best = 0;
  for (std::size_t i = 1; i < anchors_.size(); ++i) {
    if (std::abs(anchors_[i] - x) < std::abs(anchors_[best] - x)) best = i;
  }
  return best;
}

double ScaleLookup::max_entry() const { return *std::max_element(table.begin(), table.end()); }

ScaleLookup generalize_matrix(const DistanceMatrix & dm, const AnswerScale & scale)
{
  ScaleLookup out;
  out.values = scale.allowed();
  std::vector<std::size_t> anchor;
  anchor.reserve(out.values.size());
  for (const double v : out.values) anchor.push_back(dm.nearest_anchor(v));
  out.table.reserve(anchor.size() * anchor.size());
  for (const auto i : anchor) {
    for (const auto j : anchor) out.table.push_back(dm.at(i, j));
  }
  return out;
}

const DistanceMatrix & MatchingMethod::distance_matrix() const
{
  if (matrix) return *matrix;
  return tag == MethodTag::hybrid ? DistanceMatrix::hybrid() : DistanceMatrix::l1_bonus();
}

PrecisionContext build_precision_context(const Eigen::MatrixXd & candidates, std::optional<double> ridge)
{
  if (candidates.rows() < 2) throw Error("precision context needs at least two candidates");
  const auto nq = candidates.cols();
  const Eigen::RowVectorXd mean = candidates.colwise().mean();
  const Eigen::MatrixXd centered = candidates.rowwise() - mean;

  PrecisionContext ctx;
  ctx.covariance = (centered.transpose() * centered) / static_cast<double>(candidates.rows() - 1);
  if (ridge) {
    if (!(*ridge > 0.0)) throw Error("ridge must be positive");
    ctx.ridge = *ridge;
  } else {
    const double scaled = 1e-6 * ctx.covariance.trace() / static_cast<double>(nq);
    ctx.ridge = scaled > 0.0 ? scaled : 1e-6;
  }
  const Eigen::MatrixXd regularized =
    ctx.covariance + ctx.ridge * Eigen::MatrixXd::Identity(nq, nq);
  const Eigen::LLT<Eigen::MatrixXd> llt(regularized);
  if (llt.info() != Eigen::Success) throw Error("regularised covariance is not positive definite");
  ctx.precision = llt.solve(Eigen::MatrixXd::Identity(nq, nq));
  ctx.precision = 0.5 * (ctx.precision + ctx.precision.transpose());
  // Sigma = L L^T  =>  Sigma^-1 = L^-T L^-1, so F = L^-1.
  const Eigen::MatrixXd lower = llt.matrixL();
  ctx.factor = lower.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(nq, nq));
  return ctx;
}

Matcher::Matcher(std::span<const Question> questions, MatchingMethod method,
                 std::shared_ptr<const PrecisionContext> ctx)
: method_(std::move(method)), ctx_(std::move(ctx))
{
  neutrals_.reserve(questions.size());
  allowed_.reserve(questions.size());
  for (const auto & q : questions) {
    neutrals_.push_back(q.scale.neutral());
    allowed_.push_back(q.scale.allowed());
  }
  switch (method_.tag) {
    case MethodTag::l1_bonus:
    case MethodTag::hybrid:
      for (const auto & q : questions) {
        lookups_.push_back(generalize_matrix(method_.distance_matrix(), q.scale));
        max_entries_.push_back(lookups_.back().max_entry());
      }
      break;
    case MethodTag::agreement_count:
      for (const auto & q : questions) {
        ScaleLookup id;
        id.values = q.scale.allowed();
        const std::size_t n = id.values.size();
        id.table.assign(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) id.table[i * n + i] = 1.0;
        lookups_.push_back(std::move(id));
      }
      break;
    case MethodTag::mahalanobis:
      if (!ctx_) throw MatchingError(MatchingError::Code::missing_context, "Mahalanobis needs a precision context");
      if (static_cast<std::size_t>(ctx_->factor.rows()) != questions.size()) {
        throw Error("precision context dimension differs from question count");
      }
      break;
    default:
      break;
  }
}

std::uint8_t Matcher::code_of(std::size_t t, double answer) const
{
  const auto & a = allowed_[t];
  const auto it = std::lower_bound(a.begin(), a.end(), answer);
  if (it == a.end() || *it != answer) return kOffGrid;
  return static_cast<std::uint8_t>(it - a.begin());
}

Matcher::PreparedVoter Matcher::prepare_voter(const Profile & voter) const
{
  const std::size_t nq = neutrals_.size();
  if (voter.size() != nq) throw Error("voter profile length differs from question count");
  PreparedVoter v;
  v.answers.resize(nq);
  v.weights.resize(nq);
  v.codes.resize(nq);
  const bool mahalanobis = method_.tag == MethodTag::mahalanobis;
  for (std::size_t t = 0; t < nq; ++t) {
    const auto & a = voter.answer(t);
    if (a) {
      v.answers[t] = *a;
      v.weights[t] = voter.weight(t);
      v.codes[t] = code_of(t, *a);
      if (mahalanobis || v.weights[t] != 0.0) v.active.push_back(static_cast<std::uint32_t>(t));
    } else {
      v.answers[t] = neutrals_[t];
      v.weights[t] = 0.0;
      v.codes[t] = kAbsent;
      if (mahalanobis) v.skipped.push_back(static_cast<std::uint32_t>(t));
    }
  }

  switch (method_.tag) {
    case MethodTag::l2: {
      double s = 0.0;
      for (std::size_t t = 0; t < nq; ++t) {
        const double x = v.weights[t] * 100.0;
        s += x * x;
      }
      v.normalizer = std::sqrt(s);
      break;
    }
    case MethodTag::l1:
      for (std::size_t t = 0; t < nq; ++t) v.normalizer += v.weights[t] * 100.0;
      break;
    case MethodTag::agreement_count:
      for (std::size_t t = 0; t < nq; ++t) v.normalizer += v.weights[t];
      break;
    case MethodTag::l1_bonus:
    case MethodTag::hybrid:
      for (std::size_t t = 0; t < nq; ++t) v.normalizer += v.weights[t] * max_entries_[t];
      break;
    case MethodTag::angular:
      v.normalizer = std::numbers::pi;
      break;
    case MethodTag::mahalanobis: {
      Eigen::VectorXd masked = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nq));
      for (const auto t : v.active) masked[t] = v.answers[t];
      const Eigen::VectorXd w = ctx_->factor.triangularView<Eigen::Lower>() * masked;
      v.whitened.assign(w.data(), w.data() + w.size());
      break;
    }
  }
  return v;
}

Matcher::PreparedCandidate Matcher::prepare_candidate(const Profile & candidate) const
{
  const std::size_t nq = neutrals_.size();
  if (candidate.size() != nq) throw Error("candidate profile length differs from question count");
  if (method_.tag == MethodTag::mahalanobis && !candidate.is_complete()) {
    throw Error("Mahalanobis requires complete candidate profiles");
  }
  PreparedCandidate c;
  c.answers.resize(nq);
  c.codes.resize(nq);
  for (std::size_t t = 0; t < nq; ++t) {
    const auto & a = candidate.answer(t);
    c.answers[t] = a ? *a : neutrals_[t];
    c.codes[t] = a ? code_of(t, *a) : kAbsent;
  }
  if (method_.tag == MethodTag::mahalanobis) {
    const Eigen::Map<const Eigen::VectorXd> x(c.answers.data(), static_cast<Eigen::Index>(nq));
    const Eigen::VectorXd w = ctx_->factor.triangularView<Eigen::Lower>() * x;
    c.whitened.assign(w.data(), w.data() + w.size());
  }
  return c;
}

Matcher::PreparedCandidate Matcher::prepare_candidate(std::span<const double> answers) const
{
  std::vector<std::optional<double>> a(answers.begin(), answers.end());
  return prepare_candidate(Profile(std::move(a), std::vector<double>(answers.size(), 1.0)));
}

namespace
{

// Position of x between the allowed values: (lower index, upper index, fraction).
struct Bracket
{
  std::size_t lo;
  std::size_t hi;
  double frac;
};

Bracket bracket(const std::vector<double> & values, double x)
{
  if (x <= values.front()) return {0, 0, 0.0};
  if (x >= values.back()) return {values.size() - 1, values.size() - 1, 0.0};
  const auto it = std::upper_bound(values.begin(), values.end(), x);
  const std::size_t hi = static_cast<std::size_t>(it - values.begin());
  const std::size_t lo = hi - 1;
  return {lo, hi, (x - values[lo]) / (values[hi] - values[lo])};
}

}  // namespace

double Matcher::table_value(std::size_t t, double v, std::uint8_t vc, double c, std::uint8_t cc) const
{
  const auto & lk = lookups_[t];
  if (vc < kOffGrid && cc < kOffGrid) return lk.at(vc, cc);
  const Bracket bv = vc < kOffGrid ? Bracket{vc, vc, 0.0} : bracket(lk.values, v);
  const Bracket bc = cc < kOffGrid ? Bracket{cc, cc, 0.0} : bracket(lk.values, c);
  const auto row = [&](std::size_t r) {
    return (1.0 - bc.frac) * lk.at(r, bc.lo) + bc.frac * lk.at(r, bc.hi);
  };
  return (1.0 - bv.frac) * row(bv.lo) + bv.frac * row(bv.hi);
}

Matcher::Terms Matcher::term(const PreparedVoter & v, std::size_t t, double answer, std::uint8_t code) const
{
  Terms out;
  const double w = v.weights[t];
  if (w == 0.0 || v.codes[t] == kAbsent || code == kAbsent) return out;
  out.n = 1;
  switch (method_.tag) {
    case MethodTag::l2: {
      const double x = w * (v.answers[t] - answer);
      out.a = x * x;
      break;
    }
    case MethodTag::l1:
      out.a = w * std::abs(v.answers[t] - answer);
      break;
    case MethodTag::agreement_count:
      if (v.codes[t] < kOffGrid && code < kOffGrid) {
        out.a = v.codes[t] == code ? -w : 0.0;
      } else {
        out.a = -w * table_value(t, v.answers[t], v.codes[t], answer, code);
      }
      break;
    case MethodTag::l1_bonus:
    case MethodTag::hybrid:
      out.a = w * table_value(t, v.answers[t], v.codes[t], answer, code);
      break;
    case MethodTag::angular: {
      const double dv = w * (v.answers[t] - neutrals_[t]);
      const double dc = w * (answer - neutrals_[t]);
      out.a = dv * dc;
      out.b = dv * dv;
      out.c = dc * dc;
      break;
    }
    case MethodTag::mahalanobis:
      throw Error("Mahalanobis distance is not additive over questions");
  }
  return out;
}

Distance Matcher::finalize(const Terms & sum) const
{
  if (sum.n == 0) return {0.0, DistanceStatus::empty_overlap};
  switch (method_.tag) {
    case MethodTag::l2: return {std::sqrt(sum.a), DistanceStatus::ok};
    case MethodTag::angular: {
      if (sum.b == 0.0 || sum.c == 0.0) return {0.0, DistanceStatus::neutral_profile};
      const double cosine = sum.a / (std::sqrt(sum.b) * std::sqrt(sum.c));
      return {std::acos(std::clamp(cosine, -1.0, 1.0)), DistanceStatus::ok};
    }
    default: return {sum.a, DistanceStatus::ok};
  }
}

Distance Matcher::distance(const PreparedVoter & v, const PreparedCandidate & c) const
{
  if (method_.tag == MethodTag::mahalanobis) {
    if (v.active.empty()) return {0.0, DistanceStatus::empty_overlap};
    const std::size_t nq = neutrals_.size();
    thread_local std::vector<double> y;
    y.resize(nq);
    for (std::size_t i = 0; i < nq; ++i) y[i] = v.whitened[i] - c.whitened[i];
    const auto & f = ctx_->factor;
    for (const auto s : v.skipped) {
      const double cs = c.answers[s];
      const double * col = f.data() + static_cast<std::size_t>(s) * nq;
      for (std::size_t i = s; i < nq; ++i) y[i] += cs * col[i];
    }
    double sq = 0.0;
    for (const double x : y) sq += x * x;
    return {std::sqrt(sq), DistanceStatus::ok};
  }

  Terms sum;
  switch (method_.tag) {
    case MethodTag::l2:
      for (const auto t : v.active) {
        if (c.codes[t] == kAbsent) continue;
        const double x = v.weights[t] * (v.answers[t] - c.answers[t]);
        sum.a += x * x;
        ++sum.n;
      }
      break;
    case MethodTag::l1:
      for (const auto t : v.active) {
        if (c.codes[t] == kAbsent) continue;
        sum.a += v.weights[t] * std::abs(v.answers[t] - c.answers[t]);
        ++sum.n;
      }
      break;
    default:
      for (const auto t : v.active) sum += term(v, t, c.answers[t], c.codes[t]);
      break;
  }
  return finalize(sum);
}

double Matcher::similarity(const PreparedVoter & v, const Distance & d) const
{
  if (!d.ok()) return 0.0;
  double s = 0.0;
  switch (method_.tag) {
    case MethodTag::mahalanobis: s = 100.0 / (1.0 + d.value); break;
    case MethodTag::agreement_count: s = v.normalizer > 0.0 ? 100.0 * (-d.value) / v.normalizer : 0.0; break;
    default: s = v.normalizer > 0.0 ? 100.0 * (1.0 - d.value / v.normalizer) : 0.0; break;
  }
  return std::clamp(s, 0.0, 100.0);
}

double compute_distance(const MatchingMethod & method, std::span<const Question> questions,
                        const Profile & voter, const Profile & candidate, const PrecisionContext * ctx)
{
  std::shared_ptr<const PrecisionContext> shared;
  if (ctx) shared = std::shared_ptr<const PrecisionContext>(ctx, [](const PrecisionContext *) {});
  const Matcher m(questions, method, shared);
  const Distance d = m.distance(m.prepare_voter(voter), m.prepare_candidate(candidate));
  switch (d.status) {
    case DistanceStatus::ok: return d.value;
    case DistanceStatus::empty_overlap:
      throw MatchingError(MatchingError::Code::empty_overlap, "no participating questions");
    case DistanceStatus::neutral_profile:
      throw MatchingError(MatchingError::Code::neutral_profile, "angular distance of a neutral profile");
  }
  return d.value;
}

double similarity_score(const Profile & voter, const Profile & candidate)
{
  if (voter.size() != candidate.size()) throw Error("profiles differ in length");
  double num = 0.0;
  double den = 0.0;
  bool any = false;
  for (std::size_t t = 0; t < voter.size(); ++t) {
    const double w = voter.weight(t);
    const double full = w * 100.0;
    den += full * full;
    if (w == 0.0 || !voter.answer(t) || !candidate.answer(t)) continue;
    const double x = w * (*voter.answer(t) - *candidate.answer(t));
    num += x * x;
    any = true;
  }
  if (!any || den == 0.0) throw MatchingError(MatchingError::Code::empty_overlap, "all weights are zero");
  return 100.0 * (1.0 - std::sqrt(num) / std::sqrt(den));
}

Eigen::MatrixXd candidate_matrix(const Election & e, std::span<const std::size_t> candidates)
{
  const auto nq = static_cast<Eigen::Index>(e.questions.size());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(candidates.size()), nq);
  for (std::size_t r = 0; r < candidates.size(); ++r) {
    const auto & p = e.candidates.at(candidates[r]).profile;
    for (Eigen::Index t = 0; t < nq; ++t) {
      const auto & a = p.answer(static_cast<std::size_t>(t));
      m(static_cast<Eigen::Index>(r), t) = a ? *a : e.questions[static_cast<std::size_t>(t)].scale.neutral();
    }
  }
  return m;
}

}  // namespace vaa
