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

#ifndef VAA__MATCHING_HPP_
#define VAA__MATCHING_HPP_

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "vaa/election.hpp"

namespace vaa
{

enum class MethodTag { l2, l1, agreement_count, angular, mahalanobis, l1_bonus, hybrid };

inline constexpr std::array<MethodTag, 7> kAllMethods{
  MethodTag::l2,          MethodTag::l1,       MethodTag::angular, MethodTag::agreement_count,
  MethodTag::mahalanobis, MethodTag::l1_bonus, MethodTag::hybrid};

std::string_view to_string(MethodTag tag);
/// Accepts the canonical names plus case/underscore variants ("L1Bonus", "l1-bonus", ...).
std::optional<MethodTag> parse_method(std::string_view text);

/// Symmetric per-answer-pair distance table over anchor values.
class DistanceMatrix
{
public:
  /// \throws vaa::Error unless entries form a symmetric, non-negative |anchors|^2 table.
  DistanceMatrix(std::vector<double> anchors, std::vector<double> entries);

  /// The matrix Smartvote used until 2010 on the 5-option grid.
  static const DistanceMatrix & l1_bonus();
  /// Average of L1 and the scalar (directional) matrix, as used by EUVox 2014.
  static const DistanceMatrix & hybrid();

  /// First row: empty cell then anchors; following rows: anchor then distances.
  static DistanceMatrix from_csv(std::istream & in);

  const std::vector<double> & anchors() const noexcept { return anchors_; }
  std::size_t size() const noexcept { return anchors_.size(); }
  double at(std::size_t row, std::size_t col) const { return entries_.at(row * anchors_.size() + col); }
  /// Entry for two exact anchor values. \throws vaa::Error when either is not an anchor.
  double lookup(double voter_answer, double candidate_answer) const;
  /// Index of the anchor closest to x. \throws vaa::Error outside [0, 100].
  std::size_t nearest_anchor(double x) const;

  bool operator==(const DistanceMatrix &) const = default;

private:
  std::vector<double> anchors_;
  std::vector<double> entries_;
};

/// A distance matrix specialised to one answer scale.
struct ScaleLookup
{
  std::vector<double> values;  // the scale's allowed answers
  std::vector<double> table;   // values.size()^2, row = voter answer

  double at(std::size_t v, std::size_t c) const { return table[v * values.size() + c]; }
  double max_entry() const;
};

/// Maps a 5-anchor matrix onto `scale`: each allowed value uses its nearest anchor.
/// \throws vaa::Error when a scale value lies outside [0, 100].
ScaleLookup generalize_matrix(const DistanceMatrix & dm, const AnswerScale & scale);

enum class CovarianceScope { per_state, global };

struct MatchingMethod
{
  MethodTag tag = MethodTag::l2;
  std::optional<double> ridge;            // Mahalanobis; default is 1e-6 * trace(Cov) / Nq
  std::optional<DistanceMatrix> matrix;   // overrides the built-in L1 Bonus / Hybrid table
  CovarianceScope covariance_scope = CovarianceScope::per_state;

  static MatchingMethod of(MethodTag tag) { return MatchingMethod{tag, {}, {}, {}}; }
  const DistanceMatrix & distance_matrix() const;
};

struct PrecisionContext
{
  Eigen::MatrixXd covariance;  // before the ridge
  Eigen::MatrixXd precision;   // (covariance + ridge * I)^-1
  Eigen::MatrixXd factor;      // lower triangular F with precision = F^T F
  double ridge = 0.0;
};

/// \param candidates one row per candidate, one column per question.
/// \throws vaa::Error with fewer than two candidates or a non-positive ridge.
PrecisionContext build_precision_context(const Eigen::MatrixXd & candidates,
                                         std::optional<double> ridge = std::nullopt);

enum class DistanceStatus : std::uint8_t { ok, empty_overlap, neutral_profile };

struct Distance
{
  double value = 0.0;
  DistanceStatus status = DistanceStatus::ok;

  bool ok() const noexcept { return status == DistanceStatus::ok; }
};

class MatchingError : public Error
{
public:
  enum class Code { empty_overlap, missing_context, neutral_profile };
  MatchingError(Code code, const std::string & what) : Error(what), code_(code) {}
  Code code() const noexcept { return code_; }

private:
  Code code_;
};

/// Evaluates one matching method over a fixed questionnaire.
///
/// Profiles are first "prepared" into dense arrays so that a voter can be
/// compared against many candidates cheaply. Every method except
/// Mahalanobis is a sum of per-question terms; `term` and `finalize` expose
/// that decomposition for incremental search.
class Matcher
{
public:
  /// \throws MatchingError(missing_context) for Mahalanobis without `ctx`.
  Matcher(std::span<const Question> questions, MatchingMethod method,
          std::shared_ptr<const PrecisionContext> ctx = nullptr);

  static constexpr std::uint8_t kAbsent = 255;
  static constexpr std::uint8_t kOffGrid = 254;

  struct PreparedVoter
  {
    std::vector<double> answers;  // neutral where absent
    std::vector<double> weights;  // zero where absent
    std::vector<std::uint8_t> codes;
    std::vector<std::uint32_t> active;  // questions that participate
    double normalizer = 0.0;            // denominator of the similarity score
    std::vector<double> whitened;       // Mahalanobis: F (mask * v)
    std::vector<std::uint32_t> skipped; // Mahalanobis: unanswered questions
  };

  struct PreparedCandidate
  {
    std::vector<double> answers;
    std::vector<std::uint8_t> codes;
    std::vector<double> whitened;  // Mahalanobis: F c
  };

  struct Terms
  {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    std::uint32_t n = 0;

    Terms & operator+=(const Terms & o) noexcept
    {
      a += o.a;
      b += o.b;
      c += o.c;
      n += o.n;
      return *this;
    }
    Terms & operator-=(const Terms & o) noexcept
    {
      a -= o.a;
      b -= o.b;
      c -= o.c;
      n -= o.n;
      return *this;
    }
  };

  const MatchingMethod & method() const noexcept { return method_; }
  std::size_t question_count() const noexcept { return neutrals_.size(); }
  bool additive() const noexcept { return method_.tag != MethodTag::mahalanobis; }

  PreparedVoter prepare_voter(const Profile & voter) const;
  /// Candidates must answer every question for Mahalanobis; off-grid answers
  /// (e.g. a list's mean vector) are interpolated for table-based methods.
  PreparedCandidate prepare_candidate(const Profile & candidate) const;
  PreparedCandidate prepare_candidate(std::span<const double> answers) const;

  Distance distance(const PreparedVoter & v, const PreparedCandidate & c) const;

  /// Contribution of question t for a candidate answering `answer` (with grid code).
  /// Zero terms for questions that do not participate. Not valid for Mahalanobis.
  Terms term(const PreparedVoter & v, std::size_t t, double answer, std::uint8_t code) const;
  Distance finalize(const Terms & sum) const;

  /// Method-specific similarity in [0, 100]; 100 iff the distance is minimal.
  /// L2 reproduces the Smartvote score exactly. Failed distances score 0.
  double similarity(const PreparedVoter & v, const Distance & d) const;

  /// Grid code of `answer` on question t (kOffGrid when not an allowed value).
  std::uint8_t code_of(std::size_t t, double answer) const;
  const std::vector<double> & allowed(std::size_t t) const { return allowed_[t]; }

private:
  double table_value(std::size_t t, double v, std::uint8_t vc, double c, std::uint8_t cc) const;

  MatchingMethod method_;
  std::shared_ptr<const PrecisionContext> ctx_;
  std::vector<double> neutrals_;
  std::vector<std::vector<double>> allowed_;
  std::vector<ScaleLookup> lookups_;  // table methods (agreement count uses the identity)
  std::vector<double> max_entries_;
};

/// Distance between two profiles; the voter's weights select participating questions.
/// \throws MatchingError on empty overlap, missing context or a neutral Angular profile.
double compute_distance(const MatchingMethod & method, std::span<const Question> questions,
                        const Profile & voter, const Profile & candidate,
                        const PrecisionContext * ctx = nullptr);

/// Smartvote's normalised score: 100 * (1 - d_L2(v, w, c) / d_L2(100, w, 0)).
/// \throws MatchingError when all weights are zero.
double similarity_score(const Profile & voter, const Profile & candidate);

/// Candidate answer matrix (rows = candidates given by index, columns = questions).
/// Missing answers are filled with the scale neutral.
Eigen::MatrixXd candidate_matrix(const Election & e, std::span<const std::size_t> candidates);

}  // namespace vaa

#endif  // VAA__MATCHING_HPP_
