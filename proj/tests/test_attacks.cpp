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

#include <catch_amalgamated.hpp>

#include <numeric>

#include "fixtures.hpp"
#include "vaa/attacks.hpp"

using namespace vaa;
using Catch::Matchers::WithinAbs;
using vaa::testing::Builder;

namespace
{

const MatchingMethod kL2 = MatchingMethod::of(MethodTag::l2);

// Shared with tests/oracle/oracle.py ("brute-force crafted candidate").
Election crafted_fixture()
{
  Builder b(vaa::testing::policy_questions(3));
  b.state("S", 1)
    .candidate("c1", "S", "P", {0, 0, 25})
    .candidate("c2", "S", "Q", {100, 75, 100})
    .candidate("c3", "S", "R", {25, 100, 0})
    .candidate("c4", "S", "T", {75, 25, 75});
  const std::vector<std::vector<double>> voters{{0, 25, 25},   {25, 0, 0},    {100, 100, 75}, {75, 100, 100},
                                                {25, 75, 0},   {0, 100, 25},  {75, 25, 100},  {100, 0, 75},
                                                {25, 25, 25},  {75, 75, 75},  {0, 0, 100},    {100, 100, 0}};
  for (std::size_t i = 0; i < voters.size(); ++i) {
    b.voter("v" + std::to_string(i), "S", {voters[i][0], voters[i][1], voters[i][2]});
  }
  return b.build();
}

}  // namespace

TEST_CASE("brute force finds the oracle optimum", "[attacks][oracle]")
{
  const auto e = crafted_fixture();
  const auto best = brute_force_optimal(e, "S", std::nullopt, kL2);
  // Frozen from tests/oracle/oracle.py.
  CHECK(best.profile.answers() == std::vector<std::optional<double>>{75.0, 100.0, 75.0});
  CHECK_THAT(best.visibility, WithinAbs(0.25, 1e-15));
  CHECK(best.evaluations == 64);
  CHECK_THROWS_AS(brute_force_optimal(e, "S", std::nullopt, kL2, 10), Error);
}

TEST_CASE("annealing reaches the brute-force optimum on a small instance", "[attacks]")
{
  const auto e = crafted_fixture();
  AnnealingConfig cfg;
  cfg.iterations = 3000;
  cfg.seed = 11;
  const auto found = optimize_answers(e, "S", std::nullopt, kL2, cfg);
  CHECK_THAT(found.visibility, WithinAbs(0.25, 1e-15));
  CHECK_THAT(crafted_visibility(e, "S", std::nullopt, kL2, found.profile), WithinAbs(found.visibility, 1e-15));
  // Same seed, same answer.
  CHECK(optimize_answers(e, "S", std::nullopt, kL2, cfg).profile == found.profile);
}

TEST_CASE("identical voters are all captured by their own answers", "[attacks]")
{
  Builder b(vaa::testing::policy_questions(4));
  b.state("S", 2).candidate("c1", "S", "P", {0, 0, 0, 0}).candidate("c2", "S", "Q", {100, 100, 100, 100});
  for (int i = 0; i < 10; ++i) b.voter("v" + std::to_string(i), "S", {25, 75, 25, 75});
  const auto e = b.build();
  const auto best = brute_force_optimal(e, "S", 1, kL2);
  CHECK(best.visibility == 1.0);
  CHECK(crafted_visibility(e, "S", 1, kL2, Profile::complete({25, 75, 25, 75})) == 1.0);
}

TEST_CASE("a crafted copy of a real candidate loses every tie", "[attacks]")
{
  const auto e = Builder(vaa::testing::policy_questions(2))
                   .state("S", 1)
                   .candidate("c1", "S", "P", {25, 25})
                   .voter("v1", "S", {25, 25})
                   .voter("v2", "S", {0, 0})
                   .build();
  CHECK(crafted_visibility(e, "S", std::nullopt, kL2, Profile::complete({25, 25})) == 0.0);
  CHECK(crafted_visibility(e, "S", std::nullopt, kL2, Profile::complete({0, 0})) == 0.5);
}

TEST_CASE("calibration steps answers one notch", "[attacks]")
{
  const auto qs = vaa::testing::questions_of(
    {AnswerScale::policy(), AnswerScale::policy(), AnswerScale::policy(), AnswerScale::policy(),
     AnswerScale::budget(), AnswerScale::budget(), AnswerScale::value()});
  const Profile p({0.0, 25.0, 75.0, 100.0, 25.0, 50.0, std::nullopt}, {1, 1, 1, 1, 1, 1, 0});
  const auto m = calibrate_answers(p, qs, CalibrationDirection::moderate);
  CHECK(m.answers() == std::vector<std::optional<double>>{25.0, 25.0, 75.0, 75.0, 50.0, 50.0, std::nullopt});
  const auto s = calibrate_answers(p, qs, CalibrationDirection::strong);
  CHECK(s.answers() == std::vector<std::optional<double>>{0.0, 0.0, 100.0, 100.0, 0.0, 50.0, std::nullopt});
  CHECK(s.weights() == p.weights());
}

TEST_CASE("calibration is idempotent at its fixed points", "[attacks][property]")
{
  const auto qs = vaa::testing::questions_of({AnswerScale::policy(), AnswerScale::value(), AnswerScale::budget()});
  const double policy[] = {0, 25, 75, 100};
  const double value[] = {0, 17, 33, 50, 67, 83, 100};
  const double budget[] = {0, 25, 50, 75, 100};
  for (double a : policy) {
    for (double b : value) {
      for (double c : budget) {
        auto p = Profile::complete({a, b, c});
        for (int i = 0; i < 4; ++i) p = calibrate_answers(p, qs, CalibrationDirection::moderate);
        REQUIRE(calibrate_answers(p, qs, CalibrationDirection::moderate) == p);
        auto s = Profile::complete({a, b, c});
        for (int i = 0; i < 4; ++i) s = calibrate_answers(s, qs, CalibrationDirection::strong);
        REQUIRE(calibrate_answers(s, qs, CalibrationDirection::strong) == s);
        // Strong calibration never moves an answer toward the neutral point.
        for (std::size_t t = 0; t < 3; ++t) {
          const double orig = *Profile::complete({a, b, c}).answer(t);
          REQUIRE(std::abs(*s.answer(t) - 50.0) >= std::abs(orig - 50.0));
        }
      }
    }
  }
}

TEST_CASE("drop model values match the oracle", "[attacks][oracle]")
{
  const DropModel f;
  CHECK_THAT(f.raw(75), WithinAbs(0.87, 1e-15));
  CHECK_THAT(f.raw(1), WithinAbs(0.9588, 1e-15));
  double mean = 0.0;
  for (int t = 1; t <= 75; ++t) mean += f.keep_probability(t);
  CHECK_THAT(mean / 75.0, WithinAbs(0.9144, 1e-12));
  CHECK(DropModel{DropModel::Mode::fitted_linear, 1.2, 0.0, {}}.keep_probability(1) == 1.0);
  CHECK(DropModel::custom({0.9, 0.5}).keep_probability(7) == 0.5);
}

TEST_CASE("dropping answers follows the position survival rate", "[attacks][property]")
{
  const std::size_t n = 75;
  std::vector<double> all(n, 25.0);
  const auto p = Profile::complete(all);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(2024, 20));
  REQUIRE(apply_drop(p, order, DropModel::constant(1.0), rng) == p);
  REQUIRE(apply_drop(p, order, DropModel::constant(0.0), rng).answered_count() == 0);

  const DropModel f;
  const int trials = 4000;
  std::size_t kept = 0;
  std::size_t kept_last = 0;
  for (int i = 0; i < trials; ++i) {
    const auto d = apply_drop(p, order, f, rng);
    kept += d.answered_count();
    kept_last += d.answer(n - 1) ? 1 : 0;
    for (std::size_t t = 0; t < n; ++t) {
      if (!d.answer(t)) REQUIRE(d.weight(t) == 0.0);
    }
  }
  CHECK(std::abs(static_cast<double>(kept) / (trials * 75.0) - 0.9144) < 0.003);
  CHECK(std::abs(static_cast<double>(kept_last) / trials - 0.87) < 0.02);
}

TEST_CASE("copied questions repeat the original answers", "[attacks]")
{
  const auto e = crafted_fixture();
  CHECK_THROWS_AS(duplicate_question(e, 1, 0), Error);
  CHECK_THROWS_AS(duplicate_question(e, 9, 1), Error);
  const auto three = duplicate_question(e, 1, 3);
  REQUIRE(three.questions.size() == 6);
  CHECK(three.candidates[1].profile.answer(5) == e.candidates[1].profile.answer(1));
  CHECK(validate_election(three).empty());
}

TEST_CASE("a duplicated question acts like a heavier weight under L1", "[attacks][property]")
{
  const auto e = crafted_fixture();
  const auto dup = duplicate_question(e, 0, 1);
  const RankingEngine a(dup, MatchingMethod::of(MethodTag::l1));
  auto weighted = e;
  for (auto & v : weighted.voters) v.profile.set_weight(0, 2.0);
  weighted.weight_set = {0.0, 0.5, 1.0, 2.0};
  const RankingEngine b(weighted, MatchingMethod::of(MethodTag::l1));
  std::vector<Distance> da;
  std::vector<Distance> db;
  for (std::size_t v = 0; v < e.voters.size(); ++v) {
    a.distances(v, da);
    b.distances(v, db);
    for (std::size_t c = 0; c < da.size(); ++c) REQUIRE(da[c].value == db[c].value);
  }
}

TEST_CASE("exact ties swing candidate visibility by 100 percent", "[attacks]")
{
  const auto e = Builder(vaa::testing::policy_questions(2))
                   .state("S", 1)
                   .candidate("anna", "S", "P", {25, 75})
                   .candidate("zora", "S", "Q", {25, 75})
                   .voter("v1", "S", {0, 100})
                   .voter("v2", "S", {25, 75})
                   .build();
  const auto report = tiebreak_impact(e, kL2);
  const auto * anna = report.find("anna");
  const auto * zora = report.find("zora");
  REQUIRE(anna != nullptr);
  REQUIRE(zora != nullptr);
  CHECK(anna->baseline == 0.5);
  CHECK(anna->attacked == 1.0);
  CHECK(*anna->rel_change == 1.0);
  CHECK(*zora->rel_change == -1.0);
}

TEST_CASE("relative change is undefined from a zero baseline", "[attacks]")
{
  CHECK_FALSE(relative_change(0.0, 0.3).has_value());
  CHECK(*relative_change(0.2, 0.3) == Catch::Approx(0.5));
}
