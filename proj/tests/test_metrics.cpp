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

#include <sstream>

#include "fixtures.hpp"
#include "vaa/metrics.hpp"
#include "vaa/random.hpp"

using namespace vaa;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using vaa::testing::Builder;

namespace
{

const MatchingMethod kL2 = MatchingMethod::of(MethodTag::l2);

std::optional<double> gini_of(std::vector<double> xs) { return gini(xs); }

Election preference_fixture()
{
  return Builder(vaa::testing::policy_questions(2))
    .state("S", 2)
    .party("A", 0.6)
    .party("B", 0.4)
    .candidate("a1", "S", "A", {0, 0})
    .candidate("a2", "S", "A", {25, 0})
    .candidate("b1", "S", "B", {100, 100})
    .candidate("b2", "S", "B", {75, 100})
    .voter("v1", "S", {0, 25}, std::nullopt, "A")
    .voter("v2", "S", {75, 75}, std::nullopt, "A")
    .voter("v3", "S", {100, 0})
    .build();
}

}  // namespace

TEST_CASE("Gini coefficient matches the oracle", "[metrics][oracle]")
{
  // Frozen from tests/oracle/oracle.py ("gini").
  CHECK_THAT(*gini_of({0, 0, 0, 1}), WithinAbs(0.75, 1e-15));
  CHECK_THAT(*gini_of({1, 0}), WithinAbs(0.5, 1e-15));
  CHECK_THAT(*gini_of({1, 2, 3, 4}), WithinAbs(0.25, 1e-15));
  CHECK_THAT(*gini_of({3, 1, 4, 1, 5, 9, 2, 6}), WithinRel(0.36693548387096775, 1e-14));
  CHECK_FALSE(gini_of({}).has_value());
  CHECK_FALSE(gini_of({0, 0}).has_value());
  CHECK_THROWS_AS(gini_of({1, -1}), Error);
}

TEST_CASE("Gini is scale invariant and bounded", "[metrics][property]")
{
  Rng rng(derive_seed(2024, 30));
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 20);
    std::vector<double> xs(n);
    for (auto & x : xs) x = static_cast<double>(uniform_index(rng, 50));
    xs[0] += 1.0;
    const double g = *gini(xs);
    REQUIRE(g >= 0.0);
    REQUIRE(g <= 1.0 - 1.0 / static_cast<double>(n) + 1e-12);
    std::vector<double> scaled = xs;
    for (auto & x : scaled) x *= 3.5;
    REQUIRE_THAT(*gini(scaled), WithinAbs(g, 1e-12));
    const std::vector<double> equal(n, 2.0);
    REQUIRE(*gini(equal) == 0.0);
  }
}

TEST_CASE("BIA matches the oracle", "[metrics][oracle]")
{
  const std::map<std::string, std::map<std::string, double>> vis{
    {"m1", {{"P", 0.30}, {"Q", 0.50}, {"R", 0.20}}},
    {"m2", {{"P", 0.25}, {"Q", 0.45}, {"R", 0.30}}},
    {"m3", {{"P", 0.35}, {"Q", 0.40}, {"R", 0.25}}},
    {"m4", {{"P", 0.20}, {"Q", 0.60}, {"R", 0.20}}},
  };
  const std::vector<std::string> parties{"P", "Q", "R"};
  struct Expected
  {
    const char * method;
    double bia1;
    double bia2;
    const char * party;
  };
  // Frozen from tests/oracle/oracle.py ("bia").
  const Expected expected[] = {{"m1", 0.1703703703703703, 0.2, "P"},
                               {"m2", 0.2555555555555555, 0.5, "R"},
                               {"m3", 0.28333333333333327, 0.4, "P"},
                               {"m4", 0.2888888888888888, -0.33333333333333326, "P"}};
  for (const auto & x : expected) {
    const auto r = bia(x.method, vis, parties);
    CHECK_THAT(*r.bia1, WithinAbs(x.bia1, 1e-14));
    CHECK_THAT(*r.bia2, WithinAbs(x.bia2, 1e-14));
    CHECK(r.bia2_party == x.party);
  }
}

TEST_CASE("BIA drops parties invisible to the median method", "[metrics]")
{
  const std::map<std::string, std::map<std::string, double>> vis{
    {"m1", {{"P", 0.5}, {"Z", 0.1}}}, {"m2", {{"P", 0.5}, {"Z", 0.0}}}, {"m3", {{"P", 0.25}, {"Z", 0.0}}}};
  const std::vector<std::string> parties{"P", "Z"};
  const auto r = bia("m1", vis, parties);
  CHECK(r.excluded == std::vector<std::string>{"Z"});
  CHECK_THAT(*r.bia1, WithinAbs(((0.5 - 0.375) / 0.375), 1e-15));
}

TEST_CASE("answer strength and normalised visibility match the oracle", "[metrics][oracle]")
{
  std::vector<AnswerScale> scales(60, AnswerScale::policy());
  scales.insert(scales.end(), 15, AnswerScale::budget());
  const auto qs = vaa::testing::questions_of(scales);
  std::vector<double> a(60, 100.0);
  for (std::size_t i = 0; i < 30; ++i) a[i] = 0.0;
  a.insert(a.end(), 15, 50.0);
  CHECK(answer_strength(Profile::complete(a), qs) == 40.0);
  CHECK_THROWS_AS(answer_strength(Profile({std::nullopt}, {0}), vaa::testing::policy_questions(1)), Error);
  CHECK_THAT(expectation_normalized_visibility(0.2477, 1029, 36), WithinRel(7.080091666666666, 1e-14));
}

TEST_CASE("list accuracy against stated preferences", "[metrics]")
{
  const auto e = preference_fixture();
  // v1 sits next to A, v2 next to B; v3 states no preference.
  const auto a1 = acc1(e, kL2);
  CHECK(a1.counted == 2);
  CHECK(*a1.value == 0.5);
  const auto a2 = acc2(e, kL2);
  CHECK(a2.counted == 2);
  CHECK(*a2.value == 0.5);
}

TEST_CASE("strong-weight contradictions are credit weighted", "[metrics]")
{
  const auto e = Builder(vaa::testing::policy_questions(2))
                   .state("S", 1)
                   .candidate("c1", "S", "A", {0, 0})
                   .voter("v1", "S", {100, 100}, std::vector<double>{2, 1})
                   .voter("v2", "S", {0, 25}, std::vector<double>{2, 2})
                   .build();
  const auto r = acc3(e, kL2);
  CHECK(r.counted == 3);
  CHECK_THAT(*r.value, WithinAbs(1.0 / 3.0, 1e-15));
}

TEST_CASE("calibration potential weighs parties by vote share", "[metrics]")
{
  const auto e = preference_fixture();
  const auto cp = calibration_potential(e, kL2, CalibrationDirection::moderate);
  REQUIRE(cp.value.has_value());
  double expect = 0.0;
  for (const auto & [party, rel] : cp.per_party) expect += (party == "A" ? 0.6 : 0.4) * rel;
  CHECK_THAT(*cp.value, WithinAbs(expect, 1e-15));
}

TEST_CASE("the scorecard marks best and worst methods", "[metrics]")
{
  const auto e = preference_fixture();
  const std::vector<MatchingMethod> methods{kL2, MatchingMethod::of(MethodTag::l1),
                                            MatchingMethod::of(MethodTag::hybrid)};
  const auto t = method_comparison(e, methods);
  REQUIRE(t.rows.size() == 3);
  CHECK(t.rows[0].method == "l2");
  std::ostringstream os;
  write_scorecard_csv(os, t);
  CHECK(os.str().rfind("method,BIA1,BIA2,BIA2_party,CP_M,CP_S,ASC,GIN,ACC1,ACC2,ACC3,best,worst\n", 0) == 0);
  CHECK(t.best.count("GIN") == 0);
}
