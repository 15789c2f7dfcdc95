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

#include <limits>
#include <numeric>

#include "fixtures.hpp"
#include "vaa/random.hpp"
#include "vaa/ranking.hpp"

using namespace vaa;
using Catch::Matchers::WithinAbs;
using vaa::testing::Builder;

namespace
{

const MatchingMethod kL2 = MatchingMethod::of(MethodTag::l2);

double credit_sum(const std::vector<Credit> & cs)
{
  double s = 0.0;
  for (const auto & c : cs) s += c.credit;
  return s;
}

Election two_party()
{
  return Builder(vaa::testing::policy_questions(2))
    .state("S", 2)
    .candidate("a1", "S", "A", {0, 0})
    .candidate("a2", "S", "A", {25, 0})
    .candidate("b1", "S", "B", {100, 100})
    .candidate("b2", "S", "B", {75, 100})
    .voter("v1", "S", {0, 25})
    .voter("v2", "S", {75, 75})
    .voter("v3", "S", {100, 0})
    .voter("v4", "S", {25, 100})
    .voter("v5", "S", {0, 75})
    .build();
}

}  // namespace

TEST_CASE("a lone candidate is visible to every voter", "[ranking]")
{
  const auto e = Builder(vaa::testing::policy_questions(3))
                   .state("S", 1)
                   .candidate("only", "S", "P", {0, 25, 100})
                   .voter("v1", "S", {100, 100, 100})
                   .voter("v2", "S", {0, std::nullopt, 75})
                   .build();
  const auto t = candidate_visibility(e, kL2, std::nullopt, TieBreakPolicy::lexicographic());
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0].visibility == 1.0);
  CHECK(party_visibility(e, kL2, std::nullopt, TieBreakPolicy::lexicographic()).pooled("P") == 1.0);
  CHECK(list_visibility(e, kL2).rows[0].visibility == 1.0);
}

TEST_CASE("two-party visibility matches the oracle", "[ranking][oracle]")
{
  const auto e = two_party();
  const auto c = candidate_visibility(e, kL2, std::nullopt, TieBreakPolicy::lexicographic());
  // Frozen from tests/oracle/oracle.py ("two-party visibility").
  CHECK_THAT(*c.find("a1", "S"), WithinAbs(0.6, 1e-15));
  CHECK_THAT(*c.find("a2", "S"), WithinAbs(0.6, 1e-15));
  CHECK_THAT(*c.find("b1", "S"), WithinAbs(0.4, 1e-15));
  CHECK_THAT(*c.find("b2", "S"), WithinAbs(0.4, 1e-15));
  const auto p = party_visibility(e, kL2, std::nullopt, TieBreakPolicy::lexicographic());
  CHECK_THAT(p.pooled("A"), WithinAbs(0.6, 1e-15));
  CHECK_THAT(p.pooled("B"), WithinAbs(0.4, 1e-15));
}

TEST_CASE("lexicographic tie-break follows sort rank", "[ranking]")
{
  const std::vector<double> keys{1.0, 1.0, 1.0, 0.5};
  const std::vector<std::size_t> ranks{2, 0, 1, 3};
  const auto top = select_top_k(keys, ranks, 4, TieBreakPolicy::lexicographic(), "v");
  REQUIRE(top.size() == 4);
  CHECK(top[0].entity == 3);
  CHECK(top[1].entity == 1);
  CHECK(top[2].entity == 2);
  CHECK(top[3].entity == 0);
}

TEST_CASE("seeded tie-break is fair and reproducible", "[ranking][property]")
{
  const std::vector<double> keys{2.0, 2.0};
  const std::vector<std::size_t> ranks{0, 1};
  const auto policy = TieBreakPolicy::seeded(7);
  int first = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto id = "v" + std::to_string(i);
    const auto a = select_top_k(keys, ranks, 1, policy, id);
    const auto b = select_top_k(keys, ranks, 1, policy, id);
    REQUIRE(a[0].entity == b[0].entity);
    first += a[0].entity == 0 ? 1 : 0;
  }
  CHECK(std::abs(static_cast<double>(first) / n - 0.5) < 0.02);
}

TEST_CASE("proportional credit splits boundary ties", "[ranking]")
{
  const std::vector<double> keys{1.0, 2.0, 2.0, 2.0, 3.0};
  const std::vector<std::size_t> ranks{0, 1, 2, 3, 4};
  const auto top = select_top_k(keys, ranks, 2, TieBreakPolicy::proportional(), "v");
  std::vector<double> credit(5, 0.0);
  for (const auto & c : top) credit[c.entity] += c.credit;
  CHECK(credit[0] == 1.0);
  for (int i = 1; i <= 3; ++i) CHECK_THAT(credit[i], WithinAbs(1.0 / 3.0, 1e-15));
  CHECK(credit[4] == 0.0);
}

TEST_CASE("every policy hands out exactly min(k, n) slots", "[ranking][property]")
{
  Rng rng(derive_seed(2024, 10));
  const TieBreakPolicy policies[] = {TieBreakPolicy::lexicographic(), TieBreakPolicy::seeded(3),
                                     TieBreakPolicy::proportional()};
  for (int trial = 0; trial < 3000; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 12);
    std::vector<double> keys(n);
    for (auto & k : keys) k = static_cast<double>(uniform_index(rng, 4));  // heavy ties
    std::vector<std::size_t> ranks(n);
    std::iota(ranks.begin(), ranks.end(), 0);
    const std::size_t k = 1 + uniform_index(rng, 14);
    for (const auto & p : policies) {
      const auto top = select_top_k(keys, ranks, k, p, "v" + std::to_string(trial));
      REQUIRE_THAT(credit_sum(top), WithinAbs(static_cast<double>(std::min(k, n)), 1e-9));
      for (const auto & c : top) {
        REQUIRE(c.credit > 0.0);
        REQUIRE(c.credit <= 1.0 + 1e-12);
      }
      // Nothing strictly worse than a selected entity is skipped for it.
      double worst = -1.0;
      for (const auto & c : top) worst = std::max(worst, keys[c.entity]);
      std::size_t better = 0;
      for (double x : keys) better += x < worst ? 1 : 0;
      std::size_t chosen_better = 0;
      for (const auto & c : top) chosen_better += keys[c.entity] < worst ? 1 : 0;
      REQUIRE(better == chosen_better);
    }
  }
}

TEST_CASE("deal-breaker ranking matches the oracle order", "[ranking][oracle]")
{
  const double inf = std::numeric_limits<double>::infinity();
  auto e = Builder(vaa::testing::policy_questions(4))
             .state("S", 6)
             .candidate("c1", "S", "P", {100, 100, 25, 75})
             .candidate("c2", "S", "P", {0, 0, 25, 75})
             .candidate("c3", "S", "Q", {100, 0, 0, 0})
             .candidate("c4", "S", "Q", {100, 0, 100, 100})
             .candidate("c5", "S", "R", {0, 100, 25, 75})
             .candidate("c6", "S", "R", {100, 25, 25, 75})
             .voter("v", "S", {100, 0, 25, 75}, std::vector<double>{inf, inf, 1, 1})
             .build();
  const auto r = deal_breaker_rank(e.voters[0], e, kL2);
  // Frozen from tests/oracle/oracle.py ("deal breaker").
  const std::vector<std::string> expected{"c3", "c4", "c6", "c1", "c2", "c5"};
  REQUIRE(r.entries.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) CHECK(r.entries[i].id == expected[i]);
}

TEST_CASE("largest remainder apportionment matches the oracle", "[ranking][oracle]")
{
  const std::vector<int> caps{4, 4, 4};
  CHECK(largest_remainder(std::vector<double>{0.5, 0.3, 0.2}, caps, 4) == std::vector<int>{2, 1, 1});
  CHECK(largest_remainder(std::vector<double>{10, 50, 40}, caps, 4) == std::vector<int>{0, 2, 2});
}

TEST_CASE("largest remainder respects capacities", "[ranking][property]")
{
  Rng rng(derive_seed(2024, 11));
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 6);
    std::vector<double> shares(n);
    std::vector<int> caps(n);
    int total_cap = 0;
    for (std::size_t i = 0; i < n; ++i) {
      shares[i] = 0.01 + static_cast<double>(uniform_index(rng, 100));
      caps[i] = static_cast<int>(uniform_index(rng, 5));
      total_cap += caps[i];
    }
    const int k = static_cast<int>(uniform_index(rng, 12));
    const auto seats = largest_remainder(shares, caps, k);
    REQUIRE(std::accumulate(seats.begin(), seats.end(), 0) == std::min(k, total_cap));
    for (std::size_t i = 0; i < n; ++i) {
      REQUIRE(seats[i] >= 0);
      REQUIRE(seats[i] <= caps[i]);
    }
  }
}

TEST_CASE("relative normalization lifts the top score to 100", "[ranking]")
{
  Ranking r;
  r.voter_id = "v";
  r.entries = {{"a", 80.0, 1.0, false}, {"b", 40.0, 2.0, false}, {"c", 0.0, 3.0, false}};
  const auto n = relative_score_normalization(r);
  CHECK(n.entries[0].score == 100.0);
  CHECK(n.entries[1].score == 50.0);
  CHECK(n.entries[2].score == 0.0);
  CHECK(n.entries[1].id == "b");
}

TEST_CASE("party cap keeps every party in a voter's top-k", "[ranking]")
{
  auto e = two_party();
  const RankingEngine engine(e, kL2);
  const auto full = engine.rank_candidates(e.voters[0], TieBreakPolicy::lexicographic());
  const auto capped = cap_party_topk(engine, full, 2);
  REQUIRE(capped.entries.size() >= 2);
  // Voter (0, 25) sits much closer to A, yet B keeps a slot only if its share rounds up.
  int a = 0;
  for (int i = 0; i < 2; ++i) a += capped.entries[static_cast<std::size_t>(i)].id[0] == 'a' ? 1 : 0;
  CHECK(a >= 1);
  CHECK(capped.entries.size() == full.entries.size());
}

TEST_CASE("list ranking scores lists by their members", "[ranking]")
{
  const auto e = two_party();
  const auto r = rank_lists(e.voters[0], e, kL2, ListScoreMode::mean_of_scores);
  REQUIRE(r.entries.size() == 2);
  CHECK(r.entries[0].id == "S-A");
  CHECK(r.entries[0].score > r.entries[1].score);
  const auto m = rank_lists(e.voters[0], e, kL2, ListScoreMode::score_of_mean);
  CHECK(m.entries[0].id == "S-A");
}
