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

#include "vaa/io.hpp"
#include "vaa/metrics.hpp"
#include "vaa/ranking.hpp"
#include "vaa/synth.hpp"

using namespace vaa;

namespace
{

SynthConfig small_config(std::uint64_t seed)
{
  SynthConfig cfg = default_synth_config();
  cfg.seed = seed;
  cfg.states = {{"N", 4, 40, 400}, {"M", 2, 20, 200}};
  return cfg;
}

}  // namespace

TEST_CASE("the default synthetic election has the documented shape", "[synth]")
{
  auto cfg = default_synth_config();
  cfg.seed = 2023;
  const auto e = generate_election(cfg);
  CHECK(e.candidates.size() == 500);
  CHECK(e.voters.size() == 10000);
  CHECK(e.questions.size() == 75);
  REQUIRE(e.states.size() == 3);
  CHECK(e.states[0].seats == 36);
  CHECK(e.states[1].seats == 24);
  CHECK(e.states[2].seats == 12);
  CHECK(e.parties.size() == 5);
  const auto kinds = [&](ScaleKind k) {
    return std::count_if(e.questions.begin(), e.questions.end(), [&](const Question & q) { return q.scale.kind() == k; });
  };
  CHECK(kinds(ScaleKind::policy) == 60);
  CHECK(kinds(ScaleKind::value) == 7);
  CHECK(kinds(ScaleKind::budget) == 8);
  CHECK(validate_election(e).empty());
  const auto shares = party_vote_shares(e);
  REQUIRE(shares.has_value());
  double total = 0.0;
  for (const auto & [p, s] : *shares) total += s;
  CHECK(total == Catch::Approx(1.0));
}

TEST_CASE("generation is a pure function of the config", "[synth][property]")
{
  for (std::uint64_t seed : {1ULL, 7ULL, 2023ULL}) {
    const auto a = generate_election(small_config(seed));
    const auto b = generate_election(small_config(seed));
    REQUIRE(a == b);
    REQUIRE(election_to_json(a) == election_to_json(b));
    REQUIRE(validate_election(a).empty());
  }
  CHECK_FALSE(generate_election(small_config(1)) == generate_election(small_config(2)));
}

TEST_CASE("the config survives a JSON round trip", "[synth]")
{
  const auto cfg = small_config(99);
  const auto back = synth_config_from_json(synth_config_to_json(cfg));
  CHECK(synth_config_to_json(back) == synth_config_to_json(cfg));
  CHECK(generate_election(back) == generate_election(cfg));
}

TEST_CASE("invalid configs are rejected", "[synth]")
{
  auto cfg = small_config(1);
  cfg.states[0].seats = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = small_config(1);
  cfg.parties.clear();
  CHECK_THROWS_AS(generate_election(cfg), Error);
  CHECK_THROWS_AS(synth_config_from_json("{\"dimensions\": \"two\"}"), Error);
}

TEST_CASE("the summary counts agree with the election", "[synth]")
{
  const auto e = generate_election(small_config(5));
  const auto s = describe_election(e);
  REQUIRE(s.states.size() == 2);
  CHECK(s.states[0].candidates + s.states[1].candidates == e.candidates.size());
  CHECK(s.states[0].voters == 400);
  CHECK(std::accumulate(s.completeness.begin(), s.completeness.end(), std::size_t{0}) == e.voters.size());
  std::size_t cands = 0;
  for (const auto & p : s.parties) cands += p.candidates;
  CHECK(cands == e.candidates.size());
  CHECK(s.mean_answered_fraction > 0.85);
  CHECK(s.mean_answered_fraction < 1.0);
}

SynthConfig two_party_symmetric(std::uint64_t seed)
{
  SynthConfig cfg = default_synth_config();
  cfg.seed = seed;
  cfg.states = {{"S", 10, 60, 10000}};
  cfg.parties = {{"L", "Left", 0.5, {-1.0, 0.0}, 0.35}, {"R", "Right", 0.5, {1.0, 0.0}, 0.35}};
  cfg.loading_offset_sd = 0.0;  // mirrored positions give mirrored answers
  cfg.voter_spread = 1.0;
  cfg.preferred_party_noise = 0.0;
  return cfg;
}

TEST_CASE("voters of a two-party symmetric election find their own party", "[synth]")
{
  const auto e = generate_election(two_party_symmetric(3));
  const auto r = acc1(e, MatchingMethod::of(MethodTag::l2));
  REQUIRE(r.value.has_value());
  CHECK(*r.value > 0.9);
}

TEST_CASE("mirrored parties are equally visible", "[synth][property]")
{
  const auto e = generate_election(two_party_symmetric(8));
  const auto t = party_visibility(e, MatchingMethod::of(MethodTag::l2), std::nullopt, TieBreakPolicy::lexicographic());
  CHECK(std::abs(t.pooled("L") - t.pooled("R")) < 0.02);
}

TEST_CASE("voter completeness follows the skip model", "[synth][property]")
{
  const auto e = generate_election(two_party_symmetric(9));
  const DropModel f;
  double expected = 0.0;
  for (int t = 1; t <= 75; ++t) expected += f.keep_probability(t);
  expected /= 75.0;
  // Binomial standard error over 750k answers is about 3e-4.
  CHECK(std::abs(describe_election(e).mean_answered_fraction - expected) < 0.002);
  for (const auto & c : e.candidates) REQUIRE(c.profile.is_complete());
}
