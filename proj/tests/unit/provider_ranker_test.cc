// Copyright 2026 The fedorch Authors.
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

#include <gtest/gtest.h>

#include <algorithm>

#include "fedorch/provider_ranker.hpp"
#include "oracles.hpp"

namespace fedorch {
namespace {

using testing::Gen;

std::optional<PreferenceList> as_prefs(const std::optional<std::vector<std::string>> &p) {
  if (!p) return std::nullopt;
  // PreferenceList rejects duplicates; the generator never makes any.
  return PreferenceList(*p);
}

TEST(Normalize, Examples) {
  EXPECT_EQ(normalize(std::vector<double>{5}), std::vector<double>{1.0});
  EXPECT_EQ(normalize(std::vector<double>{0, 5, 10}), (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_EQ(normalize(std::vector<double>{3, 3, 3}), (std::vector<double>{1.0, 1.0, 1.0}));
  EXPECT_THROW(normalize(std::vector<double>{}), Error);
}

TEST(Score, Examples) {
  ProviderSnapshot s;
  RankerConfig c{1, 0, 0, 0};
  EXPECT_DOUBLE_EQ(score(s, {0.7, 0.0}, c), 0.7);

  s.availability = 0.9;
  s.data_locality = 1.0;
  c = {1, 1, 1, 1};
  EXPECT_NEAR(score(s, {0.5, 0.2}, c), 0.5 + 0.9 + 0.8 + 1.0, 1e-12);
  EXPECT_NEAR(score(s, {0.5, 0.2}, c), 3.2, 1e-12);

  s.data_locality = 0.25;
  c = {0, 0, 0, 2};
  EXPECT_DOUBLE_EQ(score(s, {0.3, 0.3}, c), 0.5);
}

TEST(RankerConfig, Checks) {
  EXPECT_NO_THROW(RankerConfig{}.check());
  EXPECT_THROW((RankerConfig{0, 0, 0, 0}).check(), Error);
  EXPECT_THROW((RankerConfig{-1, 1, 1, 1}).check(), Error);
  auto cfg = RankerConfig::from(KvConfig::parse("w_lat = 0.5\n"));
  EXPECT_EQ(cfg.w_sla, 1.0);
  EXPECT_EQ(cfg.w_lat, 0.5);
}

TEST(PreferenceList, RejectsDuplicates) {
  EXPECT_THROW(PreferenceList({"a", "a"}), Error);
}

TEST(PreferenceBook, UserScopeWins) {
  auto book = PreferenceBook::from(KvConfig::parse("prefs.alice = [x]\nprefs.physics = [y]\nprefs.astro = [z]\n"));
  std::vector<std::string> groups = {"physics", "astro"};
  EXPECT_EQ(book.lookup("alice", groups)->ids(), std::vector<std::string>{"x"});
  // Groups in sorted order: astro before physics.
  EXPECT_EQ(book.lookup("bob", groups)->ids(), std::vector<std::string>{"z"});
  EXPECT_FALSE(book.lookup("bob", {}).has_value());
}

TEST(RankProviders, Examples) {
  ProviderSnapshot a;
  a.provider_id = "A";
  EXPECT_EQ(rank_providers(std::vector<ProviderSnapshot>{a}, {}, std::nullopt), std::vector<std::string>{"A"});

  ProviderSnapshot b;
  b.provider_id = "B";
  a.sla_rank = 9;
  b.sla_rank = 1;
  std::vector<ProviderSnapshot> ab = {a, b};
  EXPECT_EQ(rank_providers(ab, {1, 0, 0, 0}, std::nullopt), (std::vector<std::string>{"A", "B"}));
  EXPECT_EQ(rank_providers(ab, {1, 0, 0, 0}, PreferenceList({"B"})), (std::vector<std::string>{"B", "A"}));

  EXPECT_THROW(rank_providers(std::vector<ProviderSnapshot>{}, {}, std::nullopt), Error);
}

TEST(RankProviders, MatchesOracle) {
  Gen g(31337);
  for (int trial = 0; trial < 500; ++trial) {
    auto cands = testing::random_candidates(g, static_cast<int>(g.range(2, 10)));
    auto cfg = testing::random_weights(g);
    auto prefs = testing::random_prefs(g, cands);
    EXPECT_EQ(rank_providers(cands, cfg, as_prefs(prefs)), testing::oracle_rank(cands, cfg, prefs))
        << "trial " << trial;
  }
}

TEST(RankProviders, PermutationInvariantAndPure) {
  Gen g(99);
  for (int trial = 0; trial < 300; ++trial) {
    auto cands = testing::random_candidates(g, static_cast<int>(g.range(2, 8)));
    auto cfg = testing::random_weights(g);
    auto prefs = as_prefs(testing::random_prefs(g, cands));
    auto expect = rank_providers(cands, cfg, prefs);
    std::shuffle(cands.begin(), cands.end(), g.engine());
    EXPECT_EQ(rank_providers(cands, cfg, prefs), expect);
    EXPECT_EQ(rank_providers(cands, cfg, prefs), expect);
  }
}

TEST(RankProviders, PreferredPrecedeTheRest) {
  Gen g(4);
  for (int trial = 0; trial < 1000; ++trial) {
    auto cands = testing::random_candidates(g, static_cast<int>(g.range(2, 10)));
    auto prefs = testing::random_prefs(g, cands);
    auto ranked = rank_providers(cands, testing::random_weights(g), as_prefs(prefs));
    if (!prefs) continue;
    bool seen_other = false;
    for (const auto &id : ranked) {
      bool preferred = std::find(prefs->begin(), prefs->end(), id) != prefs->end();
      if (preferred) EXPECT_FALSE(seen_other) << id;
      else seen_other = true;
    }
  }
}

// Raising availability, with the normalisation context fixed, never moves a
// provider down. Availability does not feed the normalisation, so changing
// it in the snapshot keeps the context fixed.
TEST(RankProviders, AvailabilityMonotone) {
  Gen g(12);
  for (int trial = 0; trial < 500; ++trial) {
    auto cands = testing::random_candidates(g, static_cast<int>(g.range(2, 8)));
    auto cfg = testing::random_weights(g);
    auto prefs = as_prefs(testing::random_prefs(g, cands));
    const size_t who = static_cast<size_t>(g.range(0, static_cast<std::int64_t>(cands.size()) - 1));
    auto before = rank_providers(cands, cfg, prefs);
    cands[who].availability = std::min(1.0, cands[who].availability + g.unit());
    auto after = rank_providers(cands, cfg, prefs);
    const auto &id = cands[who].provider_id;
    auto pos = [&](const std::vector<std::string> &v) { return std::find(v.begin(), v.end(), id) - v.begin(); };
    EXPECT_LE(pos(after), pos(before));
  }
}

}  // namespace
}  // namespace fedorch
