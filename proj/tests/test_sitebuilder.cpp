// Copyright 2026 The rankone Authors
//
// Licensed under the Apache License, Version 2.0 (see
// LICENSE or https://www.apache.org/licenses/LICENSE-2.0).
// This file may not be copied, modified, or distributed
// except according to those terms.

#include <gtest/gtest.h>

#include <algorithm>

#include "rankone/sitebuilder.hpp"

using namespace rk;

namespace {

const SiteSpec& site_for(long D) {
  static std::map<long, SiteSpec> cache;
  auto it = cache.find(D);
  if (it == cache.end()) it = cache.emplace(D, build_site(Integer(D))).first;
  return it->second;
}

std::vector<Integer> ints(std::initializer_list<long> v) {
  std::vector<Integer> out;
  for (long x : v) out.emplace_back(x);
  return out;
}

}  // namespace

TEST(NormalizeD, Examples) {
  EXPECT_EQ(normalize_D(Integer(12)).value, Integer(3));
  EXPECT_TRUE(normalize_D(Integer(12)).changed);
  EXPECT_EQ(normalize_D(Integer(-8)).value, Integer(-2));
  EXPECT_FALSE(normalize_D(Integer(-7)).changed);
  EXPECT_THROW(normalize_D(Integer(9)), std::invalid_argument);
  EXPECT_THROW(normalize_D(Integer(0)), std::invalid_argument);
  EXPECT_TRUE(is_squarefree(Integer(-30)));
  EXPECT_FALSE(is_squarefree(Integer(12)));
}

TEST(FieldData, DiscriminantAndCharacter) {
  EXPECT_EQ(field_discriminant(Integer(-1)), Integer(-4));
  EXPECT_EQ(field_discriminant(Integer(5)), Integer(5));
  EXPECT_EQ(field_discriminant(Integer(-7)), Integer(-7));
  EXPECT_EQ(field_discriminant(Integer(2)), Integer(8));
  // primes inert in Q(i) are the ones = 3 mod 4
  for (std::uint32_t p : small_primes(500)) {
    if (p == 2) continue;
    EXPECT_EQ(splitting_character(Integer(-4), Integer(p)) == -1, p % 4 == 3) << p;
  }
  EXPECT_EQ(splitting_character(Integer(-4), Integer(2)), 0);
}

TEST(BuildS0, Examples) {
  EXPECT_EQ(build_S0(Integer(-1)).first, ints({2}));
  EXPECT_EQ(build_S0(Integer(5)).first, ints({2, 5}));
  EXPECT_EQ(build_S0(Integer(-30)).first, ints({2, 3, 5}));
  EXPECT_THROW(build_S0(Integer(12)), std::invalid_argument);
  EXPECT_THROW(build_S0(Integer(1)), std::invalid_argument);
  auto [s0, desc] = build_S0(Integer(5));
  for (const auto& p : s0) {
    const UpDescriptor& u = desc.at(p);
    EXPECT_EQ(u.profile, (Profile{0, 0, 0}));
    EXPECT_FALSE(descriptor_violation(u, u.a0, u.b0, Integer(5), Integer(1)));
  }
}

TEST(TemplatePairs, Examples) {
  EXPECT_EQ(template_local_pair({0, 1, 0}, Integer(7)), std::make_pair(Rational(1), Rational(-8)));
  EXPECT_EQ(template_local_pair({0, 2, 0}, Integer(7)), std::make_pair(Rational(1), Rational(Integer(-51), Integer(2))));
  EXPECT_EQ(template_local_pair({0, 0, 1}, Integer(7), Integer(3)), std::make_pair(Rational(3), Rational(10)));
  EXPECT_THROW(template_local_pair({0, 1, 0}, Integer(2)), UnsupportedProfile);
  EXPECT_THROW(template_local_pair({3, 0, 0}, Integer(7)), UnsupportedProfile);
}

TEST(TemplatePairs, RealiseTheirProfile) {
  const std::vector<Profile> profiles{{0, 1, 0}, {-1, 1, -1}, {0, 2, 0}, {0, 0, 1}, {1, 0, 0}};
  for (std::uint32_t pl : small_primes(200)) {
    if (pl == 2) continue;
    Integer p(pl);
    for (const auto& m : profiles)
      for (long u : {1L, 2L, 3L, -1L}) {
        if (mod(Integer(u), p) == 0) continue;
        auto [a, b] = template_local_pair(m, p, Integer(u));
        EXPECT_EQ((Profile{valuation(a, p), valuation(a + b, p), valuation(a - b, p)}), m) << profile_str(m) << " p=" << pl;
      }
  }
}

TEST(Epsilon, Examples) {
  // kronecker(17, 3) = -1, kronecker(17, 13) = 1
  EXPECT_EQ(choose_epsilon(Integer(17), {{Integer(3), 1}}), 1);
  EXPECT_EQ(choose_epsilon(Integer(17), {{Integer(3), 2}}), -1);
  EXPECT_EQ(choose_epsilon(Integer(17), {{Integer(13), 1}}), -1);
  EXPECT_EQ(choose_epsilon(Integer(17), {{Integer(17), 1}, {Integer(3), 1}}), 1);
  EXPECT_EQ(choose_epsilon(Integer(17), {}), -1);
}

TEST(XiMultiset, ProductIsTwoToMinusK) {
  for (long k = -6; k <= 6; ++k) {
    auto [twos, halves] = xi_multiset(k);
    EXPECT_GE(twos, 1);
    EXPECT_GE(halves, 0);
    EXPECT_EQ(twos - halves, -k);
  }
}

TEST(BuildSite, MinusOne) {
  const SiteSpec& s = site_for(-1);
  EXPECT_EQ(s.disc, Integer(-4));
  EXPECT_EQ(s.S0, ints({2}));
  EXPECT_EQ(s.S1, ints({3, 5, 7}));
  EXPECT_EQ(s.S1_prime, ints({5}));
  EXPECT_EQ(s.S2, ints({1009}));
  EXPECT_EQ(s.S3, ints({1129}));
  EXPECT_EQ(s.pi1, Integer(1009));
  EXPECT_EQ(s.p0, Integer(1129));
  EXPECT_EQ(s.epsilon, -1);
  EXPECT_EQ(s.n, 0);
  EXPECT_EQ(site_hash(s), "9f64efba7f815f43");
}

class BuildSiteEveryD : public ::testing::TestWithParam<long> {};

TEST_P(BuildSiteEveryD, InvariantsHold) {
  const SiteSpec& s = site_for(GetParam());
  for (const auto& c : site_invariants(s)) EXPECT_TRUE(c.ok) << c.name << ": " << c.detail;
  EXPECT_TRUE(site_ok(s));
  EXPECT_EQ(mod(s.pi1, Integer(8)), Integer(1));
  EXPECT_EQ(mod(s.p0, Integer(8)), Integer(1));
  for (const auto& p : s.S1) {
    bool extension = std::find(s.S1_prime.begin(), s.S1_prime.end(), p) != s.S1_prime.end();
    if (extension) {
      EXPECT_EQ(s.descriptors.at(p).profile, (Profile{1, 0, 0})) << p;
    } else {
      EXPECT_EQ(splitting_character(s.disc, p), -1) << p;
    }
  }
  for (const auto& p : s.S2) EXPECT_EQ(splitting_character(s.disc, p), 1) << p;
  for (const auto& p : s.all_primes()) {
    ASSERT_TRUE(s.descriptors.count(p)) << p;
    ASSERT_TRUE(s.phi1.count(p) && s.phiD.count(p)) << p;
    EXPECT_TRUE(is_prime(p));
  }
  EXPECT_TRUE(std::find(s.S2.begin(), s.S2.end(), s.pi1) != s.S2.end());
  for (const auto& p : s.S1_prime) EXPECT_TRUE(std::find(s.S1.begin(), s.S1.end(), p) != s.S1.end());
}

TEST_P(BuildSiteEveryD, JsonRoundTrip) {
  const SiteSpec& s = site_for(GetParam());
  Json j = to_json(s);
  SiteSpec back = site_from_json(Json::parse(j.dump()));
  EXPECT_EQ(to_json(back).dump(), j.dump());
  EXPECT_EQ(site_hash(back), site_hash(s));
  EXPECT_TRUE(site_ok(back));
}

TEST_P(BuildSiteEveryD, Deterministic) {
  EXPECT_EQ(site_hash(build_site(Integer(GetParam()))), site_hash(site_for(GetParam())));
}

INSTANTIATE_TEST_SUITE_P(Fields, BuildSiteEveryD, ::testing::Values(-1L, 5L, 3L, -2L, 2L, -7L, -3L, 13L, -5L, 6L));

TEST(SiteInvariants, DetectTampering) {
  SiteSpec s = site_for(-1);
  s.epsilon = -s.epsilon;
  EXPECT_FALSE(site_ok(s));
  SiteSpec t = site_for(-1);
  t.pi1 = Integer(1013);
  EXPECT_FALSE(site_ok(t));
  SiteSpec u = site_for(5);
  u.descriptors.begin()->second.b0 += Rational(1);
  EXPECT_FALSE(site_ok(u));
}

TEST(SiteJson, RejectsMalformed) {
  Json j = to_json(site_for(-1));
  j.erase("pi1");
  EXPECT_ANY_THROW(site_from_json(j));
}

TEST(BuildSite, ScanBoundTooSmall) {
  SiteConfig cfg;
  cfg.scan_bound = Integer(10);
  EXPECT_THROW(build_site(Integer(-1), cfg), SearchBoundExhausted);
}
