// Copyright 2026 The rankone Authors
//
// Licensed under the Apache License, Version 2.0 (see
// LICENSE or https://www.apache.org/licenses/LICENSE-2.0).
// This file may not be copied, modified, or distributed
// except according to those terms.

#include <gtest/gtest.h>

#include "rankone/pairsearch.hpp"

using namespace rk;

namespace {

// S = {2} with a single ball a = 1, b = 0 mod 2^k and profile (0,0,0).
SiteSpec odd_even_site(long k = 1) {
  SiteSpec s;
  s.D = -1;
  s.disc = -4;
  s.pi1 = 1;
  s.S0 = {Integer(2)};
  UpDescriptor u;
  u.p = 2;
  u.stage = "S0";
  u.a0 = Rational(1);
  u.b0 = Rational(0);
  u.exponent = k;
  s.descriptors.emplace(Integer(2), u);
  return s;
}

bool prime_by_trial(long n) {
  if (n < 2) return false;
  for (long d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

const SiteSpec& minus_one_site() {
  static const SiteSpec s = build_site(Integer(-1));
  return s;
}

SearchTask task_for(const SiteSpec& s, std::size_t count, unsigned jobs = 1) {
  SearchTask t;
  t.site = s;
  t.height_bound = default_height(s);
  t.count = count;
  t.jobs = jobs;
  return t;
}

}  // namespace

TEST(ResidueSystem, Examples) {
  ResidueSystem rs = residue_system(odd_even_site(5));
  EXPECT_EQ(rs.Q, Integer(1));
  EXPECT_EQ(rs.modulus, Integer(32));
  ASSERT_EQ(rs.residues.size(), 1U);
  EXPECT_EQ(rs.residues[0], std::make_pair(Integer(1), Integer(0)));
}

TEST(ResidueSystem, MatchesEveryBall) {
  const SiteSpec& s = minus_one_site();
  ResidueSystem rs = residue_system(s);
  EXPECT_EQ(rs.Q, Integer(1009));  // only pi1 carries a negative valuation
  auto [A, B] = rs.residues.front();
  for (const auto& [p, u] : s.descriptors) {
    Rational a(A, rs.Q), b(B, rs.Q);
    EXPECT_GE(valuation(a - u.a0, p), u.exponent) << p;
    EXPECT_GE(valuation(b - u.b0, p), u.exponent) << p;
  }
}

TEST(FindPairs, HandmadeSiteFirstPairs) {
  SearchTask t;
  t.site = odd_even_site();
  t.height_bound = 100;
  t.count = 2;
  SearchResult r = find_pairs(t);
  ASSERT_EQ(r.pairs.size(), 2U);
  EXPECT_EQ(r.pairs[0].a, Rational(3));
  EXPECT_EQ(r.pairs[0].b, Rational(8));
  EXPECT_EQ(r.pairs[1].a, Rational(5));
  EXPECT_EQ(r.pairs[1].b, Rational(8));
  EXPECT_EQ(r.pairs[1].q1, Integer(5));
  EXPECT_EQ(r.pairs[1].q2, Integer(13));
  EXPECT_EQ(r.pairs[1].q3, Integer(3));
}

TEST(FindPairs, HandmadeSiteAgainstBruteForce) {
  // small sieve limit so the forced full-test path is exercised
  SearchTask t;
  t.site = odd_even_site();
  t.height_bound = 400;
  t.count = 100000;
  t.sieve_limit = 40;
  std::vector<std::pair<long, long>> want;
  for (long b = 2; b <= 400; b += 2)
    for (long a = 1; a < b; a += 2)
      if (prime_by_trial(a) && prime_by_trial(a + b) && prime_by_trial(b - a) && a != b - a) want.push_back({a, b});
  std::vector<std::pair<long, long>> got;
  try {
    find_pairs(t);
    FAIL() << "expected exhaustion";
  } catch (const SearchExhausted& e) {
    for (const auto& p : e.result.pairs) got.push_back({p.A.get_si(), p.B.get_si()});
  }
  EXPECT_EQ(got, want);
}

TEST(PairViolation, Examples) {
  const SiteSpec& s = minus_one_site();
  ASSERT_TRUE(pair_violation(s, Rational(2), Rational(5)).has_value());  // v_2(a) = 1 but 2 is in S
  EXPECT_TRUE(pair_violation(s, Rational(8), Rational(5)).has_value());  // a > b
  EXPECT_TRUE(pair_violation(s, Rational(-1), Rational(5)).has_value());
  EXPECT_FALSE(pair_violation(odd_even_site(), Rational(5), Rational(8)).has_value());
  EXPECT_FALSE(pair_violation(odd_even_site(), Rational(7), Rational(12)).has_value());  // 7, 19, 5
  EXPECT_TRUE(pair_violation(odd_even_site(), Rational(9), Rational(14)).has_value());  // a = 9 not prime
}

TEST(FindPairs, EmittedPairsPassRecheck) {
  const SiteSpec& s = minus_one_site();
  SearchResult r = find_pairs(task_for(s, 6));
  ASSERT_EQ(r.pairs.size(), 6U);
  std::vector<Integer> S = s.all_primes();
  for (const auto& p : r.pairs) {
    EXPECT_FALSE(pair_violation(s, p.a, p.b).has_value());
    EXPECT_TRUE(is_prime(p.q1) && is_prime(p.q2) && is_prime(p.q3));
    Integer n = p.a.num();
    for (const auto& q : S) n = split_valuation(n, q).second;
    EXPECT_EQ(n, p.q1);
    EXPECT_EQ(p.a, Rational(p.A, Integer(1009)));
  }
  for (std::size_t i = 1; i < r.pairs.size(); ++i)
    EXPECT_TRUE(r.pairs[i - 1].row < r.pairs[i].row ||
                (r.pairs[i - 1].row == r.pairs[i].row && r.pairs[i - 1].col < r.pairs[i].col));
}

TEST(FindPairs, DeterministicAcrossJobs) {
  const SiteSpec& s = minus_one_site();
  SearchResult one = find_pairs(task_for(s, 5, 1));
  SearchResult three = find_pairs(task_for(s, 5, 3));
  ASSERT_EQ(one.pairs.size(), three.pairs.size());
  for (std::size_t i = 0; i < one.pairs.size(); ++i) {
    EXPECT_EQ(one.pairs[i].A, three.pairs[i].A);
    EXPECT_EQ(one.pairs[i].B, three.pairs[i].B);
  }
}

TEST(FindPairs, ResumeFromCursor) {
  const SiteSpec& s = minus_one_site();
  SearchResult all = find_pairs(task_for(s, 6));
  SearchResult first = find_pairs(task_for(s, 3));
  SearchResult rest = find_pairs(task_for(s, 3), first.cursor);
  ASSERT_EQ(rest.pairs.size(), 3U);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(rest.pairs[i].A, all.pairs[i + 3].A);
    EXPECT_EQ(rest.pairs[i].B, all.pairs[i + 3].B);
  }
}

TEST(FindPairs, ExhaustionThrows) {
  SearchTask t = task_for(minus_one_site(), 1000);
  t.height_bound = residue_system(minus_one_site()).modulus * 20;
  try {
    find_pairs(t);
    FAIL() << "expected exhaustion";
  } catch (const SearchExhausted& e) {
    EXPECT_TRUE(e.result.exhausted);
    EXPECT_LT(e.result.pairs.size(), 1000U);
  }
  SearchTask none = task_for(minus_one_site(), 0);
  EXPECT_TRUE(find_pairs(none).pairs.empty());
}

TEST(Checkpoint, JsonRoundTrip) {
  const SiteSpec& s = minus_one_site();
  SearchResult r = find_pairs(task_for(s, 2));
  Checkpoint c;
  c.task = task_hash(s);
  c.cursor = r.cursor;
  c.last_height = cursor_height(s, r.cursor);
  c.pairs = r.pairs;
  Checkpoint back = checkpoint_from_json(Json::parse(to_json(c).dump()));
  EXPECT_EQ(back.task, c.task);
  EXPECT_EQ(back.cursor.row, c.cursor.row);
  EXPECT_EQ(back.cursor.col, c.cursor.col);
  EXPECT_EQ(back.last_height, c.last_height);
  ASSERT_EQ(back.pairs.size(), 2U);
  EXPECT_EQ(back.pairs[1].a, r.pairs[1].a);
  EXPECT_EQ(back.pairs[1].q3, r.pairs[1].q3);
  EXPECT_THROW(checkpoint_from_json(Json{{"kind", "other"}}), FormatError);
}

TEST(Checkpoint, TaskHashTracksSite) {
  EXPECT_EQ(task_hash(minus_one_site()), task_hash(build_site(Integer(-1))));
  EXPECT_NE(task_hash(minus_one_site()), task_hash(build_site(Integer(5))));
  EXPECT_NE(task_hash(odd_even_site(1)), task_hash(odd_even_site(3)));
}
