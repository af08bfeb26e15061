// Copyright 2026 The rankone Authors
//
// Licensed under the Apache License, Version 2.0 (see
// LICENSE or https://www.apache.org/licenses/LICENSE-2.0).
// This file may not be copied, modified, or distributed
// except according to those terms.

// Acceptance suite: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "instances.hpp"

using namespace rk;
using Clock = std::chrono::steady_clock;

namespace {

struct Result {
  bool ok = true;
  std::string detail;
  void fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// 1. image formula vs brute force on the nine odd-prime cases
Result local_images() {
  Result r;
  auto t0 = Clock::now();
  std::mt19937_64 g(2026);
  std::size_t total = 0;
  for (const auto& c : testing::image_cases()) {
    for (int i = 0; i < 30; ++i) {
      int flag = c.square_flag >= 0 ? c.square_flag : i % 2;
      auto inst = testing::random_instance(g, c.profile, flag);
      Place v = Place::prime(inst.p);
      if (inst.p > 199) r.fail("prime above 199");
      if (!(image_formula(inst.f, inst.p) == image_bruteforce(inst.f, v)))
        r.fail(c.name + " at p = " + to_string(inst.p) + ", d = " + inst.f.d.str());
      ++total;
    }
  }
  double s = seconds_since(t0);
  if (s >= 60) r.fail("took " + std::to_string(s) + " s");
  if (r.ok) r.detail = std::to_string(total) + " instances over 9 cases";
  char buf[64];
  std::snprintf(buf, sizeof buf, " in %.2f s", s);
  r.detail += buf;
  return r;
}

// 2. Tate's algorithm against the reduction table, per profile row
Result reduction_table() {
  struct Row {
    Profile m;
    int flag;
    const char* e;
    long ce;
    const char* ep;
    long cep;
  };
  // flag: squareness of d for (0,1,0), of -2a(a+b)d for the last two profiles
  const std::vector<Row> rows{
      {{0, 0, 1}, 0, "I2", 2, "I1", 1},    {{0, 0, 1}, 1, "I2", 2, "I1", 1},    {{1, 0, 0}, 0, "III", 2, "III", 2},
      {{1, 0, 0}, 1, "III", 2, "III", 2},  {{0, 1, 0}, 1, "I1*", 4, "I2*", 4},  {{0, 1, 0}, 0, "I1*", 2, "I2*", 4},
      {{-1, 1, -1}, 1, "I2", 2, "I4", 4},  {{-1, 1, -1}, 0, "I2", 2, "I4", 2},  {{0, 2, 0}, 1, "I2", 2, "I4", 4},
      {{0, 2, 0}, 0, "I2", 2, "I4", 2},
  };
  Result r;
  std::mt19937_64 g(2027);
  std::size_t total = 0;
  for (const auto& row : rows) {
    for (int i = 0; i < 30; ++i) {
      auto inst = testing::random_instance(g, row.m, row.flag);
      Place v = Place::prime(inst.p);
      bool dsq = is_local_square(inst.f.d, v);
      bool msq = is_local_square(Rational(-2) * inst.f.a * inst.f.apb() * inst.f.d, v);
      CurvePair c = make_pair(inst.f);
      LocalReduction e = tate_at(c.e, inst.p), ep = tate_at(c.eprime, inst.p);
      ExpectedReduction xe = expected_reduction(row.m, dsq, msq, false), xep = expected_reduction(row.m, dsq, msq, true);
      std::string where = profile_str(row.m) + " p = " + to_string(inst.p);
      if (e.kodaira != row.e || e.tamagawa != row.ce) r.fail(where + ": E is " + e.kodaira + " c=" + std::to_string(e.tamagawa));
      if (ep.kodaira != row.ep || ep.tamagawa != row.cep)
        r.fail(where + ": E' is " + ep.kodaira + " c=" + std::to_string(ep.tamagawa));
      if (e.kodaira != xe.kodaira || e.tamagawa != xe.tamagawa || ep.kodaira != xep.kodaira || ep.tamagawa != xep.tamagawa)
        r.fail(where + ": expected_reduction disagrees");
      ++total;
    }
  }
  if (r.ok) r.detail = std::to_string(total) + " instances over " + std::to_string(rows.size()) + " rows";
  return r;
}

// 3. Cassels ratio on prime-triple pairs
Result cassels() {
  Result r;
  std::vector<std::pair<long, long>> pairs;
  for (long b = 2; b <= 500 && pairs.size() < 30; ++b)
    for (long a = 1; a < b && pairs.size() < 30; ++a)
      if (is_prime(Integer(a)) && is_prime(Integer(a + b)) && is_prime(Integer(b - a))) pairs.push_back({a, b});
  if (pairs.size() < 25) r.fail("only " + std::to_string(pairs.size()) + " pairs");
  std::size_t checks = 0;
  for (auto [a, b] : pairs)
    for (long d : {1L, -1L, 5L}) {
      try {
        CasselsCheck c = cassels_ratio_check({Rational(a), Rational(b), Rational(d)});
        if (!c.equal) r.fail("(" + std::to_string(a) + "," + std::to_string(b) + "," + std::to_string(d) + ")");
      } catch (const std::exception& e) {
        r.fail("(" + std::to_string(a) + "," + std::to_string(b) + "," + std::to_string(d) + "): " + e.what());
      }
      ++checks;
    }
  if (r.ok) r.detail = std::to_string(pairs.size()) + " pairs x 3 twists = " + std::to_string(checks) + " identities";
  return r;
}

// 4. the desk demo for D = -1 and D = 5
Result demo(std::vector<Certificate>& certified) {
  Result r;
  auto t0 = Clock::now();
  std::ostringstream summary;
  for (long D : {-1L, 5L}) {
    try {
      SiteSpec site = build_site(Integer(D));
      DemoResult res = demo_batch(Integer(D), 5, site);
      std::set<std::string> js;
      for (const auto& c : res.certificates) {
        const Json& j = c.record;
        js.insert(j.at("j_invariant").dump());
        if (j.at("ranks") != Json{{"E1_Q", "1"}, {"ED_Q", "0"}, {"E1_L", "1"}}) r.fail("D = " + std::to_string(D) + ": ranks");
        if (j.at("selmer_orders") != Json::array({"2", "4", "2", "2"})) r.fail("D = " + std::to_string(D) + ": Selmer orders");
        VerifyReport v = verify(Json::parse(j.dump()));
        if (!v.ok) r.fail("D = " + std::to_string(D) + ": verify: " + v.first_divergence);
        certified.push_back(c);
      }
      if (res.certificates.size() < 5 || js.size() != res.certificates.size())
        r.fail("D = " + std::to_string(D) + ": " + std::to_string(js.size()) + " distinct j");
      summary << "D = " << D << ": " << res.certificates.size() << " certificates (" << res.failures.size()
              << " failed pairs); ";
    } catch (const std::exception& e) {
      r.fail("D = " + std::to_string(D) + ": " + e.what());
    }
  }
  double s = seconds_since(t0);
  if (s > 600) r.fail("took " + std::to_string(s) + " s");
  if (r.ok) r.detail = summary.str();
  char buf[64];
  std::snprintf(buf, sizeof buf, "total %.2f s", s);
  r.detail += buf;
  return r;
}

// 5. the site invariants at D = -1
Result site_invariants_minus_one() {
  Result r;
  SiteSpec s = build_site(Integer(-1));
  std::set<std::string> wanted{"parity", "product", "gamma_surjective", "dim_V", "kernel_cut"};
  for (const auto& c : site_invariants(s)) {
    if (!c.ok) r.fail(c.name + ": " + c.detail);
    wanted.erase(c.name);
  }
  for (const auto& w : wanted) r.fail("invariant " + w + " not checked");
  if (r.ok) r.detail = "all " + std::to_string(site_invariants(s).size()) + " invariants hold, n = " + std::to_string(s.n);
  return r;
}

// 6. isogeny and point identities
Result identities(const std::vector<Certificate>& certified) {
  Result r;
  std::mt19937_64 g(2028);
  std::uniform_int_distribution<long> num(1, 400), den(1, 12);
  std::size_t composed = 0, on = 0, mult = 0;
  while (on < 120) {
    Rational a(Integer(num(g)), Integer(den(g))), b(Integer(num(g)), Integer(den(g)));
    if (!(a < b)) std::swap(a, b);
    if (a == b) continue;
    FamilyParams f{a, b, Rational(1)};
    CurvePair c = make_pair(f);
    if (square_class(f.beta_prime()).is_identity()) continue;
    Point p1 = marked_point(a, b);
    if (!on_curve(c.e, p1)) r.fail("marked point off curve at a = " + a.str() + ", b = " + b.str());
    ++on;
    if (composed < 120) {
      Point t = Point::affine(Rational(0), Rational(0));
      for (const Point& x : {p1, add(c.e, p1, t)}) {
        if (!(phi_hat(c.eprime, c.e, phi(c.e, c.eprime, x)) == multiply(c.e, x, 2))) r.fail("phi_hat o phi != [2]");
        ++composed;
      }
    }
    if (mult < 200) {
      std::vector<Integer> support = family_support(f);
      Point q = phi(c.e, c.eprime, p1);
      Point q2 = add(c.eprime, q, Point::affine(Rational(0), Rational(0)));
      SquareClass lhs = connecting_image(f, IsogenyTag::kPhi, q, support) * connecting_image(f, IsogenyTag::kPhi, q2, support);
      SquareClass rhs = connecting_image(f, IsogenyTag::kPhi, add(c.eprime, q, q2), support);
      if (!(lhs == rhs)) r.fail("delta not multiplicative at a = " + a.str() + ", b = " + b.str());
      ++mult;
    }
  }
  for (const auto& c : certified) {
    Rational a = rational_from_json(c.record.at("a")), b = rational_from_json(c.record.at("b"));
    if (!is_nontorsion(make_pair({a, b, Rational(1)}).e, marked_point(a, b))) r.fail("P1 torsion for a certified pair");
  }
  if (certified.empty()) r.fail("no certified pairs to check");
  if (r.ok)
    r.detail = std::to_string(composed) + " compositions, " + std::to_string(on) + " marked points, " + std::to_string(mult) +
               " multiplicativity samples, " + std::to_string(certified.size()) + " certified pairs non-torsion";
  return r;
}

}  // namespace

int main() {
  std::vector<Certificate> certified;
  std::vector<std::pair<std::string, std::function<Result()>>> criteria{
      {"local image formula agrees with brute force", local_images},
      {"reduction types and Tamagawa numbers per profile row", reduction_table},
      {"Cassels ratio identity", cassels},
      {"desk demo for D = -1 and D = 5", [&] { return demo(certified); }},
      {"site invariants at D = -1", site_invariants_minus_one},
      {"isogeny and point identities", [&] { return identities(certified); }},
  };
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Result r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r.fail(std::string("exception: ") + e.what());
    }
    all = all && r.ok;
    std::cout << (r.ok ? "PASS" : "FAIL") << "  criterion " << (i + 1) << ": " << criteria[i].first << " -- " << r.detail
              << std::endl;
  }
  return all ? 0 : 1;
}
