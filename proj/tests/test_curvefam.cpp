// Copyright 2026 The rankone Authors
//
// Licensed under the Apache License, Version 2.0 (see
// LICENSE or https://www.apache.org/licenses/LICENSE-2.0).
// This file may not be copied, modified, or distributed
// except according to those terms.

#include <gtest/gtest.h>

#include <random>

#include "rankone/curvefam.hpp"
#include "rankone/factor.hpp"

using namespace rk;

namespace {

FamilyParams params(long a, long b, long d = 1) { return {Rational(a), Rational(b), Rational(d)}; }

// Tangent doubling written out from scratch.
Point double_by_hand(const WeierstrassCurve& e, const Point& p) {
  Rational lambda = (Rational(3) * p.x * p.x + Rational(2) * e.alpha * p.x + e.beta) / (Rational(2) * p.y);
  Rational x3 = lambda * lambda - e.alpha - Rational(2) * p.x;
  Rational y3 = -(p.y + lambda * (x3 - p.x));
  return Point::affine(x3, y3);
}

std::vector<FamilyParams> random_params(std::size_t n, unsigned seed) {
  std::mt19937_64 g(seed);
  std::uniform_int_distribution<long> num(-60, 60), den(1, 9);
  std::vector<FamilyParams> out;
  while (out.size() < n) {
    FamilyParams f{Rational(Integer(num(g)), Integer(den(g))), Rational(Integer(num(g)), Integer(den(g))),
                   Rational(num(g))};
    if (f.a.is_zero() || f.b.is_zero() || (f.a + f.b).is_zero() || (f.a - f.b).is_zero() || f.d.is_zero()) continue;
    out.push_back(f);
  }
  return out;
}

}  // namespace

TEST(MakePair, RunningExample) {
  CurvePair c = make_pair(params(5, 8));
  EXPECT_EQ(c.e.alpha, Rational(260));
  EXPECT_EQ(c.e.beta, Rational(-5070));
  EXPECT_EQ(c.eprime.alpha, Rational(-520));
  EXPECT_EQ(c.eprime.beta, Rational(87880));
  Integer delta = ipow(Integer(2), 9) * 9 * 125 * ipow(Integer(13), 7);
  Integer delta_prime = -ipow(Integer(2), 15) * 3 * 125 * ipow(Integer(13), 8);
  EXPECT_EQ(c.delta, Rational(delta));
  EXPECT_EQ(c.delta_prime, Rational(delta_prime));
}

TEST(MakePair, Degenerate) {
  EXPECT_THROW(make_pair(params(1, 1)), DomainError);
  EXPECT_THROW(make_pair(params(0, 3)), DomainError);
  EXPECT_THROW(make_pair(params(2, -2)), DomainError);
  EXPECT_THROW(make_pair(params(2, 3, 0)), DomainError);
}

TEST(MakePair, PartnerIdentities) {
  for (const auto& f : random_params(200, 21)) {
    CurvePair c = make_pair(f);
    EXPECT_EQ(c.eprime.alpha, Rational(-2) * c.e.alpha);
    EXPECT_EQ(c.eprime.beta, c.e.alpha * c.e.alpha - Rational(4) * c.e.beta);
    EXPECT_EQ(c.delta, Rational(16) * c.e.beta * c.e.beta * (c.e.alpha * c.e.alpha - Rational(4) * c.e.beta));
    EXPECT_EQ(c.delta_prime, c.eprime.discriminant());
  }
}

TEST(GroupLaw, IdentityAndTwoTorsion) {
  CurvePair c = make_pair(params(5, 8));
  Point p = marked_point(Rational(5), Rational(8));
  EXPECT_EQ(add(c.e, p, Point::at_infinity()), p);
  EXPECT_EQ(add(c.e, Point::at_infinity(), p), p);
  Point t = Point::affine(Rational(0), Rational(0));
  EXPECT_TRUE(add(c.e, t, t).infinity);
  EXPECT_TRUE(add(c.e, p, negate(p)).infinity);
  EXPECT_THROW(add(c.e, Point::affine(Rational(1), Rational(1)), p), DomainError);
}

TEST(GroupLaw, DoublingMatchesTangentFormula) {
  CurvePair c = make_pair(params(5, 8));
  Point p = marked_point(Rational(5), Rational(8));
  Point two = add(c.e, p, p);
  EXPECT_EQ(two, double_by_hand(c.e, p));
  EXPECT_TRUE(on_curve(c.e, two));
  // x(2P) is a square: 2P lies in phi_hat(E'(Q))
  EXPECT_TRUE(square_class(two.x).is_identity());
}

TEST(GroupLaw, Associativity) {
  CurvePair c = make_pair(params(5, 8));
  Point p = marked_point(Rational(5), Rational(8));
  Point t = Point::affine(Rational(0), Rational(0));
  std::vector<Point> pts{p, add(c.e, p, p), add(c.e, p, t), multiply(c.e, p, 3), t};
  for (const auto& x : pts)
    for (const auto& y : pts)
      for (const auto& z : pts) EXPECT_EQ(add(c.e, add(c.e, x, y), z), add(c.e, x, add(c.e, y, z)));
}

TEST(Isogeny, RunningExample) {
  CurvePair c = make_pair(params(5, 8));
  EXPECT_TRUE(phi(c.e, c.eprime, Point::affine(Rational(0), Rational(0))).infinity);
  EXPECT_TRUE(phi(c.e, c.eprime, Point::at_infinity()).infinity);
  Point image = phi(c.e, c.eprime, Point::affine(Rational(-130), Rational(1690)));
  EXPECT_EQ(image, Point::affine(Rational(169), Rational(-2197)));
  EXPECT_TRUE(on_curve(c.eprime, image));
}

TEST(Isogeny, CompositionIsDoubling) {
  for (auto [a, b] : {std::pair{5L, 8L}, std::pair{3L, 8L}, std::pair{2L, 7L}, std::pair{1L, 4L}}) {
    CurvePair c = make_pair(params(a, b));
    Point p = marked_point(Rational(a), Rational(b));
    for (long k = 1; k <= 5; ++k) {
      Point kp = multiply(c.e, p, k);
      EXPECT_EQ(phi_hat(c.eprime, c.e, phi(c.e, c.eprime, kp)), multiply(c.e, kp, 2));
      Point q = phi(c.e, c.eprime, kp);
      EXPECT_EQ(phi(c.e, c.eprime, phi_hat(c.eprime, c.e, q)), multiply(c.eprime, q, 2));
    }
  }
}

TEST(Isogeny, Homomorphism) {
  CurvePair c = make_pair(params(5, 8));
  Point p = marked_point(Rational(5), Rational(8));
  Point t = Point::affine(Rational(0), Rational(0));
  std::vector<Point> pts{p, multiply(c.e, p, 2), add(c.e, p, t), multiply(c.e, p, -3)};
  for (const auto& x : pts)
    for (const auto& y : pts)
      EXPECT_EQ(phi(c.e, c.eprime, add(c.e, x, y)),
                add(c.eprime, phi(c.e, c.eprime, x), phi(c.e, c.eprime, y)));
}

TEST(MarkedPoint, Examples) {
  Point p = marked_point(Rational(5), Rational(8));
  EXPECT_EQ(p, Point::affine(Rational(-130), Rational(1690)));
  EXPECT_EQ(Rational(1690) * Rational(1690),
            Rational(-130).pow(3) + Rational(260) * Rational(-130).pow(2) - Rational(5070) * Rational(-130));
  EXPECT_EQ(marked_point(Rational(3), Rational(8)), Point::affine(Rational(-66), Rational(726)));
  EXPECT_THROW(marked_point(Rational(1), Rational(1)), DomainError);
}

TEST(MarkedPoint, AlwaysOnCurve) {
  for (const auto& f : random_params(200, 22)) {
    FamilyParams g{f.a, f.b, Rational(1)};
    EXPECT_TRUE(on_curve(make_pair(g).e, marked_point(g.a, g.b)));
  }
}

TEST(Torsion, Examples) {
  CurvePair c = make_pair(params(5, 8));
  EXPECT_TRUE(is_nontorsion(c.e, marked_point(Rational(5), Rational(8))));
  EXPECT_FALSE(is_nontorsion(c.e, Point::affine(Rational(0), Rational(0))));
  EXPECT_THROW(is_nontorsion(c.e, Point::at_infinity()), DomainError);
  auto m = small_multiples(c.e, marked_point(Rational(5), Rational(8)));
  ASSERT_EQ(m.size(), 11U);
  for (const auto& q : m) EXPECT_FALSE(q.infinity);
}

TEST(Torsion, RationalTwoTorsionIsOnlyOrigin) {
  // x^2 + alpha x + beta has a rational root iff beta' = alpha^2 - 4 beta is a square
  for (const auto& f : random_params(200, 23)) {
    CurvePair c = make_pair(f);
    bool square = square_class(c.eprime.beta).is_identity();
    EXPECT_EQ(square, square_class(Rational(8) * f.a * f.apb().pow(3) * f.d * f.d).is_identity());
    if (!square) {
      Integer disc_num = (c.eprime.beta.num() * c.eprime.beta.den());
      EXPECT_FALSE(disc_num >= 0 && mpz_perfect_square_p(disc_num.get_mpz_t()));
    }
  }
}

TEST(JInvariant, Examples) {
  EXPECT_EQ(j_invariant(Rational(5), Rational(8)), Rational(Integer(7529536), Integer(117)));
  EXPECT_EQ(j_invariant(Rational(1), Rational(2)), Rational(Integer(85184), Integer(3)));
  EXPECT_THROW(j_invariant(Rational(1), Rational(1)), DomainError);
  EXPECT_NE(j_invariant(Rational(5), Rational(8)), j_invariant(Rational(3), Rational(8)));
  EXPECT_EQ(j_invariant(Rational(3), Rational(8)), Rational(64 * 39 * 39 * 39) / Rational(25 * 11));
}

TEST(JInvariant, MatchesCurve) {
  for (const auto& f : random_params(100, 24)) {
    EXPECT_EQ(j_invariant(f.a, f.b), make_pair(f).e.j_invariant());
  }
}
