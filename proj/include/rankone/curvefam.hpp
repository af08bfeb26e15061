// Copyright 2026 The rankone Authors
//
// Licensed under the Apache License, Version 2.0 (see
// LICENSE or https://www.apache.org/licenses/LICENSE-2.0).
// This file may not be copied, modified, or distributed
// except according to those terms.

// The two-parameter family y^2 = x^3 + 4a(a+b)d x^2 + 2a(a+b)^2(a-b)d^2 x,
// its 2-isogenous partner, the chord-tangent law, both isogenies and the
// marked point.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rankone/exactnum.hpp"

namespace rk {

/// y^2 = x^3 + alpha x^2 + beta x.
struct WeierstrassCurve {
  Rational alpha;
  Rational beta;

  WeierstrassCurve() = default;
  WeierstrassCurve(Rational a, Rational b) : alpha(std::move(a)), beta(std::move(b)) {
    if (discriminant().is_zero()) throw DomainError("singular curve y^2 = x^3 + " + alpha.str() + "x^2 + " + beta.str() + "x");
  }

  Rational discriminant() const { return Rational(16) * beta * beta * (alpha * alpha - Rational(4) * beta); }
  Rational j_invariant() const {
    Rational t = alpha * alpha - Rational(3) * beta;
    return Rational(256) * t * t * t / (beta * beta * (alpha * alpha - Rational(4) * beta));
  }
  /// Quadratic twist by d: y^2 = x^3 + d alpha x^2 + d^2 beta x.
  WeierstrassCurve twist(const Rational& d) const { return {alpha * d, beta * d * d}; }

  friend bool operator==(const WeierstrassCurve& a, const WeierstrassCurve& b) {
    return a.alpha == b.alpha && a.beta == b.beta;
  }
};

struct Point {
  bool infinity = true;
  Rational x;
  Rational y;

  static Point at_infinity() { return {}; }
  static Point affine(Rational x, Rational y) { return {false, std::move(x), std::move(y)}; }
  bool is_two_torsion_origin() const { return !infinity && x.is_zero() && y.is_zero(); }

  friend bool operator==(const Point& a, const Point& b) {
    if (a.infinity || b.infinity) return a.infinity == b.infinity;
    return a.x == b.x && a.y == b.y;
  }
};

inline bool on_curve(const WeierstrassCurve& e, const Point& p) {
  if (p.infinity) return true;
  return p.y * p.y == p.x * p.x * p.x + e.alpha * p.x * p.x + e.beta * p.x;
}

inline void require_on_curve(const WeierstrassCurve& e, const Point& p) {
  if (!on_curve(e, p)) throw DomainError("point (" + p.x.str() + ", " + p.y.str() + ") is not on the curve");
}

struct FamilyParams {
  Rational a;
  Rational b;
  Rational d{1};

  void validate() const {
    if (a.is_zero() || b.is_zero() || (a + b).is_zero() || (a - b).is_zero()) {
      throw DomainError("degenerate family parameters: need a*b*(a+b)*(a-b) != 0");
    }
    if (d.is_zero()) throw DomainError("twist parameter d must be nonzero");
  }

  Rational apb() const { return a + b; }
  Rational amb() const { return a - b; }
  Rational alpha() const { return Rational(4) * a * apb() * d; }
  Rational beta() const { return Rational(2) * a * apb() * apb() * amb() * d * d; }
  Rational alpha_prime() const { return Rational(-8) * a * apb() * d; }
  Rational beta_prime() const { return Rational(8) * a * apb().pow(3) * d * d; }
};

struct CurvePair {
  WeierstrassCurve e;
  WeierstrassCurve eprime;
  Rational delta;
  Rational delta_prime;
};

inline CurvePair make_pair(const FamilyParams& f) {
  f.validate();
  CurvePair r;
  r.e = WeierstrassCurve(f.alpha(), f.beta());
  r.eprime = WeierstrassCurve(f.alpha_prime(), f.beta_prime());
  const Rational& a = f.a;
  Rational s = f.apb(), t = f.amb(), d6 = f.d.pow(6);
  r.delta = Rational(512) * a.pow(3) * s.pow(7) * t * t * d6;
  r.delta_prime = Rational(32768) * a.pow(3) * s.pow(8) * t * d6;
  if (!(r.eprime.alpha == Rational(-2) * r.e.alpha) ||
      !(r.eprime.beta == r.e.alpha * r.e.alpha - Rational(4) * r.e.beta)) {
    throw ConsistencyError("isogenous partner coefficients disagree");
  }
  if (!(r.delta == r.e.discriminant()) || !(r.delta_prime == r.eprime.discriminant())) {
    throw ConsistencyError("closed-form discriminants disagree with 16 beta^2 (alpha^2 - 4 beta)");
  }
  return r;
}

inline Point negate(const Point& p) {
  if (p.infinity) return p;
  return Point::affine(p.x, -p.y);
}

inline Point add(const WeierstrassCurve& e, const Point& p, const Point& q) {
  require_on_curve(e, p);
  require_on_curve(e, q);
  if (p.infinity) return q;
  if (q.infinity) return p;
  Rational lambda;
  if (p.x == q.x) {
    if ((p.y + q.y).is_zero()) return Point::at_infinity();
    lambda = (Rational(3) * p.x * p.x + Rational(2) * e.alpha * p.x + e.beta) / (Rational(2) * p.y);
  } else {
    lambda = (q.y - p.y) / (q.x - p.x);
  }
  Rational x3 = lambda * lambda - e.alpha - p.x - q.x;
  Rational y3 = -(p.y + lambda * (x3 - p.x));
  return Point::affine(x3, y3);
}

/// n P by double-and-add; n may be negative.
inline Point multiply(const WeierstrassCurve& e, Point p, long n) {
  require_on_curve(e, p);
  if (n < 0) {
    p = negate(p);
    n = -n;
  }
  Point r = Point::at_infinity();
  while (n > 0) {
    if (n & 1) r = add(e, r, p);
    n >>= 1;
    if (n > 0) p = add(e, p, p);
  }
  return r;
}

/// 2nd..12th multiples of P; their pairwise non-vanishing proves infinite order.
inline std::vector<Point> small_multiples(const WeierstrassCurve& e, const Point& p) {
  std::vector<Point> out;
  Point acc = p;
  for (int k = 2; k <= 12; ++k) {
    acc = add(e, acc, p);
    out.push_back(acc);
  }
  return out;
}

/// P has infinite order iff kP != O for 2 <= k <= 12 (torsion orders over Q are at most 12).
inline bool is_nontorsion(const WeierstrassCurve& e, const Point& p) {
  require_on_curve(e, p);
  if (p.infinity) throw DomainError("is_nontorsion of the identity");
  for (const auto& m : small_multiples(e, p)) {
    if (m.infinity) return false;
  }
  return true;
}

/// phi : E -> E', (x, y) -> (y^2/x^2, y(beta - x^2)/x^2); kernel {O, (0,0)}.
inline Point phi(const WeierstrassCurve& e, const WeierstrassCurve& eprime, const Point& p) {
  require_on_curve(e, p);
  if (p.infinity || p.x.is_zero()) return Point::at_infinity();
  Rational x2 = p.x * p.x;
  Point r = Point::affine(p.y * p.y / x2, p.y * (e.beta - x2) / x2);
  if (!on_curve(eprime, r)) throw ConsistencyError("phi image is off the partner curve");
  return r;
}

/// The dual isogeny E' -> E, (x, y) -> (y^2/(4x^2), y(beta' - x^2)/(8x^2)).
inline Point phi_hat(const WeierstrassCurve& eprime, const WeierstrassCurve& e, const Point& p) {
  require_on_curve(eprime, p);
  if (p.infinity || p.x.is_zero()) return Point::at_infinity();
  Rational x2 = p.x * p.x;
  Point r = Point::affine(p.y * p.y / (Rational(4) * x2), p.y * (eprime.beta - x2) / (Rational(8) * x2));
  if (!on_curve(e, r)) throw ConsistencyError("dual isogeny image is off the curve");
  return r;
}

/// (-2a(a+b), 2a(a+b)^2) on E_{a,b,1}.
inline Point marked_point(const Rational& a, const Rational& b) {
  FamilyParams f{a, b, Rational(1)};
  f.validate();
  Rational s = a + b;
  Point p = Point::affine(Rational(-2) * a * s, Rational(2) * a * s * s);
  require_on_curve(WeierstrassCurve(f.alpha(), f.beta()), p);
  return p;
}

/// 64 (5a+3b)^3 / ((a-b)^2 (a+b)).
inline Rational j_invariant(const Rational& a, const Rational& b) {
  Rational s = a + b, t = a - b;
  if (s.is_zero() || t.is_zero()) throw DomainError("j-invariant undefined when (a-b)(a+b) = 0");
  return Rational(64) * (Rational(5) * a + Rational(3) * b).pow(3) / (t * t * s);
}

}  // namespace rk
