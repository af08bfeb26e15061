// Copyright 2026 The rankone Authors
//
// Licensed under the Apache License, Version 2.0 (see
// LICENSE or https://www.apache.org/licenses/LICENSE-2.0).
// This file may not be copied, modified, or distributed
// except according to those terms.

// Tate's algorithm over Q at an arbitrary prime (p = 2, 3 included):
// Kodaira symbol, Tamagawa number, minimal discriminant valuation.

#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "rankone/curvefam.hpp"
#include "rankone/exactnum.hpp"
#include "rankone/polymod.hpp"

namespace rk {

/// A valuation profile (v(a), v(a+b), v(a-b)) outside the supported table.
class UnsupportedProfile : public DomainError {
 public:
  using DomainError::DomainError;
};

using Profile = std::array<long, 3>;

inline std::string profile_str(const Profile& m) {
  return "(" + std::to_string(m[0]) + "," + std::to_string(m[1]) + "," + std::to_string(m[2]) + ")";
}

/// x = u^2 x' + r, y = u^3 y' + s u^2 x' + t.
struct CoordinateChange {
  Integer u{1}, r{0}, s{0}, t{0};
};

struct LocalReduction {
  Integer p;
  std::string kodaira;
  int tamagawa = 1;
  long v_min_disc = 0;
  long conductor_exponent = 0;
  std::optional<bool> split;  // present iff multiplicative
  std::array<Integer, 5> minimal_model;  // a1, a2, a3, a4, a6
  std::vector<CoordinateChange> changes;

  friend bool operator==(const LocalReduction& x, const LocalReduction& y) {
    return x.p == y.p && x.kodaira == y.kodaira && x.tamagawa == y.tamagawa && x.v_min_disc == y.v_min_disc &&
           x.split == y.split;
  }
};

namespace detail {

struct Model {
  Integer a1, a2, a3, a4, a6;

  Integer b2() const { return a1 * a1 + 4 * a2; }
  Integer b4() const { return 2 * a4 + a1 * a3; }
  Integer b6() const { return a3 * a3 + 4 * a6; }
  Integer b8() const { return a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4; }
  Integer c4() const { return b2() * b2() - 24 * b4(); }
  Integer c6() const { return -b2() * b2() * b2() + 36 * b2() * b4() - 216 * b6(); }
  Integer disc() const {
    Integer B2 = b2(), B4 = b4(), B6 = b6(), B8 = b8();
    return -B2 * B2 * B8 - 8 * B4 * B4 * B4 - 27 * B6 * B6 + 9 * B2 * B4 * B6;
  }

  // x = x' + r, y = y' + s x' + t
  void rst(const Integer& r, const Integer& s, const Integer& t) {
    Integer n1 = a1 + 2 * s;
    Integer n2 = a2 - s * a1 + 3 * r - s * s;
    Integer n3 = a3 + r * a1 + 2 * t;
    Integer n4 = a4 - s * a3 + 2 * r * a2 - (t + r * s) * a1 + 3 * r * r - 2 * s * t;
    Integer n6 = a6 + r * a4 + r * r * a2 + r * r * r - t * a3 - t * t - r * t * a1;
    a1 = n1; a2 = n2; a3 = n3; a4 = n4; a6 = n6;
  }
};

inline Integer exact_div(const Integer& a, const Integer& b) {
  Integer q;
  mpz_divexact(q.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return q;
}

class TateRunner {
 public:
  explicit TateRunner(Integer p) : p_(std::move(p)) {}

  bool pdiv(const Integer& x) const { return x == 0 || mpz_divisible_p(x.get_mpz_t(), p_.get_mpz_t()) != 0; }
  long pval(const Integer& x) const { return x == 0 ? 1'000'000 : valuation(x, p_); }
  Integer red(const Integer& x) const { return mod(x, p_); }
  Integer inv(const Integer& x) const { return invmod(red(x), p_); }

  // a x^2 + b x + c has a root in F_p
  bool quad_roots(const Integer& a, const Integer& b, const Integer& c) const {
    if (pdiv(a)) return !pdiv(b) || pdiv(c);
    if (p_ == 2) {
      return pdiv(c) || pdiv(a + b + c);
    }
    return kronecker(b * b - 4 * a * c, p_) != -1;
  }

  int cubic_roots(const Integer& b, const Integer& c, const Integer& d) const {
    return static_cast<int>(poly_roots(PolyFp(p_, {d, c, b, 1})).size());
  }

  void apply(Model& m, LocalReduction& out, const Integer& r, const Integer& s, const Integer& t) const {
    if (r == 0 && s == 0 && t == 0) return;
    m.rst(r, s, t);
    out.changes.push_back({1, r, s, t});
  }

  LocalReduction run(Model m) const {
    LocalReduction out;
    out.p = p_;
    const Integer& p = p_;
    Integer p2 = p * p, p3 = p2 * p, p4 = p3 * p, p6 = p4 * p2;
    Integer half = p == 2 ? Integer(0) : inv(2);
    for (int restarts = 0;; ++restarts) {
      if (restarts > 64) throw ConsistencyError("Tate's algorithm did not reach a minimal model");
      Integer delta = m.disc();
      if (delta == 0) throw DomainError("singular model in Tate's algorithm");
      long vd = pval(delta);
      auto finish = [&](std::string ks, int cp, long fexp) {
        out.kodaira = std::move(ks);
        out.tamagawa = cp;
        out.v_min_disc = vd;
        out.conductor_exponent = fexp;
        out.minimal_model = {m.a1, m.a2, m.a3, m.a4, m.a6};
        return out;
      };
      if (vd == 0) return finish("I0", 1, 0);

      // move the singular point to (0, 0)
      Integer r, t;
      Integer b2 = m.b2();
      if (p == 2) {
        if (pdiv(b2)) {
          r = red(m.a4);
          t = red(((r + m.a2) * r + m.a4) * r + m.a6);
        } else {
          r = red(m.a3);
          t = red(m.a4 + r * r);
        }
      } else if (p == 3) {
        r = pdiv(b2) ? red(-m.b6()) : red(-inv(b2) * m.b4());
        t = red(m.a1 * r + m.a3);
      } else {
        Integer c4 = m.c4();
        r = pdiv(c4) ? red(-inv(12) * b2) : red(-inv(12 * c4) * (m.c6() + b2 * c4));
        t = red(-half * (m.a1 * r + m.a3));
      }
      apply(m, out, r, 0, t);

      if (!pdiv(m.c4())) {
        bool split = quad_roots(1, m.a1, -m.a2);
        out.split = split;
        int cp = split ? static_cast<int>(vd) : (vd % 2 == 0 ? 2 : 1);
        return finish("I" + std::to_string(vd), cp, 1);
      }
      if (pval(m.a6) < 2) return finish("II", 1, vd);
      if (pval(m.b8()) < 3) return finish("III", 2, vd - 1);
      if (pval(m.b6()) < 3) {
        int cp = quad_roots(1, exact_div(m.a3, p), -exact_div(m.a6, p2)) ? 3 : 1;
        return finish("IV", cp, vd - 2);
      }

      // arrange p | a1, a2; p^2 | a3, a4; p^3 | a6
      Integer s;
      if (p == 2) {
        s = red(m.a2);
        t = 2 * red(exact_div(m.a6, 4));
      } else if (p == 3) {
        s = m.a1;
        t = m.a3;
      } else {
        s = red(-m.a1 * half);
        t = red(-m.a3 * half);
      }
      apply(m, out, 0, s, t);

      Integer b = exact_div(m.a2, p), c = exact_div(m.a4, p2), d = exact_div(m.a6, p3);
      Integer w = 27 * d * d - b * b * c * c + 4 * b * b * b * d - 18 * b * c * d + 4 * c * c * c;
      Integer x = 3 * c - b * b;
      int sw = pdiv(w) ? (pdiv(x) ? 3 : 2) : 1;
      if (sw == 1) return finish("I0*", 1 + cubic_roots(b, c, d), vd - 4);

      if (sw == 2) {
        // double root of the cubic moved to T = 0
        if (p == 2) r = red(c);
        else if (p == 3) r = red(c * inv(b));
        else r = red((b * c - 9 * d) * inv(2 * x));
        apply(m, out, p * r, 0, 0);
        int ix = 3, iy = 3;
        Integer mx = p2, my = p2;
        int cp = 0;
        for (;;) {
          Integer a2t = exact_div(m.a2, p), a3t = exact_div(m.a3, my);
          Integer a4t = exact_div(m.a4, p * mx), a6t = exact_div(m.a6, mx * my);
          if (!pdiv(a3t * a3t + 4 * a6t)) {
            cp = quad_roots(1, a3t, -a6t) ? 4 : 2;
            break;
          }
          Integer tt = p == 2 ? my * red(a6t) : my * red(-a3t * half);
          apply(m, out, 0, 0, tt);
          my *= p;
          ++iy;
          a2t = exact_div(m.a2, p);
          a3t = exact_div(m.a3, my);
          a4t = exact_div(m.a4, p * mx);
          a6t = exact_div(m.a6, mx * my);
          if (!pdiv(a4t * a4t - 4 * a6t * a2t)) {
            cp = quad_roots(a2t, a4t, a6t) ? 4 : 2;
            break;
          }
          Integer rr = p == 2 ? mx * red(a6t * inv(a2t)) : mx * red(-a4t * inv(2 * a2t));
          apply(m, out, rr, 0, 0);
          mx *= p;
          ++ix;
          if (ix + iy > 4000) throw ConsistencyError("I_n* loop failed to terminate");
        }
        long n = ix + iy - 5;
        return finish("I" + std::to_string(n) + "*", cp, vd - n - 4);
      }

      // triple root moved to T = 0
      if (p == 2) r = red(b);
      else if (p == 3) r = red(-d);
      else r = red(-b * inv(3));
      apply(m, out, p * r, 0, 0);
      Integer a3t = exact_div(m.a3, p2), a6t = exact_div(m.a6, p4);
      if (!pdiv(a3t * a3t + 4 * a6t)) {
        int cp = quad_roots(1, a3t, -a6t) ? 3 : 1;
        return finish("IV*", cp, vd - 6);
      }
      t = p == 2 ? Integer(-p2 * red(a6t)) : Integer(p2 * red(-a3t * half));
      apply(m, out, 0, 0, t);
      if (pval(m.a4) < 4) return finish("III*", 2, vd - 7);
      if (pval(m.a6) < 6) return finish("II*", 1, vd - 8);

      // the model was not minimal: scale by u = p
      m.a1 = exact_div(m.a1, p);
      m.a2 = exact_div(m.a2, p2);
      m.a3 = exact_div(m.a3, p3);
      m.a4 = exact_div(m.a4, p4);
      m.a6 = exact_div(m.a6, p6);
      out.changes.push_back({p, 0, 0, 0});
    }
  }

 private:
  Integer p_;
};

}  // namespace detail

/// Tate's algorithm at p for y^2 = x^3 + alpha x^2 + beta x (rational
/// coefficients; the model is first scaled to an integral one).
inline LocalReduction tate_at(const WeierstrassCurve& e, const Integer& p) {
  if (!is_prime(p)) throw DomainError("tate_at needs a prime, got " + to_string(p));
  Integer u = e.alpha.den() * e.beta.den();
  Integer u2 = u * u;
  Rational a2 = e.alpha * Rational(u2), a4 = e.beta * Rational(u2 * u2);
  if (!a2.is_integer() || !a4.is_integer()) throw ConsistencyError("integral scaling failed");
  detail::Model m{0, a2.num(), 0, a4.num(), 0};
  LocalReduction out = detail::TateRunner(p).run(m);
  if (u != 1) out.changes.insert(out.changes.begin(), CoordinateChange{u, 0, 0, 0});
  return out;
}

/// Reduction data predicted for the model E (is_prime_curve = false) or E'
/// (true) at an odd prime p not dividing d, from the valuation profile.
struct ExpectedReduction {
  std::string kodaira;
  int tamagawa;
  std::optional<bool> split;  // only where the prediction depends on it
};

inline ExpectedReduction expected_reduction(const Profile& m, bool d_square, bool minus2aab_d_square,
                                            bool partner_curve) {
  const Profile p000{0, 0, 0}, p001{0, 0, 1}, p100{1, 0, 0}, p010{0, 1, 0}, pm1{-1, 1, -1}, p020{0, 2, 0};
  if (m == p000) return {"I0", 1, std::nullopt};
  if (m == p001) return partner_curve ? ExpectedReduction{"I1", 1, std::nullopt} : ExpectedReduction{"I2", 2, std::nullopt};
  if (m == p100) return {"III", 2, std::nullopt};
  if (m == p010) {
    if (partner_curve) return {"I2*", 4, std::nullopt};
    return {"I1*", d_square ? 4 : 2, std::nullopt};
  }
  if (m == pm1 || m == p020) {
    if (!partner_curve) return {"I2", 2, std::nullopt};
    return {"I4", minus2aab_d_square ? 4 : 2, minus2aab_d_square};
  }
  throw UnsupportedProfile("no reduction prediction for profile " + profile_str(m));
}

}  // namespace rk
