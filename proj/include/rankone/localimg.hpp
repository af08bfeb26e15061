// Copyright 2026 The rankone Authors
//
// Licensed under the Apache License, Version 2.0 (see
// LICENSE or https://www.apache.org/licenses/LICENSE-2.0).
// This file may not be copied, modified, or distributed
// except according to those terms.

// Local images of the connecting maps in Q_v^*/(Q_v^*)^2, computed from the
// reduction table and, independently, by deciding local solvability of the
// quartic torsors c w^2 = c^2 z^4 + alpha c z^2 + beta.

#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "rankone/curvefam.hpp"
#include "rankone/exactnum.hpp"
#include "rankone/polymod.hpp"
#include "rankone/redtype.hpp"

namespace rk {

// ---------------------------------------------------------------------------
// Q_v^*/(Q_v^*)^2 as an F_2 vector space.
//   real : bit0 = negative
//   odd p: bit0 = v_p mod 2, bit1 = unit part a non-residue
//   p = 2: bit0 = v_2 mod 2, bit1 = (w-1)/2, bit2 = (w^2-1)/8 (w the odd part)

inline int local_dim(const Place& v) {
  if (v.is_real()) return 1;
  return v.p() == 2 ? 3 : 2;
}

namespace detail {

inline unsigned unit_bits(const Integer& w, const Integer& p) {
  if (p == 2) {
    unsigned r = static_cast<unsigned>(mod(w, Integer(8)).get_ui());
    unsigned b1 = (r == 3 || r == 7) ? 1U : 0U;
    unsigned b2 = (r == 3 || r == 5) ? 1U : 0U;
    return (b1 << 1) | (b2 << 2);
  }
  return kronecker(w, p) == -1 ? 2U : 0U;
}

}  // namespace detail

/// Coordinates of x in Q_v^*/(Q_v^*)^2.
inline unsigned local_bits(const Rational& x, const Place& v) {
  if (x.is_zero()) throw DomainError("local class of zero");
  if (v.is_real()) return x.sign() < 0 ? 1U : 0U;
  const Integer& p = v.p();
  auto [vn, un] = split_valuation(x.num(), p);
  auto [vd, ud] = split_valuation(x.den(), p);
  unsigned b0 = ((vn - vd) & 1) != 0 ? 1U : 0U;
  return b0 | detail::unit_bits(un * ud, p);
}

/// The local class of a prime l (or -1 when l = -1) without building a Rational.
inline unsigned local_bits_of_generator(const Integer& l, const Place& v) {
  return local_bits(Rational(l), v);
}

/// Canonical representative of a local class: 1, u, p, up (odd p),
/// +-1, +-5, +-2, +-10 (p = 2), +-1 (real).
inline Integer local_rep(unsigned bits, const Place& v) {
  if (v.is_real()) return (bits & 1U) != 0 ? Integer(-1) : Integer(1);
  const Integer& p = v.p();
  Integer r = 1;
  if (p == 2) {
    if (bits & 1U) r *= 2;
    if (bits & 2U) r = -r;
    if (bits & 4U) r *= 5;
    return r;
  }
  if (bits & 1U) r *= p;
  if (bits & 2U) r *= least_nonresidue(p);
  return r;
}

/// A subgroup of Q_v^*/(Q_v^*)^2, stored as its sorted element list.
class LocalImage {
 public:
  LocalImage() = default;
  LocalImage(Place v, std::vector<unsigned> elements) : place_(std::move(v)), elems_(std::move(elements)) {
    std::sort(elems_.begin(), elems_.end());
    elems_.erase(std::unique(elems_.begin(), elems_.end()), elems_.end());
  }

  static LocalImage trivial(const Place& v) { return LocalImage(v, {0}); }
  static LocalImage full(const Place& v) {
    std::vector<unsigned> all;
    for (unsigned i = 0; i < (1U << local_dim(v)); ++i) all.push_back(i);
    return LocalImage(v, all);
  }
  /// Span of the given classes.
  static LocalImage generated_by(const Place& v, const std::vector<unsigned>& gens) {
    std::vector<unsigned> span{0};
    for (unsigned g : gens) {
      if (std::find(span.begin(), span.end(), g) != span.end()) continue;
      std::size_t n = span.size();
      for (std::size_t i = 0; i < n; ++i) span.push_back(span[i] ^ g);
    }
    return LocalImage(v, span);
  }

  const Place& place() const { return place_; }
  const std::vector<unsigned>& elements() const { return elems_; }
  std::size_t order() const { return elems_.size(); }
  bool contains(unsigned bits) const { return std::binary_search(elems_.begin(), elems_.end(), bits); }

  bool is_subgroup() const {
    if (!contains(0)) return false;
    for (unsigned x : elems_)
      for (unsigned y : elems_)
        if (!contains(x ^ y)) return false;
    std::size_t n = elems_.size();
    return n != 0 && (n & (n - 1)) == 0;
  }

  /// A minimal generating set, greedy in increasing element order.
  std::vector<unsigned> generators() const {
    std::vector<unsigned> gens;
    std::vector<unsigned> span{0};
    for (unsigned x : elems_) {
      if (std::find(span.begin(), span.end(), x) != span.end()) continue;
      gens.push_back(x);
      std::size_t n = span.size();
      for (std::size_t i = 0; i < n; ++i) span.push_back(span[i] ^ x);
    }
    return gens;
  }

  /// Representatives of all elements (see local_rep).
  std::vector<Integer> representatives() const {
    std::vector<Integer> out;
    for (unsigned x : elems_) out.push_back(local_rep(x, place_));
    return out;
  }

  /// F_2 functionals on the local group vanishing exactly on this subgroup.
  std::vector<unsigned> annihilator() const {
    std::vector<unsigned> out;
    unsigned n = 1U << local_dim(place_);
    for (unsigned f = 1; f < n; ++f) {
      bool kills = true;
      for (unsigned x : elems_) {
        if (__builtin_popcount(f & x) & 1) {
          kills = false;
          break;
        }
      }
      if (kills) out.push_back(f);
    }
    return out;
  }

  friend bool operator==(const LocalImage& a, const LocalImage& b) {
    return a.place_ == b.place_ && a.elems_ == b.elems_;
  }

 private:
  Place place_ = Place::real();
  std::vector<unsigned> elems_;
};

// ---------------------------------------------------------------------------
// Local solvability of y^2 = f(t), f in Z[t], t ranging over Z_p.

namespace detail {

using IntPoly = std::vector<Integer>;  // low to high

inline Integer ieval(const IntPoly& f, const Integer& t) {
  Integer r = 0;
  for (auto it = f.rbegin(); it != f.rend(); ++it) r = r * t + *it;
  return r;
}

inline IntPoly iderivative(const IntPoly& f) {
  IntPoly d;
  for (std::size_t i = 1; i < f.size(); ++i) d.push_back(f[i] * static_cast<unsigned long>(i));
  return d;
}

// coefficients of f(t0 + k s) as a polynomial in s
inline IntPoly ishift(IntPoly f, const Integer& t0, const Integer& k) {
  std::size_t n = f.size();
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::size_t j = n - 1; j > i; --j) f[j - 1] += t0 * f[j];
  Integer kp = 1;
  for (auto& c : f) {
    c *= kp;
    kp *= k;
  }
  return f;
}

inline long content_valuation(const IntPoly& f, const Integer& p) {
  long v = -1;
  for (const auto& c : f) {
    if (c == 0) continue;
    long w = valuation(c, p);
    if (v < 0 || w < v) v = w;
  }
  return v;
}

inline IntPoly divide_content(IntPoly f, const Integer& p, long v) {
  Integer pv = ipow(p, static_cast<unsigned long>(v));
  for (auto& c : f) mpz_divexact(c.get_mpz_t(), c.get_mpz_t(), pv.get_mpz_t());
  return f;
}

/// Residue fields at least this large use root finding and the Weil bound
/// instead of enumerating residues.
inline constexpr unsigned long kAlgebraicResidueBound = 1000;
inline constexpr int kMaxSolverDepth = 400;

class SquareValueSolver {
 public:
  SquareValueSolver(Integer p, bool force_enumeration = false)
      : p_(std::move(p)), enumerate_(force_enumeration || p_ < kAlgebraicResidueBound) {}

  /// Does p^m f(t) take a nonzero square value (or the value 0) for some t in Z_p?
  bool solvable(const IntPoly& f) const {
    long v = content_valuation(f, p_);
    if (v < 0) return true;  // identically zero
    return node(divide_content(f, p_, v), v, 0);
  }

 private:
  bool node(const IntPoly& h, long m, int depth) const {
    if (depth > kMaxSolverDepth) throw ConsistencyError("local solvability recursion too deep at p = " + to_string(p_));
    if (p_ == 2) return node2(h, m, depth);
    if (enumerate_) return node_enum(h, m, depth);
    return node_alg(h, m, depth);
  }

  bool recurse(const IntPoly& h, const Integer& t0, const Integer& step, long m, int depth) const {
    IntPoly g = ishift(h, t0, step);
    long c = content_valuation(g, p_);
    if (c < 0) return true;
    return node(divide_content(std::move(g), p_, c), m + c, depth + 1);
  }

  bool node2(const IntPoly& h, long m, int depth) const {
    const Integer eight = 8;
    IntPoly dh = iderivative(h);
    for (unsigned long t0 = 0; t0 < 8; ++t0) {
      Integer val = ieval(h, t0);
      if (val == 0) return true;
      if (mpz_odd_p(val.get_mpz_t())) {
        if (m % 2 == 0 && mod(val, eight) == 1) return true;
        continue;
      }
      auto [vv, unit] = split_valuation(val, Integer(2));
      if ((m + vv) % 2 == 0 && mod(unit, eight) == 1) return true;
      Integer dv = ieval(dh, t0);
      if (dv != 0 && vv > 2 * valuation(dv, Integer(2))) return true;  // Hensel: a root of h
      if (recurse(h, t0, eight, m, depth)) return true;
    }
    return false;
  }

  bool node_enum(const IntPoly& h, long m, int depth) const {
    IntPoly dh = iderivative(h);
    unsigned long p = p_.get_ui();
    std::vector<unsigned long> multiple_roots;
    for (unsigned long t0 = 0; t0 < p; ++t0) {
      Integer val = mod(ieval(h, t0), p_);
      if (val != 0) {
        if (m % 2 == 0 && kronecker(val, p_) == 1) return true;
        continue;
      }
      if (mod(ieval(dh, t0), p_) != 0) return true;  // simple root lifts
      multiple_roots.push_back(t0);
    }
    for (unsigned long t0 : multiple_roots)
      if (recurse(h, t0, p_, m, depth)) return true;
    return false;
  }

  bool node_alg(const IntPoly& h, long m, int depth) const {
    PolyFp hb(p_, h);
    if (hb.is_zero()) throw ConsistencyError("primitive polynomial vanished mod p");
    if (m % 2 == 0 && has_nonzero_residue_value(hb)) return true;
    if (hb.degree() <= 0) return false;
    PolyFp dhb = hb.derivative();
    std::vector<Integer> multiple_roots;
    for (const auto& r : poly_roots(hb)) {
      if (dhb.eval(r) != 0) return true;
      multiple_roots.push_back(r);
    }
    for (const auto& r : multiple_roots)
      if (recurse(h, r, p_, m, depth)) return true;
    return false;
  }

  // Is there t in F_p with hb(t) a nonzero square?  For hb not a constant
  // times a square, |sum chi(hb(t))| <= (deg - 1) sqrt(p) guarantees one.
  bool has_nonzero_residue_value(const PolyFp& hb) const {
    if (hb.degree() == 0) return kronecker(hb.coeff(0), p_) == 1;
    if (poly_constant_times_square(hb)) return kronecker(hb.lead(), p_) == 1;
    return true;
  }

  Integer p_;
  bool enumerate_;
};

// Clear denominators by a square factor.
inline IntPoly integral_by_square(const std::vector<Rational>& coeffs) {
  Integer l = 1;
  for (const auto& c : coeffs) {
    Integer d = c.den();
    l = l / gcd(l, d) * d;
  }
  Rational sq(l * l);
  IntPoly out;
  for (const auto& c : coeffs) {
    Rational x = c * sq;
    if (!x.is_integer()) throw ConsistencyError("square scaling left a denominator");
    out.push_back(x.num());
  }
  return out;
}

}  // namespace detail

/// True iff the class of c lies in the image of the connecting map of the
/// curve y^2 = x^3 + alpha x^2 + beta x (i.e. the torsor
/// c w^2 = c^2 z^4 + alpha c z^2 + beta has a Q_v-point).
/// `force_enumeration` disables the large-residue-field shortcut (testing).
inline bool torsor_solvable(const Rational& c, const Rational& alpha, const Rational& beta, const Place& v,
                            bool force_enumeration = false) {
  if (c.is_zero() || beta.is_zero()) throw DomainError("torsor_solvable needs nonzero c and beta");
  if (is_local_square(c, v)) return true;
  if (is_local_square(c * beta, v)) return true;  // image of (0,0)
  if (v.is_real()) {
    // c < 0 here: need Y^2 + alpha Y + beta <= 0 for some Y <= 0
    if (beta.sign() < 0) return true;
    return alpha.sign() > 0 && (alpha * alpha - Rational(4) * beta).sign() >= 0;
  }
  const Integer& p = v.p();
  // (c w)^2 = c^3 z^4 + alpha c^2 z^2 + beta c, z in Z_p; and 1/z in pZ_p
  Rational c2 = c * c, c3 = c2 * c;
  Rational p2(p * p);
  detail::IntPoly chart1 = detail::integral_by_square({beta * c, 0, alpha * c2, 0, c3});
  detail::IntPoly chart2 = detail::integral_by_square({c3, 0, alpha * c2 * p2, 0, beta * c * p2 * p2});
  detail::SquareValueSolver solver(p, force_enumeration);
  return solver.solvable(chart1) || solver.solvable(chart2);
}

/// The image of the connecting map of y^2 = x^3 + alpha x^2 + beta x at v,
/// by testing every local class.
inline LocalImage image_bruteforce_curve(const Rational& alpha, const Rational& beta, const Place& v,
                                         bool force_enumeration = false) {
  std::vector<unsigned> elems;
  for (unsigned bits = 0; bits < (1U << local_dim(v)); ++bits) {
    Rational c(local_rep(bits, v));
    if (torsor_solvable(c, alpha, beta, v, force_enumeration)) elems.push_back(bits);
  }
  LocalImage img(v, elems);
  if (!img.is_subgroup()) throw ConsistencyError("computed local image at " + v.str() + " is not a subgroup");
  if (!img.contains(local_bits(beta, v))) throw ConsistencyError("local image misses the class of beta");
  return img;
}

/// Image of delta_{d,v} : E'_d(Q_v) -> Q_v^*/(Q_v^*)^2 by brute force.
inline LocalImage image_bruteforce(const FamilyParams& f, const Place& v) {
  f.validate();
  return image_bruteforce_curve(f.alpha_prime(), f.beta_prime(), v);
}

/// Image of the dual connecting map E_d(Q_v) -> Q_v^*/(Q_v^*)^2.
inline LocalImage image_bruteforce_dual(const FamilyParams& f, const Place& v) {
  f.validate();
  return image_bruteforce_curve(f.alpha(), f.beta(), v);
}

inline Profile valuation_profile(const FamilyParams& f, const Integer& p) {
  f.validate();
  return {valuation(f.a, p), valuation(f.apb(), p), valuation(f.amb(), p)};
}

/// The image of delta_{d,p} predicted from the profile, for odd p with v_p(d) = 0.
inline LocalImage image_formula(const FamilyParams& f, const Integer& p) {
  f.validate();
  if (p == 2) throw UnsupportedProfile("no image formula at p = 2");
  if (valuation(f.d, p) != 0) throw UnsupportedProfile("no image formula when p divides d");
  Place v = Place::prime(p);
  Profile m = valuation_profile(f, p);
  unsigned unit_nonres = 2U;
  unsigned c0 = local_bits(Rational(2) * f.a * f.apb(), v);  // delta((0,0))
  const Profile p000{0, 0, 0}, p001{0, 0, 1}, p100{1, 0, 0}, p010{0, 1, 0}, pm1{-1, 1, -1}, p020{0, 2, 0};
  if (m == p000) return LocalImage::generated_by(v, {unit_nonres});
  if (m == p001) return LocalImage::trivial(v);
  if (m == p100) {
    LocalImage img = LocalImage::generated_by(v, {c0});
    if (img == LocalImage::generated_by(v, {unit_nonres})) throw ConsistencyError("profile (1,0,0) image is the unit group");
    return img;
  }
  if (m == p010) {
    if (is_local_square(f.d, v)) return LocalImage::generated_by(v, {c0});
    return LocalImage::full(v);
  }
  if (m == pm1 || m == p020) {
    if (is_local_square(Rational(-2) * f.a * f.apb() * f.d, v)) return LocalImage::full(v);
    return LocalImage::generated_by(v, {c0 != 0 ? c0 : unit_nonres});
  }
  throw UnsupportedProfile("no image formula for profile " + profile_str(m) + " at p = " + to_string(p));
}

/// Whether image_formula covers (f, v).
inline bool image_formula_applies(const FamilyParams& f, const Place& v) {
  if (v.is_real() || v.p() == 2 || valuation(f.d, v.p()) != 0) return false;
  Profile m = valuation_profile(f, v.p());
  static const std::vector<Profile> table{{0, 0, 0}, {0, 0, 1}, {1, 0, 0}, {0, 1, 0}, {-1, 1, -1}, {0, 2, 0}};
  return std::find(table.begin(), table.end(), m) != table.end();
}

/// The image of delta_{d,v}: the formula where it applies, brute force otherwise.
inline LocalImage local_image(const FamilyParams& f, const Place& v) {
  return image_formula_applies(f, v) ? image_formula(f, v.p()) : image_bruteforce(f, v);
}

/// (1/2) |Im delta_{d,v}|.
inline Rational local_factor(const FamilyParams& f, const Place& v) {
  return Rational(static_cast<long>(local_image(f, v).order()), Integer(2));
}

}  // namespace rk
