// Copyright 2026 The rankone Authors
//
// Licensed under the Apache License, Version 2.0 (see
// LICENSE or https://www.apache.org/licenses/LICENSE-2.0).
// This file may not be copied, modified, or distributed
// except according to those terms.

// Low-degree polynomials over F_p for arbitrary-size primes p: arithmetic,
// gcd, roots (Cantor-Zassenhaus splitting) and the "constant times a square"
// test used by the local solvability code.

#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "rankone/exactnum.hpp"

namespace rk {

/// Coefficients low to high, each reduced into [0, p), no trailing zeros.
class PolyFp {
 public:
  PolyFp(Integer p, std::vector<Integer> coeffs) : p_(std::move(p)), c_(std::move(coeffs)) { normalize(); }
  explicit PolyFp(Integer p) : p_(std::move(p)) {}

  static PolyFp monomial(const Integer& p, std::size_t deg, const Integer& coeff = 1) {
    std::vector<Integer> c(deg + 1, 0);
    c[deg] = coeff;
    return PolyFp(p, std::move(c));
  }

  const Integer& prime() const { return p_; }
  const std::vector<Integer>& coeffs() const { return c_; }
  bool is_zero() const { return c_.empty(); }
  long degree() const { return static_cast<long>(c_.size()) - 1; }
  const Integer& lead() const { return c_.back(); }
  Integer coeff(std::size_t i) const { return i < c_.size() ? c_[i] : Integer(0); }

  Integer eval(const Integer& x) const {
    Integer r = 0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) r = mod(r * x + *it, p_);
    return r;
  }

  PolyFp derivative() const {
    std::vector<Integer> d;
    for (std::size_t i = 1; i < c_.size(); ++i) d.push_back(c_[i] * static_cast<unsigned long>(i));
    return PolyFp(p_, std::move(d));
  }

  PolyFp monic() const {
    if (is_zero()) return *this;
    Integer inv = invmod(lead(), p_);
    std::vector<Integer> c = c_;
    for (auto& x : c) x *= inv;
    return PolyFp(p_, std::move(c));
  }

  friend PolyFp operator+(const PolyFp& a, const PolyFp& b) {
    std::vector<Integer> c(std::max(a.c_.size(), b.c_.size()), 0);
    for (std::size_t i = 0; i < a.c_.size(); ++i) c[i] += a.c_[i];
    for (std::size_t i = 0; i < b.c_.size(); ++i) c[i] += b.c_[i];
    return PolyFp(a.p_, std::move(c));
  }
  friend PolyFp operator-(const PolyFp& a, const PolyFp& b) {
    std::vector<Integer> c(std::max(a.c_.size(), b.c_.size()), 0);
    for (std::size_t i = 0; i < a.c_.size(); ++i) c[i] += a.c_[i];
    for (std::size_t i = 0; i < b.c_.size(); ++i) c[i] -= b.c_[i];
    return PolyFp(a.p_, std::move(c));
  }
  friend PolyFp operator*(const PolyFp& a, const PolyFp& b) {
    if (a.is_zero() || b.is_zero()) return PolyFp(a.p_);
    std::vector<Integer> c(a.c_.size() + b.c_.size() - 1, 0);
    for (std::size_t i = 0; i < a.c_.size(); ++i)
      for (std::size_t j = 0; j < b.c_.size(); ++j) c[i + j] += a.c_[i] * b.c_[j];
    return PolyFp(a.p_, std::move(c));
  }
  friend bool operator==(const PolyFp& a, const PolyFp& b) { return a.p_ == b.p_ && a.c_ == b.c_; }

  /// Quotient and remainder; b must be nonzero.
  static std::pair<PolyFp, PolyFp> divmod(const PolyFp& a, const PolyFp& b) {
    if (b.is_zero()) throw DomainError("polynomial division by zero");
    const Integer& p = a.p_;
    std::vector<Integer> r = a.c_;
    long db = b.degree();
    if (a.degree() < db) return {PolyFp(p), a};
    std::vector<Integer> q(static_cast<std::size_t>(a.degree() - db + 1), 0);
    Integer inv = invmod(b.lead(), p);
    for (long k = a.degree() - db; k >= 0; --k) {
      Integer t = mod(r[static_cast<std::size_t>(k + db)] * inv, p);
      q[static_cast<std::size_t>(k)] = t;
      if (t == 0) continue;
      for (long j = 0; j <= db; ++j) {
        auto& slot = r[static_cast<std::size_t>(k + j)];
        slot = mod(slot - t * b.c_[static_cast<std::size_t>(j)], p);
      }
    }
    return {PolyFp(p, std::move(q)), PolyFp(p, std::move(r))};
  }
  friend PolyFp operator%(const PolyFp& a, const PolyFp& b) { return divmod(a, b).second; }
  friend PolyFp operator/(const PolyFp& a, const PolyFp& b) { return divmod(a, b).first; }

 private:
  void normalize() {
    for (auto& x : c_) x = mod(x, p_);
    while (!c_.empty() && c_.back() == 0) c_.pop_back();
  }

  Integer p_;
  std::vector<Integer> c_;
};

/// Monic gcd (zero if both are zero).
inline PolyFp poly_gcd(PolyFp a, PolyFp b) {
  while (!b.is_zero()) {
    PolyFp r = a % b;
    a = std::move(b);
    b = std::move(r);
  }
  return a.monic();
}

/// base^e mod m.
inline PolyFp poly_powmod(const PolyFp& base, Integer e, const PolyFp& m) {
  PolyFp result(m.prime(), {1});
  result = result % m;
  PolyFp b = base % m;
  while (e > 0) {
    if (mpz_odd_p(e.get_mpz_t())) result = (result * b) % m;
    e >>= 1;
    if (e > 0) b = (b * b) % m;
  }
  return result;
}

namespace detail {

inline constexpr unsigned long kEnumerateRootsBelow = 2000;

// f monic, squarefree, product of distinct linear factors over F_p.
inline void split_linear(const PolyFp& f, std::vector<Integer>& out) {
  const Integer& p = f.prime();
  if (f.degree() <= 0) return;
  if (f.degree() == 1) {
    out.push_back(mod(-f.coeff(0), p));
    return;
  }
  if (p == 2) {
    for (int x = 0; x < 2; ++x)
      if (f.eval(x) == 0) out.push_back(x);
    return;
  }
  Integer half = (p - 1) / 2;
  for (Integer shift = 0;; ++shift) {
    PolyFp lin(p, {shift, 1});
    PolyFp w = poly_powmod(lin, half, f) - PolyFp(p, {1});
    PolyFp g = poly_gcd(f, w);
    if (g.degree() > 0 && g.degree() < f.degree()) {
      split_linear(g, out);
      split_linear(f / g, out);
      return;
    }
  }
}

}  // namespace detail

/// Distinct roots of f in F_p, ascending. f must be nonzero.
inline std::vector<Integer> poly_roots(const PolyFp& f) {
  if (f.is_zero()) throw DomainError("roots of the zero polynomial");
  const Integer& p = f.prime();
  std::vector<Integer> out;
  if (f.degree() <= 0) return out;
  if (p < detail::kEnumerateRootsBelow) {
    for (unsigned long x = 0; x < p.get_ui(); ++x)
      if (f.eval(x) == 0) out.push_back(x);
    return out;
  }
  PolyFp fm = f.monic();
  PolyFp xp = poly_powmod(PolyFp(p, {0, 1}), p, fm);
  PolyFp g = poly_gcd(fm, xp - PolyFp(p, {0, 1}));
  detail::split_linear(g, out);
  std::sort(out.begin(), out.end());
  return out;
}

/// Multiplicity of r as a root of f (0 if not a root).
inline int root_multiplicity(PolyFp f, const Integer& r) {
  int m = 0;
  PolyFp lin(f.prime(), {Integer(-r), 1});
  while (!f.is_zero() && f.degree() > 0 && f.eval(r) == 0) {
    f = f / lin;
    ++m;
  }
  return m;
}

/// If f = lambda * s^2 with s monic, returns s; p must be odd.
/// Monic square roots are unique, found top-down from the leading terms.
inline bool poly_constant_times_square(const PolyFp& f, PolyFp* root = nullptr) {
  const Integer& p = f.prime();
  if (f.is_zero()) return false;
  if (f.degree() % 2 != 0) return false;
  PolyFp g = f.monic();
  auto k = static_cast<std::size_t>(g.degree() / 2);
  std::vector<Integer> s(k + 1, 0);
  s[k] = 1;
  Integer inv2 = invmod(Integer(2), p);
  // coefficient of x^(k + i) in s^2 is 2 s_i plus products of s_j, i < j < k
  for (std::size_t idx = 1; idx <= k; ++idx) {
    std::size_t i = k - idx;
    Integer acc = g.coeff(k + i);
    for (std::size_t j = i + 1; j < k; ++j) acc -= s[j] * s[k + i - j];
    s[i] = mod(acc * inv2, p);
  }
  PolyFp sp(p, s);
  if (!(sp * sp == g)) return false;
  if (root) *root = sp;
  return true;
}

}  // namespace rk
