// Copyright 2026 The rankone Authors
//
// Licensed under the Apache License, Version 2.0 (see
// LICENSE or https://www.apache.org/licenses/LICENSE-2.0).
// This file may not be copied, modified, or distributed
// except according to those terms.

// Exact arithmetic substrate: integers, rationals, valuations, Kronecker
// symbols, primality and local square tests over Q.

#pragma once

#include <gmpxx.h>

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rk {

using Integer = mpz_class;

/// Raised when an operation is asked for a value it does not define
/// (valuation of zero, singular curve, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when an internal cross-check fails; always a bug, never bad input.
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline Integer parse_integer(std::string_view s) {
  Integer z;
  std::string tmp(s);
  if (!tmp.empty() && tmp.front() == '+') tmp.erase(0, 1);
  if (tmp.empty() || z.set_str(tmp, 10) != 0) {
    throw std::invalid_argument("not a decimal integer: '" + std::string(s) + "'");
  }
  return z;
}

inline std::string to_string(const Integer& z) { return z.get_str(10); }

// Always canonical: den > 0, gcd(|num|, den) = 1, zero is 0/1.
class Rational {
 public:
  Rational() = default;
  Rational(long n) : q_(n) {}  // NOLINT(google-explicit-constructor)
  Rational(const Integer& n) : q_(n) {}  // NOLINT(google-explicit-constructor)
  // integer-valued gmpxx expression templates, e.g. Rational(p * p)
  template <class T>
  Rational(const __gmp_expr<mpz_t, T>& e) : q_(mpz_class(e)) {}  // NOLINT(google-explicit-constructor)
  Rational(const Integer& n, const Integer& d) {
    if (d == 0) throw DomainError("rational with zero denominator");
    q_ = mpq_class(n, d);
    q_.canonicalize();
  }
  explicit Rational(const mpq_class& q) : q_(q) { q_.canonicalize(); }

  /// Accepts "n" or "n/d" in decimal.
  static Rational parse(std::string_view s) {
    auto slash = s.find('/');
    if (slash == std::string_view::npos) return Rational(parse_integer(s));
    return Rational(parse_integer(s.substr(0, slash)), parse_integer(s.substr(slash + 1)));
  }

  Integer num() const { return q_.get_num(); }
  Integer den() const { return q_.get_den(); }
  const mpq_class& raw() const { return q_; }

  bool is_zero() const { return sgn(q_) == 0; }
  int sign() const { return sgn(q_); }
  bool is_integer() const { return q_.get_den() == 1; }

  std::string str() const { return q_.get_str(10); }

  Rational operator-() const { return Rational(mpq_class(-q_)); }
  Rational& operator+=(const Rational& o) { q_ += o.q_; return *this; }
  Rational& operator-=(const Rational& o) { q_ -= o.q_; return *this; }
  Rational& operator*=(const Rational& o) { q_ *= o.q_; return *this; }
  Rational& operator/=(const Rational& o) {
    if (o.is_zero()) throw DomainError("division by zero");
    q_ /= o.q_;
    return *this;
  }
  friend Rational operator+(Rational a, const Rational& b) { return a += b; }
  friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
  friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
  friend Rational operator/(Rational a, const Rational& b) { return a /= b; }

  friend bool operator==(const Rational& a, const Rational& b) { return a.q_ == b.q_; }
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    int c = cmp(a.q_, b.q_);
    return c < 0 ? std::strong_ordering::less
                 : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

  Rational pow(unsigned e) const {
    mpz_class n, d;
    mpz_pow_ui(n.get_mpz_t(), q_.get_num_mpz_t(), e);
    mpz_pow_ui(d.get_mpz_t(), q_.get_den_mpz_t(), e);
    return Rational(n, d);
  }

 private:
  mpq_class q_{0};
};

inline Integer ipow(const Integer& b, unsigned long e) {
  Integer r;
  mpz_pow_ui(r.get_mpz_t(), b.get_mpz_t(), e);
  return r;
}

inline Integer mod(const Integer& a, const Integer& m) {
  Integer r;
  mpz_mod(r.get_mpz_t(), a.get_mpz_t(), m.get_mpz_t());
  return r;
}

inline Integer gcd(const Integer& a, const Integer& b) {
  Integer r;
  mpz_gcd(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return r;
}

/// Inverse of a modulo m; throws if not invertible.
inline Integer invmod(const Integer& a, const Integer& m) {
  Integer r;
  if (mpz_invert(r.get_mpz_t(), a.get_mpz_t(), m.get_mpz_t()) == 0) {
    throw DomainError("no inverse of " + to_string(a) + " mod " + to_string(m));
  }
  return r;
}

inline Integer powmod(const Integer& b, const Integer& e, const Integer& m) {
  Integer r;
  mpz_powm(r.get_mpz_t(), b.get_mpz_t(), e.get_mpz_t(), m.get_mpz_t());
  return r;
}

/// v_p(n) for a nonzero integer n.
inline long valuation(const Integer& n, const Integer& p) {
  if (n == 0) throw DomainError("valuation of zero is undefined");
  if (mpz_divisible_p(n.get_mpz_t(), p.get_mpz_t()) == 0) return 0;
  Integer t;
  return static_cast<long>(mpz_remove(t.get_mpz_t(), n.get_mpz_t(), p.get_mpz_t()));
}

/// v_p(x) for a nonzero rational x, normalised so v_p(p) = 1.
inline long valuation(const Rational& x, const Integer& p) {
  if (x.is_zero()) throw DomainError("valuation of zero is undefined");
  return valuation(x.num(), p) - valuation(x.den(), p);
}

/// Removes every factor p from n and returns (v_p(n), n / p^v).
inline std::pair<long, Integer> split_valuation(const Integer& n, const Integer& p) {
  if (n == 0) throw DomainError("valuation of zero is undefined");
  Integer rest;
  long v = static_cast<long>(mpz_remove(rest.get_mpz_t(), n.get_mpz_t(), p.get_mpz_t()));
  return {v, rest};
}

/// Kronecker symbol (a|n); defined for all integers except a = n = 0.
inline int kronecker(const Integer& a, const Integer& n) {
  if (a == 0 && n == 0) throw DomainError("kronecker(0, 0) is undefined");
  return mpz_kronecker(a.get_mpz_t(), n.get_mpz_t());
}

/// Number of GMP test rounds; reps - 24 of them are Miller-Rabin with
/// random bases after a Baillie-PSW test, so 88 gives error < 2^-128.
inline constexpr int kPrimalityReps = 88;

/// Deterministic for |n| < 2^64, probabilistic (error < 2^-128) beyond.
inline bool is_prime(const Integer& n) {
  if (n < 2) return false;
  return mpz_probab_prime_p(n.get_mpz_t(), kPrimalityReps) != 0;
}

/// True when is_prime(n) is a proof rather than a probable-prime verdict.
inline bool primality_is_proven(const Integer& n) { return mpz_sizeinbase(n.get_mpz_t(), 2) <= 64; }

inline Integer next_prime(const Integer& n) {
  Integer p = n + 1;
  if (p <= 2) return 2;
  if (mpz_even_p(p.get_mpz_t())) ++p;
  while (!is_prime(p)) p += 2;
  return p;
}

/// Primes below `limit` by a plain sieve of Eratosthenes.
inline std::vector<std::uint32_t> small_primes(std::uint32_t limit) {
  std::vector<std::uint32_t> out;
  if (limit < 3) return out;
  std::vector<bool> composite(limit, false);
  for (std::uint32_t i = 2; i < limit; ++i) {
    if (composite[i]) continue;
    out.push_back(i);
    for (std::uint64_t j = std::uint64_t{i} * i; j < limit; j += i) composite[j] = true;
  }
  return out;
}

/// A completion of Q: the real place or a finite prime.
class Place {
 public:
  static Place real() { return Place(); }
  static Place prime(Integer p) { return Place(std::move(p)); }

  bool is_real() const { return real_; }
  const Integer& p() const {
    if (real_) throw DomainError("the real place has no prime");
    return p_;
  }
  std::string str() const { return real_ ? std::string("real") : to_string(p_); }
  static Place parse(std::string_view s) {
    if (s == "real") return real();
    return prime(parse_integer(s));
  }

  friend bool operator==(const Place& a, const Place& b) {
    return a.real_ == b.real_ && (a.real_ || a.p_ == b.p_);
  }
  // real sorts first, then primes ascending
  friend bool operator<(const Place& a, const Place& b) {
    if (a.real_ != b.real_) return a.real_;
    return !a.real_ && a.p_ < b.p_;
  }

 private:
  Place() : real_(true) {}
  explicit Place(Integer p) : real_(false), p_(std::move(p)) {}
  bool real_;
  Integer p_;
};

/// x in (Q_v^*)^2. Odd p: even valuation and unit part a residue; p = 2:
/// even valuation and unit part 1 mod 8; real: x > 0.
inline bool is_local_square(const Rational& x, const Place& v) {
  if (x.is_zero()) throw DomainError("is_local_square of zero");
  if (v.is_real()) return x.sign() > 0;
  const Integer& p = v.p();
  auto [vn, un] = split_valuation(x.num(), p);
  auto [vd, ud] = split_valuation(x.den(), p);
  if (((vn - vd) & 1) != 0) return false;
  Integer unit = un * ud;  // same square class as un / ud
  if (p == 2) return mod(unit, Integer(8)) == 1;
  return kronecker(unit, p) == 1;
}

/// Smallest positive quadratic non-residue modulo an odd prime p.
inline Integer least_nonresidue(const Integer& p) {
  if (p == 2) throw DomainError("no quadratic non-residue modulo 2");
  for (Integer u = 2;; ++u) {
    if (kronecker(u, p) == -1) return u;
  }
}

}  // namespace rk
