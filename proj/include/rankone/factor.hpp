// Copyright 2026 The rankone Authors
//
// Licensed under the Apache License, Version 2.0 (see
// LICENSE or https://www.apache.org/licenses/LICENSE-2.0).
// This file may not be copied, modified, or distributed
// except according to those terms.

// Integer factorisation (trial division, then Brent's variant of Pollard rho)
// and square classes of Q^* / (Q^*)^2.

#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "rankone/exactnum.hpp"

namespace rk {

/// prime -> exponent, primes ascending.
using Factorization = std::map<Integer, long>;

namespace detail {

inline constexpr std::uint32_t kTrialBound = 1'000'000;

inline const std::vector<std::uint32_t>& trial_primes() {
  static const std::vector<std::uint32_t> primes = small_primes(kTrialBound);
  return primes;
}

// Brent's cycle finding with x -> x^2 + c; returns a nontrivial factor of
// the odd composite n (deterministic sequence of c).
inline Integer rho_factor(const Integer& n) {
  for (unsigned long c = 1;; ++c) {
    Integer y = 2, x, ys, q = 1, g = 1;
    unsigned long r = 1;
    constexpr unsigned long kBatch = 128;
    do {
      x = y;
      for (unsigned long i = 0; i < r; ++i) y = mod(y * y + c, n);
      unsigned long k = 0;
      do {
        ys = y;
        for (unsigned long i = 0; i < std::min(kBatch, r - k); ++i) {
          y = mod(y * y + c, n);
          q = mod(q * abs(Integer(x - y)), n);
        }
        g = gcd(q, n);
        k += kBatch;
      } while (k < r && g == 1);
      r *= 2;
    } while (g == 1);
    if (g == n) {
      do {
        ys = mod(ys * ys + c, n);
        g = gcd(abs(Integer(x - ys)), n);
      } while (g == 1);
    }
    if (g != n) return g;
  }
}

inline void factor_cofactor(const Integer& n, Factorization& out) {
  if (n == 1) return;
  if (is_prime(n)) {
    out[n] += 1;
    return;
  }
  Integer root;
  if (mpz_perfect_square_p(n.get_mpz_t()) != 0) {
    mpz_sqrt(root.get_mpz_t(), n.get_mpz_t());
    Factorization half;
    factor_cofactor(root, half);
    for (const auto& [p, e] : half) out[p] += 2 * e;
    return;
  }
  Integer d = rho_factor(n);
  factor_cofactor(d, out);
  factor_cofactor(Integer(n / d), out);
}

}  // namespace detail

/// Prime factorisation of |n| for n != 0.
inline Factorization factor(const Integer& n) {
  if (n == 0) throw DomainError("cannot factor zero");
  Factorization out;
  Integer rest = abs(n);
  for (std::uint32_t p : detail::trial_primes()) {
    if (rest == 1) break;
    Integer pp(p);
    if (pp * pp > rest) break;
    if (mpz_divisible_ui_p(rest.get_mpz_t(), p) != 0) {
      auto [v, r] = split_valuation(rest, pp);
      out[pp] = v;
      rest = r;
    }
    // look ahead once the small primes are gone: a prime cofactor ends it
    if (p == 4093 && rest > 1 && is_prime(rest)) break;
  }
  detail::factor_cofactor(rest, out);
  return out;
}

/// Product of p^e over a factorisation (the absolute value of what was factored).
inline Integer expand(const Factorization& f) {
  Integer r = 1;
  for (const auto& [p, e] : f) r *= ipow(p, static_cast<unsigned long>(e));
  return r;
}

/// An element of Q^*/(Q^*)^2: a sign and the strictly increasing list of
/// primes dividing the squarefree representative.
class SquareClass {
 public:
  SquareClass() = default;
  SquareClass(int sign, std::vector<Integer> primes) : negative_(sign < 0), primes_(std::move(primes)) {
    std::sort(primes_.begin(), primes_.end());
    for (std::size_t i = 1; i < primes_.size(); ++i) {
      if (primes_[i] == primes_[i - 1]) throw DomainError("square class support must be distinct primes");
    }
  }

  /// Class of a signed squarefree integer, e.g. -130.
  static SquareClass of_squarefree(const Integer& n) {
    if (n == 0) throw DomainError("square class of zero");
    std::vector<Integer> ps;
    for (const auto& [p, e] : factor(n)) {
      if (e != 1) throw DomainError("not squarefree: " + to_string(n));
      ps.push_back(p);
    }
    return SquareClass(sgn(n), std::move(ps));
  }

  int sign() const { return negative_ ? -1 : 1; }
  const std::vector<Integer>& primes() const { return primes_; }
  bool is_identity() const { return !negative_ && primes_.empty(); }

  /// The signed squarefree integer representing this class.
  Integer value() const {
    Integer r = negative_ ? -1 : 1;
    for (const auto& p : primes_) r *= p;
    return r;
  }
  std::string str() const { return to_string(value()); }

  friend SquareClass operator*(const SquareClass& a, const SquareClass& b) {
    SquareClass r;
    r.negative_ = a.negative_ != b.negative_;
    std::set_symmetric_difference(a.primes_.begin(), a.primes_.end(), b.primes_.begin(), b.primes_.end(),
                                  std::back_inserter(r.primes_));
    return r;
  }
  friend bool operator==(const SquareClass& a, const SquareClass& b) {
    return a.negative_ == b.negative_ && a.primes_ == b.primes_;
  }
  friend bool operator<(const SquareClass& a, const SquareClass& b) {
    if (a.primes_ != b.primes_) return a.primes_ < b.primes_;
    return a.negative_ < b.negative_;
  }

 private:
  bool negative_ = false;
  std::vector<Integer> primes_;
};

/// Square class from a sign and the factorisations of numerator and denominator.
inline SquareClass square_class(int sign, const Factorization& num, const Factorization& den) {
  std::map<Integer, long> odd;
  for (const auto& [p, e] : num) odd[p] += e;
  for (const auto& [p, e] : den) odd[p] += e;
  std::vector<Integer> ps;
  for (const auto& [p, e] : odd) {
    if (e & 1) ps.push_back(p);
  }
  return SquareClass(sign, std::move(ps));
}

/// The class of a nonzero rational: sign times the primes of odd valuation.
inline SquareClass square_class(const Rational& x) {
  if (x.is_zero()) throw DomainError("square class of zero");
  Factorization den = x.den() == 1 ? Factorization{} : factor(x.den());
  return square_class(x.sign(), factor(x.num()), den);
}

/// As above, dividing out `support` first; factors only a non-square leftover.
inline SquareClass square_class(const Rational& x, const std::vector<Integer>& support) {
  if (x.is_zero()) throw DomainError("square class of zero");
  Integer n = abs(x.num()), d = x.den();
  std::vector<Integer> ps;
  for (const auto& p : support) {
    long e = 0;
    if (mpz_divisible_p(n.get_mpz_t(), p.get_mpz_t()) != 0) {
      auto [v, r] = split_valuation(n, p);
      e += v;
      n = r;
    }
    if (mpz_divisible_p(d.get_mpz_t(), p.get_mpz_t()) != 0) {
      auto [v, r] = split_valuation(d, p);
      e += v;
      d = r;
    }
    if (e & 1) ps.push_back(p);
  }
  Integer rest = n * d;
  if (mpz_perfect_square_p(rest.get_mpz_t()) == 0) {
    return SquareClass(x.sign(), ps) * square_class(Rational(rest));
  }
  return SquareClass(x.sign(), std::move(ps));
}

}  // namespace rk
