// Copyright 2026 The rankone Authors
//
// Licensed under the Apache License, Version 2.0 (see
// LICENSE or https://www.apache.org/licenses/LICENSE-2.0).
// This file may not be copied, modified, or distributed
// except according to those terms.

// Construction of the prime set S = S0 u S1 u S2 u S3 over Q together
// with a p-adic ball of admissible (a, b) at every p in S, the expected
// local images Phi_{d,p}, the kernels V_d, the prime pi1 and the sign eps.
//
// Existence arguments through ray class fields are replaced by bounded
// scans over primes with explicit residue conditions.

#pragma once

#include <algorithm>
#include <bit>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rankone/curvefam.hpp"
#include "rankone/exactnum.hpp"
#include "rankone/f2.hpp"
#include "rankone/factor.hpp"
#include "rankone/json_io.hpp"
#include "rankone/localimg.hpp"
#include "rankone/redtype.hpp"

namespace rk {

/// A prime scan or a search ran past its bound.
class SearchBoundExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sign and squarefree part of D; `changed` reports a normalisation.
struct NormalizedD {
  Integer value;
  bool changed = false;
};

inline NormalizedD normalize_D(const Integer& D) {
  if (D == 0) throw std::invalid_argument("D must be nonzero");
  Integer core = sgn(D);
  for (const auto& [p, e] : factor(abs(D)))
    if (e & 1) core *= p;
  if (core == 1) throw std::invalid_argument("D = " + to_string(D) + " is a square");
  return {core, core != D};
}

inline bool is_squarefree(const Integer& n) {
  for (const auto& [p, e] : factor(abs(n)))
    if (e > 1) return false;
  return true;
}

/// Discriminant of Q(sqrt D) for squarefree D.
inline Integer field_discriminant(const Integer& D) { return mod(D, Integer(4)) == 1 ? D : 4 * D; }

/// +1 split, -1 inert, 0 ramified in Q(sqrt D).
inline int splitting_character(const Integer& disc, const Integer& p) { return kronecker(disc, p); }

enum class SquareTag { kMinus2aApb, kA, kAMinusBTimesPi1, kD };

inline std::string tag_str(SquareTag t) {
  switch (t) {
    case SquareTag::kMinus2aApb: return "MINUS_2A_APB";
    case SquareTag::kA: return "A";
    case SquareTag::kAMinusBTimesPi1: return "A_MINUS_B_TIMES_PI1";
    case SquareTag::kD: return "D";
  }
  return "?";
}

inline SquareTag tag_from_str(const std::string& s) {
  if (s == "MINUS_2A_APB") return SquareTag::kMinus2aApb;
  if (s == "A") return SquareTag::kA;
  if (s == "A_MINUS_B_TIMES_PI1") return SquareTag::kAMinusBTimesPi1;
  if (s == "D") return SquareTag::kD;
  throw FormatError("unknown square-condition tag " + s);
}

struct SquareCondition {
  SquareTag tag;
  bool required;  // true: must be a square, false: must not be
};

/// The open set U_p: the ball v_p(a - a0) >= exponent, v_p(b - b0) >= exponent
/// around a template pair, with its profile and square conditions.
struct UpDescriptor {
  Integer p;
  std::string stage;  // S0, S1, S1', S2, S3
  Profile profile{0, 0, 0};
  std::vector<SquareCondition> square_conditions;
  Rational a0, b0;
  long exponent = 0;
};

inline bool square_condition_holds(SquareTag tag, const Rational& a, const Rational& b, const Integer& D,
                                   const Integer& pi1, const Place& v) {
  switch (tag) {
    case SquareTag::kMinus2aApb: return is_local_square(Rational(-2) * a * (a + b), v);
    case SquareTag::kA: return is_local_square(a, v);
    case SquareTag::kAMinusBTimesPi1: return is_local_square((a - b) * Rational(pi1), v);
    case SquareTag::kD: return is_local_square(Rational(D), v);
  }
  return false;
}

/// First reason (a, b) is outside U_p, or nullopt if it lies in U_p.
inline std::optional<std::string> descriptor_violation(const UpDescriptor& u, const Rational& a, const Rational& b,
                                                       const Integer& D, const Integer& pi1) {
  Rational apb = a + b, amb = a - b;
  if (a.is_zero() || b.is_zero() || apb.is_zero() || amb.is_zero()) return "degenerate pair";
  Profile m{valuation(a, u.p), valuation(apb, u.p), valuation(amb, u.p)};
  if (m != u.profile) return "profile " + profile_str(m) + " != " + profile_str(u.profile) + " at " + to_string(u.p);
  Rational da = a - u.a0, db = b - u.b0;
  if (!da.is_zero() && valuation(da, u.p) < u.exponent) return "a outside the ball at " + to_string(u.p);
  if (!db.is_zero() && valuation(db, u.p) < u.exponent) return "b outside the ball at " + to_string(u.p);
  Place v = Place::prime(u.p);
  for (const auto& c : u.square_conditions) {
    if (square_condition_holds(c.tag, a, b, D, pi1, v) != c.required)
      return "square condition " + tag_str(c.tag) + " fails at " + to_string(u.p);
  }
  return std::nullopt;
}

/// Template pairs realising a profile at an odd prime p (uniformiser p).
/// `u` is a p-adic unit; it selects the variant where one exists.
inline std::pair<Rational, Rational> template_local_pair(const Profile& m, const Integer& p, const Integer& u = 1) {
  if (p == 2) throw UnsupportedProfile("template pairs are for odd primes");
  const Profile p010{0, 1, 0}, pm1{-1, 1, -1}, p020{0, 2, 0}, p001{0, 0, 1}, p100{1, 0, 0};
  Rational P(p), U(u);
  if (m == p010) return {Rational(1), Rational(-1) - P};
  if (m == pm1) {
    Rational a = U / (Rational(2) * P);
    return {a, -a - P / U};
  }
  if (m == p020) return {Rational(1), Rational(-1) - P * P / Rational(2)};
  if (m == p001) return {U, U + P};
  if (m == p100) return {P, Rational(1)};
  throw UnsupportedProfile("no template pair for profile " + profile_str(m));
}

struct SiteConfig {
  Integer scan_bound{1000000};
  long extra_exponent = 3;  // M_p = profile span + extra (+2 at p = 2)
};

struct SiteSpec {
  Integer D;
  Integer disc;
  std::vector<Integer> S0, S1, S1_prime, S2, S3;  // S1 includes S1_prime
  std::map<Integer, UpDescriptor> descriptors;
  std::map<Integer, LocalImage> phi1, phiD;
  std::map<Integer, Rational> xi;
  std::map<Integer, int> mu;
  Integer pi1;
  int epsilon = 1;
  long n = 0;
  Integer p0;
  std::vector<std::string> notes;

  std::vector<Integer> all_primes() const {
    std::vector<Integer> s;
    for (const auto* part : {&S0, &S1, &S2, &S3}) s.insert(s.end(), part->begin(), part->end());
    std::sort(s.begin(), s.end());
    return s;
  }
  /// -1 and the primes of S0 u S1 u S2: generators of the S-unit square classes
  /// used for V_d.
  std::vector<Integer> unit_generators() const {
    std::vector<Integer> g{-1};
    std::vector<Integer> s;
    for (const auto* part : {&S0, &S1, &S2}) s.insert(s.end(), part->begin(), part->end());
    std::sort(s.begin(), s.end());
    g.insert(g.end(), s.begin(), s.end());
    return g;
  }
  const LocalImage& phi(bool twisted, const Integer& p) const { return (twisted ? phiD : phi1).at(p); }
};

namespace detail {

inline long span(const Profile& m) {
  return *std::max_element(m.begin(), m.end()) - *std::min_element(m.begin(), m.end());
}

inline UpDescriptor make_descriptor(const Integer& p, const std::string& stage, const Profile& m,
                                    std::pair<Rational, Rational> ab, std::vector<SquareCondition> conds,
                                    const SiteConfig& cfg, long min_exponent = 0) {
  UpDescriptor u;
  u.p = p;
  u.stage = stage;
  u.profile = m;
  u.a0 = ab.first;
  u.b0 = ab.second;
  u.square_conditions = std::move(conds);
  u.exponent = std::max(span(m) + cfg.extra_exponent + (p == 2 ? 2 : 0), min_exponent);
  return u;
}

/// Primes q with 3 <= q < bound in increasing order, skipping `used`.
class PrimeScan {
 public:
  PrimeScan(const Integer& bound, std::vector<Integer> used, std::string what)
      : bound_(bound), used_(std::move(used)), what_(std::move(what)) {}
  template <class Pred>
  Integer next(Pred pred) {
    for (Integer q = 3; q < bound_; q = next_prime(q)) {
      if (std::find(used_.begin(), used_.end(), q) != used_.end()) continue;
      if (pred(q)) {
        used_.push_back(q);
        return q;
      }
    }
    throw SearchBoundExhausted("no prime below " + to_string(bound_) + " for " + what_);
  }
  void use(const Integer& q) { used_.push_back(q); }

 private:
  Integer bound_;
  std::vector<Integer> used_;
  std::string what_;
};

inline LocalImage phi_at_template(const UpDescriptor& u, const Integer& d) {
  return image_bruteforce(FamilyParams{u.a0, u.b0, Rational(d)}, Place::prime(u.p));
}

/// The places REAL, then the given primes ascending.
inline std::vector<Place> places_of(std::vector<Integer> primes) {
  std::sort(primes.begin(), primes.end());
  std::vector<Place> out{Place::real()};
  for (const auto& p : primes) out.push_back(Place::prime(p));
  return out;
}

inline const LocalImage& image_in(const std::map<Integer, LocalImage>& table, const Place& v,
                                  const LocalImage& real_trivial) {
  return v.is_real() ? real_trivial : table.at(v.p());
}

/// Column of a generator in prod_v G_v (places in order, local bits concatenated).
inline F2Vector embed(const Integer& g, const std::vector<Place>& places) {
  F2Vector col;
  for (const auto& v : places) {
    unsigned bits = local_bits_of_generator(g, v);
    for (int i = 0; i < local_dim(v); ++i) col.push_back(static_cast<std::uint8_t>((bits >> i) & 1U));
  }
  return col;
}

inline F2Vector embed_local(unsigned bits, std::size_t at, const std::vector<Place>& places) {
  F2Vector col;
  for (std::size_t k = 0; k < places.size(); ++k) {
    for (int i = 0; i < local_dim(places[k]); ++i)
      col.push_back(static_cast<std::uint8_t>(k == at ? ((bits >> i) & 1U) : 0U));
  }
  return col;
}

inline std::size_t total_dim(const std::vector<Place>& places) {
  std::size_t t = 0;
  for (const auto& v : places) t += static_cast<std::size_t>(local_dim(v));
  return t;
}

}  // namespace detail

/// Matrix of gamma_d: rows are the annihilator functionals of Phi_{d,v} for
/// v in places, columns the given unit generators.
inline F2Matrix gamma_matrix(const std::vector<Integer>& gens, const std::vector<Place>& places,
                             const std::map<Integer, LocalImage>& phi) {
  LocalImage real_trivial = LocalImage::trivial(Place::real());
  std::vector<F2Vector> rows;
  for (const auto& v : places) {
    const LocalImage& img = detail::image_in(phi, v, real_trivial);
    std::vector<unsigned> gb;
    for (const auto& g : gens) gb.push_back(local_bits_of_generator(g, v));
    for (unsigned fn : img.annihilator()) {
      F2Vector row(gens.size(), 0);
      for (std::size_t j = 0; j < gens.size(); ++j) row[j] = static_cast<std::uint8_t>(__builtin_popcount(fn & gb[j]) & 1);
      rows.push_back(std::move(row));
    }
  }
  if (rows.empty()) return F2Matrix(0, gens.size());
  return F2Matrix::from_rows(rows);
}

/// dim of prod_v (G_v / Phi_{d,v}).
inline std::size_t gamma_codomain_dim(const std::vector<Place>& places, const std::map<Integer, LocalImage>& phi) {
  LocalImage real_trivial = LocalImage::trivial(Place::real());
  std::size_t t = 0;
  for (const auto& v : places)
    t += static_cast<std::size_t>(local_dim(v)) -
         static_cast<std::size_t>(std::countr_zero(detail::image_in(phi, v, real_trivial).order()));
  return t;
}

/// Rank of the subgroup of prod_v G_v generated by the unit generators, the
/// Phi_{d,v}, and the unit classes at the `unit_places` (generation condition).
inline std::size_t generation_rank(const std::vector<Integer>& gens, const std::vector<Place>& places,
                                   const std::map<Integer, LocalImage>& phi, const std::vector<Integer>& unit_places) {
  LocalImage real_trivial = LocalImage::trivial(Place::real());
  std::vector<F2Vector> cols;
  for (const auto& g : gens) cols.push_back(detail::embed(g, places));
  for (std::size_t k = 0; k < places.size(); ++k) {
    for (unsigned x : detail::image_in(phi, places[k], real_trivial).generators())
      cols.push_back(detail::embed_local(x, k, places));
    if (!places[k].is_real() &&
        std::find(unit_places.begin(), unit_places.end(), places[k].p()) != unit_places.end()) {
      if (places[k].p() == 2) {
        for (unsigned x : {2U, 4U}) cols.push_back(detail::embed_local(x, k, places));
      } else {
        cols.push_back(detail::embed_local(2U, k, places));
      }
    }
  }
  return f2_span_dim(cols);
}

/// S0 = {2} u {p | D} with template (1, p^{v_p(n0)+1}) and profile (0,0,0).
inline std::pair<std::vector<Integer>, std::map<Integer, UpDescriptor>> build_S0(const Integer& D,
                                                                                const SiteConfig& cfg = {}) {
  if (D == 0 || D == 1) throw std::invalid_argument("D must differ from 0 and 1");
  if (!is_squarefree(D)) throw std::invalid_argument("D = " + to_string(D) + " is not squarefree; normalize first");
  Integer disc = field_discriminant(D);
  std::vector<Integer> s0{2};
  for (const auto& [p, e] : factor(abs(D)))
    if (p != 2) s0.push_back(p);
  std::map<Integer, UpDescriptor> desc;
  for (const auto& p : s0) {
    long vn = valuation(disc, p);
    Integer b = ipow(p, static_cast<unsigned long>(vn + 1));
    desc.emplace(p, detail::make_descriptor(p, "S0", {0, 0, 0}, {Rational(1), Rational(b)}, {}, cfg, vn + 2));
  }
  return {s0, desc};
}

/// Minimal xi multiset: (#xi = 2, #xi = 1/2) solving prod xi = 2^{-k}, with at least one 2.
inline std::pair<long, long> xi_multiset(long k) {
  long twos = std::max(1L, -k);
  return {twos, twos + k};
}

namespace detail {

inline long log2_ratio(const std::vector<Integer>& primes, const std::map<Integer, LocalImage>& phi1,
                       const std::map<Integer, LocalImage>& phiD) {
  long k = 0;
  for (const auto& p : primes) {
    auto o1 = phi1.at(p).order(), oD = phiD.at(p).order();
    k += static_cast<long>(std::countr_zero(o1)) - static_cast<long>(std::countr_zero(oD));
  }
  return k;
}

}  // namespace detail

/// The whole construction.
inline SiteSpec build_site(const Integer& D, const SiteConfig& cfg = {}) {
  SiteSpec s;
  s.D = D;
  auto [s0, desc0] = build_S0(D, cfg);
  s.disc = field_discriminant(D);
  s.S0 = s0;
  s.descriptors = desc0;
  for (const auto& p : s.S0) {
    s.phi1.emplace(p, detail::phi_at_template(s.descriptors.at(p), 1));
    s.phiD.emplace(p, detail::phi_at_template(s.descriptors.at(p), D));
  }

  detail::PrimeScan scan(cfg.scan_bound, s.S0, "the site construction");

  // S1: inert primes with xi in {1/2, 2} balancing the S0 ratio.
  long k = detail::log2_ratio(s.S0, s.phi1, s.phiD);
  auto [twos, halves] = xi_multiset(k);
  if (k == 0) s.notes.push_back("S0 ratio is 1: S1 uses one prime with xi = 2 and one with xi = 1/2");
  std::vector<Integer> two_primes, half_primes;
  for (long i = 0; i < twos + halves; ++i) {
    Integer q = scan.next([&](const Integer& p) { return splitting_character(s.disc, p) == -1; });
    (i < twos ? two_primes : half_primes).push_back(q);
  }
  long mu_sum = halves + twos;  // every mu starts at 1
  for (std::size_t i = 0; i < two_primes.size(); ++i) {
    const Integer& q = two_primes[i];
    int mu = (i == 0 && (mu_sum % 2) == 0) ? 2 : 1;
    Profile m = mu == 1 ? Profile{-1, 1, -1} : Profile{0, 2, 0};
    s.descriptors.emplace(q, detail::make_descriptor(q, "S1", m, template_local_pair(m, q),
                                                     {{SquareTag::kMinus2aApb, true}, {SquareTag::kD, false}}, cfg));
    s.xi.emplace(q, Rational(2));
    s.mu.emplace(q, mu);
  }
  for (const auto& q : half_primes) {
    Profile m{0, 1, 0};
    s.descriptors.emplace(q, detail::make_descriptor(q, "S1", m, template_local_pair(m, q), {{SquareTag::kD, false}}, cfg));
    s.xi.emplace(q, Rational(1, 2));
    s.mu.emplace(q, 1);
  }
  s.S1 = two_primes;
  s.S1.insert(s.S1.end(), half_primes.begin(), half_primes.end());
  std::sort(s.S1.begin(), s.S1.end());
  for (const auto& q : s.S1) {
    s.phi1.emplace(q, detail::phi_at_template(s.descriptors.at(q), 1));
    s.phiD.emplace(q, detail::phi_at_template(s.descriptors.at(q), D));
  }

  // S1': profile (1,0,0) primes until the generation condition holds for both d.
  auto low_primes = [&] {
    std::vector<Integer> v = s.S0;
    v.insert(v.end(), s.S1.begin(), s.S1.end());
    std::sort(v.begin(), v.end());
    return v;
  };
  auto deficiency = [&](const std::vector<Integer>& primes) {
    std::vector<Integer> gens{-1};
    gens.insert(gens.end(), primes.begin(), primes.end());
    auto places = detail::places_of(primes);
    std::size_t total = detail::total_dim(places), worst = 0;
    for (const auto* phi : {&s.phi1, &s.phiD}) {
      std::size_t r = generation_rank(gens, places, *phi, s.S1);
      worst = std::max(worst, total - r);
    }
    return worst;
  };
  for (std::size_t def = deficiency(low_primes()); def > 0;) {
    Integer q = scan.next([&](const Integer& p) {
      Profile m{1, 0, 0};
      UpDescriptor u = detail::make_descriptor(p, "S1'", m, template_local_pair(m, p), {}, cfg);
      s.descriptors[p] = u;
      s.phi1[p] = detail::phi_at_template(u, 1);
      s.phiD[p] = detail::phi_at_template(u, D);
      std::vector<Integer> trial = low_primes();
      trial.push_back(p);
      std::sort(trial.begin(), trial.end());
      std::vector<Integer> saved = s.S1;
      s.S1.push_back(p);
      std::size_t d2 = deficiency(trial);
      s.S1 = saved;
      if (d2 < def) {
        def = d2;
        return true;
      }
      s.descriptors.erase(p);
      s.phi1.erase(p);
      s.phiD.erase(p);
      return false;
    });
    s.S1.push_back(q);
    s.S1_prime.push_back(q);
    std::sort(s.S1.begin(), s.S1.end());
  }

  // S2: split primes until gamma_1 and gamma_D are surjective.
  std::vector<Place> low_places = detail::places_of(low_primes());
  auto gamma_deficiency = [&](const std::vector<Integer>& extra) {
    std::vector<Integer> gens{-1};
    for (const auto& p : low_primes()) gens.push_back(p);
    gens.insert(gens.end(), extra.begin(), extra.end());
    std::size_t worst = 0;
    for (const auto* phi : {&s.phi1, &s.phiD}) {
      std::size_t r = f2_image_rank(gamma_matrix(gens, low_places, *phi));
      worst = std::max(worst, gamma_codomain_dim(low_places, *phi) - r);
    }
    return worst;
  };
  auto s2_descriptor = [&](const Integer& q, const Integer& u, std::vector<SquareCondition> extra) {
    Profile m{-1, 1, -1};
    std::vector<SquareCondition> conds{{SquareTag::kMinus2aApb, true}, {SquareTag::kD, true}};
    conds.insert(conds.end(), extra.begin(), extra.end());
    return detail::make_descriptor(q, "S2", m, template_local_pair(m, q, u), conds, cfg);
  };
  for (std::size_t def = gamma_deficiency({}); def > 0;) {
    Integer q = scan.next([&](const Integer& p) {
      if (splitting_character(s.disc, p) != 1) return false;
      std::vector<Integer> trial = s.S2;
      trial.push_back(p);
      std::size_t d2 = gamma_deficiency(trial);
      if (d2 < def) {
        def = d2;
        return true;
      }
      return false;
    });
    s.S2.push_back(q);
  }
  // pi1: split, positive, square at every place of S0 u S1 (1 mod 8 at 2)
  s.pi1 = scan.next([&](const Integer& p) {
    if (splitting_character(s.disc, p) != 1 || mod(p, Integer(8)) != 1) return false;
    for (const auto& l : low_primes())
      if (l != 2 && kronecker(p, l) != 1) return false;
    return true;
  });
  s.S2.push_back(s.pi1);
  std::sort(s.S2.begin(), s.S2.end());
  for (const auto& q : s.S2) {
    if (q == s.pi1) continue;
    s.descriptors.emplace(q, s2_descriptor(q, 1, {}));
  }

  // V_d and the kernel cut.
  std::vector<Integer> gens = s.unit_generators();
  std::size_t pi_col = static_cast<std::size_t>(std::find(gens.begin(), gens.end(), s.pi1) - gens.begin());
  std::map<bool, std::vector<F2Vector>> cut_rows;
  auto current_kernel = [&](bool twisted) {
    F2Matrix g = gamma_matrix(gens, low_places, twisted ? s.phiD : s.phi1);
    std::vector<F2Vector> rows;
    for (std::size_t i = 0; i < g.rows(); ++i) {
      F2Vector r(gens.size());
      for (std::size_t j = 0; j < gens.size(); ++j) r[j] = g.get(i, j) ? 1 : 0;
      rows.push_back(r);
    }
    for (const auto& r : cut_rows[twisted]) rows.push_back(r);
    return f2_kernel(rows.empty() ? F2Matrix(0, gens.size()) : F2Matrix::from_rows(rows));
  };
  auto v1 = current_kernel(false), vD = current_kernel(true);
  if (v1.size() != vD.size()) throw ConsistencyError("dim V_1 != dim V_D");
  if (v1.empty()) throw ConsistencyError("V_d does not contain pi1");
  s.n = static_cast<long>(v1.size()) - 1;
  auto legendre_of = [&](const F2Vector& x, const Integer& p) {
    int r = 1;
    for (std::size_t j = 0; j < gens.size(); ++j)
      if (x[j]) r *= kronecker(gens[j], p);
    return r;
  };
  auto not_pi = [&](const std::vector<F2Vector>& basis) {
    for (const auto& x : basis) {
      bool only_pi = true;
      for (std::size_t j = 0; j < x.size(); ++j)
        if (x[j] != (j == pi_col ? 1 : 0)) only_pi = false;
      if (!only_pi) return x;
    }
    throw ConsistencyError("kernel without a class other than pi1");
  };
  std::vector<Integer> p_list;
  for (long i = 0; i < s.n; ++i) {
    F2Vector u = not_pi(current_kernel(false)), w = not_pi(current_kernel(true));
    Integer q = scan.next([&](const Integer& p) {
      return legendre_of(u, p) == -1 && legendre_of(w, p) == -1 && kronecker(s.pi1, p) == 1;
    });
    F2Vector row(gens.size());
    for (std::size_t j = 0; j < gens.size(); ++j) row[j] = kronecker(gens[j], q) == -1 ? 1 : 0;
    cut_rows[false].push_back(row);
    cut_rows[true].push_back(row);
    p_list.push_back(q);
  }
  s.p0 = scan.next([&](const Integer& p) {
    if (mod(p, Integer(8)) != 1) return false;
    for (const auto& g : gens)
      if (g > 2 && kronecker(g, p) != 1) return false;
    return true;
  });
  s.S3 = p_list;
  s.S3.push_back(s.p0);
  std::sort(s.S3.begin(), s.S3.end());
  for (const auto& q : s.S3) {
    Profile m{0, 0, 1};
    if (q == s.p0) {
      Integer u = least_nonresidue(q);
      s.descriptors.emplace(q, detail::make_descriptor(q, "S3", m, template_local_pair(m, q, u), {{SquareTag::kA, false}}, cfg));
    } else {
      s.descriptors.emplace(q, detail::make_descriptor(q, "S3", m, template_local_pair(m, q), {}, cfg));
    }
  }

  // eps so that pi1 is a non-residue mod q3.
  int prod = 1;
  for (const auto* part : {&s.S1, &s.S2, &s.S3}) {
    for (const auto& p : *part) {
      if (p == s.pi1) continue;
      if (s.descriptors.at(p).profile[2] & 1) prod *= kronecker(s.pi1, p);
    }
  }
  s.epsilon = -prod;
  Integer u_pi = s.epsilon == 1 ? Integer(1) : least_nonresidue(s.pi1);
  s.descriptors.emplace(s.pi1, s2_descriptor(s.pi1, u_pi, {{SquareTag::kAMinusBTimesPi1, s.epsilon == 1}}));

  for (const auto* part : {&s.S2, &s.S3}) {
    for (const auto& q : *part) {
      s.phi1.emplace(q, detail::phi_at_template(s.descriptors.at(q), 1));
      s.phiD.emplace(q, detail::phi_at_template(s.descriptors.at(q), D));
    }
  }
  return s;
}

/// eps = -prod kronecker(pi1, p)^{e_p} over the listed primes (p != pi1).
inline int choose_epsilon(const Integer& pi1, const std::vector<std::pair<Integer, long>>& exponents) {
  int prod = 1;
  for (const auto& [p, e] : exponents) {
    if (p == pi1) continue;
    if (e & 1) prod *= kronecker(pi1, p);
  }
  return -prod;
}

// ---------------------------------------------------------------------------
// Site invariants

struct SiteCheck {
  std::string name;
  bool ok = false;
  std::string detail;
};

inline std::vector<SiteCheck> site_invariants(const SiteSpec& s) {
  std::vector<SiteCheck> out;
  auto add = [&](std::string name, bool ok, std::string det = {}) { out.push_back({std::move(name), ok, std::move(det)}); };

  long parity = 0;
  for (const auto& p : s.S1)
    if (splitting_character(s.disc, p) == -1) parity += s.descriptors.at(p).profile[1];
  add("parity", (parity & 1) == 1, "sum v_p(a+b) over inert S1 = " + std::to_string(parity));

  std::vector<Integer> low = s.S0;
  low.insert(low.end(), s.S1.begin(), s.S1.end());
  std::sort(low.begin(), low.end());
  long k = detail::log2_ratio(low, s.phi1, s.phiD);
  add("product", k == 0, "log2 prod |Phi_1| / |Phi_D| over S0 u S1 = " + std::to_string(k));

  std::vector<Place> places = detail::places_of(low);
  std::vector<Integer> low_gens{-1};
  low_gens.insert(low_gens.end(), low.begin(), low.end());
  bool gen_ok = true;
  for (const auto* phi : {&s.phi1, &s.phiD})
    gen_ok = gen_ok && generation_rank(low_gens, places, *phi, s.S1) == detail::total_dim(places);
  add("generation", gen_ok);

  std::vector<Integer> gens = s.unit_generators();
  bool surj = true;
  std::vector<std::vector<F2Vector>> kernels;
  for (const auto* phi : {&s.phi1, &s.phiD}) {
    F2Matrix g = gamma_matrix(gens, places, *phi);
    surj = surj && f2_image_rank(g) == gamma_codomain_dim(places, *phi);
    kernels.push_back(f2_kernel(g));
  }
  add("gamma_surjective", surj);
  bool dims = kernels[0].size() == static_cast<std::size_t>(s.n + 1) && kernels[1].size() == static_cast<std::size_t>(s.n + 1);
  add("dim_V", dims, "dim V_1 = " + std::to_string(kernels[0].size()) + ", dim V_D = " + std::to_string(kernels[1].size()) +
                         ", n + 1 = " + std::to_string(s.n + 1));

  // kernel cut: V_d intersected with ker phi_{p_i} is <pi1>
  std::size_t pi_col = static_cast<std::size_t>(std::find(gens.begin(), gens.end(), s.pi1) - gens.begin());
  bool cut_ok = pi_col < gens.size();
  for (bool twisted : {false, true}) {
    if (!cut_ok) break;
    F2Matrix g = gamma_matrix(gens, places, twisted ? s.phiD : s.phi1);
    std::vector<F2Vector> rows;
    for (std::size_t i = 0; i < g.rows(); ++i) {
      F2Vector r(gens.size());
      for (std::size_t j = 0; j < gens.size(); ++j) r[j] = g.get(i, j) ? 1 : 0;
      rows.push_back(r);
    }
    for (const auto& p : s.S3) {
      if (p == s.p0) continue;
      F2Vector r(gens.size());
      for (std::size_t j = 0; j < gens.size(); ++j) r[j] = kronecker(gens[j], p) == -1 ? 1 : 0;
      rows.push_back(r);
    }
    auto ker = f2_kernel(rows.empty() ? F2Matrix(0, gens.size()) : F2Matrix::from_rows(rows));
    F2Vector pi(gens.size(), 0);
    pi[pi_col] = 1;
    cut_ok = ker.size() == 1 && ker.front() == pi;
  }
  add("kernel_cut", cut_ok);

  bool p0_ok = mod(s.p0, Integer(8)) == 1;
  for (const auto& g : gens) p0_ok = p0_ok && kronecker(g, s.p0) == 1;
  add("p0_units_square", p0_ok);

  bool pi_ok = s.pi1 > 0 && mod(s.pi1, Integer(8)) == 1 && splitting_character(s.disc, s.pi1) == 1;
  for (const auto& p : low) pi_ok = pi_ok && (p == 2 || kronecker(s.pi1, p) == 1);
  add("pi1_local_square", pi_ok);

  bool split_ok = true;
  for (const auto& p : s.S2) split_ok = split_ok && splitting_character(s.disc, p) == 1;
  bool inert_ok = true;
  for (const auto& [p, x] : s.xi) inert_ok = inert_ok && splitting_character(s.disc, p) == -1;
  add("S2_split", split_ok);
  add("S1_inert", inert_ok);

  bool xi_ok = true;
  for (const auto& [p, x] : s.xi) {
    Rational r(static_cast<long>(s.phi1.at(p).order()), Integer(static_cast<long>(s.phiD.at(p).order())));
    xi_ok = xi_ok && r == x;
  }
  add("xi_ratio", xi_ok);

  bool tmpl = true;
  std::string bad;
  for (const auto& [p, u] : s.descriptors) {
    auto why = descriptor_violation(u, u.a0, u.b0, s.D, s.pi1);
    if (why) {
      tmpl = false;
      bad = *why;
    }
  }
  add("templates_self_consistent", tmpl, bad);

  bool phi_ok = true;
  for (const auto& p : s.S2)
    phi_ok = phi_ok && s.phi1.at(p) == LocalImage::full(Place::prime(p)) && s.phiD.at(p) == LocalImage::full(Place::prime(p));
  for (const auto& p : s.S3)
    phi_ok = phi_ok && s.phi1.at(p).order() == 1 && s.phiD.at(p).order() == 1;
  add("phi_S2_full_S3_trivial", phi_ok);

  int prod = 1;
  for (const auto* part : {&s.S1, &s.S2, &s.S3})
    for (const auto& p : *part)
      if (p != s.pi1 && (s.descriptors.at(p).profile[2] & 1)) prod *= kronecker(s.pi1, p);
  add("epsilon", s.epsilon == -prod);
  return out;
}

inline bool site_ok(const SiteSpec& s) {
  for (const auto& c : site_invariants(s))
    if (!c.ok) return false;
  return true;
}

// ---------------------------------------------------------------------------
// JSON

inline Json to_json(const UpDescriptor& u) {
  Json conds = Json::array();
  for (const auto& c : u.square_conditions) conds.push_back(Json{{"tag", tag_str(c.tag)}, {"required", c.required}});
  Json prof = Json::array();
  for (long x : u.profile) prof.push_back(std::to_string(x));
  return Json{{"p", to_string(u.p)}, {"stage", u.stage}, {"profile", prof}, {"square_conditions", conds},
              {"a0", to_json(u.a0)}, {"b0", to_json(u.b0)}, {"exponent", std::to_string(u.exponent)}};
}

inline long long_from_json(const Json& j) {
  Integer z = integer_from_json(j);
  if (!z.fits_slong_p()) throw FormatError("integer out of range");
  return z.get_si();
}

inline UpDescriptor descriptor_from_json(const Json& j) {
  UpDescriptor u;
  u.p = integer_from_json(j.at("p"));
  u.stage = j.at("stage").get<std::string>();
  const Json& prof = j.at("profile");
  if (!prof.is_array() || prof.size() != 3) throw FormatError("profile must have three entries");
  for (std::size_t i = 0; i < 3; ++i) u.profile[i] = long_from_json(prof[i]);
  for (const auto& c : j.at("square_conditions"))
    u.square_conditions.push_back({tag_from_str(c.at("tag").get<std::string>()), c.at("required").get<bool>()});
  u.a0 = rational_from_json(j.at("a0"));
  u.b0 = rational_from_json(j.at("b0"));
  u.exponent = long_from_json(j.at("exponent"));
  return u;
}

inline Json to_json(const SiteSpec& s) {
  Json desc = Json::object(), phi = Json::object(), xi = Json::object(), mu = Json::object();
  for (const auto& [p, u] : s.descriptors) desc[to_string(p)] = to_json(u);
  Json p1 = Json::object(), pD = Json::object();
  for (const auto& [p, img] : s.phi1) p1[to_string(p)] = to_json(img);
  for (const auto& [p, img] : s.phiD) pD[to_string(p)] = to_json(img);
  phi["1"] = p1;
  phi["D"] = pD;
  for (const auto& [p, x] : s.xi) xi[to_string(p)] = to_json(x);
  for (const auto& [p, m] : s.mu) mu[to_string(p)] = std::to_string(m);
  return Json{{"kind", "rankone-site"},
              {"version", "1"},
              {"D", to_string(s.D)},
              {"disc", to_string(s.disc)},
              {"S0", to_json(s.S0)},
              {"S1", to_json(s.S1)},
              {"S1_prime", to_json(s.S1_prime)},
              {"S2", to_json(s.S2)},
              {"S3", to_json(s.S3)},
              {"descriptors", desc},
              {"phi_table", phi},
              {"xi", xi},
              {"mu", mu},
              {"pi1", to_string(s.pi1)},
              {"epsilon", std::to_string(s.epsilon)},
              {"n", std::to_string(s.n)},
              {"p0", to_string(s.p0)},
              {"notes", s.notes}};
}

inline SiteSpec site_from_json(const Json& j) {
  try {
    if (j.value("kind", "") != "rankone-site") throw FormatError("not a site document");
    SiteSpec s;
    s.D = integer_from_json(j.at("D"));
    s.disc = integer_from_json(j.at("disc"));
    if (s.disc != field_discriminant(s.D)) throw FormatError("disc does not match D");
    s.S0 = integers_from_json(j.at("S0"));
    s.S1 = integers_from_json(j.at("S1"));
    s.S1_prime = integers_from_json(j.at("S1_prime"));
    s.S2 = integers_from_json(j.at("S2"));
    s.S3 = integers_from_json(j.at("S3"));
    for (const auto& [k, v] : j.at("descriptors").items()) {
      UpDescriptor u = descriptor_from_json(v);
      if (to_string(u.p) != k) throw FormatError("descriptor key mismatch at " + k);
      s.descriptors.emplace(u.p, u);
    }
    for (const auto& [k, v] : j.at("phi_table").at("1").items()) {
      Integer p = parse_integer(k);
      s.phi1.emplace(p, local_image_from_json(Place::prime(p), v));
    }
    for (const auto& [k, v] : j.at("phi_table").at("D").items()) {
      Integer p = parse_integer(k);
      s.phiD.emplace(p, local_image_from_json(Place::prime(p), v));
    }
    for (const auto& [k, v] : j.at("xi").items()) s.xi.emplace(parse_integer(k), rational_from_json(v));
    for (const auto& [k, v] : j.at("mu").items()) s.mu.emplace(parse_integer(k), static_cast<int>(long_from_json(v)));
    s.pi1 = integer_from_json(j.at("pi1"));
    s.epsilon = static_cast<int>(long_from_json(j.at("epsilon")));
    s.n = long_from_json(j.at("n"));
    s.p0 = integer_from_json(j.at("p0"));
    for (const auto& x : j.at("notes")) s.notes.push_back(x.get<std::string>());
    for (const auto& p : s.all_primes()) {
      if (!s.descriptors.count(p) || !s.phi1.count(p) || !s.phiD.count(p))
        throw FormatError("site lacks data for prime " + to_string(p));
      if (!is_prime(p)) throw FormatError(to_string(p) + " is not prime");
    }
    if (s.descriptors.size() != s.all_primes().size()) throw FormatError("descriptor for a prime outside S");
    return s;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("site document: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("site document: ") + e.what());
  }
}

inline std::string site_hash(const SiteSpec& s) { return canonical_hash(to_json(s)); }

/// Plain-text summary table.
inline std::string site_summary(const SiteSpec& s) {
  std::ostringstream os;
  auto list = [](const std::vector<Integer>& v) {
    std::string r = "{";
    for (std::size_t i = 0; i < v.size(); ++i) r += (i ? ", " : "") + to_string(v[i]);
    return r + "}";
  };
  os << "D = " << to_string(s.D) << "  disc = " << to_string(s.disc) << "\n";
  os << "S0 = " << list(s.S0) << "\nS1 = " << list(s.S1) << "  (S1' = " << list(s.S1_prime) << ")\n";
  os << "S2 = " << list(s.S2) << "\nS3 = " << list(s.S3) << "\n";
  os << "pi1 = " << to_string(s.pi1) << "  eps = " << s.epsilon << "  n = " << s.n << "  p0 = " << to_string(s.p0) << "\n";
  os << "prime      stage profile     M  |Phi_1| |Phi_D|\n";
  for (const auto& p : s.all_primes()) {
    const auto& u = s.descriptors.at(p);
    char line[160];
    std::snprintf(line, sizeof line, "%-10s %-5s %-11s %-2ld %-7zu %-7zu\n", to_string(p).c_str(), u.stage.c_str(),
                  profile_str(u.profile).c_str(), u.exponent, s.phi1.at(p).order(), s.phiD.at(p).order());
    os << line;
  }
  for (const auto& n : s.notes) os << "note: " << n << "\n";
  os << "site hash " << site_hash(s) << "\n";
  return os.str();
}

}  // namespace rk
