// Copyright 2026 The rankone Authors
//
// Licensed under the Apache License, Version 2.0 (see
// LICENSE or https://www.apache.org/licenses/LICENSE-2.0).
// This file may not be copied, modified, or distributed
// except according to those terms.

// phi- and phi-hat-Selmer groups inside Q^*/(Q^*)^2, the Cassels ratio and
// the rank bounds they give.

#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "rankone/curvefam.hpp"
#include "rankone/f2.hpp"
#include "rankone/factor.hpp"
#include "rankone/localimg.hpp"

namespace rk {

enum class IsogenyTag { kPhi, kPhiHat };

inline std::string tag_name(IsogenyTag t) { return t == IsogenyTag::kPhi ? "phi" : "phi_hat"; }

/// 2 together with the primes dividing the numerators and denominators of
/// a, a+b, a-b and d.
/// With `known` nonempty those primes are divided out first and anything
/// left over is factored; pass `require_known` to forbid the latter.
inline std::vector<Integer> family_support(const FamilyParams& f, const std::vector<Integer>& known = {},
                                           bool require_known = false) {
  f.validate();
  std::set<Integer> primes{Integer(2)};
  auto absorb = [&](Integer n) {
    n = abs(n);
    for (const auto& p : known) {
      if (mpz_divisible_p(n.get_mpz_t(), p.get_mpz_t()) != 0) {
        primes.insert(p);
        n = split_valuation(n, p).second;
      }
    }
    if (n == 1) return;
    if (require_known) throw std::invalid_argument("unfactored support: cofactor " + to_string(n));
    for (const auto& [p, e] : factor(n)) primes.insert(p);
  };
  for (const Rational& x : {f.a, f.apb(), f.amb(), f.d}) {
    absorb(x.num());
    absorb(x.den());
  }
  return {primes.begin(), primes.end()};
}

/// REAL, 2, then the support primes ascending.
inline std::vector<Place> bad_places(const std::vector<Integer>& support) {
  std::vector<Place> out{Place::real(), Place::prime(2)};
  for (const auto& p : support)
    if (p != 2) out.push_back(Place::prime(p));
  return out;
}

/// Both local images at every bad place.
struct LocalTables {
  std::vector<Integer> support;
  std::vector<Place> places;
  std::map<Place, LocalImage> phi;      // image of delta (points of E')
  std::map<Place, LocalImage> phi_hat;  // image of delta' (points of E)
};

inline LocalTables compute_local_tables(const FamilyParams& f, const std::vector<Integer>& support) {
  LocalTables t;
  t.support = support;
  t.places = bad_places(support);
  for (const auto& v : t.places) {
    LocalImage img = image_bruteforce(f, v);
    if (image_formula_applies(f, v) && !(image_formula(f, v.p()) == img)) {
      throw ConsistencyError("image formula and brute force disagree at " + v.str());
    }
    t.phi.emplace(v, std::move(img));
    t.phi_hat.emplace(v, image_bruteforce_dual(f, v));
  }
  return t;
}

struct SelmerGroup {
  IsogenyTag tag = IsogenyTag::kPhi;
  std::vector<SquareClass> basis;
  std::vector<Place> bad_places;

  std::size_t dim() const { return basis.size(); }
  std::size_t order() const { return std::size_t{1} << basis.size(); }
};

/// Coordinates of a square class supported on {-1} u support.
inline F2Vector class_coordinates(const SquareClass& c, const std::vector<Integer>& support) {
  F2Vector v(support.size() + 1, 0);
  v[0] = c.sign() < 0 ? 1 : 0;
  for (const auto& p : c.primes()) {
    auto it = std::lower_bound(support.begin(), support.end(), p);
    if (it == support.end() || *it != p) throw DomainError("class " + c.str() + " is not supported on the bad primes");
    v[static_cast<std::size_t>(it - support.begin()) + 1] = 1;
  }
  return v;
}

inline SquareClass class_from_coordinates(const F2Vector& v, const std::vector<Integer>& support) {
  std::vector<Integer> ps;
  for (std::size_t i = 0; i < support.size(); ++i)
    if (v[i + 1]) ps.push_back(support[i]);
  return SquareClass(v[0] ? -1 : 1, std::move(ps));
}

/// Is the class of c (supported on -1 and the bad primes) in the Selmer condition at every place?
inline bool locally_everywhere(const SquareClass& c, const std::map<Place, LocalImage>& images) {
  Rational x(c.value());
  for (const auto& [v, img] : images)
    if (!img.contains(local_bits(x, v))) return false;
  return true;
}

/// The Selmer group as the kernel of the map from classes supported on
/// {-1} u support to the product of the local quotients G_v / Im_v.
inline SelmerGroup selmer_from_tables(const LocalTables& t, IsogenyTag tag) {
  const auto& images = tag == IsogenyTag::kPhi ? t.phi : t.phi_hat;
  std::vector<Integer> gens{-1};
  for (const auto& p : t.support) gens.push_back(p);
  std::vector<F2Vector> rows;
  for (const auto& v : t.places) {
    const LocalImage& img = images.at(v);
    std::vector<unsigned> gbits;
    for (const auto& g : gens) gbits.push_back(local_bits_of_generator(g, v));
    for (unsigned fn : img.annihilator()) {
      F2Vector row(gens.size(), 0);
      for (std::size_t j = 0; j < gens.size(); ++j) row[j] = static_cast<std::uint8_t>(__builtin_popcount(fn & gbits[j]) & 1);
      rows.push_back(std::move(row));
    }
  }
  std::vector<F2Vector> kernel;
  if (rows.empty()) {
    kernel = f2_kernel(F2Matrix(0, gens.size()));
  } else {
    kernel = f2_kernel(F2Matrix::from_rows(rows));
  }
  SelmerGroup s;
  s.tag = tag;
  s.bad_places = t.places;
  if (!kernel.empty()) {
    F2Matrix k = F2Matrix::from_rows(kernel);
    auto piv = k.rref();
    for (std::size_t r = 0; r < piv.size(); ++r) {
      F2Vector row(gens.size(), 0);
      for (std::size_t j = 0; j < gens.size(); ++j) row[j] = k.get(r, j) ? 1 : 0;
      s.basis.push_back(class_from_coordinates(row, t.support));
    }
  }
  for (const auto& b : s.basis)
    if (!locally_everywhere(b, images)) throw ConsistencyError("Selmer basis element fails a local condition");
  return s;
}

/// Membership test for a class in the span of a Selmer basis.
inline bool selmer_contains(const SelmerGroup& s, const SquareClass& c, const std::vector<Integer>& support) {
  std::vector<F2Vector> rows;
  for (const auto& b : s.basis) rows.push_back(class_coordinates(b, support));
  std::size_t before = f2_span_dim(rows);
  rows.push_back(class_coordinates(c, support));
  return f2_span_dim(rows) == before;
}

inline SelmerGroup selmer_phi(const FamilyParams& f) {
  LocalTables t = compute_local_tables(f, family_support(f));
  SelmerGroup s = selmer_from_tables(t, IsogenyTag::kPhi);
  if (!selmer_contains(s, square_class(f.beta_prime(), t.support), t.support)) throw ConsistencyError("Sel_phi misses the image of (0,0)");
  return s;
}

inline SelmerGroup selmer_phihat(const FamilyParams& f) {
  LocalTables t = compute_local_tables(f, family_support(f));
  SelmerGroup s = selmer_from_tables(t, IsogenyTag::kPhiHat);
  if (!selmer_contains(s, square_class(f.beta(), t.support), t.support)) throw ConsistencyError("Sel_phi_hat misses the image of (0,0)");
  return s;
}

/// delta(P) for P on E' (kPhi) or delta'(P) for P on E (kPhiHat).
inline SquareClass connecting_image(const FamilyParams& f, IsogenyTag tag, const Point& p,
                                    const std::vector<Integer>& support = {}) {
  if (p.infinity) return {};
  if (p.x.is_zero()) return square_class(tag == IsogenyTag::kPhi ? f.beta_prime() : f.beta(), support);
  return square_class(p.x, support);
}

struct CasselsCheck {
  Rational lhs;
  Rational rhs;
  bool equal = false;
};

inline CasselsCheck cassels_ratio_from(const LocalTables& t, const SelmerGroup& phi,
                                       const SelmerGroup& phihat) {
  CasselsCheck c;
  c.lhs = Rational(static_cast<long>(phi.order()), Integer(static_cast<long>(phihat.order())));
  c.rhs = Rational(1);
  for (const auto& v : t.places) c.rhs *= Rational(static_cast<long>(t.phi.at(v).order()), Integer(2));
  c.equal = c.lhs == c.rhs;
  if (!c.equal) throw ConsistencyError("Cassels ratio mismatch: " + c.lhs.str() + " vs " + c.rhs.str());
  return c;
}

inline CasselsCheck cassels_ratio_check(const FamilyParams& f) {
  LocalTables t = compute_local_tables(f, family_support(f));
  return cassels_ratio_from(t, selmer_from_tables(t, IsogenyTag::kPhi), selmer_from_tables(t, IsogenyTag::kPhiHat));
}

struct DescentSummary {
  std::size_t dim_sel_phi = 0;
  std::size_t dim_sel_phihat = 0;
  long rank_lower = 0;
  long rank_upper = 0;
  std::optional<long> rank_exact;
};

/// Bounds from Selmer dimensions and a lower bound from known points.
inline DescentSummary rank_bounds(std::size_t dim_phi, std::size_t dim_phihat, long lower) {
  DescentSummary d;
  d.dim_sel_phi = dim_phi;
  d.dim_sel_phihat = dim_phihat;
  d.rank_upper = static_cast<long>(dim_phi + dim_phihat) - 2;
  d.rank_lower = lower;
  if (d.rank_lower > d.rank_upper) throw ConsistencyError("rank lower bound exceeds the Selmer bound");
  if (d.rank_lower == d.rank_upper) d.rank_exact = d.rank_lower;
  return d;
}

/// Rank bounds for E_{a,b,d}; known_points lie on E.
inline DescentSummary rank_from_descent(const FamilyParams& f, const std::vector<Point>& known_points,
                                        const std::optional<LocalTables>& tables = std::nullopt) {
  f.validate();
  LocalTables t = tables ? *tables : compute_local_tables(f, family_support(f));
  if (square_class(f.beta_prime(), t.support).is_identity()) {
    throw DomainError("beta' is a rational square: full 2-torsion is not supported");
  }
  SelmerGroup s = selmer_from_tables(t, IsogenyTag::kPhi);
  SelmerGroup sh = selmer_from_tables(t, IsogenyTag::kPhiHat);
  CurvePair cp = make_pair(f);
  std::vector<SquareClass> classes{square_class(f.beta(), t.support)};
  bool nontorsion = false;
  for (const auto& p : known_points) {
    require_on_curve(cp.e, p);
    if (p.infinity) continue;
    classes.push_back(connecting_image(f, IsogenyTag::kPhiHat, p, t.support));
    if (!p.x.is_zero() && is_nontorsion(cp.e, p)) nontorsion = true;
  }
  // Im(delta) holds the nontrivial class of beta'; Im(delta') holds `classes`
  std::vector<Integer> support = t.support;
  for (const auto& c : classes)
    for (const auto& p : c.primes())
      if (!std::binary_search(support.begin(), support.end(), p)) throw ConsistencyError("point image outside the bad support");
  std::vector<F2Vector> rows;
  for (const auto& c : classes) rows.push_back(class_coordinates(c, support));
  long lower = static_cast<long>(f2_span_dim(rows)) - 1;
  if (nontorsion && lower < 1) lower = 1;
  return rank_bounds(s.dim(), sh.dim(), lower);
}

/// rank E(Q(sqrt D)) = rank E(Q) + rank E_D(Q).
inline long twist_rank_over_L(long rank_e1_q, long rank_ed_q) { return rank_e1_q + rank_ed_q; }

}  // namespace rk
