// Copyright 2026 The rankone Authors
//
// Licensed under the Apache License, Version 2.0 (see
// LICENSE or https://www.apache.org/licenses/LICENSE-2.0).
// This file may not be copied, modified, or distributed
// except according to those terms.

// Certificates for rank E_1(Q) = 1, rank E_D(Q) = 0, rank E_1(Q(sqrt D)) = 1:
// both descents, local tables, reduction types and the point P1, recorded
// so that every entry can be recomputed from (a, b, D, S).

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "rankone/curvefam.hpp"
#include "rankone/json_io.hpp"
#include "rankone/localimg.hpp"
#include "rankone/pairsearch.hpp"
#include "rankone/redtype.hpp"
#include "rankone/selmer.hpp"
#include "rankone/sitebuilder.hpp"

namespace rk {

inline constexpr const char* kToolVersion = "rankone 1.0.0";
inline constexpr const char* kCertificateVersion = "1";

/// What a certificate is computed from.
struct CertifyInput {
  Rational a, b;
  Integer D;
  std::vector<Integer> S;      // primes treated as S; S0(D) when no site is given
  std::optional<Integer> pi1;  // from the site, for the q3 diagnostic
  std::optional<std::string> site_hash;
};

/// A pair whose descent does not give ranks (1, 0); carries the full record.
class CertificationFailed : public std::runtime_error {
 public:
  CertificationFailed(const std::string& what, Json record) : std::runtime_error(what), record(std::move(record)) {}
  Json record;
};

struct Certificate {
  Json record;
  const Json& json() const { return record; }
};

inline CertifyInput input_from_site(const Rational& a, const Rational& b, const SiteSpec& site) {
  return {a, b, site.D, site.all_primes(), site.pi1, site_hash(site)};
}

inline CertifyInput input_without_site(const Rational& a, const Rational& b, const Integer& D) {
  auto [s0, desc] = build_S0(D);
  return {a, b, D, s0, std::nullopt, std::nullopt};
}

namespace detail {

inline Json curve_json(const WeierstrassCurve& e) { return Json{{"alpha", to_json(e.alpha)}, {"beta", to_json(e.beta)}}; }

inline Json point_json(const Point& p) {
  if (p.infinity) return Json{{"infinity", true}};
  return Json{{"x", to_json(p.x)}, {"y", to_json(p.y)}};
}

inline Json basis_json(const SelmerGroup& s) {
  Json a = Json::array();
  for (const auto& c : s.basis) a.push_back(to_json(c));
  return a;
}

inline Json expected_json(const ExpectedReduction& e) {
  Json j{{"kodaira", e.kodaira}, {"tamagawa", std::to_string(e.tamagawa)}};
  j["split"] = e.split ? Json(*e.split) : Json(nullptr);
  return j;
}

/// S-free part of the numerator of x (denominators are S-units by construction).
inline Integer s_free_numerator(const Rational& x, const std::vector<Integer>& S) {
  Integer n = abs(x.num());
  for (const auto& p : S) n = split_valuation(n, p).second;
  return n;
}

struct TwistRecord {
  Json local = Json::object();
  SelmerGroup phi, phihat;
  CasselsCheck cassels;
  DescentSummary descent;
  std::vector<std::string> failures;
};

inline TwistRecord twist_record(const FamilyParams& f, const std::vector<Integer>& known, bool with_point) {
  TwistRecord r;
  std::vector<Integer> support = family_support(f, known);
  LocalTables t = compute_local_tables(f, support);
  CurvePair cp = make_pair(f);
  for (const auto& v : t.places) {
    Json entry;
    entry["phi_image"]["bruteforce"] = to_json(t.phi.at(v));
    entry["phi_image"]["formula"] = image_formula_applies(f, v) ? to_json(image_formula(f, v.p())) : Json(nullptr);
    entry["phi_hat_image"] = to_json(t.phi_hat.at(v));
    if (v.is_real()) {
      entry["reduction"] = nullptr;
    } else {
      const Integer& p = v.p();
      Json red{{"E", to_json(tate_at(cp.e, p))}, {"E_prime", to_json(tate_at(cp.eprime, p))}};
      bool predicted = p != 2 && valuation(f.d, p) == 0;
      Profile m = valuation_profile(f, p);
      try {
        if (!predicted) throw UnsupportedProfile("");
        bool dsq = is_local_square(f.d, v);
        bool msq = is_local_square(Rational(-2) * f.a * f.apb() * f.d, v);
        red["expected_E"] = expected_json(expected_reduction(m, dsq, msq, false));
        red["expected_E_prime"] = expected_json(expected_reduction(m, dsq, msq, true));
        for (const char* key : {"E", "E_prime"}) {
          const Json& got = red[key];
          const Json& want = red[std::string("expected_") + key];
          bool same = got["kodaira"] == want["kodaira"] && got["tamagawa"] == want["tamagawa"] &&
                      (want["split"].is_null() || got["split"] == want["split"]);
          if (!same) throw ConsistencyError("reduction at " + v.str() + " differs from the profile prediction");
        }
      } catch (const UnsupportedProfile&) {
        red["expected_E"] = nullptr;
        red["expected_E_prime"] = nullptr;
      }
      red["profile"] = Json::array({std::to_string(m[0]), std::to_string(m[1]), std::to_string(m[2])});
      entry["reduction"] = red;
    }
    r.local[v.str()] = entry;
  }
  r.phi = selmer_from_tables(t, IsogenyTag::kPhi);
  r.phihat = selmer_from_tables(t, IsogenyTag::kPhiHat);
  if (!selmer_contains(r.phi, square_class(f.beta_prime(), t.support), t.support)) throw ConsistencyError("Sel_phi misses beta'");
  if (!selmer_contains(r.phihat, square_class(f.beta(), t.support), t.support)) throw ConsistencyError("Sel_phi_hat misses beta");
  r.cassels = cassels_ratio_from(t, r.phi, r.phihat);
  std::vector<Point> pts;
  if (with_point) pts.push_back(marked_point(f.a, f.b));
  r.descent = rank_from_descent(f, pts, t);
  return r;
}

}  // namespace detail

/// Builds the full record and the list of unmet requirements.
inline std::pair<Json, std::vector<std::string>> certificate_record(const CertifyInput& in) {
  FamilyParams f1{in.a, in.b, Rational(1)}, fD{in.a, in.b, Rational(in.D)};
  f1.validate();
  fD.validate();
  if (in.D == 0 || in.D == 1 || !is_squarefree(in.D)) throw std::invalid_argument("D must be squarefree and not 0 or 1");
  std::vector<std::string> failures;
  std::vector<Integer> S = in.S;
  std::sort(S.begin(), S.end());

  Json rec;
  rec["kind"] = "rankone-certificate";
  rec["version"] = kCertificateVersion;
  rec["D"] = to_string(in.D);
  rec["a"] = to_json(in.a);
  rec["b"] = to_json(in.b);
  rec["S"] = to_json(S);
  rec["pi1"] = in.pi1 ? Json(to_string(*in.pi1)) : Json(nullptr);
  rec["site_hash"] = in.site_hash ? Json(*in.site_hash) : Json(nullptr);
  rec["toolchain"] = kToolVersion;

  for (const auto& [x, what] : {std::pair{in.a, "a"}, std::pair{in.a + in.b, "a+b"}, std::pair{in.b - in.a, "b-a"}}) {
    Integer d = x.den();
    for (const auto& p : S) d = split_valuation(d, p).second;
    if (d != 1) failures.push_back(std::string("denominator of ") + what + " is not an S-unit");
  }
  Integer q1 = detail::s_free_numerator(in.a, S), q2 = detail::s_free_numerator(in.a + in.b, S),
          q3 = detail::s_free_numerator(in.b - in.a, S);
  Json primality = Json::object();
  std::vector<Integer> known = S;
  for (const auto& [q, name] : {std::pair{q1, "q1"}, std::pair{q2, "q2"}, std::pair{q3, "q3"}}) {
    bool prime = is_prime(q);
    rec["q"][name] = to_string(q);
    primality[name] = Json{{"prime", prime}, {"proven", prime && primality_is_proven(q)}};
    if (prime) known.push_back(q);
  }
  rec["primality"] = Json{{"test", "GMP mpz_probab_prime_p (BPSW + Miller-Rabin, default unseeded generator)"},
                          {"reps", std::to_string(kPrimalityReps)},
                          {"results", primality}};
  if (!(in.a.sign() > 0 && in.a < in.b)) failures.push_back("0 < a < b fails");

  CurvePair c1 = make_pair(f1), cD = make_pair(fD);
  rec["curves"] = Json{{"E1", detail::curve_json(c1.e)},
                       {"E1_prime", detail::curve_json(c1.eprime)},
                       {"ED", detail::curve_json(cD.e)},
                       {"ED_prime", detail::curve_json(cD.eprime)}};
  rec["j_invariant"] = to_json(j_invariant(in.a, in.b));
  if (!(j_invariant(in.a, in.b) == c1.e.j_invariant())) throw ConsistencyError("j-invariant formula mismatch");

  std::vector<Integer> dprimes;
  for (const auto& [p, e] : factor(abs(in.D))) dprimes.push_back(p);
  known.insert(known.end(), dprimes.begin(), dprimes.end());
  std::sort(known.begin(), known.end());
  known.erase(std::unique(known.begin(), known.end()), known.end());

  detail::TwistRecord r1 = detail::twist_record(f1, known, true);
  detail::TwistRecord rD = detail::twist_record(fD, known, false);
  rec["local"] = Json{{"1", r1.local}, {"D", rD.local}};
  rec["selmer"] = Json{{"phi_1", detail::basis_json(r1.phi)},
                       {"phi_hat_1", detail::basis_json(r1.phihat)},
                       {"phi_D", detail::basis_json(rD.phi)},
                       {"phi_hat_D", detail::basis_json(rD.phihat)}};
  std::vector<std::size_t> dims{r1.phi.dim(), r1.phihat.dim(), rD.phi.dim(), rD.phihat.dim()};
  Json dj = Json::array();
  for (auto d : dims) dj.push_back(std::to_string(d));
  rec["selmer_dims"] = dj;
  Json oj = Json::array();
  for (auto d : dims) oj.push_back(to_string(ipow(Integer(2), d)));
  rec["selmer_orders"] = oj;
  rec["cassels"] = Json{{"1", Json{{"lhs", to_json(r1.cassels.lhs)}, {"rhs", to_json(r1.cassels.rhs)}}},
                        {"D", Json{{"lhs", to_json(rD.cassels.lhs)}, {"rhs", to_json(rD.cassels.rhs)}}}};
  if (dims != std::vector<std::size_t>{1, 2, 1, 1}) {
    failures.push_back("Selmer dimensions (" + std::to_string(dims[0]) + "," + std::to_string(dims[1]) + "," +
                       std::to_string(dims[2]) + "," + std::to_string(dims[3]) + ") differ from (1,2,1,1)");
  }

  Point p1 = marked_point(in.a, in.b);
  if (!on_curve(c1.e, p1)) failures.push_back("P1 is not on E_1");
  rec["marked_point"] = detail::point_json(p1);
  Json wit = Json::array();
  bool nontors = true;
  auto mults = small_multiples(c1.e, p1);
  for (std::size_t i = 0; i < mults.size(); ++i) {
    const Point& m = mults[i];
    if (m.infinity) nontors = false;
    wit.push_back(Json{{"k", std::to_string(i + 2)}, {"x", m.infinity ? Json("infinity") : to_json(m.x)}});
  }
  rec["nontorsion_witness"] = wit;
  if (!nontors || !is_nontorsion(c1.e, p1)) failures.push_back("P1 is torsion");

  Json ranks = Json::object();
  if (r1.descent.rank_exact && rD.descent.rank_exact) {
    long rl = twist_rank_over_L(*r1.descent.rank_exact, *rD.descent.rank_exact);
    ranks = Json{{"E1_Q", std::to_string(*r1.descent.rank_exact)},
                 {"ED_Q", std::to_string(*rD.descent.rank_exact)},
                 {"E1_L", std::to_string(rl)}};
    if (*r1.descent.rank_exact != 1 || *rD.descent.rank_exact != 0) failures.push_back("ranks are not (1, 0)");
  } else {
    ranks = Json{{"E1_Q_bounds", Json::array({std::to_string(r1.descent.rank_lower), std::to_string(r1.descent.rank_upper)})},
                 {"ED_Q_bounds", Json::array({std::to_string(rD.descent.rank_lower), std::to_string(rD.descent.rank_upper)})}};
    failures.push_back("descent does not determine both ranks");
  }
  rec["ranks"] = ranks;
  // E(Q)/2E(Q) has dimension rank + 1 since E(Q)[2] = Z/2
  if (r1.descent.rank_exact && rD.descent.rank_exact)
    rec["mod2_dims"] = Json::array({std::to_string(*r1.descent.rank_exact + 1), std::to_string(*rD.descent.rank_exact + 1)});

  Json diag = Json::object();
  bool q2_prime = is_prime(q2), q3_prime = is_prime(q3);
  diag["q2_inert"] = q2_prime && q2 != 2 ? Json(kronecker(field_discriminant(in.D), q2) == -1) : Json(nullptr);
  diag["pi1_nonsquare_mod_q3"] = in.pi1 && q3_prime && q3 != 2 ? Json(kronecker(*in.pi1, q3) == -1) : Json(nullptr);
  SquareClass c2aab = square_class(Rational(2) * in.a * (in.a + in.b), known);
  diag["sel_phi_1_is_2a_apb"] = r1.phi.dim() == 1 && r1.phi.basis.front() == c2aab;
  diag["sel_phi_D_is_2a_apb"] = rD.phi.dim() == 1 && rD.phi.basis.front() == c2aab;
  diag["ratio_1"] = to_json(r1.cassels.lhs);
  diag["ratio_D"] = to_json(rD.cassels.lhs);
  rec["diagnostics"] = diag;
  rec["outcome"] = failures.empty() ? "certified" : "failed";
  Json fj = Json::array();
  for (const auto& s : failures) fj.push_back(s);
  rec["failures"] = fj;
  return {rec, failures};
}

inline Certificate certify(const CertifyInput& in) {
  auto [rec, failures] = certificate_record(in);
  if (!failures.empty()) throw CertificationFailed(failures.front(), rec);
  return Certificate{rec};
}

inline Certificate certify(const Rational& a, const Rational& b, const Integer& D, const SiteSpec& site) {
  if (site.D != D) throw std::invalid_argument("site was built for another D");
  return certify(input_from_site(a, b, site));
}

struct VerifyReport {
  bool ok = false;
  std::string first_divergence;
};

namespace detail {

// First path where two documents differ, or empty.
inline std::string first_difference(const Json& want, const Json& got, const std::string& path) {
  if (want.type() != got.type()) return path + ": type differs";
  if (want.is_object()) {
    for (auto it = want.begin(); it != want.end(); ++it) {
      if (!got.contains(it.key())) return path + "/" + it.key() + ": missing from certificate";
      std::string d = first_difference(it.value(), got.at(it.key()), path + "/" + it.key());
      if (!d.empty()) return d;
    }
    for (auto it = got.begin(); it != got.end(); ++it)
      if (!want.contains(it.key())) return path + "/" + it.key() + ": unexpected entry";
    return {};
  }
  if (want.is_array()) {
    if (want.size() != got.size()) return path + ": length " + std::to_string(got.size()) + " != " + std::to_string(want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
      std::string d = first_difference(want[i], got[i], path + "/" + std::to_string(i));
      if (!d.empty()) return d;
    }
    return {};
  }
  if (want != got) return path + ": recorded " + got.dump() + ", recomputed " + want.dump();
  return {};
}

}  // namespace detail

/// Recomputes the record from (a, b, D, S, pi1, site hash) and compares.
inline VerifyReport verify(const Json& cert) {
  VerifyReport rep;
  try {
    if (cert.value("kind", "") != "rankone-certificate") throw FormatError("not a certificate");
    if (cert.at("version") != kCertificateVersion) throw FormatError("unsupported certificate version");
    CertifyInput in;
    in.a = rational_from_json(cert.at("a"));
    in.b = rational_from_json(cert.at("b"));
    in.D = integer_from_json(cert.at("D"));
    in.S = integers_from_json(cert.at("S"));
    for (const auto& p : in.S)
      if (!is_prime(p)) throw FormatError("S contains the non-prime " + to_string(p));
    if (!cert.at("pi1").is_null()) in.pi1 = integer_from_json(cert.at("pi1"));
    if (!cert.at("site_hash").is_null()) in.site_hash = cert.at("site_hash").get<std::string>();
    auto [rec, failures] = certificate_record(in);
    rep.first_divergence = detail::first_difference(rec, cert, "");
    if (!rep.first_divergence.empty()) return rep;
    if (!failures.empty()) {
      rep.first_divergence = "/outcome: recomputation fails: " + failures.front();
      return rep;
    }
    rep.ok = true;
  } catch (const std::exception& e) {
    rep.first_divergence = std::string("error: ") + e.what();
  }
  return rep;
}

inline VerifyReport verify(const Certificate& c) { return verify(c.record); }

struct DemoOptions {
  Integer height_bound{0};  // 0: default_height(site)
  unsigned jobs = 1;
};

struct DemoResult {
  std::vector<Certificate> certificates;
  std::vector<Json> failures;  // records of pairs that did not certify
  std::size_t duplicates = 0;  // pairs skipped for a repeated j-invariant
  SearchStats stats;
  std::vector<AdmissiblePair> pairs;  // every pair taken from the search
  SearchCursor cursor;
};

/// Certifies pairs from the search until `count` distinct j-invariants.
inline DemoResult demo_batch(const Integer& D, std::size_t count, const SiteSpec& site, const DemoOptions& opt = {},
                             const std::function<void(const std::string&)>& log = {}) {
  if (site.D != D) throw std::invalid_argument("site was built for another D");
  DemoResult out;
  if (count == 0) return out;
  SearchTask task;
  task.site = site;
  task.height_bound = opt.height_bound == 0 ? default_height(site) : opt.height_bound;
  task.count = 1;
  task.jobs = opt.jobs;
  SearchCursor cur;
  std::set<std::string> seen_j;
  while (out.certificates.size() < count) {
    SearchResult r;
    try {
      r = find_pairs(task, cur);
    } catch (const SearchExhausted& e) {
      out.stats.rows += e.result.stats.rows;
      throw SearchExhausted(std::string(e.what()) + " with " + std::to_string(out.certificates.size()) + " of " +
                                std::to_string(count) + " certificates",
                            e.result);
    }
    out.stats.rows += r.stats.rows;
    out.stats.candidates += r.stats.candidates;
    out.stats.prime_tests += r.stats.prime_tests;
    out.stats.found += r.pairs.size();
    cur = r.cursor;
    out.cursor = cur;
    out.pairs.push_back(r.pairs.front());
    const AdmissiblePair& p = r.pairs.front();
    std::string j = j_invariant(p.a, p.b).str();
    if (seen_j.count(j)) {
      ++out.duplicates;
      continue;
    }
    try {
      Certificate c = certify(input_from_site(p.a, p.b, site));
      seen_j.insert(j);
      out.certificates.push_back(std::move(c));
      if (log) log("certified a = " + p.a.str() + ", b = " + p.b.str());
    } catch (const CertificationFailed& e) {
      out.failures.push_back(e.record);
      if (log) log("failed a = " + p.a.str() + ", b = " + p.b.str() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace rk
