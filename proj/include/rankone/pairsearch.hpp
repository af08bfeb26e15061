// Copyright 2026 The rankone Authors
//
// Licensed under the Apache License, Version 2.0 (see
// LICENSE or https://www.apache.org/licenses/LICENSE-2.0).
// This file may not be copied, modified, or distributed
// except according to those terms.

// Sieve for pairs (a, b) = (A/Q, B/Q) inside every U_p of a site with
// 0 < a < b and a, a+b, b-a having prime S-free parts.

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "rankone/exactnum.hpp"
#include "rankone/json_io.hpp"
#include "rankone/sitebuilder.hpp"

namespace rk {

struct ResidueSystem {
  Integer Q{1};        // common denominator
  Integer modulus{1};  // M
  std::vector<std::pair<Integer, Integer>> residues;  // (A0, B0) mod M
};

/// CRT combination of every descriptor ball. One residue pair per prime,
/// so the system has exactly one pair.
inline ResidueSystem residue_system(const SiteSpec& site) {
  ResidueSystem rs;
  for (const auto& [p, u] : site.descriptors)
    if (u.profile[0] < 0 || u.profile[1] < 0 || u.profile[2] < 0) rs.Q *= p;
  Integer A = 0, B = 0, M = 1;
  for (const auto& [p, u] : site.descriptors) {
    long vq = valuation(rs.Q, p);
    if (u.exponent + vq <= 0) throw std::invalid_argument("descriptor exponent too small at " + to_string(p));
    Integer pk = ipow(p, static_cast<unsigned long>(u.exponent + vq));
    auto reduce = [&](const Rational& x) {
      Rational y = x * Rational(rs.Q);
      if (valuation(y.den(), p) != 0) throw std::invalid_argument("template not integral after scaling at " + to_string(p));
      return mod(y.num() * invmod(y.den(), pk), pk);
    };
    Integer ra = reduce(u.a0), rb = reduce(u.b0);
    if (gcd(M, pk) != 1) throw std::invalid_argument("site has a repeated prime " + to_string(p));
    // x = A + M * t with x = r mod pk
    Integer t = mod((ra - A) * invmod(M, pk), pk);
    A += M * t;
    t = mod((rb - B) * invmod(M, pk), pk);
    B += M * t;
    M *= pk;
    A = mod(A, M);
    B = mod(B, M);
  }
  rs.modulus = M;
  rs.residues.push_back({A, B});
  return rs;
}

struct SearchTask {
  SiteSpec site;
  Integer height_bound;  // max(|A|, |B|) = B
  std::size_t count = 1;
  unsigned jobs = 1;
  std::uint32_t sieve_limit = 2000;
};

struct AdmissiblePair {
  Integer A, B;
  Rational a, b;
  Integer q1, q2, q3;  // S-free parts of a, a+b, b-a
  long long row = 0, col = 0;
};

struct SearchStats {
  unsigned long long rows = 0;
  unsigned long long candidates = 0;
  unsigned long long sieved_out = 0;
  unsigned long long prime_tests = 0;
  unsigned long long found = 0;
};

/// Where a scan stopped: the pair at (row, col) and everything before it is done.
struct SearchCursor {
  long long row = -1;
  long long col = -1;
};

struct SearchResult {
  std::vector<AdmissiblePair> pairs;
  SearchStats stats;
  SearchCursor cursor;
  bool exhausted = false;
};

class SearchExhausted : public SearchBoundExhausted {
 public:
  SearchExhausted(const std::string& what, SearchResult r) : SearchBoundExhausted(what), result(std::move(r)) {}
  SearchResult result;
};

/// Task identity for checkpoints: the site and the residue system.
inline std::string task_hash(const SiteSpec& site) {
  ResidueSystem rs = residue_system(site);
  Json j{{"site", site_hash(site)}, {"Q", to_string(rs.Q)}, {"M", to_string(rs.modulus)}};
  Json res = Json::array();
  for (const auto& [a, b] : rs.residues) res.push_back(Json::array({to_string(a), to_string(b)}));
  j["residues"] = res;
  return canonical_hash(j);
}

/// S-free part of n when its S-exponents are exactly `expected`; nullopt otherwise.
inline std::optional<Integer> s_free_part(Integer n, const std::vector<Integer>& S, const std::vector<long>& expected) {
  n = abs(n);
  if (n == 0) return std::nullopt;
  for (std::size_t i = 0; i < S.size(); ++i) {
    auto [e, r] = split_valuation(n, S[i]);
    if (e != expected[i]) return std::nullopt;
    n = r;
  }
  return n;
}

/// Independent recheck of everything an emitted pair must satisfy.
inline std::optional<std::string> pair_violation(const SiteSpec& site, const Rational& a, const Rational& b) {
  if (!(Rational(0) < a && a < b)) return "sign condition 0 < a < b fails";
  for (const auto& [p, u] : site.descriptors)
    if (auto why = descriptor_violation(u, a, b, site.D, site.pi1)) return why;
  std::vector<Integer> S = site.all_primes();
  std::vector<Integer> q;
  for (const Rational& x : {a, a + b, b - a}) {
    Integer n = abs(x.num());
    for (const auto& p : S) n = split_valuation(n, p).second;
    Integer d = x.den();
    for (const auto& p : S) d = split_valuation(d, p).second;
    if (d != 1) return "denominator outside S";
    if (!is_prime(n)) return "S-free part " + to_string(n) + " is not prime";
    q.push_back(n);
  }
  if (q[0] == q[1] || q[1] == q[2] || q[0] == q[2]) return "S-free parts are not distinct";
  return std::nullopt;
}

namespace detail {

struct SieveSetup {
  ResidueSystem rs;
  std::vector<Integer> S;
  std::vector<long> exp_a, exp_apb, exp_bma;  // S-exponents of A, A+B, B-A
  Integer s_a, s_apb, s_bma;                  // the corresponding S-parts
  std::vector<std::uint32_t> primes;          // small primes outside S
  std::vector<std::uint32_t> minv;            // M^{-1} mod l
  std::vector<std::uint32_t> a0_mod, b0_mod, m_mod;
};

inline SieveSetup make_setup(const SiteSpec& site, std::uint32_t limit) {
  SieveSetup s;
  s.rs = residue_system(site);
  s.S = site.all_primes();
  s.s_a = s.s_apb = s.s_bma = 1;
  for (const auto& p : s.S) {
    const auto& u = site.descriptors.at(p);
    long vq = valuation(s.rs.Q, p);
    s.exp_a.push_back(u.profile[0] + vq);
    s.exp_apb.push_back(u.profile[1] + vq);
    s.exp_bma.push_back(u.profile[2] + vq);
    s.s_a *= ipow(p, static_cast<unsigned long>(s.exp_a.back()));
    s.s_apb *= ipow(p, static_cast<unsigned long>(s.exp_apb.back()));
    s.s_bma *= ipow(p, static_cast<unsigned long>(s.exp_bma.back()));
  }
  const auto& [A0, B0] = s.rs.residues.front();
  for (std::uint32_t l : small_primes(limit)) {
    if (std::binary_search(s.S.begin(), s.S.end(), Integer(l))) continue;
    Integer L(l);
    s.primes.push_back(l);
    s.m_mod.push_back(static_cast<std::uint32_t>(mod(s.rs.modulus, L).get_ui()));
    s.minv.push_back(static_cast<std::uint32_t>(invmod(s.rs.modulus, L).get_ui()));
    s.a0_mod.push_back(static_cast<std::uint32_t>(mod(A0, L).get_ui()));
    s.b0_mod.push_back(static_cast<std::uint32_t>(mod(B0, L).get_ui()));
  }
  return s;
}

inline bool fermat_probable_prime(const Integer& n) {
  if (n < 3) return n == 2;
  Integer r, e = n - 1, two = 2;
  mpz_powm(r.get_mpz_t(), two.get_mpz_t(), e.get_mpz_t(), n.get_mpz_t());
  return r == 1;
}

/// All hits in one row, in column order.
inline std::vector<AdmissiblePair> scan_row(const SieveSetup& s, const SiteSpec& site, long long j, long long col_from,
                                            SearchStats& st) {
  const auto& [A0, B0] = s.rs.residues.front();
  const Integer& M = s.rs.modulus;
  Integer B = B0 + M * Integer(static_cast<long>(j));
  // columns with A = A0 + iM < B
  long long ncols = j + (A0 < B0 ? 1 : 0);
  std::vector<AdmissiblePair> out;
  if (ncols <= 0 || col_from >= ncols) return out;
  std::vector<std::uint8_t> bad(static_cast<std::size_t>(ncols), 0);
  for (std::size_t k = 0; k < s.primes.size(); ++k) {
    std::uint64_t l = s.primes[k], inv = s.minv[k];
    std::uint64_t bm = (s.b0_mod[k] + (static_cast<std::uint64_t>(j) % l) * s.m_mod[k]) % l;
    std::uint64_t a0 = s.a0_mod[k];
    // A: a0 + iM = 0; A+B: a0 + bm + iM = 0; B-A: bm - a0 - iM = 0
    std::uint64_t r1 = ((l - a0) % l) * inv % l;
    std::uint64_t r2 = ((2 * l - a0 - bm) % l) * inv % l;
    std::uint64_t r3 = ((l + bm - a0) % l) * inv % l;
    for (std::uint64_t r : {r1, r2, r3})
      for (std::uint64_t i = r; i < static_cast<std::uint64_t>(ncols); i += l) bad[i] = 1;
  }
  // Columns where a form is small enough to equal a sieving prime are tested in full.
  Integer lim = s.primes.empty() ? Integer(0) : Integer(s.primes.back());
  auto force = [&](long long i) {
    Integer A = A0 + M * Integer(static_cast<long>(i));
    return abs(A) <= lim * s.s_a || abs(A + B) <= lim * s.s_apb || abs(B - A) <= lim * s.s_bma;
  };
  for (long long i = std::max(0LL, col_from); i < ncols; ++i) {
    ++st.candidates;
    if (bad[static_cast<std::size_t>(i)] && !force(i)) {
      ++st.sieved_out;
      continue;
    }
    Integer A = A0 + M * Integer(static_cast<long>(i));
    auto q1 = s_free_part(A, s.S, s.exp_a);
    auto q2 = s_free_part(A + B, s.S, s.exp_apb);
    auto q3 = s_free_part(B - A, s.S, s.exp_bma);
    if (!q1 || !q2 || !q3) continue;
    ++st.prime_tests;
    if (!fermat_probable_prime(*q1) || !fermat_probable_prime(*q2) || !fermat_probable_prime(*q3)) continue;
    if (!is_prime(*q1) || !is_prime(*q2) || !is_prime(*q3)) continue;
    if (*q1 == *q2 || *q2 == *q3 || *q1 == *q3) continue;
    AdmissiblePair pr;
    pr.A = A;
    pr.B = B;
    pr.a = Rational(A, s.rs.Q);
    pr.b = Rational(B, s.rs.Q);
    pr.q1 = *q1;
    pr.q2 = *q2;
    pr.q3 = *q3;
    pr.row = j;
    pr.col = i;
    if (auto why = pair_violation(site, pr.a, pr.b)) throw ConsistencyError("sieve emitted a bad pair: " + *why);
    ++st.found;
    out.push_back(std::move(pr));
  }
  return out;
}

}  // namespace detail

/// Scans rows in increasing B (then A) from just after `resume`, calling
/// `emit` for each pair in order, until `count` pairs or the height bound.
/// Throws SearchExhausted when the bound is hit first.
inline SearchResult find_pairs(const SearchTask& task, SearchCursor resume = {},
                               const std::function<void(const AdmissiblePair&)>& emit = {}) {
  detail::SieveSetup setup = detail::make_setup(task.site, task.sieve_limit);
  const auto& [A0, B0] = setup.rs.residues.front();
  const Integer& M = setup.rs.modulus;
  SearchResult res;
  res.cursor = resume;
  if (task.count == 0) return res;
  long long last_row = -1;
  if (task.height_bound >= B0) {
    Integer r = (task.height_bound - B0) / M;
    last_row = r.fits_slong_p() ? r.get_si() : (1LL << 40);
  }
  unsigned jobs = std::max(1U, task.jobs);
  const long long block = 8LL * jobs;
  long long row = std::max(0LL, resume.row);
  while (row <= last_row) {
    long long end = std::min(last_row + 1, row + block);
    std::vector<std::vector<AdmissiblePair>> hits(static_cast<std::size_t>(end - row));
    std::vector<SearchStats> stats(jobs);
    std::vector<std::exception_ptr> errors(jobs);
    auto work = [&](unsigned w) {
      try {
        for (long long j = row + w; j < end; j += jobs) {
          long long from = j == resume.row ? resume.col + 1 : 0;
          hits[static_cast<std::size_t>(j - row)] = detail::scan_row(setup, task.site, j, from, stats[w]);
          ++stats[w].rows;
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    };
    if (jobs == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (unsigned w = 0; w < jobs; ++w) pool.emplace_back(work, w);
      for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
    for (const auto& s : stats) {
      res.stats.rows += s.rows;
      res.stats.candidates += s.candidates;
      res.stats.sieved_out += s.sieved_out;
      res.stats.prime_tests += s.prime_tests;
    }
    for (auto& rowhits : hits) {
      for (auto& p : rowhits) {
        res.pairs.push_back(p);
        res.cursor = {p.row, p.col};
        if (emit) emit(p);
        if (res.pairs.size() == task.count) {
          res.stats.found = res.pairs.size();
          return res;
        }
      }
    }
    res.cursor = {end - 1, std::numeric_limits<long long>::max() - 1};  // past the whole row
    row = end;
  }
  res.stats.found = res.pairs.size();
  res.exhausted = true;
  throw SearchExhausted("height bound " + to_string(task.height_bound) + " exhausted after " +
                            std::to_string(res.pairs.size()) + " of " + std::to_string(task.count) + " pairs",
                        res);
}

/// Default height bound: `rows` full rows of the lattice.
inline Integer default_height(const SiteSpec& site, long rows = 3000) {
  ResidueSystem rs = residue_system(site);
  return rs.residues.front().second + rs.modulus * Integer(rows);
}

// ---------------------------------------------------------------------------
// Checkpoints

inline Json to_json(const AdmissiblePair& p) {
  return Json{{"A", to_string(p.A)},   {"B", to_string(p.B)},   {"a", to_json(p.a)},        {"b", to_json(p.b)},
              {"q1", to_string(p.q1)}, {"q2", to_string(p.q2)}, {"q3", to_string(p.q3)},
              {"row", std::to_string(p.row)}, {"col", std::to_string(p.col)}};
}

inline AdmissiblePair pair_from_json(const Json& j) {
  AdmissiblePair p;
  p.A = integer_from_json(j.at("A"));
  p.B = integer_from_json(j.at("B"));
  p.a = rational_from_json(j.at("a"));
  p.b = rational_from_json(j.at("b"));
  p.q1 = integer_from_json(j.at("q1"));
  p.q2 = integer_from_json(j.at("q2"));
  p.q3 = integer_from_json(j.at("q3"));
  p.row = long_from_json(j.at("row"));
  p.col = long_from_json(j.at("col"));
  return p;
}

struct Checkpoint {
  std::string task;
  SearchCursor cursor;
  Integer last_height{0};
  std::vector<AdmissiblePair> pairs;
  Json failed = Json::array();  // failed certifications, if any
};

inline Json to_json(const Checkpoint& c) {
  Json pairs = Json::array();
  for (const auto& p : c.pairs) pairs.push_back(to_json(p));
  return Json{{"kind", "rankone-checkpoint"},
              {"task_hash", c.task},
              {"last_height", to_string(c.last_height)},
              {"cursor", Json{{"row", std::to_string(c.cursor.row)}, {"col", std::to_string(c.cursor.col)}}},
              {"pairs", pairs},
              {"failed", c.failed}};
}

inline Checkpoint checkpoint_from_json(const Json& j) {
  try {
    if (j.value("kind", "") != "rankone-checkpoint") throw FormatError("not a checkpoint document");
    Checkpoint c;
    c.task = j.at("task_hash").get<std::string>();
    c.last_height = integer_from_json(j.at("last_height"));
    c.cursor.row = long_from_json(j.at("cursor").at("row"));
    c.cursor.col = long_from_json(j.at("cursor").at("col"));
    for (const auto& p : j.at("pairs")) c.pairs.push_back(pair_from_json(p));
    c.failed = j.at("failed");
    return c;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
}

/// Height of the last row a cursor covers.
inline Integer cursor_height(const SiteSpec& site, const SearchCursor& c) {
  if (c.row < 0) return 0;
  ResidueSystem rs = residue_system(site);
  return rs.residues.front().second + rs.modulus * Integer(static_cast<long>(c.row));
}

}  // namespace rk
