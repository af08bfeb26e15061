// Copyright 2026 The rankone Authors
//
// Licensed under the Apache License, Version 2.0 (see
// LICENSE or https://www.apache.org/licenses/LICENSE-2.0).
// This file may not be copied, modified, or distributed
// except according to those terms.

// JSON encodings shared by site, checkpoint and certificate files.
// Integers are decimal strings, rationals {"num","den"}, no floats anywhere.

#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "rankone/exactnum.hpp"
#include "rankone/factor.hpp"
#include "rankone/localimg.hpp"
#include "rankone/redtype.hpp"

namespace rk {

using Json = nlohmann::json;

/// Malformed or inconsistent input document.
class FormatError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline Json to_json(const Integer& z) { return to_string(z); }

inline Json to_json(const Rational& q) { return Json{{"num", to_string(q.num())}, {"den", to_string(q.den())}}; }

inline Integer integer_from_json(const Json& j) {
  if (!j.is_string()) throw FormatError("expected a decimal string, got " + j.dump());
  try {
    return parse_integer(j.get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
}

inline Rational rational_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("num") || !j.contains("den")) throw FormatError("expected {num, den}, got " + j.dump());
  Integer d = integer_from_json(j.at("den"));
  if (d <= 0) throw FormatError("rational denominator must be positive");
  Rational q(integer_from_json(j.at("num")), d);
  if (q.den() != d) throw FormatError("rational not in lowest terms: " + j.dump());
  return q;
}

inline Json to_json(const SquareClass& c) { return to_string(c.value()); }

/// Parses a signed squarefree integer whose prime factors all lie in `support`.
inline SquareClass square_class_from_json(const Json& j, const std::vector<Integer>& support) {
  Integer v = integer_from_json(j);
  if (v == 0) throw FormatError("zero is not a square class");
  Integer rest = abs(v);
  std::vector<Integer> ps;
  for (const auto& p : support) {
    if (mpz_divisible_p(rest.get_mpz_t(), p.get_mpz_t()) == 0) continue;
    auto [e, r] = split_valuation(rest, p);
    if (e != 1) throw FormatError("square class " + to_string(v) + " is not squarefree");
    ps.push_back(p);
    rest = r;
  }
  if (rest != 1) throw FormatError("square class " + to_string(v) + " is not supported on the listed primes");
  return SquareClass(sgn(v), std::move(ps));
}

inline Json to_json(const std::vector<Integer>& v) {
  Json a = Json::array();
  for (const auto& x : v) a.push_back(to_string(x));
  return a;
}

inline std::vector<Integer> integers_from_json(const Json& j) {
  if (!j.is_array()) throw FormatError("expected an array of integers");
  std::vector<Integer> out;
  for (const auto& x : j) out.push_back(integer_from_json(x));
  return out;
}

/// A local image as the sorted list of its canonical representatives.
inline Json to_json(const LocalImage& img) {
  Json a = Json::array();
  for (const auto& r : img.representatives()) a.push_back(to_string(r));
  return a;
}

inline LocalImage local_image_from_json(const Place& v, const Json& j) {
  if (!j.is_array()) throw FormatError("expected a list of local representatives");
  std::vector<unsigned> elems;
  for (const auto& r : j) elems.push_back(local_bits(Rational(integer_from_json(r)), v));
  LocalImage img(v, elems);
  if (!img.is_subgroup()) throw FormatError("local image at " + v.str() + " is not a subgroup");
  return img;
}

inline Json to_json(const LocalReduction& r) {
  Json j{{"kodaira", r.kodaira},
         {"tamagawa", std::to_string(r.tamagawa)},
         {"v_min_disc", std::to_string(r.v_min_disc)},
         {"conductor_exponent", std::to_string(r.conductor_exponent)}};
  j["split"] = r.split ? Json(*r.split) : Json(nullptr);
  return j;
}

// FNV-1a, 64 bit.
inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Canonical text: keys sorted (nlohmann objects are ordered maps), compact.
inline std::string canonical(const Json& j) { return j.dump(); }

inline std::string canonical_hash(const Json& j) { return hex64(fnv1a64(canonical(j))); }

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

inline void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace rk
