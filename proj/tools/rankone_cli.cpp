// Copyright 2026 The rankone Authors
//
// Licensed under the Apache License, Version 2.0 (see
// LICENSE or https://www.apache.org/licenses/LICENSE-2.0).
// This file may not be copied, modified, or distributed
// except according to those terms.

// rankone: site / search / certify / verify / demo.
// Exit codes: 0 ok, 1 certification or verification failed, 2 bad input,
// 3 search or scan bound exhausted.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "rankone/rankone.hpp"

namespace {

enum Exit { kOk = 0, kMathFailure = 1, kBadInput = 2, kExhausted = 3 };

struct Options {
  std::string scan_bound = "1000000";
  long extra_exponent = 3;
  unsigned jobs = 1;
  std::string height;  // empty: default_height

  std::string D;
  std::string out;
  std::string site_path;
  std::string checkpoint;
  std::size_t count = 1;
  std::string a, b;
  std::string cert_path;
  std::string out_dir = "certificates";
};

class BadInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

rk::Integer parse_int(const std::string& s, const char* what) {
  try {
    return rk::parse_integer(s);
  } catch (const std::exception&) {
    throw BadInput(std::string("--") + what + ": not an integer: " + s);
  }
}

rk::Rational parse_rat(const std::string& s, const char* what) {
  try {
    return rk::Rational::parse(s);
  } catch (const std::exception&) {
    throw BadInput(std::string("--") + what + ": not a rational: " + s);
  }
}

rk::SiteConfig site_config(const Options& o) {
  rk::SiteConfig c;
  c.scan_bound = parse_int(o.scan_bound, "scan-bound");
  c.extra_exponent = o.extra_exponent;
  if (c.scan_bound <= 0 || c.extra_exponent <= 0) throw BadInput("scan bound and congruence exponent must be positive");
  return c;
}

rk::Integer normalized_D(const std::string& text) {
  rk::Integer raw = parse_int(text, "D");
  rk::NormalizedD n = rk::normalize_D(raw);
  if (n.changed) std::cerr << "warning: D = " << raw << " normalised to its squarefree part " << n.value << "\n";
  return n.value;
}

rk::SiteSpec load_site(const std::string& path) { return rk::site_from_json(rk::read_json_file(path)); }

rk::Integer height_for(const Options& o, const rk::SiteSpec& site) {
  if (o.height.empty()) return rk::default_height(site);
  rk::Integer h = parse_int(o.height, "height");
  if (h <= 0) throw BadInput("--height must be positive");
  return h;
}

void print_pair(const rk::AdmissiblePair& p) {
  std::cout << "a = " << p.a.str() << "\n  b = " << p.b.str() << "\n  q1 = " << p.q1 << "  q2 = " << p.q2
            << "  q3 = " << p.q3 << "\n";
}

int cmd_site(const Options& o) {
  rk::Integer D = normalized_D(o.D);
  rk::SiteSpec s = rk::build_site(D, site_config(o));
  std::cout << rk::site_summary(s);
  for (const auto& c : rk::site_invariants(s))
    if (!c.ok) std::cerr << "site invariant " << c.name << " fails: " << c.detail << "\n";
  std::string out = o.out.empty() ? "site.json" : o.out;
  rk::write_json_file(out, rk::to_json(s));
  std::cout << "wrote " << out << " (hash " << rk::site_hash(s) << ")\n";
  return kOk;
}

int cmd_search(const Options& o) {
  rk::SiteSpec s = load_site(o.site_path);
  rk::SearchTask task;
  task.site = s;
  task.height_bound = height_for(o, s);
  task.count = o.count;
  task.jobs = o.jobs;
  if (task.count == 0) throw BadInput("--count must be positive");

  rk::Checkpoint cp;
  cp.task = rk::task_hash(s);
  if (!o.checkpoint.empty() && std::filesystem::exists(o.checkpoint)) {
    rk::Checkpoint old = rk::checkpoint_from_json(rk::read_json_file(o.checkpoint));
    if (old.task != cp.task) throw BadInput("checkpoint " + o.checkpoint + " belongs to another site");
    cp = old;
    std::cerr << "resuming after row " << cp.cursor.row << " (" << cp.pairs.size() << " pairs so far)\n";
  }
  // --count is the total wanted in the checkpoint
  if (cp.pairs.size() >= task.count) {
    std::cerr << "checkpoint already holds " << cp.pairs.size() << " pairs\n";
    return kOk;
  }
  task.count -= cp.pairs.size();
  auto save = [&](const rk::SearchResult& r) {
    for (const auto& p : r.pairs) cp.pairs.push_back(p);
    cp.cursor = r.cursor;
    cp.last_height = rk::cursor_height(s, r.cursor);
    if (!o.checkpoint.empty()) rk::write_json_file(o.checkpoint, rk::to_json(cp));
  };
  try {
    rk::SearchResult r = rk::find_pairs(task, cp.cursor, print_pair);
    save(r);
    std::cerr << r.pairs.size() << " pairs, " << r.stats.rows << " rows, " << r.stats.prime_tests << " prime tests\n";
    return kOk;
  } catch (const rk::SearchExhausted& e) {
    save(e.result);
    throw;
  }
}

int cmd_certify(const Options& o) {
  rk::Integer D = normalized_D(o.D);
  rk::Rational a = parse_rat(o.a, "a"), b = parse_rat(o.b, "b");
  rk::FamilyParams{a, b, rk::Rational(1)}.validate();
  rk::CertifyInput in;
  if (!o.site_path.empty()) {
    rk::SiteSpec s = load_site(o.site_path);
    if (s.D != D) throw BadInput("site was built for D = " + rk::to_string(s.D));
    in = rk::input_from_site(a, b, s);
  } else {
    in = rk::input_without_site(a, b, D);
  }
  std::string out = o.out.empty() ? "cert.json" : o.out;
  try {
    rk::Certificate c = rk::certify(in);
    rk::write_json_file(out, c.json());
    std::cout << "certified: rank E_1(Q) = 1, rank E_D(Q) = 0, rank E_1(Q(sqrt D)) = 1\nwrote " << out << "\n";
    return kOk;
  } catch (const rk::CertificationFailed& e) {
    rk::write_json_file(out, e.record);
    std::cout << "certification failed: " << e.what() << "\n";
    for (const auto& f : e.record.at("failures")) std::cout << "  " << f.get<std::string>() << "\n";
    std::cout << "diagnostics written to " << out << "\n";
    return kMathFailure;
  }
}

int cmd_verify(const Options& o) {
  rk::Json cert = rk::read_json_file(o.cert_path);
  if (!cert.is_object() || cert.value("kind", "") != "rankone-certificate")
    throw BadInput(o.cert_path + " is not a certificate");
  rk::VerifyReport rep = rk::verify(cert);
  if (rep.ok) {
    std::cout << "ok: every recorded entry recomputes\n";
    return kOk;
  }
  std::cout << "mismatch: " << rep.first_divergence << "\n";
  return kMathFailure;
}

int cmd_demo(const Options& o) {
  rk::Integer D = normalized_D(o.D);
  rk::SiteSpec s = rk::build_site(D, site_config(o));
  rk::DemoOptions opt;
  opt.jobs = o.jobs;
  if (!o.height.empty()) opt.height_bound = height_for(o, s);
  rk::DemoResult r = rk::demo_batch(D, o.count, s, opt, [](const std::string& m) { std::cerr << m << "\n"; });
  std::filesystem::create_directories(o.out_dir);
  for (std::size_t i = 0; i < r.certificates.size(); ++i) {
    const rk::Json& c = r.certificates[i].json();
    std::string path = (std::filesystem::path(o.out_dir) / ("cert_" + std::to_string(i + 1) + ".json")).string();
    rk::write_json_file(path, c);
    std::cout << path << "  j = " << rk::rational_from_json(c.at("j_invariant")).str().substr(0, 40) << "...\n";
  }
  // failed certifications are kept with the search position
  rk::Checkpoint cp;
  cp.task = rk::task_hash(s);
  cp.cursor = r.cursor;
  cp.last_height = rk::cursor_height(s, r.cursor);
  cp.pairs = r.pairs;
  for (const auto& f : r.failures) cp.failed.push_back(f);
  rk::write_json_file((std::filesystem::path(o.out_dir) / "checkpoint.json").string(), rk::to_json(cp));
  std::cout << r.certificates.size() << " certificates with distinct j, " << r.failures.size() << " failed, "
            << r.duplicates << " duplicate j skipped\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rank-one curves with a rank-zero quadratic twist"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_config("--config", "", "key = value file; flags given on the command line win");
  Options o;
  app.add_option("--scan-bound", o.scan_bound, "prime scan bound for site construction")->capture_default_str();
  app.add_option("--extra-exponent", o.extra_exponent, "congruence exponent beyond the profile span")->capture_default_str();
  app.add_option("--jobs", o.jobs, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--height", o.height, "search height bound (default: 3000 lattice rows)");

  auto* site = app.add_subcommand("site", "build the prime set S and congruence conditions for D");
  site->add_option("--D", o.D)->required();
  site->add_option("--out", o.out, "site file (default site.json)");

  auto* search = app.add_subcommand("search", "list admissible pairs (a, b) for a site");
  search->add_option("--site", o.site_path)->required();
  search->add_option("--count", o.count)->capture_default_str();
  search->add_option("--checkpoint", o.checkpoint, "resume from and write to this file");

  auto* certify = app.add_subcommand("certify", "certify one pair");
  certify->add_option("--D", o.D)->required();
  certify->add_option("--a", o.a)->required();
  certify->add_option("--b", o.b)->required();
  certify->add_option("--site", o.site_path);
  certify->add_option("--out", o.out, "certificate file (default cert.json)");

  auto* verify = app.add_subcommand("verify", "recompute a certificate");
  verify->add_option("certificate", o.cert_path)->required();

  auto* demo = app.add_subcommand("demo", "site, search and certify until COUNT distinct curves");
  demo->add_option("--D", o.D)->required();
  demo->add_option("--count", o.count)->capture_default_str();
  demo->add_option("--out-dir", o.out_dir)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kBadInput;
  }

  try {
    if (*site) return cmd_site(o);
    if (*search) return cmd_search(o);
    if (*certify) return cmd_certify(o);
    if (*verify) return cmd_verify(o);
    if (*demo) return cmd_demo(o);
  } catch (const rk::SearchBoundExhausted& e) {
    std::cerr << "exhausted: " << e.what() << "\n";
    return kExhausted;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kBadInput;
  } catch (const rk::DomainError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kBadInput;
  } catch (const rk::ConsistencyError& e) {
    std::cerr << "internal check failed: " << e.what() << "\n";
    return kMathFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  }
  return kBadInput;
}
