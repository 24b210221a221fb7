#pragma once

// The acceptance experiments, shared by the acceptance test binary and `sheafcx selftest`.

#include <boost/math/constants/constants.hpp>

#include <chrono>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sheafcx/bound_calculus.hpp"
#include "sheafcx/equidist.hpp"
#include "sheafcx/parser.hpp"
#include "sheafcx/sum_engine.hpp"

namespace sheafcx::acceptance {

struct CheckResult {
  std::string id;
  std::string title;
  bool pass = false;
  std::string detail;
  double seconds = 0;
  double time_limit = 0;
};

struct Options {
  unsigned threads = 1;
  std::vector<std::string> corpus;  // lines "expression | p | M" for AC-10
};

/// One corpus entry whose Betti sum the L-oracle can compute.
struct CorpusEntry {
  std::string text;
  u64 p = 0;
  int M = 0;
};

inline std::vector<CorpusEntry> parse_corpus(const std::vector<std::string>& lines) {
  std::vector<CorpusEntry> out;
  for (const auto& raw : lines) {
    const auto first = raw.find_first_not_of(" \t\r");
    if (first == std::string::npos || raw[first] == '#') continue;  // '#' inside a line is the (#) operator
    const std::string& line = raw;
    const auto a = line.find('|'), b = line.rfind('|');
    if (a == std::string::npos || a == b) throw Error(Errc::BadParams, "corpus line needs 'expression | p | M': " + raw);
    CorpusEntry e;
    e.text = line.substr(0, a);
    e.p = std::stoull(line.substr(a + 1, b - a - 1));
    e.M = std::stoi(line.substr(b + 1));
    out.push_back(e);
  }
  return out;
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot read " + path);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

namespace detail {

inline std::string poly_text(const std::vector<u64>& c) {  // c[i] = coefficient of x^i
  std::string s;
  for (std::size_t i = c.size(); i-- > 0;) {
    if (c[i] == 0) continue;
    if (!s.empty()) s += " + ";
    s += std::to_string(c[i]);
    if (i >= 1) s += "*x";
    if (i >= 2) s += "^" + std::to_string(i);
  }
  return s.empty() ? "0" : s;
}

inline std::vector<u64> primes_between(u64 lo, u64 hi) {
  std::vector<u64> out;
  for (u64 n = std::max<u64>(lo, 2); n <= hi; ++n)
    if (arith::is_prime(n)) out.push_back(n);
  return out;
}

template <class Fn>
CheckResult timed(const std::string& id, const std::string& title, double limit, Fn fn) {
  CheckResult r;
  r.id = id;
  r.title = title;
  r.time_limit = limit;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    fn(r);
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (r.seconds > limit) {
    r.pass = false;
    r.detail += " [runtime " + std::to_string(r.seconds) + " s over the " + std::to_string(limit) + " s limit]";
  }
  return r;
}

inline std::string fmt(double v, int prec = 3) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

}  // namespace detail

/// Effective constants: recursion, closed-form upper bound, Katz spot values.
inline CheckResult ac1() {
  return detail::timed("AC-1", "effective constants", 1.0, [](CheckResult& r) {
    bool ok = true;
    std::string why;
    // e^{4/13} from below by a Taylor partial sum, so the closed form is checked conservatively.
    Rational e_lower = 0, term = 1;
    for (int k = 0; k < 30; ++k) {
      e_lower += term;
      term *= Rational(4, 13) / (k + 1);
    }
    Rational prev = Rational(65536, 81);
    BigInt fact = 2;  // (n+2)! at n = 0
    for (int n = 0; n <= 12; ++n) {
      const Rational b = tensor_constant(n);
      if (n == 0 && b != prev) ok = false, why += " b_0";
      if (n > 0) {
        const Rational rec = 13 * n * prev + Rational(BigInt(1) << (2 * (8 + n)), 81) * (n + 1) * (n + 1);
        if (b != rec) ok = false, why += " recursion@" + std::to_string(n);
        fact *= n + 2;
      }
      const Rational closed = Rational(65536, 81) * e_lower * Rational(boost::multiprecision::pow(BigInt(13), static_cast<unsigned>(n))) *
                              Rational(fact);
      if (b > closed) ok = false, why += " closed-form@" + std::to_string(n);
      prev = b;
    }
    if (katz_bound(1, 1, 3) != 432) ok = false, why += " B(1,1,3)";
    for (u64 d : {0, 1, 5, 100})
      if (katz_bound(0, 0, d) != 18) ok = false, why += " B(0,0,d)";
    if (katz_bound(2, 3, 2) != 34992) ok = false, why += " B(2,3,2)";
    r.pass = ok;
    r.detail = ok ? "b_0..b_12 exact, closed form holds, B spot values 432/18/34992" : "mismatch:" + why;
  });
}

/// Euler characteristic against the L-oracle for random polynomials.
inline CheckResult ac2(const Options& opt) {
  return detail::timed("AC-2", "GOS vs L-oracle", 120.0, [&](CheckResult& r) {
    std::mt19937_64 rng(20240611);
    const u64 primes[] = {5, 7, 11, 13, 17};
    int failures = 0, cases = 0;
    std::string first;
    while (cases < 50) {
      const int d = 2 + static_cast<int>(rng() % 5);
      const u64 p = primes[rng() % 5];
      if (p % static_cast<u64>(d) == 0) continue;
      std::vector<u64> c(static_cast<std::size_t>(d) + 1);
      for (auto& x : c) x = rng() % p;
      c[static_cast<std::size_t>(d)] = 1 + rng() % (p - 1);
      ++cases;
      const Expr e = parse_expr("AS(psi, " + detail::poly_text(c) + ")");
      SumOptions so;
      so.threads = opt.threads;
      FitOptions fo;
      fo.vanishing_h0_h2 = true;
      fo.purity_p = static_cast<double>(p);
      fo.purity_weight = 1.0;
      const auto est = fit_l_polynomial(power_sums(e, p, d, so), fo);
      if (est.degree != d - 1 || est.chi_c != 1 - d) {
        ++failures;
        if (first.empty())
          first = "; first failure " + to_string(e) + " p=" + std::to_string(p) + " degree " + std::to_string(est.degree);
      }
    }
    r.pass = failures == 0;
    r.detail = std::to_string(cases) + " cases, " + std::to_string(failures) + " failures" + first;
  });
}

/// Weil bound over all monic cubics and quartics.
inline CheckResult ac3(const Options& opt) {
  return detail::timed("AC-3", "Weil bound exhaustive", 300.0, [&](CheckResult& r) {
    u64 checked = 0, violations = 0;
    double worst = 0;  // largest |S| / ((d-1) sqrt p)
    for (u64 p : detail::primes_between(5, 31)) {
      const PrimeField F(p);
      const RootsOfUnity roots(p);
      for (int d : {3, 4}) {
        if (p % static_cast<u64>(d) == 0) continue;
        const u64 count = arith::checked_pow(p, d);
        const double bound = (d - 1) * std::sqrt(static_cast<double>(p));
        std::vector<double> ratio(count);
        parallel_for(count, 4096, opt.threads, [&](u64 idx) {
          UPoly f(static_cast<std::size_t>(d) + 1);
          u64 t = idx;
          for (int i = 0; i < d; ++i) {
            f[static_cast<std::size_t>(i)] = t % p;
            t /= p;
          }
          f[static_cast<std::size_t>(d)] = 1;
          ratio[idx] = std::abs(prime_poly_sum(F, f, roots)) - bound;
        });
        for (double x : ratio) {
          ++checked;
          if (x > 1e-6) ++violations;
          worst = std::max(worst, (x + bound) / bound);
        }
      }
    }
    // Spot-check the fast path against the general engine.
    const auto direct = complete_sum(parse_expr("AS(psi, x^4 + 3*x + 1)"), 29).value;
    UPoly g = {1, 3, 0, 0, 1};
    const double diff = std::abs(direct - prime_poly_sum(PrimeField(29), g, RootsOfUnity(29)));
    r.pass = violations == 0 && diff < 1e-9;
    r.detail = std::to_string(checked) + " polynomials, " + std::to_string(violations) + " violations, max |S|/((d-1)sqrt p) = " +
               detail::fmt(worst, 6);
  });
}

/// Quasi-orthogonality of weight-zero normalized Artin-Schreier sheaves.
inline CheckResult ac4(const Options& opt) {
  return detail::timed("AC-4", "quasi-orthogonality", 120.0, [&](CheckResult& r) {
    auto sheaf = [](const std::vector<u64>& c) {
      return parse_expr("Shift(Twist(AS(psi, " + detail::poly_text(c) + "), 1/2), 1)");
    };
    auto decode = [](u64 idx, u64 p, int len) {
      std::vector<u64> c(static_cast<std::size_t>(len));
      for (auto& x : c) {
        x = idx % p;
        idx /= p;
      }
      return c;
    };
    auto degree = [](const std::vector<u64>& c) {
      for (std::size_t i = c.size(); i-- > 0;)
        if (c[i]) return static_cast<int>(i);
      return -1;
    };
    SumOptions so;
    so.threads = 1;
    double worst_norm = 0, worst_ratio = 0;
    u64 pairs = 0, differences = 0, violations = 0;

    // Every pair (f, g) through the engine where that is affordable.
    struct Range {
      u64 p;
      int max_deg;
    };
    for (const Range& rg : {Range{2, 4}, Range{3, 4}, Range{5, 2}}) {
      const u64 p = rg.p;
      const int len = rg.max_deg + 1;
      const u64 npoly = arith::checked_pow(p, len);
      std::vector<Expr> sheaves(npoly);
      std::vector<std::vector<u64>> polys(npoly);
      for (u64 i = 0; i < npoly; ++i) {
        polys[i] = decode(i, p, len);
        sheaves[i] = sheaf(polys[i]);
        worst_norm = std::max(worst_norm, std::abs(sheafcx::inner_product(sheaves[i], sheaves[i], p, 1, so) - 1.0));
      }
      std::vector<double> worst(npoly, 0.0);
      std::vector<u64> bad(npoly, 0), counted(npoly, 0);
      parallel_for(npoly, 1, opt.threads, [&](u64 i) {
        for (u64 j = 0; j < npoly; ++j) {
          std::vector<u64> h(static_cast<std::size_t>(len));
          for (int k = 0; k < len; ++k)
            h[static_cast<std::size_t>(k)] = (polys[i][static_cast<std::size_t>(k)] + p - polys[j][static_cast<std::size_t>(k)]) % p;
          const int dh = degree(h);
          if (dh < 1 || static_cast<u64>(dh) % p == 0) continue;
          const double bound = (dh - 1) / std::sqrt(static_cast<double>(p));
          const double v = std::abs(sheafcx::inner_product(sheaves[i], sheaves[j], p, 1, so));
          ++counted[i];
          if (v > bound + 1e-9) ++bad[i];
          worst[i] = std::max(worst[i], bound > 0 ? v / bound : v);
        }
      });
      for (u64 i = 0; i < npoly; ++i) {
        pairs += counted[i];
        violations += bad[i];
        worst_ratio = std::max(worst_ratio, worst[i]);
      }
    }

    // All p <= 13, degree <= 4: the pairing only sees h = f - g, so every difference is checked.
    for (u64 p : detail::primes_between(2, 13)) {
      const PrimeField F(p);
      const RootsOfUnity roots(p);
      const u64 npoly = arith::checked_pow(p, 5);
      for (u64 i = 0; i < npoly; ++i) {
        UPoly h = decode(i, p, 5);
        const int dh = degree(h);
        if (dh < 1 || static_cast<u64>(dh) % p == 0) continue;
        upoly::trim(h);
        const double v = std::abs(prime_poly_sum(F, h, roots)) / static_cast<double>(p);
        const double bound = (dh - 1) / std::sqrt(static_cast<double>(p));
        ++differences;
        if (v > bound + 1e-9) ++violations;
        if (bound > 0) worst_ratio = std::max(worst_ratio, v / bound);
      }
    }
    r.pass = worst_norm < 1e-9 && violations == 0;
    r.detail = "max |<A,A> - 1| = " + detail::fmt(worst_norm) + ", " + std::to_string(pairs) + " explicit pairs + " +
               std::to_string(differences) + " differences, " + std::to_string(violations) + " violations, max ratio " +
               detail::fmt(worst_ratio, 6);
  });
}

inline std::string moment_summary(const MomentReport& rep, const std::vector<std::pair<int, int>>& which, bool& ok) {
  std::string s;
  for (const auto& [a, b] : which)
    for (const auto& m : rep.moments)
      if (m.a == a && m.b == b) {
        ok = ok && m.pass;
        s += " (" + std::to_string(a) + "," + std::to_string(b) + "): emp " + detail::fmt(m.empirical.value.real(), 4) + " oracle " +
             detail::fmt(m.oracle.value.real(), 4) + " z " + detail::fmt(m.z, 3) + ";";
      }
  return s;
}

/// Sampled Deligne cubics against U(2).
inline CheckResult ac5(const Options& opt) {
  return detail::timed("AC-5", "equidistribution, general cubics", 180.0, [&](CheckResult& r) {
    bool ok = true;
    std::string detail_text;
    for (u64 p : {499, 997}) {
      FamilyDescriptor f;
      f.n = 1;
      f.d = 3;
      f.p = p;
      f.mode = FamilyMode::Sample;
      f.count = 10000;
      f.seed = 1000 + p;
      CompareOptions co;
      co.oracle_samples = 100000;
      co.oracle_seed = 7 + p;
      co.sums.threads = opt.threads;
      const auto rep = compare(f, co);
      ok = ok && rep.group == HaarGroup::U && rep.N == 2;
      detail_text += " p=" + std::to_string(p) + ":" + moment_summary(rep, {{1, 1}, {2, 2}}, ok);
    }
    r.pass = ok;
    r.detail = detail_text;
  });
}

/// Exhaustive odd cubics against USp(2).
inline CheckResult ac6(const Options& opt) {
  return detail::timed("AC-6", "equidistribution, odd cubics", 180.0, [&](CheckResult& r) {
    FamilyDescriptor f;
    f.n = 1;
    f.d = 3;
    f.p = 499;
    f.variant = FamilyVariant::Odd;
    CompareOptions co;
    co.oracle_samples = 100000;
    co.oracle_seed = 31;
    co.sums.threads = opt.threads;
    const auto rep = compare(f, co);
    bool ok = rep.group == HaarGroup::USp && rep.N == 2 && rep.max_abs_imag < 1e-6;
    const std::string s = moment_summary(rep, {{2, 0}, {4, 0}}, ok);
    r.pass = ok;
    r.detail = std::to_string(rep.family_size) + " sums, max |Im S| = " + detail::fmt(rep.max_abs_imag) + ";" + s;
  });
}

/// Quadratic sums have modulus one.
inline CheckResult ac7(const Options& opt) {
  return detail::timed("AC-7", "quadratic family", 60.0, [&](CheckResult& r) {
    u64 count = 0;
    double worst = 0;
    for (u64 p : detail::primes_between(3, 101)) {
      FamilyDescriptor f;
      f.n = 1;
      f.d = 2;
      f.p = p;
      EquidistOptions eo;
      eo.threads = opt.threads;
      for (const cplx& s : family_sums(f, eo)) {
        worst = std::max(worst, std::abs(std::abs(s) - 1.0));
        ++count;
      }
    }
    r.pass = worst <= 1e-8;
    r.detail = std::to_string(count) + " quadratics, max ||S| - 1| = " + detail::fmt(worst);
  });
}

/// U^2 Gowers norms of linear and quadratic phases.
inline CheckResult ac8(const Options& opt) {
  return detail::timed("AC-8", "Gowers norms", 60.0, [&](CheckResult& r) {
    SumOptions so;
    so.threads = opt.threads;
    double worst = 0;
    u64 count = 0;
    for (u64 p : {5, 7, 11, 13}) {
      for (u64 b = 0; b < p; ++b)
        for (u64 c = 0; c < p; ++c) {
          const Expr e = parse_expr("AS(psi, " + std::to_string(b) + "*x + " + std::to_string(c) + ")");
          worst = std::max(worst, std::abs(gowers_norm(e, 2, p, so) - 1.0));
          ++count;
        }
      for (u64 a = 1; a < p; ++a) {
        const Expr e = parse_expr("AS(psi, " + std::to_string(a) + "*x^2)");
        worst = std::max(worst, std::abs(gowers_norm(e, 2, p, so) - 1.0 / static_cast<double>(p)));
        ++count;
      }
    }
    r.pass = worst <= 1e-8;
    r.detail = std::to_string(count) + " phases, max deviation " + detail::fmt(worst);
  });
}

/// Fourier transform: delta functions, Plancherel, and bound soundness.
inline CheckResult ac9(const Options& opt) {
  return detail::timed("AC-9", "Fourier", 30.0, [&](CheckResult& r) {
    const u64 p = 11;
    SumOptions so;
    so.threads = opt.threads;
    double delta_err = 0, planch_err = 0;
    for (u64 b = 0; b < p; ++b) {
      const auto ft = fourier_table(parse_expr("AS(psi, " + std::to_string(b) + "*x)"), AdditiveSpec{}, p, so);
      const u64 peak = (p - b) % p;
      for (u64 y = 0; y < p; ++y) {
        const cplx expect = y == peak ? cplx(std::sqrt(static_cast<double>(p))) : cplx(0);
        delta_err = std::max(delta_err, std::abs(ft[y] - expect));
      }
    }
    for (const char* s : {"AS(psi, x^3)", "K(chi[2], x) (*) AS(psi, 2*x^2 + x)", "AS(psi, 1/x)", "K(chi[5], x^2 + 1)"}) {
      const Expr e = parse_expr(s);
      const auto ft = fourier_table(e, AdditiveSpec{}, p, so);
      const ExtField K = make_extension(PrimeField(p), 1);
      TraceFunction t(e, K, 1);
      TraceFunction node(expr::Fourier(e, AdditiveSpec{}), K, 1);
      double lhs = 0, rhs = 0;
      for (u64 x = 0; x < p; ++x) {
        const FieldElement pt[1] = {FieldElement{x}};
        rhs += std::norm(t(pt));
        lhs += std::norm(ft[x]);
        delta_err = std::max(delta_err, std::abs(node(pt) - ft[x]));  // table and expression node agree
      }
      planch_err = std::max(planch_err, std::abs(lhs - rhs) / rhs);
    }
    // Bound soundness: the observed Betti sum of the transform never exceeds the propagated bound.
    const Expr ft_cubic = parse_expr("FT(AS(psi, x^3))");
    const auto bound = propagate(ft_cubic);
    i64 betti = 0;
    std::string betti_text;
    for (u64 q : {5, 7}) {
      const auto est = fit_l_polynomial(power_sums(ft_cubic, q, 4, so));
      const i64 b = frobenius_spectrum(est).betti_sum();
      betti = std::max(betti, b);
      betti_text += " p=" + std::to_string(q) + ": " + std::to_string(b);
    }
    const bool sound = bound.numeric && bound.value >= Rational(betti);
    r.pass = delta_err < 1e-9 && planch_err < 1e-9 && sound;
    r.detail = "delta err " + detail::fmt(delta_err) + ", Plancherel err " + detail::fmt(planch_err) + ", observed Betti sum" +
               betti_text + " <= bound " + (bound.numeric ? "~1e" + std::to_string(bound.display().size() - 1) : bound.display());
  });
}

/// Bound soundness on the corpus, thread determinism, exact trails.
inline CheckResult ac10(const Options& opt) {
  return detail::timed("AC-10", "bound-calculus soundness & determinism", 120.0, [&](CheckResult& r) {
    const auto corpus = parse_corpus(opt.corpus);
    if (corpus.empty()) throw Error(Errc::MissingData, "empty corpus");
    int checked = 0, skipped = 0, unsound = 0, nondet = 0, bad_trail = 0;
    std::string notes;
    for (const auto& c : corpus) {
      const Expr e = parse_expr(c.text);
      const auto bound = propagate(e);
      if (!verify_trail(bound.trail)) ++bad_trail;
      if (!bound.numeric) {
        ++skipped;
        continue;
      }
      std::vector<cplx> sums[3];
      const unsigned threads[3] = {1, 2, 8};
      for (int k = 0; k < 3; ++k) {
        SumOptions so;
        so.threads = threads[k];
        so.chunk_size = 1024;
        sums[k] = power_sums(e, c.p, c.M, so);
      }
      if (sums[0] != sums[1] || sums[0] != sums[2]) ++nondet;
      LPolynomialEstimate est;
      try {
        est = fit_l_polynomial(sums[0]);
      } catch (const Error& err) {
        if (err.code() != Errc::Unstable) throw;
        ++skipped;
        notes += " unstable: " + c.text + ";";
        continue;
      }
      const i64 betti = frobenius_spectrum(est).betti_sum();
      ++checked;
      if (bound.value < Rational(betti)) {
        ++unsound;
        notes += " unsound: " + c.text + ";";
      }
    }
    r.pass = unsound == 0 && nondet == 0 && bad_trail == 0 && checked > 0;
    r.detail = std::to_string(checked) + " expressions checked, " + std::to_string(skipped) + " skipped, " + std::to_string(unsound) +
               " unsound, " + std::to_string(nondet) + " nondeterministic, " + std::to_string(bad_trail) + " bad trails" + notes;
  });
}

/// Checks fast enough for an interactive selftest.
inline std::vector<CheckResult> run_fast(const Options& opt = {}) { return {ac1(), ac7(opt), ac8(opt), ac9(opt)}; }

inline std::vector<CheckResult> run_all(const Options& opt) {
  return {ac1(), ac2(opt), ac3(opt), ac4(opt), ac5(opt), ac6(opt), ac7(opt), ac8(opt), ac9(opt), ac10(opt)};
}

inline std::string format_line(const CheckResult& r) {
  return std::string(r.pass ? "PASS " : "FAIL ") + r.id + " " + r.title + " (" + detail::fmt(r.seconds, 3) + " s): " + r.detail;
}

}  // namespace sheafcx::acceptance
