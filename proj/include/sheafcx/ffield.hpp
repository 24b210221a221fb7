#pragma once

// Finite fields F_p and F_{p^k}.
//
// Elements of F_{p^k} = F_p[x]/(m(x)) are packed as base-p integers: the
// coefficient of x^i is digit i. Packing makes enumeration a plain counter
// and keeps elements trivially copyable; the prime subfield is exactly the
// codes below p.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <random>
#include <ranges>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sheafcx/arith.hpp"
#include "sheafcx/error.hpp"

namespace sheafcx {

using u64 = std::uint64_t;
using i64 = std::int64_t;

class PrimeField {
 public:
  explicit PrimeField(u64 p) : p_(p), small_(p < (u64{1} << 32)) {
    if (p < 2 || p >= (u64{1} << 62)) throw Error(Errc::BadParams, "prime must satisfy 2 <= p < 2^62");
    if (!arith::is_prime(p)) throw Error(Errc::NotPrime, std::to_string(p) + " is composite");
  }

  u64 p() const noexcept { return p_; }

  u64 add(u64 a, u64 b) const noexcept {
    u64 s = a + b;
    return s >= p_ ? s - p_ : s;
  }
  u64 sub(u64 a, u64 b) const noexcept { return a >= b ? a - b : a + p_ - b; }
  u64 neg(u64 a) const noexcept { return a == 0 ? 0 : p_ - a; }
  u64 mul(u64 a, u64 b) const noexcept { return small_ ? a * b % p_ : arith::mulmod(a, b, p_); }
  u64 pow(u64 a, u64 e) const noexcept { return arith::powmod(a, e, p_); }
  u64 inv(u64 a) const {
    if (a % p_ == 0) throw Error(Errc::ZeroArgument, "inverse of zero in F_" + std::to_string(p_));
    return pow(a, p_ - 2);
  }
  u64 reduce(i64 v) const noexcept {
    i64 r = v % static_cast<i64>(p_);
    return static_cast<u64>(r < 0 ? r + static_cast<i64>(p_) : r);
  }

  friend bool operator==(const PrimeField& a, const PrimeField& b) noexcept { return a.p_ == b.p_; }

 private:
  u64 p_;
  bool small_;
};

inline PrimeField make_prime_field(u64 p) { return PrimeField(p); }

// ---------------------------------------------------------------------------
// Dense univariate polynomials over F_p, coefficients low to high, no
// trailing zeros (the zero polynomial is empty).

using UPoly = std::vector<u64>;

namespace upoly {

inline void trim(UPoly& a) {
  while (!a.empty() && a.back() == 0) a.pop_back();
}

inline int deg(const UPoly& a) { return static_cast<int>(a.size()) - 1; }

inline UPoly x_poly() { return {0, 1}; }

inline UPoly add(const PrimeField& F, const UPoly& a, const UPoly& b) {
  UPoly r(std::max(a.size(), b.size()), 0);
  for (std::size_t i = 0; i < r.size(); ++i)
    r[i] = F.add(i < a.size() ? a[i] : 0, i < b.size() ? b[i] : 0);
  trim(r);
  return r;
}

inline UPoly sub(const PrimeField& F, const UPoly& a, const UPoly& b) {
  UPoly r(std::max(a.size(), b.size()), 0);
  for (std::size_t i = 0; i < r.size(); ++i)
    r[i] = F.sub(i < a.size() ? a[i] : 0, i < b.size() ? b[i] : 0);
  trim(r);
  return r;
}

inline UPoly scale(const PrimeField& F, const UPoly& a, u64 c) {
  UPoly r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = F.mul(a[i], c);
  trim(r);
  return r;
}

inline UPoly mul(const PrimeField& F, const UPoly& a, const UPoly& b) {
  if (a.empty() || b.empty()) return {};
  UPoly r(a.size() + b.size() - 1, 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0) continue;
    for (std::size_t j = 0; j < b.size(); ++j) r[i + j] = F.add(r[i + j], F.mul(a[i], b[j]));
  }
  trim(r);
  return r;
}

inline std::pair<UPoly, UPoly> divmod(const PrimeField& F, UPoly a, const UPoly& b) {
  if (b.empty()) throw Error(Errc::ZeroArgument, "polynomial division by zero");
  trim(a);
  if (a.size() < b.size()) return {{}, a};
  const u64 lead_inv = F.inv(b.back());
  UPoly q(a.size() - b.size() + 1, 0);
  for (int i = deg(a); i >= deg(b); --i) {
    u64 c = F.mul(a[i], lead_inv);
    q[i - deg(b)] = c;
    if (c == 0) continue;
    for (int j = 0; j <= deg(b); ++j) a[i - deg(b) + j] = F.sub(a[i - deg(b) + j], F.mul(c, b[j]));
  }
  trim(a);
  trim(q);
  return {q, a};
}

inline UPoly mod(const PrimeField& F, const UPoly& a, const UPoly& b) { return divmod(F, a, b).second; }

inline UPoly monic(const PrimeField& F, const UPoly& a) {
  if (a.empty()) return a;
  return scale(F, a, F.inv(a.back()));
}

inline UPoly gcd(const PrimeField& F, UPoly a, UPoly b) {
  trim(a);
  trim(b);
  while (!b.empty()) {
    UPoly r = mod(F, a, b);
    a = std::move(b);
    b = std::move(r);
  }
  return monic(F, a);
}

inline UPoly derivative(const PrimeField& F, const UPoly& a) {
  if (a.size() <= 1) return {};
  UPoly r(a.size() - 1);
  for (std::size_t i = 1; i < a.size(); ++i) r[i - 1] = F.mul(a[i], i % F.p());
  trim(r);
  return r;
}

inline UPoly mulmod(const PrimeField& F, const UPoly& a, const UPoly& b, const UPoly& m) {
  return mod(F, mul(F, a, b), m);
}

inline UPoly powmod(const PrimeField& F, UPoly base, u64 e, const UPoly& m) {
  UPoly r = mod(F, UPoly{1}, m);
  base = mod(F, base, m);
  while (e) {
    if (e & 1) r = mulmod(F, r, base, m);
    base = mulmod(F, base, base, m);
    e >>= 1;
  }
  return r;
}

inline u64 eval(const PrimeField& F, const UPoly& a, u64 x) {
  u64 r = 0;
  for (auto it = a.rbegin(); it != a.rend(); ++it) r = F.add(F.mul(r, x), *it);
  return r;
}

inline bool equal(const UPoly& a, const UPoly& b) { return a == b; }

/// Resultant Res(a, b) = lc(a)^deg(b) * prod_{a(r)=0} b(r).
inline u64 resultant(const PrimeField& F, UPoly a, UPoly b) {
  trim(a);
  trim(b);
  if (a.empty() || b.empty()) return 0;
  u64 acc = 1;
  while (true) {
    const int da = deg(a), db = deg(b);
    if (db == 0) return F.mul(acc, F.pow(b[0], static_cast<u64>(da)));
    if (da == 0) return F.mul(acc, F.pow(a[0], static_cast<u64>(db)));
    // Res(a,b) = (-1)^{da db} Res(b,a) and Res(b,a) = lc(b)^{da - dr} Res(b, a mod b).
    UPoly r = mod(F, a, b);
    if (r.empty()) return 0;
    if ((da & 1) && (db & 1)) acc = F.neg(acc);
    acc = F.mul(acc, F.pow(b.back(), static_cast<u64>(da - deg(r))));
    a = std::move(b);
    b = std::move(r);
  }
}

/// x^(p^i) mod f.
inline UPoly frobenius_power(const PrimeField& F, const UPoly& f, int i) {
  UPoly h = mod(F, x_poly(), f);
  for (int j = 0; j < i; ++j) h = powmod(F, h, F.p(), f);
  return h;
}

/// Rabin's test: f of degree k is irreducible iff x^(p^k) = x mod f and
/// gcd(x^(p^(k/r)) - x, f) = 1 for each prime r dividing k.
inline bool is_irreducible(const PrimeField& F, UPoly f) {
  trim(f);
  const int k = deg(f);
  if (k < 1) return false;
  if (k == 1) return true;
  f = monic(F, f);
  if (!equal(frobenius_power(F, f, k), mod(F, x_poly(), f))) return false;
  for (u64 r : arith::prime_divisors(static_cast<u64>(k))) {
    UPoly h = sub(F, frobenius_power(F, f, k / static_cast<int>(r)), x_poly());
    if (deg(gcd(F, h, f)) != 0) return false;
  }
  return true;
}

struct Factor {
  UPoly poly;  // monic irreducible
  int multiplicity;
};

namespace detail {

inline UPoly pth_root(const PrimeField& F, const UPoly& a) {
  // In F_p every coefficient is its own p-th root.
  UPoly r;
  for (std::size_t i = 0; i < a.size(); i += F.p()) r.push_back(a[i]);
  trim(r);
  return r;
}

inline void squarefree(const PrimeField& F, const UPoly& f, int scale_mult, std::vector<Factor>& out) {
  if (deg(f) <= 0) return;
  UPoly c = gcd(F, f, derivative(F, f));
  UPoly w = divmod(F, f, c).first;
  int i = 1;
  while (deg(w) > 0) {
    UPoly y = gcd(F, w, c);
    UPoly z = divmod(F, w, y).first;
    if (deg(z) > 0) out.push_back({monic(F, z), i * scale_mult});
    ++i;
    w = y;
    c = divmod(F, c, y).first;
  }
  if (deg(c) > 0) squarefree(F, pth_root(F, c), scale_mult * static_cast<int>(F.p()), out);
}

inline void equal_degree(const PrimeField& F, const UPoly& g, int d, std::mt19937_64& rng,
                         std::vector<UPoly>& out) {
  if (deg(g) == d) {
    out.push_back(monic(F, g));
    return;
  }
  std::uniform_int_distribution<u64> coeff(0, F.p() - 1);
  while (true) {
    UPoly a(static_cast<std::size_t>(deg(g)));
    for (auto& c : a) c = coeff(rng);
    trim(a);
    if (deg(a) < 1) continue;
    UPoly t;
    if (F.p() == 2) {
      // a + a^2 + ... + a^(2^(d-1)) lands in F_2 on each factor.
      UPoly s = a, acc = a;
      for (int j = 1; j < d; ++j) {
        s = mulmod(F, s, s, g);
        acc = add(F, acc, s);
      }
      t = acc;
    } else {
      // a^((p^d - 1)/2) computed as N(a)^((p-1)/2) with N(a) = a^(1 + p + ... + p^(d-1)).
      UPoly s = a, nrm = a;
      for (int j = 1; j < d; ++j) {
        s = powmod(F, s, F.p(), g);
        nrm = mulmod(F, nrm, s, g);
      }
      t = sub(F, powmod(F, nrm, (F.p() - 1) / 2, g), UPoly{1});
    }
    UPoly h = gcd(F, t, g);
    if (deg(h) > 0 && deg(h) < deg(g)) {
      equal_degree(F, h, d, rng, out);
      equal_degree(F, divmod(F, g, h).first, d, rng, out);
      return;
    }
  }
}

}  // namespace detail

/// Complete factorization into monic irreducibles (squarefree, distinct-degree,
/// then Cantor-Zassenhaus). Deterministic for a fixed seed; factors sorted.
inline std::vector<Factor> factor(const PrimeField& F, UPoly f, u64 seed = 0x5eed) {
  trim(f);
  if (deg(f) <= 0) return {};
  std::vector<Factor> sqf;
  detail::squarefree(F, monic(F, f), 1, sqf);
  std::mt19937_64 rng(seed);
  std::vector<Factor> out;
  for (const auto& [part, mult] : sqf) {
    UPoly g = part;
    UPoly h = mod(F, x_poly(), g);
    for (int d = 1; 2 * d <= deg(g); ++d) {
      h = powmod(F, h, F.p(), g);
      UPoly common = gcd(F, sub(F, h, x_poly()), g);
      if (deg(common) > 0) {
        std::vector<UPoly> pieces;
        detail::equal_degree(F, common, d, rng, pieces);
        for (auto& piece : pieces) out.push_back({std::move(piece), mult});
        g = divmod(F, g, common).first;
        h = mod(F, h, g);
      }
    }
    if (deg(g) > 0) out.push_back({monic(F, g), mult});
  }
  std::sort(out.begin(), out.end(), [](const Factor& a, const Factor& b) {
    if (a.poly.size() != b.poly.size()) return a.poly.size() < b.poly.size();
    return a.poly < b.poly;
  });
  // Merge identical factors coming from different squarefree layers.
  std::vector<Factor> merged;
  for (auto& fac : out) {
    if (!merged.empty() && merged.back().poly == fac.poly) merged.back().multiplicity += fac.multiplicity;
    else merged.push_back(std::move(fac));
  }
  return merged;
}

}  // namespace upoly

// ---------------------------------------------------------------------------

struct FieldElement {
  u64 code = 0;
  friend constexpr bool operator==(FieldElement, FieldElement) = default;
  friend constexpr auto operator<=>(FieldElement, FieldElement) = default;
};

struct ExtFieldOptions {
  /// Largest q for which discrete-log/antilog tables are precomputed.
  u64 dlog_table_cap = u64{1} << 22;
};

class ExtField {
 public:
  /// F_{p^k} with a modulus found by seeded random search. The search keeps
  /// the first irreducible candidate for which x generates the multiplicative
  /// group, so antilog tables are built by shifting.
  static ExtField make(const PrimeField& base, int k, u64 seed = 0, ExtFieldOptions opts = {}) {
    if (k < 1) throw Error(Errc::BadParams, "extension degree must be >= 1");
    const u64 q = arith::checked_pow(base.p(), k);
    if (q == 0 || q >= (u64{1} << 62)) throw Error(Errc::BadParams, "field size p^k must stay below 2^62");
    if (k == 1) return ExtField(base, UPoly{0, 1}, seed, opts, /*x_generates=*/false);
    std::mt19937_64 rng(seed ^ (base.p() * 0x9E3779B97F4A7C15ULL) ^ static_cast<u64>(k));
    std::uniform_int_distribution<u64> coeff(0, base.p() - 1);
    const auto qm1_primes = arith::prime_divisors(q - 1);
    while (true) {
      UPoly m(static_cast<std::size_t>(k) + 1);
      for (int i = 0; i < k; ++i) m[i] = coeff(rng);
      m[k] = 1;
      if (m[0] == 0) continue;
      if (!upoly::is_irreducible(base, m)) continue;
      bool primitive = true;
      for (u64 r : qm1_primes) {
        if (upoly::powmod(base, upoly::x_poly(), (q - 1) / r, m) == UPoly{1}) {
          primitive = false;
          break;
        }
      }
      if (primitive) return ExtField(base, std::move(m), seed, opts, /*x_generates=*/true);
    }
  }

  /// F_p[x]/(modulus) for a caller-supplied irreducible modulus.
  static ExtField with_modulus(const PrimeField& base, UPoly modulus, ExtFieldOptions opts = {}) {
    upoly::trim(modulus);
    if (!upoly::is_irreducible(base, modulus)) throw Error(Errc::BadParams, "modulus is not irreducible");
    modulus = upoly::monic(base, modulus);
    const u64 q = arith::checked_pow(base.p(), upoly::deg(modulus));
    if (q == 0 || q >= (u64{1} << 62)) throw Error(Errc::BadParams, "field size p^k must stay below 2^62");
    return ExtField(base, std::move(modulus), 0, opts, false);
  }

  const PrimeField& base() const noexcept { return impl_->base; }
  u64 characteristic() const noexcept { return impl_->p; }
  int degree() const noexcept { return impl_->k; }
  u64 order() const noexcept { return impl_->q; }
  const UPoly& modulus() const noexcept { return impl_->modulus; }
  u64 seed() const noexcept { return impl_->seed; }
  FieldElement generator() const noexcept { return {impl_->generator}; }

  FieldElement zero() const noexcept { return {0}; }
  FieldElement one() const noexcept { return {1}; }
  FieldElement from_prime(u64 a) const noexcept { return {a % impl_->p}; }
  FieldElement element(u64 code) const {
    if (code >= impl_->q) throw Error(Errc::BadParams, "element code out of range");
    return {code};
  }
  bool in_prime_subfield(FieldElement x) const noexcept { return x.code < impl_->p; }

  /// All q elements in code order.
  auto elements() const {
    return std::views::iota(u64{0}, impl_->q) | std::views::transform([](u64 c) { return FieldElement{c}; });
  }

  std::vector<u64> coefficients(FieldElement x) const {
    std::vector<u64> c(static_cast<std::size_t>(impl_->k));
    for (auto& d : c) {
      d = x.code % impl_->p;
      x.code /= impl_->p;
    }
    return c;
  }

  FieldElement from_coefficients(std::span<const u64> c) const {
    if (c.size() > static_cast<std::size_t>(impl_->k)) {
      UPoly poly(c.begin(), c.end());
      for (auto& v : poly) v %= impl_->p;
      upoly::trim(poly);
      poly = upoly::mod(impl_->base, poly, impl_->modulus);
      return encode(poly);
    }
    u64 code = 0;
    for (std::size_t i = c.size(); i-- > 0;) code = code * impl_->p + c[i] % impl_->p;
    return {code};
  }

  FieldElement add(FieldElement a, FieldElement b) const noexcept {
    const Impl& s = *impl_;
    if (s.k == 1) return {s.base.add(a.code, b.code)};
    if (s.p == 2) return {a.code ^ b.code};
    u64 r = 0;
    for (int i = 0; i < s.k; ++i) {
      u64 d = a.code % s.p + b.code % s.p;
      a.code /= s.p;
      b.code /= s.p;
      if (d >= s.p) d -= s.p;
      r += d * s.pw[i];
    }
    return {r};
  }

  FieldElement neg(FieldElement a) const noexcept {
    const Impl& s = *impl_;
    if (s.k == 1) return {s.base.neg(a.code)};
    if (s.p == 2) return a;
    u64 r = 0;
    for (int i = 0; i < s.k; ++i) {
      r += s.base.neg(a.code % s.p) * s.pw[i];
      a.code /= s.p;
    }
    return {r};
  }

  FieldElement sub(FieldElement a, FieldElement b) const noexcept { return add(a, neg(b)); }

  FieldElement mul(FieldElement a, FieldElement b) const {
    const Impl& s = *impl_;
    if (s.k == 1) return {s.base.mul(a.code, b.code)};
    if (a.code == 0 || b.code == 0) return {0};
    if (const Tables* t = tables()) {
      u64 e = static_cast<u64>(t->log[a.code]) + t->log[b.code];
      if (e >= s.q - 1) e -= s.q - 1;
      return {t->exp[e]};
    }
    return schoolbook_mul(a, b);
  }

  FieldElement pow(FieldElement a, u64 e) const {
    const Impl& s = *impl_;
    if (s.k == 1) return {s.base.pow(a.code, e)};
    if (const Tables* t = tables(); t && a.code != 0) {
      const u64 l = arith::mulmod(t->log[a.code], e % (s.q - 1), s.q - 1);
      return {t->exp[l]};
    }
    FieldElement r = one();
    while (e) {
      if (e & 1) r = mul(r, a);
      a = mul(a, a);
      e >>= 1;
    }
    return r;
  }

  FieldElement inv(FieldElement a) const {
    if (a.code == 0) throw Error(Errc::ZeroArgument, "inverse of zero");
    const Impl& s = *impl_;
    if (s.k == 1) return {s.base.inv(a.code)};
    if (const Tables* t = tables()) {
      const u64 l = t->log[a.code];
      return {t->exp[l == 0 ? 0 : s.q - 1 - l]};
    }
    return pow(a, s.q - 2);
  }

  FieldElement frobenius(FieldElement a) const { return pow(a, impl_->p); }

  /// x + x^p + ... + x^(p^(k-1)), summed literally.
  FieldElement trace_literal(FieldElement x) const {
    FieldElement acc = x, cur = x;
    for (int i = 1; i < impl_->k; ++i) {
      cur = frobenius(cur);
      acc = add(acc, cur);
    }
    return acc;
  }

  /// Trace to F_p through the precomputed images of the power basis.
  u64 trace(FieldElement x) const noexcept {
    const Impl& s = *impl_;
    if (s.k == 1) return x.code;
    u64 acc = 0;
    for (int i = 0; i < s.k; ++i) {
      acc = s.base.add(acc, s.base.mul(x.code % s.p, s.tr_basis[i]));
      x.code /= s.p;
    }
    return acc;
  }

  /// Norm to F_p, x^((q-1)/(p-1)).
  u64 norm(FieldElement x) const {
    const Impl& s = *impl_;
    if (s.k == 1 || x.code == 0) return x.code;
    if (const Tables* t = tables()) {
      const u64 e = static_cast<u64>(arith::mulmod(t->log[x.code], (s.q - 1) / (s.p - 1), s.q - 1));
      return t->exp[e];
    }
    return pow(x, (s.q - 1) / (s.p - 1)).code;
  }

  /// generator^j.
  FieldElement generator_power(u64 j) const {
    j %= impl_->q - 1;
    if (impl_->q <= impl_->opts.dlog_table_cap) {
      if (const Tables* t = dlog_tables()) return {t->exp[j]};
    }
    return pow(generator(), j);
  }

  /// Exponent e in [0, q-1) with generator^e = x.
  u64 dlog(FieldElement x) const {
    if (x.code == 0) throw Error(Errc::ZeroArgument, "discrete log of zero");
    if (impl_->q <= impl_->opts.dlog_table_cap) return dlog_tables()->log[x.code];
    return pohlig_hellman(x);
  }

  bool has_tables() const noexcept { return impl_->q <= impl_->opts.dlog_table_cap; }

  friend bool operator==(const ExtField& a, const ExtField& b) noexcept {
    return a.impl_ == b.impl_ || (a.impl_->p == b.impl_->p && a.impl_->modulus == b.impl_->modulus);
  }

 private:
  struct Tables {
    std::vector<std::uint32_t> log;  // log[0] unused
    std::vector<std::uint32_t> exp;  // size q-1
  };

  struct Impl {
    PrimeField base;
    u64 p;
    int k;
    u64 q;
    UPoly modulus;
    u64 seed;
    ExtFieldOptions opts;
    bool x_generates;
    std::vector<u64> pw;
    std::vector<u64> tr_basis;
    std::vector<u64> qm1_primes;
    u64 generator = 1;
    mutable std::once_flag tables_once;
    mutable std::unique_ptr<Tables> tables;

    Impl(PrimeField b, UPoly m, u64 s, ExtFieldOptions o, bool xg)
        : base(b), p(b.p()), k(upoly::deg(m)), q(arith::checked_pow(b.p(), upoly::deg(m))),
          modulus(std::move(m)), seed(s), opts(o), x_generates(xg) {}
  };

  ExtField(const PrimeField& base, UPoly modulus, u64 seed, ExtFieldOptions opts, bool x_generates)
      : impl_(std::make_shared<Impl>(base, std::move(modulus), seed, opts, x_generates)) {
    Impl& s = *impl_;
    s.pw.resize(static_cast<std::size_t>(s.k));
    u64 acc = 1;
    for (int i = 0; i < s.k; ++i) {
      s.pw[i] = acc;
      if (i + 1 < s.k) acc *= s.p;
    }
    s.qm1_primes = arith::prime_divisors(s.q - 1);
    s.generator = find_generator();
    s.tr_basis.resize(static_cast<std::size_t>(s.k));
    for (int i = 0; i < s.k; ++i) s.tr_basis[i] = trace_literal_nocache({s.pw[i]}).code;
  }

  const Tables* tables() const {
    if (impl_->k == 1 || impl_->q > impl_->opts.dlog_table_cap) return nullptr;
    return dlog_tables();
  }

  const Tables* dlog_tables() const {
    std::call_once(impl_->tables_once, [this] { build_tables(); });
    return impl_->tables.get();
  }

  void build_tables() const {
    const Impl& s = *impl_;
    auto t = std::make_unique<Tables>();
    t->log.assign(s.q, 0);
    t->exp.resize(s.q - 1);
    FieldElement cur = one();
    for (u64 i = 0; i + 1 < s.q; ++i) {
      t->exp[i] = static_cast<std::uint32_t>(cur.code);
      t->log[cur.code] = static_cast<std::uint32_t>(i);
      cur = s.x_generates ? times_x(cur) : slow_mul(cur, generator());
    }
    impl_->tables = std::move(t);
  }

  FieldElement slow_mul(FieldElement a, FieldElement b) const {
    if (impl_->k == 1) return {impl_->base.mul(a.code, b.code)};
    if (a.code == 0 || b.code == 0) return {0};
    return schoolbook_mul(a, b);
  }

  FieldElement slow_pow(FieldElement a, u64 e) const {
    FieldElement r = one();
    while (e) {
      if (e & 1) r = slow_mul(r, a);
      a = slow_mul(a, a);
      e >>= 1;
    }
    return r;
  }

  FieldElement times_x(FieldElement a) const {
    const Impl& s = *impl_;
    const u64 top = a.code / s.pw[s.k - 1];
    const u64 low = a.code % s.pw[s.k - 1];
    // x * a = low*x + top*x^k, with x^k = -(m_0 + ... + m_{k-1} x^{k-1}).
    u64 r = 0;
    for (int i = s.k - 1; i >= 0; --i) {
      u64 d = i >= 1 ? (low / s.pw[i - 1]) % s.p : 0;
      d = s.base.sub(d, s.base.mul(top, s.modulus[i]));
      r += d * s.pw[i];
    }
    return {r};
  }

  FieldElement schoolbook_mul(FieldElement a, FieldElement b) const {
    const Impl& s = *impl_;
    const int k = s.k;
    std::vector<u64> da(k), db(k), prod(2 * k - 1, 0);
    for (int i = 0; i < k; ++i) {
      da[i] = a.code % s.p;
      a.code /= s.p;
      db[i] = b.code % s.p;
      b.code /= s.p;
    }
    for (int i = 0; i < k; ++i) {
      if (da[i] == 0) continue;
      for (int j = 0; j < k; ++j) prod[i + j] = s.base.add(prod[i + j], s.base.mul(da[i], db[j]));
    }
    for (int i = 2 * k - 2; i >= k; --i) {
      const u64 c = prod[i];
      if (c == 0) continue;
      for (int j = 0; j < k; ++j) prod[i - k + j] = s.base.sub(prod[i - k + j], s.base.mul(c, s.modulus[j]));
    }
    u64 r = 0;
    for (int i = k - 1; i >= 0; --i) r = r * s.p + prod[i];
    return {r};
  }

  FieldElement encode(const UPoly& poly) const {
    u64 r = 0;
    for (std::size_t i = poly.size(); i-- > 0;) r = r * impl_->p + poly[i];
    return {r};
  }

  FieldElement trace_literal_nocache(FieldElement x) const {
    FieldElement acc = x, cur = x;
    for (int i = 1; i < impl_->k; ++i) {
      cur = slow_pow(cur, impl_->p);
      acc = {add(acc, cur).code};
    }
    return acc;
  }

  bool is_generator(FieldElement g) const {
    for (u64 r : impl_->qm1_primes)
      if (slow_pow(g, (impl_->q - 1) / r) == one()) return false;
    return true;
  }

  u64 find_generator() const {
    const Impl& s = *impl_;
    if (s.q == 2) return 1;
    if (s.x_generates) return s.p;  // the code of x
    for (u64 c = 2; c < s.q; ++c)
      if (is_generator({c})) return c;
    throw Error(Errc::Domain, "no generator found");
  }

  // Pohlig-Hellman over the factorization of q-1, baby-step giant-step in each prime-order subgroup.
  u64 pohlig_hellman(FieldElement x) const {
    const u64 n = impl_->q - 1;
    u64 result = 0, modulus = 1;
    for (const auto& [r, e] : arith::factor(n)) {
      u64 re = 1;
      for (int i = 0; i < e; ++i) re *= r;
      const FieldElement g0 = pow(generator(), n / r);  // order r
      FieldElement gamma = pow(generator(), n / re);
      FieldElement h = pow(x, n / re);
      u64 xk = 0, rpow = 1;
      for (int i = 0; i < e; ++i) {
        FieldElement hk = mul(pow(inv(gamma), xk), h);
        hk = pow(hk, re / (rpow * r));
        const u64 d = bsgs(g0, hk, r);
        xk += d * rpow;
        rpow *= r;
      }
      // CRT merge result (mod modulus) with xk (mod re).
      const u64 t = crt_step(result, modulus, xk, re);
      result += modulus * t;
      modulus *= re;
    }
    return result % n;
  }

  static u64 crt_step(u64 a, u64 m, u64 b, u64 n) {
    // Solve a + m t = b (mod n) for t, with gcd(m, n) = 1.
    const u64 diff = (b % n + n - a % n) % n;
    return arith::mulmod(diff, inverse_mod(m % n, n), n);
  }

  static u64 inverse_mod(u64 a, u64 n) {
    i64 t = 0, nt = 1;
    i64 r = static_cast<i64>(n), nr = static_cast<i64>(a);
    while (nr != 0) {
      const i64 qq = r / nr;
      std::tie(t, nt) = std::make_pair(nt, t - qq * nt);
      std::tie(r, nr) = std::make_pair(nr, r - qq * nr);
    }
    return static_cast<u64>(t < 0 ? t + static_cast<i64>(n) : t);
  }

  u64 bsgs(FieldElement g, FieldElement h, u64 order) const {
    const u64 m = static_cast<u64>(std::ceil(std::sqrt(static_cast<double>(order))));
    std::unordered_map<u64, u64> baby;
    baby.reserve(m);
    FieldElement cur = one();
    for (u64 j = 0; j < m; ++j) {
      baby.emplace(cur.code, j);
      cur = mul(cur, g);
    }
    const FieldElement giant = inv(pow(g, m));
    FieldElement gamma = h;
    for (u64 i = 0; i <= m; ++i) {
      if (auto it = baby.find(gamma.code); it != baby.end()) return (i * m + it->second) % order;
      gamma = mul(gamma, giant);
    }
    throw Error(Errc::Domain, "discrete log not found");
  }

  std::shared_ptr<Impl> impl_;
};

inline ExtField make_extension(const PrimeField& base, int k, u64 seed = 0) { return ExtField::make(base, k, seed); }

inline FieldElement trace_to_prime(const ExtField& F, FieldElement x) { return {F.trace(x)}; }

inline u64 discrete_log(const ExtField& F, FieldElement x) { return F.dlog(x); }

}  // namespace sheafcx
