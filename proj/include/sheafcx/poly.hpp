#pragma once

// Sparse multivariate polynomials over a coefficient ring, and rational maps.
//
// Expressions are parsed before the prime is known, so the AST keeps integer
// coefficients; everything is reduced mod p when a field is chosen.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sheafcx/error.hpp"
#include "sheafcx/ffield.hpp"

namespace sheafcx {

/// Checked 64-bit integers.
struct IntRing {
  using value_type = i64;
  value_type zero() const { return 0; }
  value_type one() const { return 1; }
  bool is_zero(value_type a) const { return a == 0; }
  value_type add(value_type a, value_type b) const {
    value_type r;
    if (__builtin_add_overflow(a, b, &r)) throw Error(Errc::Domain, "integer coefficient overflow");
    return r;
  }
  value_type neg(value_type a) const {
    if (a == std::numeric_limits<i64>::min()) throw Error(Errc::Domain, "integer coefficient overflow");
    return -a;
  }
  value_type mul(value_type a, value_type b) const {
    value_type r;
    if (__builtin_mul_overflow(a, b, &r)) throw Error(Errc::Domain, "integer coefficient overflow");
    return r;
  }
  bool operator==(const IntRing&) const = default;
};

struct PrimeRing {
  PrimeField F;
  using value_type = u64;
  value_type zero() const { return 0; }
  value_type one() const { return 1; }
  bool is_zero(value_type a) const { return a == 0; }
  value_type add(value_type a, value_type b) const { return F.add(a, b); }
  value_type neg(value_type a) const { return F.neg(a); }
  value_type mul(value_type a, value_type b) const { return F.mul(a, b); }
  bool operator==(const PrimeRing& o) const { return F == o.F; }
};

using Exponents = std::vector<int>;

template <class Ring>
class MPoly {
 public:
  using Coeff = typename Ring::value_type;

  MPoly() = default;
  MPoly(Ring ring, int nvars) : ring_(std::move(ring)), nvars_(nvars) {}

  static MPoly constant(Ring ring, int nvars, Coeff c) {
    MPoly r(std::move(ring), nvars);
    r.set(Exponents(static_cast<std::size_t>(nvars), 0), c);
    return r;
  }

  /// The variable with index i (0-based).
  static MPoly variable(Ring ring, int nvars, int i) {
    MPoly r(std::move(ring), nvars);
    Exponents e(static_cast<std::size_t>(nvars), 0);
    e[static_cast<std::size_t>(i)] = 1;
    r.set(e, r.ring_.one());
    return r;
  }

  const Ring& ring() const { return ring_; }
  int nvars() const { return nvars_; }
  const std::map<Exponents, Coeff>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  bool is_constant() const {
    return terms_.empty() || (terms_.size() == 1 && total(terms_.begin()->first) == 0);
  }

  Coeff constant_term() const {
    auto it = terms_.find(Exponents(static_cast<std::size_t>(nvars_), 0));
    return it == terms_.end() ? ring_.zero() : it->second;
  }

  void set(const Exponents& e, Coeff c) {
    if (ring_.is_zero(c)) terms_.erase(e);
    else terms_[e] = c;
  }

  Coeff coeff(const Exponents& e) const {
    auto it = terms_.find(e);
    return it == terms_.end() ? ring_.zero() : it->second;
  }

  /// Widen to more variables; existing variables keep their indices.
  MPoly extend(int nvars) const {
    if (nvars < nvars_) throw Error(Errc::AmbientMismatch, "cannot shrink polynomial ring");
    MPoly r(ring_, nvars);
    for (const auto& [e, c] : terms_) {
      Exponents w = e;
      w.resize(static_cast<std::size_t>(nvars), 0);
      r.terms_.emplace(std::move(w), c);
    }
    return r;
  }

  /// Move variable i to index map[i] in a ring with nvars variables.
  MPoly relabel(int nvars, const std::vector<int>& map) const {
    MPoly r(ring_, nvars);
    for (const auto& [e, c] : terms_) {
      Exponents w(static_cast<std::size_t>(nvars), 0);
      for (int i = 0; i < nvars_; ++i) w[static_cast<std::size_t>(map[static_cast<std::size_t>(i)])] += e[static_cast<std::size_t>(i)];
      r.terms_[w] = ring_.add(r.coeff(w), c);
      if (ring_.is_zero(r.terms_[w])) r.terms_.erase(w);
    }
    return r;
  }

  int total_degree() const {
    int d = terms_.empty() ? -1 : 0;
    for (const auto& [e, c] : terms_) d = std::max(d, total(e));
    return d;
  }

  int degree_in(int var) const {
    int d = terms_.empty() ? -1 : 0;
    for (const auto& [e, c] : terms_) d = std::max(d, e[static_cast<std::size_t>(var)]);
    return d;
  }

  /// Highest variable index that actually occurs, or -1.
  int max_variable() const {
    int m = -1;
    for (const auto& [e, c] : terms_)
      for (int i = 0; i < nvars_; ++i)
        if (e[static_cast<std::size_t>(i)] > 0) m = std::max(m, i);
    return m;
  }

  friend MPoly operator+(const MPoly& a, const MPoly& b) {
    MPoly r = a.aligned(b);
    for (const auto& [e, c] : b.widened(r.nvars_).terms_) r.set(e, r.ring_.add(r.coeff(e), c));
    return r;
  }

  MPoly operator-() const {
    MPoly r(ring_, nvars_);
    for (const auto& [e, c] : terms_) r.terms_.emplace(e, ring_.neg(c));
    return r;
  }

  friend MPoly operator-(const MPoly& a, const MPoly& b) { return a + (-b); }

  friend MPoly operator*(const MPoly& a, const MPoly& b) {
    const int n = std::max(a.nvars_, b.nvars_);
    MPoly A = a.widened(n), B = b.widened(n);
    MPoly r(a.ring_, n);
    for (const auto& [ea, ca] : A.terms_) {
      for (const auto& [eb, cb] : B.terms_) {
        Exponents e(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) e[static_cast<std::size_t>(i)] = ea[static_cast<std::size_t>(i)] + eb[static_cast<std::size_t>(i)];
        r.set(e, r.ring_.add(r.coeff(e), r.ring_.mul(ca, cb)));
      }
    }
    return r;
  }

  MPoly pow(int k) const {
    if (k < 0) throw Error(Errc::Domain, "negative polynomial power");
    MPoly r = constant(ring_, nvars_, ring_.one());
    MPoly b = *this;
    while (k) {
      if (k & 1) r = r * b;
      k >>= 1;
      if (k) b = b * b;
    }
    return r;
  }

  friend bool operator==(const MPoly& a, const MPoly& b) {
    const int n = std::max(a.nvars_, b.nvars_);
    return a.widened(n).terms_ == b.widened(n).terms_;
  }

  /// Readable form with variables x1..xn, highest total degree first.
  std::string to_string() const {
    if (terms_.empty()) return "0";
    std::vector<std::pair<Exponents, Coeff>> ts(terms_.begin(), terms_.end());
    std::stable_sort(ts.begin(), ts.end(), [](const auto& l, const auto& r) {
      if (total(l.first) != total(r.first)) return total(l.first) > total(r.first);
      return l.first > r.first;
    });
    std::ostringstream os;
    bool first = true;
    for (const auto& [e, c] : ts) {
      bool negative = false;
      Coeff mag = c;
      if constexpr (std::is_signed_v<Coeff>) {
        if (c < 0) {
          negative = true;
          mag = -c;
        }
      }
      if (first) os << (negative ? "-" : "");
      else os << (negative ? " - " : " + ");
      first = false;
      const bool unit = total(e) > 0 && mag == 1;
      if (!unit) os << mag;
      bool need_star = !unit;
      for (int i = 0; i < static_cast<int>(e.size()); ++i) {
        if (e[static_cast<std::size_t>(i)] == 0) continue;
        if (need_star) os << "*";
        os << "x" << (i + 1);
        if (e[static_cast<std::size_t>(i)] > 1) os << "^" << e[static_cast<std::size_t>(i)];
        need_star = true;
      }
    }
    return os.str();
  }

 private:
  static int total(const Exponents& e) { return std::accumulate(e.begin(), e.end(), 0); }

  MPoly widened(int n) const { return n == nvars_ ? *this : extend(n); }
  MPoly aligned(const MPoly& other) const { return widened(std::max(nvars_, other.nvars_)); }

  Ring ring_{};
  int nvars_ = 0;
  std::map<Exponents, Coeff> terms_;
};

using ZPoly = MPoly<IntRing>;
using FpPoly = MPoly<PrimeRing>;

inline ZPoly zconst(int nvars, i64 c) { return ZPoly::constant(IntRing{}, nvars, c); }
inline ZPoly zvar(int nvars, int i) { return ZPoly::variable(IntRing{}, nvars, i); }

/// Coefficients reduced into F_p.
inline FpPoly reduce_mod(const ZPoly& f, const PrimeField& F) {
  FpPoly r(PrimeRing{F}, f.nvars());
  for (const auto& [e, c] : f.terms()) r.set(e, F.reduce(c));
  return r;
}

/// Dense univariate view of a polynomial that only involves variable `var`.
inline UPoly to_upoly(const FpPoly& f, int var = 0) {
  UPoly r;
  for (const auto& [e, c] : f.terms()) {
    for (int i = 0; i < f.nvars(); ++i)
      if (i != var && e[static_cast<std::size_t>(i)] != 0)
        throw Error(Errc::Domain, "polynomial is not univariate in the requested variable");
    const auto d = static_cast<std::size_t>(e[static_cast<std::size_t>(var)]);
    if (r.size() <= d) r.resize(d + 1, 0);
    r[d] = c;
  }
  upoly::trim(r);
  return r;
}

/// f = num / den in nvars variables with integer coefficients.
class RationalMap {
 public:
  RationalMap() : num_(zconst(0, 0)), den_(zconst(0, 1)) {}

  explicit RationalMap(ZPoly num) : RationalMap(std::move(num), zconst(0, 1)) {}

  RationalMap(ZPoly num, ZPoly den) {
    if (den.is_zero()) throw Error(Errc::BadParams, "rational map with zero denominator");
    const int n = std::max(num.nvars(), den.nvars());
    num_ = num.extend(n);
    den_ = den.extend(n);
    normalize();
  }

  int nvars() const { return num_.nvars(); }
  const ZPoly& numerator() const { return num_; }
  const ZPoly& denominator() const { return den_; }
  bool is_polynomial() const { return den_.is_constant(); }
  int max_variable() const { return std::max(num_.max_variable(), den_.max_variable()); }

  RationalMap extend(int nvars) const { return RationalMap(num_.extend(nvars), den_.extend(nvars)); }
  RationalMap relabel(int nvars, const std::vector<int>& map) const {
    return RationalMap(num_.relabel(nvars, map), den_.relabel(nvars, map));
  }

  friend RationalMap operator+(const RationalMap& a, const RationalMap& b) {
    if (a.den_ == b.den_) return RationalMap(a.num_ + b.num_, a.den_);
    return RationalMap(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
  }
  friend RationalMap operator-(const RationalMap& a, const RationalMap& b) { return a + (-b); }
  RationalMap operator-() const { return RationalMap(-num_, den_); }
  friend RationalMap operator*(const RationalMap& a, const RationalMap& b) {
    return RationalMap(a.num_ * b.num_, a.den_ * b.den_);
  }
  friend RationalMap operator/(const RationalMap& a, const RationalMap& b) {
    if (b.num_.is_zero()) throw Error(Errc::BadParams, "division by the zero polynomial");
    return RationalMap(a.num_ * b.den_, a.den_ * b.num_);
  }
  RationalMap pow(int k) const {
    if (k >= 0) return RationalMap(num_.pow(k), den_.pow(k));
    if (num_.is_zero()) throw Error(Errc::BadParams, "negative power of the zero polynomial");
    return RationalMap(den_.pow(-k), num_.pow(-k));
  }

  friend bool operator==(const RationalMap& a, const RationalMap& b) {
    return a.num_ * b.den_ == b.num_ * a.den_;
  }

  std::string to_string() const {
    if (is_polynomial() && den_.constant_term() == 1) return num_.to_string();
    return "(" + num_.to_string() + ")/(" + den_.to_string() + ")";
  }

 private:
  void normalize() {
    // Divide out the integer content and make the leading denominator coefficient positive.
    i64 g = 0;
    for (const auto& [e, c] : num_.terms()) g = std::gcd(g, c);
    for (const auto& [e, c] : den_.terms()) g = std::gcd(g, c);
    i64 sign = den_.terms().rbegin()->second < 0 ? -1 : 1;
    if (g > 1 || sign < 0) {
      ZPoly n2(IntRing{}, num_.nvars()), d2(IntRing{}, den_.nvars());
      for (const auto& [e, c] : num_.terms()) n2.set(e, c / g * sign);
      for (const auto& [e, c] : den_.terms()) d2.set(e, c / g * sign);
      num_ = std::move(n2);
      den_ = std::move(d2);
    }
  }

  ZPoly num_;
  ZPoly den_;
};

/// A one-variable rational map over F_p, gcd-reduced with monic denominator.
struct UniRational {
  UPoly num;
  UPoly den;
};

inline UniRational reduce_univariate(const RationalMap& f, const PrimeField& F, int var = 0) {
  UniRational r{to_upoly(reduce_mod(f.numerator(), F), var), to_upoly(reduce_mod(f.denominator(), F), var)};
  if (r.den.empty()) throw Error(Errc::Domain, "denominator vanishes identically mod p");
  UPoly g = upoly::gcd(F, r.num, r.den);
  if (upoly::deg(g) > 0) {
    r.num = upoly::divmod(F, r.num, g).first;
    r.den = upoly::divmod(F, r.den, g).first;
  }
  const u64 lead_inv = F.inv(r.den.back());
  r.num = upoly::scale(F, r.num, lead_inv);
  r.den = upoly::scale(F, r.den, lead_inv);
  return r;
}

// ---------------------------------------------------------------------------

/// A polynomial reduced mod p in a form suited to repeated evaluation over F_{p^m}.
class PolyEvaluator {
 public:
  PolyEvaluator() = default;

  PolyEvaluator(const ZPoly& f, const PrimeField& F, int nvars) {
    FpPoly g = reduce_mod(f.extend(std::max(nvars, f.nvars())), F);
    univariate_var_ = -1;
    int used = -1;
    bool single = true;
    for (const auto& [e, c] : g.terms()) {
      for (int i = 0; i < g.nvars(); ++i) {
        if (e[static_cast<std::size_t>(i)] == 0) continue;
        if (used == -1) used = i;
        else if (used != i) single = false;
      }
    }
    if (single) {
      univariate_var_ = used == -1 ? 0 : used;
      dense_ = g.is_zero() ? UPoly{} : to_upoly(g, univariate_var_);
    }
    for (const auto& [e, c] : g.terms()) terms_.push_back({c, e});
  }

  bool univariate() const { return univariate_var_ >= 0; }
  int variable() const { return univariate_var_; }
  const UPoly& dense() const { return dense_; }
  bool is_zero() const { return terms_.empty(); }

  u64 eval_prime(const PrimeField& F, const FieldElement* x) const {
    if (univariate()) return upoly::eval(F, dense_, x[univariate_var_].code);
    u64 acc = 0;
    for (const auto& t : terms_) {
      u64 v = t.coeff;
      for (std::size_t i = 0; i < t.exps.size() && v; ++i)
        if (t.exps[i]) v = F.mul(v, F.pow(x[i].code, static_cast<u64>(t.exps[i])));
      acc = F.add(acc, v);
    }
    return acc;
  }

  FieldElement eval(const ExtField& K, const FieldElement* x) const {
    if (K.degree() == 1) return {eval_prime(K.base(), x)};
    if (univariate()) {
      FieldElement r = K.zero();
      const FieldElement xv = x[univariate_var_];
      for (auto it = dense_.rbegin(); it != dense_.rend(); ++it) r = K.add(K.mul(r, xv), FieldElement{*it});
      return r;
    }
    FieldElement acc = K.zero();
    for (const auto& t : terms_) {
      FieldElement v{t.coeff};
      for (std::size_t i = 0; i < t.exps.size(); ++i)
        if (t.exps[i]) v = K.mul(v, K.pow(x[i], static_cast<u64>(t.exps[i])));
      acc = K.add(acc, v);
    }
    return acc;
  }

 private:
  struct Term {
    u64 coeff;
    Exponents exps;
  };
  int univariate_var_ = -1;
  UPoly dense_;
  std::vector<Term> terms_;
};

}  // namespace sheafcx
