#pragma once

// Local invariants, Euler characteristics and complexities of rank-one sheaves on
// open subsets of the projective line.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sheafcx/sheaf_expr.hpp"

namespace sheafcx {

/// A closed point of P^1 over F_p: infinity, or the Frobenius orbit of the roots of a monic irreducible.
struct Place {
  bool infinity = false;
  UPoly minpoly;  // monic irreducible over F_p when finite

  static Place at_infinity() { return Place{true, {}}; }
  static Place finite(UPoly pi) { return Place{false, std::move(pi)}; }

  /// Number of geometric points in the orbit.
  int degree() const { return infinity ? 1 : upoly::deg(minpoly); }
  std::string to_string() const {
    if (infinity) return "inf";
    std::string s = "[";
    for (std::size_t i = 0; i < minpoly.size(); ++i) s += (i ? "," : "") + std::to_string(minpoly[i]);
    return s + "]";
  }
  friend bool operator==(const Place&, const Place&) = default;
  friend bool operator<(const Place& a, const Place& b) {
    if (a.infinity != b.infinity) return b.infinity;
    if (a.minpoly.size() != b.minpoly.size()) return a.minpoly.size() < b.minpoly.size();
    return a.minpoly < b.minpoly;
  }
};

struct SingularPoint {
  Place place;
  int drop = 0;
  int swan = 0;
  int jump = 0;
  bool tame = false;  // nontrivial tame local monodromy
};

struct CurveAmbient {
  int genus = 0;
  int punctures = 1;
  int embedding_degree = 1;
};

/// C = P^1 minus finitely many closed points.
struct AffineCurve {
  std::vector<Place> removed;

  static AffineCurve A1() { return {{Place::at_infinity()}}; }
  static AffineCurve Gm() { return {{Place::finite({0, 1}), Place::at_infinity()}}; }
  static AffineCurve P1() { return {}; }

  int removed_points() const {
    int n = 0;
    for (const auto& pl : removed) n += pl.degree();
    return n;
  }
  i64 chi_c() const { return 2 - removed_points(); }
  bool contains(const Place& pl) const { return std::find(removed.begin(), removed.end(), pl) == removed.end(); }
  CurveAmbient ambient() const { return {0, removed_points(), 1}; }
};

struct CurveSheafInvariants {
  int rank = 1;
  std::vector<SingularPoint> singular_points;
  /// Zeros and poles where the stalk vanishes although local monodromy is trivial.
  std::vector<SingularPoint> vanishing_points;
  CurveAmbient ambient;

  const SingularPoint* find(const Place& pl) const {
    for (const auto* list : {&singular_points, &vanishing_points})
      for (const auto& sp : *list)
        if (sp.place == pl) return &sp;
    return nullptr;
  }
  int total_swan() const {
    int s = 0;
    for (const auto& sp : singular_points) s += sp.swan * sp.place.degree();
    return s;
  }
};

namespace curve_detail {

using KPoly = std::vector<FieldElement>;

inline KPoly lift(const ExtField& K, const UPoly& f) {
  KPoly r;
  for (u64 c : f) r.push_back(K.from_prime(c));
  return r;
}

/// P(alpha + t) as a polynomial in t.
inline KPoly taylor_shift(const ExtField& K, const KPoly& P, FieldElement alpha) {
  KPoly r;
  for (auto it = P.rbegin(); it != P.rend(); ++it) {
    // r = r * (alpha + t) + c
    KPoly next(r.size() + 1, K.zero());
    for (std::size_t i = 0; i < r.size(); ++i) {
      next[i] = K.add(next[i], K.mul(r[i], alpha));
      next[i + 1] = K.add(next[i + 1], r[i]);
    }
    next[0] = K.add(next[0], *it);
    r = std::move(next);
  }
  return r;
}

/// Artin-Schreier reduction of a polar part c[1..e] (coefficient of t^{-j}); returns the reduced pole order.
inline int reduced_pole_order(const ExtField& K, std::vector<FieldElement> c) {
  if (c.size() < 2) return 0;
  const u64 p = K.characteristic();
  const u64 root_exp = K.order() / p;  // c^{q/p} is the p-th root of c
  for (std::size_t j = c.size() - 1; j >= 1; --j) {
    if (c[j].code == 0 || j % p != 0) continue;
    const FieldElement r = K.pow(c[j], root_exp);
    c[j / p] = K.add(c[j / p], r);
    c[j] = K.zero();
  }
  for (std::size_t j = c.size() - 1; j >= 1; --j)
    if (c[j].code != 0) return static_cast<int>(j);
  return 0;
}

/// Swan conductor of psi(N/D) at the finite place pi, where pi^e exactly divides D.
inline int swan_at_finite(const PrimeField& F, const UPoly& N, const UPoly& D, const UPoly& pi, int e) {
  const ExtField K = ExtField::with_modulus(F, pi);
  const FieldElement alpha = upoly::deg(pi) == 1 ? K.from_prime(F.neg(pi[0])) : FieldElement{F.p()};
  const KPoly n = taylor_shift(K, lift(K, N), alpha);
  KPoly d = taylor_shift(K, lift(K, D), alpha);
  // The other roots of pi are distinct from alpha, so D(alpha + t) = t^e * D1(t) with D1(0) != 0.
  KPoly d1(d.begin() + e, d.end());
  // Power series n / d1 to order e.
  std::vector<FieldElement> s(static_cast<std::size_t>(e), K.zero());
  const FieldElement inv0 = K.inv(d1[0]);
  for (int i = 0; i < e; ++i) {
    FieldElement acc = i < static_cast<int>(n.size()) ? n[static_cast<std::size_t>(i)] : K.zero();
    for (int k = 1; k <= i && k < static_cast<int>(d1.size()); ++k)
      acc = K.sub(acc, K.mul(d1[static_cast<std::size_t>(k)], s[static_cast<std::size_t>(i - k)]));
    s[static_cast<std::size_t>(i)] = K.mul(acc, inv0);
  }
  std::vector<FieldElement> c(static_cast<std::size_t>(e) + 1, K.zero());
  for (int j = 1; j <= e; ++j) c[static_cast<std::size_t>(j)] = s[static_cast<std::size_t>(e - j)];
  return reduced_pole_order(K, std::move(c));
}

/// Swan conductor of psi(N/D) at infinity.
inline int swan_at_infinity(const PrimeField& F, const UPoly& N, const UPoly& D) {
  if (upoly::deg(N) <= upoly::deg(D)) return 0;
  const UPoly quo = upoly::divmod(F, N, D).first;
  const ExtField K = ExtField::make(F, 1);
  std::vector<FieldElement> c(quo.size(), K.zero());
  for (std::size_t j = 1; j < quo.size(); ++j) c[j] = K.from_prime(quo[j]);
  return reduced_pole_order(K, std::move(c));
}

inline UniRational univariate_mod_p(const RationalMap& f, const PrimeField& F) {
  if (f.max_variable() > 0) throw Error(Errc::UnsupportedDimension, "curve invariants need a map in one variable");
  return reduce_univariate(f.extend(std::max(1, f.nvars())), F, 0);
}

inline void add_point(std::vector<SingularPoint>& list, SingularPoint sp) {
  for (auto& q : list)
    if (q.place == sp.place) {
      q.swan = std::max(q.swan, sp.swan);
      q.drop = std::max(q.drop, sp.drop);
      q.tame = q.tame || sp.tame;
      return;
    }
  list.push_back(std::move(sp));
}

inline void sort_points(CurveSheafInvariants& inv) {
  auto by_place = [](const SingularPoint& a, const SingularPoint& b) { return a.place < b.place; };
  std::sort(inv.singular_points.begin(), inv.singular_points.end(), by_place);
  std::sort(inv.vanishing_points.begin(), inv.vanishing_points.end(), by_place);
  // A place listed as singular is not also a vanishing point.
  std::erase_if(inv.vanishing_points, [&](const SingularPoint& v) {
    return std::any_of(inv.singular_points.begin(), inv.singular_points.end(),
                       [&](const SingularPoint& s) { return s.place == v.place; });
  });
}

}  // namespace curve_detail

/// Invariants of psi(f) extended by zero, f in one variable.
inline CurveSheafInvariants as_invariants(const RationalMap& f, u64 p, const AffineCurve& curve = AffineCurve::A1()) {
  using namespace curve_detail;
  const PrimeField F(p);
  const UniRational u = univariate_mod_p(f, F);
  CurveSheafInvariants inv;
  inv.rank = 1;
  inv.ambient = curve.ambient();
  if (upoly::deg(u.den) > 0) {
    for (const auto& fac : upoly::factor(F, u.den))
      inv.singular_points.push_back({Place::finite(fac.poly), 1, swan_at_finite(F, u.num, u.den, fac.poly, fac.multiplicity), 0});
  }
  inv.singular_points.push_back({Place::at_infinity(), 1, swan_at_infinity(F, u.num, u.den), 0});
  sort_points(inv);
  return inv;
}

/// Invariants of chi(g) extended by zero, chi of order r.
inline CurveSheafInvariants kummer_invariants(const RationalMap& g, u64 r, u64 p, const AffineCurve& curve = AffineCurve::A1()) {
  using namespace curve_detail;
  if (r < 2 || (p - 1) % r != 0) throw Error(Errc::BadOrder, "character order " + std::to_string(r) + " must divide p-1 and exceed 1");
  const PrimeField F(p);
  const UniRational u = univariate_mod_p(g, F);
  if (u.num.empty()) throw Error(Errc::Domain, "Kummer map vanishes identically mod p");
  CurveSheafInvariants inv;
  inv.rank = 1;
  inv.ambient = curve.ambient();
  auto classify = [&](const Place& pl, i64 v) {
    if (v == 0) return;
    SingularPoint sp{pl, 1, 0, 0};
    if (v % static_cast<i64>(r) != 0) {
      sp.tame = true;
      inv.singular_points.push_back(sp);
    } else {
      inv.vanishing_points.push_back(sp);
    }
  };
  for (const UPoly* part : {&u.num, &u.den}) {
    if (upoly::deg(*part) <= 0) continue;
    const i64 sign = part == &u.num ? 1 : -1;
    for (const auto& fac : upoly::factor(F, *part)) classify(Place::finite(fac.poly), sign * fac.multiplicity);
  }
  classify(Place::at_infinity(), upoly::deg(u.den) - upoly::deg(u.num));
  sort_points(inv);
  return inv;
}

/// loc(F) = sum over C of (drop + jump + swan) plus swan over the removed points, weighted by degree.
inline i64 loc(const CurveSheafInvariants& inv, const AffineCurve& curve) {
  i64 total = 0;
  for (const auto* list : {&inv.singular_points, &inv.vanishing_points})
    for (const auto& sp : *list) {
      const i64 local = curve.contains(sp.place) ? sp.drop + sp.jump + sp.swan : sp.swan;
      total += local * sp.place.degree();
    }
  return total;
}

/// chi_c(C, F) = rank * chi_c(C) - loc(F).
inline i64 gos_chi(const CurveSheafInvariants& inv, const AffineCurve& curve = AffineCurve::A1()) {
  return inv.rank * curve.chi_c() - loc(inv, curve);
}

struct ComplexityValue {
  enum class Kind { Exact, Bounds } kind = Kind::Exact;
  i64 lower = 0;
  i64 upper = 0;  // equal to lower when exact
  i64 value() const { return upper; }
};

/// Complexity from Betti numbers when available, else the rank/loc bracket.
inline ComplexityValue curve_complexity(const std::optional<CurveSheafInvariants>& inv, const std::optional<std::vector<i64>>& betti,
                                        const AffineCurve& curve = AffineCurve::A1(), std::optional<int> rank = std::nullopt,
                                        int embedding_degree = 1) {
  if (!rank && inv) rank = inv->rank;
  if (betti && rank) {
    i64 total = 0;
    for (i64 h : *betti) {
      if (h < 0) throw Error(Errc::BadParams, "negative Betti number");
      total += h;
    }
    const i64 c = std::max<i64>(static_cast<i64>(embedding_degree) * *rank, total);
    return {ComplexityValue::Kind::Exact, c, c};
  }
  if (inv) {
    const i64 g = inv->ambient.genus, n = curve.removed_points(), d = embedding_degree;
    const i64 l = loc(*inv, curve);
    return {ComplexityValue::Kind::Bounds, std::max(d, 2 * g + n - 2) * inv->rank + l, std::max(d, 2 * g + n + 2) * inv->rank + l};
  }
  throw Error(Errc::MissingData, "curve complexity needs Betti numbers and a rank, or local invariants");
}

/// rank + number of singular points in P^1 + total Swan conductor.
/// Infinity counts only when ramified there; finite stalk-vanishing points always count.
inline i64 fkm_conductor(const CurveSheafInvariants& inv) {
  if (inv.ambient.genus != 0 || inv.ambient.punctures != 1 || inv.ambient.embedding_degree != 1)
    throw Error(Errc::WrongAmbient, "the FKM conductor is defined for sheaves on A^1 inside P^1");
  i64 points = 0;
  for (const auto* list : {&inv.singular_points, &inv.vanishing_points})
    for (const auto& sp : *list)
      if (!sp.place.infinity || sp.swan > 0 || sp.tame) points += sp.place.degree();
  return inv.rank + points + inv.total_swan();
}

namespace curve_detail {

inline void collect_rank_one_invariants(const Expr& e, const PrimeField& F, std::optional<RationalMap>& additive,
                                        std::vector<CurveSheafInvariants>& kummers, std::vector<Place>& as_poles) {
  const Node& nd = *e;
  if (auto* a = std::get_if<node::AS>(&nd.v)) {
    if (a->f.max_variable() > 0) throw Error(Errc::UnsupportedDimension, "curve invariants need expressions in one variable");
    RationalMap scaled = a->f.extend(1) * RationalMap(zconst(1, a->psi.a));
    additive = additive ? *additive + scaled : scaled;
    const UniRational u = univariate_mod_p(a->f, F);
    if (upoly::deg(u.den) > 0)
      for (const auto& fac : upoly::factor(F, u.den)) as_poles.push_back(Place::finite(fac.poly));
    return;
  }
  if (auto* k = std::get_if<node::Kummer>(&nd.v)) {
    kummers.push_back(kummer_invariants(k->g, k->chi.r, F.p()));
    return;
  }
  if (std::get_if<node::Const>(&nd.v)) return;
  if (auto* t = std::get_if<node::Tensor>(&nd.v)) {
    collect_rank_one_invariants(t->a, F, additive, kummers, as_poles);
    collect_rank_one_invariants(t->b, F, additive, kummers, as_poles);
    return;
  }
  if (auto* s = std::get_if<node::Shift>(&nd.v)) return collect_rank_one_invariants(s->a, F, additive, kummers, as_poles);
  if (auto* t = std::get_if<node::Twist>(&nd.v)) return collect_rank_one_invariants(t->a, F, additive, kummers, as_poles);
  if (auto* c = std::get_if<node::Conj>(&nd.v)) return collect_rank_one_invariants(c->a, F, additive, kummers, as_poles);
  if (auto* d = std::get_if<node::Dual>(&nd.v)) return collect_rank_one_invariants(d->a, F, additive, kummers, as_poles);
  if (auto* u = std::get_if<node::Pure>(&nd.v)) return collect_rank_one_invariants(u->a, F, additive, kummers, as_poles);
  throw Error(Errc::Domain, std::string("no curve invariants for ") + node_kind_name(nd.kind()) + " nodes");
}

}  // namespace curve_detail

/// Invariants of a tensor product of Artin-Schreier and Kummer sheaves on A^1 (with shifts, twists, conjugation).
inline CurveSheafInvariants rank_one_invariants(const Expr& e, u64 p) {
  using namespace curve_detail;
  const PrimeField F(p);
  std::optional<RationalMap> additive;
  std::vector<CurveSheafInvariants> kummers;
  std::vector<Place> as_poles;
  collect_rank_one_invariants(e, F, additive, kummers, as_poles);
  CurveSheafInvariants inv;
  inv.ambient = AffineCurve::A1().ambient();
  if (additive) {
    const UniRational u = univariate_mod_p(*additive, F);
    std::map<Place, int> mult;
    if (upoly::deg(u.den) > 0)
      for (const auto& fac : upoly::factor(F, u.den)) mult[Place::finite(fac.poly)] = fac.multiplicity;
    for (const auto& [pl, e] : mult) add_point(inv.singular_points, {pl, 1, swan_at_finite(F, u.num, u.den, pl.minpoly, e), 0});
    add_point(inv.singular_points, {Place::at_infinity(), 1, swan_at_infinity(F, u.num, u.den), 0});
    // Poles of individual factors cancelled in the sum still kill the stalk.
    for (const auto& pl : as_poles)
      if (!mult.count(pl)) add_point(inv.vanishing_points, {pl, 1, 0, 0});
  }
  for (const auto& k : kummers) {
    for (const auto& sp : k.singular_points) add_point(inv.singular_points, sp);
    for (const auto& sp : k.vanishing_points) add_point(inv.vanishing_points, sp);
  }
  sort_points(inv);
  return inv;
}

}  // namespace sheafcx
