#pragma once

// Effective complexity bounds propagated over expression trees in exact rational arithmetic.

#include <boost/multiprecision/cpp_int.hpp>

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sheafcx/sheaf_expr.hpp"

namespace sheafcx {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// b_0 = 4^8/81, b_n = 13 n b_{n-1} + 4^{8+n} (n+1)^2 / 81.
inline Rational tensor_constant(int n) {
  if (n < 0 || n > 20) throw Error(Errc::BadParams, "tensor constant is tabulated for 0 <= n <= 20");
  Rational b = Rational(BigInt(1) << 16, 81);
  for (int k = 1; k <= n; ++k) b = 13 * k * b + Rational((BigInt(1) << (2 * (8 + k))) * (k + 1) * (k + 1), 81);
  return b;
}

/// B(N, r, d) = 6 * 2^r * (3 + r d)^{N+1}.
inline BigInt katz_bound(u64 N, u64 r, u64 d) {
  if (N > 4096 || r > 4096) throw Error(Errc::BadParams, "katz_bound arguments too large");
  BigInt base = BigInt(3) + BigInt(r) * BigInt(d);
  return BigInt(6) * (BigInt(1) << static_cast<unsigned>(r)) * boost::multiprecision::pow(base, static_cast<unsigned>(N + 1));
}

/// Complexity of a map A^{n1} ⊃ X -> A^{n2} given by polynomials of degree <= d, X cut out by r equations.
inline BigInt morphism_bound(u64 n1, u64 n2, u64 r, u64 d) { return katz_bound(n1, n2 + r, d); }

/// Smallest integer >= q.
inline BigInt ceil_rational(const Rational& q) {
  const BigInt n = boost::multiprecision::numerator(q), d = boost::multiprecision::denominator(q);
  BigInt f = n / d;
  if (f * d < n) ++f;
  return f;
}

inline std::string rational_string(const Rational& q) {
  const BigInt d = boost::multiprecision::denominator(q);
  return d == 1 ? boost::multiprecision::numerator(q).str() : boost::multiprecision::numerator(q).str() + "/" + d.str();
}

// ---------------------------------------------------------------------------
// Rule table

enum class Combine { Leaf, Product, Sum, Power };

struct RuleEntry {
  NodeKind kind;
  const char* rule;
  const char* recipe;     // how the constant is assembled
  const char* reference;  // the inequality being applied
  Combine combine;
  bool numeric;
};

inline const std::vector<RuleEntry>& rule_table() {
  static const std::vector<RuleEntry> table = {
      {NodeKind::AS, "artin_schreier",
       "A^1: 3*rank + loc with loc <= 2 deg(den) + max(0, deg(num) - deg(den)); A^n: b_{n+1} * B(n+1, n+1, deg den + 1) * b_1 * "
       "B(n+1, 2, max deg + 1), or b_1 * B(n, 1, deg f) for polynomials",
       "curve bracket c <= max(d, 2g+n+2) rank + loc; pullback of L_psi along f and extension by zero", Combine::Leaf, true},
      {NodeKind::Kummer, "kummer",
       "A^1: 3*rank + #zeros + #poles; A^n: b_{n+1} * B(n+1, n+1, deg num + deg den + 1) * b_1 * B(n+1, 2, 2 deg num + 1)",
       "curve bracket; pullback of L_chi along g and extension by zero", Combine::Leaf, true},
      {NodeKind::Const, "constant", "1", "generic linear sections of A^n have total Betti number 1", Combine::Leaf, true},
      {NodeKind::Tensor, "tensor", "b_n", "c(A (x) B) <= b_n c(A) c(B)", Combine::Product, true},
      {NodeKind::DirectSum, "direct_sum", "1 (additive)", "c(A (+) B) = c(A) + c(B)", Combine::Sum, true},
      {NodeKind::Dual, "dual", "b_n * c(u), c(u) = 1", "c(D(A)) <= b_n c(u) c(A)", Combine::Product, true},
      {NodeKind::Shift, "shift", "1", "c(A[h]) = c(A)", Combine::Product, true},
      {NodeKind::Twist, "twist", "1", "Tate twists do not change cohomology dimensions", Combine::Product, true},
      {NodeKind::Conj, "conjugate", "1", "complex conjugation of coefficients preserves Betti numbers", Combine::Product, true},
      {NodeKind::ExternalProduct, "external_product", "b_N * b_{n_A} * B(N, n_A, 1) * b_{n_B} * B(N, n_B, 1)",
       "A (#) B = p_1^* A (x) p_2^* B with pullback and tensor continuity", Combine::Product, true},
      {NodeKind::PushCompact, "push_compact", "b_{n+s} * B(n+s, n, 1)", "c(f_! A) <= b_{n_X} c(f) c(A)", Combine::Product, true},
      {NodeKind::Fourier, "fourier",
       "b_{2n} * B(2n, n, 1) * b_{2n} * b_n * B(2n, n, 1) * b_1 * B(2n, 1, 2)",
       "ft(A) = p_{2!}(p_1^* A (x) L_psi(x.y)): extension by zero, tensor, pullback, kernel", Combine::Product, true},
      {NodeKind::Pure, "purity_tag", "1", "tag only", Combine::Product, true},
      {NodeKind::NearbyCycles, "nearby_cycles", "K_Psi", "c(Psi(A)) << c(u_sigma) c(A_eta)", Combine::Product, false},
      {NodeKind::VanishingCycles, "vanishing_cycles", "K_Psi", "c(Phi(A)) << c(u_sigma) c(A_eta)", Combine::Product, false},
      {NodeKind::JordanHolder, "jordan_holder", "K_JH", "sum of Jordan-Holder factors with multiplicity << c(A)", Combine::Product,
       false},
      {NodeKind::Tannakian, "tannakian", "K_rho, exponent a_rho", "c(rho(F)) << c(F)^a", Combine::Power, false},
  };
  return table;
}

inline const RuleEntry& rule_for(NodeKind k) {
  for (const auto& r : rule_table())
    if (r.kind == k) return r;
  throw Error(Errc::Domain, "no rule for node kind");
}

// ---------------------------------------------------------------------------
// Bounds and trails

struct TrailEntry {
  std::string rule;
  std::string reference;
  int ambient = 0;
  Rational constant = 1;
  std::string constant_symbol;  // non-empty when the constant is symbolic
  Combine combine = Combine::Leaf;
  std::vector<TrailEntry> children;
  bool numeric = true;
  Rational value = 1;  // when numeric
  std::string symbolic;
};

struct ComplexityBound {
  bool numeric = true;
  Rational value = 1;
  std::string symbolic;  // display form when not numeric
  TrailEntry trail;

  std::string display() const { return numeric ? ceil_rational(value).str() : symbolic; }
};

struct PropagateOptions {
  /// Replace the bound of a leaf (AS, Kummer, Const) at the given ambient dimension.
  std::function<std::optional<Rational>(const Expr&, int)> leaf_override;
};

namespace bound_detail {

inline Rational B(u64 N, u64 r, u64 d) { return Rational(katz_bound(N, r, d)); }

inline int degree(const ZPoly& f) { return f.is_zero() ? 0 : f.total_degree(); }

/// Bound for psi(f) or chi(g) pulled back to A^n.
inline Rational leaf_bound(const Expr& e, int n) {
  if (std::get_if<node::Const>(&e->v)) return 1;
  const bool is_as = e->kind() == NodeKind::AS;
  const RationalMap& f = is_as ? std::get<node::AS>(e->v).f : std::get<node::Kummer>(e->v).g;
  const int dn = degree(f.numerator()), dd = degree(f.denominator());
  if (n <= 1) {
    if (is_as) return 3 + 2 * dd + std::max(0, dn - dd);
    return 3 + dn + dd;
  }
  const Rational b1 = tensor_constant(1);
  if (is_as && dd == 0) return b1 * B(static_cast<u64>(n), 1, static_cast<u64>(std::max(1, dn)));
  const u64 m = static_cast<u64>(n) + 1;
  if (is_as)
    return tensor_constant(n + 1) * B(m, m, static_cast<u64>(dd + 1)) * b1 * B(m, 2, static_cast<u64>(std::max(dn, dd) + 1));
  const u64 eq = static_cast<u64>(dn + dd + 1);
  return tensor_constant(n + 1) * B(m, m, eq) * b1 * B(m, 2, std::max<u64>(eq, static_cast<u64>(2 * dn + 1)));
}

inline std::string paren(const std::string& s) { return "(" + s + ")"; }

inline TrailEntry propagate(const Expr& e, int n, const PropagateOptions& opts) {
  const RuleEntry& rule = rule_for(e->kind());
  TrailEntry t;
  t.rule = rule.rule;
  t.reference = rule.reference;
  t.ambient = n;
  t.combine = rule.combine;
  check_ambient(e, n);

  if (rule.combine == Combine::Leaf) {
    std::optional<Rational> v;
    if (opts.leaf_override) v = opts.leaf_override(e, n);
    t.constant = v ? *v : leaf_bound(e, n);
    t.value = t.constant;
    return t;
  }

  // Children and their ambient dimensions.
  std::vector<std::pair<Expr, int>> kids;
  std::visit(
      [&](const auto& nd) {
        using T = std::decay_t<decltype(nd)>;
        if constexpr (std::is_same_v<T, node::Tensor> || std::is_same_v<T, node::DirectSum>) {
          kids = {{nd.a, n}, {nd.b, n}};
        } else if constexpr (std::is_same_v<T, node::ExternalProduct>) {
          const int na = natural_ambient(nd.a);
          kids = {{nd.a, na}, {nd.b, n - na}};
        } else if constexpr (std::is_same_v<T, node::PushCompact>) {
          kids = {{nd.a, n + static_cast<int>(nd.vars.size())}};
        } else if constexpr (requires { nd.a; }) {
          kids = {{nd.a, n}};
        }
      },
      e->v);
  for (const auto& [child, cn] : kids) t.children.push_back(propagate(child, cn, opts));

  switch (e->kind()) {
    case NodeKind::Tensor:
    case NodeKind::Dual: t.constant = tensor_constant(n); break;
    case NodeKind::ExternalProduct: {
      const int na = kids[0].second, nb = kids[1].second;
      const u64 N = static_cast<u64>(n);
      t.constant = tensor_constant(n) * tensor_constant(na) * B(N, static_cast<u64>(na), 1) * tensor_constant(nb) *
                   B(N, static_cast<u64>(nb), 1);
      break;
    }
    case NodeKind::PushCompact: {
      const int nx = kids[0].second;
      t.constant = tensor_constant(nx) * B(static_cast<u64>(nx), static_cast<u64>(n), 1);
      break;
    }
    case NodeKind::Fourier: {
      const u64 N2 = 2 * static_cast<u64>(n);
      const Rational proj = B(N2, static_cast<u64>(n), 1);
      const Rational kernel = tensor_constant(1) * B(N2, 1, 2);
      t.constant = tensor_constant(2 * n) * proj * tensor_constant(2 * n) * tensor_constant(n) * proj * kernel;
      break;
    }
    case NodeKind::NearbyCycles:
    case NodeKind::VanishingCycles: t.constant_symbol = "K_Psi"; break;
    case NodeKind::JordanHolder: t.constant_symbol = "K_JH"; break;
    case NodeKind::Tannakian: t.constant_symbol = "K_rho"; break;
    default: t.constant = 1; break;
  }

  bool numeric = t.constant_symbol.empty();
  for (const auto& c : t.children) numeric = numeric && c.numeric;
  t.numeric = numeric;
  if (numeric) {
    if (t.combine == Combine::Sum) {
      Rational s = 0;
      for (const auto& c : t.children) s += c.value;
      t.value = t.constant * s;
    } else {
      Rational v = t.constant;
      for (const auto& c : t.children) v *= c.value;
      t.value = v;
    }
    return t;
  }
  auto child_text = [](const TrailEntry& c) { return c.numeric ? ceil_rational(c.value).str() : c.symbolic; };
  if (t.combine == Combine::Sum) {
    t.symbolic = paren(child_text(t.children[0])) + " + " + paren(child_text(t.children[1]));
  } else if (t.combine == Combine::Power) {
    t.symbolic = t.constant_symbol + " * " + paren(child_text(t.children[0])) + "^a_rho";
  } else {
    std::string s = t.constant_symbol.empty() ? rational_string(t.constant) : t.constant_symbol;
    for (const auto& c : t.children) s += " * " + paren(child_text(c));
    t.symbolic = s;
  }
  return t;
}

}  // namespace bound_detail

/// Complexity bound for A on its default ambient (or `ambient` when positive).
inline ComplexityBound propagate(const Expr& e, const PropagateOptions& opts = {}, int ambient = 0) {
  const int n = ambient > 0 ? ambient : default_ambient(e);
  ComplexityBound b;
  b.trail = bound_detail::propagate(e, n, opts);
  b.numeric = b.trail.numeric;
  b.value = b.trail.value;
  b.symbolic = b.trail.symbolic;
  return b;
}

/// Recompute every numeric node of a trail from its constant and children; true when all agree exactly.
inline bool verify_trail(const TrailEntry& t) {
  for (const auto& c : t.children)
    if (!verify_trail(c)) return false;
  if (!t.numeric) return true;
  if (t.combine == Combine::Leaf) return t.value == t.constant;
  Rational v = t.combine == Combine::Sum ? Rational(0) : t.constant;
  for (const auto& c : t.children) {
    if (!c.numeric) return false;
    if (t.combine == Combine::Sum) v += c.value;
    else v *= c.value;
  }
  if (t.combine == Combine::Sum) v *= t.constant;
  return v == t.value;
}

}  // namespace sheafcx
