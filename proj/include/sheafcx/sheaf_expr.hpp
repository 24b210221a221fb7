#pragma once

// Sheaf expressions: an immutable tree of sheaf-building operations.
//
// A node does not store its ambient dimension. Each node has a natural
// ambient (the smallest one its variables fit in); the numeric and bound
// semantics are then run at a concrete ambient N >= natural, with leaves
// ignoring coordinates they do not mention.

#include <algorithm>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sheafcx/error.hpp"
#include "sheafcx/poly.hpp"

namespace sheafcx {

enum class NodeKind {
  AS,
  Kummer,
  Const,
  Tensor,
  DirectSum,
  Dual,
  Shift,
  Twist,
  Conj,
  ExternalProduct,
  PushCompact,
  Fourier,
  Pure,
  NearbyCycles,
  VanishingCycles,
  JordanHolder,
  Tannakian,
};

inline constexpr NodeKind kAllNodeKinds[] = {
    NodeKind::AS,        NodeKind::Kummer,       NodeKind::Const,           NodeKind::Tensor,
    NodeKind::DirectSum, NodeKind::Dual,         NodeKind::Shift,           NodeKind::Twist,
    NodeKind::Conj,      NodeKind::ExternalProduct, NodeKind::PushCompact,  NodeKind::Fourier,
    NodeKind::Pure,      NodeKind::NearbyCycles, NodeKind::VanishingCycles, NodeKind::JordanHolder,
    NodeKind::Tannakian,
};

inline const char* node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::AS: return "AS";
    case NodeKind::Kummer: return "Kummer";
    case NodeKind::Const: return "Const";
    case NodeKind::Tensor: return "Tensor";
    case NodeKind::DirectSum: return "DirectSum";
    case NodeKind::Dual: return "Dual";
    case NodeKind::Shift: return "Shift";
    case NodeKind::Twist: return "Twist";
    case NodeKind::Conj: return "Conj";
    case NodeKind::ExternalProduct: return "ExternalProduct";
    case NodeKind::PushCompact: return "PushCompact";
    case NodeKind::Fourier: return "Fourier";
    case NodeKind::Pure: return "Pure";
    case NodeKind::NearbyCycles: return "NearbyCycles";
    case NodeKind::VanishingCycles: return "VanishingCycles";
    case NodeKind::JordanHolder: return "JordanHolder";
    case NodeKind::Tannakian: return "Tannakian";
  }
  return "?";
}

/// A rational weight num/den in lowest terms with den > 0.
struct Weight {
  i64 num = 0;
  i64 den = 1;

  Weight() = default;
  Weight(i64 n, i64 d = 1) : num(n), den(d) {
    if (d == 0) throw Error(Errc::BadParams, "weight with zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const i64 g = std::gcd(num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  bool half_integral() const { return den == 1 || den == 2; }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string to_string() const { return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den); }

  friend Weight operator+(Weight a, Weight b) { return Weight(a.num * b.den + b.num * a.den, a.den * b.den); }
  friend Weight operator-(Weight a) { return Weight(-a.num, a.den); }
  friend Weight operator-(Weight a, Weight b) { return a + (-b); }
  friend bool operator==(const Weight&, const Weight&) = default;
};

/// psi_a: x -> e(a Tr(x) / p).
struct AdditiveSpec {
  i64 a = 1;
  friend bool operator==(const AdditiveSpec&, const AdditiveSpec&) = default;
};

/// The multiplicative character of F_p of order r sending the fixed generator to e(j/r).
struct KummerSpec {
  u64 r = 2;
  u64 j = 1;
  friend bool operator==(const KummerSpec&, const KummerSpec&) = default;
};

enum class SymbolicOp { NearbyCycles, VanishingCycles, JordanHolder, Tannakian };

struct Node;
using Expr = std::shared_ptr<const Node>;

namespace node {
struct AS {
  AdditiveSpec psi;
  RationalMap f;
};
struct Kummer {
  KummerSpec chi;
  RationalMap g;
};
struct Const {
  int n = 0;
};
struct Tensor {
  Expr a, b;
};
struct DirectSum {
  Expr a, b;
};
struct Dual {
  Expr a;
};
struct Shift {
  Expr a;
  int h = 0;
};
struct Twist {
  Expr a;
  Weight w;
};
struct Conj {
  Expr a;
};
struct ExternalProduct {
  Expr a, b;
};
struct PushCompact {
  Expr a;
  std::vector<int> vars;  // summed coordinates, indices into the child's ambient
};
struct Fourier {
  Expr a;
  AdditiveSpec psi;
};
struct Pure {
  Expr a;
};
struct Symbolic {
  SymbolicOp op;
  Expr a;
};
}  // namespace node

struct Node {
  using Variant = std::variant<node::AS, node::Kummer, node::Const, node::Tensor, node::DirectSum, node::Dual,
                               node::Shift, node::Twist, node::Conj, node::ExternalProduct, node::PushCompact,
                               node::Fourier, node::Pure, node::Symbolic>;
  Variant v;

  NodeKind kind() const {
    switch (v.index()) {
      case 0: return NodeKind::AS;
      case 1: return NodeKind::Kummer;
      case 2: return NodeKind::Const;
      case 3: return NodeKind::Tensor;
      case 4: return NodeKind::DirectSum;
      case 5: return NodeKind::Dual;
      case 6: return NodeKind::Shift;
      case 7: return NodeKind::Twist;
      case 8: return NodeKind::Conj;
      case 9: return NodeKind::ExternalProduct;
      case 10: return NodeKind::PushCompact;
      case 11: return NodeKind::Fourier;
      case 12: return NodeKind::Pure;
      default:
        switch (std::get<node::Symbolic>(v).op) {
          case SymbolicOp::NearbyCycles: return NodeKind::NearbyCycles;
          case SymbolicOp::VanishingCycles: return NodeKind::VanishingCycles;
          case SymbolicOp::JordanHolder: return NodeKind::JordanHolder;
          case SymbolicOp::Tannakian: return NodeKind::Tannakian;
        }
    }
    return NodeKind::Const;
  }

  /// Direct children, left to right.
  std::vector<Expr> children() const {
    return std::visit(
        [](const auto& n) -> std::vector<Expr> {
          if constexpr (requires { n.b; }) return {n.a, n.b};
          else if constexpr (requires { n.a; }) return {n.a};
          else return {};
        },
        v);
  }
};

// ---------------------------------------------------------------------------
// Builders

namespace expr {

inline Expr make(Node::Variant v) { return std::make_shared<const Node>(Node{std::move(v)}); }

inline Expr AS(RationalMap f, AdditiveSpec psi = {}) { return make(node::AS{psi, std::move(f)}); }
inline Expr Kummer(RationalMap g, KummerSpec chi = {}) {
  if (chi.r < 2) throw Error(Errc::BadOrder, "Kummer character order must be at least 2");
  return make(node::Kummer{chi, std::move(g)});
}
inline Expr Const(int n = 0) {
  if (n < 0) throw Error(Errc::BadParams, "negative ambient dimension");
  return make(node::Const{n});
}
inline Expr Tensor(Expr a, Expr b) { return make(node::Tensor{std::move(a), std::move(b)}); }
inline Expr DirectSum(Expr a, Expr b) { return make(node::DirectSum{std::move(a), std::move(b)}); }
inline Expr Dual(Expr a) { return make(node::Dual{std::move(a)}); }
inline Expr Shift(Expr a, int h) { return make(node::Shift{std::move(a), h}); }
inline Expr Twist(Expr a, Weight w) { return make(node::Twist{std::move(a), w}); }
inline Expr Conj(Expr a) { return make(node::Conj{std::move(a)}); }
inline Expr ExternalProduct(Expr a, Expr b) { return make(node::ExternalProduct{std::move(a), std::move(b)}); }
inline Expr PushCompact(Expr a, std::vector<int> vars) {
  std::sort(vars.begin(), vars.end());
  if (std::adjacent_find(vars.begin(), vars.end()) != vars.end())
    throw Error(Errc::BadParams, "repeated coordinate in push");
  if (!vars.empty() && vars.front() < 0) throw Error(Errc::BadParams, "negative coordinate in push");
  return make(node::PushCompact{std::move(a), std::move(vars)});
}
inline Expr Fourier(Expr a, AdditiveSpec psi = {}) { return make(node::Fourier{std::move(a), psi}); }
inline Expr Pure(Expr a) { return make(node::Pure{std::move(a)}); }
inline Expr Symbolic(SymbolicOp op, Expr a) { return make(node::Symbolic{op, std::move(a)}); }

/// Shift(Twist(A, n/2), n): the normalization that makes a lisse rank-one leaf on A^n weight 0.
inline Expr Normalized(Expr a, int n) { return Shift(Twist(std::move(a), Weight(n, 2)), n); }

}  // namespace expr

// ---------------------------------------------------------------------------
// Ambient dimensions

/// Smallest ambient dimension the expression can be evaluated on.
inline int natural_ambient(const Expr& e) {
  return std::visit(
      [](const auto& n) -> int {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, node::AS>) return n.f.max_variable() + 1;
        else if constexpr (std::is_same_v<T, node::Kummer>) return n.g.max_variable() + 1;
        else if constexpr (std::is_same_v<T, node::Const>) return n.n;
        else if constexpr (std::is_same_v<T, node::Tensor> || std::is_same_v<T, node::DirectSum>)
          return std::max(natural_ambient(n.a), natural_ambient(n.b));
        else if constexpr (std::is_same_v<T, node::ExternalProduct>)
          return natural_ambient(n.a) + natural_ambient(n.b);
        else if constexpr (std::is_same_v<T, node::PushCompact>) {
          const int child = std::max(natural_ambient(n.a), n.vars.empty() ? 0 : n.vars.back() + 1);
          return child - static_cast<int>(n.vars.size());
        } else return natural_ambient(n.a);
      },
      e->v);
}

/// The ambient a whole expression is evaluated on when none is given: at least A^1.
inline int default_ambient(const Expr& e) { return std::max(1, natural_ambient(e)); }

inline void check_ambient(const Expr& e, int n) {
  if (n < natural_ambient(e))
    throw Error(Errc::AmbientMismatch, "expression needs ambient dimension " + std::to_string(natural_ambient(e)) +
                                           ", got " + std::to_string(n));
}

// ---------------------------------------------------------------------------
// Weights

/// Weight of a pure expression, or nullopt when it is not known to be pure.
/// Lisse rank-one leaves (polynomial Artin-Schreier sheaves, constants) are pure
/// of weight 0; shifts raise the weight by h and twists lower it by 2w.
inline std::optional<Weight> purity_weight(const Expr& e) {
  return std::visit(
      [](const auto& n) -> std::optional<Weight> {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, node::AS>) {
          if (n.f.is_polynomial()) return Weight(0);
          return std::nullopt;
        } else if constexpr (std::is_same_v<T, node::Const>) {
          return Weight(0);
        } else if constexpr (std::is_same_v<T, node::Shift>) {
          auto w = purity_weight(n.a);
          if (!w) return std::nullopt;
          return *w + Weight(n.h);
        } else if constexpr (std::is_same_v<T, node::Twist>) {
          auto w = purity_weight(n.a);
          if (!w) return std::nullopt;
          return *w - Weight(2 * n.w.num, n.w.den);
        } else if constexpr (std::is_same_v<T, node::Tensor> || std::is_same_v<T, node::ExternalProduct>) {
          auto wa = purity_weight(n.a), wb = purity_weight(n.b);
          if (!wa || !wb) return std::nullopt;
          return *wa + *wb;
        } else if constexpr (std::is_same_v<T, node::DirectSum>) {
          auto wa = purity_weight(n.a), wb = purity_weight(n.b);
          if (!wa || !wb || !(*wa == *wb)) return std::nullopt;
          return wa;
        } else if constexpr (std::is_same_v<T, node::Conj>) {
          return purity_weight(n.a);
        } else if constexpr (std::is_same_v<T, node::Dual>) {
          auto w = purity_weight(n.a);
          if (!w) return std::nullopt;
          return -*w;
        } else if constexpr (std::is_same_v<T, node::Pure>) {
          return Weight(0);
        } else {
          return std::nullopt;
        }
      },
      e->v);
}

inline bool is_weight_zero_pure(const Expr& e) {
  auto w = purity_weight(e);
  return w && w->num == 0;
}

inline bool is_symbolic(const Expr& e) {
  if (e->kind() == NodeKind::NearbyCycles || e->kind() == NodeKind::VanishingCycles ||
      e->kind() == NodeKind::JordanHolder || e->kind() == NodeKind::Tannakian)
    return true;
  for (const auto& c : e->children())
    if (is_symbolic(c)) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Printing, canonical form and hashing

inline std::string variable_name(int i) { return "x" + std::to_string(i + 1); }

inline std::string psi_string(AdditiveSpec s) { return s.a == 1 ? "psi" : "psi[" + std::to_string(s.a) + "]"; }
inline std::string chi_string(KummerSpec s) {
  return s.j == 1 ? "chi[" + std::to_string(s.r) + "]" : "chi[" + std::to_string(s.r) + "," + std::to_string(s.j) + "]";
}

inline const char* symbolic_name(SymbolicOp op) {
  switch (op) {
    case SymbolicOp::NearbyCycles: return "NearbyCycles";
    case SymbolicOp::VanishingCycles: return "VanishingCycles";
    case SymbolicOp::JordanHolder: return "JordanHolder";
    case SymbolicOp::Tannakian: return "Tannakian";
  }
  return "?";
}

namespace detail {

inline std::string render(const Expr& e, bool canonical) {
  return std::visit(
      [canonical](const auto& n) -> std::string {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, node::AS>) {
          return "AS(" + psi_string(n.psi) + ", " + n.f.to_string() + ")";
        } else if constexpr (std::is_same_v<T, node::Kummer>) {
          return "K(" + chi_string(n.chi) + ", " + n.g.to_string() + ")";
        } else if constexpr (std::is_same_v<T, node::Const>) {
          return n.n == 0 ? "Const" : "Const[" + std::to_string(n.n) + "]";
        } else if constexpr (std::is_same_v<T, node::Tensor> || std::is_same_v<T, node::DirectSum>) {
          std::string a = render(n.a, canonical), b = render(n.b, canonical);
          if (canonical && b < a) std::swap(a, b);
          const char* op = std::is_same_v<T, node::Tensor> ? " (*) " : " (+) ";
          return "(" + a + op + b + ")";
        } else if constexpr (std::is_same_v<T, node::ExternalProduct>) {
          return "(" + render(n.a, canonical) + " (#) " + render(n.b, canonical) + ")";
        } else if constexpr (std::is_same_v<T, node::Dual>) {
          return "Dual(" + render(n.a, canonical) + ")";
        } else if constexpr (std::is_same_v<T, node::Conj>) {
          return "Conj(" + render(n.a, canonical) + ")";
        } else if constexpr (std::is_same_v<T, node::Shift>) {
          return "Shift(" + render(n.a, canonical) + ", " + std::to_string(n.h) + ")";
        } else if constexpr (std::is_same_v<T, node::Twist>) {
          return "Twist(" + render(n.a, canonical) + ", " + n.w.to_string() + ")";
        } else if constexpr (std::is_same_v<T, node::PushCompact>) {
          std::string vs;
          for (std::size_t i = 0; i < n.vars.size(); ++i) vs += (i ? ", " : "") + variable_name(n.vars[i]);
          return "Push(" + render(n.a, canonical) + ", [" + vs + "])";
        } else if constexpr (std::is_same_v<T, node::Fourier>) {
          return n.psi.a == 1 ? "FT(" + render(n.a, canonical) + ")"
                              : "FT(" + render(n.a, canonical) + ", " + psi_string(n.psi) + ")";
        } else if constexpr (std::is_same_v<T, node::Pure>) {
          return "Pure(" + render(n.a, canonical) + ")";
        } else {
          return std::string(symbolic_name(n.op)) + "(" + render(n.a, canonical) + ")";
        }
      },
      e->v);
}

}  // namespace detail

/// Re-parseable text form.
inline std::string to_string(const Expr& e) { return detail::render(e, false); }

/// Text form with commutative operands ordered, used for hashing.
inline std::string canonical_string(const Expr& e) { return detail::render(e, true); }

inline u64 fnv1a(const std::string& s) {
  u64 h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline u64 canonical_hash(const Expr& e) { return fnv1a(canonical_string(e)); }

/// Number of nodes.
inline std::size_t expr_size(const Expr& e) {
  std::size_t n = 1;
  for (const auto& c : e->children()) n += expr_size(c);
  return n;
}

}  // namespace sheafcx
