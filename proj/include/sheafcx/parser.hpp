#pragma once

// Text grammar for sheaf expressions (see docs/grammar.md).

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "sheafcx/error.hpp"
#include "sheafcx/sheaf_expr.hpp"

namespace sheafcx {

namespace parse_detail {

enum class Tok { Ident, Int, Punct, End };

struct Token {
  Tok kind;
  std::string text;
  std::size_t offset;
};

inline std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      out.push_back({Tok::Ident, std::string(src.substr(i, j - i)), i});
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      out.push_back({Tok::Int, std::string(src.substr(i, j - i)), i});
      i = j;
      continue;
    }
    if (c == '(' && i + 2 < src.size() && src[i + 2] == ')' &&
        (src[i + 1] == '+' || src[i + 1] == '*' || src[i + 1] == '#')) {
      out.push_back({Tok::Punct, std::string(src.substr(i, 3)), i});
      i += 3;
      continue;
    }
    if (c == '|' && i + 1 < src.size() && src[i + 1] == '>') {
      out.push_back({Tok::Punct, "|>", i});
      i += 2;
      continue;
    }
    if (std::string_view("()[],+-*/^").find(c) != std::string_view::npos) {
      out.push_back({Tok::Punct, std::string(1, c), i});
      ++i;
      continue;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", i, 1);
  }
  out.push_back({Tok::End, "", src.size()});
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src), toks_(lex(src)) {}

  Expr parse_expression() {
    Expr e = sum();
    if (peek().kind != Tok::End) fail("unexpected '" + peek().text + "' after expression", peek());
    return e;
  }

  RationalMap parse_rational_only() {
    RationalMap f = rational();
    if (peek().kind != Tok::End) fail("unexpected '" + peek().text + "' after polynomial", peek());
    return f;
  }

 private:
  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

  bool is_punct(const char* s, std::size_t k = 0) const { return peek(k).kind == Tok::Punct && peek(k).text == s; }

  bool accept(const char* s) {
    if (is_punct(s)) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(const char* s) {
    if (!accept(s)) fail(std::string("expected '") + s + "'" + (peek().kind == Tok::End ? " before end of input" : ""), peek());
  }

  [[noreturn]] void fail(const std::string& msg, const Token& t) const {
    throw ParseError(msg, t.offset, t.kind == Tok::End ? 1 : t.text.size());
  }

  i64 integer() {
    bool negative = false;
    if (accept("-")) negative = true;
    else accept("+");
    const Token& t = peek();
    if (t.kind != Tok::Int) fail("expected an integer", t);
    next();
    try {
      const i64 v = std::stoll(t.text);
      return negative ? -v : v;
    } catch (const std::out_of_range&) {
      fail("integer out of range", t);
    }
  }

  Weight weight() {
    const Token& start = peek();
    const i64 num = integer();
    i64 den = 1;
    if (accept("/")) den = integer();
    if (den == 0) fail("weight with zero denominator", start);
    return Weight(num, den);
  }

  // Expressions, loosest first: (+), (*), (#), then postfix pipes.

  Expr sum() {
    Expr e = tensor();
    while (accept("(+)")) e = expr::DirectSum(e, tensor());
    return e;
  }

  Expr tensor() {
    Expr e = external();
    while (accept("(*)")) e = expr::Tensor(e, external());
    return e;
  }

  Expr external() {
    Expr e = postfix();
    while (accept("(#)")) e = expr::ExternalProduct(e, postfix());
    return e;
  }

  Expr postfix() {
    Expr e = primary();
    while (accept("|>")) {
      const Token& t = peek();
      if (t.kind != Tok::Ident) fail("expected an operation after '|>'", t);
      next();
      const std::string& op = t.text;
      if (op == "push") {
        expect("(");
        e = expr::PushCompact(e, variable_list());
        expect(")");
      } else if (op == "dual") {
        e = expr::Dual(e);
      } else if (op == "conj") {
        e = expr::Conj(e);
      } else if (op == "pure") {
        e = expr::Pure(e);
      } else if (op == "shift") {
        expect("(");
        e = expr::Shift(e, small_int());
        expect(")");
      } else if (op == "twist") {
        expect("(");
        e = expr::Twist(e, weight());
        expect(")");
      } else if (op == "ft") {
        AdditiveSpec psi;
        if (accept("(")) {
          psi = additive();
          expect(")");
        }
        e = expr::Fourier(e, psi);
      } else if (op == "normalize") {
        expect("(");
        const int n = small_int();
        expect(")");
        e = expr::Normalized(e, n);
      } else {
        fail("unknown pipe operation '" + op + "'", t);
      }
    }
    return e;
  }

  int small_int() {
    const Token& t = peek();
    const i64 v = integer();
    if (v < -1000000 || v > 1000000) fail("integer out of range", t);
    return static_cast<int>(v);
  }

  std::vector<int> variable_list() {
    std::vector<int> vars;
    const bool bracketed = accept("[");
    do {
      vars.push_back(variable_index(peek()));
      next();
    } while (accept(","));
    if (bracketed) expect("]");
    return vars;
  }

  int variable_index(const Token& t) const {
    if (t.kind != Tok::Ident) fail("expected a variable", t);
    const std::string& s = t.text;
    if (s == "x") return 0;
    if (s == "y") return 1;
    if (s == "z") return 2;
    if (s.size() >= 2 && s[0] == 'x' && std::all_of(s.begin() + 1, s.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
      const long idx = std::stol(s.substr(1));
      if (idx < 1 || idx > 64) fail("variable index must be between 1 and 64", t);
      return static_cast<int>(idx - 1);
    }
    fail("unknown variable '" + s + "'", t);
  }

  bool is_variable(const Token& t) const {
    if (t.kind != Tok::Ident) return false;
    const std::string& s = t.text;
    if (s == "x" || s == "y" || s == "z") return true;
    return s.size() >= 2 && s[0] == 'x' &&
           std::all_of(s.begin() + 1, s.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); });
  }

  AdditiveSpec additive() {
    const Token& t = peek();
    if (t.kind != Tok::Ident || t.text != "psi") fail("expected an additive character 'psi' or 'psi[a]'", t);
    next();
    AdditiveSpec s;
    if (accept("[")) {
      s.a = integer();
      expect("]");
    }
    return s;
  }

  KummerSpec multiplicative() {
    const Token& t = peek();
    if (t.kind != Tok::Ident || t.text != "chi") fail("expected a multiplicative character 'chi[r]' or 'chi[r,j]'", t);
    next();
    KummerSpec s;
    if (accept("[")) {
      const Token& rt = peek();
      const i64 r = integer();
      if (r < 2) fail("character order must be at least 2", rt);
      s.r = static_cast<u64>(r);
      if (accept(",")) {
        const Token& jt = peek();
        const i64 j = integer();
        if (j < 0) fail("character index must be nonnegative", jt);
        s.j = static_cast<u64>(j) % s.r;
        if (s.j == 0) fail("character index must not be divisible by the order", jt);
      }
      expect("]");
    }
    return s;
  }

  Expr unary_call(Expr (*build)(Expr)) {
    expect("(");
    Expr a = sum();
    expect(")");
    return build(std::move(a));
  }

  Expr primary() {
    const Token& t = peek();
    if (accept("(")) {
      Expr e = sum();
      expect(")");
      return e;
    }
    if (t.kind != Tok::Ident) fail("expected an expression", t);
    const std::string name = t.text;
    next();
    if (name == "AS") {
      expect("(");
      AdditiveSpec psi = additive();
      expect(",");
      RationalMap f = rational();
      expect(")");
      return expr::AS(std::move(f), psi);
    }
    if (name == "K" || name == "Kummer") {
      expect("(");
      KummerSpec chi = multiplicative();
      expect(",");
      RationalMap g = rational();
      expect(")");
      return expr::Kummer(std::move(g), chi);
    }
    if (name == "Const") {
      int n = 0;
      if (accept("[")) {
        const Token& nt = peek();
        n = small_int();
        if (n < 0) fail("ambient dimension must be nonnegative", nt);
        expect("]");
      }
      return expr::Const(n);
    }
    if (name == "FT") {
      expect("(");
      Expr a = sum();
      AdditiveSpec psi;
      if (accept(",")) psi = additive();
      expect(")");
      return expr::Fourier(std::move(a), psi);
    }
    if (name == "Dual") return unary_call([](Expr a) { return expr::Dual(std::move(a)); });
    if (name == "Conj") return unary_call([](Expr a) { return expr::Conj(std::move(a)); });
    if (name == "Pure") return unary_call([](Expr a) { return expr::Pure(std::move(a)); });
    if (name == "NearbyCycles") return unary_call([](Expr a) { return expr::Symbolic(SymbolicOp::NearbyCycles, std::move(a)); });
    if (name == "VanishingCycles") return unary_call([](Expr a) { return expr::Symbolic(SymbolicOp::VanishingCycles, std::move(a)); });
    if (name == "JordanHolder") return unary_call([](Expr a) { return expr::Symbolic(SymbolicOp::JordanHolder, std::move(a)); });
    if (name == "Tannakian") return unary_call([](Expr a) { return expr::Symbolic(SymbolicOp::Tannakian, std::move(a)); });
    if (name == "Shift" || name == "Twist" || name == "Push" || name == "Tensor" || name == "DirectSum" ||
        name == "ExternalProduct") {
      expect("(");
      Expr a = sum();
      expect(",");
      Expr out;
      if (name == "Shift") out = expr::Shift(a, small_int());
      else if (name == "Twist") out = expr::Twist(a, weight());
      else if (name == "Push") out = expr::PushCompact(a, variable_list());
      else if (name == "Tensor") out = expr::Tensor(a, sum());
      else if (name == "DirectSum") out = expr::DirectSum(a, sum());
      else out = expr::ExternalProduct(a, sum());
      expect(")");
      return out;
    }
    fail("unknown operation '" + name + "'", t);
  }

  // Rational functions: + - * / ^ over integers and variables.

  RationalMap rational() {
    RationalMap r;
    bool negate = false;
    if (accept("-")) negate = true;
    else accept("+");
    r = term();
    if (negate) r = -r;
    while (true) {
      if (accept("+")) r = r + term();
      else if (accept("-")) r = r - term();
      else break;
    }
    return r;
  }

  RationalMap term() {
    RationalMap r = factor();
    while (true) {
      if (accept("*")) {
        r = r * factor();
      } else if (is_punct("/")) {
        const Token& t = peek();
        next();
        RationalMap d = factor();
        if (d.numerator().is_zero()) fail("division by zero", t);
        r = r / d;
      } else if (is_variable(peek()) || is_punct("(")) {
        // Juxtaposition: 3x, x y, 2(x+1).
        r = r * factor();
      } else {
        break;
      }
    }
    return r;
  }

  RationalMap factor() {
    RationalMap base = atom();
    if (accept("^")) {
      const Token& t = peek();
      const i64 e = integer();
      if (e < -64 || e > 4096) fail("exponent out of range", t);
      if (e < 0 && base.numerator().is_zero()) fail("negative power of zero", t);
      base = base.pow(static_cast<int>(e));
    }
    return base;
  }

  RationalMap atom() {
    const Token& t = peek();
    if (accept("(")) {
      RationalMap r = rational();
      expect(")");
      return r;
    }
    if (accept("-")) return -factor();
    if (t.kind == Tok::Int) {
      next();
      try {
        return RationalMap(zconst(0, std::stoll(t.text)));
      } catch (const std::out_of_range&) {
        fail("integer out of range", t);
      }
    }
    if (is_variable(t)) {
      const int idx = variable_index(t);
      next();
      return RationalMap(zvar(idx + 1, idx));
    }
    fail(t.kind == Tok::End ? "expected a polynomial term before end of input" : "expected a polynomial term", t);
  }

  std::string_view src_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace parse_detail

/// Parse an expression; throws ParseError with a source span.
inline Expr parse_expr(std::string_view text) {
  try {
    return parse_detail::Parser(text).parse_expression();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(e.what(), 0, text.size());
  }
}

/// Parse a standalone rational function such as "(x^3 + y)/y".
inline RationalMap parse_rational(std::string_view text) { return parse_detail::Parser(text).parse_rational_only(); }

}  // namespace sheafcx
