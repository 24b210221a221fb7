#include <gtest/gtest.h>

#include "sheafcx/parser.hpp"

using namespace sheafcx;

namespace {

RationalMap rat(const char* s) { return parse_rational(s); }

}  // namespace

TEST(Parser, RoundTripsThroughToString) {
  const char* inputs[] = {
      "AS(psi, x^3 + x)",
      "AS(psi[3], 1/x) (*) K(chi[2], x^2 - 1)",
      "Push(AS(psi, x*y), [y])",
      "AS(psi, x) (+) Const[1] |> shift(1) |> twist(1/2)",
      "AS(psi, x) (#) AS(psi, x^2)",
      "FT(K(chi[4,3], x), psi[2])",
      "NearbyCycles(AS(psi, x))",
      "Dual(Pure(AS(psi, x^2)))",
      "Conj(Kummer(chi[2], (x^2 + 1)/(x - 3)))",
  };
  for (const char* in : inputs) {
    SCOPED_TRACE(in);
    const Expr e = parse_expr(in);
    const std::string s = to_string(e);
    const Expr again = parse_expr(s);
    EXPECT_EQ(to_string(again), s);
    EXPECT_EQ(canonical_hash(again), canonical_hash(e));
  }
}

TEST(Parser, Precedence) {
  // (+) binds loosest, then (*), then (#); pipes bind tightest.
  const Expr e = parse_expr("AS(psi, x) (+) AS(psi, x^2) (*) AS(psi, x^3)");
  ASSERT_EQ(e->kind(), NodeKind::DirectSum);
  EXPECT_EQ(std::get<node::DirectSum>(e->v).b->kind(), NodeKind::Tensor);
  const Expr f = parse_expr("AS(psi, x) (*) AS(psi, y) |> push([y])");
  ASSERT_EQ(f->kind(), NodeKind::Tensor);
  EXPECT_EQ(std::get<node::Tensor>(f->v).b->kind(), NodeKind::PushCompact);
  const Expr g = parse_expr("AS(psi, x) (*) AS(psi, y) (#) Const[1]");
  ASSERT_EQ(g->kind(), NodeKind::Tensor);
}

TEST(Parser, VariableNames) {
  EXPECT_EQ(rat("x"), rat("x1"));
  EXPECT_EQ(rat("y"), rat("x2"));
  EXPECT_EQ(rat("z"), rat("x3"));
  EXPECT_EQ(rat("2x^2 y"), rat("2*x1^2*x2"));
  EXPECT_EQ(rat("(x+1)^2"), rat("x^2 + 2x + 1"));
  EXPECT_EQ(rat("x^-1"), rat("1/x"));
  EXPECT_EQ(rat("-x + 3"), rat("3 - x"));
}

TEST(Parser, ErrorsCarryCaret) {
  const std::string src = "AS(psi, x^2 +) (*) Const[1]";
  try {
    parse_expr(src);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.code(), Errc::Parse);
    const std::string r = e.render(src);
    EXPECT_NE(r.find(src), std::string::npos);
    EXPECT_NE(r.find('^'), std::string::npos);
    const auto first_nl = r.find('\n');
    const auto caret_line = r.substr(first_nl + 1, r.find('\n', first_nl + 1) - first_nl - 1);
    EXPECT_EQ(caret_line.find('^'), static_cast<std::size_t>(13));
  }
  for (const char* bad : {"", "AS(psi)", "Foo(x)", "AS(psi, x) (*)", "Const[-1]", "Push(AS(psi, x*y), [y, y])",
                          "K(chi[1], x)", "AS(psi, x/0)", "Twist(AS(psi, x), 1/0)", "AS(psi, x))"}) {
    SCOPED_TRACE(bad);
    EXPECT_THROW(parse_expr(bad), ParseError);
  }
}

TEST(Expr, NaturalAmbient) {
  EXPECT_EQ(natural_ambient(parse_expr("AS(psi, x)")), 1);
  EXPECT_EQ(natural_ambient(parse_expr("AS(psi, z)")), 3);
  EXPECT_EQ(natural_ambient(parse_expr("Const[0]")), 0);
  EXPECT_EQ(default_ambient(parse_expr("Const[0]")), 1);
  EXPECT_EQ(natural_ambient(parse_expr("AS(psi, x) (#) AS(psi, x)")), 2);
  EXPECT_EQ(natural_ambient(parse_expr("Push(AS(psi, x*y), [y])")), 1);
  EXPECT_EQ(natural_ambient(parse_expr("Push(AS(psi, x*y), [x, y])")), 0);
  EXPECT_THROW(check_ambient(parse_expr("AS(psi, y)"), 1), Error);
}

TEST(Expr, PurityWeights) {
  auto w = [](const char* s) { return purity_weight(parse_expr(s)); };
  EXPECT_EQ(w("AS(psi, x^3)"), Weight(0));
  EXPECT_EQ(w("AS(psi, x) |> shift(1)"), Weight(1));
  EXPECT_EQ(w("AS(psi, x) |> twist(1/2)"), Weight(-1));
  EXPECT_EQ(w("AS(psi, x) |> normalize(1)"), Weight(0));
  EXPECT_EQ(w("AS(psi, x) (*) AS(psi, x^2) |> shift(2)"), Weight(2));
  EXPECT_EQ(w("Dual(AS(psi, x) |> shift(1))"), Weight(-1));
  EXPECT_FALSE(w("AS(psi, 1/x)").has_value());
  EXPECT_FALSE(w("AS(psi, x) (+) AS(psi, x) |> shift(1)").has_value());
  EXPECT_TRUE(is_weight_zero_pure(parse_expr("Pure(Kummer(chi[2], x))")));
  EXPECT_FALSE(is_weight_zero_pure(parse_expr("Kummer(chi[2], x)")));
  EXPECT_TRUE(is_symbolic(parse_expr("Tannakian(AS(psi, x)) (*) Const[1]")));
  EXPECT_FALSE(is_symbolic(parse_expr("AS(psi, x)")));
}

TEST(Expr, CanonicalFormIgnoresOperandOrder) {
  const Expr a = parse_expr("AS(psi, x) (*) K(chi[2], x)");
  const Expr b = parse_expr("K(chi[2], x) (*) AS(psi, x)");
  EXPECT_NE(to_string(a), to_string(b));
  EXPECT_EQ(canonical_string(a), canonical_string(b));
  EXPECT_EQ(canonical_hash(a), canonical_hash(b));
  EXPECT_NE(canonical_hash(a), canonical_hash(parse_expr("AS(psi, x) (#) K(chi[2], x)")));
  EXPECT_EQ(expr_size(a), 3u);
}

TEST(Expr, BuildersValidate) {
  EXPECT_THROW(expr::Kummer(rat("x"), KummerSpec{1, 0}), Error);
  EXPECT_THROW(expr::PushCompact(expr::Const(2), {1, 1}), Error);
  EXPECT_THROW(expr::PushCompact(expr::Const(2), {-1}), Error);
  EXPECT_THROW(Weight(1, 0), Error);
  EXPECT_EQ(Weight(2, 4), Weight(1, 2));
  EXPECT_EQ(Weight(1, -2).to_string(), "-1/2");
}

TEST(Expr, EveryKindHasAName) {
  std::set<std::string> names;
  for (NodeKind k : kAllNodeKinds) names.insert(node_kind_name(k));
  EXPECT_EQ(names.size(), std::size(kAllNodeKinds));
  EXPECT_EQ(names.count("?"), 0u);
}
