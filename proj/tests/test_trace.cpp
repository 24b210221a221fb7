#include <gtest/gtest.h>

#include <numbers>

#include "sheafcx/parser.hpp"
#include "sheafcx/trace.hpp"

using namespace sheafcx;

namespace {

cplx e_of(double t) { return std::polar(1.0, 2 * std::numbers::pi * t); }

cplx at(const char* src, u64 p, int m, std::vector<u64> codes, u64 seed = 0) {
  std::vector<FieldElement> pt;
  for (u64 c : codes) pt.push_back(FieldElement{c});
  return eval_trace_extension(parse_expr(src), p, m, pt, seed);
}

}  // namespace

TEST(Trace, ArtinSchreierAtAPoint) {
  EXPECT_NEAR(std::abs(at("AS(psi, x)", 5, 1, {1}) - e_of(1.0 / 5)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(at("AS(psi[2], x^2 + 1)", 7, 1, {3}) - e_of(20.0 / 7)), 0.0, 1e-15);
}

TEST(Trace, TensorWithNegativeIsOne) {
  for (u64 x = 0; x < 11; ++x) EXPECT_NEAR(std::abs(at("AS(psi, x^3 + 2x) (*) AS(psi, -x^3 - 2x)", 11, 1, {x}) - 1.0), 0.0, 1e-14);
  for (u64 x = 0; x < 49; x += 5) EXPECT_NEAR(std::abs(at("AS(psi, x^3) (*) AS(psi, -x^3)", 7, 2, {x}) - 1.0), 0.0, 1e-14);
}

TEST(Trace, PolesGiveZero) {
  EXPECT_EQ(at("AS(psi, 1/x)", 7, 1, {0}), cplx(0.0, 0.0));
  EXPECT_EQ(at("K(chi[2], (x+1)/(x-2))", 7, 1, {2}), cplx(0.0, 0.0));
  EXPECT_EQ(at("K(chi[2], x)", 7, 1, {0}), cplx(0.0, 0.0));
  EXPECT_NEAR(std::abs(at("AS(psi, 1/x)", 7, 1, {2}) - e_of(4.0 / 7)), 0.0, 1e-15);
}

TEST(Trace, PushOfBilinearPhase) {
  // sum_y psi(x y) = p [x = 0]
  EXPECT_NEAR(std::abs(at("Push(AS(psi, x*y), [y])", 7, 1, {2})), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(at("Push(AS(psi, x*y), [y])", 7, 1, {0}) - 7.0), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(at("Push(AS(psi, x*y), [y])", 3, 2, {4}) ), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(at("Push(AS(psi, x*y), [y])", 3, 2, {0}) - 9.0), 0.0, 1e-12);
}

TEST(Trace, TwistScalesByFieldSize) {
  EXPECT_NEAR(std::abs(at("Twist(Const[1], 1/2)", 5, 2, {3}) - 0.2), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(at("Twist(Const[1], 1)", 3, 1, {0}) - 1.0 / 3), 0.0, 1e-15);
  EXPECT_THROW(at("Twist(Const[1], 1/3)", 3, 1, {0}), Error);
}

TEST(Trace, KummerThroughTheNorm) {
  // Every element of F_p is a square in F_{p^2}.
  const u64 p = 7;
  for (u64 a = 1; a < p; ++a) EXPECT_NEAR(std::abs(at("K(chi[2], x)", p, 2, {a}) - 1.0), 0.0, 1e-15);
  // Over F_p, the quadratic character of 3 mod 7 is -1.
  EXPECT_NEAR(std::abs(at("K(chi[2], x)", p, 1, {3}) + 1.0), 0.0, 1e-15);
  EXPECT_THROW(at("K(chi[4], x)", 7, 1, {1}), Error);
}

TEST(Trace, ConjIsBitExactAndShiftFlipsSign) {
  for (u64 x = 0; x < 13; ++x) {
    const cplx v = at("AS(psi, x^5 + x) (*) K(chi[3], x + 1)", 13, 1, {x});
    const cplx c = at("Conj(AS(psi, x^5 + x) (*) K(chi[3], x + 1))", 13, 1, {x});
    EXPECT_EQ(c, std::conj(v));
    EXPECT_EQ(at("Shift(AS(psi, x^5 + x), 3)", 13, 1, {x}), -at("AS(psi, x^5 + x)", 13, 1, {x}));
    EXPECT_EQ(at("Shift(AS(psi, x^5 + x), 2)", 13, 1, {x}), at("AS(psi, x^5 + x)", 13, 1, {x}));
  }
}

TEST(Trace, FrobeniusInvarianceOfArtinSchreier) {
  for (u64 p : {2, 3, 5, 7, 11, 13}) {
    const std::string lhs = "AS(psi, x^" + std::to_string(p) + ")";
    for (int m : {1, 2}) {
      const u64 q = arith::checked_pow(p, m);
      for (u64 x = 0; x < q; ++x) EXPECT_NEAR(std::abs(at(lhs.c_str(), p, m, {x}) - at("AS(psi, x)", p, m, {x})), 0.0, 1e-14);
    }
  }
}

TEST(Trace, DualNeedsWeightZero) {
  EXPECT_THROW(at("Dual(K(chi[2], x))", 7, 1, {1}), Error);
  const cplx v = at("Dual(Pure(AS(psi, x^2)))", 7, 1, {3});
  EXPECT_NEAR(std::abs(v - std::conj(at("AS(psi, x^2)", 7, 1, {3}))), 0.0, 1e-15);
  try {
    at("Dual(K(chi[2], x))", 7, 1, {1});
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NotWeightPure);
  }
}

TEST(Trace, SymbolicNodesAreRejected) {
  try {
    at("NearbyCycles(AS(psi, x))", 7, 1, {1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NumericUnsupported);
  }
}

TEST(Trace, ExternalProductSplitsCoordinates) {
  for (u64 x = 0; x < 5; ++x)
    for (u64 y = 0; y < 5; ++y) {
      const cplx v = at("AS(psi, x^2) (#) AS(psi, x^3)", 5, 1, {x, y});
      EXPECT_NEAR(std::abs(v - e_of(static_cast<double>((x * x + y * y * y) % 5) / 5)), 0.0, 1e-14);
    }
}

TEST(Trace, FourierOfDelta) {
  // FT of the additive character psi(a x) is sqrt(p) at y = -a.
  const u64 p = 7;
  for (u64 y = 0; y < p; ++y) {
    const cplx v = at("FT(AS(psi, 2x))", p, 1, {y});
    const double expect = (y == p - 2) ? std::sqrt(7.0) : 0.0;
    EXPECT_NEAR(std::abs(v - expect), 0.0, 1e-12);
  }
}

TEST(Trace, AmbientMismatch) {
  const ExtField K = make_extension(PrimeField(5), 1);
  TraceFunction t(parse_expr("AS(psi, x*y)"), K, 2);
  std::vector<FieldElement> one{FieldElement{1}};
  EXPECT_THROW(t(one), Error);
  EXPECT_THROW(TraceFunction(parse_expr("AS(psi, x*y)"), K, 1), Error);
}

TEST(Trace, ErrorBoundsCoverEvaluation) {
  const ExtField K = make_extension(PrimeField(11), 2);
  TraceFunction t(parse_expr("Push(AS(psi, x*y + y^3), [y]) (*) K(chi[5], x+1)"), K, 1);
  EXPECT_GE(t.magnitude_bound(), 121.0);
  EXPECT_GT(t.error_bound(), 0.0);
  EXPECT_LT(t.error_bound(), 1e-10);
}
