#include <gtest/gtest.h>

#include "sheafcx/parser.hpp"
#include "sheafcx/sum_engine.hpp"

using namespace sheafcx;

namespace {

Expr E(const char* s) { return parse_expr(s); }

void expect_close(const std::vector<cplx>& a, const std::vector<cplx>& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(std::abs(a[i] - b[i]), 0.0, tol) << "index " << i;
}

}  // namespace

TEST(CompleteSum, QuadraticGaussSums) {
  // p = 3 mod 4: sum e(x^2/p) = i sqrt(p).
  const auto r = complete_sum(E("AS(psi, x^2)"), 7);
  EXPECT_NEAR(std::abs(r.value - cplx(0, std::sqrt(7.0))), 0.0, 1e-13);
  EXPECT_EQ(r.npoints, 7u);
  EXPECT_LE(r.fp_error_bound, 1e-12);
  // The generic kernel path agrees with the histogram path.
  const auto g = complete_sum(E("AS(psi, x^2) (*) Const[1]"), 7);
  EXPECT_NEAR(std::abs(g.value - r.value), 0.0, 1e-13);
  // Over F_9 the Gauss sum is -(-g)^2 = 3.
  EXPECT_NEAR(std::abs(complete_sum(E("AS(psi, x^2)"), 3, 2).value - 3.0), 0.0, 1e-12);
  // Normalized: |q^{-1/2} g| = 1.
  EXPECT_NEAR(std::abs(complete_sum(E("AS(psi, x^2)"), 101, 1, Weight(1)).value), 1.0, 1e-12);
}

TEST(CompleteSum, MultivariateAndKummer) {
  EXPECT_NEAR(std::abs(complete_sum(E("AS(psi, x*y)"), 5).value - 5.0), 0.0, 1e-12);
  // sum_x e(x/p) sum_y e(xy/p) = p
  EXPECT_NEAR(std::abs(complete_sum(E("AS(psi, x*y + x)"), 5).value - 5.0), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(complete_sum(E("AS(psi, x*y + 1)"), 5).value - 5.0 * std::polar(1.0, 2 * M_PI / 5)), 0.0, 1e-12);
  for (u64 p : {5, 7, 11, 13})
    EXPECT_NEAR(std::abs(complete_sum(E("K(chi[2], x^2 - 1)"), p).value + 1.0), 0.0, 1e-12) << p;
  EXPECT_NEAR(std::abs(complete_sum(E("Const[1]"), 5, 2).value - 25.0), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(complete_sum(E("Const[2]"), 5).value - 25.0), 0.0, 1e-12);
}

TEST(CompleteSum, HistogramPathHandlesWrappers) {
  const u64 p = 11;
  const cplx base = complete_sum(E("AS(psi, x^3 + 2x) (*) Const[1]"), p).value;
  EXPECT_NEAR(std::abs(complete_sum(E("AS(psi, x^3 + 2x)"), p).value - base), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(complete_sum(E("Conj(AS(psi, x^3 + 2x))"), p).value - std::conj(base)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(complete_sum(E("Shift(AS(psi, x^3 + 2x), 1)"), p).value + base), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(complete_sum(E("Twist(AS(psi, x^3 + 2x), 1/2)"), p).value - base / std::sqrt(11.0)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(complete_sum(E("AS(psi[3], (x^3 + 2x)/2)"), p).value -
                       complete_sum(E("AS(psi, 3(x^3 + 2x)/2) (*) Const[1]"), p).value),
              0.0, 1e-12);
}

TEST(CompleteSum, PrimePolySumMatchesDirect) {
  const PrimeField F(101);
  const RootsOfUnity roots(101);
  const UPoly f{3, 0, 5, 1, 0, 7};
  cplx direct = 0;
  for (u64 x = 0; x < 101; ++x) direct += roots(upoly::eval(F, f, x));
  EXPECT_NEAR(std::abs(prime_poly_sum(F, f, roots) - direct), 0.0, 1e-11);
  // Degree >= p still works.
  const PrimeField F3(3);
  const RootsOfUnity r3(3);
  EXPECT_NEAR(std::abs(prime_poly_sum(F3, UPoly{0, 0, 0, 0, 1}, r3) - (1.0 + 2.0 * r3(1))), 0.0, 1e-14);
}

TEST(CompleteSum, BudgetIsEnforced) {
  SumOptions o;
  o.max_evaluations = 1000;
  try {
    complete_sum(E("AS(psi, x*y)"), 101, 1, Weight(0), o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::BudgetExceeded);
  }
  o.allow_large = true;
  EXPECT_NO_THROW(complete_sum(E("AS(psi, x*y)"), 101, 1, Weight(0), o));
}

TEST(CompleteSum, BitIdenticalAcrossThreadCounts) {
  SumOptions o;
  o.chunk_size = 97;
  std::vector<cplx> results;
  for (unsigned t : {1u, 2u, 3u, 8u}) {
    o.threads = t;
    results.push_back(complete_sum(E("AS(psi, x^2 y + y^3) (*) K(chi[2], x + y + 1)"), 31, 1, Weight(0), o).value);
    results.push_back(complete_sum(E("AS(psi, x^2 y + y^3)"), 31, 1, Weight(0), o).value);
  }
  for (std::size_t i = 2; i < results.size(); ++i) {
    EXPECT_EQ(results[i].real(), results[i % 2].real());
    EXPECT_EQ(results[i].imag(), results[i % 2].imag());
  }
}

TEST(InnerProduct, Orthogonality) {
  EXPECT_NEAR(std::abs(sheafcx::inner_product(E("AS(psi, x)"), E("AS(psi, 2x)"), 7)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(sheafcx::inner_product(E("AS(psi, x^3)"), E("AS(psi, x^3)"), 7) - 7.0), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(sheafcx::inner_product(E("K(chi[2], x)"), E("K(chi[2], x)"), 7, 2) - 48.0), 0.0, 1e-10);
  EXPECT_THROW(sheafcx::inner_product(E("AS(psi, x)"), E("AS(psi, x*y)"), 7), Error);
}

TEST(PowerSums, DivisorRouteMatchesLiteral) {
  struct Case {
    const char* src;
    u64 p;
    int M;
  };
  for (const Case& c : {Case{"AS(psi, x^3)", 7, 4}, Case{"AS(psi, x^4 + 3x)", 5, 4}, Case{"K(chi[2], x^2 + 1)", 5, 3},
                        Case{"AS(psi, x^2) (*) K(chi[2], x)", 5, 3}, Case{"Conj(K(chi[4], x^3 - x))", 5, 3},
                        Case{"Shift(Twist(AS(psi, x^3), 1/2), 1)", 7, 3}, Case{"Const[1]", 3, 4},
                        Case{"K(chi[3], (x + 1)/(x^2 + 2))", 7, 3}, Case{"Dual(Pure(AS(psi, x^2 + x)))", 3, 4},
                        Case{"AS(psi, x^2) (*) Conj(K(chi[2], x - 1)) (*) K(chi[4], x)", 5, 3}}) {
    SCOPED_TRACE(c.src);
    const auto lit = power_sums(E(c.src), c.p, c.M, {}, PowerSumRoute::Literal);
    const auto div = power_sums(E(c.src), c.p, c.M, {}, PowerSumRoute::Divisor);
    expect_close(lit, div, 1e-8);
  }
  EXPECT_THROW(power_sums(E("AS(psi, x*y)"), 5, 2, {}, PowerSumRoute::Divisor), Error);
}

TEST(PowerSums, NewtonRoundTrip) {
  const std::vector<cplx> c{1.0, cplx(2, 1), cplx(-3, 0.5), 4.0};
  const auto back = coefficients_from_power_sums(power_sums_from_coefficients(c));
  expect_close(back, c, 1e-12);
}

TEST(Fit, HankelRecoversDegreeAndEulerCharacteristic) {
  {
    const auto est = fit_l_polynomial(power_sums(E("AS(psi, x^3)"), 7, 6));
    EXPECT_EQ(est.degree, 2);
    EXPECT_EQ(est.chi_c, -2);
    EXPECT_LT(est.residual, 1e-8);
  }
  {
    const auto est = fit_l_polynomial(power_sums(E("Const[1]"), 5, 4));
    EXPECT_EQ(est.degree, 1);
    EXPECT_EQ(est.chi_c, 1);
    EXPECT_NEAR(std::abs(est.recurrence[0] - 5.0), 0.0, 1e-9);
  }
  {
    // chi_2(x) on A^1: H^1_c = 0 away from 0... the sum over A^1 vanishes.
    const auto est = fit_l_polynomial(power_sums(E("K(chi[2], x)"), 5, 4));
    EXPECT_EQ(est.degree, 0);
    EXPECT_EQ(est.chi_c, 0);
  }
  {
    const auto est = fit_l_polynomial(power_sums(E("K(chi[2], x^2 - 1)"), 7, 6));
    EXPECT_EQ(est.chi_c, -1);
  }
}

TEST(Fit, PolynomialModeAndInstability) {
  const auto S = power_sums(E("AS(psi, x^4 + x)"), 5, 4);
  FitOptions o;
  o.vanishing_h0_h2 = true;
  o.purity_p = 5.0;
  const auto est = fit_l_polynomial(S, o);
  EXPECT_EQ(est.degree, 3);
  EXPECT_EQ(est.chi_c, -3);
  // Too few power sums for degree 3.
  const auto S3 = power_sums(E("AS(psi, x^4 + x)"), 5, 3);
  EXPECT_THROW(fit_l_polynomial(S3, o), Error);
  EXPECT_THROW(fit_l_polynomial(S3), Error);
  try {
    fit_l_polynomial(S3);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::Unstable);
  }
}

TEST(Gowers, QuadraticPhase) {
  const u64 p = 13;
  EXPECT_NEAR(gowers_norm(E("AS(psi, x^2)"), 2, p), 1.0 / p, 1e-12);
  EXPECT_NEAR(gowers_norm(E("AS(psi, x^2)"), 3, p), 1.0, 1e-12);
  EXPECT_NEAR(gowers_norm(E("AS(psi, x)"), 2, p), 1.0, 1e-12);
  {
    const RootsOfUnity roots(p);
    auto f = [&](u64 x) { return roots(x * x * x % p); };
    cplx direct = 0;
    for (u64 x = 0; x < p; ++x)
      for (u64 a = 0; a < p; ++a)
        for (u64 b = 0; b < p; ++b)
          direct += f(x) * std::conj(f((x + a) % p)) * std::conj(f((x + b) % p)) * f((x + a + b) % p);
    EXPECT_NEAR(gowers_norm(E("AS(psi, x^3)"), 2, p), direct.real() / (p * p * p), 1e-12);
  }
  EXPECT_GE(gowers_norm(E("K(chi[3], x^2 + 1) (*) AS(psi, x)"), 2, p), 0.0);
}

TEST(Fourier, QuadraticPhaseIsFlat) {
  const auto t = fourier_table(E("AS(psi, x^2)"), AdditiveSpec{1}, 7);
  ASSERT_EQ(t.size(), 7u);
  for (const cplx& v : t) EXPECT_NEAR(std::abs(v), 1.0, 1e-12);
  const auto d = fourier_table(E("AS(psi, 3x)"), AdditiveSpec{1}, 7);
  for (u64 y = 0; y < 7; ++y) EXPECT_NEAR(std::abs(d[y]), y == 4 ? std::sqrt(7.0) : 0.0, 1e-12);
}
