#include <gtest/gtest.h>

#include "sheafcx/characters.hpp"
#include "sheafcx/poly.hpp"

using namespace sheafcx;

TEST(Additive, Definition) {
  auto F5 = make_extension(PrimeField(5), 1);
  AdditiveCharacter psi(F5, F5.one());
  EXPECT_EQ(psi(F5.zero()), cplx(1.0, 0.0));
  EXPECT_NEAR(psi(F5.one()).real(), 0.309017, 1e-6);
  EXPECT_NEAR(psi(F5.one()).imag(), 0.951057, 1e-6);
}

TEST(Additive, F4SignsAndOrthogonality) {
  auto F4 = make_extension(PrimeField(2), 2, 1);
  AdditiveCharacter psi(F4, F4.one());
  cplx s = 0;
  for (auto x : F4.elements()) {
    cplx v = psi(x);
    EXPECT_TRUE(v == cplx(1, 0) || v == cplx(-1, 0));
    s += v;
  }
  EXPECT_EQ(s, cplx(0, 0));
}

TEST(Additive, OrthogonalityExhaustive) {
  for (auto [p, k] : {std::pair<u64, int>{7, 1}, {3, 3}, {5, 2}, {2, 5}, {11, 1}}) {
    auto K = make_extension(PrimeField(p), k, 2);
    const double q = static_cast<double>(K.order());
    for (auto a : K.elements()) {
      AdditiveCharacter psi(K, a);
      cplx s = 0;
      for (auto x : K.elements()) {
        EXPECT_NEAR(std::abs(psi(x)), 1.0, 4 * std::numeric_limits<double>::epsilon());
        s += psi(x);
      }
      EXPECT_NEAR(std::abs(s - (a.code == 0 ? q : 0.0)), 0.0, 1e-9 * q);
    }
  }
}

TEST(Multiplicative, BasicsAndQuadraticF7) {
  auto F7 = make_extension(PrimeField(7), 1);
  auto chi = MultiplicativeCharacter::of_order(F7, 2);
  EXPECT_EQ(chi.exponent(), 3u);
  EXPECT_EQ(chi(F7.one()), cplx(1, 0));
  EXPECT_EQ(chi(F7.zero()), cplx(0, 0));
  EXPECT_NEAR(chi(F7.from_prime(3)).real(), -1.0, 1e-15);
  for (u64 s : {1u, 2u, 4u}) EXPECT_NEAR(chi(F7.from_prime(s)).real(), 1.0, 1e-15);
  EXPECT_THROW(MultiplicativeCharacter::of_order(F7, 4), Error);
}

TEST(Multiplicative, SumAndMultiplicativity) {
  auto K = make_extension(PrimeField(3), 3, 1);
  for (u64 e = 1; e < K.order() - 1; ++e) {
    MultiplicativeCharacter chi(K, e);
    cplx s = 0;
    for (auto x : K.elements()) s += chi(x);
    EXPECT_NEAR(std::abs(s), 0.0, 1e-10);
  }
  MultiplicativeCharacter chi(K, 5);
  EXPECT_EQ(chi.order(), 26u / std::gcd(5u, 26u));
  for (auto x : K.elements()) {
    for (auto y : K.elements()) {
      if (x.code && y.code) {
        ASSERT_NEAR(std::abs(chi(K.mul(x, y)) - chi(x) * chi(y)), 0.0, 1e-12);
      }
    }
  }
}

TEST(Gauss, Modulus) {
  for (auto [p, k] : {std::pair<u64, int>{7, 1}, {13, 1}, {3, 2}, {5, 2}, {2, 4}}) {
    auto K = make_extension(PrimeField(p), k, 9);
    const double sq = std::sqrt(static_cast<double>(K.order()));
    AdditiveCharacter psi(K, K.one());
    for (u64 e = 1; e < K.order() - 1; ++e) {
      MultiplicativeCharacter chi(K, e);
      cplx g = 0;
      for (auto x : K.elements()) g += psi(x) * chi(x);
      EXPECT_NEAR(std::abs(g), sq, 1e-8 * sq);
    }
  }
}

TEST(Roots, ConjugateSymmetry) {
  RootsOfUnity r(97);
  for (u64 j = 0; j < 97; ++j) EXPECT_EQ(r(j), std::conj(r(97 - j)));
  EXPECT_EQ(RootsOfUnity::compute(3, 12), cplx(0, 1));
}

TEST(Poly, ArithmeticAndPrinting) {
  ZPoly x = zvar(2, 0), y = zvar(2, 1);
  ZPoly f = x.pow(3) + zconst(2, 2) * x * y - zconst(2, 5);
  EXPECT_EQ(f.to_string(), "x1^3 + 2*x1*x2 - 5");
  EXPECT_EQ(f.total_degree(), 3);
  EXPECT_EQ(f.degree_in(1), 1);
  EXPECT_EQ(f.max_variable(), 1);
  EXPECT_EQ((x + y) * (x - y), x.pow(2) - y.pow(2));
}

TEST(Poly, RationalReduce) {
  ZPoly x = zvar(1, 0);
  RationalMap f(x.pow(2) - zconst(1, 1), zconst(1, 2) * (x - zconst(1, 1)));
  auto u = reduce_univariate(f, PrimeField(7));
  // (x^2-1)/(2(x-1)) = (x+1)/2 -> 4x + 4 with denominator 1 mod 7.
  EXPECT_EQ(u.den, (UPoly{1}));
  EXPECT_EQ(u.num, (UPoly{4, 4}));
  EXPECT_THROW(RationalMap(x, zconst(1, 0)), Error);
  EXPECT_THROW(reduce_univariate(RationalMap(x, zconst(1, 7)), PrimeField(7)), Error);
}

TEST(Poly, EvaluatorAgreesAcrossPaths) {
  ZPoly x = zvar(2, 0), y = zvar(2, 1);
  ZPoly f = x.pow(4) * y + zconst(2, 3) * y.pow(2) - x;
  auto K = make_extension(PrimeField(5), 2, 4);
  auto F5 = make_extension(PrimeField(5), 1);
  PolyEvaluator ev(f, PrimeField(5), 2);
  EXPECT_FALSE(ev.univariate());
  for (u64 a = 0; a < 5; ++a)
    for (u64 b = 0; b < 5; ++b) {
      FieldElement pt[2] = {{a}, {b}};
      u64 direct = (a * a * a * a * b + 3 * b * b + 5 * 5 - a) % 5;
      EXPECT_EQ(ev.eval(F5, pt).code, direct);
      EXPECT_EQ(ev.eval(K, pt).code, direct);
    }
  PolyEvaluator uni(x.pow(3) + zconst(2, 1), PrimeField(5), 2);
  EXPECT_TRUE(uni.univariate());
  FieldElement g[2] = {K.generator(), K.zero()};
  EXPECT_EQ(uni.eval(K, g), K.add(K.pow(K.generator(), 3), K.one()));
}
