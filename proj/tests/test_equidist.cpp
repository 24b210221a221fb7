#include <gtest/gtest.h>

#include "sheafcx/equidist.hpp"
#include "sheafcx/parser.hpp"

using namespace sheafcx;

namespace {

FamilyDescriptor family(int n, int d, u64 p, FamilyVariant v = FamilyVariant::All) {
  FamilyDescriptor f;
  f.n = n;
  f.d = d;
  f.p = p;
  f.variant = v;
  return f;
}

FamilyDescriptor sampled(int d, u64 p, u64 count, u64 seed) {
  FamilyDescriptor f = family(1, d, p);
  f.mode = FamilyMode::Sample;
  f.count = count;
  f.seed = seed;
  return f;
}

u64 ipow(u64 b, int e) {
  u64 r = 1;
  while (e-- > 0) r *= b;
  return r;
}

// Squarefree effective divisors of degree d on P^1 over F_q.
u64 squarefree_divisors(u64 q, int d) { return d == 1 ? q + 1 : d == 2 ? q * q : ipow(q, d) - ipow(q, d - 2); }

}  // namespace

TEST(Family, UnivariateCounts) {
  for (u64 p : {2, 3, 5, 7, 11, 13})
    for (int d = 1; d <= 4; ++d) {
      const auto all = enumerate_deligne(family(1, d, p));
      EXPECT_EQ(all.size(), ipow(p, d) - ipow(p, d - 1)) << p << " " << d;
      EXPECT_EQ(all.size(), deligne_count_univariate(p, d, false));
    }
  EXPECT_EQ(enumerate_deligne(family(1, 3, 7, FamilyVariant::Odd)).size(), 42u);
  EXPECT_EQ(enumerate_deligne(family(1, 5, 5, FamilyVariant::Odd)).size(), deligne_count_univariate(5, 5, true));
}

TEST(Family, BinaryFormCounts) {
  for (u64 p : {2, 3, 5, 7})
    for (int d = 1; d <= 3; ++d) {
      if (d == 3 && p > 5) continue;
      int lower = 0;
      for (int t = 1; t < d; ++t) lower += t + 1;
      const u64 expected = (p - 1) * squarefree_divisors(p, d) * ipow(p, lower);
      EXPECT_EQ(enumerate_deligne(family(2, d, p)).size(), expected) << p << " " << d;
    }
}

TEST(Family, DeligneCondition) {
  const auto f = family(2, 3, 7);
  const auto monos = family_monomials(f);
  ASSERT_EQ(monos.size(), 9u);
  const PrimeField F(7);
  auto with_top = [&](std::vector<u64> top) {
    std::vector<u64> c(monos.size(), 0);
    for (std::size_t k = 0; k < top.size(); ++k) c[k] = top[k];
    return is_deligne(f, monos, c, F);
  };
  EXPECT_FALSE(with_top({0, 1, 0, 0}));  // x^2 y
  EXPECT_TRUE(with_top({1, 0, 0, 1}));   // x^3 + y^3
  EXPECT_TRUE(with_top({0, 1, 1, 0}));   // x^2 y + x y^2
  EXPECT_FALSE(with_top({0, 0, 1, 0}));  // x y^2
  EXPECT_FALSE(with_top({0, 0, 0, 0}));

  // A p-th power: both partial derivatives vanish.
  const auto g = family(2, 3, 3);
  const auto gm = family_monomials(g);
  std::vector<u64> c(gm.size(), 0);
  c[0] = 1;
  c[3] = 1;  // x^3 + y^3 = (x + y)^3 in characteristic 3
  EXPECT_FALSE(is_deligne(g, gm, c, PrimeField(3)));

  const auto u = family(1, 3, 5);
  EXPECT_TRUE(is_deligne(u, family_monomials(u), {1, 0, 0}, PrimeField(5)));
  EXPECT_FALSE(is_deligne(u, family_monomials(u), {0, 1, 1}, PrimeField(5)));
}

TEST(Family, Errors) {
  EXPECT_THROW(enumerate_deligne(family(3, 3, 7)), Error);
  try {
    enumerate_deligne(family(3, 3, 7));
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnsupportedDimension);
  }
  EXPECT_THROW(enumerate_deligne(family(1, 4, 7, FamilyVariant::Odd)), Error);
  EXPECT_THROW(enumerate_deligne(family(1, 3, 9)), Error);
  auto big = family(2, 4, 101);
  EXPECT_THROW(enumerate_deligne(big), Error);
  EXPECT_THROW(compare(family(1, 3, 3)), Error);
  EXPECT_THROW(compare(family(1, 3, 7)), Error);
  EquidistOptions tight;
  tight.max_evaluations = 100;
  EXPECT_THROW(family_sums(family(1, 2, 11), tight), Error);
}

TEST(Sums, AgreeWithCompleteSum) {
  for (const auto& desc : {family(1, 3, 11), family(2, 2, 5), family(1, 3, 13, FamilyVariant::Odd)}) {
    auto members = enumerate_deligne(desc);
    members.resize(std::min<std::size_t>(members.size(), 40));
    const auto sums = family_sums(desc, members);
    const auto monos = family_monomials(desc);
    for (std::size_t i = 0; i < members.size(); i += 7) {
      const Expr e = parse_expr("AS(psi, " + member_to_string(desc, monos, members[i]) + ")");
      SumOptions o;
      o.ambient = desc.n;
      const cplx ref = complete_sum(e, desc.p, 1, Weight(desc.n), o).value;
      EXPECT_LT(std::abs(sums[i] - ref), 1e-9) << member_to_string(desc, monos, members[i]);
    }
  }
}

TEST(Sums, QuadraticUnitModulusAndWeil) {
  for (u64 p : {3, 5, 11, 31})
    for (const cplx& s : family_sums(family(1, 2, p))) EXPECT_NEAR(std::abs(s), 1.0, 1e-10);
  for (const cplx& s : family_sums(family(2, 2, 5))) EXPECT_NEAR(std::abs(s), 1.0, 1e-10);
  for (const cplx& s : family_sums(family(1, 3, 13))) EXPECT_LE(std::abs(s), 2.0 + 1e-9);
  for (const cplx& s : family_sums(family(1, 3, 17, FamilyVariant::Odd))) EXPECT_LT(std::abs(s.imag()), 1e-9);
  for (const cplx& s : family_sums(family(1, 0, 101, FamilyVariant::Kloosterman))) {
    EXPECT_LT(std::abs(s.imag()), 1e-9);
    EXPECT_LE(std::abs(s), 2.0 + 1e-9);
  }
}

TEST(Sums, ThreadInvariantAndCsv) {
  const auto desc = family(1, 3, 31);
  const auto members = enumerate_deligne(desc);
  EquidistOptions a, b;
  b.threads = 4;
  b.chunk_size = 17;
  EXPECT_EQ(family_sums(desc, members, a), family_sums(desc, members, b));
  std::ostringstream os;
  std::vector<FamilyMember> two(members.begin(), members.begin() + 2);
  write_family_csv(os, desc, two, family_sums(desc, two));
  const std::string csv = os.str();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "index,coefficients,re,im");
  EXPECT_NE(csv.find("\n0,1 0 0,"), std::string::npos);
}

TEST(Haar, KnownMoments) {
  auto check = [](HaarGroup g, int N, int a, int b, double expected) {
    const auto ms = haar_oracle(g, N, 4, 40000, 7);
    for (const auto& m : ms)
      if (m.a == a && m.b == b) {
        EXPECT_GT(m.stderr_, 0.0);
        EXPECT_LE(std::abs(m.value - cplx(expected)), 4 * m.stderr_ + 1e-12)
            << to_string(g) << N << " (" << a << "," << b << ") " << m.value;
      }
  };
  check(HaarGroup::U, 1, 1, 0, 0.0);
  check(HaarGroup::U, 1, 1, 1, 1.0);
  check(HaarGroup::U, 2, 1, 1, 1.0);
  check(HaarGroup::U, 2, 2, 2, 2.0);
  check(HaarGroup::U, 2, 2, 0, 0.0);
  check(HaarGroup::USp, 2, 2, 0, 1.0);
  check(HaarGroup::USp, 2, 4, 0, 2.0);
  check(HaarGroup::USp, 4, 4, 0, 3.0);
  check(HaarGroup::O, 3, 2, 0, 1.0);
  check(HaarGroup::O, 3, 1, 0, 0.0);
}

TEST(Haar, GroupMembership) {
  std::mt19937_64 rng(3);
  const int k = 3;
  Eigen::MatrixXcd J = Eigen::MatrixXcd::Zero(2 * k, 2 * k);
  J.topRightCorner(k, k).setIdentity();
  J.bottomLeftCorner(k, k) = -Eigen::MatrixXcd::Identity(k, k);
  for (int t = 0; t < 5; ++t) {
    const auto S = haar_sample(HaarGroup::USp, 2 * k, rng);
    EXPECT_LT((S.adjoint() * S - Eigen::MatrixXcd::Identity(2 * k, 2 * k)).norm(), 1e-12);
    EXPECT_LT((S.transpose() * J * S - J).norm(), 1e-12);
    EXPECT_LT(std::abs(S.trace().imag()), 1e-12);
    const auto U = haar_sample(HaarGroup::U, 4, rng);
    EXPECT_LT((U.adjoint() * U - Eigen::MatrixXcd::Identity(4, 4)).norm(), 1e-12);
    const auto O = haar_sample(HaarGroup::O, 4, rng);
    EXPECT_LT(O.imag().norm(), 1e-15);
    EXPECT_LT((O.transpose() * O - Eigen::MatrixXcd::Identity(4, 4)).norm(), 1e-12);
  }
  EXPECT_THROW(haar_traces(HaarGroup::USp, 3, 10, 1), Error);
  EXPECT_THROW(haar_traces(HaarGroup::U, 0, 10, 1), Error);
}

TEST(Haar, LeftInvariance) {
  for (HaarGroup grp : {HaarGroup::U, HaarGroup::USp}) {
    std::mt19937_64 rng(11);
    const Eigen::MatrixXcd g = haar_sample(grp, 2, rng);
    std::mt19937_64 a(21), b(22);
    std::vector<cplx> plain, moved;
    for (int i = 0; i < 30000; ++i) {
      plain.push_back(haar_sample(grp, 2, a).trace());
      moved.push_back((g * haar_sample(grp, 2, b)).trace());
    }
    const auto m1 = mixed_moments(plain, 4, true), m2 = mixed_moments(moved, 4, true);
    for (std::size_t i = 0; i < m1.size(); ++i)
      EXPECT_LE(std::abs(m1[i].value - m2[i].value), 4 * std::hypot(m1[i].stderr_, m2[i].stderr_) + 1e-12)
          << to_string(grp) << " (" << m1[i].a << "," << m1[i].b << ")";
  }
}

TEST(Haar, DeterministicAcrossThreads) {
  EXPECT_EQ(haar_traces(HaarGroup::U, 2, 10000, 5, 1), haar_traces(HaarGroup::U, 2, 10000, 5, 3));
  EXPECT_NE(haar_traces(HaarGroup::U, 2, 100, 5), haar_traces(HaarGroup::U, 2, 100, 6));
}

TEST(Compare, QuadraticAndOddCubic) {
  CompareOptions o;
  o.oracle_samples = 20000;
  const auto q = compare(family(1, 2, 101), o);
  EXPECT_EQ(q.group, HaarGroup::U);
  EXPECT_EQ(q.N, 1);
  EXPECT_TRUE(q.verdict);
  for (const auto& m : q.moments)
    if (m.a == 1 && m.b == 1) EXPECT_NEAR(m.empirical.value.real(), 1.0, 1e-12);

  const auto odd = compare(family(1, 3, 101, FamilyVariant::Odd), o);
  EXPECT_EQ(odd.group, HaarGroup::USp);
  EXPECT_EQ(odd.family_size, 100u * 101u);
  EXPECT_TRUE(odd.real_family);
  EXPECT_TRUE(odd.real_check);
  EXPECT_LT(odd.max_abs_imag, 1e-9);
  EXPECT_TRUE(odd.verdict);

  EXPECT_EQ(limiting_group(family(2, 3, 11, FamilyVariant::Odd)), std::make_pair(HaarGroup::O, 4));
  EXPECT_EQ(limiting_group(family(2, 3, 11)), std::make_pair(HaarGroup::U, 4));
}

TEST(Compare, StableAcrossSeeds) {
  CompareOptions o;
  o.oracle_samples = 20000;
  int failures = 0;
  for (u64 seed = 1; seed <= 20; ++seed) {
    o.oracle_seed = 1000 + seed;
    const auto r = compare(sampled(3, 101, 1000, seed), o);
    for (const auto& m : r.moments) EXPECT_GT(m.empirical.stderr_, 0.0);
    failures += r.verdict ? 0 : 1;
  }
  EXPECT_EQ(failures, 0);
}
