#pragma once

// Families of normalized exponential sums, their empirical trace moments, and a
// Monte Carlo Haar-measure oracle on U(N), O(N) and USp(N).

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "sheafcx/characters.hpp"
#include "sheafcx/ffield.hpp"
#include "sheafcx/parallel.hpp"
#include "sheafcx/sum_engine.hpp"

namespace sheafcx {

enum class FamilyVariant { All, Odd, Kloosterman };
enum class FamilyMode { Exhaustive, Sample };
enum class HaarGroup { U, USp, O };

inline const char* to_string(FamilyVariant v) {
  switch (v) {
    case FamilyVariant::All: return "all";
    case FamilyVariant::Odd: return "odd";
    case FamilyVariant::Kloosterman: return "kloosterman";
  }
  return "?";
}
inline const char* to_string(HaarGroup g) {
  switch (g) {
    case HaarGroup::U: return "U";
    case HaarGroup::USp: return "USp";
    case HaarGroup::O: return "O";
  }
  return "?";
}

/// Polynomials in n variables of degree d with zero constant term whose top-degree
/// form is nonsingular, or the Kloosterman sums Kl(a; p) for a in F_p^*.
struct FamilyDescriptor {
  int n = 1;
  int d = 3;
  u64 p = 0;
  FamilyVariant variant = FamilyVariant::All;
  FamilyMode mode = FamilyMode::Exhaustive;
  u64 count = 0;  // sample size
  u64 seed = 0;
  u64 exhaustive_cap = 10'000'000;  // coefficient tuples scanned in exhaustive mode
};

/// x^i y^j
struct Monomial {
  int i = 0, j = 0;
  int degree() const { return i + j; }
};

/// Coefficients listed against family_monomials(desc).
struct FamilyMember {
  std::vector<u64> coeffs;
};

namespace equidist_detail {

inline void validate(const FamilyDescriptor& desc) {
  if (desc.n != 1 && desc.n != 2)
    throw Error(Errc::UnsupportedDimension, "families are implemented for n = 1 and n = 2 only");
  PrimeField check(desc.p);
  if (desc.variant == FamilyVariant::Kloosterman) {
    if (desc.n != 1) throw Error(Errc::UnsupportedDimension, "the Kloosterman family lives on n = 1");
    return;
  }
  if (desc.d < 1) throw Error(Errc::BadParams, "degree must be >= 1");
  if (desc.variant == FamilyVariant::Odd && desc.d % 2 == 0) throw Error(Errc::BadParams, "odd families need odd degree");
  if (desc.mode == FamilyMode::Sample && desc.count == 0) throw Error(Errc::BadParams, "sample size must be positive");
}

inline u64 splitmix64(u64 x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace equidist_detail

/// Monomials of the family, highest total degree first (x before y within a degree).
inline std::vector<Monomial> family_monomials(const FamilyDescriptor& desc) {
  equidist_detail::validate(desc);
  std::vector<Monomial> out;
  if (desc.variant == FamilyVariant::Kloosterman) return {{1, 0}};
  for (int t = desc.d; t >= 1; --t) {
    if (desc.variant == FamilyVariant::Odd && t % 2 == 0) continue;
    if (desc.n == 1) out.push_back({t, 0});
    else
      for (int i = t; i >= 0; --i) out.push_back({i, t - i});
  }
  return out;
}

/// The nonsingularity condition on the top-degree form.
/// n = 1: leading coefficient nonzero. n = 2: the binary form F(x, y) has no repeated
/// factor over the algebraic closure. A form with vanishing partial derivatives is a
/// p-th power and is rejected before any gcd is taken.
inline bool is_deligne(const FamilyDescriptor& desc, const std::vector<Monomial>& monos, const std::vector<u64>& coeffs,
                       const PrimeField& F) {
  if (desc.variant == FamilyVariant::Kloosterman) return coeffs[0] % desc.p != 0;
  const int d = desc.d;
  if (desc.n == 1) return coeffs[0] != 0;
  UPoly top(static_cast<std::size_t>(d) + 1, 0);  // F(x, 1), coefficient of x^i
  bool any = false, has_nonzero_partial = false;
  for (std::size_t k = 0; k < monos.size(); ++k) {
    if (monos[k].degree() != d || coeffs[k] == 0) continue;
    top[static_cast<std::size_t>(monos[k].i)] = coeffs[k];
    any = true;
    if (monos[k].i % static_cast<i64>(desc.p) != 0 || monos[k].j % static_cast<i64>(desc.p) != 0) has_nonzero_partial = true;
  }
  if (!any || !has_nonzero_partial) return false;
  upoly::trim(top);
  const int deg = upoly::deg(top);
  if (deg < d - 1) return false;  // y^2 divides F
  if (deg <= 0) return true;      // d = 1 with F = c y
  const UPoly df = upoly::derivative(F, top);
  if (df.empty()) return false;
  return upoly::deg(upoly::gcd(F, top, df)) == 0;
}

/// Visit every member of the family in a deterministic order; returns the number visited.
inline u64 for_each_member(const FamilyDescriptor& desc, const std::function<void(const FamilyMember&)>& visit) {
  equidist_detail::validate(desc);
  const PrimeField F(desc.p);
  const auto monos = family_monomials(desc);
  const std::size_t k = monos.size();
  FamilyMember m;
  m.coeffs.assign(k, 0);
  u64 visited = 0;

  if (desc.mode == FamilyMode::Exhaustive) {
    if (desc.variant == FamilyVariant::Kloosterman) {
      for (u64 a = 1; a < desc.p; ++a) {
        m.coeffs[0] = a;
        visit(m);
        ++visited;
      }
      return visited;
    }
    const u64 tuples = arith::checked_pow(desc.p, static_cast<int>(k));
    if (tuples == 0 || tuples > desc.exhaustive_cap)
      throw Error(Errc::BudgetExceeded, "exhaustive family has p^" + std::to_string(k) + " coefficient tuples, above the cap of " +
                                            std::to_string(desc.exhaustive_cap));
    for (u64 t = 0; t < tuples; ++t) {
      u64 r = t;
      for (std::size_t c = k; c-- > 0;) {
        m.coeffs[c] = r % desc.p;
        r /= desc.p;
      }
      if (!is_deligne(desc, monos, m.coeffs, F)) continue;
      visit(m);
      ++visited;
    }
    return visited;
  }

  std::mt19937_64 rng(desc.seed);
  std::uniform_int_distribution<u64> coef(0, desc.p - 1);
  const u64 max_attempts = desc.count * 1000 + 1000;
  for (u64 attempt = 0; visited < desc.count; ++attempt) {
    if (attempt >= max_attempts) throw Error(Errc::BudgetExceeded, "rejection sampling did not produce enough family members");
    for (auto& c : m.coeffs) c = coef(rng);
    if (!is_deligne(desc, monos, m.coeffs, F)) continue;
    visit(m);
    ++visited;
  }
  return visited;
}

inline std::vector<FamilyMember> enumerate_deligne(const FamilyDescriptor& desc) {
  std::vector<FamilyMember> out;
  for_each_member(desc, [&](const FamilyMember& m) { out.push_back(m); });
  return out;
}

/// Number of Deligne polynomials of degree d in one variable with zero constant term: (p - 1) p^{d - 1}
/// (odd variant: (p - 1) p^{(d - 1)/2}).
inline u64 deligne_count_univariate(u64 p, int d, bool odd) {
  return (p - 1) * arith::checked_pow(p, odd ? (d - 1) / 2 : d - 1);
}

struct EquidistOptions {
  double max_evaluations = 4e9;
  unsigned threads = 1;
  u64 chunk_size = 256;  // family members per work item
};

/// Render a family member as a polynomial with coefficients in [0, p).
inline std::string member_to_string(const FamilyDescriptor& desc, const std::vector<Monomial>& monos, const FamilyMember& m) {
  if (desc.variant == FamilyVariant::Kloosterman) return "Kl(" + std::to_string(m.coeffs[0]) + ")";
  std::string s;
  for (std::size_t k = 0; k < monos.size(); ++k) {
    if (m.coeffs[k] == 0) continue;
    if (!s.empty()) s += " + ";
    std::string mono;
    auto power = [](const char* v, int e) { return e == 0 ? std::string() : e == 1 ? std::string(v) : std::string(v) + "^" + std::to_string(e); };
    const std::string px = power(desc.n == 1 ? "x" : "x1", monos[k].i), py = power("x2", monos[k].j);
    mono = px.empty() ? py : py.empty() ? px : px + "*" + py;
    s += (m.coeffs[k] == 1 ? "" : std::to_string(m.coeffs[k]) + "*") + mono;
  }
  return s.empty() ? "0" : s;
}

/// p^{-n/2} sum_{x in F_p^n} e(f(x)/p) for every member, in enumeration order.
inline std::vector<cplx> family_sums(const FamilyDescriptor& desc, const std::vector<FamilyMember>& members,
                                     const EquidistOptions& opts = {}) {
  equidist_detail::validate(desc);
  const u64 p = desc.p;
  const double work = static_cast<double>(members.size()) * std::pow(static_cast<double>(p), desc.n);
  if (work > opts.max_evaluations)
    throw Error(Errc::BudgetExceeded, "family needs " + std::to_string(work) + " evaluations, cap is " +
                                          std::to_string(opts.max_evaluations));
  const PrimeField F(p);
  const RootsOfUnity roots(p);
  const auto monos = family_monomials(desc);
  const double norm = std::pow(static_cast<double>(p), -desc.n / 2.0);
  std::vector<u64> inverses;
  if (desc.variant == FamilyVariant::Kloosterman) {
    inverses.assign(p, 0);
    for (u64 x = 1; x < p; ++x) inverses[x] = F.inv(x);
  }

  std::vector<cplx> out(members.size());
  parallel_for(members.size(), opts.chunk_size, opts.threads, [&](u64 idx) {
    const auto& c = members[idx].coeffs;
    if (desc.variant == FamilyVariant::Kloosterman) {
      std::vector<u64> counts(p, 0);
      for (u64 x = 1; x < p; ++x) ++counts[F.add(F.mul(c[0], x), inverses[x])];
      out[idx] = sum_detail::histogram_sum(counts, roots) * norm;
      return;
    }
    if (desc.n == 1) {
      UPoly g(static_cast<std::size_t>(desc.d) + 1, 0);
      for (std::size_t k = 0; k < monos.size(); ++k) g[static_cast<std::size_t>(monos[k].i)] = c[k];
      upoly::trim(g);
      out[idx] = prime_poly_sum(F, g, roots) * norm;
      return;
    }
    std::vector<u64> counts(p, 0);
    UPoly g(static_cast<std::size_t>(desc.d) + 1, 0);
    for (u64 y = 0; y < p; ++y) {
      std::fill(g.begin(), g.end(), 0);
      for (std::size_t k = 0; k < monos.size(); ++k)
        if (c[k] != 0) {
          auto& slot = g[static_cast<std::size_t>(monos[k].i)];
          slot = F.add(slot, F.mul(c[k], F.pow(y, static_cast<u64>(monos[k].j))));
        }
      UPoly h = g;
      upoly::trim(h);
      sum_detail::forward_differences(F, h, [&](u64 v) { ++counts[v]; });
    }
    out[idx] = sum_detail::histogram_sum(counts, roots) * norm;
  });
  return out;
}

inline std::vector<cplx> family_sums(const FamilyDescriptor& desc, const EquidistOptions& opts = {}) {
  return family_sums(desc, enumerate_deligne(desc), opts);
}

/// CSV with columns index,coefficients,re,im; coefficients are space-separated in family_monomials order.
inline void write_family_csv(std::ostream& os, const FamilyDescriptor& desc, const std::vector<FamilyMember>& members,
                             const std::vector<cplx>& sums) {
  os << "index,coefficients,re,im\n";
  os.precision(17);
  for (std::size_t i = 0; i < members.size(); ++i) {
    os << i << ',';
    for (std::size_t k = 0; k < members[i].coeffs.size(); ++k) os << (k ? " " : "") << members[i].coeffs[k];
    os << ',' << sums[i].real() << ',' << sums[i].imag() << '\n';
  }
  (void)desc;
}

// ---------------------------------------------------------------------------
// Haar oracle

/// One Haar-random element. U and O come from QR of a Gaussian matrix with the
/// diagonal of R normalized to positive reals; USp(N) (N = 2k) from Gram-Schmidt
/// on k quaternionic Gaussian columns, each column v paired with (-conj v2, conj v1).
inline Eigen::MatrixXcd haar_sample(HaarGroup group, int N, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  if (group == HaarGroup::U || group == HaarGroup::O) {
    Eigen::MatrixXcd G(N, N);
    for (int c = 0; c < N; ++c)
      for (int r = 0; r < N; ++r) {
        const double re = gauss(rng);
        const double im = group == HaarGroup::U ? gauss(rng) : 0.0;
        G(r, c) = cplx(re, im);
      }
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(G);
    Eigen::MatrixXcd Q = qr.householderQ();
    const Eigen::MatrixXcd& R = qr.matrixQR();
    for (int c = 0; c < N; ++c) {
      const cplx d = R(c, c);
      const double a = std::abs(d);
      Q.col(c) *= a == 0 ? cplx(1) : d / a;
    }
    if (group == HaarGroup::O) return Q.real().cast<cplx>();
    return Q;
  }
  if (N % 2 != 0) throw Error(Errc::BadParams, "USp(N) needs even N");
  const int k = N / 2;
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(N, N);
  auto partner = [k](const Eigen::VectorXcd& v) {
    Eigen::VectorXcd w(2 * k);
    for (int i = 0; i < k; ++i) {
      w(i) = -std::conj(v(k + i));
      w(k + i) = std::conj(v(i));
    }
    return w;
  };
  for (int j = 0; j < k; ++j) {
    Eigen::VectorXcd v(N);
    for (int i = 0; i < N; ++i) v(i) = cplx(gauss(rng), gauss(rng));
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i < j; ++i) {
        v -= M.col(i) * M.col(i).dot(v);
        v -= M.col(k + i) * M.col(k + i).dot(v);
      }
    v /= v.norm();
    M.col(j) = v;
    M.col(k + j) = partner(v);
  }
  return M;
}

/// Traces of `samples` Haar-random elements; chunk c uses a generator seeded from (seed, c).
inline std::vector<cplx> haar_traces(HaarGroup group, int N, u64 samples, u64 seed, unsigned threads = 1) {
  if (N < 1) throw Error(Errc::BadParams, "matrix size must be >= 1");
  if (group == HaarGroup::USp && N % 2 != 0) throw Error(Errc::BadParams, "USp(N) needs even N");
  if (samples == 0) throw Error(Errc::BadParams, "need at least one Haar sample");
  constexpr u64 kChunk = 4096;
  const u64 nchunks = (samples + kChunk - 1) / kChunk;
  std::vector<cplx> out(samples);
  parallel_for(nchunks, 1, threads, [&](u64 c) {
    std::mt19937_64 rng(equidist_detail::splitmix64(seed ^ equidist_detail::splitmix64(c)));
    const u64 end = std::min(samples, (c + 1) * kChunk);
    for (u64 i = c * kChunk; i < end; ++i) out[i] = haar_sample(group, N, rng).trace();
  });
  return out;
}

// ---------------------------------------------------------------------------
// Moments

/// Estimate of E[S^a conj(S)^b].
struct MomentEstimate {
  int a = 0, b = 0;
  cplx value;
  double stderr_ = 0;  // 0 for exact (exhaustive) averages
};

inline std::vector<MomentEstimate> mixed_moments(const std::vector<cplx>& xs, int k_max, bool sampled) {
  if (xs.empty()) throw Error(Errc::BadParams, "no values to average");
  std::vector<MomentEstimate> out;
  const double n = static_cast<double>(xs.size());
  for (int total = 1; total <= k_max; ++total)
    for (int a = total; a >= 0; --a) {
      const int b = total - a;
      PairwiseAccumulator<cplx> sum;
      PairwiseAccumulator<double> sq;
      for (const cplx& x : xs) {
        const cplx v = std::pow(x, a) * std::pow(std::conj(x), b);
        sum.add(v);
        sq.add(std::norm(v));
      }
      MomentEstimate m{a, b, sum.total() / n, 0};
      if (sampled && xs.size() > 1) {
        const double var = std::max(0.0, (sq.total() / n - std::norm(m.value)) * n / (n - 1));
        // Floored at rounding resolution so sampled quantities never report an exact 0.
        m.stderr_ = std::max(std::sqrt(var / n), 4 * std::numeric_limits<double>::epsilon() * (1 + std::abs(m.value)));
      }
      out.push_back(m);
    }
  return out;
}

inline std::vector<MomentEstimate> haar_oracle(HaarGroup group, int N, int k_max, u64 samples, u64 seed, unsigned threads = 1) {
  return mixed_moments(haar_traces(group, N, samples, seed, threads), k_max, true);
}

/// The group the family's sums become equidistributed in, and its matrix size.
inline std::pair<HaarGroup, int> limiting_group(const FamilyDescriptor& desc) {
  if (desc.variant == FamilyVariant::Kloosterman) return {HaarGroup::USp, 2};
  int N = 1;
  for (int i = 0; i < desc.n; ++i) N *= desc.d - 1;
  if (desc.variant == FamilyVariant::All) return {HaarGroup::U, N};
  return {desc.n % 2 == 1 ? HaarGroup::USp : HaarGroup::O, N};
}

struct CompareOptions {
  int k_max = 4;
  u64 oracle_samples = 100'000;
  u64 oracle_seed = 1;
  double c_sys = 10.0;
  double threshold = 4.0;
  EquidistOptions sums;
};

struct MomentComparison {
  int a = 0, b = 0;
  MomentEstimate empirical, oracle;
  double allowance = 0;  // sqrt(se_e^2 + se_o^2) + c_sys p^{-1/2}
  double z = 0;
  bool pass = false;
};

struct MomentReport {
  FamilyDescriptor family;
  HaarGroup group = HaarGroup::U;
  int N = 1;
  u64 family_size = 0;
  bool real_family = false;
  double max_abs_imag = 0;  // largest |Im S| over the family
  std::vector<MomentComparison> moments;
  bool real_check = true;  // real families: Im of every empirical moment within 5 standard errors (or 1e-9 when exact)
  bool verdict = false;
  CompareOptions options;
};

inline MomentReport compare(const FamilyDescriptor& desc, const CompareOptions& opts = {}) {
  equidist_detail::validate(desc);
  if (desc.variant != FamilyVariant::Kloosterman) {
    if (desc.d < 2) throw Error(Errc::BadParams, "degree 1 families have no limiting distribution");
    if (desc.p % static_cast<u64>(desc.d) == 0) throw Error(Errc::BadParams, "p must not divide the degree");
    if (desc.d >= 3 && desc.p <= 7) throw Error(Errc::BadParams, "equidistribution claims need p > 7");
  }
  MomentReport rep;
  rep.family = desc;
  rep.options = opts;
  std::tie(rep.group, rep.N) = limiting_group(desc);
  rep.real_family = desc.variant != FamilyVariant::All;

  const auto members = enumerate_deligne(desc);
  const auto sums = family_sums(desc, members, opts.sums);
  rep.family_size = members.size();
  for (const cplx& s : sums) rep.max_abs_imag = std::max(rep.max_abs_imag, std::abs(s.imag()));

  const bool sampled = desc.mode == FamilyMode::Sample;
  const auto emp = mixed_moments(sums, opts.k_max, sampled);
  const auto orc = haar_oracle(rep.group, rep.N, opts.k_max, opts.oracle_samples, opts.oracle_seed, opts.sums.threads);
  const double sys = opts.c_sys / std::sqrt(static_cast<double>(desc.p));
  rep.verdict = true;
  for (std::size_t i = 0; i < emp.size(); ++i) {
    MomentComparison c{emp[i].a, emp[i].b, emp[i], orc[i]};
    c.allowance = std::hypot(emp[i].stderr_, orc[i].stderr_) + sys;
    c.z = std::abs(emp[i].value - orc[i].value) / c.allowance;
    c.pass = c.z <= opts.threshold;
    rep.verdict = rep.verdict && c.pass;
    if (rep.real_family) {
      const double lim = sampled ? 5 * emp[i].stderr_ : 1e-9;
      if (std::abs(emp[i].value.imag()) > std::max(lim, 1e-9)) rep.real_check = false;
    }
    rep.moments.push_back(c);
  }
  rep.verdict = rep.verdict && rep.real_check;
  return rep;
}

}  // namespace sheafcx
