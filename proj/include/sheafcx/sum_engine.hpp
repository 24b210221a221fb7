#pragma once

// Exponential sums, inner products, Gowers norms, Fourier tables, power sums
// over extensions and L-polynomial recovery.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <optional>
#include <vector>

#include "sheafcx/parallel.hpp"
#include "sheafcx/trace.hpp"

namespace sheafcx {

struct SumOptions {
  u64 max_evaluations = 100'000'000;  // per call
  bool allow_large = false;
  unsigned threads = 1;
  u64 field_seed = 0;  // seed for the extension-field modulus search
  int ambient = 0;     // 0: the expression's default ambient
  u64 chunk_size = u64{1} << 14;
};

struct SumResult {
  cplx value;
  u64 npoints = 0;
  Weight normalization;  // value already multiplied by q^{-w/2}
  double fp_error_bound = 0.0;
};

namespace sum_detail {

inline void check_budget(double cost, const SumOptions& opts, const char* what) {
  if (opts.allow_large) return;
  if (!(cost <= static_cast<double>(opts.max_evaluations)))
    throw Error(Errc::BudgetExceeded, std::string(what) + " needs about " + std::to_string(static_cast<u64>(std::min(cost, 1.8e19))) +
                                          " evaluations, above the cap of " + std::to_string(opts.max_evaluations) +
                                          " (raise max_evaluations or pass --allow-large)");
}

inline int ambient_for(const Expr& e, const SumOptions& opts) {
  const int n = opts.ambient > 0 ? opts.ambient : default_ambient(e);
  check_ambient(e, n);
  return n;
}

/// An expression of the form scalar * psi(a f(x)) (possibly conjugated) with f polynomial, over F_p.
struct PhaseForm {
  const node::AS* leaf = nullptr;
  double scale = 1.0;
  bool conj = false;
};

inline std::optional<PhaseForm> phase_form(const Expr& e, u64 p, int m) {
  PhaseForm out;
  Expr cur = e;
  while (true) {
    const Node& nd = *cur;
    if (auto* s = std::get_if<node::Shift>(&nd.v)) {
      if (s->h % 2) out.scale = -out.scale;
      cur = s->a;
    } else if (auto* t = std::get_if<node::Twist>(&nd.v)) {
      if (!t->w.half_integral()) return std::nullopt;
      out.scale *= std::pow(static_cast<double>(p), -m * t->w.value());
      cur = t->a;
    } else if (auto* c = std::get_if<node::Conj>(&nd.v)) {
      out.conj = !out.conj;
      cur = c->a;
    } else if (auto* u = std::get_if<node::Pure>(&nd.v)) {
      cur = u->a;
    } else if (auto* a = std::get_if<node::AS>(&nd.v)) {
      if (!a->f.is_polynomial()) return std::nullopt;
      out.leaf = a;
      return out;
    } else {
      return std::nullopt;
    }
  }
}

/// Sum of e(j/p) weighted by exact counts.
inline cplx histogram_sum(const std::vector<u64>& counts, const RootsOfUnity& roots) {
  PairwiseAccumulator<cplx> acc;
  for (std::size_t j = 0; j < counts.size(); ++j)
    if (counts[j]) acc.add(static_cast<double>(counts[j]) * roots(j));
  return acc.total();
}

/// Values of a univariate polynomial at x = 0..p-1 by forward differences.
template <class Visit>
void forward_differences(const PrimeField& F, const UPoly& f, Visit visit) {
  const u64 p = F.p();
  const int d = std::max(0, upoly::deg(f));
  std::vector<u64> diff(static_cast<std::size_t>(d) + 1);
  for (int i = 0; i <= d; ++i) diff[static_cast<std::size_t>(i)] = upoly::eval(F, f, static_cast<u64>(i) % p);
  for (int k = 1; k <= d; ++k)
    for (int i = d; i >= k; --i) diff[static_cast<std::size_t>(i)] = F.sub(diff[static_cast<std::size_t>(i)], diff[static_cast<std::size_t>(i - 1)]);
  for (u64 x = 0; x < p; ++x) {
    visit(diff[0]);
    for (int i = 0; i < d; ++i) {
      u64 s = diff[static_cast<std::size_t>(i)] + diff[static_cast<std::size_t>(i) + 1];
      diff[static_cast<std::size_t>(i)] = s >= p ? s - p : s;
    }
  }
}

}  // namespace sum_detail

/// Sum of psi(f(x)) over F_p for a univariate polynomial, from exact value counts.
inline cplx prime_poly_sum(const PrimeField& F, const UPoly& f, const RootsOfUnity& roots) {
  std::vector<u64> counts(F.p(), 0);
  sum_detail::forward_differences(F, f, [&](u64 v) { ++counts[v]; });
  return sum_detail::histogram_sum(counts, roots);
}

/// q^{-w/2} sum_{x in F_{p^m}^n} t_A(x; F_{p^m}).
inline SumResult complete_sum(const Expr& e, u64 p, int m = 1, Weight w = Weight(0), const SumOptions& opts = {}) {
  if (m < 1) throw Error(Errc::BadParams, "extension degree must be >= 1");
  PrimeField F(p);
  const int n = sum_detail::ambient_for(e, opts);
  const u64 q = arith::checked_pow(p, m);
  if (q == 0) throw Error(Errc::BudgetExceeded, "field size overflows");
  const u64 npoints = point_count(q, n);
  sum_detail::check_budget(npoints == 0 ? 1.8e19 : static_cast<double>(npoints) * m, opts, "complete_sum");
  const double norm = std::pow(static_cast<double>(q), -w.value() / 2.0);

  SumResult res;
  res.npoints = npoints;
  res.normalization = w;

  if (m == 1 && p < (u64{1} << 32)) {
    if (auto ph = sum_detail::phase_form(e, p, m)) {
      // Exact counts of the values a f(x) in F_p.
      RootsOfUnity roots(p);
      const FpPoly f = reduce_mod(ph->leaf->f.numerator(), F);
      const u64 den_inv = F.inv(F.reduce(ph->leaf->f.denominator().constant_term()));
      const u64 a = F.mul(F.reduce(ph->leaf->psi.a), den_inv);
      const int var = std::max(0, ph->leaf->f.max_variable());
      bool univariate = true;
      for (const auto& [ex, c] : f.terms())
        for (int i = 0; i < f.nvars(); ++i)
          if (i != var && ex[static_cast<std::size_t>(i)] != 0) univariate = false;
      const u64 chunk = std::max<u64>(opts.chunk_size, p);
      auto counts_total = parallel_reduce<cplx>(npoints, chunk, opts.threads, [&](u64 b, u64 end) {
        std::vector<u64> counts(p, 0);
        if (univariate && n == 1) {
          UPoly g = upoly::scale(F, f.is_zero() ? UPoly{} : to_upoly(f, var), a);
          sum_detail::forward_differences(F, g, [&](u64 v) { ++counts[v]; });
        } else {
          PolyEvaluator ev(ph->leaf->f.numerator(), F, n);
          PointOdometer it(p, n, b);
          for (u64 i = b; i < end; ++i, it.advance()) ++counts[F.mul(a, ev.eval_prime(F, it.data()))];
        }
        return sum_detail::histogram_sum(counts, roots);
      });
      cplx v = counts_total;
      if (ph->conj) v = std::conj(v);
      res.value = v * (ph->scale * norm);
      const double mag = static_cast<double>(npoints) * std::abs(ph->scale) * norm;
      res.fp_error_bound = mag * (4 * kEps + std::ceil(std::log2(static_cast<double>(p) + 1) + std::log2(static_cast<double>(npoints) / chunk + 2)) * kEps);
      return res;
    }
  }

  const ExtField K = make_extension(F, m, opts.field_seed);
  TraceFunction t(e, K, n);
  cplx total = parallel_reduce<cplx>(npoints, opts.chunk_size, opts.threads, [&](u64 b, u64 end) {
    PointOdometer it(q, n, b);
    PairwiseAccumulator<cplx> acc;
    for (u64 i = b; i < end; ++i, it.advance()) acc.add(t.eval_raw(it.data()));
    return acc.total();
  });
  res.value = total * norm;
  const double N = static_cast<double>(npoints);
  res.fp_error_bound = norm * (N * t.error_bound() + (std::ceil(std::log2(N + 1)) + 2) * kEps * N * t.magnitude_bound());
  return res;
}

/// sum_x t_A(x) conj(t_B(x)) over F_{p^m}^n.
inline cplx inner_product(const Expr& a, const Expr& b, u64 p, int m = 1, const SumOptions& opts = {}) {
  const int na = opts.ambient > 0 ? opts.ambient : default_ambient(a);
  const int nb = opts.ambient > 0 ? opts.ambient : default_ambient(b);
  if (na != nb)
    throw Error(Errc::AmbientMismatch, "inner product of expressions on A^" + std::to_string(na) + " and A^" + std::to_string(nb));
  SumOptions o = opts;
  o.ambient = na;
  return complete_sum(expr::Tensor(a, expr::Conj(b)), p, m, Weight(0), o).value;
}

// ---------------------------------------------------------------------------
// Power sums

enum class PowerSumRoute { Auto, Literal, Divisor };

/// A rank-one product on A^1 whose L-function is sum over monic g of lambda(g) T^deg g.
struct RankOneProduct {
  UPoly additive;  // combined a_i f_i over F_p
  struct KummerFactor {
    UPoly num, den;
    u64 r, j;
  };
  std::vector<KummerFactor> kummer;
  Weight twist;    // total twist
  bool negate = false;  // odd total shift
};

namespace sum_detail {

inline bool collect_rank_one(const Expr& e, const PrimeField& F, bool conj, RankOneProduct& out) {
  const Node& nd = *e;
  if (auto* a = std::get_if<node::AS>(&nd.v)) {
    if (!a->f.is_polynomial() || a->f.max_variable() > 0) return false;
    const FpPoly f = reduce_mod(a->f.numerator(), F);
    UPoly g = f.is_zero() ? UPoly{} : to_upoly(f, 0);
    u64 coef = F.mul(F.reduce(a->psi.a), F.inv(F.reduce(a->f.denominator().constant_term())));
    if (conj) coef = F.neg(coef);
    out.additive = upoly::add(F, out.additive, upoly::scale(F, g, coef));
    return true;
  }
  if (auto* k = std::get_if<node::Kummer>(&nd.v)) {
    if (k->g.max_variable() > 0) return false;
    if ((F.p() - 1) % k->chi.r != 0) throw Error(Errc::BadOrder, "character order does not divide p-1");
    const FpPoly dn = reduce_mod(k->g.denominator(), F);
    if (dn.is_zero()) return false;
    UniRational u = reduce_univariate(k->g.extend(1), F, 0);
    const u64 j = conj ? (k->chi.r - k->chi.j % k->chi.r) % k->chi.r : k->chi.j % k->chi.r;
    out.kummer.push_back({u.num, u.den, k->chi.r, j});
    return true;
  }
  if (std::get_if<node::Const>(&nd.v)) return true;
  if (auto* t = std::get_if<node::Tensor>(&nd.v))
    return collect_rank_one(t->a, F, conj, out) && collect_rank_one(t->b, F, conj, out);
  if (auto* s = std::get_if<node::Shift>(&nd.v)) {
    if (s->h % 2) out.negate = !out.negate;
    return collect_rank_one(s->a, F, conj, out);
  }
  if (auto* t = std::get_if<node::Twist>(&nd.v)) {
    if (!t->w.half_integral()) return false;
    out.twist = out.twist + t->w;
    return collect_rank_one(t->a, F, conj, out);
  }
  if (auto* c = std::get_if<node::Conj>(&nd.v)) return collect_rank_one(c->a, F, !conj, out);
  if (auto* d = std::get_if<node::Dual>(&nd.v)) {
    if (!is_weight_zero_pure(d->a)) return false;
    return collect_rank_one(d->a, F, !conj, out);
  }
  if (auto* u = std::get_if<node::Pure>(&nd.v)) return collect_rank_one(u->a, F, conj, out);
  return false;
}

}  // namespace sum_detail

/// Recognize a rank-one product on A^1 (AS of polynomials, Kummer, Const, tensor, shift, twist, conj).
inline std::optional<RankOneProduct> as_rank_one_product(const Expr& e, const PrimeField& F) {
  if (natural_ambient(e) > 1) return std::nullopt;
  RankOneProduct out;
  if (!sum_detail::collect_rank_one(e, F, false, out)) return std::nullopt;
  return out;
}

/// Coefficients c_0..c_M of L(T) = sum over monic g of lambda(g) T^deg g, twist excluded.
inline std::vector<cplx> divisor_coefficients(const RankOneProduct& r, const PrimeField& F, int M, const SumOptions& opts = {}) {
  const u64 p = F.p();
  const ExtField prime = make_extension(F, 1);
  const RootsOfUnity roots_p(p);
  u64 R = 1;
  for (const auto& k : r.kummer) R = std::lcm(R, k.r);
  const RootsOfUnity roots_r(R);
  const int D = upoly::deg(r.additive);
  std::vector<cplx> c(static_cast<std::size_t>(M) + 1);
  c[0] = 1.0;
  for (int j = 1; j <= M; ++j) {
    const u64 count = arith::checked_pow(p, j);
    if (count == 0) throw Error(Errc::BudgetExceeded, "too many divisors");
    const bool small_hist = p * R <= (u64{1} << 22);
    c[static_cast<std::size_t>(j)] = parallel_reduce<cplx>(count, std::max<u64>(opts.chunk_size, p * R), opts.threads, [&](u64 b, u64 end) {
      // g = x^j + g_{j-1} x^{j-1} + ... + g_0 with (g_0..g_{j-1}) = digits of the index.
      std::vector<u64> g(static_cast<std::size_t>(j) + 1);
      u64 idx = b;
      for (int i = 0; i < j; ++i) {
        g[static_cast<std::size_t>(i)] = idx % p;
        idx /= p;
      }
      g[static_cast<std::size_t>(j)] = 1;
      std::vector<u64> e(static_cast<std::size_t>(std::max(D, j)) + 1, 0), ps(static_cast<std::size_t>(std::max(D, 0)) + 1, 0);
      std::vector<u64> hist(small_hist ? p * R : 0, 0);
      PairwiseAccumulator<cplx> acc;
      for (u64 it = b; it < end; ++it) {
        // Elementary symmetric functions e_i = (-1)^i g_{j-i}.
        for (int i = 1; i <= j; ++i) {
          const u64 gi = g[static_cast<std::size_t>(j - i)];
          e[static_cast<std::size_t>(i)] = (i % 2) ? F.neg(gi) : gi;
        }
        // Newton: p_k = sum_{i=1}^{k-1} (-1)^{i-1} e_i p_{k-i} + (-1)^{k-1} k e_k.
        u64 phase = F.mul(r.additive.empty() ? 0 : r.additive[0], static_cast<u64>(j) % p);
        for (int k = 1; k <= D; ++k) {
          u64 s = 0;
          for (int i = 1; i < k && i <= j; ++i) {
            const u64 term = F.mul(e[static_cast<std::size_t>(i)], ps[static_cast<std::size_t>(k - i)]);
            s = (i % 2) ? F.add(s, term) : F.sub(s, term);
          }
          if (k <= j) {
            const u64 term = F.mul(static_cast<u64>(k) % p, e[static_cast<std::size_t>(k)]);
            s = (k % 2) ? F.add(s, term) : F.sub(s, term);
          }
          ps[static_cast<std::size_t>(k)] = s;
          phase = F.add(phase, F.mul(r.additive[static_cast<std::size_t>(k)], s));
        }
        bool zero = false;
        u64 kidx = 0;
        for (const auto& kf : r.kummer) {
          const UPoly gp(g.begin(), g.end());
          const u64 rn = upoly::resultant(F, gp, kf.num);
          const u64 rd = upoly::resultant(F, gp, kf.den);
          if (rn == 0 || rd == 0) {
            zero = true;
            break;
          }
          const u64 v = F.mul(rn, F.inv(rd));
          const u64 lg = prime.dlog(FieldElement{v});
          kidx = (kidx + arith::mulmod(lg % kf.r, kf.j, kf.r) * (R / kf.r)) % R;
        }
        if (!zero) {
          if (small_hist) ++hist[phase * R + kidx];
          else acc.add(roots_p(phase) * roots_r(kidx));
        }
        for (int i = 0; i < j; ++i) {
          if (++g[static_cast<std::size_t>(i)] < p) break;
          g[static_cast<std::size_t>(i)] = 0;
        }
      }
      if (small_hist) {
        for (u64 a = 0; a < p; ++a)
          for (u64 k = 0; k < R; ++k)
            if (hist[a * R + k]) acc.add(static_cast<double>(hist[a * R + k]) * (roots_p(a) * roots_r(k)));
      }
      return acc.total();
    });
  }
  return c;
}

/// S_m from L-coefficients via m c_m = sum_{i=1}^m S_i c_{m-i}.
inline std::vector<cplx> power_sums_from_coefficients(const std::vector<cplx>& c) {
  const int M = static_cast<int>(c.size()) - 1;
  std::vector<cplx> S(static_cast<std::size_t>(M));
  for (int m = 1; m <= M; ++m) {
    cplx s = static_cast<double>(m) * c[static_cast<std::size_t>(m)];
    for (int i = 1; i < m; ++i) s -= S[static_cast<std::size_t>(i - 1)] * c[static_cast<std::size_t>(m - i)];
    S[static_cast<std::size_t>(m - 1)] = s;
  }
  return S;
}

/// L-coefficients c_0..c_M from power sums S_1..S_M.
inline std::vector<cplx> coefficients_from_power_sums(const std::vector<cplx>& S) {
  const int M = static_cast<int>(S.size());
  std::vector<cplx> c(static_cast<std::size_t>(M) + 1);
  c[0] = 1.0;
  for (int m = 1; m <= M; ++m) {
    cplx s = 0;
    for (int i = 1; i <= m; ++i) s += S[static_cast<std::size_t>(i - 1)] * c[static_cast<std::size_t>(m - i)];
    c[static_cast<std::size_t>(m)] = s / static_cast<double>(m);
  }
  return c;
}

/// Unnormalized S_m = sum_{x in F_{p^m}^n} t_A(x; F_{p^m}) for m = 1..M.
inline std::vector<cplx> power_sums(const Expr& e, u64 p, int M, const SumOptions& opts = {},
                                    PowerSumRoute route = PowerSumRoute::Auto) {
  if (M < 1) throw Error(Errc::BadParams, "need at least one power sum");
  PrimeField F(p);
  const int n = sum_detail::ambient_for(e, opts);
  std::optional<RankOneProduct> r1;
  if (route != PowerSumRoute::Literal && n == 1) r1 = as_rank_one_product(e, F);
  if (route == PowerSumRoute::Divisor && !r1)
    throw Error(Errc::Domain, "divisor route needs a rank-one product on A^1");
  if (r1) {
    double cost = 0;
    for (int j = 1; j <= M; ++j) cost += std::pow(static_cast<double>(p), j);
    sum_detail::check_budget(cost, opts, "power_sums");
    auto c = divisor_coefficients(*r1, F, M, opts);
    const double tw = std::pow(static_cast<double>(p), -r1->twist.value());
    for (int j = 1; j <= M; ++j) c[static_cast<std::size_t>(j)] *= std::pow(tw, j);
    auto S = power_sums_from_coefficients(c);
    if (r1->negate)
      for (auto& s : S) s = -s;
    return S;
  }
  double cost = 0;
  for (int m = 1; m <= M; ++m) cost += std::pow(static_cast<double>(p), static_cast<double>(m) * n) * m;
  sum_detail::check_budget(cost, opts, "power_sums");
  std::vector<cplx> S;
  SumOptions o = opts;
  o.ambient = n;
  o.allow_large = true;
  for (int m = 1; m <= M; ++m) S.push_back(complete_sum(e, p, m, Weight(0), o).value);
  return S;
}

// ---------------------------------------------------------------------------
// L-polynomial fitting

struct FitOptions {
  double tolerance = 1e-6;  // relative to the scale of the power sums
  double gap = 1e3;         // required singular-value gap at the chosen order
  /// Caller asserts H^0_c = H^2_c = 0: the L-function is a polynomial and chi_c = -degree.
  bool vanishing_h0_h2 = false;
  /// With vanishing_h0_h2: check |c_D| = p^{D w / 2} for pure weight w.
  std::optional<double> purity_p;
  double purity_weight = 1.0;
};

struct LPolynomialEstimate {
  std::vector<cplx> power_sums;
  std::vector<cplx> recurrence;  // a_1..a_r with S_{m+r} = sum a_i S_{m+r-i}; or L-coefficients in polynomial mode
  int degree = 0;
  double residual = 0.0;
  int chi_c = 0;
  bool polynomial_mode = false;
  std::vector<double> singular_values;
};

inline LPolynomialEstimate fit_l_polynomial(const std::vector<cplx>& S, const FitOptions& opt = {}) {
  const int M = static_cast<int>(S.size());
  if (M < 1) throw Error(Errc::Unstable, "no power sums supplied");
  LPolynomialEstimate est;
  est.power_sums = S;

  // Growth rate rho with |S_m| <~ rho^m; used to make the problem scale-free.
  double rho = 0.0;
  for (int m = 1; m <= M; ++m) rho = std::max(rho, std::pow(std::abs(S[static_cast<std::size_t>(m - 1)]), 1.0 / m));

  if (opt.vanishing_h0_h2) {
    est.polynomial_mode = true;
    auto c = coefficients_from_power_sums(S);
    // Scale of c_j for an L-polynomial whose inverse roots have modulus <= rho.
    auto scale = [&](int j) {
      double binom = 1.0;
      for (int i = 1; i <= j; ++i) binom = binom * (M - i + 1) / i;
      return std::max(binom, 1.0) * std::pow(std::max(rho, 1.0), j);
    };
    int D = 0;
    for (int j = 1; j <= M; ++j)
      if (std::abs(c[static_cast<std::size_t>(j)]) > opt.tolerance * scale(j)) D = j;
    if (D == M)
      throw Error(Errc::Unstable, "L-polynomial degree may exceed M-1 = " + std::to_string(M - 1) +
                                      "; supply more power sums (larger M)");
    est.degree = D;
    est.chi_c = -D;
    est.recurrence.assign(c.begin(), c.begin() + D + 1);
    double resid = 0.0;
    for (int j = D + 1; j <= M; ++j) resid = std::max(resid, std::abs(c[static_cast<std::size_t>(j)]) / scale(j));
    est.residual = resid;
    if (opt.purity_p) {
      const double expect = std::pow(*opt.purity_p, D * opt.purity_weight / 2.0);
      const double got = std::abs(c[static_cast<std::size_t>(D)]);
      if (std::abs(got - expect) > 1e-6 * expect)
        throw Error(Errc::Unstable, "leading L-coefficient has modulus " + std::to_string(got) + ", expected " +
                                        std::to_string(expect) + " for a pure L-polynomial");
    }
    return est;
  }

  if (rho == 0.0) {
    est.degree = 0;
    est.chi_c = 0;
    return est;
  }
  std::vector<cplx> s(static_cast<std::size_t>(M));
  for (int m = 1; m <= M; ++m) s[static_cast<std::size_t>(m - 1)] = S[static_cast<std::size_t>(m - 1)] / std::pow(rho, m);

  const int K = M / 2;
  if (K < 1) throw Error(Errc::Unstable, "need at least two power sums to fit a recurrence");
  const int rows = M - K + 1;  // every S_m enters the matrix
  Eigen::MatrixXcd H(rows, K);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < K; ++j) H(i, j) = s[static_cast<std::size_t>(i + j)];
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(H);
  const auto& sv = svd.singularValues();
  est.singular_values.assign(sv.data(), sv.data() + sv.size());
  const double top = sv(0);
  int r = 0;
  while (r < K && sv(r) > opt.tolerance * std::max(top, 1.0)) ++r;
  if (r == K)
    throw Error(Errc::Unstable, "Hankel matrix has full rank " + std::to_string(K) +
                                    "; the recurrence order may exceed M/2 - supply more power sums (larger M)");
  if (r > 0 && sv(r) > 0.0 && sv(r - 1) / sv(r) < opt.gap)
    throw Error(Errc::Unstable, "no singular-value gap >= " + std::to_string(opt.gap) + " at order " + std::to_string(r));
  est.degree = r;
  if (r == 0) throw Error(Errc::Unstable, "power sums are not all zero but no recurrence was found; supply more power sums");
  // Least squares for a: s_{m+r} = sum_i a_i s_{m+r-i}, m = 1..M-r.
  const int eqs = M - r;
  Eigen::MatrixXcd A(eqs, r);
  Eigen::VectorXcd b(eqs);
  for (int mm = 0; mm < eqs; ++mm) {
    for (int i = 1; i <= r; ++i) A(mm, i - 1) = s[static_cast<std::size_t>(mm + r - i)];
    b(mm) = s[static_cast<std::size_t>(mm + r)];
  }
  Eigen::VectorXcd a = A.completeOrthogonalDecomposition().solve(b);
  double resid = 0.0;
  for (int mm = 0; mm < eqs; ++mm) resid = std::max(resid, std::abs((A.row(mm) * a)(0) - b(mm)));
  est.residual = resid;
  if (resid > 1e3 * opt.tolerance)
    throw Error(Errc::Unstable, "order-" + std::to_string(r) + " recurrence leaves residual " + std::to_string(resid) +
                                    " on the power sums; supply more power sums (larger M)");
  est.recurrence.resize(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) est.recurrence[static_cast<std::size_t>(i)] = a(i) * std::pow(rho, i + 1);
  // Extrapolate s_0 from s_r = sum a_i s_{r-i}; S_0 is the alternating sum of Betti numbers.
  if (std::abs(a(r - 1)) < 1e-12) throw Error(Errc::Unstable, "degenerate recurrence (zero eigenvalue)");
  cplx s0 = s[static_cast<std::size_t>(r - 1)];
  for (int i = 1; i < r; ++i) s0 -= a(i - 1) * s[static_cast<std::size_t>(r - i - 1)];
  s0 /= a(r - 1);
  est.chi_c = static_cast<int>(std::lround(s0.real()));
  if (std::abs(s0 - cplx(est.chi_c, 0.0)) > 1e-3)
    throw Error(Errc::Unstable, "extrapolated Euler characteristic " + std::to_string(s0.real()) + " is not an integer");
  return est;
}

/// Distinct inverse roots alpha of the fitted recurrence with integer multiplicities n,
/// S_m = sum n_alpha alpha^m. Their absolute sum is a lower bound for the total Betti number,
/// attained when no eigenvalue occurs in cohomological degrees of both parities.
struct FrobeniusSpectrum {
  std::vector<cplx> eigenvalues;
  std::vector<i64> multiplicities;
  i64 betti_sum() const {
    i64 s = 0;
    for (i64 n : multiplicities) s += n < 0 ? -n : n;
    return s;
  }
};

inline FrobeniusSpectrum frobenius_spectrum(const LPolynomialEstimate& est) {
  FrobeniusSpectrum out;
  const int r = est.polynomial_mode ? est.degree : static_cast<int>(est.recurrence.size());
  if (r == 0) return out;
  if (est.polynomial_mode) {
    // L(T) = sum c_j T^j = prod (1 - alpha T): alpha are roots of T^D + c_1 T^{D-1} + ... + c_D.
    Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(r, r);
    for (int i = 0; i < r; ++i) C(0, i) = -est.recurrence[static_cast<std::size_t>(i + 1)];
    for (int i = 1; i < r; ++i) C(i, i - 1) = 1.0;
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(C);
    for (int i = 0; i < r; ++i) out.eigenvalues.push_back(es.eigenvalues()(i));
    out.multiplicities.assign(static_cast<std::size_t>(r), -1);
    return out;
  }
  double rho = 0.0;
  const auto& S = est.power_sums;
  for (std::size_t m = 1; m <= S.size(); ++m) rho = std::max(rho, std::pow(std::abs(S[m - 1]), 1.0 / m));
  // Companion matrix of T^r - a_1 T^{r-1} - ... - a_r, scaled by rho.
  Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(r, r);
  for (int i = 0; i < r; ++i) C(0, i) = est.recurrence[static_cast<std::size_t>(i)] / std::pow(rho, i + 1);
  for (int i = 1; i < r; ++i) C(i, i - 1) = 1.0;
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(C);
  const int M = static_cast<int>(S.size());
  Eigen::MatrixXcd V(M, r);
  Eigen::VectorXcd b(M);
  for (int m = 1; m <= M; ++m) {
    for (int i = 0; i < r; ++i) V(m - 1, i) = std::pow(es.eigenvalues()(i), m);
    b(m - 1) = S[static_cast<std::size_t>(m - 1)] / std::pow(rho, m);
  }
  Eigen::VectorXcd n = V.completeOrthogonalDecomposition().solve(b);
  for (int i = 0; i < r; ++i) {
    const i64 k = std::llround(n(i).real());
    if (std::abs(n(i) - cplx(static_cast<double>(k), 0.0)) > 1e-3)
      throw Error(Errc::Unstable, "eigenvalue multiplicity " + std::to_string(n(i).real()) + " is not an integer");
    out.eigenvalues.push_back(es.eigenvalues()(i) * rho);
    out.multiplicities.push_back(k);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gowers norms and Fourier tables

/// ||t_A||_{U_d}^{2^d}: the 2^d-fold correlation over (x, h_1..h_d) normalized by q^{n(d+1)}.
inline double gowers_norm(const Expr& e, int d, u64 p, const SumOptions& opts = {}) {
  if (d < 1) throw Error(Errc::BadParams, "Gowers norm order must be >= 1");
  const int n = sum_detail::ambient_for(e, opts);
  const u64 q = p;
  const u64 npts = point_count(q, n);
  const double tuples = std::pow(static_cast<double>(npts), d + 1);
  sum_detail::check_budget(tuples * std::pow(2.0, d), opts, "gowers_norm");
  const ExtField K = make_extension(PrimeField(p), 1);
  TraceFunction t(e, K, n);
  std::vector<cplx> table(npts);
  {
    PointOdometer it(q, n);
    for (u64 i = 0; i < npts; ++i, it.advance()) table[i] = t.eval_raw(it.data());
  }
  // Coordinate-wise addition of point indices.
  auto add_index = [&](u64 a, u64 b) {
    u64 r = 0, mul = 1;
    for (int i = 0; i < n; ++i) {
      r += ((a % q + b % q) % q) * mul;
      a /= q;
      b /= q;
      mul *= q;
    }
    return r;
  };
  const u64 ntuples = static_cast<u64>(tuples);
  cplx total = parallel_reduce<cplx>(ntuples, opts.chunk_size, opts.threads, [&](u64 b, u64 end) {
    PairwiseAccumulator<cplx> acc;
    std::vector<u64> h(static_cast<std::size_t>(d));
    for (u64 idx = b; idx < end; ++idx) {
      u64 rem = idx;
      const u64 x = rem % npts;
      rem /= npts;
      for (int i = 0; i < d; ++i) {
        h[static_cast<std::size_t>(i)] = rem % npts;
        rem /= npts;
      }
      cplx prod = 1.0;
      for (u64 mask = 0; mask < (u64{1} << d); ++mask) {
        u64 pt = x;
        for (int i = 0; i < d; ++i)
          if (mask >> i & 1) pt = add_index(pt, h[static_cast<std::size_t>(i)]);
        const cplx v = table[pt];
        prod *= (std::popcount(mask) % 2) ? std::conj(v) : v;
        if (prod == cplx(0.0, 0.0)) break;
      }
      acc.add(prod);
    }
    return acc.total();
  });
  const double value = total.real() / tuples;
  const double tol = 1e-9 + 64 * kEps * std::log2(tuples + 2);
  if (value < -tol) throw Error(Errc::NegativityViolation, "Gowers sum has negative real part " + std::to_string(value));
  if (std::abs(total.imag() / tuples) > tol)
    throw Error(Errc::NegativityViolation, "Gowers sum has imaginary part " + std::to_string(total.imag() / tuples));
  return std::max(value, 0.0);
}

/// FT(y) = p^{-1/2} sum_x t_A(x) psi_b(x y) for every y in F_p.
inline std::vector<cplx> fourier_table(const Expr& e, AdditiveSpec psi, u64 p, const SumOptions& opts = {}) {
  SumOptions o = opts;
  o.ambient = 1;
  if (natural_ambient(e) > 1) throw Error(Errc::AmbientMismatch, "fourier_table needs an expression on A^1");
  sum_detail::check_budget(static_cast<double>(p) * static_cast<double>(p), o, "fourier_table");
  PrimeField F(p);
  const ExtField K = make_extension(F, 1);
  TraceFunction t(e, K, 1);
  std::vector<cplx> tx(p);
  for (u64 x = 0; x < p; ++x) {
    FieldElement pt{x};
    tx[x] = t.eval_raw(&pt);
  }
  const RootsOfUnity roots(p);
  const u64 b = F.reduce(psi.a);
  const double norm = 1.0 / std::sqrt(static_cast<double>(p));
  std::vector<cplx> out(p);
  parallel_for(p, 64, o.threads, [&](u64 y) {
    PairwiseAccumulator<cplx> acc;
    const u64 by = F.mul(b, y);
    u64 phase = 0;
    for (u64 x = 0; x < p; ++x) {
      acc.add(tx[x] * roots(phase));
      phase += by;
      if (phase >= p) phase -= p;
    }
    out[y] = acc.total() * norm;
  });
  return out;
}

}  // namespace sheafcx
