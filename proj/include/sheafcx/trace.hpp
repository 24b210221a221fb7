#pragma once

// Numeric trace-function semantics of sheaf expressions.
//
// An expression is compiled once per (field, ambient) into a tree of kernels;
// each kernel also carries a bound on the modulus of its values and on the
// floating-point error of a single evaluation.

#include <cmath>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "sheafcx/characters.hpp"
#include "sheafcx/parallel.hpp"
#include "sheafcx/sheaf_expr.hpp"

namespace sheafcx {

inline constexpr double kEps = std::numeric_limits<double>::epsilon();

/// Iterates over K^n in code order: point i has coordinate j = digit j of i in base q.
class PointOdometer {
 public:
  PointOdometer(u64 q, int n, u64 start = 0) : q_(q), pt_(static_cast<std::size_t>(n)) {
    for (auto& c : pt_) {
      c.code = start % q;
      start /= q;
    }
  }
  const FieldElement* data() const { return pt_.data(); }
  std::span<const FieldElement> point() const { return pt_; }
  void advance() {
    for (auto& c : pt_) {
      if (++c.code < q_) return;
      c.code = 0;
    }
  }

 private:
  u64 q_;
  std::vector<FieldElement> pt_;
};

/// q^n, or 0 if it exceeds 2^63.
inline u64 point_count(u64 q, int n) { return n == 0 ? 1 : arith::checked_pow(q, n); }

/// Shared per-field data used by all kernels.
struct TraceContext {
  ExtField K;
  PrimeField F;
  ExtField prime;  // F_p itself, for Kummer characters composed with the norm
  RootsOfUnity roots_p;
  int m;

  explicit TraceContext(ExtField field)
      : K(field), F(field.base()), prime(field.degree() == 1 ? field : ExtField::make(field.base(), 1)),
        roots_p(field.characteristic()), m(field.degree()) {}

  double q() const { return static_cast<double>(K.order()); }
};

class Kernel {
 public:
  virtual ~Kernel() = default;
  virtual cplx eval(const FieldElement* x) const = 0;
  double magnitude = 1.0;  // sup |value|
  double error = 0.0;      // sup |computed - exact|
};

using KernelPtr = std::unique_ptr<Kernel>;

namespace kernels {

inline ZPoly upoly_to_zpoly(const UPoly& f, int var, int nvars) {
  ZPoly r(IntRing{}, nvars);
  for (std::size_t i = 0; i < f.size(); ++i) {
    Exponents e(static_cast<std::size_t>(nvars), 0);
    e[static_cast<std::size_t>(var)] = static_cast<int>(i);
    r.set(e, static_cast<i64>(f[i]));
  }
  return r;
}

/// num/den ready for evaluation; univariate maps are gcd-reduced first.
struct CompiledMap {
  PolyEvaluator num, den;
  bool den_constant = false;
  FieldElement den_inverse{1};
  bool all_poles = false;

  CompiledMap(const RationalMap& f, const TraceContext& ctx, int nvars) {
    const PrimeField& F = ctx.F;
    const int var = std::max(0, f.max_variable());
    bool univariate = true;
    for (const ZPoly* part : {&f.numerator(), &f.denominator()})
      for (const auto& [e, c] : part->terms())
        for (int i = 0; i < part->nvars(); ++i)
          if (i != var && e[static_cast<std::size_t>(i)] != 0) univariate = false;
    if (univariate) {
      const FpPoly d = reduce_mod(f.denominator(), F);
      if (d.is_zero()) {
        all_poles = true;
        return;
      }
      UniRational u = reduce_univariate(f.extend(std::max(f.nvars(), var + 1)), F, var);
      num = PolyEvaluator(upoly_to_zpoly(u.num, var, nvars), F, nvars);
      den = PolyEvaluator(upoly_to_zpoly(u.den, var, nvars), F, nvars);
      den_constant = upoly::deg(u.den) == 0;
    } else {
      num = PolyEvaluator(f.numerator(), F, nvars);
      den = PolyEvaluator(f.denominator(), F, nvars);
      if (den.is_zero()) {
        all_poles = true;
        return;
      }
      const FpPoly d = reduce_mod(f.denominator(), F);
      den_constant = d.is_constant();
      if (den_constant) den_inverse = ctx.K.inv(FieldElement{d.constant_term()});
    }
  }

  /// f(x), or nullopt at a pole.
  std::optional<FieldElement> operator()(const ExtField& K, const FieldElement* x) const {
    if (all_poles) return std::nullopt;
    if (den_constant) {
      FieldElement v = num.eval(K, x);
      return den_inverse.code == 1 ? v : K.mul(v, den_inverse);
    }
    const FieldElement d = den.eval(K, x);
    if (d.code == 0) return std::nullopt;
    return K.mul(num.eval(K, x), K.inv(d));
  }
};

class ZeroKernel final : public Kernel {
 public:
  ZeroKernel() {
    magnitude = 0.0;
    error = 0.0;
  }
  cplx eval(const FieldElement*) const override { return {0.0, 0.0}; }
};

class ConstKernel final : public Kernel {
 public:
  ConstKernel() {
    magnitude = 1.0;
    error = 0.0;
  }
  cplx eval(const FieldElement*) const override { return {1.0, 0.0}; }
};

class ASKernel final : public Kernel {
 public:
  ASKernel(const node::AS& n, const TraceContext& ctx, int nvars)
      : ctx_(ctx), map_(n.f, ctx, nvars), a_(ctx.F.reduce(n.psi.a)) {
    magnitude = 1.0;
    error = 2 * kEps;
  }
  cplx eval(const FieldElement* x) const override {
    auto v = map_(ctx_.K, x);
    if (!v) return {0.0, 0.0};
    return ctx_.roots_p(ctx_.F.mul(a_, ctx_.K.trace(*v)));
  }

 private:
  const TraceContext& ctx_;
  CompiledMap map_;
  u64 a_;
};

/// Artin-Schreier leaf of a univariate polynomial over F_p with p < 2^32: Horner in machine words.
class ASPrimePolyKernel final : public Kernel {
 public:
  ASPrimePolyKernel(const UPoly& f, u64 a, int var, const TraceContext& ctx) : ctx_(ctx), var_(var), p_(ctx.F.p()) {
    for (u64 c : f) coeffs_.push_back(ctx.F.mul(c, a));
    magnitude = 1.0;
    error = 2 * kEps;
  }
  cplx eval(const FieldElement* x) const override {
    const u64 xv = x[var_].code;
    u64 r = 0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) r = (r * xv + *it) % p_;
    return ctx_.roots_p(r);
  }

 private:
  const TraceContext& ctx_;
  int var_;
  u64 p_;
  std::vector<u64> coeffs_;
};

class KummerKernel final : public Kernel {
 public:
  KummerKernel(const node::Kummer& n, const TraceContext& ctx, int nvars)
      : ctx_(ctx), map_(n.g, ctx, nvars), roots_(n.chi.r), j_(n.chi.j % n.chi.r), r_(n.chi.r) {
    if ((ctx.F.p() - 1) % n.chi.r != 0)
      throw Error(Errc::BadOrder, "character order " + std::to_string(n.chi.r) + " does not divide p-1");
    magnitude = 1.0;
    error = 2 * kEps;
  }
  cplx eval(const FieldElement* x) const override {
    auto v = map_(ctx_.K, x);
    if (!v || v->code == 0) return {0.0, 0.0};
    const u64 nrm = ctx_.m == 1 ? v->code : ctx_.K.norm(*v);
    const u64 lg = ctx_.prime.dlog(FieldElement{nrm});
    // chi(g^lg) = e(lg * j / r)
    return roots_(arith::mulmod(lg % r_, j_, r_));
  }

 private:
  const TraceContext& ctx_;
  CompiledMap map_;
  RootsOfUnity roots_;
  u64 j_, r_;
};

class TensorKernel final : public Kernel {
 public:
  TensorKernel(KernelPtr a, KernelPtr b) : a_(std::move(a)), b_(std::move(b)) {
    magnitude = a_->magnitude * b_->magnitude;
    error = a_->magnitude * b_->error + b_->magnitude * a_->error + a_->error * b_->error + 4 * kEps * magnitude;
  }
  cplx eval(const FieldElement* x) const override {
    const cplx va = a_->eval(x);
    if (va == cplx(0.0, 0.0)) return va;
    return va * b_->eval(x);
  }

 private:
  KernelPtr a_, b_;
};

class SumKernel final : public Kernel {
 public:
  SumKernel(KernelPtr a, KernelPtr b) : a_(std::move(a)), b_(std::move(b)) {
    magnitude = a_->magnitude + b_->magnitude;
    error = a_->error + b_->error + kEps * magnitude;
  }
  cplx eval(const FieldElement* x) const override { return a_->eval(x) + b_->eval(x); }

 private:
  KernelPtr a_, b_;
};

class ScaleKernel final : public Kernel {
 public:
  ScaleKernel(KernelPtr a, double factor) : a_(std::move(a)), factor_(factor) {
    magnitude = a_->magnitude * std::abs(factor);
    error = a_->error * std::abs(factor) + (factor == 1.0 || factor == -1.0 ? 0.0 : 2 * kEps * magnitude);
  }
  cplx eval(const FieldElement* x) const override { return a_->eval(x) * factor_; }

 private:
  KernelPtr a_;
  double factor_;
};

class ConjKernel final : public Kernel {
 public:
  explicit ConjKernel(KernelPtr a) : a_(std::move(a)) {
    magnitude = a_->magnitude;
    error = a_->error;
  }
  cplx eval(const FieldElement* x) const override { return std::conj(a_->eval(x)); }

 private:
  KernelPtr a_;
};

class ExternalKernel final : public Kernel {
 public:
  ExternalKernel(KernelPtr a, KernelPtr b, int na) : a_(std::move(a)), b_(std::move(b)), na_(na) {
    magnitude = a_->magnitude * b_->magnitude;
    error = a_->magnitude * b_->error + b_->magnitude * a_->error + a_->error * b_->error + 4 * kEps * magnitude;
  }
  cplx eval(const FieldElement* x) const override {
    const cplx va = a_->eval(x);
    if (va == cplx(0.0, 0.0)) return va;
    return va * b_->eval(x + na_);
  }

 private:
  KernelPtr a_, b_;
  int na_;
};

/// Sum of the child over the fibre coordinates.
class PushKernel final : public Kernel {
 public:
  PushKernel(KernelPtr child, std::vector<int> summed, int child_ambient, const TraceContext& ctx)
      : child_(std::move(child)), summed_(std::move(summed)), child_ambient_(child_ambient), q_(ctx.K.order()) {
    std::vector<bool> is_summed(static_cast<std::size_t>(child_ambient), false);
    for (int v : summed_) is_summed[static_cast<std::size_t>(v)] = true;
    for (int i = 0; i < child_ambient; ++i)
      if (!is_summed[static_cast<std::size_t>(i)]) kept_.push_back(i);
    fibre_ = point_count(q_, static_cast<int>(summed_.size()));
    if (fibre_ == 0) throw Error(Errc::BudgetExceeded, "fibre of push is too large");
    const double f = static_cast<double>(fibre_);
    magnitude = f * child_->magnitude;
    error = f * child_->error + std::ceil(std::log2(f + 1)) * kEps * magnitude;
  }
  cplx eval(const FieldElement* x) const override {
    std::vector<FieldElement> pt(static_cast<std::size_t>(child_ambient_));
    for (std::size_t i = 0; i < kept_.size(); ++i) pt[static_cast<std::size_t>(kept_[i])] = x[i];
    PairwiseAccumulator<cplx> acc;
    for (u64 k = 0; k < fibre_; ++k) {
      acc.add(child_->eval(pt.data()));
      for (int v : summed_) {
        auto& c = pt[static_cast<std::size_t>(v)];
        if (++c.code < q_) break;
        c.code = 0;
      }
    }
    return acc.total();
  }

 private:
  KernelPtr child_;
  std::vector<int> summed_, kept_;
  int child_ambient_;
  u64 q_;
  u64 fibre_ = 1;
};

/// y -> q^{-n/2} sum_x t(x) psi_b(x . y).
class FourierKernel final : public Kernel {
 public:
  FourierKernel(KernelPtr child, int n, AdditiveSpec psi, const TraceContext& ctx)
      : ctx_(ctx), child_(std::move(child)), n_(n), b_(ctx.F.reduce(psi.a)) {
    count_ = point_count(ctx.K.order(), n);
    if (count_ == 0) throw Error(Errc::BudgetExceeded, "Fourier transform domain is too large");
    norm_ = std::pow(ctx.q(), -0.5 * n);
    const double c = static_cast<double>(count_);
    magnitude = norm_ * c * child_->magnitude;
    error = norm_ * (c * (child_->error + 4 * kEps * child_->magnitude) + std::ceil(std::log2(c + 1)) * kEps * c * child_->magnitude) +
            2 * kEps * magnitude;
  }
  cplx eval(const FieldElement* y) const override {
    const ExtField& K = ctx_.K;
    PointOdometer it(K.order(), n_);
    PairwiseAccumulator<cplx> acc;
    for (u64 k = 0; k < count_; ++k, it.advance()) {
      const FieldElement* x = it.data();
      const cplx t = child_->eval(x);
      if (t == cplx(0.0, 0.0)) {
        acc.add(t);
        continue;
      }
      FieldElement dot = K.zero();
      for (int i = 0; i < n_; ++i) dot = K.add(dot, K.mul(x[i], y[i]));
      acc.add(t * ctx_.roots_p(ctx_.F.mul(b_, K.trace(dot))));
    }
    return acc.total() * norm_;
  }

 private:
  const TraceContext& ctx_;
  KernelPtr child_;
  int n_;
  u64 b_;
  u64 count_ = 1;
  double norm_ = 1.0;
};

}  // namespace kernels

/// Compile `e` at ambient dimension n over ctx.K.
inline KernelPtr compile_kernel(const Expr& e, int n, const TraceContext& ctx) {
  using namespace kernels;
  check_ambient(e, n);
  return std::visit(
      [&](const auto& nd) -> KernelPtr {
        using T = std::decay_t<decltype(nd)>;
        if constexpr (std::is_same_v<T, node::AS>) {
          if (ctx.m == 1 && ctx.F.p() < (u64{1} << 32) && nd.f.is_polynomial()) {
            const int var = std::max(0, nd.f.max_variable());
            bool univariate = true;
            for (const auto& [ex, c] : nd.f.numerator().terms())
              for (int i = 0; i < nd.f.nvars(); ++i)
                if (i != var && ex[static_cast<std::size_t>(i)] != 0) univariate = false;
            if (univariate) {
              UniRational u = reduce_univariate(nd.f.extend(std::max(nd.f.nvars(), var + 1)), ctx.F, var);
              UPoly f = upoly::scale(ctx.F, u.num, ctx.F.inv(u.den[0]));
              return std::make_unique<ASPrimePolyKernel>(f, ctx.F.reduce(nd.psi.a), var, ctx);
            }
          }
          return std::make_unique<ASKernel>(nd, ctx, n);
        } else if constexpr (std::is_same_v<T, node::Kummer>) {
          return std::make_unique<KummerKernel>(nd, ctx, n);
        } else if constexpr (std::is_same_v<T, node::Const>) {
          return std::make_unique<ConstKernel>();
        } else if constexpr (std::is_same_v<T, node::Tensor>) {
          return std::make_unique<TensorKernel>(compile_kernel(nd.a, n, ctx), compile_kernel(nd.b, n, ctx));
        } else if constexpr (std::is_same_v<T, node::DirectSum>) {
          return std::make_unique<SumKernel>(compile_kernel(nd.a, n, ctx), compile_kernel(nd.b, n, ctx));
        } else if constexpr (std::is_same_v<T, node::Dual>) {
          if (!is_weight_zero_pure(nd.a))
            throw Error(Errc::NotWeightPure,
                        "numeric Dual needs a weight-0 pure operand, e.g. Shift(Twist(A, n/2), n) of a lisse leaf or Pure(A)");
          return std::make_unique<ConjKernel>(compile_kernel(nd.a, n, ctx));
        } else if constexpr (std::is_same_v<T, node::Shift>) {
          KernelPtr c = compile_kernel(nd.a, n, ctx);
          if (nd.h % 2 == 0) return c;
          return std::make_unique<ScaleKernel>(std::move(c), -1.0);
        } else if constexpr (std::is_same_v<T, node::Twist>) {
          if (!nd.w.half_integral())
            throw Error(Errc::NumericUnsupported, "numeric twists need a half-integer weight, got " + nd.w.to_string());
          const double factor = std::pow(static_cast<double>(ctx.F.p()), -ctx.m * nd.w.value());
          return std::make_unique<ScaleKernel>(compile_kernel(nd.a, n, ctx), factor);
        } else if constexpr (std::is_same_v<T, node::Conj>) {
          return std::make_unique<ConjKernel>(compile_kernel(nd.a, n, ctx));
        } else if constexpr (std::is_same_v<T, node::ExternalProduct>) {
          const int na = natural_ambient(nd.a);
          if (n - na < natural_ambient(nd.b))
            throw Error(Errc::AmbientMismatch, "external product does not fit the ambient dimension");
          return std::make_unique<ExternalKernel>(compile_kernel(nd.a, na, ctx), compile_kernel(nd.b, n - na, ctx), na);
        } else if constexpr (std::is_same_v<T, node::PushCompact>) {
          const int child_n = n + static_cast<int>(nd.vars.size());
          return std::make_unique<PushKernel>(compile_kernel(nd.a, child_n, ctx), nd.vars, child_n, ctx);
        } else if constexpr (std::is_same_v<T, node::Fourier>) {
          return std::make_unique<FourierKernel>(compile_kernel(nd.a, n, ctx), n, nd.psi, ctx);
        } else if constexpr (std::is_same_v<T, node::Pure>) {
          return compile_kernel(nd.a, n, ctx);
        } else {
          throw Error(Errc::NumericUnsupported,
                      std::string(symbolic_name(nd.op)) + " has no numeric trace semantics (bound calculus only)");
        }
      },
      e->v);
}

/// A compiled trace function t_A(.; F_{p^m}) on A^n.
class TraceFunction {
 public:
  TraceFunction(const Expr& e, const ExtField& K, int ambient)
      : ctx_(std::make_unique<TraceContext>(K)), ambient_(ambient), kernel_(compile_kernel(e, ambient, *ctx_)) {}

  cplx operator()(std::span<const FieldElement> x) const {
    if (static_cast<int>(x.size()) != ambient_)
      throw Error(Errc::AmbientMismatch, "point has " + std::to_string(x.size()) + " coordinates, expected " +
                                             std::to_string(ambient_));
    return kernel_->eval(x.data());
  }
  cplx eval_raw(const FieldElement* x) const { return kernel_->eval(x); }

  int ambient() const { return ambient_; }
  const ExtField& field() const { return ctx_->K; }
  double magnitude_bound() const { return kernel_->magnitude; }
  double error_bound() const { return kernel_->error; }

 private:
  std::unique_ptr<TraceContext> ctx_;
  int ambient_;
  KernelPtr kernel_;
};

/// t_A(x) over the field K, with the ambient taken from the number of coordinates.
inline cplx eval_trace(const Expr& e, const ExtField& K, std::span<const FieldElement> x) {
  return TraceFunction(e, K, static_cast<int>(x.size()))(x);
}

/// t_A(x; F_{p^m}) with the extension built from `seed`.
inline cplx eval_trace_extension(const Expr& e, u64 p, int m, std::span<const FieldElement> x, u64 seed = 0) {
  return eval_trace(e, make_extension(PrimeField(p), m, seed), x);
}

}  // namespace sheafcx
