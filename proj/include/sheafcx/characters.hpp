#pragma once

// Additive and multiplicative characters of finite fields with values in C.

#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <vector>

#include "sheafcx/ffield.hpp"

namespace sheafcx {

using cplx = std::complex<double>;

/// e(j/n) = exp(2 pi i j / n), tabulated for moderate n.
class RootsOfUnity {
 public:
  static constexpr u64 kTableCap = u64{1} << 22;

  explicit RootsOfUnity(u64 n) : n_(n) {
    if (n == 0) throw Error(Errc::BadParams, "roots of unity of order 0");
    if (n <= kTableCap) {
      table_ = std::make_shared<std::vector<cplx>>(n);
      for (u64 j = 0; j < n; ++j) (*table_)[j] = compute(j, n);
    }
  }

  u64 order() const noexcept { return n_; }

  cplx operator()(u64 j) const {
    j %= n_;
    return table_ ? (*table_)[j] : compute(j, n_);
  }

  /// Exact-symmetric evaluation: real and imaginary parts are computed from
  /// the reduced angle so that e(-j/n) is the bitwise conjugate of e(j/n).
  static cplx compute(u64 j, u64 n) {
    j %= n;
    if (j == 0) return {1.0, 0.0};
    const bool flip = 2 * j > n;
    const u64 jj = flip ? n - j : j;
    if (2 * jj == n) return {-1.0, 0.0};
    if (4 * jj == n) return {0.0, flip ? -1.0 : 1.0};
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(jj) / static_cast<double>(n);
    const double im = std::sin(angle);
    return {std::cos(angle), flip ? -im : im};
  }

 private:
  u64 n_;
  std::shared_ptr<std::vector<cplx>> table_;
};

/// psi_a(x) = e(Tr(a x) / p).
class AdditiveCharacter {
 public:
  AdditiveCharacter(ExtField field, FieldElement a)
      : field_(std::move(field)), a_(a), roots_(field_.characteristic()) {}

  const ExtField& field() const { return field_; }
  FieldElement twist() const { return a_; }
  bool trivial() const { return a_.code == 0; }

  cplx operator()(FieldElement x) const { return roots_(field_.trace(field_.mul(a_, x))); }

 private:
  ExtField field_;
  FieldElement a_;
  RootsOfUnity roots_;
};

/// chi(g^j) = e(j e / (q-1)) for the field's fixed generator g, chi(0) = 0.
class MultiplicativeCharacter {
 public:
  MultiplicativeCharacter(ExtField field, u64 exponent)
      : field_(std::move(field)), e_(exponent % (field_.order() - 1)), roots_(field_.order() - 1) {}

  /// The character of exact order r sending the generator to e(j / r).
  static MultiplicativeCharacter of_order(ExtField field, u64 r, u64 j = 1) {
    const u64 qm1 = field.order() - 1;
    if (r == 0 || qm1 % r != 0) throw Error(Errc::BadOrder, "character order must divide q-1");
    return MultiplicativeCharacter(std::move(field), (qm1 / r) * (j % r));
  }

  const ExtField& field() const { return field_; }
  u64 exponent() const { return e_; }
  u64 order() const { return (field_.order() - 1) / std::gcd(e_, field_.order() - 1); }

  cplx operator()(FieldElement x) const {
    if (x.code == 0) return {0.0, 0.0};
    const u64 n = field_.order() - 1;
    return roots_(arith::mulmod(field_.dlog(x), e_, n));
  }

 private:
  ExtField field_;
  u64 e_;
  RootsOfUnity roots_;
};

inline cplx eval_additive(const AdditiveCharacter& psi, FieldElement x) { return psi(x); }
inline cplx eval_multiplicative(const MultiplicativeCharacter& chi, FieldElement x) { return chi(x); }

}  // namespace sheafcx
