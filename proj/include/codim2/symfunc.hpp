#pragma once

// Elementary symmetric functions, complete polarizations and the mixed
// curvatures P_{r,s}(chi, chibar) defined by
//   det(sigma + y chi + ybar chibar) / det(sigma)
//     = sum_{r,s} C(r+s, r) y^r ybar^s P_{r,s},
// together with their derivative tensors and the cone inequalities.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "codim2/errors.hpp"

namespace codim2::symfunc {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double b = 1.0;
  for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
  return b;
}

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

template <typename Derived>
Matrix<typename Derived::Scalar> symmetrized(const Eigen::MatrixBase<Derived>& w) {
  using S = typename Derived::Scalar;
  return (w + w.transpose()) / S(2);
}

// All e_0 .. e_d of the entries of lambda.
template <typename Derived>
Vector<typename Derived::Scalar> elem_sym_all(const Eigen::MatrixBase<Derived>& lambda) {
  using S = typename Derived::Scalar;
  const Eigen::Index d = lambda.size();
  Vector<S> e = Vector<S>::Zero(d + 1);
  e(0) = S(1);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index k = i + 1; k >= 1; --k) e(k) += lambda(i) * e(k - 1);
  return e;
}

template <typename Derived>
typename Derived::Scalar elem_sym(const Eigen::MatrixBase<Derived>& lambda, int k) {
  if (k < 0 || k > lambda.size())
    throw DomainError("elem_sym: k=" + std::to_string(k) + " outside [0, " +
                      std::to_string(lambda.size()) + "]");
  return elem_sym_all(lambda)(k);
}

// sigma_k of lambda with entry i removed.
template <typename Derived>
typename Derived::Scalar elem_sym_excl(const Eigen::MatrixBase<Derived>& lambda, int k,
                                       Eigen::Index i) {
  using S = typename Derived::Scalar;
  const Eigen::Index d = lambda.size();
  if (i < 0 || i >= d) throw DomainError("elem_sym_excl: index " + std::to_string(i) + " out of range");
  if (k < 0 || k > d - 1)
    throw DomainError("elem_sym_excl: k=" + std::to_string(k) + " outside [0, " +
                      std::to_string(d - 1) + "]");
  Vector<S> rest(d - 1);
  for (Eigen::Index j = 0, c = 0; j < d; ++j)
    if (j != i) rest(c++) = lambda(j);
  return elem_sym_all(rest)(k);
}

namespace detail {

// Determinant by Gaussian elimination with partial pivoting; destroys a (row-major d x d).
template <typename Scalar>
Scalar det_inplace(Scalar* a, int d) {
  using std::abs;
  Scalar det(1);
  for (int c = 0; c < d; ++c) {
    int p = c;
    for (int r = c + 1; r < d; ++r)
      if (abs(a[r * d + c]) > abs(a[p * d + c])) p = r;
    if (a[p * d + c] == Scalar(0)) return Scalar(0);
    if (p != c) {
      for (int k = 0; k < d; ++k) std::swap(a[p * d + k], a[c * d + k]);
      det = -det;
    }
    const Scalar piv = a[c * d + c];
    det *= piv;
    for (int r = c + 1; r < d; ++r) {
      const Scalar f = a[r * d + c] / piv;
      if (f == Scalar(0)) continue;
      for (int k = c + 1; k < d; ++k) a[r * d + k] -= f * a[c * d + k];
    }
  }
  return det;
}

}  // namespace detail

// Coefficients c(i, j) of y^i ybar^j in det(m0 + y m1 + ybar m2), expanding the
// determinant row by row (it is multilinear in rows): 3^d minors.
template <typename Scalar>
Matrix<Scalar> bivariate_det_coefficients(const Matrix<Scalar>& m0, const Matrix<Scalar>& m1,
                                          const Matrix<Scalar>& m2) {
  const int d = static_cast<int>(m0.rows());
  Matrix<Scalar> c = Matrix<Scalar>::Zero(d + 1, d + 1);
  if (d == 0) {
    c(0, 0) = Scalar(1);
    return c;
  }
  const Matrix<Scalar>* src[3] = {&m0, &m1, &m2};
  std::vector<int> pick(d, 0);
  std::vector<Scalar> buf(static_cast<std::size_t>(d) * d);
  while (true) {
    int n1 = 0, n2 = 0;
    for (int r = 0; r < d; ++r) {
      const Matrix<Scalar>& m = *src[pick[r]];
      n1 += pick[r] == 1;
      n2 += pick[r] == 2;
      for (int k = 0; k < d; ++k) buf[r * d + k] = m(r, k);
    }
    c(n1, n2) += detail::det_inplace(buf.data(), d);
    int r = 0;
    while (r < d && pick[r] == 2) pick[r++] = 0;
    if (r == d) break;
    ++pick[r];
  }
  return c;
}

template <typename Scalar>
Matrix<Scalar> remove_row_col(const Matrix<Scalar>& m, Eigen::Index row, Eigen::Index col) {
  const Eigen::Index d = m.rows();
  Matrix<Scalar> out(d - 1, d - 1);
  for (Eigen::Index i = 0, oi = 0; i < d; ++i) {
    if (i == row) continue;
    for (Eigen::Index j = 0, oj = 0; j < d; ++j) {
      if (j == col) continue;
      out(oi, oj++) = m(i, j);
    }
    ++oi;
  }
  return out;
}

// sigma^{-1/2}, with the positive-definiteness check.
template <typename Scalar>
Matrix<Scalar> inverse_sqrt_spd(const Matrix<Scalar>& sigma) {
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(symmetrized(sigma));
  const Vector<Scalar>& ev = es.eigenvalues();
  using std::abs;
  using std::sqrt;
  const Scalar top = ev.cwiseAbs().maxCoeff();
  if (!(ev.minCoeff() > Scalar(1e-14) * top) || !(top > Scalar(0)))
    throw InvalidMetric("sigma is not positive definite");
  Vector<Scalar> inv = ev.cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

template <typename Scalar>
struct Whitened {
  Matrix<Scalar> a;         // sigma^{-1/2} chi sigma^{-1/2}
  Matrix<Scalar> b;         // sigma^{-1/2} chibar sigma^{-1/2}
  Matrix<Scalar> inv_sqrt;  // sigma^{-1/2}
};

template <typename Scalar>
Whitened<Scalar> whiten(const Matrix<Scalar>& sigma, const Matrix<Scalar>& chi,
                        const Matrix<Scalar>& chibar) {
  const Eigen::Index d = sigma.rows();
  if (sigma.cols() != d || chi.rows() != d || chi.cols() != d || chibar.rows() != d ||
      chibar.cols() != d)
    throw DomainError("mixed curvature inputs must share one square dimension");
  Whitened<Scalar> w;
  w.inv_sqrt = inverse_sqrt_spd(sigma);
  w.a = symmetrized(Matrix<Scalar>(w.inv_sqrt * symmetrized(chi) * w.inv_sqrt));
  w.b = symmetrized(Matrix<Scalar>(w.inv_sqrt * symmetrized(chibar) * w.inv_sqrt));
  return w;
}

template <typename Scalar>
struct MixedCurvatureTable {
  int d = 0;  // surface dimension, n - 1
  Matrix<Scalar> P;  // P(r, s) for r + s <= d, zero elsewhere
  // Index-raised by sigma; flat index r * (d + 1) + s. Empty when not requested.
  std::vector<Matrix<Scalar>> T, Tbar;

  Scalar p(int r, int s) const {
    if (r < 0 || s < 0 || r + s > d)
      throw DomainError("P_{" + std::to_string(r) + "," + std::to_string(s) + "} outside 0 <= r+s <= " +
                        std::to_string(d));
    return P(r, s);
  }
  const Matrix<Scalar>& t(int r, int s) const { return T.at(index(r, s)); }
  const Matrix<Scalar>& tbar(int r, int s) const { return Tbar.at(index(r, s)); }

 private:
  std::size_t index(int r, int s) const {
    if (r < 0 || s < 0 || r + s > d) throw DomainError("T index outside 0 <= r+s <= d");
    return static_cast<std::size_t>(r * (d + 1) + s);
  }
};

// Full table from a whitened pair. Tensors are returned in the whitened frame.
template <typename Scalar>
MixedCurvatureTable<Scalar> mixed_table_whitened(const Matrix<Scalar>& a, const Matrix<Scalar>& b,
                                                 bool with_tensors) {
  const int d = static_cast<int>(a.rows());
  const Matrix<Scalar> id = Matrix<Scalar>::Identity(d, d);
  MixedCurvatureTable<Scalar> tab;
  tab.d = d;
  tab.P = bivariate_det_coefficients(id, a, b);
  for (int r = 0; r <= d; ++r)
    for (int s = 0; r + s <= d; ++s) tab.P(r, s) /= Scalar(binomial(r + s, r));
  if (!with_tensors) return tab;

  const std::size_t slots = static_cast<std::size_t>((d + 1) * (d + 1));
  tab.T.assign(slots, Matrix<Scalar>::Zero(d, d));
  tab.Tbar.assign(slots, Matrix<Scalar>::Zero(d, d));
  // d/dA det(I + yA + ybar B) = y adj(I + yA + ybar B); entries are cofactor polynomials.
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      Matrix<Scalar> c = bivariate_det_coefficients<Scalar>(
          remove_row_col(id, i, j), remove_row_col(a, i, j), remove_row_col(b, i, j));
      if ((i + j) % 2 == 1) c = -c;
      for (int r = 0; r <= d; ++r) {
        for (int s = 0; r + s <= d; ++s) {
          const Scalar norm(binomial(r + s, r));
          const std::size_t k = static_cast<std::size_t>(r * (d + 1) + s);
          if (r >= 1) tab.T[k](i, j) = tab.T[k](j, i) = c(r - 1, s) / norm;
          if (s >= 1) tab.Tbar[k](i, j) = tab.Tbar[k](j, i) = c(r, s - 1) / norm;
        }
      }
    }
  }
  return tab;
}

// P_{r,s} for all admissible (r, s), and optionally T, Tbar raised by sigma.
template <typename Scalar>
MixedCurvatureTable<Scalar> mixed_table(const Matrix<Scalar>& sigma, const Matrix<Scalar>& chi,
                                        const Matrix<Scalar>& chibar, bool with_tensors = true) {
  const Whitened<Scalar> w = whiten(sigma, chi, chibar);
  MixedCurvatureTable<Scalar> tab = mixed_table_whitened(w.a, w.b, with_tensors);
  for (auto* list : {&tab.T, &tab.Tbar})
    for (auto& m : *list) m = symmetrized(Matrix<Scalar>(w.inv_sqrt * m * w.inv_sqrt));
  return tab;
}

inline void check_rs(int r, int s, Eigen::Index d) {
  if (r < 0 || s < 0 || r + s > d)
    throw DomainError("(r,s)=(" + std::to_string(r) + "," + std::to_string(s) +
                      ") outside 0 <= r+s <= " + std::to_string(d));
}

template <typename Scalar>
Scalar mixed_P(const Matrix<Scalar>& sigma, const Matrix<Scalar>& chi, const Matrix<Scalar>& chibar,
               int r, int s) {
  check_rs(r, s, sigma.rows());
  return mixed_table(sigma, chi, chibar, false).p(r, s);
}

template <typename Scalar>
struct TensorPair {
  Matrix<Scalar> T, Tbar;
};

template <typename Scalar>
TensorPair<Scalar> mixed_T(const Matrix<Scalar>& sigma, const Matrix<Scalar>& chi,
                           const Matrix<Scalar>& chibar, int r, int s) {
  check_rs(r, s, sigma.rows());
  const auto tab = mixed_table(sigma, chi, chibar, true);
  return {tab.t(r, s), tab.tbar(r, s)};
}

// Mixed discriminant: coefficient of t_1...t_d in det(sum_i t_i V^i), where the
// list holds the given matrices followed by `identities` copies of I.
template <typename Scalar>
Scalar mixed_discriminant_with_identity(const std::vector<Matrix<Scalar>>& v, int identities) {
  const int k = static_cast<int>(v.size());
  const int d = k + identities;
  Scalar total(0);
  std::vector<Scalar> buf(static_cast<std::size_t>(d) * d);
  for (unsigned mask = 0; mask < (1u << k); ++mask) {
    Matrix<Scalar> sum = Matrix<Scalar>::Zero(d, d);
    int used = 0;
    for (int i = 0; i < k; ++i)
      if (mask & (1u << i)) {
        sum += v[i];
        ++used;
      }
    for (int j = 0; j <= identities; ++j) {
      Matrix<Scalar> m = sum;
      m.diagonal().array() += Scalar(j);
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) buf[r * d + c] = m(r, c);
      const Scalar det = detail::det_inplace(buf.data(), d);
      const int missing = d - used - j;
      const Scalar term = Scalar(binomial(identities, j)) * det;
      total += (missing % 2 == 0) ? term : Scalar(-term);
    }
  }
  return total;
}

// Complete polarization sigma_(k)(W^1..W^k), normalized so sigma_(k)(W..W) = sigma_k(W)
// and sigma_(k)(I..I) = C(d, k).
template <typename Scalar>
Scalar polarized_sigma(const std::vector<Matrix<Scalar>>& w, int k) {
  if (static_cast<int>(w.size()) != k) throw DomainError("polarized_sigma: need exactly k matrices");
  if (k == 0) return Scalar(1);
  const Eigen::Index d = w.front().rows();
  for (const auto& m : w)
    if (m.rows() != d || m.cols() != d) throw DomainError("polarized_sigma: mismatched dimensions");
  if (k > d) throw DomainError("polarized_sigma: k exceeds dimension");
  std::vector<Matrix<Scalar>> sym;
  sym.reserve(w.size());
  for (const auto& m : w) sym.push_back(symmetrized(m));
  const int dd = static_cast<int>(d);
  return Scalar(binomial(dd, k)) * mixed_discriminant_with_identity(sym, dd - k) /
         Scalar(factorial(dd));
}

template <typename Derived>
bool gamma_cone_member(const Eigen::MatrixBase<Derived>& w, int k, double tol = 1e-12) {
  using S = typename Derived::Scalar;
  const Matrix<S> m = symmetrized(w);
  if (k < 0 || k > m.rows()) throw DomainError("gamma_cone_member: k outside [0, d]");
  if (k == 0) return true;
  Eigen::SelfAdjointEigenSolver<Matrix<S>> es(m, Eigen::EigenvaluesOnly);
  const Vector<S>& ev = es.eigenvalues();
  using std::pow;
  const S norm = ev.cwiseAbs().maxCoeff();
  if (!(norm > S(0))) return false;
  const Vector<S> e = elem_sym_all(ev);
  for (int j = 1; j <= k; ++j)
    if (!(e(j) > S(tol) * pow(norm, j))) return false;
  return true;
}

template <typename Scalar>
bool proportional_to(const Matrix<Scalar>& w, const Matrix<Scalar>& ref, double tol = 1e-12) {
  // w = c ref for some c, in the sense of the Frobenius pairing.
  const Scalar rr = (ref.array() * ref.array()).sum();
  if (!(rr > Scalar(0))) return w.norm() == Scalar(0);
  const Scalar c = (w.array() * ref.array()).sum() / rr;
  return (w - c * ref).norm() <= Scalar(tol) * std::max(w.norm(), ref.norm());
}

template <typename Scalar>
struct AbcResiduals {
  Scalar residual[3] = {0, 0, 0};
  Scalar scale[3] = {0, 0, 0};
  Scalar relative(int i) const {
    using std::abs;
    return abs(residual[i]) / std::max(scale[i], Scalar(1e-300));
  }
};

// Residuals of  sigma_ab T^ab = r(n-(r+s))/(r+s) P_{r-1,s},  chi_ab T^ab = r P_{r,s},
// chibar_ab Tbar^ab = s P_{r,s}.
template <typename Scalar>
AbcResiduals<Scalar> check_abc_identities(const Matrix<Scalar>& sigma, const Matrix<Scalar>& chi,
                                          const Matrix<Scalar>& chibar, int r, int s, int n) {
  const Eigen::Index d = sigma.rows();
  if (n != d + 1) throw DomainError("check_abc_identities: n must equal dim + 1");
  check_rs(r, s, d);
  const Whitened<Scalar> w = whiten(sigma, chi, chibar);
  const auto tab = mixed_table_whitened(w.a, w.b, true);
  AbcResiduals<Scalar> out;
  using std::abs;
  const Matrix<Scalar>& t = tab.t(r, s);
  const Matrix<Scalar>& tb = tab.tbar(r, s);
  const Scalar lhs_a = t.trace();
  const Scalar rhs_a = (r + s == 0 || r == 0)
                           ? Scalar(0)
                           : Scalar(r) * Scalar(n - (r + s)) / Scalar(r + s) * tab.p(r - 1, s);
  const Scalar lhs_b = (w.a.array() * t.array()).sum();
  const Scalar rhs_b = Scalar(r) * tab.p(r, s);
  const Scalar lhs_c = (w.b.array() * tb.array()).sum();
  const Scalar rhs_c = Scalar(s) * tab.p(r, s);
  out.residual[0] = abs(lhs_a - rhs_a);
  out.residual[1] = abs(lhs_b - rhs_b);
  out.residual[2] = abs(lhs_c - rhs_c);
  out.scale[0] = abs(lhs_a) + abs(rhs_a);
  out.scale[1] = abs(lhs_b) + abs(rhs_b);
  out.scale[2] = abs(lhs_c) + abs(rhs_c);
  return out;
}

template <typename Scalar>
struct InequalityGap {
  Scalar lhs = 0, rhs = 0, gap = 0, scale = 0;
  bool equality = false;  // |gap| <= 1e-9 scale
};

inline double newton_maclaurin_constant(int n, int r, int s) {
  const int k = r + s;
  return double(k) / double(k - 1) * double(n - k + 1) / double(n - k);
}

// P_{r-1,s}^2 >= c(n,r,s) P_{r,s} P_{r-2,s} for chi, chibar in Gamma_{r+s-1}.
template <typename Scalar>
InequalityGap<Scalar> newton_maclaurin_check(const Matrix<Scalar>& sigma, const Matrix<Scalar>& chi,
                                             const Matrix<Scalar>& chibar, int r, int s, int n) {
  const Eigen::Index d = sigma.rows();
  if (n != d + 1) throw DomainError("newton_maclaurin_check: n must equal dim + 1");
  if (r + s < 2) throw DomainError("newton_maclaurin_check: needs r+s >= 2");
  if (r < 2) throw DomainError("newton_maclaurin_check: needs r >= 2 (P_{r-2,s} must exist)");
  check_rs(r, s, d);
  const Whitened<Scalar> w = whiten(sigma, chi, chibar);
  if (!gamma_cone_member(w.a, r + s - 1) || !gamma_cone_member(w.b, r + s - 1))
    throw PreconditionError("newton_maclaurin_check: chi, chibar must lie in Gamma_{r+s-1}");
  const auto tab = mixed_table_whitened(w.a, w.b, false);
  InequalityGap<Scalar> g;
  using std::abs;
  g.lhs = tab.p(r - 1, s) * tab.p(r - 1, s);
  g.rhs = Scalar(newton_maclaurin_constant(n, r, s)) * tab.p(r, s) * tab.p(r - 2, s);
  g.gap = g.lhs - g.rhs;
  g.scale = abs(g.lhs) + abs(g.rhs);
  g.equality = abs(g.gap) <= Scalar(1e-9) * g.scale;
  return g;
}

template <typename Scalar>
bool in_cone_or_negative(const Matrix<Scalar>& w, int k) {
  return gamma_cone_member(w, k) || gamma_cone_member(Matrix<Scalar>(-w), k);
}

// sigma_(k)(W1,W2,W3..)^2 >= sigma_(k)(W1,W1,W3..) sigma_(k)(W2,W2,W3..).
template <typename Scalar>
InequalityGap<Scalar> garding_check(const std::vector<Matrix<Scalar>>& w) {
  const int k = static_cast<int>(w.size());
  if (k < 2) throw DomainError("garding_check: needs at least two matrices");
  for (const auto& m : w)
    if (!in_cone_or_negative(symmetrized(m), k))
      throw PreconditionError("garding_check: every W^i must lie in Gamma_k or -Gamma_k");
  std::vector<Matrix<Scalar>> mixed = w, first = w, second = w;
  first[1] = w[0];
  second[0] = w[1];
  InequalityGap<Scalar> g;
  using std::abs;
  const Scalar m12 = polarized_sigma(mixed, k);
  g.lhs = m12 * m12;
  g.rhs = polarized_sigma(first, k) * polarized_sigma(second, k);
  g.gap = g.lhs - g.rhs;
  g.scale = abs(g.lhs) + abs(g.rhs);
  g.equality = abs(g.gap) <= Scalar(1e-9) * g.scale;
  return g;
}

enum class ChibarCone { positive, negative };

template <typename Scalar>
struct RatioBoundReport {
  Scalar hypothesis_residual = 0;  // chibar T(0,s) chi / (P_{0,s} P_{1,0}) - s/(n-1)
  Scalar conclusion_residual = 0;  // P_{r-1,s}/P_{r,s} - (r+s)/(n-(r+s)) (n-1)/tr chi
  bool hypothesis_holds = false;
  bool conclusion_holds = false;
  bool implication_holds = false;
};

template <typename Scalar>
RatioBoundReport<Scalar> ratio_bound_check(const Matrix<Scalar>& sigma, const Matrix<Scalar>& chi,
                                    const Matrix<Scalar>& chibar, int r, int s, int n,
                                    ChibarCone cone = ChibarCone::positive, double tol = 1e-10) {
  const Eigen::Index d = sigma.rows();
  if (n != d + 1) throw DomainError("ratio_bound_check: n must equal dim + 1");
  if (r < 1) throw DomainError("ratio_bound_check: needs r >= 1");
  check_rs(r, s, d);
  const Whitened<Scalar> w = whiten(sigma, chi, chibar);
  const Matrix<Scalar> bcone = cone == ChibarCone::positive ? w.b : Matrix<Scalar>(-w.b);
  if (!gamma_cone_member(w.a, r + s) || !gamma_cone_member(bcone, r + s))
    throw PreconditionError("ratio_bound_check: cone hypothesis on chi, chibar violated");
  const auto tab = mixed_table_whitened(w.a, w.b, true);
  const Scalar trchi = w.a.trace();
  RatioBoundReport<Scalar> out;
  const Scalar contraction = (w.b * tab.tbar(0, s) * w.a).trace();
  out.hypothesis_residual =
      contraction / (tab.p(0, s) * tab.p(1, 0)) - Scalar(s) / Scalar(n - 1);
  out.conclusion_residual = tab.p(r - 1, s) / tab.p(r, s) -
                            Scalar(r + s) / Scalar(n - (r + s)) * Scalar(n - 1) / trchi;
  out.hypothesis_holds = out.hypothesis_residual >= Scalar(-tol);
  out.conclusion_holds = out.conclusion_residual >= Scalar(-tol);
  out.implication_holds = !out.hypothesis_holds || out.conclusion_holds;
  return out;
}

}  // namespace codim2::symfunc
