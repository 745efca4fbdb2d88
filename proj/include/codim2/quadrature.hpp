#pragma once

// Product quadrature on the parameter sphere: Gauss-Legendre in cos(theta) times
// the periodic trapezoid rule in phi, plus real spherical harmonics.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "codim2/errors.hpp"

namespace codim2::quadrature {

struct GaussLegendre {
  std::vector<double> nodes;    // ascending in (-1, 1)
  std::vector<double> weights;  // sum to 2
};

GaussLegendre gauss_legendre(int n);

class SphereRule {
 public:
  SphereRule(int n_theta, int n_phi);

  int n_theta() const { return n_theta_; }
  int n_phi() const { return n_phi_; }
  std::size_t size() const { return static_cast<std::size_t>(n_theta_) * n_phi_; }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * n_phi_ + j; }
  int theta_index(std::size_t node) const { return static_cast<int>(node / n_phi_); }
  int phi_index(std::size_t node) const { return static_cast<int>(node % n_phi_); }

  // Polar angle ascending from the north pole.
  double theta(int i) const { return theta_[i]; }
  double phi(int j) const { return 2.0 * M_PI * j / n_phi_; }
  // Weight for the round measure sin(theta) dtheta dphi.
  double round_weight(int i) const { return round_weight_[i]; }
  // Weight for the coordinate measure dtheta dphi; multiply by sqrt(det sigma).
  double coordinate_weight(int i) const { return round_weight_[i] / std::sin(theta_[i]); }

 private:
  int n_theta_, n_phi_;
  std::vector<double> theta_, round_weight_;
};

// Sum in a fixed binary-tree order, independent of how the caller partitions work.
double pairwise_sum(std::span<const double> v);

// Integral of a field over a surface: sum_i w_i f_i sqrt(det sigma)_i.
// Throws NumericError naming the first node with a non-finite value.
double integrate(const SphereRule& rule, std::span<const double> field,
                 std::span<const double> area_element);
// Integral against the unit round measure.
double integrate_round(const SphereRule& rule, std::span<const double> field);

// Index of Y_lm in a flat coefficient array: l^2 + l + m.
inline int sh_index(int l, int m) { return l * l + l + m; }
inline int sh_count(int lmax) { return (lmax + 1) * (lmax + 1); }

// All orthonormal real spherical harmonics up to lmax at (theta, phi), written as
// polynomials in (cos theta, sin theta) so that negative or >pi polar angles give the
// smooth continuation through the poles. Y_{l,m>0} ~ cos(m phi), Y_{l,m<0} ~ sin(|m| phi),
// no Condon-Shortley phase. Scalar may be an automatic-differentiation type.
template <typename Scalar>
void real_sph_harm_all(int lmax, const Scalar& theta, const Scalar& phi, std::vector<Scalar>& out) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  out.assign(sh_count(lmax), Scalar(0.0));
  const Scalar x = cos(theta);
  const Scalar s = sin(theta);
  // Normalized associated Legendre functions, column by column in m.
  std::vector<Scalar> pmm_col(lmax + 1);
  Scalar pmm = Scalar(std::sqrt(1.0 / (4.0 * M_PI)));
  for (int m = 0; m <= lmax; ++m) {
    if (m > 0) pmm = pmm * s * std::sqrt((2.0 * m + 1.0) / (2.0 * m));
    Scalar cm = Scalar(1.0), sm = Scalar(0.0);
    if (m > 0) {
      cm = cos(Scalar(double(m)) * phi) * std::sqrt(2.0);
      sm = sin(Scalar(double(m)) * phi) * std::sqrt(2.0);
    }
    Scalar p_prev = pmm;
    Scalar p_cur = x * pmm * std::sqrt(2.0 * m + 3.0);
    for (int l = m; l <= lmax; ++l) {
      Scalar p;
      if (l == m) {
        p = pmm;
      } else if (l == m + 1) {
        p = p_cur;
      } else {
        const double a = std::sqrt((4.0 * l * l - 1.0) / (double(l) * l - double(m) * m));
        const double b = std::sqrt(((l - 1.0) * (l - 1.0) - double(m) * m) / (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
        p = (x * p_cur - p_prev * b) * a;
        p_prev = p_cur;
        p_cur = p;
      }
      if (m == 0) {
        out[sh_index(l, 0)] = p;
      } else {
        out[sh_index(l, m)] = p * cm;
        out[sh_index(l, -m)] = p * sm;
      }
    }
  }
}

template <typename Scalar>
Scalar real_sph_harm(int l, int m, const Scalar& theta, const Scalar& phi) {
  if (l < 0 || m < -l || m > l) throw DomainError("spherical harmonic index out of range");
  std::vector<Scalar> all;
  real_sph_harm_all(l, theta, phi, all);
  return all[sh_index(l, m)];
}

// A truncated real spherical-harmonic series.
struct ShSeries {
  int lmax = 0;
  std::vector<double> coeffs;  // size sh_count(lmax)

  template <typename Scalar>
  Scalar operator()(const Scalar& theta, const Scalar& phi) const {
    std::vector<Scalar> y;
    real_sph_harm_all(lmax, theta, phi, y);
    Scalar v = Scalar(0.0);
    for (int k = 0; k < sh_count(lmax); ++k)
      if (coeffs[k] != 0.0) v = v + y[k] * coeffs[k];
    return v;
  }
};

// Projection of nodal values onto Y_lm, l <= lmax (exact for band-limited data when
// lmax < n_theta and 2 lmax < n_phi).
ShSeries sh_project(const SphereRule& rule, std::span<const double> values, int lmax);

}  // namespace codim2::quadrature
