#pragma once

// Static spherically symmetric spacetimes
//   g = -F(r) dt^2 + dr^2 / F(r) + r^2 g_{S^{n-1}},   F = f^2,
// in three charts, the two-form Q = r dr ^ dt and its conformal Killing-Yano
// equations, and Riemann tensors (finite-difference and closed form).
//
// Curvature convention: R_{abcd} = <R(e_c, e_d) e_b, e_a> with
// R(X,Y) = D_X D_Y - D_Y D_X - D_[X,Y]. In an orthonormal static frame this gives
// R(E_t, E_r, E_t, E_r) = -m (n-1)(n-2) / r^n for Schwarzschild.

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "codim2/errors.hpp"

namespace codim2::spacetime {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Dense N^k array, last index fastest.
template <int Rank>
class TensorN {
 public:
  TensorN() = default;
  explicit TensorN(int dim) : dim_(dim), data_(ipow(dim, Rank), 0.0) {}
  int dim() const { return dim_; }
  template <typename... I>
  double& operator()(I... idx) {
    static_assert(sizeof...(I) == Rank);
    return data_[flat(idx...)];
  }
  template <typename... I>
  double operator()(I... idx) const {
    static_assert(sizeof...(I) == Rank);
    return data_[flat(idx...)];
  }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }
  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  static std::size_t ipow(int b, int e) {
    std::size_t p = 1;
    for (int i = 0; i < e; ++i) p *= static_cast<std::size_t>(b);
    return p;
  }
  template <typename... I>
  std::size_t flat(I... idx) const {
    std::size_t f = 0;
    ((f = f * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(idx)), ...);
    return f;
  }
  int dim_ = 0;
  std::vector<double> data_;
};

using Tensor3 = TensorN<3>;
using Tensor4 = TensorN<4>;

// Gamma^a_{bc} stored as (a, b, c).
using Christoffel = Tensor3;

class MetricProvider {
 public:
  virtual ~MetricProvider() = default;
  virtual int dim() const = 0;
  virtual Mat metric(const Vec& x) const = 0;
  // d_mu g, one matrix per coordinate. Default: 4th-order central differences.
  virtual std::vector<Mat> metric_derivative(const Vec& x) const;
  // Throws DomainError outside the chart or beyond a horizon.
  virtual void check_domain(const Vec& /*x*/) const {}
  // Step scale for finite differences of Christoffels.
  virtual double length_scale(const Vec& /*x*/) const { return 1.0; }

  Christoffel christoffel(const Vec& x) const;
  // R^a_{bcd} and R_{abcd}, from 4th-order differences of the Christoffels.
  Tensor4 riemann_up(const Vec& x) const;
  Tensor4 riemann(const Vec& x) const;
  Mat ricci(const Vec& x) const;
  double fd_step(const Vec& x) const { return 1e-4 * std::max(1.0, length_scale(x)); }
  // Step for differences along coordinate k; angles override this with an unscaled step.
  virtual double coordinate_step(const Vec& x, int /*k*/) const { return fd_step(x); }
};

enum class Family { minkowski, desitter, antidesitter, schwarzschild, custom_f };

std::string family_name(Family f);
Family family_from_name(const std::string& name);

// F = f^2 with F' and F''.
struct WarpValue {
  double F, dF, ddF;
};

struct StaticParameters {
  Family family = Family::minkowski;
  int n = 3;           // spatial dimension; the spacetime has dimension n + 1
  double m = 0.0;      // Schwarzschild mass
  double kappa = 0.0;  // F = 1 + kappa r^2 for the (anti-)de Sitter labels
  // custom-f: F(r) = 1 + kappa r^2 - 2m / r^{n-2} + bump_amplitude exp(-((r - bump_center)/bump_width)^2)
  double bump_amplitude = 0.0;
  double bump_center = 1.0;
  double bump_width = 0.25;
};

// The warping function of a static family, with horizon handling.
class StaticWarp {
 public:
  explicit StaticWarp(StaticParameters p);
  const StaticParameters& params() const { return p_; }
  int n() const { return p_.n; }
  WarpValue operator()(double r) const;
  double f(double r) const;
  // Throws DomainError for r <= 0, inside r0 (1 + 1e-6) for Schwarzschild, beyond the
  // cosmological radius for kappa < 0, or wherever F <= 0.
  void check_radius(double r) const;
  double horizon_radius() const;     // Schwarzschild r0 = (2m)^{1/(n-2)}, else 0
  double cosmological_radius() const;  // 1/sqrt(-kappa) for kappa < 0, else +inf

 private:
  StaticParameters p_;
};

// (t, r, theta_1 .. theta_{n-1}) with g_S = d theta_1^2 + sin^2 theta_1 d theta_2^2 + ...
class StaticSpherical : public MetricProvider {
 public:
  explicit StaticSpherical(StaticParameters p) : warp_(p) {}
  int dim() const override { return warp_.n() + 1; }
  Mat metric(const Vec& x) const override;
  std::vector<Mat> metric_derivative(const Vec& x) const override;
  void check_domain(const Vec& x) const override;
  double length_scale(const Vec& x) const override { return x(1); }
  double coordinate_step(const Vec& x, int k) const override { return k >= 2 ? 1e-4 : fd_step(x); }
  const StaticWarp& warp() const { return warp_; }

 private:
  StaticWarp warp_;
};

// (t, x_1 .. x_n) with r = |x|: g_ij = delta_ij + (1/F - 1) x_i x_j / r^2.
class StaticCartesian : public MetricProvider {
 public:
  explicit StaticCartesian(StaticParameters p) : warp_(p) {}
  int dim() const override { return warp_.n() + 1; }
  Mat metric(const Vec& x) const override;
  std::vector<Mat> metric_derivative(const Vec& x) const override;
  void check_domain(const Vec& x) const override;
  double length_scale(const Vec& x) const override { return x.tail(x.size() - 1).norm(); }
  const StaticWarp& warp() const { return warp_; }
  // n = 3 fast paths: metric and Gamma^a_{bc} (stored gamma[a](b, c)) at x.
  Eigen::Matrix4d metric4(const Eigen::Vector4d& x) const;
  void christoffel4(const Eigen::Vector4d& x, std::array<Eigen::Matrix4d, 4>& gamma) const;

 private:
  StaticWarp warp_;
};

// Ingoing Eddington-Finkelstein chart (v, r, theta_1 ..): g = -F dv^2 + 2 dv dr + r^2 g_S.
class EddingtonFinkelstein : public MetricProvider {
 public:
  explicit EddingtonFinkelstein(StaticParameters p) : warp_(p) {}
  int dim() const override { return warp_.n() + 1; }
  Mat metric(const Vec& x) const override;
  std::vector<Mat> metric_derivative(const Vec& x) const override;
  void check_domain(const Vec& x) const override;
  double length_scale(const Vec& x) const override { return x(1); }
  double coordinate_step(const Vec& x, int k) const override { return k >= 2 ? 1e-4 : fd_step(x); }

 private:
  StaticWarp warp_;
};

// A metric given by a closure; derivatives by finite differences.
class FunctionMetric : public MetricProvider {
 public:
  FunctionMetric(int dim, std::function<Mat(const Vec&)> g) : dim_(dim), g_(std::move(g)) {}
  int dim() const override { return dim_; }
  Mat metric(const Vec& x) const override { return g_(x); }

 private:
  int dim_;
  std::function<Mat(const Vec&)> g_;
};

// A two-form with lower-index components Q_{ab}(x).
struct CKYForm {
  std::function<Mat(const Vec&)> components;
};

// Q = r dr ^ dt in each built-in chart (Q(d_r, d_t) = r).
CKYForm radial_cky_spherical(int n);
CKYForm radial_cky_cartesian(int n);
CKYForm radial_cky_eddington_finkelstein(int n);
// Hodge dual of a two-form on a four-dimensional metric, as a new form.
CKYForm hodge_dual(const MetricProvider& g, const CKYForm& q);
Mat hodge_dual_components(const Mat& g, const Mat& q);

// (Q^2)_{ab} = Q_a^c Q_{cb}.
Mat q_squared(const Mat& g, const Mat& q);

// (D_mu Q)_{ab} stored as (mu, a, b); component derivatives by 4th-order differences.
Tensor3 covariant_derivative(const MetricProvider& g, const CKYForm& q, const Vec& x);

// xi^a with xi_a = D^b Q_{ba}.
Vec div_Q(const MetricProvider& g, const CKYForm& q, const Vec& x);

struct Residual {
  double value = 0.0;  // absolute defect
  double scale = 0.0;  // sum of absolute sizes of the terms entering the defect
  double relative() const { return value / std::max(scale, 1e-300); }
};

// |(D_X Q)(Y,Z) + (D_Y Q)(X,Z) - (2/n)(<X,Y> xi(Z) - <X,Z> xi(Y)/2 - <Y,Z> xi(X)/2)|
// with n = dim - 1 and xi the divergence of Q.
Residual cky_residual(const MetricProvider& g, const CKYForm& q, const Vec& x, const Vec& X,
                      const Vec& Y, const Vec& Z);
// Largest defect over coordinate basis triples, relative to the largest term.
Residual cky_residual_basis(const MetricProvider& g, const CKYForm& q, const Vec& x);

// Defect of D_X Q - (1/3) X _| dQ + (1/(N-1)) X^flat ^ d*Q for a two-form on an
// N-dimensional metric (d*Q = -xi^flat); max-abs over components.
Residual twistor_residual(const MetricProvider& g, const CKYForm& q, const Vec& x, const Vec& X);

// Largest |(L_xi g)_{ab}| for xi = div Q; scale uses max|xi| in place of each xi^c.
Residual killing_defect(const MetricProvider& g, const CKYForm& q, const Vec& x);

// Ric(L, L) with L = (1/f) d_t + v for a unit vector v tangent to the t-slice
// (static charts only: f^2 = -g_tt).
double null_convergence_sample(const MetricProvider& g, const Vec& x, const Vec& v);

// Closed-form Schwarzschild curvature assembled from g, Q and Q^2 at a point of
// radius r in any chart.
Tensor4 riemann_from_cky(const Mat& g, const Mat& q, double r, int n, double m);
// Same, in the static spherical chart at x = (t, r, angles).
Tensor4 schwarzschild_riemann_closed(const Vec& x, int n, double m);

// Orthonormal static frame at x in the spherical chart: columns E_1 .. E_{n-1}
// (angular), E_n = f d_r, E_{n+1} = (1/f) d_t; returned in coordinate order
// (column 0 = E_{n+1}, column 1 = E_n, then angular).
Mat static_frame(const StaticSpherical& g, const Vec& x);

double contract(const Tensor4& r, const Vec& a, const Vec& b, const Vec& c, const Vec& d);

}  // namespace codim2::spacetime
