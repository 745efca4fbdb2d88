#include "codim2/spacetime.hpp"

#include <cmath>
#include <limits>

namespace codim2::spacetime {

namespace {

// 4th-order central difference of a vector-valued function of one coordinate.
template <typename Fn>
auto central4(Fn&& fn, const Vec& x, int k, double h) {
  Vec p = x;
  p(k) = x(k) + h;
  auto f1 = fn(p);
  p(k) = x(k) - h;
  auto fm1 = fn(p);
  p(k) = x(k) + 2 * h;
  auto f2 = fn(p);
  p(k) = x(k) - 2 * h;
  auto fm2 = fn(p);
  return decltype(f1)((fm2 - 8.0 * fm1 + 8.0 * f1 - f2) / (12.0 * h));
}

Mat angular_block(const Vec& x, int n) {
  // diag(r^2, r^2 sin^2 th1, r^2 sin^2 th1 sin^2 th2, ...)
  Mat g = Mat::Zero(n - 1, n - 1);
  double w = x(1) * x(1);
  for (int i = 0; i < n - 1; ++i) {
    g(i, i) = w;
    const double s = std::sin(x(2 + i));
    w *= s * s;
  }
  return g;
}

void check_angles(const Vec& x, int n) {
  for (int i = 0; i + 1 < n - 1; ++i)
    if (std::abs(std::sin(x(2 + i))) < 1e-12)
      throw DomainError("angular coordinate at a coordinate pole");
}

// d/d theta_j of the angular block.
void angular_derivatives(const Vec& x, int n, std::vector<Mat>& dg) {
  const Mat a = angular_block(x, n);
  for (int i = 0; i < n - 1; ++i) {
    dg[1](2 + i, 2 + i) = 2.0 * a(i, i) / x(1);
    for (int j = 0; j < i; ++j) {
      const double th = x(2 + j);
      dg[2 + j](2 + i, 2 + i) = a(i, i) * 2.0 * std::cos(th) / std::sin(th);
    }
  }
}

double four_metric_volume(const Mat& g) { return std::sqrt(std::abs(g.determinant())); }

int levi_civita(int a, int b, int c, int d) {
  const int p[4] = {a, b, c, d};
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      if (p[i] == p[j]) return 0;
  int sign = 1;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      if (p[i] > p[j]) sign = -sign;
  return sign;
}

}  // namespace

std::vector<Mat> MetricProvider::metric_derivative(const Vec& x) const {
  const int N = dim();
  std::vector<Mat> dg(N);
  for (int k = 0; k < N; ++k)
    dg[k] = central4([this](const Vec& p) { return metric(p); }, x, k, coordinate_step(x, k));
  return dg;
}

Christoffel MetricProvider::christoffel(const Vec& x) const {
  const int N = dim();
  const Mat ginv = metric(x).inverse();
  const std::vector<Mat> dg = metric_derivative(x);
  // lowered[d](b, c) = 1/2 (d_b g_dc + d_c g_db - d_d g_bc)
  Christoffel G(N);
  for (int d = 0; d < N; ++d)
    for (int b = 0; b < N; ++b)
      for (int c = 0; c < N; ++c) {
        const double low = 0.5 * (dg[b](d, c) + dg[c](d, b) - dg[d](b, c));
        for (int a = 0; a < N; ++a) G(a, b, c) += ginv(a, d) * low;
      }
  return G;
}

Tensor4 MetricProvider::riemann_up(const Vec& x) const {
  check_domain(x);
  const int N = dim();
  const Christoffel G = christoffel(x);
  // dG[k] holds d_k Gamma^a_{bc}.
  std::vector<Christoffel> dG(N, Christoffel(N));
  for (int k = 0; k < N; ++k) {
    const double h = coordinate_step(x, k);
    std::vector<Christoffel> s;
    for (double off : {-2.0, -1.0, 1.0, 2.0}) {
      Vec p = x;
      p(k) += off * h;
      s.push_back(christoffel(p));
    }
    auto& out = dG[k].data();
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = (s[0].data()[i] - 8.0 * s[1].data()[i] + 8.0 * s[2].data()[i] - s[3].data()[i]) /
               (12.0 * h);
  }
  Tensor4 R(N);
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b)
      for (int c = 0; c < N; ++c)
        for (int d = 0; d < N; ++d) {
          double v = dG[c](a, d, b) - dG[d](a, c, b);
          for (int e = 0; e < N; ++e) v += G(a, c, e) * G(e, d, b) - G(a, d, e) * G(e, c, b);
          R(a, b, c, d) = v;
        }
  return R;
}

Tensor4 MetricProvider::riemann(const Vec& x) const {
  const int N = dim();
  const Mat g = metric(x);
  const Tensor4 Ru = riemann_up(x);
  Tensor4 R(N);
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b)
      for (int c = 0; c < N; ++c)
        for (int d = 0; d < N; ++d) {
          double v = 0.0;
          for (int e = 0; e < N; ++e) v += g(a, e) * Ru(e, b, c, d);
          R(a, b, c, d) = v;
        }
  return R;
}

Mat MetricProvider::ricci(const Vec& x) const {
  const int N = dim();
  const Tensor4 Ru = riemann_up(x);
  Mat Ric = Mat::Zero(N, N);
  for (int b = 0; b < N; ++b)
    for (int d = 0; d < N; ++d)
      for (int a = 0; a < N; ++a) Ric(b, d) += Ru(a, b, a, d);
  return Ric;
}

std::string family_name(Family f) {
  switch (f) {
    case Family::minkowski: return "minkowski";
    case Family::desitter: return "desitter";
    case Family::antidesitter: return "antidesitter";
    case Family::schwarzschild: return "schwarzschild";
    case Family::custom_f: return "custom-f";
  }
  return "unknown";
}

Family family_from_name(const std::string& name) {
  for (Family f : {Family::minkowski, Family::desitter, Family::antidesitter, Family::schwarzschild,
                   Family::custom_f})
    if (family_name(f) == name) return f;
  throw ConfigError("unknown spacetime family '" + name + "'");
}

StaticWarp::StaticWarp(StaticParameters p) : p_(p) {
  if (p_.n < 2) throw DomainError("spatial dimension must be at least 2");
  if (p_.m < 0) throw DomainError("mass must be non-negative");
  if (p_.family == Family::schwarzschild && p_.n < 3)
    throw DomainError("Schwarzschild requires n >= 3");
  if (p_.family == Family::custom_f && p_.bump_width <= 0)
    throw DomainError("bump width must be positive");
}

WarpValue StaticWarp::operator()(double r) const {
  const int n = p_.n;
  switch (p_.family) {
    case Family::minkowski: return {1.0, 0.0, 0.0};
    case Family::desitter:
    case Family::antidesitter: return {1.0 + p_.kappa * r * r, 2.0 * p_.kappa * r, 2.0 * p_.kappa};
    case Family::schwarzschild: {
      const double q = 2.0 * p_.m / std::pow(r, n - 2);
      return {1.0 - q, (n - 2) * q / r, -(n - 2) * (n - 1) * q / (r * r)};
    }
    case Family::custom_f: {
      const double q = n > 2 ? 2.0 * p_.m / std::pow(r, n - 2) : 0.0;
      const double u = (r - p_.bump_center) / p_.bump_width;
      const double b = p_.bump_amplitude * std::exp(-u * u);
      const double w = p_.bump_width;
      return {1.0 + p_.kappa * r * r - q + b, 2.0 * p_.kappa * r + (n - 2) * q / r - 2.0 * u / w * b,
              2.0 * p_.kappa - (n - 2) * (n - 1) * q / (r * r) + (4.0 * u * u - 2.0) / (w * w) * b};
    }
  }
  return {1.0, 0.0, 0.0};
}

double StaticWarp::f(double r) const { return std::sqrt((*this)(r).F); }

double StaticWarp::horizon_radius() const {
  if (p_.m <= 0 || p_.n < 3) return 0.0;
  if (p_.family != Family::schwarzschild && p_.family != Family::custom_f) return 0.0;
  return std::pow(2.0 * p_.m, 1.0 / (p_.n - 2));
}

double StaticWarp::cosmological_radius() const {
  if (p_.kappa < 0 && p_.family != Family::minkowski && p_.family != Family::schwarzschild)
    return 1.0 / std::sqrt(-p_.kappa);
  return std::numeric_limits<double>::infinity();
}

void StaticWarp::check_radius(double r) const {
  if (!(r > 0)) throw DomainError("radius must be positive");
  const double r0 = horizon_radius();
  if (p_.family == Family::schwarzschild && r < r0 * (1.0 + 1e-6))
    throw DomainError("point at or inside the horizon r0 = " + std::to_string(r0));
  if (r > cosmological_radius() * (1.0 - 1e-6))
    throw DomainError("point beyond the cosmological radius");
  if (!((*this)(r).F > 0)) throw DomainError("F(r) <= 0: static chart not defined");
}

Mat StaticSpherical::metric(const Vec& x) const {
  const int n = warp_.n();
  const WarpValue w = warp_(x(1));
  Mat g = Mat::Zero(n + 1, n + 1);
  g(0, 0) = -w.F;
  g(1, 1) = 1.0 / w.F;
  g.bottomRightCorner(n - 1, n - 1) = angular_block(x, n);
  return g;
}

std::vector<Mat> StaticSpherical::metric_derivative(const Vec& x) const {
  const int n = warp_.n();
  const WarpValue w = warp_(x(1));
  std::vector<Mat> dg(n + 1, Mat::Zero(n + 1, n + 1));
  dg[1](0, 0) = -w.dF;
  dg[1](1, 1) = -w.dF / (w.F * w.F);
  angular_derivatives(x, n, dg);
  return dg;
}

void StaticSpherical::check_domain(const Vec& x) const {
  warp_.check_radius(x(1));
  check_angles(x, warp_.n());
}

Mat StaticCartesian::metric(const Vec& x) const {
  const int n = warp_.n();
  const Vec p = x.tail(n);
  const double r = p.norm();
  const double u = 1.0 / warp_(r).F - 1.0;
  Mat g = Mat::Identity(n + 1, n + 1);
  g(0, 0) = -warp_(r).F;
  g.bottomRightCorner(n, n) += u * p * p.transpose() / (r * r);
  return g;
}

std::vector<Mat> StaticCartesian::metric_derivative(const Vec& x) const {
  const int n = warp_.n();
  const Vec p = x.tail(n);
  const double r = p.norm();
  const WarpValue w = warp_(r);
  const double u = 1.0 / w.F - 1.0;
  const double du = -w.dF / (w.F * w.F);
  std::vector<Mat> dg(n + 1, Mat::Zero(n + 1, n + 1));
  for (int k = 0; k < n; ++k) {
    Mat& d = dg[k + 1];
    d(0, 0) = -w.dF * p(k) / r;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double xx = p(i) * p(j) / (r * r);
        d(i + 1, j + 1) = du * p(k) / r * xx +
                          u * (((i == k) * p(j) + (j == k) * p(i)) / (r * r) - 2.0 * xx * p(k) / (r * r));
      }
  }
  return dg;
}

void StaticCartesian::check_domain(const Vec& x) const { warp_.check_radius(x.tail(warp_.n()).norm()); }

Eigen::Matrix4d StaticCartesian::metric4(const Eigen::Vector4d& x) const {
  const Eigen::Vector3d p = x.tail<3>();
  const double r = p.norm();
  const double F = warp_(r).F;
  Eigen::Matrix4d g = Eigen::Matrix4d::Identity();
  g(0, 0) = -F;
  g.bottomRightCorner<3, 3>() += (1.0 / F - 1.0) * p * p.transpose() / (r * r);
  return g;
}

void StaticCartesian::christoffel4(const Eigen::Vector4d& x, std::array<Eigen::Matrix4d, 4>& gamma) const {
  // With nu = x/r and P = I - nu nu^T:
  //   Gamma^t_{ti} = F'/(2F) nu_i,  Gamma^i_{tt} = F F'/2 nu_i,
  //   Gamma^i_{jk} = nu_i (-F'/(2F) nu_j nu_k + (1 - F)/r P_jk).
  const Eigen::Vector3d p = x.tail<3>();
  const double r = p.norm();
  const Eigen::Vector3d nu = p / r;
  const WarpValue w = warp_(r);
  for (auto& g : gamma) g.setZero();
  const double a = w.dF / (2.0 * w.F);
  for (int i = 0; i < 3; ++i) {
    gamma[0](0, i + 1) = gamma[0](i + 1, 0) = a * nu(i);
    gamma[i + 1](0, 0) = 0.5 * w.F * w.dF * nu(i);
  }
  const Eigen::Matrix3d P = Eigen::Matrix3d::Identity() - nu * nu.transpose();
  const Eigen::Matrix3d B = -a * nu * nu.transpose() + (1.0 - w.F) / r * P;
  for (int i = 0; i < 3; ++i) gamma[i + 1].bottomRightCorner<3, 3>() = nu(i) * B;
}

Mat EddingtonFinkelstein::metric(const Vec& x) const {
  const int n = warp_.n();
  Mat g = Mat::Zero(n + 1, n + 1);
  g(0, 0) = -warp_(x(1)).F;
  g(0, 1) = g(1, 0) = 1.0;
  g.bottomRightCorner(n - 1, n - 1) = angular_block(x, n);
  return g;
}

std::vector<Mat> EddingtonFinkelstein::metric_derivative(const Vec& x) const {
  const int n = warp_.n();
  std::vector<Mat> dg(n + 1, Mat::Zero(n + 1, n + 1));
  dg[1](0, 0) = -warp_(x(1)).dF;
  angular_derivatives(x, n, dg);
  return dg;
}

void EddingtonFinkelstein::check_domain(const Vec& x) const {
  if (!(x(1) > 0)) throw DomainError("radius must be positive");
  check_angles(x, warp_.n());
}

CKYForm radial_cky_spherical(int n) {
  return {[n](const Vec& x) {
    Mat q = Mat::Zero(n + 1, n + 1);
    q(1, 0) = x(1);
    q(0, 1) = -x(1);
    return q;
  }};
}

CKYForm radial_cky_eddington_finkelstein(int n) { return radial_cky_spherical(n); }

CKYForm radial_cky_cartesian(int n) {
  return {[n](const Vec& x) {
    Mat q = Mat::Zero(n + 1, n + 1);
    for (int i = 1; i <= n; ++i) {
      q(i, 0) = x(i);
      q(0, i) = -x(i);
    }
    return q;
  }};
}

Mat hodge_dual_components(const Mat& g, const Mat& q) {
  if (g.rows() != 4) throw DomainError("Hodge dual of a two-form implemented for dimension 4");
  const Mat ginv = g.inverse();
  const Mat qup = ginv * q * ginv.transpose();
  const double vol = four_metric_volume(g);
  Mat out = Mat::Zero(4, 4);
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n)
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
          const int e = levi_civita(a, b, m, n);
          if (e) out(m, n) += 0.5 * vol * e * qup(a, b);
        }
  return out;
}

CKYForm hodge_dual(const MetricProvider& g, const CKYForm& q) {
  return {[&g, q](const Vec& x) { return hodge_dual_components(g.metric(x), q.components(x)); }};
}

Mat q_squared(const Mat& g, const Mat& q) { return q * g.inverse() * q; }

Tensor3 covariant_derivative(const MetricProvider& g, const CKYForm& q, const Vec& x) {
  const int N = g.dim();
  const Christoffel G = g.christoffel(x);
  const Mat Q = q.components(x);
  Tensor3 D(N);
  for (int mu = 0; mu < N; ++mu) {
    const Mat dQ = central4(q.components, x, mu, g.coordinate_step(x, mu));
    for (int a = 0; a < N; ++a)
      for (int b = 0; b < N; ++b) {
        double v = dQ(a, b);
        for (int e = 0; e < N; ++e) v -= G(e, mu, a) * Q(e, b) + G(e, mu, b) * Q(a, e);
        D(mu, a, b) = v;
      }
  }
  return D;
}

namespace {

Vec div_lower(const Mat& ginv, const Tensor3& D) {
  const int N = D.dim();
  Vec xi = Vec::Zero(N);
  for (int b = 0; b < N; ++b)
    for (int a = 0; a < N; ++a)
      for (int mu = 0; mu < N; ++mu) xi(b) += ginv(a, mu) * D(mu, a, b);
  return xi;
}

}  // namespace

Vec div_Q(const MetricProvider& g, const CKYForm& q, const Vec& x) {
  const Mat ginv = g.metric(x).inverse();
  return ginv * div_lower(ginv, covariant_derivative(g, q, x));
}

Residual cky_residual(const MetricProvider& g, const CKYForm& q, const Vec& x, const Vec& X, const Vec& Y,
                      const Vec& Z) {
  const int N = g.dim();
  const double n = N - 1;
  const Mat gm = g.metric(x);
  const Tensor3 D = covariant_derivative(g, q, x);
  const Vec xi_low = div_lower(gm.inverse(), D);
  double dx = 0.0, dy = 0.0;
  for (int m = 0; m < N; ++m)
    for (int a = 0; a < N; ++a)
      for (int b = 0; b < N; ++b) {
        dx += X(m) * Y(a) * Z(b) * D(m, a, b);
        dy += Y(m) * X(a) * Z(b) * D(m, a, b);
      }
  const double xy = X.dot(gm * Y), xz = X.dot(gm * Z), yz = Y.dot(gm * Z);
  const double r1 = 2.0 / n * xy * xi_low.dot(Z);
  const double r2 = 1.0 / n * xz * xi_low.dot(Y);
  const double r3 = 1.0 / n * yz * xi_low.dot(X);
  return {std::abs(dx + dy - r1 + r2 + r3),
          std::abs(dx) + std::abs(dy) + std::abs(r1) + std::abs(r2) + std::abs(r3)};
}

Residual cky_residual_basis(const MetricProvider& g, const CKYForm& q, const Vec& x) {
  const int N = g.dim();
  const double n = N - 1;
  const Mat gm = g.metric(x);
  const Tensor3 D = covariant_derivative(g, q, x);
  const Vec xi = div_lower(gm.inverse(), D);
  Residual out;
  for (int m = 0; m < N; ++m)
    for (int a = 0; a < N; ++a)
      for (int b = 0; b < N; ++b) {
        const double t1 = D(m, a, b), t2 = D(a, m, b);
        const double t3 = 2.0 / n * gm(m, a) * xi(b);
        const double t4 = 1.0 / n * gm(m, b) * xi(a);
        const double t5 = 1.0 / n * gm(a, b) * xi(m);
        out.value = std::max(out.value, std::abs(t1 + t2 - t3 + t4 + t5));
        out.scale = std::max({out.scale, std::abs(t1), std::abs(t2), std::abs(t3), std::abs(t4), std::abs(t5)});
      }
  return out;
}

Residual twistor_residual(const MetricProvider& g, const CKYForm& q, const Vec& x, const Vec& X) {
  const int N = g.dim();
  const Mat gm = g.metric(x);
  const Tensor3 D = covariant_derivative(g, q, x);
  const Vec dstar = -div_lower(gm.inverse(), D);
  std::vector<Mat> dQ(N);
  for (int k = 0; k < N; ++k) dQ[k] = central4(q.components, x, k, g.coordinate_step(x, k));
  const Vec Xlow = gm * X;
  Residual out;
  for (int b = 0; b < N; ++b)
    for (int c = 0; c < N; ++c) {
      double t1 = 0.0, t2 = 0.0;
      for (int a = 0; a < N; ++a) {
        t1 += X(a) * D(a, b, c);
        t2 += X(a) * (dQ[a](b, c) + dQ[b](c, a) + dQ[c](a, b));
      }
      t2 /= 3.0;
      const double t3 = (Xlow(b) * dstar(c) - Xlow(c) * dstar(b)) / (N - 1);
      out.value = std::max(out.value, std::abs(t1 - t2 + t3));
      out.scale = std::max({out.scale, std::abs(t1), std::abs(t2), std::abs(t3)});
    }
  return out;
}

Residual killing_defect(const MetricProvider& g, const CKYForm& q, const Vec& x) {
  const int N = g.dim();
  const Mat gm = g.metric(x);
  const std::vector<Mat> dg = g.metric_derivative(x);
  const Vec xi = div_Q(g, q, x);
  std::vector<Vec> dxi(N);
  for (int k = 0; k < N; ++k)
    dxi[k] = central4([&](const Vec& p) { return div_Q(g, q, p); }, x, k, 100.0 * g.coordinate_step(x, k));
  Residual out;
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b) {
      double v = 0.0, s = 0.0;
      for (int c = 0; c < N; ++c) {
        const double t[3] = {xi(c) * dg[c](a, b), gm(c, b) * dxi[a](c), gm(a, c) * dxi[b](c)};
        v += t[0] + t[1] + t[2];
        s += xi.cwiseAbs().maxCoeff() * std::abs(dg[c](a, b)) + std::abs(t[1]) + std::abs(t[2]);
      }
      out.value = std::max(out.value, std::abs(v));
      out.scale = std::max(out.scale, s);
    }
  return out;
}

double null_convergence_sample(const MetricProvider& g, const Vec& x, const Vec& v) {
  const Mat gm = g.metric(x);
  Vec L = v;
  L(0) += 1.0 / std::sqrt(-gm(0, 0));
  return L.dot(g.ricci(x) * L);
}

Tensor4 riemann_from_cky(const Mat& g, const Mat& q, double r, int n, double m) {
  const int N = g.rows();
  const Mat q2 = q_squared(g, q);
  const double A = 2.0 * m / std::pow(r, n);
  const double B = -n * (n - 1) * m / std::pow(r, n + 2);
  const double C = -n * m / std::pow(r, n + 2);
  Tensor4 R(N);
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b)
      for (int c = 0; c < N; ++c)
        for (int d = 0; d < N; ++d) {
          const double gg = g(a, c) * g(b, d) - g(a, d) * g(b, c);
          const double bq = 2.0 / 3.0 * q(a, b) * q(c, d) - 1.0 / 3.0 * q(a, c) * q(d, b) -
                            1.0 / 3.0 * q(a, d) * q(b, c);
          const double gq = g(a, c) * q2(b, d) - g(a, d) * q2(b, c) + g(b, d) * q2(a, c) - g(b, c) * q2(a, d);
          R(a, b, c, d) = A * gg + B * bq + C * gq;
        }
  return R;
}

Tensor4 schwarzschild_riemann_closed(const Vec& x, int n, double m) {
  StaticParameters p;
  p.family = Family::schwarzschild;
  p.n = n;
  p.m = m;
  const StaticSpherical g(p);
  g.check_domain(x);
  return riemann_from_cky(g.metric(x), radial_cky_spherical(n).components(x), x(1), n, m);
}

Mat static_frame(const StaticSpherical& g, const Vec& x) {
  const int N = g.dim();
  const Mat gm = g.metric(x);
  const double f = g.warp().f(x(1));
  Mat E = Mat::Zero(N, N);
  E(0, 0) = 1.0 / f;
  E(1, 1) = f;
  for (int i = 2; i < N; ++i) E(i, i) = 1.0 / std::sqrt(gm(i, i));
  return E;
}

double contract(const Tensor4& r, const Vec& a, const Vec& b, const Vec& c, const Vec& d) {
  const int N = r.dim();
  double s = 0.0;
  for (int i = 0; i < N; ++i) {
    if (a(i) == 0.0) continue;
    for (int j = 0; j < N; ++j) {
      if (b(j) == 0.0) continue;
      for (int k = 0; k < N; ++k) {
        if (c(k) == 0.0) continue;
        for (int l = 0; l < N; ++l) s += a(i) * b(j) * c(k) * d(l) * r(i, j, k, l);
      }
    }
  }
  return s;
}

}  // namespace codim2::spacetime
