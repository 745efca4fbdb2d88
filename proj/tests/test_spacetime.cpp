#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "codim2/spacetime.hpp"

using namespace codim2;
using namespace codim2::spacetime;

namespace {

StaticParameters params(Family f, int n = 3, double m = 0.0, double kappa = 0.0) {
  StaticParameters p;
  p.family = f;
  p.n = n;
  p.m = m;
  p.kappa = kappa;
  return p;
}

Vec random_spherical_point(int n, double rlo, double rhi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec x(n + 1);
  x(0) = 10.0 * (u(rng) - 0.5);
  x(1) = rlo + (rhi - rlo) * u(rng);
  for (int i = 2; i <= n; ++i) x(i) = (i == n) ? 2 * M_PI * u(rng) : 0.3 + (M_PI - 0.6) * u(rng);
  return x;
}

Vec random_cartesian_point(int n, double rlo, double rhi, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec x(n + 1);
  x(0) = 10.0 * (u(rng) - 0.5);
  Vec dir(n);
  for (int i = 0; i < n; ++i) dir(i) = g(rng);
  x.tail(n) = (rlo + (rhi - rlo) * u(rng)) * dir.normalized();
  return x;
}

double max_abs_diff(const Tensor4& a, const Tensor4& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

// Largest violation of antisymmetry, pair symmetry and the first Bianchi identity.
double symmetry_defect(const Tensor4& R) {
  const int N = R.dim();
  double m = 0.0;
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b)
      for (int c = 0; c < N; ++c)
        for (int d = 0; d < N; ++d) {
          m = std::max(m, std::abs(R(a, b, c, d) + R(b, a, c, d)));
          m = std::max(m, std::abs(R(a, b, c, d) + R(a, b, d, c)));
          m = std::max(m, std::abs(R(a, b, c, d) - R(c, d, a, b)));
          m = std::max(m, std::abs(R(a, b, c, d) + R(a, c, d, b) + R(a, d, b, c)));
        }
  return m;
}

}  // namespace

TEST_CASE("warp values and horizon handling") {
  StaticWarp s(params(Family::schwarzschild, 3, 1.0));
  CHECK(s(4.0).F == doctest::Approx(0.5));
  CHECK(s.horizon_radius() == doctest::Approx(2.0));
  CHECK_THROWS_AS(s.check_radius(2.0), DomainError);
  CHECK_NOTHROW(s.check_radius(2.001));
  StaticWarp ads(params(Family::antidesitter, 3, 0.0, -0.1));
  CHECK(ads.cosmological_radius() == doctest::Approx(1.0 / std::sqrt(0.1)));
  CHECK_THROWS_AS(ads.check_radius(3.2), DomainError);
  CHECK_THROWS_AS(family_from_name("kerr"), ConfigError);
  CHECK(family_from_name("custom-f") == Family::custom_f);

  // analytic F', F'' against differences
  StaticParameters p = params(Family::custom_f, 3, 0.3, 0.05);
  p.bump_amplitude = 0.2;
  StaticWarp w(p);
  const double r = 1.1, h = 1e-4;
  CHECK(w(r).dF == doctest::Approx((w(r + h).F - w(r - h).F) / (2 * h)).epsilon(1e-7));
  CHECK(w(r).ddF == doctest::Approx((w(r + h).dF - w(r - h).dF) / (2 * h)).epsilon(1e-7));
}

TEST_CASE("analytic metric derivatives agree with differences") {
  std::mt19937_64 rng(3);
  StaticParameters p = params(Family::schwarzschild, 4, 1.0);
  StaticSpherical sph(p);
  StaticCartesian cart(p);
  EddingtonFinkelstein ef(p);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec xs = random_spherical_point(4, 2.5, 10.0, rng);
    const Vec xc = random_cartesian_point(4, 2.5, 10.0, rng);
    for (auto [g, x] : {std::pair<const MetricProvider*, Vec>{&sph, xs}, {&cart, xc}, {&ef, xs}}) {
      const auto exact = g->metric_derivative(x);
      const auto fd = g->MetricProvider::metric_derivative(x);
      for (std::size_t k = 0; k < exact.size(); ++k) CHECK((exact[k] - fd[k]).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("fast n = 3 Cartesian Christoffels") {
  std::mt19937_64 rng(4);
  StaticCartesian g(params(Family::schwarzschild, 3, 0.7));
  for (int trial = 0; trial < 20; ++trial) {
    const Vec x = random_cartesian_point(3, 2.0, 9.0, rng);
    const Christoffel G = g.christoffel(x);
    std::array<Eigen::Matrix4d, 4> fast;
    g.christoffel4(Eigen::Vector4d(x), fast);
    CHECK((g.metric4(Eigen::Vector4d(x)) - g.metric(x)).cwiseAbs().maxCoeff() < 1e-14);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        for (int c = 0; c < 4; ++c) CHECK(std::abs(fast[a](b, c) - G(a, b, c)) < 1e-12);
  }
}

TEST_CASE("flat space has vanishing curvature") {
  std::mt19937_64 rng(5);
  StaticSpherical g(params(Family::minkowski));
  for (int trial = 0; trial < 10; ++trial)
    CHECK(g.riemann(random_spherical_point(3, 0.5, 5.0, rng)).max_abs() < 1e-10);
}

TEST_CASE("F = 1 + kappa r^2 has constant curvature -kappa") {
  // R_abcd = K (g_ac g_bd - g_ad g_bc) with K = -kappa.
  std::mt19937_64 rng(6);
  for (double kappa : {0.1, -0.1}) {
    StaticCartesian g(params(kappa > 0 ? Family::desitter : Family::antidesitter, 3, 0.0, kappa));
    for (int trial = 0; trial < 20; ++trial) {
      const Vec x = random_cartesian_point(3, 0.3, 2.5, rng);
      const Mat gm = g.metric(x);
      const Tensor4 R = g.riemann(x);
      Tensor4 oracle(4);
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
          for (int c = 0; c < 4; ++c)
            for (int d = 0; d < 4; ++d)
              oracle(a, b, c, d) = -kappa * (gm(a, c) * gm(b, d) - gm(a, d) * gm(b, c));
      CHECK(max_abs_diff(R, oracle) < 1e-7 * oracle.max_abs());
    }
  }
}

TEST_CASE("closed-form Schwarzschild curvature matches differenced curvature") {
  std::mt19937_64 rng(7);
  for (int n : {3, 4}) {
    StaticSpherical g(params(Family::schwarzschild, n, 1.0));
    const double r0 = g.warp().horizon_radius();
    for (int trial = 0; trial < 40; ++trial) {
      const Vec x = random_spherical_point(n, 1.25 * r0, 10.0 * r0, rng);
      const Tensor4 closed = schwarzschild_riemann_closed(x, n, 1.0);
      const Tensor4 fd = g.riemann(x);
      CHECK(max_abs_diff(closed, fd) < 1e-6 * closed.max_abs());
      CHECK(symmetry_defect(fd) < 1e-8 * fd.max_abs());
      CHECK(symmetry_defect(closed) < 1e-12 * closed.max_abs());
    }
  }
  CHECK(schwarzschild_riemann_closed(Vec::Constant(4, 1.0), 3, 0.0).max_abs() == 0.0);
  CHECK_THROWS_AS(schwarzschild_riemann_closed(Vec::Constant(4, 1.0), 3, 1.0), DomainError);
}

TEST_CASE("closed form in the Cartesian chart") {
  std::mt19937_64 rng(8);
  StaticCartesian g(params(Family::schwarzschild, 3, 1.0));
  const CKYForm q = radial_cky_cartesian(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec x = random_cartesian_point(3, 2.5, 15.0, rng);
    const Tensor4 closed = riemann_from_cky(g.metric(x), q.components(x), x.tail(3).norm(), 3, 1.0);
    CHECK(max_abs_diff(closed, g.riemann(x)) < 1e-6 * closed.max_abs());
  }
}

TEST_CASE("static frame components of the Schwarzschild curvature") {
  for (int n : {3, 4, 5}) {
    const double m = 0.8;
    StaticSpherical g(params(Family::schwarzschild, n, m));
    Vec x = Vec::Constant(n + 1, 1.1);
    x(1) = 3.0;
    const double r = x(1), rn = std::pow(r, n);
    const Tensor4 R = schwarzschild_riemann_closed(x, n, m);
    const Mat E = static_frame(g, x);
    const Vec Et = E.col(0), Er = E.col(1);
    CHECK(contract(R, Et, Er, Et, Er) == doctest::Approx(-m * (n - 1) * (n - 2) / rn));
    for (int i = 2; i <= n; ++i) {
      const Vec Ei = E.col(i);
      CHECK(contract(R, Et, Ei, Et, Ei) == doctest::Approx(m * (n - 2) / rn));
      CHECK(contract(R, Er, Ei, Er, Ei) == doctest::Approx(-m * (n - 2) / rn));
      CHECK(std::abs(contract(R, Et, Ei, Er, Ei)) < 1e-14);
      for (int j = 2; j <= n; ++j) {
        if (j == i) continue;
        const Vec Ej = E.col(j);
        CHECK(contract(R, Ei, Ej, Ei, Ej) == doctest::Approx(2 * m / rn));
        CHECK(std::abs(contract(R, Et, Ei, Et, Ej)) < 1e-14);
      }
    }
    const Mat gm = g.metric(x), Q = radial_cky_spherical(n).components(x), Q2 = q_squared(gm, Q);
    CHECK(Er.dot(Q * Et) == doctest::Approx(r));
    CHECK(Et.dot(Q2 * Et) == doctest::Approx(-r * r));
    CHECK(Er.dot(Q2 * Er) == doctest::Approx(r * r));
    Mat eta = Mat::Identity(n + 1, n + 1);
    eta(0, 0) = -1.0;
    CHECK((E.transpose() * gm * E - eta).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("divergence of Q is -n d/dt") {
  std::mt19937_64 rng(9);
  for (int n : {3, 4}) {
    for (auto fam : {Family::minkowski, Family::desitter, Family::schwarzschild}) {
      StaticParameters p = params(fam, n, fam == Family::schwarzschild ? 1.0 : 0.0, fam == Family::desitter ? 0.1 : 0.0);
      StaticSpherical sph(p);
      StaticCartesian cart(p);
      const double rlo = fam == Family::schwarzschild ? 1.5 * sph.warp().horizon_radius() : 0.5;
      const Vec xs = random_spherical_point(n, rlo, 8.0, rng);
      const Vec xc = random_cartesian_point(n, rlo, 8.0, rng);
      Vec expect = Vec::Zero(n + 1);
      expect(0) = -n;
      CHECK((div_Q(sph, radial_cky_spherical(n), xs) - expect).norm() < 1e-9);
      CHECK((div_Q(cart, radial_cky_cartesian(n), xc) - expect).norm() < 1e-9);
      const Residual kd = killing_defect(sph, radial_cky_spherical(n), xs);
      CHECK(kd.value <= 1e-10 * std::max(1.0, kd.scale));
    }
  }
}

TEST_CASE("Q = r dr ^ dt solves the conformal Killing-Yano equation") {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> gauss;
  struct Case {
    Family f;
    double m, kappa, rlo, rhi;
  };
  for (const Case& c : {Case{Family::minkowski, 0, 0, 0.5, 20}, Case{Family::desitter, 0, 0.1, 0.5, 20},
                        Case{Family::antidesitter, 0, -0.1, 0.5, 3.0}, Case{Family::schwarzschild, 1, 0, 2.5, 20}}) {
    StaticSpherical g(params(c.f, 3, c.m, c.kappa));
    const CKYForm q = radial_cky_spherical(3);
    for (int trial = 0; trial < 50; ++trial) {
      const Vec x = random_spherical_point(3, c.rlo, c.rhi, rng);
      const Residual basis = cky_residual_basis(g, q, x);
      CHECK(basis.value <= 1e-8 * basis.scale);
      Vec X(4), Y(4), Z(4);
      for (int i = 0; i < 4; ++i) X(i) = gauss(rng), Y(i) = gauss(rng), Z(i) = gauss(rng);
      const Residual res = cky_residual(g, q, x, X, Y, Z);
      CHECK(res.value <= 1e-8 * res.scale);
    }
  }
}

TEST_CASE("wrong radial weight is not conformal Killing-Yano") {
  StaticSpherical g(params(Family::schwarzschild, 3, 1.0));
  const CKYForm wrong{[](const Vec&) {
    Mat q = Mat::Zero(4, 4);
    q(1, 0) = 1.0;
    q(0, 1) = -1.0;
    return q;
  }};
  Vec x(4);
  x << 0.0, 5.0, 1.0, 0.5;
  const Residual r = cky_residual_basis(g, wrong, x);
  CHECK(r.relative() > 0.1);
}

TEST_CASE("Eddington-Finkelstein chart") {
  std::mt19937_64 rng(11);
  StaticParameters p = params(Family::schwarzschild, 3, 1.0);
  EddingtonFinkelstein g(p);
  const CKYForm q = radial_cky_eddington_finkelstein(3);
  for (int trial = 0; trial < 30; ++trial) {
    // includes points inside the horizon, where the chart stays regular
    const Vec x = random_spherical_point(3, 0.5, 20.0, rng);
    const Residual r = cky_residual_basis(g, q, x);
    CHECK(r.value <= 1e-8 * r.scale);
  }
}

TEST_CASE("twistor form of the equation") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> gauss;
  StaticSpherical mink(params(Family::minkowski));
  StaticSpherical schw(params(Family::schwarzschild, 3, 1.0));
  const CKYForm q = radial_cky_spherical(3);
  for (int trial = 0; trial < 20; ++trial) {
    Vec X(4);
    for (int i = 0; i < 4; ++i) X(i) = gauss(rng);
    const Vec x = random_spherical_point(3, 2.5, 10.0, rng);
    CHECK(twistor_residual(mink, q, x, X).value < 1e-9 * std::max(1.0, X.norm() * x(1)));
    const Residual r = twistor_residual(schw, q, x, X);
    CHECK(r.value <= 1e-8 * r.scale);
  }
}

TEST_CASE("warped product R^2(y) sigma(x) + g(y) carries a volume-type form") {
  // 2 + 2 blocks, R(y) = y1.
  auto sigma = [](const Vec& x) {
    Mat s(2, 2);
    s << 1.0 + 0.3 * x(0) * x(0), 0.2 * std::sin(x(1)), 0.2 * std::sin(x(1)), 2.0 + std::cos(x(0));
    return s;
  };
  auto gy = [](const Vec& y) {
    Mat s(2, 2);
    s << 1.0 + 0.1 * y(1) * y(1), 0.3, 0.3, 1.5 + 0.2 * y(0);
    return s;
  };
  FunctionMetric G(4, [&](const Vec& p) {
    Mat m = Mat::Zero(4, 4);
    const double R = p(2);
    m.topLeftCorner(2, 2) = R * R * sigma(p.head(2));
    m.bottomRightCorner(2, 2) = gy(p.tail(2));
    return m;
  });
  const CKYForm Q{[&](const Vec& p) {
    Mat q = Mat::Zero(4, 4);
    const double v = std::pow(p(2), 3) * std::sqrt(sigma(p.head(2)).determinant());
    q(0, 1) = v;
    q(1, 0) = -v;
    return q;
  }};
  const CKYForm dual = hodge_dual(G, Q);
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 10; ++trial) {
    Vec p(4), X(4);
    for (int i = 0; i < 4; ++i) p(i) = u(rng), X(i) = gauss(rng);
    const Residual tq = twistor_residual(G, Q, p, X);
    CHECK(tq.value <= 1e-8 * tq.scale);
    const Residual td = twistor_residual(G, dual, p, X);
    CHECK(td.value <= 1e-8 * td.scale);
    // *Q = R(y) sqrt(det g) dy1 ^ dy2
    const Mat d = dual.components(p);
    CHECK(d(2, 3) == doctest::Approx(p(2) * std::sqrt(gy(p.tail(2)).determinant())).epsilon(1e-12));
    CHECK(d.topLeftCorner(2, 4).cwiseAbs().maxCoeff() < 1e-12);
    // the two formulations agree
    const Residual cq = cky_residual_basis(G, Q, p);
    CHECK(cq.value <= 1e-7 * cq.scale);
  }
}

TEST_CASE("twistor and CKY residuals agree on generic forms") {
  std::mt19937_64 rng(14);
  std::normal_distribution<double> gauss;
  StaticSpherical g(params(Family::schwarzschild, 3, 1.0));
  for (int trial = 0; trial < 10; ++trial) {
    Mat A = Mat::Zero(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) A(i, j) = gauss(rng), A(j, i) = -A(i, j);
    const CKYForm q{[A](const Vec& x) { return Mat(A * x(1) * x(1)); }};
    const Vec x = random_spherical_point(3, 3.0, 8.0, rng);
    double worst_twistor = 0.0;
    for (int k = 0; k < 4; ++k) worst_twistor = std::max(worst_twistor, twistor_residual(g, q, x, Vec::Unit(4, k)).relative());
    CHECK(worst_twistor > 1e-3);
    CHECK(cky_residual_basis(g, q, x).relative() > 1e-3);
  }
}

TEST_CASE("Hodge dual of Q in Minkowski") {
  StaticSpherical g(params(Family::minkowski));
  Vec x(4);
  x << 0.0, 2.0, 0.7, 0.3;
  const Mat d = hodge_dual(g, radial_cky_spherical(3)).components(x);
  // *(r dr ^ dt) = +/- r^3 sin(theta) dtheta ^ dphi
  CHECK(std::abs(d(2, 3)) == doctest::Approx(8.0 * std::sin(0.7)));
  CHECK(d(2, 3) == doctest::Approx(-d(3, 2)));
}

TEST_CASE("null convergence samples") {
  std::mt19937_64 rng(15);
  std::normal_distribution<double> gauss;
  // Ric(L, L) for L = (1/f) d_t + v, v unit at angle alpha from the radial direction:
  //   sin^2(alpha) [F''/2 + (n-1) F'/(2r) + ((n-2)(1-F) - r F')/r^2].
  auto oracle = [](const WarpValue& w, double r, int n, double sin2) {
    return sin2 * (w.ddF / 2 + (n - 1) * w.dF / (2 * r) + ((n - 2) * (1 - w.F) - r * w.dF) / (r * r));
  };
  StaticParameters bump = params(Family::custom_f, 3, 0.0, 0.0);
  bump.bump_amplitude = 0.3;
  bump.bump_center = 3.0;
  bump.bump_width = 0.4;
  bool saw_negative = false;
  for (const StaticParameters& p :
       {params(Family::schwarzschild, 3, 1.0), params(Family::desitter, 3, 0.0, 0.1), bump,
        params(Family::schwarzschild, 4, 1.0)}) {
    StaticCartesian g(p);
    const int n = p.n;
    for (int trial = 0; trial < 20; ++trial) {
      const Vec x = random_cartesian_point(n, 2.2, 4.0, rng);
      const double r = x.tail(n).norm();
      const Mat gm = g.metric(x);
      Vec v = Vec::Zero(n + 1);
      for (int i = 1; i <= n; ++i) v(i) = gauss(rng);
      v /= std::sqrt(v.dot(gm * v));
      const double cos_a = v.tail(n).dot(x.tail(n)) / r / g.warp().f(r);
      const double expect = oracle(g.warp()(r), r, n, 1.0 - cos_a * cos_a);
      const double got = null_convergence_sample(g, x, v);
      CHECK(got == doctest::Approx(expect).epsilon(1e-6).scale(1.0));
      if (p.family != Family::custom_f) CHECK(got >= -1e-7);
      if (got < -1e-3) saw_negative = true;
    }
  }
  CHECK(saw_negative);
}
