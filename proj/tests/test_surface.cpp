#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "codim2/surface.hpp"

using namespace codim2;
using namespace codim2::surface;

namespace {

std::shared_ptr<Ambient> ambient(spacetime::Family f, double m = 0.0, double kappa = 0.0) {
  spacetime::StaticParameters p;
  p.family = f;
  p.m = m;
  p.kappa = kappa;
  return std::make_shared<Ambient>(p);
}

std::shared_ptr<Ambient> schwarzschild(double m = 0.5) { return ambient(spacetime::Family::schwarzschild, m); }
std::shared_ptr<Ambient> minkowski() { return ambient(spacetime::Family::minkowski); }

SurfaceOptions grid(int nt) { return {nt, 2 * nt, 0.25}; }

double l2(const SurfaceMesh& mesh, auto&& squared) {
  std::vector<double> v(mesh.size());
  for (std::size_t k = 0; k < mesh.size(); ++k) v[k] = squared(k);
  return l2_norm(mesh, v);
}

double sigma_norm2(const Vec2& v, const Mat2& sigma_inv) { return v.dot(sigma_inv * v); }

// |T|^2 for a covariant 2-tensor with the induced metric.
double tensor_norm2(const Mat2& t, const Mat2& si) { return (si * t * si * t.transpose()).trace(); }

double rate(double coarse, double fine) { return std::log2(coarse / fine); }

}  // namespace

TEST_CASE("round sphere: induced metric and area") {
  const double r0 = 3.0;
  FamilyParams fp;
  fp.r0 = r0;
  auto amb = minkowski();
  const auto mesh = build_surface(amb, family_catalog("sphere", fp, *amb), grid(16));
  CHECK(std::abs(mesh.area() - 4 * M_PI * r0 * r0) < 1e-10 * 4 * M_PI * r0 * r0);
  for (std::size_t k = 0; k < mesh.size(); k += 7) {
    const double s = std::sin(mesh.theta(k));
    CHECK(std::abs(mesh.sigma(k)(0, 0) - r0 * r0) < 1e-12);
    CHECK(std::abs(mesh.sigma(k)(0, 1)) < 1e-12);
    CHECK(std::abs(mesh.sigma(k)(1, 1) - r0 * r0 * s * s) < 1e-12);
  }
}

TEST_CASE("Schwarzschild sphere: null second fundamental forms, torsion and orientation") {
  const double m = 0.5, r0 = 5.0, f = std::sqrt(1.0 - 2.0 * m / r0);
  FamilyParams fp;
  fp.r0 = r0;
  fp.t0 = 1.7;
  auto amb = schwarzschild(m);
  const auto mesh = build_surface(amb, family_catalog("sphere", fp, *amb), grid(24));
  const auto frame = null_frame(mesh);
  for (std::size_t k = 0; k < mesh.size(); ++k) {
    const NodeFrame& n = frame[k];
    const double tol = 1e-6 * r0;
    CHECK((n.chi - (f / r0) * n.sigma).cwiseAbs().maxCoeff() < tol);
    CHECK((n.chibar + (f / r0) * n.sigma).cwiseAbs().maxCoeff() < tol);
    CHECK(n.zeta.norm() < 1e-10);
    // e3 points away from the centre.
    CHECK(n.e3.tail<3>().dot(n.x.tail<3>()) > 0.0);
    CHECK(n.e4(0) > 0.0);
    CHECK(std::abs(n.Q_LLbar - 2.0 * r0) < 1e-10);
    CHECK(std::abs(n.H_L + 2.0 * f / r0) < 1e-6);
    CHECK(std::abs(n.H_Lbar - 2.0 * f / r0) < 1e-6);
    CHECK(std::abs(n.dt_L + f) < 1e-12);
    CHECK(std::abs(n.dt_Lbar + f) < 1e-12);
  }
  const auto& d = frame.diagnostics();
  CHECK(d.null_defect < 1e-12);
  CHECK(d.orthogonality < 1e-12);
  CHECK(d.reconstruction < 1e-10);
}

TEST_CASE("round sphere: Gauss curvature is 1/r^2 and integrates to 4 pi") {
  const double r0 = 5.0;
  FamilyParams fp;
  fp.r0 = r0;
  auto amb = schwarzschild();
  const auto mesh = build_surface(amb, family_catalog("sphere", fp, *amb), grid(24));
  const auto curv = curvature_equations(null_frame(mesh));
  const double err = l2(mesh, [&](std::size_t k) { return std::pow(curv[k].gauss_curvature - 1.0 / (r0 * r0), 2); });
  CHECK(err < 1e-6 / (r0 * r0));
}

TEST_CASE("slice graph: induced metric matches the radial-graph formula") {
  // rho = r0 (1 + sum c Y) in the t = const slice: sigma_ab = rho_a rho_b / F + rho^2 g_round.
  const double m = 0.5, r0 = 5.0;
  FamilyParams fp;
  fp.r0 = r0;
  fp.rho_terms = {{2, 1, 0.05}, {1, 0, 0.03}, {3, -2, 0.02}};
  auto amb = schwarzschild(m);
  const auto mesh = build_surface(amb, family_catalog("slice-graph", fp, *amb), grid(16));
  for (std::size_t k = 0; k < mesh.size(); k += 5) {
    const double th = mesh.theta(k), ph = mesh.phi(k);
    double rho = 1.0, rt = 0.0, rp = 0.0;
    for (const auto& t : fp.rho_terms) {
      const AD y = quadrature::real_sph_harm(t.l, t.m, AD(th, 2, 0), AD(ph, 2, 1));
      rho += t.coeff * y.value();
      rt += t.coeff * y.derivatives()(0);
      rp += t.coeff * y.derivatives()(1);
    }
    rho *= r0;
    rt *= r0;
    rp *= r0;
    const double F = 1.0 - 2.0 * m / rho, s = std::sin(th);
    Mat2 expect;
    expect << rt * rt / F + rho * rho, rt * rp / F, rt * rp / F, rp * rp / F + rho * rho * s * s;
    CHECK((mesh.sigma(k) - expect).cwiseAbs().maxCoeff() < 1e-10 * r0 * r0);
  }
}

TEST_CASE("boosted sphere is spacelike with the area of its rest-frame sphere") {
  const double R = 2.0;
  for (double beta : {0.3, 0.8}) {
    FamilyParams fp;
    fp.r0 = R;
    fp.beta = beta;
    auto amb = minkowski();
    const auto mesh = build_surface(amb, family_catalog("boosted-sphere", fp, *amb), grid(16));
    CHECK(std::abs(mesh.area() / (4 * M_PI * R * R) - 1.0) < 1e-10);
    const auto frame = null_frame(mesh);
    CHECK(frame.diagnostics().null_defect < 1e-12);
    CHECK(frame.diagnostics().orthogonality < 1e-12);
  }
}

TEST_CASE("null frame invariants hold on a generic surface in every base gauge") {
  FamilyParams fp;
  fp.r0 = 5.0;
  fp.rho_terms = {{2, 1, 0.05}, {1, -1, 0.04}};
  fp.time_terms = {{1, 0, 0.3}, {2, 2, 0.2}};
  auto amb = schwarzschild();
  const auto mesh = build_surface(amb, family_catalog("slice-graph", fp, *amb), grid(16));
  for (GaugeKind kind : {GaugeKind::slice, GaugeKind::mean_curvature, GaugeKind::cone}) {
    GaugeSpec gs;
    gs.kind = kind;
    const auto frame = null_frame(mesh, gs);
    CAPTURE(gauge_name(kind));
    CHECK(frame.diagnostics().null_defect < 1e-10);
    CHECK(frame.diagnostics().orthogonality < 1e-10);
    CHECK(frame.diagnostics().reconstruction < 1e-10);
    for (std::size_t k = 0; k < mesh.size(); k += 11) {
      const NodeFrame& n = frame[k];
      // chi and chibar are symmetric and trace to -<H,L>, -<H,Lbar>.
      CHECK(std::abs(n.chi(0, 1) - n.chi(1, 0)) < 1e-12 * n.chi.norm());
      CHECK(std::abs((n.sigma_inv * n.chi).trace() + n.H_L) < 1e-10);
      CHECK(std::abs((n.sigma_inv * n.chibar).trace() + n.H_Lbar) < 1e-10);
      CHECK(n.L(0) > 0.0);
      CHECK(n.Lbar(0) > 0.0);
    }
  }
}

TEST_CASE("gauge names round-trip and unknown names are rejected") {
  for (GaugeKind k : {GaugeKind::slice, GaugeKind::mean_curvature, GaugeKind::cone, GaugeKind::flow})
    CHECK(gauge_from_name(gauge_name(k)) == k);
  CHECK_THROWS_AS(gauge_from_name("bogus"), ConfigError);
  auto amb = minkowski();
  CHECK_THROWS_AS(family_catalog("torus", FamilyParams{}, *amb), ConfigError);
}

TEST_CASE("rescaling L by e^u shifts the torsion by -du and scales chi, chibar") {
  // Independent derivative of u by automatic differentiation of the same series.
  const std::vector<ShTerm> uterms = {{1, 1, 0.3}, {2, 0, -0.25}, {3, 2, 0.1}};
  auto u_ad = [&](double th, double ph) {
    AD v(0.0, Eigen::Vector2d::Zero());
    for (const auto& t : uterms) v += t.coeff * quadrature::real_sph_harm(t.l, t.m, AD(th, 2, 0), AD(ph, 2, 1));
    return v;
  };
  FamilyParams fp;
  fp.r0 = 5.0;
  fp.rho_terms = {{2, 1, 0.05}, {1, -1, 0.04}};
  fp.time_terms = {{1, 0, 0.3}, {2, 2, 0.2}};
  auto amb = schwarzschild();
  const auto mesh = build_surface(amb, family_catalog("slice-graph", fp, *amb), grid(24));
  const auto base = null_frame(mesh);
  GaugeSpec gs;
  gs.extra_log_scale = [&](double th, double ph) { return u_ad(th, ph).value(); };
  const auto scaled = null_frame(mesh, gs);
  const double zeta_err = l2(mesh, [&](std::size_t k) {
    const AD u = u_ad(mesh.theta(k), mesh.phi(k));
    const Vec2 expect = base[k].zeta - u.derivatives();
    return sigma_norm2(scaled[k].zeta - expect, base[k].sigma_inv);
  });
  CHECK(zeta_err < 1e-6);
  // The opposite sign convention would miss by 2 du.
  const double wrong = l2(mesh, [&](std::size_t k) {
    const AD u = u_ad(mesh.theta(k), mesh.phi(k));
    return sigma_norm2(scaled[k].zeta - (base[k].zeta + u.derivatives()), base[k].sigma_inv);
  });
  CHECK(wrong > 1e-2);
  for (std::size_t k = 0; k < mesh.size(); k += 13) {
    const double a = std::exp(u_ad(mesh.theta(k), mesh.phi(k)).value());
    CHECK(std::abs(scaled[k].a - a) < 1e-13 * a);
    CHECK((scaled[k].chi - a * base[k].chi).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((scaled[k].chibar - base[k].chibar / a).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(std::abs(scaled[k].Q_LLbar - base[k].Q_LLbar) < 1e-10);
  }
}

TEST_CASE("Codazzi, Ricci and Gauss equations converge at fourth order") {
  FamilyParams fp;
  fp.r0 = 5.0;
  fp.rho_terms = {{2, 1, 0.05}, {1, -1, 0.04}, {3, 0, 0.03}};
  fp.time_terms = {{1, 0, 0.3}, {2, 2, 0.2}};
  auto amb = schwarzschild();
  const auto immersion = family_catalog("slice-graph", fp, *amb);
  struct Norms {
    double codazzi, codazzi_scale, ricci, ricci_scale, gauss, gauss_scale, gb;
  };
  auto run = [&](int nt) {
    const auto mesh = build_surface(amb, immersion, grid(nt));
    const auto curv = curvature_equations(null_frame(mesh));
    Norms n{};
    n.codazzi = l2(mesh, [&](std::size_t k) { return std::pow(curv[k].codazzi, 2); });
    n.codazzi_scale = l2(mesh, [&](std::size_t k) { return std::pow(curv[k].codazzi_scale, 2); });
    n.ricci = l2(mesh, [&](std::size_t k) { return std::pow(curv[k].ricci, 2); });
    n.ricci_scale = l2(mesh, [&](std::size_t k) { return std::pow(curv[k].ricci_scale, 2); });
    n.gauss = l2(mesh, [&](std::size_t k) { return std::pow(curv[k].gauss, 2); });
    n.gauss_scale = l2(mesh, [&](std::size_t k) { return std::pow(curv[k].gauss_scale, 2); });
    std::vector<double> K(mesh.size());
    for (std::size_t k = 0; k < mesh.size(); ++k) K[k] = curv[k].gauss_curvature;
    n.gb = std::abs(mesh.integrate(K) - 4 * M_PI);
    return n;
  };
  const Norms c = run(16), f = run(32);
  auto order_ok = [](double coarse, double fine, double scale) {
    if (fine < 1e-12 * scale) return true;  // converged to roundoff
    return std::log2(coarse / fine) >= 3.5;
  };
  CHECK(c.ricci_scale > 1e-4);  // the torsion is genuinely non-zero
  CHECK(order_ok(c.codazzi, f.codazzi, f.codazzi_scale));
  CHECK(order_ok(c.ricci, f.ricci, f.ricci_scale));
  CHECK(order_ok(c.gauss, f.gauss, f.gauss_scale));
  CHECK(order_ok(c.gb, f.gb, 4 * M_PI));
  CHECK(f.codazzi < 1e-5 * f.codazzi_scale);
  CHECK(f.ricci < 1e-5 * f.ricci_scale);
  CHECK(f.gauss < 1e-5 * f.gauss_scale);
  MESSAGE("codazzi order " << rate(c.codazzi, f.codazzi) << ", ricci order " << rate(c.ricci, f.ricci)
                           << ", gauss order " << rate(c.gauss, f.gauss));
}

TEST_CASE("incoming cone sections are shear-free and the cone gauge removes the torsion") {
  FamilyParams fp;
  fp.r0 = 5.0;
  fp.t0 = 10.0;
  fp.rho_terms = {{2, 1, 0.05}, {1, 0, 0.03}};
  auto amb = schwarzschild();
  const auto immersion = family_catalog("cone-section", fp, *amb);
  double coarse = 0.0;
  for (int nt : {16, 32}) {
    const auto mesh = build_surface(amb, immersion, grid(nt));
    GaugeSpec gs;
    gs.kind = GaugeKind::cone;
    const auto frame = null_frame(mesh, gs);
    const double shear = l2(mesh, [&](std::size_t k) {
      const NodeFrame& n = frame[k];
      const Mat2 tf = n.chibar - 0.5 * (n.sigma_inv * n.chibar).trace() * n.sigma;
      return tensor_norm2(tf, n.sigma_inv);
    });
    const double trace = l2(mesh, [&](std::size_t k) { return std::pow(frame[k].H_Lbar, 2); });
    CHECK(shear < 1e-6 * trace);
    CHECK(frame.diagnostics().zeta_residual < 1e-6);
    if (nt == 32) CHECK(frame.diagnostics().zeta_residual < coarse / 8.0);
    coarse = frame.diagnostics().zeta_residual;
  }
}

TEST_CASE("mean-curvature gauge: past and future cone sections, and a generic control") {
  auto amb = minkowski();
  auto report = [&](const std::string& family, bool outgoing, std::vector<ShTerm> time_terms) {
    FamilyParams fp;
    fp.r0 = 2.0;
    fp.t0 = 0.0;
    fp.outgoing = outgoing;
    fp.rho_terms = {{2, 1, 0.1}, {1, 0, 0.15}};
    fp.time_terms = std::move(time_terms);
    const auto mesh = build_surface(amb, family_catalog(family, fp, *amb), grid(32));
    GaugeSpec gs;
    gs.kind = family == "cone-section" ? GaugeKind::cone : GaugeKind::slice;
    const auto frame = null_frame(mesh, gs);
    return mean_curvature_gauge_report(mesh, frame);
  };
  SUBCASE("past cone: <H, Lbar> constant, alpha_H = d log|H|") {
    const auto r = report("cone-section", false, {});
    CHECK(r.torsion < 1e-6);
    CHECK(r.H_Lbar_spread < 1e-6 * std::abs(r.H_Lbar_mean));
    CHECK(r.H_Lbar_mean > 0.0);
    CHECK(r.scale > 0.1);  // |H| is far from constant
    CHECK(r.plus_residual < 1e-6 * r.scale);
    CHECK(r.minus_residual > 0.3 * r.scale);
  }
  SUBCASE("future cone: <H, L> constant, alpha_H = -d log|H|") {
    const auto r = report("cone-section", true, {});
    CHECK(r.torsion < 1e-6);
    CHECK(r.H_L_spread < 1e-6 * std::abs(r.H_L_mean));
    CHECK(r.H_L_mean < 0.0);
    CHECK(r.scale > 0.1);
    CHECK(r.minus_residual < 1e-6 * r.scale);
    CHECK(r.plus_residual > 0.3 * r.scale);
  }
  SUBCASE("generic surface satisfies neither relation") {
    const auto r = report("slice-graph", false, {{1, 1, 0.4}, {2, -1, 0.3}});
    CHECK(r.plus_residual > 1e-2 * r.scale);
    CHECK(r.minus_residual > 1e-2 * r.scale);
  }
}

TEST_CASE("divergence of sigma vanishes and of the trace-free chi matches Codazzi") {
  FamilyParams fp;
  fp.r0 = 5.0;
  fp.rho_terms = {{2, 1, 0.05}, {1, -1, 0.04}};
  auto amb = minkowski();
  const auto mesh = build_surface(amb, family_catalog("slice-graph", fp, *amb), grid(24));
  const auto frame = null_frame(mesh);
  const auto div_sigma = tangent_divergence(frame, [](const NodeFrame& n) { return n.sigma; });
  const double e = l2(mesh, [&](std::size_t k) { return div_sigma[k].dot(frame[k].sigma * div_sigma[k]); });
  CHECK(e < 1e-6);
  // Flat ambient, zeta = 0 in the slice gauge: div chi = d tr chi.
  const auto div_chi = tangent_divergence(frame, [](const NodeFrame& n) { return n.chi; });
  const auto div_tr = tangent_divergence(frame, [](const NodeFrame& n) {
    return Mat2((n.sigma_inv * n.chi).trace() * n.sigma);
  });
  double scale = 0.0;
  const double d = l2(mesh, [&](std::size_t k) {
    const Vec2 v = div_chi[k] - div_tr[k];
    scale = std::max(scale, std::sqrt(div_tr[k].dot(frame[k].sigma * div_tr[k])));
    return v.dot(frame[k].sigma * v);
  });
  CHECK(scale > 1e-4);
  CHECK(d < 1e-5 * scale);
}

TEST_CASE("timelike parameterizations are rejected with the offending node") {
  FamilyParams fp;
  fp.r0 = 5.0;
  fp.time_terms = {{1, 0, 20.0}};
  auto amb = minkowski();
  try {
    build_surface(amb, family_catalog("slice-graph", fp, *amb), grid(8));
    FAIL("expected NotSpacelike");
  } catch (const NotSpacelike& e) {
    CHECK(e.node < 8u * 16u);
  }
}

TEST_CASE("surfaces inside the Schwarzschild horizon are rejected") {
  FamilyParams fp;
  fp.r0 = 0.8;
  auto amb = schwarzschild(0.5);
  CHECK_THROWS_AS(build_surface(amb, family_catalog("sphere", fp, *amb), grid(8)), DomainError);
}

TEST_CASE("tabulated surfaces are interpolated by spherical harmonics") {
  const std::string path = "test_surface_table.csv";
  {
    const quadrature::SphereRule rule(12, 24);
    std::ofstream out(path);
    out.precision(17);
    out << "theta_index,phi_index,t,r,Theta,Phi\n";
    for (int i = 0; i < 12; ++i)
      for (int j = 0; j < 24; ++j) {
        const double th = rule.theta(i), ph = rule.phi(j);
        out << i << ',' << j << ',' << 0.5 << ',' << 3.0 << ',' << th << ',' << ph << '\n';
      }
  }
  FamilyParams fp;
  fp.csv_path = path;
  auto amb = schwarzschild();
  const auto mesh = build_surface(amb, family_catalog("csv", fp, *amb), grid(16));
  CHECK(std::abs(mesh.area() / (4 * M_PI * 9.0) - 1.0) < 1e-10);
  const auto frame = null_frame(mesh);
  CHECK(frame.torsion_max() < 1e-8);
  std::remove(path.c_str());
  fp.csv_path = "does-not-exist.csv";
  CHECK_THROWS_AS(family_catalog("csv", fp, *amb), ConfigError);
}

TEST_CASE("random graph terms respect the amplitude bound and the seed") {
  const auto a = random_sh_terms(4, 0.1, 7), b = random_sh_terms(4, 0.1, 7), c = random_sh_terms(4, 0.1, 8);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].coeff == b[i].coeff);
  CHECK(a[0].coeff != c[0].coeff);
  for (double th = 0.05; th < M_PI; th += 0.1)
    for (double ph = 0.0; ph < 2 * M_PI; ph += 0.1) {
      double v = 0.0;
      for (const auto& t : a) v += t.coeff * quadrature::real_sph_harm(t.l, t.m, th, ph);
      CHECK(std::abs(v) <= 0.1 + 1e-12);
    }
}
