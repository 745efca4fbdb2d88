#include "codim2/verify.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "codim2/parallel.hpp"
#include "codim2/symfunc.hpp"

namespace codim2::verify {

using surface::Mat2;
using surface::Mat4;
using surface::NodeFrame;
using surface::Vec2;
using surface::Vec4;

namespace {

constexpr int kN = 3;  // spatial dimension

using DMat = Eigen::MatrixXd;

std::string spacetime_label(const surface::Ambient& amb) {
  const auto& p = amb.params();
  std::ostringstream os;
  os << spacetime::family_name(p.family);
  if (p.family == spacetime::Family::schwarzschild || p.family == spacetime::Family::custom_f) os << " m=" << p.m;
  if (p.family == spacetime::Family::desitter || p.family == spacetime::Family::antidesitter ||
      p.family == spacetime::Family::custom_f)
    os << " kappa=" << p.kappa;
  return os.str();
}

bool constant_curvature(const surface::Ambient& amb) {
  const auto f = amb.params().family;
  return f == spacetime::Family::minkowski || f == spacetime::Family::desitter ||
         f == spacetime::Family::antidesitter || (f == spacetime::Family::schwarzschild && amb.params().m == 0.0);
}

bool schwarzschild_like(const surface::Ambient& amb) {
  const auto f = amb.params().family;
  return f == spacetime::Family::schwarzschild || f == spacetime::Family::minkowski;
}

double mass(const surface::Ambient& amb) {
  return amb.params().family == spacetime::Family::schwarzschild ? amb.params().m : 0.0;
}

IdentityReport start(const NullFrameField& frame, std::string id, ReportKind kind, const VerifyOptions& opt) {
  const SurfaceMesh& mesh = frame.mesh();
  IdentityReport r;
  r.id = std::move(id);
  r.kind = kind;
  r.resolution = std::to_string(mesh.rule().n_theta()) + "x" + std::to_string(mesh.rule().n_phi());
  r.surface = opt.surface_label.empty() ? mesh.source().name() : opt.surface_label;
  r.spacetime = spacetime_label(mesh.ambient());
  r.gauge = surface::gauge_name(frame.gauge().kind);
  r.tolerance = (opt.tolerance > 0.0 ? opt.tolerance : default_tolerance(mesh.rule().n_theta())) * opt.tolerance_scale;
  return r;
}

void finish(IdentityReport& r) {
  r.scale = 0.0;
  for (const auto& t : r.terms) r.scale += std::abs(t.value);
  r.rel_residual = std::abs(r.residual) / std::max(r.scale, 1e-300);
  const double bound = r.tolerance * r.scale;
  switch (r.kind) {
    case ReportKind::identity:
    case ReportKind::value:
      r.verdict = std::abs(r.residual) <= bound ? Verdict::pass : Verdict::fail;
      r.equality = r.verdict == Verdict::pass;
      break;
    case ReportKind::inequality:
      r.verdict = r.residual >= -bound ? Verdict::pass : Verdict::fail;
      r.equality = std::abs(r.residual) <= bound;
      break;
  }
}

void torsion_warning(const NullFrameField& frame, const VerifyOptions& opt, IdentityReport& r) {
  const double z = frame.torsion_max();
  if (z > opt.torsion_threshold) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "torsion-free hypothesis violated: sup|zeta| = %.3e > %.1e", z,
                  opt.torsion_threshold);
    r.warnings.emplace_back(buf);
  }
}

double integrate(const NullFrameField& frame, const std::vector<double>& v) { return frame.mesh().integrate(v); }

template <typename Fn>
std::vector<double> per_node(const NullFrameField& frame, Fn&& fn) {
  std::vector<double> v(frame.size());
  for (std::size_t k = 0; k < frame.size(); ++k) v[k] = fn(frame[k], k);
  return v;
}

symfunc::MixedCurvatureTable<double> table(const NodeFrame& n, bool tensors = false) {
  return symfunc::mixed_table<double>(DMat(n.sigma), DMat(n.chi), DMat(n.chibar), tensors);
}

std::vector<symfunc::MixedCurvatureTable<double>> tables(const NullFrameField& frame) {
  std::vector<symfunc::MixedCurvatureTable<double>> out(frame.size());
  parallel_for(frame.size(), [&](std::size_t k) { out[k] = table(frame[k]); });
  return out;
}

double tensor_norm(const Mat2& t, const Mat2& si) {
  return std::sqrt(std::max(0.0, (si * t * si * t.transpose()).trace()));
}

// Ambient 4x4 raised Q^{ab}.
Mat4 q_upper(const NodeFrame& n) {
  const Mat4 gi = n.g.inverse();
  return gi * n.q * gi.transpose();
}

// (Q^2)(N, V) = N^mu Q_{mu nu} g^{nu lambda} Q_{lambda rho} V^rho.
double q_squared(const NodeFrame& n, const Vec4& N, const Vec4& V) {
  return N.dot(n.q * n.g.inverse() * n.q * V);
}

// Direct Riemannian geometry of a hypersurface of a static slice.
struct SliceNode {
  Mat2 sigma, h;
  double f = 1.0, x_nu = 0.0, H = 0.0, sigma1 = 0.0, sigma2 = 0.0, umbilic = 0.0, h_norm = 0.0;
};

struct SpatialMetric {
  Eigen::Matrix3d g;
  std::array<Eigen::Matrix3d, 3> gamma;  // gamma[i](j, k)
};

// g_ij = delta_ij + phi(r) x_i x_j with phi = (1/F - 1)/r^2.
SpatialMetric spatial_metric(const spacetime::StaticWarp& warp, const Eigen::Vector3d& x) {
  const double r = x.norm();
  const auto w = warp(r);
  const double phi = (1.0 / w.F - 1.0) / (r * r);
  const double dphi = (-w.dF / (w.F * w.F)) / (r * r) - 2.0 * (1.0 / w.F - 1.0) / (r * r * r);
  SpatialMetric m;
  m.g = Eigen::Matrix3d::Identity() + phi * x * x.transpose();
  std::array<Eigen::Matrix3d, 3> dg;  // dg[k](i, j) = d_k g_ij
  for (int k = 0; k < 3; ++k) {
    Eigen::Matrix3d d = dphi * x(k) / r * x * x.transpose();
    for (int i = 0; i < 3; ++i) {
      d(i, k) += phi * x(i);
      d(k, i) += phi * x(i);
    }
    dg[k] = d;
  }
  const Eigen::Matrix3d gi = m.g.inverse();
  for (int i = 0; i < 3; ++i) {
    m.gamma[i].setZero();
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) m.gamma[i](j, k) += 0.5 * gi(i, l) * (dg[j](l, k) + dg[k](l, j) - dg[l](j, k));
  }
  return m;
}

std::vector<SliceNode> slice_geometry(const SurfaceMesh& mesh) {
  const double t0 = mesh.point(0).x(0);
  for (std::size_t k = 0; k < mesh.size(); ++k) {
    const auto& p = mesh.point(k);
    if (std::abs(p.x(0) - t0) > 1e-12 * (1.0 + std::abs(t0)) || std::abs(p.t_theta(0)) > 1e-12 ||
        std::abs(p.t_phi_s(0)) > 1e-12)
      throw PreconditionError("surface is not contained in a static slice (node " + std::to_string(k) + ")");
  }
  const auto& warp = mesh.ambient().warp();
  const double h = mesh.step();
  std::vector<SliceNode> out(mesh.size());
  parallel_for(mesh.size(), [&](std::size_t k) {
    auto at = [&](int i, int j) { return mesh.source().sample(mesh, k, i, j); };
    const auto p = at(0, 0);
    const Eigen::Vector3d x = p.x.tail<3>();
    const Eigen::Vector3d Tt = p.t_theta.tail<3>(), Tp = p.t_phi_s.tail<3>();
    auto d4 = [h](const Eigen::Vector3d& m2, const Eigen::Vector3d& m1, const Eigen::Vector3d& p1,
                  const Eigen::Vector3d& p2) { return Eigen::Vector3d((m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h)); };
    auto tt = [&](int i, int j) { return Eigen::Vector3d(at(i, j).t_theta.tail<3>()); };
    auto tp = [&](int i, int j) { return Eigen::Vector3d(at(i, j).t_phi_s.tail<3>()); };
    const Eigen::Vector3d xtt = d4(tt(-2, 0), tt(-1, 0), tt(1, 0), tt(2, 0));
    const Eigen::Vector3d dph_tt = d4(tt(0, -2), tt(0, -1), tt(0, 1), tt(0, 2));
    const Eigen::Vector3d dth_tp = d4(tp(-2, 0), tp(-1, 0), tp(1, 0), tp(2, 0));
    const Eigen::Vector3d dph_tp = d4(tp(0, -2), tp(0, -1), tp(0, 1), tp(0, 2));
    const double s = p.s, c = p.c;
    // Second derivatives with each phi index divided by sin(theta).
    const std::array<Eigen::Vector3d, 3> xx = {xtt, 0.5 * (dph_tt / s + dth_tp + (c / s) * Tp), dph_tp / s};
    const SpatialMetric sm = spatial_metric(warp, x);
    auto gamma = [&](const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
      Eigen::Vector3d v;
      for (int i = 0; i < 3; ++i) v(i) = a.dot(sm.gamma[i] * b);
      return v;
    };
    const std::array<std::pair<int, int>, 3> idx = {std::pair{0, 0}, std::pair{0, 1}, std::pair{1, 1}};
    const Eigen::Vector3d lower = Tt.cross(Tp);
    Eigen::Vector3d nu = sm.g.inverse() * lower;
    nu /= std::sqrt(nu.dot(sm.g * nu));
    Mat2 sig, hh;
    const std::array<Eigen::Vector3d, 2> T = {Tt, Tp};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) sig(a, b) = T[a].dot(sm.g * T[b]);
    for (int q = 0; q < 3; ++q) {
      const auto [a, b] = idx[q];
      const double v = -(xx[q] + gamma(T[a], T[b])).dot(sm.g * nu);
      hh(a, b) = hh(b, a) = v;
    }
    // Unscale phi indices.
    auto unscale = [s](Mat2 m) {
      m(0, 1) *= s;
      m(1, 0) *= s;
      m(1, 1) *= s * s;
      return m;
    };
    SliceNode n;
    n.sigma = unscale(sig);
    n.h = unscale(hh);
    const Mat2 si = n.sigma.inverse();
    const Mat2 shape = si * n.h;
    n.sigma1 = shape.trace();
    n.sigma2 = shape.determinant();
    n.H = n.sigma1;
    n.f = std::sqrt(warp(x.norm()).F);
    n.x_nu = n.f * x.dot(sm.g * nu);
    n.umbilic = tensor_norm(n.h - 0.5 * n.H * n.sigma, si);
    n.h_norm = tensor_norm(n.h, si);
    out[k] = n;
  });
  return out;
}

std::vector<double> slice_field(const std::vector<SliceNode>& s, double (*fn)(const SliceNode&)) {
  std::vector<double> v(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) v[k] = fn(s[k]);
  return v;
}

}  // namespace

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::not_applicable: return "not-applicable";
  }
  return "fail";
}

double default_tolerance(int n_theta) { return n_theta >= 128 ? 1e-7 : 1e-5; }

IdentityReport minkowski_k1(const NullFrameField& frame, const VerifyOptions& opt) {
  IdentityReport r = start(frame, "minkowski_k1", ReportKind::identity, opt);
  // (n-1)/n <xi, Lbar> with xi = -n d_t.
  const double a = integrate(frame, per_node(frame, [](const NodeFrame& n, std::size_t) { return -(kN - 1) * n.dt_Lbar; }));
  const double b = integrate(frame, per_node(frame, [](const NodeFrame& n, std::size_t) { return -0.5 * n.H_Lbar * n.Q_LLbar; }));
  const double c = integrate(frame, per_node(frame, [](const NodeFrame& n, std::size_t) {
    // sigma^{ab} zeta_b Q(d_a, Lbar) = -sigma^{ab} zeta_b Q(Lbar, d_a)
    return -(n.sigma_inv * n.zeta).dot(n.Q_Lbar);
  }));
  r.terms = {{"xi_Lbar", a}, {"Q_H_Lbar", b}, {"Q_tangent_DLbar_perp", c}};
  r.residual = a + b + c;
  finish(r);
  return r;
}

IdentityReport minkowski_k1_reduced(const NullFrameField& frame, const VerifyOptions& opt) {
  IdentityReport r = start(frame, "minkowski_k1_reduced", ReportKind::identity, opt);
  const double a = integrate(frame, per_node(frame, [](const NodeFrame& n, std::size_t) { return -(kN - 1) * n.dt_Lbar; }));
  const double b = integrate(frame, per_node(frame, [](const NodeFrame& n, std::size_t) { return -0.5 * n.H_Lbar * n.Q_LLbar; }));
  r.terms = {{"dt_Lbar", a}, {"H_Lbar_Q_L_Lbar", b}};
  r.residual = a + b;
  torsion_warning(frame, opt, r);
  finish(r);
  return r;
}

std::string rs_variant_name(RsVariant v) {
  switch (v) {
    case RsVariant::l_pair: return "L";
    case RsVariant::lbar_pair: return "Lbar";
    case RsVariant::lbar_mixed: return "Lbar-mixed";
    case RsVariant::l_mixed: return "L-mixed";
  }
  return "L";
}

RsVariant rs_variant_from_name(const std::string& name) {
  if (name == "L") return RsVariant::l_pair;
  if (name == "Lbar") return RsVariant::lbar_pair;
  if (name == "Lbar-mixed") return RsVariant::lbar_mixed;
  if (name == "L-mixed") return RsVariant::l_mixed;
  throw ConfigError("unknown Minkowski-formula variant '" + name + "'");
}

IdentityReport minkowski_rs(const NullFrameField& frame, int r, int s, RsVariant variant, const VerifyOptions& opt) {
  if (r < 0 || s < 0 || r + s < 1 || r + s > kN - 1)
    throw DomainError("minkowski_rs: need 1 <= r+s <= n-1");
  const bool needs_r = variant == RsVariant::l_pair || variant == RsVariant::lbar_mixed;
  if (needs_r && r < 1) throw DomainError("minkowski_rs: variant " + rs_variant_name(variant) + " needs r >= 1");
  if (!needs_r && s < 1) throw DomainError("minkowski_rs: variant " + rs_variant_name(variant) + " needs s >= 1");
  IdentityReport rep = start(frame, "minkowski_rs_" + rs_variant_name(variant) + "_r" + std::to_string(r) + "s" +
                                        std::to_string(s),
                             ReportKind::identity, opt);
  const auto tab = tables(frame);
  const double c = double(r + s) / double(kN - (r + s));
  int pr = r, ps = s, qr = r, qs = s;  // first term P_{pr,ps}, second term P_{qr,qs}
  bool first_L = true;                 // <L, d_t> or <Lbar, d_t>
  double sign = 1.0;
  switch (variant) {
    case RsVariant::l_pair: pr = r - 1; first_L = true; sign = 1.0; break;
    case RsVariant::lbar_pair: ps = s - 1; first_L = false; sign = -1.0; break;
    case RsVariant::lbar_mixed: pr = r - 1; qr = r - 1; qs = s + 1; first_L = false; sign = -1.0; break;
    case RsVariant::l_mixed: ps = s - 1; qr = r + 1; qs = s - 1; first_L = true; sign = 1.0; break;
  }
  const double a = integrate(frame, per_node(frame, [&](const NodeFrame& n, std::size_t k) {
    return 2.0 * tab[k].p(pr, ps) * (first_L ? n.dt_L : n.dt_Lbar);
  }));
  const double b = integrate(frame, per_node(frame, [&](const NodeFrame& n, std::size_t k) {
    return sign * c * tab[k].p(qr, qs) * n.Q_LLbar;
  }));
  rep.terms = {{"P_dt", a}, {"P_Q_L_Lbar", b}};
  rep.residual = a + b;
  if (!constant_curvature(frame.mesh().ambient()))
    rep.warnings.emplace_back("ambient is not of constant curvature; the formula is not claimed");
  torsion_warning(frame, opt, rep);
  finish(rep);
  return rep;
}

IdentityReport classical_recovery(const NullFrameField& frame, int k, const VerifyOptions& opt) {
  if (k < 1 || k > kN - 1) throw DomainError("classical_recovery: k must be 1 or 2");
  IdentityReport rep = start(frame, "classical_recovery_k" + std::to_string(k), ReportKind::identity, opt);
  const auto slice = slice_geometry(frame.mesh());
  auto sig = [](const SliceNode& s, int j) { return j == 0 ? 1.0 : (j == 1 ? s.sigma1 : s.sigma2); };
  std::vector<double> lhs(slice.size()), rhs(slice.size());
  for (std::size_t i = 0; i < slice.size(); ++i) {
    lhs[i] = (kN - k) * slice[i].f * sig(slice[i], k - 1);
    rhs[i] = k * sig(slice[i], k) * slice[i].x_nu;
  }
  const double dl = frame.mesh().integrate(lhs), dr = frame.mesh().integrate(rhs);
  // Spacetime formula with (r, s) = (k, 0) rescaled to the classical normalization.
  const auto tab = tables(frame);
  const double nl = -(kN - k) * integrate(frame, per_node(frame, [&](const NodeFrame& n, std::size_t i) {
    return tab[i].p(k - 1, 0) * n.dt_L;
  }));
  const double nr = 0.5 * k * integrate(frame, per_node(frame, [&](const NodeFrame& n, std::size_t i) {
    return tab[i].p(k, 0) * n.Q_LLbar;
  }));
  rep.terms = {{"direct_lhs", dl}, {"direct_rhs", dr}};
  rep.residual = std::abs(dl - dr) + std::abs(nl - dl) + std::abs(nr - dr);
  finish(rep);
  rep.terms.push_back({"null_lhs", nl});
  rep.terms.push_back({"null_rhs", nr});
  if (!constant_curvature(frame.mesh().ambient()))
    rep.warnings.emplace_back("ambient is not of constant curvature; the classical formula is not claimed");
  if (frame.gauge().kind != surface::GaugeKind::slice || frame.log_scale())
    rep.warnings.emplace_back("null comparison assumes the unscaled slice gauge");
  return rep;
}

std::string hk_direction_name(HkDirection d) {
  return d == HkDirection::future_incoming ? "future-incoming" : "past-incoming";
}

IdentityReport heintze_karcher(const NullFrameField& frame, HkDirection direction, const VerifyOptions& opt) {
  IdentityReport rep = start(frame, "heintze_karcher_" + hk_direction_name(direction), ReportKind::inequality, opt);
  std::vector<std::size_t> bad;
  for (std::size_t k = 0; k < frame.size(); ++k) {
    const bool ok = direction == HkDirection::future_incoming ? frame[k].H_Lbar > 0.0 : frame[k].H_L < 0.0;
    if (!ok) bad.push_back(k);
  }
  if (!bad.empty()) {
    std::ostringstream os;
    os << "heintze_karcher: null expansion sign violated at " << bad.size() << " node(s):";
    for (std::size_t i = 0; i < std::min<std::size_t>(bad.size(), 20); ++i) os << ' ' << bad[i];
    throw PreconditionError(os.str());
  }
  double a;
  if (direction == HkDirection::future_incoming)
    a = integrate(frame, per_node(frame, [](const NodeFrame& n, std::size_t) { return -(kN - 1) * n.dt_Lbar / n.H_Lbar; }));
  else
    a = integrate(frame, per_node(frame, [](const NodeFrame& n, std::size_t) { return (kN - 1) * n.dt_L / n.H_L; }));
  const double b = integrate(frame, per_node(frame, [](const NodeFrame& n, std::size_t) { return -0.5 * n.Q_LLbar; }));
  rep.terms = {{"dt_over_expansion", a}, {"Q_L_Lbar", b}};
  rep.residual = a + b;
  finish(rep);
  return rep;
}

IdentityReport slice_heintze_karcher(const NullFrameField& frame, const VerifyOptions& opt) {
  IdentityReport rep = start(frame, "slice_heintze_karcher", ReportKind::inequality, opt);
  const auto slice = slice_geometry(frame.mesh());
  for (std::size_t k = 0; k < slice.size(); ++k)
    if (!(slice[k].H > 0.0)) throw PreconditionError("slice_heintze_karcher: mean curvature not positive at node " + std::to_string(k));
  const auto& mesh = frame.mesh();
  const double a = (kN - 1) * mesh.integrate(slice_field(slice, [](const SliceNode& s) { return s.f / s.H; }));
  const double b = -mesh.integrate(slice_field(slice, [](const SliceNode& s) { return s.x_nu; }));
  rep.terms = {{"f_over_H", a}, {"X_nu", b}};
  rep.residual = a + b;
  finish(rep);
  // Equality detector: umbilicity.
  const double um = l2_norm(mesh, slice_field(slice, [](const SliceNode& s) { return s.umbilic * s.umbilic; }));
  const double hn = l2_norm(mesh, slice_field(slice, [](const SliceNode& s) { return s.h_norm * s.h_norm; }));
  rep.equality = um <= rep.tolerance * hn;
  rep.terms.push_back({"umbilic_defect_l2", um});
  return rep;
}

IdentityReport schwarzschild_mass_formula(const NullFrameField& frame, const VerifyOptions& opt) {
  const auto& amb = frame.mesh().ambient();
  if (!schwarzschild_like(amb)) throw PreconditionError("schwarzschild_mass_formula: needs the Schwarzschild family (m >= 0)");
  IdentityReport rep = start(frame, "schwarzschild_mass_formula", ReportKind::identity, opt);
  const double m = mass(amb);
  const auto curv = surface::curvature_equations(frame);
  std::vector<double> lhs(frame.size()), bulk(frame.size()), tang(frame.size());
  parallel_for(frame.size(), [&](std::size_t k) {
    const NodeFrame& n = frame[k];
    const auto R = amb.riemann(n.x);
    const double rllll = spacetime::contract(R, n.L, n.Lbar, n.L, n.Lbar);
    const double rbc = spacetime::contract(R, n.t_theta, n.t_phi, n.Lbar, n.L);
    const double det = n.sigma.determinant();
    lhs[k] = 2.0 * n.H_L * n.dt_Lbar;
    bulk[k] = (2.0 * curv[k].gauss_curvature + 0.25 * rllll) * n.Q_LLbar;
    tang[k] = 2.0 * (0.5 * rbc - 2.0 * curv[k].dzeta) * n.Q_tangent / det;
  });
  const double l = frame.mesh().integrate(lhs), b = frame.mesh().integrate(bulk), t = frame.mesh().integrate(tang);
  const double mass_term = -16.0 * M_PI * m;
  rep.terms = {{"lhs", l}, {"mass", mass_term}, {"curvature_Q_L_Lbar", b}, {"tangential", t}};
  rep.residual = l - (mass_term + b + t);
  finish(rep);
  return rep;
}

IdentityReport flux_invariant(const NullFrameField& frame, const VerifyOptions& opt) {
  const auto& amb = frame.mesh().ambient();
  if (!schwarzschild_like(amb)) throw PreconditionError("flux_invariant: needs the Schwarzschild family (m >= 0)");
  IdentityReport rep = start(frame, "flux_invariant", ReportKind::value, opt);
  std::vector<double> v(frame.size());
  parallel_for(frame.size(), [&](std::size_t k) {
    const NodeFrame& n = frame[k];
    const auto R = amb.riemann(n.x);
    const Mat4 qu = q_upper(n);
    const Vec4 lb = n.Lbar, l = n.L;
    double acc = 0.0;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        if (qu(a, b) == 0.0) continue;
        double rab = 0.0;
        for (int c = 0; c < 4; ++c)
          for (int d = 0; d < 4; ++d) rab += R(a, b, c, d) * lb(c) * l(d);
        acc += rab * qu(a, b);
      }
    v[k] = acc;
  });
  const double value = frame.mesh().integrate(v);
  const double expected = -32.0 * M_PI * mass(amb);
  rep.terms = {{"flux", value}, {"expected", expected}};
  rep.residual = value - expected;
  finish(rep);
  return rep;
}

IdentityReport divergence_constant_curvature(const NullFrameField& frame, int r, int s, bool barred,
                                             const VerifyOptions& opt) {
  symfunc::check_rs(r, s, kN - 1);
  IdentityReport rep = start(frame,
                             std::string(barred ? "divergence_Tbar_r" : "divergence_T_r") + std::to_string(r) + "s" +
                                 std::to_string(s),
                             ReportKind::value, opt);
  auto lower = [r, s, barred](const NodeFrame& n) -> Mat2 {
    const auto tab = table(n, true);
    const Mat2 up = barred ? Mat2(tab.tbar(r, s)) : Mat2(tab.t(r, s));
    return n.sigma * up * n.sigma;
  };
  const auto div = surface::tangent_divergence(frame, lower);
  const auto& mesh = frame.mesh();
  std::vector<double> d2(frame.size()), s2(frame.size());
  for (std::size_t k = 0; k < frame.size(); ++k) {
    const NodeFrame& n = frame[k];
    const auto tab = table(n, true);
    const Mat2 up = barred ? Mat2(tab.tbar(r, s)) : Mat2(tab.t(r, s));
    const double tn = tensor_norm(n.sigma * up * n.sigma, n.sigma_inv);
    const double cn = tensor_norm(n.chi, n.sigma_inv) + tensor_norm(n.chibar, n.sigma_inv);
    d2[k] = div[k].dot(n.sigma * div[k]);
    s2[k] = std::pow(tn * cn, 2);
  }
  const double dn = l2_norm(mesh, d2), sn = l2_norm(mesh, s2);
  rep.terms = {{"divergence_l2", dn}, {"scale_l2", sn}};
  rep.residual = dn;
  finish(rep);
  rep.scale = sn;
  rep.rel_residual = dn / std::max(sn, 1e-300);
  rep.verdict = dn <= rep.tolerance * sn ? Verdict::pass : Verdict::fail;
  if (!constant_curvature(mesh.ambient())) rep.warnings.emplace_back("ambient is not of constant curvature");
  torsion_warning(frame, opt, rep);
  return rep;
}

SchwarzschildDivergence divergence_schwarzschild(const NullFrameField& frame, bool barred, const VerifyOptions& opt) {
  const auto& amb = frame.mesh().ambient();
  if (!schwarzschild_like(amb)) throw PreconditionError("divergence_schwarzschild: needs the Schwarzschild family");
  const double m = mass(amb);
  auto lower = [barred](const NodeFrame& n) -> Mat2 {
    const auto tab = table(n, true);
    const Mat2 up = barred ? Mat2(tab.tbar(0, 2)) : Mat2(tab.t(2, 0));
    return n.sigma * up * n.sigma;
  };
  const auto div = surface::tangent_divergence(frame, lower);
  SchwarzschildDivergence out;
  out.numeric.resize(frame.size());
  out.closed.resize(frame.size());
  out.special.resize(frame.size());
  for (std::size_t k = 0; k < frame.size(); ++k) {
    const NodeFrame& n = frame[k];
    const Vec4& N = barred ? n.Lbar : n.L;
    const Vec2 qn = barred ? n.Q_Lbar : n.Q_L;
    const double rho = n.x.tail<3>().norm();
    const double c = kN * m * (kN - 2) / std::pow(rho, kN + 2);
    const Vec2 q2(q_squared(n, N, n.t_theta), q_squared(n, N, n.t_phi));
    out.numeric[k] = div[k].dot(qn);
    out.closed[k] = c * q2.dot(n.sigma_inv * qn);
    // (Q^2)(N, d_a) = sum_c Q(N, e_c) Q(e_c, d_a) - (1/2) Q(N, N') Q(N, d_a); the first
    // sum drops out after contraction with Q(N, d_a).
    const double q_nn = barred ? -n.Q_LLbar : n.Q_LLbar;
    out.special[k] = -0.5 * c * q_nn * qn.dot(n.sigma_inv * qn);
  }
  auto report = [&](const std::string& id, const std::vector<double>& other, const std::string& name) {
    IdentityReport rep = start(frame, id, ReportKind::identity, opt);
    std::vector<double> diff(frame.size()), an(frame.size()), ao(frame.size());
    for (std::size_t k = 0; k < frame.size(); ++k) {
      diff[k] = std::abs(out.numeric[k] - other[k]);
      an[k] = std::abs(out.numeric[k]);
      ao[k] = std::abs(other[k]);
    }
    rep.terms = {{"numeric_abs", frame.mesh().integrate(an)}, {name + "_abs", frame.mesh().integrate(ao)}};
    rep.residual = frame.mesh().integrate(diff);
    finish(rep);
    rep.terms.push_back({"numeric", frame.mesh().integrate(out.numeric)});
    rep.terms.push_back({name, frame.mesh().integrate(other)});
    torsion_warning(frame, opt, rep);
    return rep;
  };
  const std::string side = barred ? "Tbar02" : "T20";
  out.closed_form = report("divergence_schwarzschild_" + side, out.closed, "closed_form");
  out.specialization = report("divergence_schwarzschild_" + side + "_r2", out.special, "specialization");
  return out;
}

HypothesisRecord schwarzschild_hypotheses(const NullFrameField& frame, SchwarzschildMode mode, const VerifyOptions& opt) {
  HypothesisRecord h;
  h.torsion_free = frame.torsion_max() <= opt.torsion_threshold;
  h.q_nonnegative = true;
  h.convex = true;
  h.q2_sign = true;
  const bool lside = mode == SchwarzschildMode::l_side;
  for (std::size_t k = 0; k < frame.size(); ++k) {
    const NodeFrame& n = frame[k];
    if (n.Q_LLbar < 0.0) {
      h.q_nonnegative = false;
      h.q_negative_nodes.push_back(k);
    }
    const Mat2 shape = n.sigma_inv * (lside ? n.chi : Mat2(-n.chibar));
    const Eigen::Vector2cd ev = shape.eigenvalues();
    if (!(ev(0).real() > 0.0 && ev(1).real() > 0.0)) h.convex = false;
    const Vec4& N = lside ? n.L : n.Lbar;
    const Vec2 qn = lside ? n.Q_L : n.Q_Lbar;
    for (int a = 0; a < 2; ++a) {
      const Vec4& v = a == 0 ? n.t_theta : n.t_phi;
      const double prod = q_squared(n, N, v) * qn(a);
      if (lside ? prod > 0.0 : prod < 0.0) h.q2_sign = false;
    }
  }
  return h;
}

IdentityReport schwarzschild_inequality(const NullFrameField& frame, int order, SchwarzschildMode mode,
                                        const VerifyOptions& opt) {
  if (order < 1 || order > kN - 1) throw DomainError("schwarzschild_inequality: order must lie in [1, n-1]");
  const bool lside = mode == SchwarzschildMode::l_side;
  IdentityReport rep = start(frame, std::string(lside ? "schwarzschild_inequality_L_r" : "schwarzschild_inequality_Lbar_s") +
                                        std::to_string(order),
                             ReportKind::inequality, opt);
  const auto tab = tables(frame);
  const double c = double(order) / (2.0 * (kN - order));
  const double a = integrate(frame, per_node(frame, [&](const NodeFrame& n, std::size_t k) {
    return lside ? tab[k].p(order - 1, 0) * n.dt_L : tab[k].p(0, order - 1) * n.dt_Lbar;
  }));
  const double b = integrate(frame, per_node(frame, [&](const NodeFrame& n, std::size_t k) {
    return lside ? c * tab[k].p(order, 0) * n.Q_LLbar : -c * tab[k].p(0, order) * n.Q_LLbar;
  }));
  rep.terms = {{"P_dt", a}, {"P_Q_L_Lbar", b}};
  rep.residual = a + b;
  finish(rep);
  if (!schwarzschild_like(frame.mesh().ambient())) {
    rep.verdict = Verdict::not_applicable;
    rep.warnings.emplace_back("ambient is not Schwarzschild");
  }
  const HypothesisRecord h = schwarzschild_hypotheses(frame, mode, opt);
  if (!h.satisfied()) {
    rep.verdict = Verdict::not_applicable;
    std::ostringstream os;
    os << "hypotheses not satisfied: torsion_free=" << h.torsion_free << " Q(L,Lbar)>=0=" << h.q_nonnegative
       << " (negative at " << h.q_negative_nodes.size() << " nodes) convex=" << h.convex << " Q2_sign=" << h.q2_sign;
    rep.warnings.push_back(os.str());
  }
  return rep;
}

IdentityReport equality_sandwich(const NullFrameField& frame, int r, int s, const VerifyOptions& opt) {
  if (r < 1 || r + s > kN - 1) throw DomainError("equality_sandwich: need r >= 1 and r+s <= n-1");
  IdentityReport rep = start(frame, "equality_sandwich_r" + std::to_string(r) + "s" + std::to_string(s),
                             ReportKind::inequality, opt);
  const auto tab = tables(frame);
  const double c = double(r + s) * (kN - 1) / double(kN - (r + s));
  const double nm = integrate(frame, per_node(frame, [&](const NodeFrame& n, std::size_t k) {
    const double trchi = (n.sigma_inv * n.chi).trace();
    return (c / trchi - tab[k].p(r - 1, s) / tab[k].p(r, s)) * n.dt_L;
  }));
  const IdentityReport hk = heintze_karcher(frame, HkDirection::past_incoming, opt);
  rep.terms = {{"newton_maclaurin_gap", nm}, {"heintze_karcher_gap", hk.residual}};
  rep.residual = std::min(nm, hk.residual);
  finish(rep);
  rep.scale = hk.scale;
  rep.rel_residual = std::abs(rep.residual) / std::max(rep.scale, 1e-300);
  rep.verdict = rep.residual >= -rep.tolerance * rep.scale ? Verdict::pass : Verdict::fail;
  rep.equality = std::abs(nm) <= rep.tolerance * rep.scale && std::abs(hk.residual) <= rep.tolerance * rep.scale;
  return rep;
}

nlohmann::json to_json(const IdentityReport& r, const std::string& config_hash) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : r.terms) terms.push_back({{"name", t.name}, {"value", t.value}});
  const char* kind = r.kind == ReportKind::identity ? "identity" : (r.kind == ReportKind::inequality ? "inequality" : "value");
  nlohmann::json j = {{"id", r.id},
                      {"kind", kind},
                      {"terms", terms},
                      {"residual", r.residual},
                      {"scale", r.scale},
                      {"rel_residual", r.rel_residual},
                      {"tolerance", r.tolerance},
                      {"equality", r.equality},
                      {"verdict", verdict_name(r.verdict)},
                      {"resolution", r.resolution},
                      {"surface", r.surface},
                      {"spacetime", r.spacetime},
                      {"gauge", r.gauge},
                      {"warnings", r.warnings},
                      {"config_hash", config_hash}};
  return j;
}

std::string csv_header() {
  return "id,kind,resolution,surface,spacetime,gauge,residual,scale,rel_residual,tolerance,equality,verdict";
}

std::string csv_row(const IdentityReport& r) {
  const char* kind = r.kind == ReportKind::identity ? "identity" : (r.kind == ReportKind::inequality ? "inequality" : "value");
  char buf[512];
  std::snprintf(buf, sizeof buf, "%s,%s,%s,\"%s\",\"%s\",%s,%.17g,%.17g,%.17g,%.3g,%d,%s", r.id.c_str(), kind,
                r.resolution.c_str(), r.surface.c_str(), r.spacetime.c_str(), r.gauge.c_str(), r.residual, r.scale,
                r.rel_residual, r.tolerance, r.equality ? 1 : 0, verdict_name(r.verdict).c_str());
  return buf;
}

}  // namespace codim2::verify
