#include "codim2/surface.hpp"

#include <cmath>
#include <limits>

#include "codim2/parallel.hpp"

namespace codim2::surface {

// ---------------------------------------------------------------------------
// Ambient

Ambient::Ambient(spacetime::StaticParameters p) : chart_(p) {
  if (p.n != 3) throw ConfigError("surfaces require a four-dimensional spacetime (n = 3)");
}

Mat4 Ambient::q_form(const Vec4& x) const {
  Mat4 q = Mat4::Zero();
  for (int i = 1; i < 4; ++i) {
    q(i, 0) = x(i);
    q(0, i) = -x(i);
  }
  return q;
}

spacetime::Tensor4 Ambient::riemann(const Vec4& x) const {
  const auto& p = params();
  const Mat4 g = metric(x);
  const double r = x.tail<3>().norm();
  switch (p.family) {
    case spacetime::Family::schwarzschild:
      return spacetime::riemann_from_cky(g, q_form(x), r, 3, p.m);
    case spacetime::Family::minkowski:
    case spacetime::Family::desitter:
    case spacetime::Family::antidesitter: {
      const double K = -p.kappa;
      spacetime::Tensor4 R(4);
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
          for (int c = 0; c < 4; ++c)
            for (int d = 0; d < 4; ++d) R(a, b, c, d) = K * (g(a, c) * g(b, d) - g(a, d) * g(b, c));
      return R;
    }
    default:
      return chart_.riemann(Eigen::VectorXd(x));
  }
}

void Ambient::check_domain(const Vec4& x) const { chart_.check_domain(Eigen::VectorXd(x)); }

double Ambient::tortoise(double r) const {
  const auto& p = params();
  switch (p.family) {
    case spacetime::Family::minkowski:
      return r;
    case spacetime::Family::desitter:
    case spacetime::Family::antidesitter: {
      const double k = p.kappa;
      if (k > 0) return std::atan(std::sqrt(k) * r) / std::sqrt(k);
      if (k < 0) return std::atanh(std::sqrt(-k) * r) / std::sqrt(-k);
      return r;
    }
    case spacetime::Family::schwarzschild: {
      if (p.m == 0.0) return r;
      return r + 2.0 * p.m * std::log(r / (2.0 * p.m) - 1.0);
    }
    default:
      throw ConfigError("no closed-form tortoise coordinate for family " + spacetime::family_name(p.family));
  }
}

// ---------------------------------------------------------------------------
// Sources and mesh

PointData ImmersionSource::evaluate(double theta, double phi) const {
  const AD th(theta, 2, 0), ph(phi, 2, 1);
  const Vec4AD X = imm_->position(th, ph);
  PointData p;
  p.s = std::sin(theta);
  p.c = std::cos(theta);
  for (int k = 0; k < 4; ++k) {
    p.x(k) = X(k).value();
    p.t_theta(k) = X(k).derivatives()(0);
    p.t_phi_s(k) = X(k).derivatives()(1) / p.s;
  }
  return p;
}

PointData ImmersionSource::sample(const SurfaceMesh& mesh, std::size_t node, int i, int j) const {
  return evaluate(mesh.theta(node) + i * mesh.step(), mesh.phi(node) + j * mesh.step());
}

SurfaceMesh::SurfaceMesh(std::shared_ptr<const Ambient> ambient, std::shared_ptr<const SampleSource> source,
                         SurfaceOptions options)
    : ambient_(std::move(ambient)), source_(std::move(source)), options_(options),
      rule_(options.n_theta, options.n_phi), h_(options.step_factor * M_PI / options.n_theta) {
  if (!(options.step_factor > 0.0 && options.step_factor < 1.0)) throw ConfigError("step_factor must lie in (0, 1)");
  points_.resize(size());
  sigma_.resize(size());
  area_.resize(size());
  parallel_for(size(), [&](std::size_t k) {
    points_[k] = source_->sample(*this, k, 0, 0);
    const PointData& p = points_[k];
    ambient_->check_domain(p.x);
    const Mat4 g = ambient_->metric(p.x);
    const Vec4 tp = p.s * p.t_phi_s;
    Mat2 s;
    s(0, 0) = p.t_theta.dot(g * p.t_theta);
    s(0, 1) = s(1, 0) = p.t_theta.dot(g * tp);
    s(1, 1) = tp.dot(g * tp);
    sigma_[k] = s;
    const double det = s.determinant();
    if (!(s(0, 0) > 0.0 && det > 0.0) || !std::isfinite(det))
      throw NotSpacelike(k, "induced metric not positive definite at node " + std::to_string(k));
    area_[k] = std::sqrt(det);
  });
}

double SurfaceMesh::integrate(std::span<const double> field) const { return quadrature::integrate(rule_, field, area_); }

double SurfaceMesh::area() const {
  std::vector<double> one(size(), 1.0);
  return integrate(one);
}

SurfaceMesh build_surface(std::shared_ptr<const Ambient> ambient, std::shared_ptr<const SampleSource> source,
                          SurfaceOptions options) {
  return SurfaceMesh(std::move(ambient), std::move(source), options);
}

SurfaceMesh build_surface(std::shared_ptr<const Ambient> ambient, std::shared_ptr<const Immersion> immersion,
                          SurfaceOptions options) {
  return SurfaceMesh(std::move(ambient), std::make_shared<ImmersionSource>(std::move(immersion)), options);
}

double l2_norm(const SurfaceMesh& mesh, std::span<const double> squared_pointwise) {
  return std::sqrt(std::max(0.0, mesh.integrate(squared_pointwise)) / mesh.area());
}

// ---------------------------------------------------------------------------
// Gauges

std::string gauge_name(GaugeKind g) {
  switch (g) {
    case GaugeKind::slice: return "slice";
    case GaugeKind::mean_curvature: return "mean-curvature";
    case GaugeKind::cone: return "cone";
    case GaugeKind::flow: return "flow";
  }
  return "slice";
}

GaugeKind gauge_from_name(const std::string& name) {
  if (name == "slice") return GaugeKind::slice;
  if (name == "mean-curvature") return GaugeKind::mean_curvature;
  if (name == "cone") return GaugeKind::cone;
  if (name == "flow") return GaugeKind::flow;
  throw ConfigError("unknown gauge '" + name + "'");
}

namespace {

inline Vec4 apply(const Gamma4& gamma, const Vec4& a, const Vec4& b) {
  Vec4 v;
  for (int m = 0; m < 4; ++m) v(m) = a.dot(gamma[m] * b);
  return v;
}

template <typename T>
T d4(const T& m2, const T& m1, const T& p1, const T& p2, double h) {
  return (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
}

int levi(int a, int b, int c, int d) {
  const int p[4] = {a, b, c, d};
  int sign = 1;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      if (p[i] == p[j]) return 0;
      if (p[i] > p[j]) sign = -sign;
    }
  return sign;
}

const std::array<std::array<int, 4>, 24>& permutations() {
  static const auto perms = [] {
    std::array<std::array<int, 4>, 24> out{};
    std::array<int, 4> p = {0, 1, 2, 3};
    int k = 0;
    do out[k++] = p;
    while (std::next_permutation(p.begin(), p.end()));
    return out;
  }();
  return perms;
}

struct Geom {
  Mat4 g;
  Gamma4 gamma;
  Mat2 sig, sig_inv;  // in the basis (T_theta, T_phi / s)
  std::array<Vec4, 3> ii;  // II(theta,theta), II(theta,phi)/s, II(phi,phi)/s^2
  Vec4 H;
};

struct Frame {
  Vec4 e3, e4, L, Lbar, e1, e2;
  double loga = 0.0;
};

struct Layer1 {
  Mat2 chi, chibar;  // scaled basis
  Vec2 zeta;         // (zeta_theta, zeta_phi / s)
  Vec2 omega;        // raw coordinate components of the tangent-frame connection
};

struct Context {
  GaugeKind base = GaugeKind::slice;
  LogScale log_scale;
  bool velocity_scale = false;
};

// Memoized lattice evaluation around one node.
class Stencil {
 public:
  Stencil(const SurfaceMesh& mesh, const Context& ctx, std::size_t node)
      : mesh_(mesh), ctx_(ctx), node_(node), h_(mesh.step()) {}

  const PointData& point(int i, int j) {
    auto& slot = points_[check(i, j)];
    if (!slot) slot = mesh_.source().sample(mesh_, node_, i, j);
    return *slot;
  }

  const Geom& geom(int i, int j) {
    auto& slot = geoms_[check(i, j)];
    if (slot) return *slot;
    const PointData& p = point(i, j);
    Geom G;
    G.g = mesh_.ambient().metric(p.x);
    mesh_.ambient().christoffel(p.x, G.gamma);
    const Vec4& Tt = p.t_theta;
    const Vec4& Tp = p.t_phi_s;
    G.sig(0, 0) = Tt.dot(G.g * Tt);
    G.sig(0, 1) = G.sig(1, 0) = Tt.dot(G.g * Tp);
    G.sig(1, 1) = Tp.dot(G.g * Tp);
    G.sig_inv = G.sig.inverse();
    auto tt = [&](int a, int b) { return point(i + a, j + b).t_theta; };
    auto tp = [&](int a, int b) { return point(i + a, j + b).t_phi_s; };
    const Vec4 dth_Tt = d4(tt(-2, 0), tt(-1, 0), tt(1, 0), tt(2, 0), h_);
    const Vec4 dph_Tt = d4(tt(0, -2), tt(0, -1), tt(0, 1), tt(0, 2), h_);
    const Vec4 dth_Tp = d4(tp(-2, 0), tp(-1, 0), tp(1, 0), tp(2, 0), h_);
    const Vec4 dph_Tp = d4(tp(0, -2), tp(0, -1), tp(0, 1), tp(0, 2), h_);
    G.ii[0] = dth_Tt + apply(G.gamma, Tt, Tt);
    G.ii[1] = 0.5 * (dph_Tt / p.s + dth_Tp + (p.c / p.s) * Tp) + apply(G.gamma, Tt, Tp);
    G.ii[2] = dph_Tp / p.s + apply(G.gamma, Tp, Tp);
    Vec4 H = G.sig_inv(0, 0) * G.ii[0] + 2.0 * G.sig_inv(0, 1) * G.ii[1] + G.sig_inv(1, 1) * G.ii[2];
    G.H = H - tangential(G, p, H);
    slot = G;
    return *slot;
  }

  const Frame& frame(int i, int j) {
    auto& slot = frames_[check(i, j)];
    if (slot) return *slot;
    const PointData& p = point(i, j);
    const Geom& G = geom_basic(i, j);
    Frame F;
    // Slice pair: e4 along the normal part of d_t, e3 by orientation.
    const Vec4 dt(1.0, 0.0, 0.0, 0.0);
    const Vec4 N = dt - tangential(G, p, dt);
    const double nn = N.dot(G.g * N);
    if (!(nn < 0.0)) throw NotSpacelike(node_, "normal projection of d_t is not timelike");
    F.e4 = N / std::sqrt(-nn);
    F.e3 = oriented_normal(G, F.e4, p.t_theta, p.t_phi_s);
    if (ctx_.base == GaugeKind::mean_curvature) {
      const Geom& GH = geom(i, j);
      const double h2 = GH.H.dot(G.g * GH.H);
      if (!(h2 > 0.0)) throw GaugeError("mean curvature vector is not spacelike at node " + std::to_string(node_));
      const double hn = std::sqrt(h2);
      const Vec4 J = GH.H.dot(G.g * F.e4) * F.e3 - GH.H.dot(G.g * F.e3) * F.e4;
      F.e3 = -GH.H / hn;
      F.e4 = J / hn;
    }
    if (ctx_.log_scale) F.loga += ctx_.log_scale(mesh_.theta(node_) + i * h_, mesh_.phi(node_) + j * h_);
    if (ctx_.velocity_scale) {
      if (!p.has_velocity) throw GaugeError("flow gauge needs transported velocities");
      const double c = -0.5 * p.velocity.dot(G.g * (F.e4 + F.e3));
      if (!(c > 0.0)) throw GaugeError("transported velocity is not a future inward null normal");
      F.loga -= std::log(c);
    }
    const double a = std::exp(F.loga);
    F.L = a * (F.e4 + F.e3);
    F.Lbar = (F.e4 - F.e3) / a;
    F.e2 = p.t_phi_s / std::sqrt(p.t_phi_s.dot(G.g * p.t_phi_s));
    Vec4 e1 = p.t_theta - p.t_theta.dot(G.g * F.e2) * F.e2;
    F.e1 = e1 / std::sqrt(e1.dot(G.g * e1));
    slot = F;
    return *slot;
  }

  const Layer1& layer1(int i, int j) {
    auto& slot = layers_[check(i, j)];
    if (slot) return *slot;
    const PointData& p = point(i, j);
    const Geom& G = geom(i, j);
    const Frame& F = frame(i, j);
    Layer1 out;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        const Vec4& ii = G.ii[a + b];
        out.chi(a, b) = -F.L.dot(G.g * ii);
        out.chibar(a, b) = -F.Lbar.dot(G.g * ii);
      }
    auto fr = [&](int a, int b) -> const Frame& { return frame(i + a, j + b); };
    const Vec4 dth_e3 = d4(fr(-2, 0).e3, fr(-1, 0).e3, fr(1, 0).e3, fr(2, 0).e3, h_);
    const Vec4 dph_e3 = d4(fr(0, -2).e3, fr(0, -1).e3, fr(0, 1).e3, fr(0, 2).e3, h_);
    const double dth_la = d4(fr(-2, 0).loga, fr(-1, 0).loga, fr(1, 0).loga, fr(2, 0).loga, h_);
    const double dph_la = d4(fr(0, -2).loga, fr(0, -1).loga, fr(0, 1).loga, fr(0, 2).loga, h_);
    out.zeta(0) = (dth_e3 + apply(G.gamma, p.t_theta, F.e3)).dot(G.g * F.e4) - dth_la;
    out.zeta(1) = (dph_e3 / p.s + apply(G.gamma, p.t_phi_s, F.e3)).dot(G.g * F.e4) - dph_la / p.s;
    const Vec4 dth_e1 = d4(fr(-2, 0).e1, fr(-1, 0).e1, fr(1, 0).e1, fr(2, 0).e1, h_);
    const Vec4 dph_e1 = d4(fr(0, -2).e1, fr(0, -1).e1, fr(0, 1).e1, fr(0, 2).e1, h_);
    out.omega(0) = (dth_e1 + apply(G.gamma, p.t_theta, F.e1)).dot(G.g * F.e2);
    out.omega(1) = (dph_e1 + p.s * apply(G.gamma, p.t_phi_s, F.e1)).dot(G.g * F.e2);
    slot = out;
    return *slot;
  }

  // Frame data at a lattice point in the basis (T_theta, T_phi / s).
  NodeFrame scaled_frame(int i, int j) {
    const PointData& p = point(i, j);
    const Geom& G = geom(i, j);
    const Frame& F = frame(i, j);
    const Layer1& l1 = layer1(i, j);
    NodeFrame n;
    n.x = p.x;
    n.t_theta = p.t_theta;
    n.t_phi = p.t_phi_s;
    n.sigma = G.sig;
    n.sigma_inv = G.sig_inv;
    n.area_element = std::sqrt(G.sig.determinant());
    n.e3 = F.e3;
    n.e4 = F.e4;
    n.L = F.L;
    n.Lbar = F.Lbar;
    n.H = G.H;
    n.a = std::exp(F.loga);
    n.chi = l1.chi;
    n.chibar = l1.chibar;
    n.zeta = l1.zeta;
    n.g = G.g;
    n.q = mesh_.ambient().q_form(p.x);
    n.H_L = G.H.dot(G.g * F.L);
    n.H_Lbar = G.H.dot(G.g * F.Lbar);
    n.Q_LLbar = F.L.dot(n.q * F.Lbar);
    n.Q_tangent = n.t_theta.dot(n.q * n.t_phi);
    n.Q_L = Vec2(F.L.dot(n.q * n.t_theta), F.L.dot(n.q * n.t_phi));
    n.Q_Lbar = Vec2(F.Lbar.dot(n.q * n.t_theta), F.Lbar.dot(n.q * n.t_phi));
    n.dt_L = (G.g * F.L)(0);
    n.dt_Lbar = (G.g * F.Lbar)(0);
    return n;
  }

  double s(int i) { return std::sin(mesh_.theta(node_) + i * h_); }
  double c(int i) { return std::cos(mesh_.theta(node_) + i * h_); }
  double h() const { return h_; }
  std::size_t node() const { return node_; }

 private:
  static constexpr int kSide = 2 * kLatticeReach + 1;

  int check(int i, int j) const {
    const int reach = std::min(kLatticeReach, mesh_.source().reach());
    if (std::abs(i) > reach || std::abs(j) > reach)
      throw DomainError("lattice offset beyond the reach of the sample source");
    return lattice_slot(i, j);
  }

  // Metric and Christoffels without the second-fundamental-form differences.
  const Geom& geom_basic(int i, int j) {
    auto& slot = basics_[check(i, j)];
    if (slot) return *slot;
    if (geoms_[lattice_slot(i, j)]) return *(slot = *geoms_[lattice_slot(i, j)]);
    const PointData& p = point(i, j);
    Geom G;
    G.g = mesh_.ambient().metric(p.x);
    mesh_.ambient().christoffel(p.x, G.gamma);
    G.sig(0, 0) = p.t_theta.dot(G.g * p.t_theta);
    G.sig(0, 1) = G.sig(1, 0) = p.t_theta.dot(G.g * p.t_phi_s);
    G.sig(1, 1) = p.t_phi_s.dot(G.g * p.t_phi_s);
    G.sig_inv = G.sig.inverse();
    slot = G;
    return *slot;
  }

  static Vec4 tangential(const Geom& G, const PointData& p, const Vec4& v) {
    const Vec2 w(p.t_theta.dot(G.g * v), p.t_phi_s.dot(G.g * v));
    const Vec2 c = G.sig_inv * w;
    return c(0) * p.t_theta + c(1) * p.t_phi_s;
  }

  // Unit spacelike normal orthogonal to e4, oriented so that round spheres give the
  // outward radial direction.
  static Vec4 oriented_normal(const Geom& G, const Vec4& e4, const Vec4& a, const Vec4& b) {
    Vec4 lower = Vec4::Zero();
    for (const auto& p : permutations()) {
      const int sgn = levi(p[0], p[1], p[2], p[3]);
      lower(p[0]) += sgn * e4(p[1]) * a(p[2]) * b(p[3]);
    }
    lower *= std::sqrt(std::abs(G.g.determinant()));
    const Vec4 up = G.g.inverse() * lower;
    return -up / std::sqrt(up.dot(G.g * up));
  }

  const SurfaceMesh& mesh_;
  const Context& ctx_;
  std::size_t node_;
  double h_;
  std::array<std::optional<PointData>, kSide * kSide> points_;
  std::array<std::optional<Geom>, kSide * kSide> geoms_, basics_;
  std::array<std::optional<Frame>, kSide * kSide> frames_;
  std::array<std::optional<Layer1>, kSide * kSide> layers_;
};

Context context_for(const GaugeSpec& gauge, LogScale scale) {
  Context ctx;
  ctx.base = gauge.kind == GaugeKind::mean_curvature ? GaugeKind::mean_curvature : GaugeKind::slice;
  ctx.velocity_scale = gauge.kind == GaugeKind::flow;
  ctx.log_scale = std::move(scale);
  return ctx;
}

// Converts scaled-basis data at the node to coordinate components.
NodeFrame to_coordinates(NodeFrame n, double s) {
  auto unscale = [s](Mat2 m) {
    m(0, 1) *= s;
    m(1, 0) *= s;
    m(1, 1) *= s * s;
    return m;
  };
  n.t_phi *= s;
  n.sigma = unscale(n.sigma);
  n.sigma_inv = n.sigma.inverse();
  n.area_element = std::sqrt(n.sigma.determinant());
  n.chi = unscale(n.chi);
  n.chibar = unscale(n.chibar);
  n.zeta(1) *= s;
  n.Q_tangent *= s;
  n.Q_L(1) *= s;
  n.Q_Lbar(1) *= s;
  return n;
}

std::vector<NodeFrame> evaluate_frames(const SurfaceMesh& mesh, const Context& ctx) {
  std::vector<NodeFrame> out(mesh.size());
  parallel_for(mesh.size(), [&](std::size_t k) {
    auto st = std::make_unique<Stencil>(mesh, ctx, k);
    out[k] = to_coordinates(st->scaled_frame(0, 0), mesh.point(k).s);
  });
  return out;
}

// log a = u with du the exact part of zeta (Hodge projection on spherical harmonics).
quadrature::ShSeries fit_exact_part(const SurfaceMesh& mesh, const std::vector<NodeFrame>& frames, int lmax) {
  const auto& rule = mesh.rule();
  const int count = quadrature::sh_count(lmax);
  std::vector<std::vector<double>> terms(count, std::vector<double>(mesh.size(), 0.0));
  parallel_for(mesh.size(), [&](std::size_t k) {
    const double th = mesh.theta(k), ph = mesh.phi(k), s = std::sin(th);
    std::vector<AD> y;
    quadrature::real_sph_harm_all(lmax, AD(th, 2, 0), AD(ph, 2, 1), y);
    const Vec2& z = frames[k].zeta;
    const double w = rule.round_weight(rule.theta_index(k));
    for (int c = 0; c < count; ++c)
      terms[c][k] = w * (z(0) * y[c].derivatives()(0) + z(1) * y[c].derivatives()(1) / (s * s));
  });
  quadrature::ShSeries u;
  u.lmax = lmax;
  u.coeffs.assign(count, 0.0);
  for (int l = 1; l <= lmax; ++l)
    for (int m = -l; m <= l; ++m) {
      const int c = quadrature::sh_index(l, m);
      u.coeffs[c] = quadrature::pairwise_sum(terms[c]) / (l * (l + 1.0));
    }
  return u;
}

double zeta_l2(const SurfaceMesh& mesh, const std::vector<NodeFrame>& frames) {
  std::vector<double> sq(mesh.size());
  for (std::size_t k = 0; k < mesh.size(); ++k) sq[k] = frames[k].zeta.dot(frames[k].sigma_inv * frames[k].zeta);
  return l2_norm(mesh, sq);
}

FrameDiagnostics diagnose(const std::vector<NodeFrame>& frames) {
  FrameDiagnostics d;
  for (const auto& n : frames) {
    const Mat4& g = n.g;
    d.null_defect = std::max({d.null_defect, std::abs(n.L.dot(g * n.L)), std::abs(n.Lbar.dot(g * n.Lbar)),
                              std::abs(n.L.dot(g * n.Lbar) + 2.0)});
    for (const Vec4* T : {&n.t_theta, &n.t_phi}) {
      const double tn = std::sqrt(T->dot(g * *T));
      d.orthogonality = std::max({d.orthogonality, std::abs(n.L.dot(g * *T)) / (tn * n.a),
                                  std::abs(n.Lbar.dot(g * *T)) * n.a / tn});
    }
    const Vec4 rec = n.H + 0.5 * n.H_Lbar * n.L + 0.5 * n.H_L * n.Lbar;
    const double hn = std::sqrt(std::abs(n.H.dot(g * n.H))) + std::abs(n.H_L) + std::abs(n.H_Lbar);
    d.reconstruction = std::max(d.reconstruction, rec.cwiseAbs().maxCoeff() / std::max(hn, 1e-300));
  }
  return d;
}

}  // namespace

double NullFrameField::integrate(const std::function<double(const NodeFrame&)>& f) const {
  std::vector<double> v(nodes_.size());
  for (std::size_t k = 0; k < nodes_.size(); ++k) v[k] = f(nodes_[k]);
  return mesh_->integrate(v);
}

double NullFrameField::torsion_max() const {
  double m = 0.0;
  for (const auto& n : nodes_) m = std::max(m, std::sqrt(std::max(0.0, n.zeta.dot(n.sigma_inv * n.zeta))));
  return m;
}

std::pair<Vec4, Vec4> slice_normals(const Ambient& ambient, const PointData& p) {
  const Mat4 g = ambient.metric(p.x);
  Mat2 sig;
  sig(0, 0) = p.t_theta.dot(g * p.t_theta);
  sig(0, 1) = sig(1, 0) = p.t_theta.dot(g * p.t_phi_s);
  sig(1, 1) = p.t_phi_s.dot(g * p.t_phi_s);
  const Vec4 dt(1.0, 0.0, 0.0, 0.0);
  const Vec2 c = sig.inverse() * Vec2(p.t_theta.dot(g * dt), p.t_phi_s.dot(g * dt));
  const Vec4 N = dt - c(0) * p.t_theta - c(1) * p.t_phi_s;
  const double nn = N.dot(g * N);
  if (!(nn < 0.0)) throw GaugeError("normal projection of d_t is not timelike");
  const Vec4 e4 = N / std::sqrt(-nn);
  Vec4 lower = Vec4::Zero();
  for (const auto& q : permutations())
    lower(q[0]) += levi(q[0], q[1], q[2], q[3]) * e4(q[1]) * p.t_theta(q[2]) * p.t_phi_s(q[3]);
  const Vec4 up = g.inverse() * lower;
  return {-up / std::sqrt(up.dot(g * up)), e4};
}

NullFrameField null_frame(const SurfaceMesh& mesh, GaugeSpec gauge) {
  LogScale scale = gauge.extra_log_scale;
  double zeta_residual = 0.0;
  if (gauge.kind == GaugeKind::cone) {
    GaugeSpec base;
    base.kind = GaugeKind::slice;
    const auto frames0 = evaluate_frames(mesh, context_for(base, {}));
    const int lmax = std::min({gauge.cone_lmax, mesh.rule().n_theta() - 1, (mesh.rule().n_phi() - 1) / 2});
    auto u = std::make_shared<quadrature::ShSeries>(fit_exact_part(mesh, frames0, lmax));
    LogScale extra = gauge.extra_log_scale;
    scale = [u, extra](double th, double ph) { return (*u)(th, ph) + (extra ? extra(th, ph) : 0.0); };
  }
  auto frames = evaluate_frames(mesh, context_for(gauge, scale));
  FrameDiagnostics diag = diagnose(frames);
  if (gauge.kind == GaugeKind::cone) zeta_residual = zeta_l2(mesh, frames);
  diag.zeta_residual = zeta_residual;
  return NullFrameField(mesh, std::move(gauge), std::move(frames), std::move(scale), diag);
}

// ---------------------------------------------------------------------------
// Second-layer quantities

namespace {

// d/dtheta and d/dphi at the node of a field sampled at the cross of offsets.
struct CrossDiff {
  double th, ph;
};

template <typename Fn>
CrossDiff cross_diff(Fn&& f, double h) {
  return {d4(f(-2, 0), f(-1, 0), f(1, 0), f(2, 0), h), d4(f(0, -2), f(0, -1), f(0, 1), f(0, 2), h)};
}

// Coordinate derivatives at the node of the lower tensor S given in the scaled basis
// at lattice points. ds[c](a, b) = d_c S_ab.
std::array<Mat2, 2> tensor_derivatives(Stencil& st, const std::function<Mat2(int, int)>& scaled) {
  const double h = st.h(), s = st.s(0), c = st.c(0);
  std::array<Mat2, 2> d;
  const Mat2 S0 = scaled(0, 0);
  for (int a = 0; a < 2; ++a)
    for (int b = a; b < 2; ++b) {
      const int k = a + b;  // number of phi indices
      const auto cd = cross_diff([&](int i, int j) { return scaled(i, j)(a, b); }, h);
      const double sk = std::pow(s, k);
      d[0](a, b) = d[0](b, a) = sk * cd.th + k * std::pow(s, k - 1) * c * S0(a, b);
      d[1](a, b) = d[1](b, a) = sk * cd.ph;
    }
  return d;
}

Mat2 unscale(Mat2 m, double s) {
  m(0, 1) *= s;
  m(1, 0) *= s;
  m(1, 1) *= s * s;
  return m;
}

// Intrinsic Christoffels Gamma^e_{ab} at the node, gam[e](a, b).
std::array<Mat2, 2> intrinsic_christoffel(Stencil& st) {
  const Geom& G = st.geom(0, 0);
  const PointData& p = st.point(0, 0);
  const double s = p.s;
  const std::array<Vec4, 2> T = {p.t_theta, s * p.t_phi_s};
  const std::array<Vec4, 3> II = {G.ii[0], s * G.ii[1], s * s * G.ii[2]};
  const Mat2 sig_inv = unscale(G.sig, s).inverse();
  std::array<Mat2, 2> lower;  // lower[f](a, b) = <II_ab, T_f>
  for (int f = 0; f < 2; ++f)
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) lower[f](a, b) = II[a + b].dot(G.g * T[f]);
  std::array<Mat2, 2> gam;
  for (int e = 0; e < 2; ++e) gam[e] = sig_inv(e, 0) * lower[0] + sig_inv(e, 1) * lower[1];
  return gam;
}

// nabla_c S_ab from coordinate derivatives.
double covariant(const std::array<Mat2, 2>& dS, const Mat2& S, const std::array<Mat2, 2>& gam, int c, int a, int b) {
  double v = dS[c](a, b);
  for (int e = 0; e < 2; ++e) v -= gam[e](c, a) * S(e, b) + gam[e](c, b) * S(a, e);
  return v;
}

}  // namespace

std::vector<NodeCurvature> curvature_equations(const NullFrameField& frame) {
  const SurfaceMesh& mesh = frame.mesh();
  const Context ctx = context_for(frame.gauge(), frame.log_scale());
  std::vector<NodeCurvature> out(mesh.size());
  parallel_for(mesh.size(), [&](std::size_t k) {
    auto st = std::make_unique<Stencil>(mesh, ctx, k);
    const NodeFrame& nf = frame[k];
    const double s = st->s(0), c = st->c(0), h = st->h();
    const double sqrt_det = nf.area_element;
    NodeCurvature r;
    // Gauss curvature from the connection of the tangent frame.
    const double dth_wphi = d4(st->layer1(-2, 0).omega(1), st->layer1(-1, 0).omega(1), st->layer1(1, 0).omega(1),
                               st->layer1(2, 0).omega(1), h);
    const double dph_wth = d4(st->layer1(0, -2).omega(0), st->layer1(0, -1).omega(0), st->layer1(0, 1).omega(0),
                              st->layer1(0, 2).omega(0), h);
    r.gauss_curvature = -(dth_wphi - dph_wth) / sqrt_det;
    // d zeta with zeta_phi = s zeta~_phi.
    const double dth_zphi = d4(st->layer1(-2, 0).zeta(1), st->layer1(-1, 0).zeta(1), st->layer1(1, 0).zeta(1),
                               st->layer1(2, 0).zeta(1), h);
    const double dph_zth = d4(st->layer1(0, -2).zeta(0), st->layer1(0, -1).zeta(0), st->layer1(0, 1).zeta(0),
                              st->layer1(0, 2).zeta(0), h);
    const Layer1& l0 = st->layer1(0, 0);
    r.dzeta = s * dth_zphi + c * l0.zeta(1) - dph_zth;

    const spacetime::Tensor4 R = mesh.ambient().riemann(nf.x);
    const std::array<Vec4, 2> T = {nf.t_theta, nf.t_phi};
    const Mat2& si = nf.sigma_inv;

    // Codazzi for chi: C_{theta phi d}.
    const auto gam = intrinsic_christoffel(*st);
    const auto dchi = tensor_derivatives(*st, [&](int i, int j) { return st->layer1(i, j).chi; });
    Vec2 defect, dterm1, dterm2, rterm, zterm;
    for (int d = 0; d < 2; ++d) {
      const double n1 = covariant(dchi, nf.chi, gam, 0, 1, d);  // nabla_theta chi_phi d
      const double n2 = covariant(dchi, nf.chi, gam, 1, 0, d);  // nabla_phi chi_theta d
      const double rc = spacetime::contract(R, T[d], nf.L, T[0], T[1]);  // <R(d_th, d_ph) L, d_d>
      const double zc = nf.zeta(1) * nf.chi(0, d) - nf.zeta(0) * nf.chi(1, d);
      defect(d) = (n1 - n2 - rc - zc) / sqrt_det;
      dterm1(d) = n1 / sqrt_det;
      dterm2(d) = n2 / sqrt_det;
      rterm(d) = rc / sqrt_det;
      zterm(d) = zc / sqrt_det;
    }
    auto norm = [&](const Vec2& v) { return std::sqrt(std::max(0.0, v.dot(si * v))); };
    r.codazzi = norm(defect);
    r.codazzi_scale = norm(dterm1) + norm(dterm2) + norm(rterm) + norm(zterm);

    // Ricci equation, (theta, phi) component.
    const Mat2 chi_up = nf.chi * si;  // chi_a^c
    const Mat2 prod = chi_up * nf.chibar;  // chi_a^c chibar_cb
    const double alg = 0.5 * (prod(0, 1) - prod(1, 0));
    const double rl = 0.5 * spacetime::contract(R, nf.Lbar, nf.L, T[0], T[1]);
    r.ricci = (alg + r.dzeta - rl) / sqrt_det;
    r.ricci_scale = (std::abs(alg) + std::abs(r.dzeta) + std::abs(rl)) / sqrt_det;

    // Gauss equation.
    const Mat4 ginv = nf.g.inverse();
    double ric_LLb = 0.0, scal = 0.0;
    for (int a = 0; a < 4; ++a)
      for (int cc = 0; cc < 4; ++cc) {
        if (ginv(a, cc) == 0.0) continue;
        for (int b = 0; b < 4; ++b)
          for (int d = 0; d < 4; ++d) {
            const double rabcd = R(a, b, cc, d);
            ric_LLb += ginv(a, cc) * rabcd * nf.L(b) * nf.Lbar(d);
            scal += ginv(a, cc) * ginv(b, d) * rabcd;
          }
      }
    const double rllll = 0.5 * spacetime::contract(R, nf.Lbar, nf.L, nf.L, nf.Lbar);
    const double trchi = (si * nf.chi).trace(), trchibar = (si * nf.chibar).trace();
    const double cross = (si * nf.chi * si * nf.chibar).trace();
    const double lhs = scal + ric_LLb + rllll;
    const double rhs = 2.0 * r.gauss_curvature + trchi * trchibar - cross;
    r.gauss = lhs - rhs;
    r.gauss_scale = std::abs(scal) + std::abs(ric_LLb) + std::abs(rllll) + 2.0 * std::abs(r.gauss_curvature) +
                    std::abs(trchi * trchibar) + std::abs(cross);
    out[k] = r;
  });
  return out;
}

std::vector<Vec2> tangent_divergence(const NullFrameField& frame, const TensorOfFrame& lower_tensor) {
  const SurfaceMesh& mesh = frame.mesh();
  const Context ctx = context_for(frame.gauge(), frame.log_scale());
  std::vector<Vec2> out(mesh.size());
  parallel_for(mesh.size(), [&](std::size_t k) {
    auto st = std::make_unique<Stencil>(mesh, ctx, k);
    std::array<std::optional<Mat2>, 17 * 17> cache;
    auto scaled = [&](int i, int j) -> Mat2 {
      auto& slot = cache[lattice_slot(i, j)];
      if (!slot) slot = lower_tensor(st->scaled_frame(i, j));
      return *slot;
    };
    const double s = st->s(0);
    const Mat2 S = unscale(scaled(0, 0), s);
    const auto dS = tensor_derivatives(*st, scaled);
    const auto gam = intrinsic_christoffel(*st);
    const Mat2& si = frame[k].sigma_inv;
    Vec2 div_lower = Vec2::Zero();  // sigma^{bd} nabla_b S_cd
    for (int cc = 0; cc < 2; ++cc)
      for (int b = 0; b < 2; ++b)
        for (int d = 0; d < 2; ++d) div_lower(cc) += si(b, d) * covariant(dS, S, gam, b, cc, d);
    out[k] = si * div_lower;
  });
  return out;
}

MeanCurvatureGaugeReport mean_curvature_gauge_report(const SurfaceMesh& mesh, const NullFrameField& frame) {
  GaugeSpec mc;
  mc.kind = GaugeKind::mean_curvature;
  const NullFrameField hframe = null_frame(mesh, mc);
  const Context ctx = context_for(mc, {});
  MeanCurvatureGaugeReport rep;
  rep.H_norm.resize(mesh.size());
  rep.alpha_H.resize(mesh.size());
  rep.dlog_H.resize(mesh.size());
  parallel_for(mesh.size(), [&](std::size_t k) {
    auto st = std::make_unique<Stencil>(mesh, ctx, k);
    auto logh = [&](int i, int j) {
      const Geom& G = st->geom(i, j);
      return 0.5 * std::log(G.H.dot(G.g * G.H));
    };
    const auto cd = cross_diff(logh, st->h());
    rep.H_norm[k] = std::exp(logh(0, 0));
    rep.alpha_H[k] = hframe[k].zeta;
    rep.dlog_H[k] = Vec2(cd.th, cd.ph);
  });
  std::vector<double> minus(mesh.size()), plus(mesh.size()), a2(mesh.size()), d2(mesh.size()), z2(mesh.size());
  double lmin = 1e300, lmax = -1e300, bmin = 1e300, bmax = -1e300;
  for (std::size_t k = 0; k < mesh.size(); ++k) {
    const Mat2& si = hframe[k].sigma_inv;
    const Vec2 m = rep.alpha_H[k] + rep.dlog_H[k], p = rep.alpha_H[k] - rep.dlog_H[k];
    minus[k] = m.dot(si * m);
    plus[k] = p.dot(si * p);
    a2[k] = rep.alpha_H[k].dot(si * rep.alpha_H[k]);
    d2[k] = rep.dlog_H[k].dot(si * rep.dlog_H[k]);
    z2[k] = frame[k].zeta.dot(si * frame[k].zeta);
    lmin = std::min(lmin, frame[k].H_L);
    lmax = std::max(lmax, frame[k].H_L);
    bmin = std::min(bmin, frame[k].H_Lbar);
    bmax = std::max(bmax, frame[k].H_Lbar);
  }
  rep.minus_residual = l2_norm(mesh, minus);
  rep.plus_residual = l2_norm(mesh, plus);
  rep.scale = l2_norm(mesh, a2) + l2_norm(mesh, d2);
  rep.torsion = l2_norm(mesh, z2);
  rep.H_L_spread = lmax - lmin;
  rep.H_Lbar_spread = bmax - bmin;
  rep.H_L_mean = frame.integrate([](const NodeFrame& n) { return n.H_L; }) / mesh.area();
  rep.H_Lbar_mean = frame.integrate([](const NodeFrame& n) { return n.H_Lbar; }) / mesh.area();
  return rep;
}

}  // namespace codim2::surface
