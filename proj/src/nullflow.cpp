#include "codim2/nullflow.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

#include "codim2/parallel.hpp"

namespace codim2::nullflow {

using surface::Mat2;
using surface::Mat4;
using surface::PointData;

namespace {

constexpr int kReach = 4;

// Offsets whose positions determine tangents on the radius-2 cross around each
// radius-2 cross point: the axes out to 4 and the 5x5 box.
struct OffsetTable {
  std::vector<std::pair<int, int>> offsets;
  std::array<int, (2 * kReach + 1) * (2 * kReach + 1)> index{};
  OffsetTable() {
    index.fill(-1);
    for (int i = -kReach; i <= kReach; ++i)
      for (int j = -kReach; j <= kReach; ++j) {
        const bool box = std::abs(i) <= 2 && std::abs(j) <= 2;
        const bool axis = i == 0 || j == 0;
        if (!box && !axis) continue;
        index[slot(i, j)] = static_cast<int>(offsets.size());
        offsets.emplace_back(i, j);
      }
  }
  static int slot(int i, int j) { return (i + kReach) * (2 * kReach + 1) + (j + kReach); }
  int find(int i, int j) const {
    if (std::abs(i) > kReach || std::abs(j) > kReach) return -1;
    return index[slot(i, j)];
  }
};

const OffsetTable& offset_table() {
  static const OffsetTable t;
  return t;
}

struct Tracked {
  std::vector<Vec4> x, v;  // node-major, offset-minor
};

// Positions and velocities of the tracked points at one parameter value.
class FlowSource : public surface::SampleSource {
 public:
  FlowSource(std::shared_ptr<const Tracked> data, std::string name) : data_(std::move(data)), name_(std::move(name)) {}
  std::string name() const override { return name_; }
  int reach() const override { return kReach; }

  PointData sample(const SurfaceMesh& mesh, std::size_t node, int i, int j) const override {
    const auto& tab = offset_table();
    const std::size_t stride = tab.offsets.size();
    auto at = [&](int a, int b) -> const Vec4& {
      const int k = tab.find(a, b);
      if (k < 0) throw DomainError("flow surface: offset outside the tracked stencil");
      return data_->x[node * stride + static_cast<std::size_t>(k)];
    };
    const double h = mesh.step();
    const double th = mesh.theta(node) + i * h;
    PointData p;
    p.x = at(i, j);
    p.s = std::sin(th);
    p.c = std::cos(th);
    p.t_theta = (at(i - 2, j) - 8.0 * at(i - 1, j) + 8.0 * at(i + 1, j) - at(i + 2, j)) / (12.0 * h);
    p.t_phi_s = (at(i, j - 2) - 8.0 * at(i, j - 1) + 8.0 * at(i, j + 1) - at(i, j + 2)) / (12.0 * h * p.s);
    p.velocity = data_->v[node * stride + static_cast<std::size_t>(tab.find(i, j))];
    p.has_velocity = true;
    return p;
  }

 private:
  std::shared_ptr<const Tracked> data_;
  std::string name_;
};

// x'' = -Gamma(x', x').
void geodesic_rhs(const surface::Ambient& amb, const Vec4& x, const Vec4& v, Vec4& dx, Vec4& dv) {
  surface::Gamma4 gamma;
  amb.christoffel(x, gamma);
  dx = v;
  for (int a = 0; a < 4; ++a) dv(a) = -v.dot(gamma[a] * v);
}

double ricci_null(const surface::Ambient& amb, const Vec4& x, const Vec4& n) {
  const auto R = amb.riemann(x);
  const Mat4 gi = amb.metric(x).inverse();
  double ric = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int c = 0; c < 4; ++c) {
      if (gi(a, c) == 0.0) continue;
      double acc = 0.0;
      for (int b = 0; b < 4; ++b)
        for (int d = 0; d < 4; ++d) acc += R(a, b, c, d) * n(b) * n(d);
      ric += gi(a, c) * acc;
    }
  return ric;
}

double d5(const std::vector<double>& y, std::size_t k, double h) {
  return (y[k - 2] - 8.0 * y[k - 1] + 8.0 * y[k + 1] - y[k + 2]) / (12.0 * h);
}

}  // namespace

FTerms f_terms(const NullFrameField& frame) {
  std::vector<std::size_t> bad;
  for (std::size_t k = 0; k < frame.size(); ++k)
    if (!(frame[k].H_Lbar > 0.0)) bad.push_back(k);
  if (!bad.empty()) {
    std::ostringstream os;
    os << "F functional needs <H,Lbar> > 0; violated at " << bad.size() << " node(s):";
    for (std::size_t i = 0; i < std::min<std::size_t>(bad.size(), 20); ++i) os << ' ' << bad[i];
    throw PreconditionError(os.str());
  }
  FTerms t;
  t.xi_over_H = frame.integrate([](const surface::NodeFrame& n) { return -3.0 * n.dt_Lbar / n.H_Lbar; });
  t.xi = frame.integrate([](const surface::NodeFrame& n) { return -3.0 * n.dt_Lbar; });
  t.Q = frame.integrate([](const surface::NodeFrame& n) { return n.Q_LLbar; });
  t.F = (2.0 / 3.0) * t.xi_over_H - 0.5 * t.Q;
  return t;
}

double f_functional(const NullFrameField& frame) { return f_terms(frame).F; }

struct NullFlow::Impl {
  std::shared_ptr<const surface::Ambient> ambient;
  surface::SurfaceOptions options;
  std::string name;
  std::shared_ptr<Tracked> data;
  double s = 0.0;
  int steps = 0;
  double null_defect = 0.0, null_drift = 0.0;
};

NullFlow::NullFlow(const SurfaceMesh& initial, surface::LogScale extra_log_scale) : impl_(std::make_unique<Impl>()) {
  impl_->ambient = initial.ambient_ptr();
  impl_->options = initial.options();
  impl_->name = initial.source().name() + " (flowed)";
  const auto& tab = offset_table();
  const std::size_t stride = tab.offsets.size();
  auto data = std::make_shared<Tracked>();
  data->x.resize(initial.size() * stride);
  data->v.resize(initial.size() * stride);
  const double h = initial.step();
  parallel_for(initial.size(), [&](std::size_t node) {
    for (std::size_t k = 0; k < stride; ++k) {
      const auto [i, j] = tab.offsets[k];
      const PointData p = initial.source().sample(initial, node, i, j);
      const auto [e3, e4] = surface::slice_normals(*impl_->ambient, p);
      double scale = 1.0;
      if (extra_log_scale) scale = std::exp(-extra_log_scale(initial.theta(node) + i * h, initial.phi(node) + j * h));
      data->x[node * stride + k] = p.x;
      data->v[node * stride + k] = scale * (e4 - e3);
    }
  });
  impl_->data = std::move(data);
}

NullFlow::~NullFlow() = default;
NullFlow::NullFlow(NullFlow&&) noexcept = default;
NullFlow& NullFlow::operator=(NullFlow&&) noexcept = default;

void NullFlow::advance(double ds) {
  const surface::Ambient& amb = *impl_->ambient;
  // Copy on write: states built earlier keep their snapshot.
  auto next = std::make_shared<Tracked>(*impl_->data);
  const std::size_t n = next->x.size();
  std::vector<double> defect(n, 0.0), drift(n, 0.0);
  parallel_for(n, [&](std::size_t k) {
    const Vec4 x0 = next->x[k], v0 = next->v[k];
    Vec4 k1x, k1v, k2x, k2v, k3x, k3v, k4x, k4v;
    geodesic_rhs(amb, x0, v0, k1x, k1v);
    geodesic_rhs(amb, x0 + 0.5 * ds * k1x, v0 + 0.5 * ds * k1v, k2x, k2v);
    geodesic_rhs(amb, x0 + 0.5 * ds * k2x, v0 + 0.5 * ds * k2v, k3x, k3v);
    geodesic_rhs(amb, x0 + ds * k3x, v0 + ds * k3v, k4x, k4v);
    const Vec4 x = x0 + ds / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    Vec4 v = v0 + ds / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    amb.check_domain(x);
    // Static chart: g_ti = 0, so keep the spatial part and solve for v^t.
    const Mat4 g = amb.metric(x);
    const Eigen::Vector3d vs = v.tail<3>();
    const double spatial = vs.dot(g.bottomRightCorner<3, 3>() * vs);
    const double F = -g(0, 0);
    drift[k] = std::abs(v.dot(g * v)) / std::max(spatial, 1e-300);
    v(0) = std::sqrt(spatial / F);
    defect[k] = std::abs(v.dot(g * v)) / std::max(spatial, 1e-300);
    next->x[k] = x;
    next->v[k] = v;
  });
  double worst = 0.0, worst_drift = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    worst = std::max(worst, defect[k]);
    worst_drift = std::max(worst_drift, drift[k]);
  }
  impl_->null_defect = worst;
  impl_->null_drift = worst_drift;
  impl_->data = std::move(next);
  impl_->s += ds;
  ++impl_->steps;
}

FlowState NullFlow::state() const {
  FlowState st;
  st.step = impl_->steps;
  st.s = impl_->s;
  st.null_defect = impl_->null_defect;
  st.null_drift = impl_->null_drift;
  auto source = std::make_shared<FlowSource>(impl_->data, impl_->name);
  auto mesh = std::make_shared<SurfaceMesh>(surface::build_surface(impl_->ambient, source, impl_->options));
  surface::GaugeSpec gauge;
  gauge.kind = surface::GaugeKind::flow;
  auto frame = std::make_shared<NullFrameField>(surface::null_frame(*mesh, gauge));
  const std::size_t n = frame->size();
  st.H_Lbar.resize(n);
  st.chibar_sq.resize(n);
  st.ricci.resize(n);
  parallel_for(n, [&](std::size_t k) {
    const auto& nf = (*frame)[k];
    st.H_Lbar[k] = nf.H_Lbar;
    const Mat2 m = nf.sigma_inv * nf.chibar;
    st.chibar_sq[k] = (m * m).trace();
    st.ricci[k] = ricci_null(*impl_->ambient, nf.x, nf.Lbar);
  });
  st.min_H_Lbar = std::numeric_limits<double>::infinity();
  st.max_H_Lbar = -std::numeric_limits<double>::infinity();
  for (double v : st.H_Lbar) {
    st.min_H_Lbar = std::min(st.min_H_Lbar, v);
    st.max_H_Lbar = std::max(st.max_H_Lbar, v);
  }
  st.area = mesh->area();
  if (st.min_H_Lbar > 0.0) {
    st.terms = f_terms(*frame);
  } else {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    st.terms = {nan, nan, nan, nan};
  }
  st.mesh = std::move(mesh);
  st.frame = std::move(frame);
  return st;
}

double NullFlow::s() const { return impl_->s; }
int NullFlow::steps() const { return impl_->steps; }
double NullFlow::last_null_defect() const { return impl_->null_defect; }

double NullFlow::min_radius() const {
  const auto& tab = offset_table();
  const std::size_t stride = tab.offsets.size();
  const std::size_t centre = static_cast<std::size_t>(tab.find(0, 0));
  double r = std::numeric_limits<double>::infinity();
  for (std::size_t k = centre; k < impl_->data->x.size(); k += stride) r = std::min(r, impl_->data->x[k].tail<3>().norm());
  return r;
}

FlowResult evolve(const SurfaceMesh& initial, const FlowOptions& options, surface::LogScale extra_log_scale) {
  NullFlow flow(initial, std::move(extra_log_scale));
  FlowResult out;
  out.ds = options.ds > 0.0 ? options.ds : 0.01 * flow.min_radius();
  out.states.push_back(flow.state());
  const double min0 = out.states[0].min_H_Lbar, max0 = out.states[0].max_H_Lbar;
  if (!(min0 > 0.0)) throw PreconditionError("null flow needs <H,Lbar> > 0 on the initial surface");
  for (int step = 0; step < options.n_steps; ++step) {
    try {
      flow.advance(out.ds);
    } catch (const DomainError& e) {
      out.terminated = true;
      out.termination = std::string("geodesic left the domain: ") + e.what();
      break;
    }
    out.states.push_back(flow.state());
    const FlowState& st = out.states.back();
    char buf[200];
    if (st.null_defect > options.null_tolerance) {
      std::snprintf(buf, sizeof buf, "null constraint defect %.3e exceeded %.1e at step %d", st.null_defect,
                    options.null_tolerance, st.step);
      out.terminated = true;
      out.termination = buf;
      break;
    }
    if (!(st.min_H_Lbar > options.caustic_fraction * min0)) {
      std::snprintf(buf, sizeof buf, "<H,Lbar> fell to %.3e at step %d", st.min_H_Lbar, st.step);
      out.terminated = true;
      out.termination = buf;
      break;
    }
    if (st.max_H_Lbar > options.blowup_factor * max0) {
      std::snprintf(buf, sizeof buf, "caustic approach: <H,Lbar> reached %.3e at step %d", st.max_H_Lbar, st.step);
      out.terminated = true;
      out.termination = buf;
      break;
    }
  }
  return out;
}

FlowChecks flow_checks(const FlowResult& flow, const verify::VerifyOptions& opt) {
  FlowChecks out;
  const auto& S = flow.states;
  if (S.empty()) throw PreconditionError("flow_checks: empty flow");
  const auto& mesh = *S[0].mesh;
  auto base = [&](const std::string& id, verify::ReportKind kind, double tol) {
    verify::IdentityReport r;
    r.id = id;
    r.kind = kind;
    r.resolution = std::to_string(mesh.rule().n_theta()) + "x" + std::to_string(mesh.rule().n_phi());
    r.surface = opt.surface_label.empty() ? mesh.source().name() : opt.surface_label;
    r.spacetime = spacetime::family_name(mesh.ambient().params().family);
    r.gauge = "flow";
    r.tolerance = (opt.tolerance > 0.0 ? opt.tolerance : tol) * opt.tolerance_scale;
    if (flow.terminated) r.warnings.push_back("flow terminated early: " + flow.termination);
    return r;
  };
  auto verdict_ineq = [](verify::IdentityReport& r) {
    r.rel_residual = std::abs(r.residual) / std::max(r.scale, 1e-300);
    r.verdict = r.residual >= -r.tolerance * r.scale ? verify::Verdict::pass : verify::Verdict::fail;
    r.equality = std::abs(r.residual) <= r.tolerance * r.scale;
  };

  // Monotonicity.
  out.monotonicity = base("flow_monotonicity", verify::ReportKind::inequality, 1e-7);
  double scale = 0.0, worst = std::numeric_limits<double>::infinity();
  for (const auto& st : S) scale = std::max(scale, st.terms.scale());
  out.max_increase = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < S.size(); ++k) {
    const double drop = S[k].terms.F - S[k + 1].terms.F;
    worst = std::min(worst, drop);
    out.max_increase = std::max(out.max_increase, -drop);
  }
  if (S.size() < 2) worst = 0.0;
  out.monotonicity.terms = {{"F_initial", S.front().terms.F}, {"F_final", S.back().terms.F}, {"steps", double(S.size() - 1)}};
  out.monotonicity.residual = worst;
  out.monotonicity.scale = scale;
  verdict_ineq(out.monotonicity);

  // Rates from five-point differences at interior steps.
  const double tol = verify::default_tolerance(mesh.rule().n_theta());
  out.q_rate = base("flow_q_rate", verify::ReportKind::identity, tol);
  out.xi_rate = base("flow_xi_rate", verify::ReportKind::inequality, tol);
  if (S.size() < 5) {
    for (auto* r : {&out.q_rate, &out.xi_rate}) {
      r->verdict = verify::Verdict::not_applicable;
      r->warnings.push_back("fewer than five flow states");
    }
    return out;
  }
  std::vector<double> q(S.size()), xoh(S.size());
  for (std::size_t k = 0; k < S.size(); ++k) {
    q[k] = S[k].terms.Q;
    xoh[k] = S[k].terms.xi_over_H;
  }
  double q_res = 0.0, q_scale = 0.0, x_worst = std::numeric_limits<double>::infinity(), x_scale = 0.0;
  double q_lhs = 0.0, q_rhs = 0.0, x_bound = 0.0, x_deriv = 0.0;
  for (std::size_t k = 2; k + 2 < S.size(); ++k) {
    const double dq = d5(q, k, flow.ds), rhs = -2.0 * S[k].terms.xi;
    if (std::abs(dq - rhs) >= q_res) {
      q_res = std::abs(dq - rhs);
      q_lhs = dq;
      q_rhs = rhs;
    }
    q_scale = std::max(q_scale, std::abs(dq) + std::abs(rhs));
    const double dx = d5(xoh, k, flow.ds), bound = -1.5 * S[k].terms.xi;
    if (bound - dx < x_worst) {
      x_worst = bound - dx;
      x_bound = bound;
      x_deriv = dx;
    }
    x_scale = std::max(x_scale, std::abs(dx) + std::abs(bound));
  }
  out.q_rate.terms = {{"d_ds_int_Q", q_lhs}, {"minus_2_int_xi_Lbar", q_rhs}};
  out.q_rate.residual = q_res;
  out.q_rate.scale = q_scale;
  out.q_rate.rel_residual = q_res / std::max(q_scale, 1e-300);
  out.q_rate.verdict = q_res <= out.q_rate.tolerance * q_scale ? verify::Verdict::pass : verify::Verdict::fail;
  out.q_rate.equality = out.q_rate.verdict == verify::Verdict::pass;
  out.xi_rate.terms = {{"bound", x_bound}, {"d_ds_int_xi_over_H", x_deriv}};
  out.xi_rate.residual = x_worst;
  out.xi_rate.scale = x_scale;
  verdict_ineq(out.xi_rate);
  return out;
}

RaychaudhuriStudy raychaudhuri_study(const SurfaceMesh& initial, double s_star, const std::vector<double>& ds_list) {
  RaychaudhuriStudy out;
  std::vector<std::vector<double>> fields;
  for (double ds : ds_list) {
    const double ratio = s_star / ds;
    const long m = std::lround(ratio);
    if (m < 2 || std::abs(ratio - double(m)) > 1e-9 * ratio)
      throw DomainError("raychaudhuri_study: s_star must be an integer multiple (>= 2) of each step");
    NullFlow flow(initial);
    std::vector<std::vector<double>> H;
    FlowState centre;
    for (long k = 0; k <= m + 2; ++k) {
      if (k > 0) flow.advance(ds);
      if (k >= m - 2) {
        FlowState st = flow.state();
        H.push_back(st.H_Lbar);
        if (k == m) centre = std::move(st);
      }
    }
    const std::size_t n = centre.H_Lbar.size();
    std::vector<double> res(n), sq(n), sc(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = (H[0][i] - 8.0 * H[1][i] + 8.0 * H[3][i] - H[4][i]) / (12.0 * ds);
      res[i] = d - centre.chibar_sq[i] - centre.ricci[i];
      sq[i] = res[i] * res[i];
      const double s = std::abs(d) + std::abs(centre.chibar_sq[i]) + std::abs(centre.ricci[i]);
      sc[i] = s * s;
    }
    out.ds.push_back(ds);
    out.residual_l2.push_back(surface::l2_norm(initial, sq));
    out.scale_l2.push_back(surface::l2_norm(initial, sc));
    fields.push_back(std::move(res));
  }
  auto diff = [&](std::size_t a, std::size_t b) {
    std::vector<double> d(fields[a].size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::pow(fields[a][i] - fields[b][i], 2);
    return surface::l2_norm(initial, d);
  };
  for (std::size_t k = 0; k + 2 < fields.size(); ++k) {
    const double e1 = diff(k, k + 1), e2 = diff(k + 1, k + 2);
    out.orders.push_back(std::log(e1 / e2) / std::log(out.ds[k] / out.ds[k + 1]));
  }
  if (!out.orders.empty()) out.order = out.orders.back();
  return out;
}

void write_trace_csv(std::ostream& out, const FlowResult& flow) {
  out << "s,F,min_H_Lbar,area\n";
  char buf[160];
  for (const auto& st : flow.states) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", st.s, st.terms.F, st.min_H_Lbar, st.area);
    out << buf;
  }
}

}  // namespace codim2::nullflow
