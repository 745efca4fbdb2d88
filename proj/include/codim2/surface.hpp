#pragma once

// Spacelike 2-surfaces in four-dimensional static spacetimes, sampled on the
// Gauss-Legendre x uniform parameter grid, with null frames and the null second
// fundamental forms.
//
// The ambient chart is the static Cartesian chart (t, x, y, z). Tangential derivatives
// are 4th-order central differences on a lattice of parameter offsets (theta + i h,
// phi + j h) around each node, h = step_factor * pi / n_theta. Immersions are evaluated
// at polar angles outside [0, pi] through their smooth continuation across the poles.
// Only smooth quantities are differenced: ambient vectors and lower tensor components
// with every phi index divided by sin(theta).

#include <Eigen/Dense>
#include <unsupported/Eigen/AutoDiff>

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "codim2/errors.hpp"
#include "codim2/quadrature.hpp"
#include "codim2/spacetime.hpp"

namespace codim2::surface {

using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix4d;
using AD = Eigen::AutoDiffScalar<Eigen::Vector2d>;
using Vec4AD = Eigen::Matrix<AD, 4, 1>;
using Gamma4 = std::array<Mat4, 4>;  // gamma[a](b, c) = Gamma^a_{bc}

// A static spacetime of dimension 4 in Cartesian coordinates with Q = r dr ^ dt.
class Ambient {
 public:
  explicit Ambient(spacetime::StaticParameters p);

  const spacetime::StaticParameters& params() const { return chart_.warp().params(); }
  const spacetime::StaticCartesian& chart() const { return chart_; }
  const spacetime::StaticWarp& warp() const { return chart_.warp(); }

  Mat4 metric(const Vec4& x) const { return chart_.metric4(x); }
  void christoffel(const Vec4& x, Gamma4& gamma) const { chart_.christoffel4(x, gamma); }
  // Q_{ab} with Q(d_r, d_t) = r, i.e. Q_{it} = x_i.
  Mat4 q_form(const Vec4& x) const;
  // Riemann R_{abcd}: closed form for Schwarzschild and constant curvature, finite
  // differences otherwise.
  spacetime::Tensor4 riemann(const Vec4& x) const;
  void check_domain(const Vec4& x) const;
  // r^*(r) with dr^*/dr = 1/F, r^*(0) = 0 where regular; Schwarzschild uses
  // r + 2m log(r/2m - 1). Throws ConfigError for custom-f.
  double tortoise(double r) const;

 private:
  spacetime::StaticCartesian chart_;
};

// Ambient position as a function of (theta, phi) with derivatives.
class Immersion {
 public:
  virtual ~Immersion() = default;
  virtual std::string name() const = 0;
  virtual Vec4AD position(const AD& theta, const AD& phi) const = 0;
};

class FunctionImmersion : public Immersion {
 public:
  FunctionImmersion(std::string name, std::function<Vec4AD(const AD&, const AD&)> fn)
      : name_(std::move(name)), fn_(std::move(fn)) {}
  std::string name() const override { return name_; }
  Vec4AD position(const AD& theta, const AD& phi) const override { return fn_(theta, phi); }

 private:
  std::string name_;
  std::function<Vec4AD(const AD&, const AD&)> fn_;
};

// Real spherical-harmonic coefficient.
struct ShTerm {
  int l = 0, m = 0;
  double coeff = 0.0;
};

struct FamilyParams {
  double t0 = 0.0;
  double r0 = 5.0;
  double beta = 0.0;                    // boosted-sphere velocity along z
  std::vector<ShTerm> rho_terms;        // rho = r0 (1 + sum c Y)
  std::vector<ShTerm> time_terms;       // t = t0 + sum c Y
  double epsilon = 0.0;                 // random-graph amplitude bound
  int random_lmax = 3;
  std::uint64_t seed = 1;
  Eigen::Vector3d axes{1.0, 1.0, 1.0};  // ellipsoid semi-axes
  Eigen::Vector3d center{0.0, 0.0, 0.0};
  bool outgoing = false;                // cone-section: outgoing instead of incoming cone
  std::string csv_path;
  int csv_lmax = 12;
};

// sphere, boosted-sphere, cone-section, slice-graph, random-graph, ellipsoid,
// offset-sphere, csv. Unknown names throw ConfigError.
std::shared_ptr<Immersion> family_catalog(const std::string& name, const FamilyParams& params,
                                          const Ambient& ambient);
std::vector<std::string> family_names();

// Random spherical-harmonic terms, l = 1..lmax, with sup-norm bound epsilon.
std::vector<ShTerm> random_sh_terms(int lmax, double epsilon, std::uint64_t seed);

// Position, tangent d_theta F and scaled tangent d_phi F / sin(theta) at a lattice point.
struct PointData {
  Vec4 x = Vec4::Zero();
  Vec4 t_theta = Vec4::Zero();
  Vec4 t_phi_s = Vec4::Zero();
  double s = 0.0, c = 1.0;  // sin and cos of the (continued) polar angle
  Vec4 velocity = Vec4::Zero();
  bool has_velocity = false;
};

class SurfaceMesh;

// Supplies point data at parameter offsets around a node.
class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual std::string name() const = 0;
  virtual PointData sample(const SurfaceMesh& mesh, std::size_t node, int i, int j) const = 0;
  // Largest |offset| per axis the source can serve; analytic sources serve any.
  virtual int reach() const { return 1 << 20; }
};

class ImmersionSource : public SampleSource {
 public:
  explicit ImmersionSource(std::shared_ptr<const Immersion> imm) : imm_(std::move(imm)) {}
  std::string name() const override { return imm_->name(); }
  PointData sample(const SurfaceMesh& mesh, std::size_t node, int i, int j) const override;
  PointData evaluate(double theta, double phi) const;
  const Immersion& immersion() const { return *imm_; }

 private:
  std::shared_ptr<const Immersion> imm_;
};

struct SurfaceOptions {
  int n_theta = 64;
  int n_phi = 128;
  double step_factor = 0.25;
};

class SurfaceMesh {
 public:
  SurfaceMesh(std::shared_ptr<const Ambient> ambient, std::shared_ptr<const SampleSource> source,
              SurfaceOptions options);

  const Ambient& ambient() const { return *ambient_; }
  std::shared_ptr<const Ambient> ambient_ptr() const { return ambient_; }
  const SampleSource& source() const { return *source_; }
  const quadrature::SphereRule& rule() const { return rule_; }
  const SurfaceOptions& options() const { return options_; }
  double step() const { return h_; }
  std::size_t size() const { return rule_.size(); }
  double theta(std::size_t node) const { return rule_.theta(rule_.theta_index(node)); }
  double phi(std::size_t node) const { return rule_.phi(rule_.phi_index(node)); }

  const PointData& point(std::size_t node) const { return points_[node]; }
  const Mat2& sigma(std::size_t node) const { return sigma_[node]; }  // coordinate components
  const std::vector<double>& area_element() const { return area_; }
  double integrate(std::span<const double> field) const;
  double area() const;

 private:
  std::shared_ptr<const Ambient> ambient_;
  std::shared_ptr<const SampleSource> source_;
  SurfaceOptions options_;
  quadrature::SphereRule rule_;
  double h_;
  std::vector<PointData> points_;
  std::vector<Mat2> sigma_;
  std::vector<double> area_;
};

// Builds the mesh; throws NotSpacelike naming the first node whose induced metric is
// not positive definite, DomainError if a node leaves the ambient domain.
SurfaceMesh build_surface(std::shared_ptr<const Ambient> ambient, std::shared_ptr<const SampleSource> source,
                          SurfaceOptions options = {});
SurfaceMesh build_surface(std::shared_ptr<const Ambient> ambient, std::shared_ptr<const Immersion> immersion,
                          SurfaceOptions options = {});

// Null frame choice. The orthonormal normal pair (e3 spacelike outward, e4 future
// timelike) comes from the slice (normal part of d_t) or the mean-curvature gauge;
// then L = a (e4 + e3), Lbar = (e4 - e3)/a with a = exp(u).
enum class GaugeKind { slice, mean_curvature, cone, flow };

std::string gauge_name(GaugeKind g);
GaugeKind gauge_from_name(const std::string& name);

// log a and nothing else; must be smooth in (theta, phi) across the poles.
using LogScale = std::function<double(double theta, double phi)>;

struct GaugeSpec {
  GaugeKind kind = GaugeKind::slice;
  LogScale extra_log_scale;  // optional, multiplies a
  int cone_lmax = 16;
};

// Per-node frame data in coordinate components (theta, phi).
struct NodeFrame {
  Vec4 x, t_theta, t_phi;
  Mat2 sigma, sigma_inv;
  double area_element = 0.0;
  Vec4 e3, e4, L, Lbar, H;
  double a = 1.0;
  Mat2 chi, chibar;
  Vec2 zeta;
  double H_L = 0.0, H_Lbar = 0.0;  // <H, L>, <H, Lbar>
  double Q_LLbar = 0.0;            // Q(L, Lbar)
  double Q_tangent = 0.0;          // Q(d_theta, d_phi)
  Vec2 Q_L, Q_Lbar;                // Q(L, d_a), Q(Lbar, d_a)
  double dt_L = 0.0, dt_Lbar = 0.0;  // <d_t, L>, <d_t, Lbar>
  Mat4 g, q;
};

struct FrameDiagnostics {
  double null_defect = 0.0;        // max |<L,L>|, |<Lbar,Lbar>|, |<L,Lbar> + 2|
  double orthogonality = 0.0;      // max |<L, T>|, |<Lbar, T>| relative to |T|
  double reconstruction = 0.0;     // max |H + (1/2)<H,Lbar> L + (1/2)<H,L> Lbar| / |H|
  double zeta_residual = 0.0;      // cone gauge: area-weighted L2 norm of zeta after the fit
};

class NullFrameField {
 public:
  NullFrameField(const SurfaceMesh& mesh, GaugeSpec gauge, std::vector<NodeFrame> nodes,
                 LogScale log_scale, FrameDiagnostics diag)
      : mesh_(&mesh), gauge_(std::move(gauge)), nodes_(std::move(nodes)),
        log_scale_(std::move(log_scale)), diag_(diag) {}
  const SurfaceMesh& mesh() const { return *mesh_; }
  const GaugeSpec& gauge() const { return gauge_; }
  const NodeFrame& operator[](std::size_t k) const { return nodes_[k]; }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<NodeFrame>& nodes() const { return nodes_; }
  // Full log-scale in use (cone fit times extra), empty for unit scale.
  const LogScale& log_scale() const { return log_scale_; }
  const FrameDiagnostics& diagnostics() const { return diag_; }
  // Integral of a per-node scalar.
  double integrate(const std::function<double(const NodeFrame&)>& f) const;
  // Largest sigma-norm of zeta over the nodes.
  double torsion_max() const;

 private:
  const SurfaceMesh* mesh_;
  GaugeSpec gauge_;
  std::vector<NodeFrame> nodes_;
  LogScale log_scale_;
  FrameDiagnostics diag_;
};

// Slice-gauge pair (e3, e4) at a single point from its tangents alone.
std::pair<Vec4, Vec4> slice_normals(const Ambient& ambient, const PointData& p);

// Throws GaugeError if the mean-curvature gauge meets a non-spacelike H.
NullFrameField null_frame(const SurfaceMesh& mesh, GaugeSpec gauge = {});

// Second-layer quantities at each node.
struct NodeCurvature {
  double gauss_curvature = 0.0;  // intrinsic, from the tangent-frame connection
  double dzeta = 0.0;            // (d zeta)(d_theta, d_phi)
  double codazzi = 0.0;          // sigma-norm of the Codazzi defect for chi
  double codazzi_scale = 0.0;    // sigma-norm of the covariant-derivative terms
  double ricci = 0.0;            // Ricci-equation defect, (theta, phi) component / sqrt(det sigma)
  double ricci_scale = 0.0;
  double gauss = 0.0;            // Gauss-equation defect (scalar)
  double gauss_scale = 0.0;
};

std::vector<NodeCurvature> curvature_equations(const NullFrameField& frame);

// Covariant divergence of a symmetric tangent tensor field given in lower coordinate
// components by a function of the node-frame data at lattice points. Returns the
// upper vector (nabla_b S^{ab}) per node.
using TensorOfFrame = std::function<Mat2(const NodeFrame&)>;
std::vector<Vec2> tangent_divergence(const NullFrameField& frame, const TensorOfFrame& lower_tensor);

struct MeanCurvatureGaugeReport {
  std::vector<double> H_norm;
  std::vector<Vec2> alpha_H, dlog_H;
  double minus_residual = 0.0;  // L2 norm of alpha_H + d log|H|   (case 1)
  double plus_residual = 0.0;   // L2 norm of alpha_H - d log|H|   (case 2)
  double scale = 0.0;           // L2 norm of d log|H| plus that of alpha_H
  // Hypothesis checks against the supplied frame.
  double torsion = 0.0;         // L2 norm of zeta of the supplied frame
  double H_L_spread = 0.0, H_Lbar_spread = 0.0;  // max - min over nodes
  double H_L_mean = 0.0, H_Lbar_mean = 0.0;
};

// Throws GaugeError if H is not spacelike at some node.
MeanCurvatureGaugeReport mean_curvature_gauge_report(const SurfaceMesh& mesh, const NullFrameField& frame);

// Area-weighted L2 norm sqrt(integral |v|^2 / area) of a per-node quantity.
double l2_norm(const SurfaceMesh& mesh, std::span<const double> squared_pointwise);

// Flat index of a lattice offset, used by sources that track a fixed stencil.
constexpr int kLatticeReach = 8;
inline int lattice_slot(int i, int j) { return (i + kLatticeReach) * (2 * kLatticeReach + 1) + (j + kLatticeReach); }

}  // namespace codim2::surface
