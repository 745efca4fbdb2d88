#pragma once

// Evolution of a spacelike 2-surface along its future incoming null hypersurface by
// affinely parametrized null geodesics, dX/ds = Lbar with D_Lbar Lbar = 0, and the
// functional
//   F = (2/3) int <xi, Lbar> / <H, Lbar> - (1/2) int Q(L, Lbar),  xi = -3 d_t,
// which is non-increasing along the flow when the ambient is vacuum.

#include <cmath>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "codim2/surface.hpp"
#include "codim2/verify.hpp"

namespace codim2::nullflow {

using surface::NullFrameField;
using surface::SurfaceMesh;
using surface::Vec4;

struct FTerms {
  double F = 0.0;
  double xi_over_H = 0.0;  // int <xi, Lbar> / <H, Lbar>
  double Q = 0.0;          // int Q(L, Lbar)
  double xi = 0.0;         // int <xi, Lbar>
  double scale() const { return (2.0 / 3.0) * std::abs(xi_over_H) + 0.5 * std::abs(Q); }
};

// Throws PreconditionError naming the nodes where <H, Lbar> <= 0.
FTerms f_terms(const NullFrameField& frame);
double f_functional(const NullFrameField& frame);

struct FlowState {
  int step = 0;
  double s = 0.0;
  std::shared_ptr<const SurfaceMesh> mesh;
  std::shared_ptr<const NullFrameField> frame;
  FTerms terms;
  double min_H_Lbar = 0.0, max_H_Lbar = 0.0;
  double area = 0.0;
  // Largest |<v,v>| / |v_spatial|^2 over tracked points after and before the projection
  // onto the null cone in the last step.
  double null_defect = 0.0, null_drift = 0.0;
  // Per node: <H, Lbar>, |chibar|^2 and Ric(Lbar, Lbar).
  std::vector<double> H_Lbar, chibar_sq, ricci;
};

struct FlowOptions {
  double ds = 0.0;                  // <= 0: 0.01 times the smallest areal radius
  int n_steps = 20;
  double caustic_fraction = 1e-3;   // stop when min <H,Lbar> < fraction * initial min
  double blowup_factor = 1e3;       // stop when max <H,Lbar> > factor * initial max
  double null_tolerance = 1e-10;
};

// Tracks the points of every node's finite-difference stencil along null geodesics.
// Lbar starts as the slice-gauge e4 - e3, optionally divided by exp(extra_log_scale).
class NullFlow {
 public:
  explicit NullFlow(const SurfaceMesh& initial, surface::LogScale extra_log_scale = {});
  ~NullFlow();
  NullFlow(NullFlow&&) noexcept;
  NullFlow& operator=(NullFlow&&) noexcept;

  // One RK4 step of size ds for every tracked geodesic, then projection of the velocity
  // back onto the future null cone. Throws DomainError if a point leaves the chart.
  void advance(double ds);
  // Rebuilds the surface and its flow-gauge frame at the current parameter.
  FlowState state() const;

  double s() const;
  int steps() const;
  double min_radius() const;
  double last_null_defect() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct FlowResult {
  std::vector<FlowState> states;  // states[0] is the initial surface
  double ds = 0.0;
  bool terminated = false;
  std::string termination;
};

FlowResult evolve(const SurfaceMesh& initial, const FlowOptions& options = {},
                  surface::LogScale extra_log_scale = {});

// Checks along a uniformly stepped flow:
//  monotonicity   F(s_{k+1}) <= F(s_k) + tol * scale for every step (inequality report)
//  q_rate         d/ds int Q(L,Lbar) = -2 int <xi, Lbar>            (identity, central differences)
//  xi_rate        -(3/2) int <xi,Lbar> - d/ds int <xi,Lbar>/<H,Lbar> >= 0 (inequality)
struct FlowChecks {
  verify::IdentityReport monotonicity, q_rate, xi_rate;
  double max_increase = 0.0;
};
FlowChecks flow_checks(const FlowResult& flow, const verify::VerifyOptions& opt = {});

// Raychaudhuri residual d/ds <H,Lbar> - |chibar|^2 - Ric(Lbar,Lbar) at s_star, with the
// s-derivative from five-point differences, for each step size in ds_list. The
// measured order comes from successive differences of the residual fields.
struct RaychaudhuriStudy {
  std::vector<double> ds, residual_l2, scale_l2;
  std::vector<double> orders;  // one per consecutive triple
  double order = 0.0;          // last entry of orders
};
RaychaudhuriStudy raychaudhuri_study(const SurfaceMesh& initial, double s_star, const std::vector<double>& ds_list);

// Flow trace: s, F, min <H,Lbar>, area.
void write_trace_csv(std::ostream& out, const FlowResult& flow);

}  // namespace codim2::nullflow
