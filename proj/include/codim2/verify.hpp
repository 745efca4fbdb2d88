#pragma once

// Integral identities and inequalities for spacelike 2-surfaces, evaluated on a null
// frame field. Every check returns an IdentityReport with named term integrals.
//
// Conventions: n = 3, Q = r dr ^ dt with Q(d_r, d_t) = r, xi = div Q = -3 d_t,
// chi_ab = <D_a L, d_b>, zeta_a = (1/2)<D_a L, Lbar>, <L, Lbar> = -2.

#include <json.hpp>

#include <string>
#include <vector>

#include "codim2/surface.hpp"

namespace codim2::verify {

using surface::NullFrameField;
using surface::SurfaceMesh;

struct Term {
  std::string name;
  double value = 0.0;
};

enum class Verdict { pass, fail, not_applicable };
std::string verdict_name(Verdict v);

enum class ReportKind { identity, inequality, value };

struct IdentityReport {
  std::string id;
  ReportKind kind = ReportKind::identity;
  std::vector<Term> terms;
  // identity: signed defect; inequality: value of the side claimed non-negative;
  // value: deviation from the expected value.
  double residual = 0.0;
  double scale = 0.0;  // sum of absolute term values
  double rel_residual = 0.0;
  double tolerance = 0.0;
  bool equality = false;  // inequalities: |value| <= tolerance * scale
  Verdict verdict = Verdict::pass;
  std::string resolution;  // "n_theta x n_phi"
  std::string surface, spacetime, gauge;
  std::vector<std::string> warnings;
};

struct VerifyOptions {
  double tolerance = 0.0;          // <= 0: default for the grid resolution
  double tolerance_scale = 1.0;    // multiplies whichever tolerance applies
  double torsion_threshold = 1e-8; // sup of |zeta| below which the frame counts as torsion-free
  std::string surface_label;
};

// 1e-5 below 128 polar nodes, 1e-7 from 128 on.
double default_tolerance(int n_theta);

// Full first Minkowski formula for any null normal Lbar:
//   (n-1)/n int <xi, Lbar> + int Q(H, Lbar) + int Q(d_a, (D^a Lbar)^perp) = 0,
// with (D_a Lbar)^perp = zeta_a Lbar.
IdentityReport minkowski_k1(const NullFrameField& frame, const VerifyOptions& opt = {});
// Torsion-free form: -(n-1) int <d_t, Lbar> - (1/2) int <H, Lbar> Q(L, Lbar) = 0.
// Warns when the frame has torsion.
IdentityReport minkowski_k1_reduced(const NullFrameField& frame, const VerifyOptions& opt = {});

enum class RsVariant { l_pair, lbar_pair, lbar_mixed, l_mixed };
std::string rs_variant_name(RsVariant v);
RsVariant rs_variant_from_name(const std::string& name);

// Higher-order Minkowski formulas in constant curvature for torsion-free surfaces.
// Throws DomainError when (r, s) does not fit the variant (the lowered index must
// exist and r + s <= 2). Torsion above threshold or a non-constant-curvature ambient
// attaches a warning; the identity is still evaluated.
IdentityReport minkowski_rs(const NullFrameField& frame, int r, int s, RsVariant variant,
                            const VerifyOptions& opt = {});

// Classical Minkowski formula for a hypersurface of a static slice,
//   (n-k) int f sigma_{k-1}(h) = k int sigma_k(h) <X, nu>,  k = 1, 2,
// computed directly from the slice Riemannian geometry (unit normal, shape operator),
// and compared with the null-frame evaluation of the spacetime formula. Throws
// PreconditionError if the surface is not contained in a t-slice.
IdentityReport classical_recovery(const NullFrameField& frame, int k, const VerifyOptions& opt = {});

enum class HkDirection { future_incoming, past_incoming };
std::string hk_direction_name(HkDirection d);

// Spacetime Heintze-Karcher inequality. Future: -(n-1) int <d_t,Lbar>/<H,Lbar> -
// (1/2) int Q(L,Lbar) >= 0, requires <H,Lbar> > 0. Past: (n-1) int <d_t,L>/<H,L> -
// (1/2) int Q(L,Lbar) >= 0, requires <H,L> < 0. Throws PreconditionError listing the
// offending nodes otherwise.
IdentityReport heintze_karcher(const NullFrameField& frame, HkDirection direction, const VerifyOptions& opt = {});

// Riemannian Heintze-Karcher inequality in a static slice, (n-1) int f/H >= int <X,nu>,
// from the direct slice geometry. Equality flag is the umbilicity detector. Throws
// PreconditionError if H <= 0 somewhere or the surface leaves the slice.
IdentityReport slice_heintze_karcher(const NullFrameField& frame, const VerifyOptions& opt = {});

// Four-dimensional Schwarzschild formula
//   2 int <H,L><Lbar,d_t> = -16 pi m + int (R + (1/4) Rbar_{L Lbar L Lbar}) Q(L,Lbar)
//                          + sum_{b,c} ((1/2) Rbar_{b c Lbar L} - 2 (d zeta)_{bc}) Q_{bc},
// orthonormal sums over tangent indices.
IdentityReport schwarzschild_mass_formula(const NullFrameField& frame, const VerifyOptions& opt = {});

// int Rbar_{alpha beta Lbar L} Q^{alpha beta}; reported with expected value -32 pi m.
IdentityReport flux_invariant(const NullFrameField& frame, const VerifyOptions& opt = {});

// Divergence of T_{r,s} (barred = false) or Tbar_{r,s} (barred = true): area-weighted
// L2 norm of the sigma-length of the divergence vector. Scale: L2 norm of
// |T| (|chi| + |chibar|).
IdentityReport divergence_constant_curvature(const NullFrameField& frame, int r, int s, bool barred,
                                             const VerifyOptions& opt = {});

// Schwarzschild, r = 2: numeric (nabla_b T^{ab}_{2,0}) Q(N, d_a) against
//   3m/rho^5 sigma^{ab} (Q^2)(N, d_a) Q(N, d_b)       (closed form)
//   -(3m/2)/rho^5 Q(L,Lbar) sigma^{ab} Q(N,d_a) Q(N,d_b)   (specialization, N = L)
// with N = L for T_{2,0} and N = Lbar for Tbar_{0,2}. Residual and scale are integrals
// of absolute values.
struct SchwarzschildDivergence {
  IdentityReport closed_form, specialization;
  std::vector<double> numeric, closed, special;  // per node
};
SchwarzschildDivergence divergence_schwarzschild(const NullFrameField& frame, bool barred,
                                                 const VerifyOptions& opt = {});

enum class SchwarzschildMode { l_side, lbar_side };  // the L and Lbar inequalities

struct HypothesisRecord {
  bool torsion_free = false;
  bool q_nonnegative = false;             // Q(L,Lbar) >= 0 at every node
  bool convex = false;                    // chi > 0 (L side) or -chibar > 0 (Lbar side)
  bool q2_sign = false;                   // (Q^2)(N,v) Q(N,v) <= 0 (L) or >= 0 (Lbar) on a tangent basis
  std::vector<std::size_t> q_negative_nodes;
  bool satisfied() const { return torsion_free && (q_nonnegative || (convex && q2_sign)); }
};

HypothesisRecord schwarzschild_hypotheses(const NullFrameField& frame, SchwarzschildMode mode,
                                          const VerifyOptions& opt = {});

// L side:    int P_{r-1,0} <L,d_t> + r/(2(n-r)) int P_{r,0} Q(L,Lbar) >= 0
// Lbar side: int P_{0,s-1} <Lbar,d_t> - s/(2(n-s)) int P_{0,s} Q(L,Lbar) >= 0
// Hypothesis failures give verdict not_applicable with the record in warnings.
IdentityReport schwarzschild_inequality(const NullFrameField& frame, int order, SchwarzschildMode mode,
                                        const VerifyOptions& opt = {});

// For constant P_{r,s}: the Newton-MacLaurin gap
//   int (-(P_{r-1,s}/P_{r,s}) + (r+s)(n-1)/((n-r-s) tr chi)) <L,d_t> >= 0
// and the past Heintze-Karcher gap. Both vanish on spheres of symmetry.
IdentityReport equality_sandwich(const NullFrameField& frame, int r, int s, const VerifyOptions& opt = {});

// Serialization with the fields of the report schema.
nlohmann::json to_json(const IdentityReport& report, const std::string& config_hash = "");
std::string csv_header();
std::string csv_row(const IdentityReport& report);

}  // namespace codim2::verify
