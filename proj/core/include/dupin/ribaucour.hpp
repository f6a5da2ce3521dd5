#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dupin/integrable.hpp"
#include "dupin/net.hpp"

namespace dupin {

// Pointwise data of a (N-)Ribaucour transform on the output grid. For an N-Ribaucour
// transform the output grid is the product of the input grid and the y-grid and `fiber`
// is the y-grid size, so the input node of output node p is p / fiber.
struct TransformJet {
  Grid grid;
  std::size_t fiber = 1;
  ScalarField phi;
  ScalarField nu;                   // ||F||^{-2}
  VectorField F;                    // f_* grad(phi) + beta (+ y shift along N)
  VectorField beta;                 // sum beta_r xi_r
  VectorField delta;                // -F / phi
  VectorField beta_bar;             // -beta_{N-perp} / phi
  std::vector<ScalarField> rho;     // [class] B_m / v_m
  std::vector<ScalarField> lambda;  // [class] 1 - 2 phi nu rho_m
  std::vector<VectorField> nperp;   // normal frame vectors spanning N-perp (untransformed)

  Mat P(std::size_t n) const;       // I - 2 nu F F^T
  std::size_t source(std::size_t n) const { return n / fiber; }
};

struct RibaucourResult {
  ImmersionSample sample;
  TransformJet jet;
};

struct NRibaucourResult {
  ImmersionSample sample;      // product grid: input axes followed by y axes
  PrincipalData principal;     // input classes followed by the new class
  TransformJet jet;
  std::vector<std::uint8_t> regular;
  std::vector<int> y_axes;     // axes of the product grid carrying y
  std::vector<int> nindices;   // N as indices into the input normal frame
  std::vector<int> complement; // N-perp indices into the input normal frame
};

// Everything the transform produces at one (u, y) point.
struct TransformPoint {
  Vec f, F;
  double phi = 0, nu = 0;
  Vec beta, beta_bar, delta;
  std::vector<double> rho, lambda;  // [class]
  std::vector<Vec> X, xi;           // new tangent frame (u axes then y axes), new normal frame
  std::vector<double> lame;         // signed, per new coordinate
  std::vector<double> kappa;        // [i * q_new + r]
  // Present when the input carries a triple.
  std::vector<double> v, h, V;      // new triple, Triple layout
  bool phiF_zero = false, degenerate_D = false;
};

// Per-node input of the transform kernel, gathered from a sample and a solution.
TransformPoint transform_point(const ImmersionSample& s, const RibaucourSolution& w, std::size_t node,
                               const std::vector<int>& nindices, const std::vector<double>& y);

// Rows: combescure, phi_diag, gnorm.
ResidualReport combescure_check(const ImmersionSample& s, const RibaucourSolution& w, int accuracy = 6,
                                int skip_layers = 2);

RibaucourResult ribaucour_transform(const ImmersionSample& s, const RibaucourSolution& w);

// Default y-grid: [-3, 3]^s with 21 nodes per axis.
Grid default_ygrid(int s);

NRibaucourResult n_ribaucour_transform(const ImmersionSample& h, const ParallelNormalSubbundle& nsub,
                                       const RibaucourSolution& w, const Grid& ygrid);

// Canonical representative of the projective class: phi(base) = 1 (or |beta(base)| = 1 when
// phi(base) = 0) and beta_l(base) = 0 for l in N. Shifting beta_l by a constant c changes
// B by -c V^l, so the triple is required.
RibaucourSolution canonicalize(const RibaucourSolution& w, const Triple& t, const std::vector<int>& nindices);
bool is_canonical(const RibaucourSolution& w, const std::vector<int>& nindices, double tol = 1e-9);

struct RegularityFlags {
  bool Ew_zero = false;
  bool regular = false;
  bool generic = false;
  bool degenerate = false;  // N-perp is trivial
  double ew_gap = 0.0, regular_gap = 0.0, generic_gap = 0.0;
};
RegularityFlags regularity_predicates(const ImmersionSample& h, const ParallelNormalSubbundle& nsub,
                                      const RibaucourSolution& w, const NRibaucourResult& r, double tol = 1e-6);

// Principal normals of the input sample from its cached curvatures.
PrincipalData principal_from_cache(const ImmersionSample& s);

// Transformed principal normals on the jet grid; when the jet has a fiber (y axes) the new
// normal P beta_bar is appended.
PrincipalData transform_principal_data(const PrincipalData& in, const TransformJet& jet, int y_count = 0);

// Predicted shape operator of the transform in the direction P xi, in the frame P X_i.
Mat predicted_shape_operator(const ImmersionSample& s, const TransformJet& jet, std::size_t node, const Vec& xi);

struct CodResidual {
  double isometry = 0;         // | |PZ| - |Z| |
  double condition_a = 0;      // | PZ - Z - <delta, Z>(f - f~) |
  double d_symmetry = 0;       // antisymmetric part of D from the tangent maps
  double d_normal = 0;         // normal part of P^{-1} f~_*
  double d_diagonal = 0;       // |D - diag(lambda)|
  double normal_parallel = 0;  // <d(P xi_r), P xi_t> / v, r != t
};
// Conditions of the Ribaucour transform, evaluated from the analytic tangent map.
CodResidual ribaucour_conditions_check(const ImmersionSample& s, const RibaucourSolution& w, const RibaucourResult& r,
                              std::uint64_t seed = 7);

// Residual of the Ribaucour conditions between two y-slices of an N-Ribaucour result.
struct SliceResidual {
  double tangency = 0;  // normal part of P f2_* relative to |f2_*|
  double symmetry = 0;  // antisymmetric part of f1_*^T P f2_* relative to its norm
};
SliceResidual slice_ribaucour_residual(const NRibaucourResult& r, std::size_t y1, std::size_t y2,
                                       int accuracy = 6);

}  // namespace dupin
