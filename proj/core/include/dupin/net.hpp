#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dupin/numerics.hpp"

namespace dupin {

// Coordinate index -> class index, both zero based.
struct ClassMap {
  std::vector<int> cls;

  int coords() const { return static_cast<int>(cls.size()); }
  int classes() const;
  std::vector<int> multiplicities() const;
  std::vector<int> members(int m) const;
  // Classes must be 0..K-1, each used, numbered by first coordinate index.
  void validate() const;
  static ClassMap identity(int n);
};

// Lame coefficients v_m, rotation coefficients h_{im} and normal curvature data V_m^r of a
// holonomic net. Lame coefficients are signed: dg/du_i = v_{i'} X_i with X_i a unit field.
struct Triple {
  Grid grid;
  ClassMap cmap;
  int normals = 0;
  std::vector<ScalarField> v;  // [m]
  std::vector<ScalarField> h;  // [i * K + m]
  std::vector<ScalarField> V;  // [m * q + r]

  int coords() const { return cmap.coords(); }
  int classes() const { return cmap.classes(); }
  ScalarField& hf(int i, int m) { return h[static_cast<std::size_t>(i * classes() + m)]; }
  const ScalarField& hf(int i, int m) const { return h[static_cast<std::size_t>(i * classes() + m)]; }
  ScalarField& Vf(int m, int r) { return V[static_cast<std::size_t>(m * normals + r)]; }
  const ScalarField& Vf(int m, int r) const { return V[static_cast<std::size_t>(m * normals + r)]; }

  static Triple zeros(const Grid& g, const ClassMap& cm, int q);
};

// Discretized immersion. Frames are optional; when present the tangent frame is the unit
// principal frame X_i = v_i^{-1} dg/du_i and the normal frame is parallel and orthonormal.
struct ImmersionSample {
  Grid grid;
  int ambient = 0;
  VectorField pos;                 // carries the sample mask
  std::vector<VectorField> X;      // [i]
  std::vector<VectorField> xi;     // [r]
  std::vector<ScalarField> lame;   // [i], signed
  std::vector<ScalarField> kappa;  // [i * q + r] = <A_{xi_r} X_i, X_i>
  std::optional<Triple> triple;

  int coords() const { return grid.dims(); }
  int normals() const { return static_cast<int>(xi.size()); }
  bool has_frames() const { return !X.empty() && !xi.empty(); }
  bool principal() const { return has_frames() && !lame.empty() && !kappa.empty(); }
  bool masked(std::size_t n) const { return pos.masked(n); }
  double kap(int i, int r, std::size_t n) const {
    return kappa[static_cast<std::size_t>(i * normals() + r)].values[n];
  }
};

struct ParallelNormalSubbundle {
  std::vector<int> indices;  // into ImmersionSample::xi
  double residual = 0.0;
  int rank() const { return static_cast<int>(indices.size()); }
  std::vector<int> complement(int q) const;
};

// Principal normals per class; `assignment` maps coordinate directions to classes when the
// sample is in principal coordinates.
struct PrincipalData {
  Grid grid;
  std::vector<VectorField> eta;  // [class]
  std::vector<int> assignment;
  std::vector<int> multiplicity;
  int k() const { return static_cast<int>(eta.size()); }
};

struct ResidualRow {
  std::string id;
  double max_residual = 0.0;
  double masked_fraction = 0.0;
};

struct ResidualReport {
  std::vector<ResidualRow> rows;
  bool pass = true;
  double max() const;
  std::string csv() const;
};

// Residuals of the four structure equations of the triple by finite differences.
ResidualReport validate_triple(const Triple& t, double tol, int accuracy = 6, int skip_layers = 2);

PrincipalData principal_normals_from_triple(const Triple& t, const ImmersionSample& s);

// Checks that the indexed normal fields are parallel in the normal connection.
ParallelNormalSubbundle attach_subbundle(const ImmersionSample& s, const std::vector<int>& indices,
                                         double tol = 1e-6, int accuracy = 6);

struct SampleCheck {
  double gram_defect = 0.0;   // max |<F_a, F_b> - delta_ab| over the full frame
  double lame_defect = 0.0;   // max |dg/du_i - v_i X_i|
  double kappa_defect = 0.0;  // max |<d^2 g/du_i^2, xi_r>/v_i^2 - kappa_i^r|
};
SampleCheck check_sample(const ImmersionSample& s, int accuracy = 6, int skip_layers = 2);

// Per-node kappa and lame caches derived from an attached triple.
void fill_principal_cache(ImmersionSample& s);

}  // namespace dupin
