#pragma once

#include <string>
#include <vector>

#include "dupin/integrable.hpp"
#include "dupin/net.hpp"
#include "dupin/ribaucour.hpp"

namespace dupin {

struct VerifyOptions {
  int accuracy = 8;
  int skip_layers = 2;
  double cluster_rel = 1e-5;          // eigenvalue clustering, relative to the max shape-operator norm
  double rank_rel = 1e-6;             // singular-value threshold for rank decisions
  double integrability_tol = 1e-5;
  double principal_coord_tol = 1e-4;  // off-diagonal metric / second form, relative
};

// First and second derivatives of the raw positions. Nothing cached on the sample is used.
struct FundamentalForms {
  Grid grid;
  int ambient = 0;
  std::vector<VectorField> d1;  // [i]
  std::vector<VectorField> d2;  // [i * n + j]
  std::vector<std::uint8_t> defined;  // every derivative unmasked
  std::vector<std::uint8_t> valid;    // defined and at least skip_layers deep

  int coords() const { return static_cast<int>(d1.size()); }
  Mat tangent(std::size_t p) const;  // N x n
  Mat metric(std::size_t p) const;
  Mat normal_basis(std::size_t p) const;  // N x (N - n), orthonormal
  Vec alpha(std::size_t p, int i, int j) const;  // normal part of d_i d_j f
  // Shape operator A_xi in a g-orthonormal tangent basis (columns of the Cholesky factor).
  Mat shape(std::size_t p, const Vec& xi) const;
};

FundamentalForms numeric_jet(const ImmersionSample& s, int accuracy = 8, int skip_layers = 2);

struct PrincipalExtraction {
  PrincipalData pd;
  bool proper = false;
  bool coordinate_net = false;  // classes are groups of coordinate directions
  double tau = 0.0;             // absolute clustering threshold used
  double scale = 0.0;           // max principal-normal norm
  double flat_normal = 0.0;     // max |[A_xi, A_zeta]| / scale^2
  std::size_t improper_nodes = 0;
  // [node][class] g-orthonormal eigenvectors as coordinate coefficients (n x multiplicity).
  std::vector<std::vector<Mat>> directions;
  FundamentalForms jet;
};

// Simultaneous diagonalization of the shape operators with eigenvalue clustering. Nodes
// whose class count differs from the dominant one are masked.
PrincipalExtraction extract_principal_normals(const ImmersionSample& s, const VerifyOptions& opt = {});

// max |(d_X eta_j)^perp| over unit X in E_j, relative to scale^2. One value per class.
std::vector<double> dupin_residual(const PrincipalExtraction& ex, const VerifyOptions& opt = {});

struct ConullityVerdict {
  bool integrable = true;
  bool trivial = false;     // complement of rank < 2
  bool sufficient = false;  // pairwise independence of eta_i - eta_l, eta_j - eta_l
  double residual = 0.0;    // |Pi_j [Y, Z]| / (|Y||Z| scale)
};
ConullityVerdict conullity_integrability(const PrincipalExtraction& ex, int cls, const VerifyOptions& opt = {});

struct SphereLeafReport {
  ResidualReport report;  // sphere_fit, center_const
  std::size_t flats = 0;
  std::vector<std::uint8_t> flat_nodes;  // per input node
};
SphereLeafReport sphere_leaf_check(const NRibaucourResult& r, double tol = 1e-7);

struct DiagnosticsReport {
  int k = 0;
  std::vector<int> multiplicities;
  bool proper = false;
  std::vector<double> dupin;
  double flat_normal = 0.0;
  std::vector<ConullityVerdict> conullity;
  std::vector<double> leaf_sphere;  // per class, relative sphere-fit residual of the leaves
  std::vector<double> leaf_center;  // per class, variation of f + eta / |eta|^2 along leaves
  int dim_N1 = 0;
  int dim_Sf = 0;
  int c = 0;
  bool holonomic = false;
  double masked_fraction = 0.0;
  std::size_t transition_nodes = 0;
  Vec N1_spectrum, Sf_spectrum;  // at the first valid node
  bool bound_ok = true;          // c <= k - 1
  bool holonomic_consistent = true;
  double weak_bound = 0.0;       // 2k/3 - 1

  std::string csv() const;
};
DiagnosticsReport sf_report(const PrincipalExtraction& ex, const VerifyOptions& opt = {});
DiagnosticsReport diagnose(const ImmersionSample& s, const VerifyOptions& opt = {});

struct DupinTensorSpace {
  std::vector<std::vector<ScalarField>> basis;  // [seed][class]
  int dimension = 0;
  RankInfo rank;  // of the k unit seeds plus one random seed
  double span_residual = 0.0;
};
DupinTensorSpace dupin_tensor_space(const Triple& t, const SweepOptions& opt = {}, std::uint64_t seed = 11);

}  // namespace dupin
