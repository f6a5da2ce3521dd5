#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "dupin/net.hpp"
#include "dupin/numerics.hpp"

namespace dupin {

// Fixed-step classical RK4 along grid lines. Coefficients between nodes come from local
// Lagrange interpolation of their node values.
struct LineIntegrator {
  int substeps = 8;
  int interp_points = 8;
  double blowup = 1e12;
  void validate() const;
};

struct SweepOptions {
  LineIntegrator integ;
  std::vector<int> base;    // base node; empty means the corner (0, ..., 0)
  bool alternate = true;    // run the reverse-order sweep as a health check
  int probe_nodes = 0;      // nodes per axis of the probe box around the base; 0 = full grid
};

// One line of a sweep stage: nodes start + k * stride, k in [0, n).
struct LineSpec {
  int axis = 0;
  std::size_t start = 0;
  std::ptrdiff_t stride = 1;
  int n = 0;
  double h = 0.0;
};

// Interpolation weights at a fractional node position along a line, shared by every
// coefficient field evaluated there.
class LinePoint {
 public:
  LinePoint(const LineInterpolator& ip, double s);
  double at(const double* values, std::ptrdiff_t stride) const;
  double at(const ScalarField& f, const LineSpec& L) const { return at(&f.values[L.start], L.stride); }

 private:
  int start_ = 0, p_ = 0;
  double w_[32];
};

// dy/du along L.axis at fractional position s. The rhs may use `ip` to interpolate
// coefficient fields along the line.
using LineRhs = std::function<void(const LineSpec& L, const LineInterpolator& ip, double s,
                                   const double* y, double* dy)>;
// Returns false when the state at a node is unacceptable; the node is masked and the line halts.
using NodeCheck = std::function<bool(const double* y)>;
// Adjusts the state at node i of a line before it is stored.
using NodeFix = std::function<void(const LineSpec& L, int i, double* y)>;

struct SweepResult {
  int dim = 0;
  std::vector<double> y;        // node-major, dim values per node
  std::vector<std::uint8_t> mask;
  std::vector<int> lo, hi;      // box actually swept (inclusive)
  double masked_fraction() const;
};

// Axis-by-axis sweep from the base node in the given axis order, restricted to [lo, hi].
SweepResult sweep_lines(const Grid& g, int dim, const std::vector<int>& base, const std::vector<double>& y0,
                        const std::vector<int>& order, const std::vector<int>& lo, const std::vector<int>& hi,
                        const LineRhs& rhs, const NodeCheck& check, const LineIntegrator& integ,
                        const NodeFix& fix = nullptr);

// Relative disagreement of two sweeps on their common unmasked nodes.
double sweep_disagreement(const Grid& g, const SweepResult& a, const SweepResult& b);

// Boundary data of a triple: every component sampled along each coordinate axis through
// the base node. Component layout matches Triple.
struct TripleAxisData {
  std::vector<std::vector<double>> v, h, V;
};
struct TripleBoundary {
  Grid grid;
  ClassMap cmap;
  int normals = 0;
  std::vector<int> base;
  std::vector<TripleAxisData> axis;
};
TripleBoundary boundary_from(const Triple& t, const std::vector<int>& base = {});

// Values of h_{im} not determined along a line by the structure equations. Arguments: i, m, point.
using TripleClosure = std::function<double(int i, int m, const std::vector<double>& u)>;

struct TripleSolve {
  Triple triple;
  ResidualReport report;  // path_independence, boundary_consistency
};
TripleSolve integrate_triple(const TripleBoundary& b, const SweepOptions& opt = {},
                             const TripleClosure& closure = nullptr);

struct FrameInit {
  Vec point;
  std::vector<Vec> X;   // tangent frame at base
  std::vector<Vec> xi;  // normal frame at base
};
FrameInit standard_frame(int n, int q, int ambient);

struct FrameSolve {
  ImmersionSample sample;
  double gram_defect = 0.0;
  double path_residual = 0.0;
};
FrameSolve reconstruct_frame(const Triple& t, const FrameInit& f0, double tol = 1e-8,
                             const SweepOptions& opt = {});

// Extra derivative added to dB_{a'}/du_a (own-class direction), used for Codazzi tensors
// that are not of Dupin type. Arguments: axis, point.
using OwnAxisForcing = std::function<double(int axis, const std::vector<double>& u)>;

struct BSolve {
  std::vector<ScalarField> B;  // [m]
  double path_residual = 0.0;
  double masked_fraction = 0.0;
};
BSolve solve_B(const Triple& t, const std::vector<double>& B0, const SweepOptions& opt = {},
               const OwnAxisForcing& forcing = nullptr);

struct RibaucourSolution {
  Grid grid;
  ScalarField phi;
  std::vector<ScalarField> gamma;  // [i]
  std::vector<ScalarField> beta;   // [r]
  std::vector<ScalarField> B;      // [m]
  std::vector<int> base;           // node where the initial data was imposed
  ResidualReport report;
  bool masked(std::size_t n) const { return phi.masked(n); }
};

struct LinearInit {
  double phi = 1.0;
  std::vector<double> gamma;
  std::vector<double> beta;
};
RibaucourSolution solve_linear(const Triple& t, const std::vector<ScalarField>& B, const LinearInit& init,
                               const SweepOptions& opt = {});

// w1 + c w2 on a common grid; B combines the same way.
RibaucourSolution combine(const RibaucourSolution& a, double c, const RibaucourSolution& b);

}  // namespace dupin
