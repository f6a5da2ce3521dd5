#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace dupin {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Uniform tensor-product grid. Node order is row-major: axis 0 varies slowest.
class Grid {
 public:
  Grid() = default;
  Grid(std::vector<int> counts, std::vector<double> spacing, std::vector<double> origin = {});

  // Rejects non-uniform spacing.
  static Grid from_coordinates(const std::vector<std::vector<double>>& axes, double rel_tol = 1e-12);

  int dims() const { return static_cast<int>(counts_.size()); }
  int count(int axis) const { return counts_.at(axis); }
  double spacing(int axis) const { return spacing_.at(axis); }
  double origin(int axis) const { return origin_.at(axis); }
  const std::vector<int>& counts() const { return counts_; }
  const std::vector<double>& spacings() const { return spacing_; }
  const std::vector<double>& origins() const { return origin_; }

  std::size_t size() const;
  std::size_t stride(int axis) const;
  std::size_t index(const std::vector<int>& idx) const;
  std::vector<int> multi_index(std::size_t flat) const;
  double coord(int axis, int i) const { return origin_[axis] + spacing_[axis] * i; }
  std::vector<double> point(std::size_t flat) const;

  // Smallest distance (in nodes) from the node to any grid face.
  int depth(std::size_t flat) const;

  // Axes of *this followed by the axes of other.
  Grid product(const Grid& other) const;
  // Sub-grid keeping only the listed axes.
  Grid sub(const std::vector<int>& axes) const;

  bool operator==(const Grid& o) const;
  bool operator!=(const Grid& o) const { return !(*this == o); }

 private:
  std::vector<int> counts_;
  std::vector<double> spacing_;
  std::vector<double> origin_;
};

template <class T>
struct Field {
  Grid grid;
  std::vector<T> values;
  std::vector<std::uint8_t> mask;  // empty means nothing masked
  std::string tag;

  Field() = default;
  Field(Grid g, T fill, std::string t = {})
      : grid(std::move(g)), values(grid.size(), fill), tag(std::move(t)) {}

  std::size_t size() const { return values.size(); }
  bool masked(std::size_t i) const { return !mask.empty() && mask[i] != 0; }
  void set_mask(std::size_t i) {
    if (mask.empty()) mask.assign(values.size(), 0);
    mask[i] = 1;
  }
  double masked_fraction() const {
    if (mask.empty() || values.empty()) return 0.0;
    std::size_t c = 0;
    for (auto m : mask) c += m ? 1 : 0;
    return static_cast<double>(c) / static_cast<double>(values.size());
  }
  T& operator[](std::size_t i) { return values[i]; }
  const T& operator[](std::size_t i) const { return values[i]; }
};

using ScalarField = Field<double>;
using VectorField = Field<Vec>;

// Finite-difference weights for derivative `order` at x0 from arbitrary nodes.
std::vector<double> fornberg_weights(double x0, const std::vector<double>& nodes, int order);

// Stencil used at one node along one axis.
struct Stencil {
  int start = 0;
  std::vector<double> w;
};

// Per-position stencils along an axis of n nodes (spacing h). Central stencils of
// the requested accuracy where they fit, one-sided stencils of the same accuracy near the ends.
std::vector<Stencil> axis_stencils(int n, double h, int order, int accuracy);

// Derivative of a field along an axis. accuracy is the formal order (2, 4, 6, 8).
ScalarField fd_jet(const ScalarField& f, int axis, int order, int accuracy = 2);
VectorField fd_jet(const VectorField& f, int axis, int order, int accuracy = 2);

struct Eigenpairs {
  Vec values;   // descending
  Mat vectors;  // columns, orthonormal
  // Groups of indices whose eigenvalues agree within the degeneracy threshold.
  std::vector<std::vector<int>> clusters;
};

// Symmetric eigen-decomposition with descending order and a sign convention:
// the first entry of each eigenvector exceeding 1e-12 in magnitude is positive.
Eigenpairs sym_eigen(const Mat& M, double sym_tol = 1e-10, double cluster_rel = 1e-7);

struct SphereFit {
  bool flat = false;
  Vec center;         // sphere center, or a point of the flat
  double radius = 0;  // 0 for flats
  double residual = 0;
  int hull_dim = 0;   // dimension of the affine hull of the points
  Mat basis;          // orthonormal basis of the affine hull directions
};

// Least-squares algebraic sphere inside the affine hull of the points.
SphereFit sphere_fit(const std::vector<Vec>& pts, double flat_tol = 1e-9);

// Singular values (descending) and the rank decided by sigma_i > rel * sigma_max.
struct RankInfo {
  int rank = 0;
  Vec spectrum;
  double gap = 0;  // sigma_rank / sigma_{rank+1}; infinity when no trailing value
};
RankInfo numerical_rank(const Mat& A, double rel = 1e-6);

// Lagrange interpolation of node values along a uniform line at fractional node positions.
class LineInterpolator {
 public:
  LineInterpolator(int n, int points = 8);
  int window_start(double x) const;
  void weights(double x, double* w, int* start) const;
  double eval(const double* values, std::ptrdiff_t stride, double x) const;
  int points() const { return p_; }

 private:
  int n_;
  int p_;
};

}  // namespace dupin
