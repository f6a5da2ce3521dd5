#include "dupin/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dupin/errors.hpp"

namespace dupin {

Grid::Grid(std::vector<int> counts, std::vector<double> spacing, std::vector<double> origin)
    : counts_(std::move(counts)), spacing_(std::move(spacing)), origin_(std::move(origin)) {
  if (counts_.empty()) fail(ErrorCode::InvalidArgument, "grid needs at least one axis");
  if (spacing_.size() != counts_.size()) fail(ErrorCode::InvalidArgument, "spacing/axis count mismatch");
  if (origin_.empty()) origin_.assign(counts_.size(), 0.0);
  if (origin_.size() != counts_.size()) fail(ErrorCode::InvalidArgument, "origin/axis count mismatch");
  for (std::size_t a = 0; a < counts_.size(); ++a) {
    if (counts_[a] < 1) fail(ErrorCode::InvalidArgument, "node count must be positive");
    if (!(spacing_[a] > 0.0)) fail(ErrorCode::InvalidArgument, "spacing must be positive");
  }
}

Grid Grid::from_coordinates(const std::vector<std::vector<double>>& axes, double rel_tol) {
  std::vector<int> n;
  std::vector<double> h, o;
  for (const auto& ax : axes) {
    if (ax.size() < 2) fail(ErrorCode::InvalidArgument, "axis needs two coordinates");
    double step = (ax.back() - ax.front()) / static_cast<double>(ax.size() - 1);
    for (std::size_t i = 1; i < ax.size(); ++i) {
      double d = ax[i] - ax[i - 1];
      if (std::abs(d - step) > rel_tol * std::abs(step) + 1e-300)
        fail(ErrorCode::NonUniformGrid, "axis spacing is not uniform");
    }
    n.push_back(static_cast<int>(ax.size()));
    h.push_back(step);
    o.push_back(ax.front());
  }
  return Grid(n, h, o);
}

std::size_t Grid::size() const {
  std::size_t s = 1;
  for (int c : counts_) s *= static_cast<std::size_t>(c);
  return s;
}

std::size_t Grid::stride(int axis) const {
  std::size_t s = 1;
  for (int a = dims() - 1; a > axis; --a) s *= static_cast<std::size_t>(counts_[a]);
  return s;
}

std::size_t Grid::index(const std::vector<int>& idx) const {
  std::size_t flat = 0;
  for (int a = 0; a < dims(); ++a) flat = flat * static_cast<std::size_t>(counts_[a]) + idx[a];
  return flat;
}

std::vector<int> Grid::multi_index(std::size_t flat) const {
  std::vector<int> idx(dims());
  for (int a = dims() - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(flat % static_cast<std::size_t>(counts_[a]));
    flat /= static_cast<std::size_t>(counts_[a]);
  }
  return idx;
}

std::vector<double> Grid::point(std::size_t flat) const {
  auto idx = multi_index(flat);
  std::vector<double> p(dims());
  for (int a = 0; a < dims(); ++a) p[a] = coord(a, idx[a]);
  return p;
}

int Grid::depth(std::size_t flat) const {
  auto idx = multi_index(flat);
  int d = std::numeric_limits<int>::max();
  for (int a = 0; a < dims(); ++a) d = std::min({d, idx[a], counts_[a] - 1 - idx[a]});
  return d;
}

Grid Grid::product(const Grid& other) const {
  auto n = counts_;
  auto h = spacing_;
  auto o = origin_;
  n.insert(n.end(), other.counts_.begin(), other.counts_.end());
  h.insert(h.end(), other.spacing_.begin(), other.spacing_.end());
  o.insert(o.end(), other.origin_.begin(), other.origin_.end());
  return Grid(n, h, o);
}

Grid Grid::sub(const std::vector<int>& axes) const {
  std::vector<int> n;
  std::vector<double> h, o;
  for (int a : axes) {
    n.push_back(counts_.at(a));
    h.push_back(spacing_.at(a));
    o.push_back(origin_.at(a));
  }
  return Grid(n, h, o);
}

bool Grid::operator==(const Grid& o) const {
  if (counts_ != o.counts_) return false;
  for (int a = 0; a < dims(); ++a) {
    if (std::abs(spacing_[a] - o.spacing_[a]) > 1e-14 * spacing_[a]) return false;
    if (std::abs(origin_[a] - o.origin_[a]) > 1e-12 * (1.0 + std::abs(origin_[a]))) return false;
  }
  return true;
}

std::vector<double> fornberg_weights(double x0, const std::vector<double>& x, int m) {
  const int n = static_cast<int>(x.size()) - 1;
  std::vector<std::vector<double>> c(n + 1, std::vector<double>(m + 1, 0.0));
  double c1 = 1.0;
  double c4 = x[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i <= n; ++i) {
    int mn = std::min(i, m);
    double c2 = 1.0;
    double c5 = c4;
    c4 = x[i] - x0;
    for (int j = 0; j < i; ++j) {
      double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n + 1);
  for (int i = 0; i <= n; ++i) w[i] = c[i][m];
  return w;
}

std::vector<Stencil> axis_stencils(int n, double h, int order, int accuracy) {
  if (order < 1 || order > 2) fail(ErrorCode::InvalidArgument, "derivative order must be 1 or 2");
  if (accuracy < 2 || accuracy % 2) fail(ErrorCode::InvalidArgument, "accuracy must be even and >= 2");
  const int central = accuracy + 1;
  const int sided = accuracy + order;
  if (n < 5 || n < sided) fail(ErrorCode::GridTooSmall, "axis has too few nodes for the stencil");
  const int half = accuracy / 2;
  std::vector<Stencil> out(n);
  for (int i = 0; i < n; ++i) {
    Stencil s;
    int width = central;
    if (i - half < 0 || i + half > n - 1) width = sided;
    int start = i - width / 2;
    if (i - half >= 0 && i + half <= n - 1) start = i - half;
    start = std::clamp(start, 0, n - width);
    std::vector<double> nodes(width);
    for (int k = 0; k < width; ++k) nodes[k] = (start + k - i) * h;
    s.start = start;
    s.w = fornberg_weights(0.0, nodes, order);
    out[i] = std::move(s);
  }
  return out;
}

namespace {

template <class T>
T zero_like(const T& v);
template <>
double zero_like(const double&) {
  return 0.0;
}
template <>
Vec zero_like(const Vec& v) {
  return Vec::Zero(v.size());
}

template <class T>
Field<T> fd_impl(const Field<T>& f, int axis, int order, int accuracy) {
  const Grid& g = f.grid;
  if (axis < 0 || axis >= g.dims()) fail(ErrorCode::AxisOutOfRange, "fd_jet axis out of range");
  if (f.values.size() != g.size()) fail(ErrorCode::GridMismatch, "field size differs from grid");
  const int n = g.count(axis);
  auto st = axis_stencils(n, g.spacing(axis), order, accuracy);
  const std::size_t stride = g.stride(axis);
  Field<T> out;
  out.grid = g;
  out.tag = f.tag + "_d" + std::to_string(axis) + (order == 2 ? "d" + std::to_string(axis) : "");
  out.values.resize(f.values.size());
  const std::size_t total = g.size();
  for (std::size_t flat = 0; flat < total; ++flat) {
    const int i = static_cast<int>((flat / stride) % static_cast<std::size_t>(n));
    const std::size_t line0 = flat - static_cast<std::size_t>(i) * stride;
    const Stencil& s = st[i];
    T acc = zero_like(f.values[flat]);
    bool m = false;
    for (std::size_t k = 0; k < s.w.size(); ++k) {
      std::size_t idx = line0 + static_cast<std::size_t>(s.start + static_cast<int>(k)) * stride;
      if (f.masked(idx)) m = true;
      acc += s.w[k] * f.values[idx];
    }
    out.values[flat] = acc;
    if (m || f.masked(flat)) out.set_mask(flat);
  }
  return out;
}

}  // namespace

ScalarField fd_jet(const ScalarField& f, int axis, int order, int accuracy) {
  return fd_impl(f, axis, order, accuracy);
}

VectorField fd_jet(const VectorField& f, int axis, int order, int accuracy) {
  return fd_impl(f, axis, order, accuracy);
}

Eigenpairs sym_eigen(const Mat& M, double sym_tol, double cluster_rel) {
  if (M.rows() != M.cols()) fail(ErrorCode::NotSymmetric, "matrix is not square");
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > sym_tol * scale)
    fail(ErrorCode::NotSymmetric, "matrix is not symmetric within tolerance");
  Mat S = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(S);
  const int n = static_cast<int>(S.rows());
  Eigenpairs out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (int k = 0; k < n; ++k) {
    out.values[k] = es.eigenvalues()[n - 1 - k];
    Vec v = es.eigenvectors().col(n - 1 - k);
    for (int r = 0; r < n; ++r) {
      if (std::abs(v[r]) > 1e-12) {
        if (v[r] < 0) v = -v;
        break;
      }
    }
    out.vectors.col(k) = v;
  }
  double norm = n ? out.values.cwiseAbs().maxCoeff() : 0.0;
  double thr = cluster_rel * std::max(norm, std::numeric_limits<double>::min());
  for (int k = 0; k < n; ++k) {
    if (k > 0 && std::abs(out.values[k - 1] - out.values[k]) <= thr)
      out.clusters.back().push_back(k);
    else
      out.clusters.push_back({k});
  }
  return out;
}

SphereFit sphere_fit(const std::vector<Vec>& pts, double flat_tol) {
  if (pts.empty()) fail(ErrorCode::DegenerateCloud, "no points");
  const int N = static_cast<int>(pts[0].size());
  const int m = static_cast<int>(pts.size());
  Vec centroid = Vec::Zero(N);
  for (const auto& p : pts) centroid += p;
  centroid /= m;
  Mat C(N, m);
  for (int k = 0; k < m; ++k) C.col(k) = pts[k] - centroid;
  Eigen::JacobiSVD<Mat> svd(C, Eigen::ComputeThinU);
  Vec sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] <= 1e-300) fail(ErrorCode::DegenerateCloud, "all points coincide");
  int d = 0;
  for (int k = 0; k < sv.size(); ++k)
    if (sv[k] > 1e-8 * sv[0]) ++d;
  SphereFit out;
  out.hull_dim = d;
  out.basis = svd.matrixU().leftCols(d);
  double off_hull = 0.0;
  for (int k = d; k < sv.size(); ++k) off_hull += sv[k] * sv[k];
  off_hull = std::sqrt(off_hull / m);

  auto as_flat = [&]() {
    out.flat = true;
    out.center = centroid;
    out.radius = 0.0;
    out.residual = off_hull;
    return out;
  };
  if (d < 2) return as_flat();

  double scale = sv[0] / std::sqrt(static_cast<double>(m));
  Mat L(m, d + 2);
  for (int k = 0; k < m; ++k) {
    Vec c = out.basis.transpose() * C.col(k) / scale;
    L(k, 0) = c.squaredNorm();
    L.block(k, 1, 1, d) = c.transpose();
    L(k, d + 1) = 1.0;
  }
  Eigen::JacobiSVD<Mat> lsv(L, Eigen::ComputeThinV | Eigen::ComputeFullV);
  Vec z = lsv.matrixV().col(lsv.matrixV().cols() - 1);
  const double A = z[0];
  if (std::abs(A) <= flat_tol * z.norm()) return as_flat();
  Vec b = z.segment(1, d);
  double e = z[d + 1];
  Vec c0 = -b / (2.0 * A);
  double r2 = c0.squaredNorm() - e / A;
  if (r2 <= 0) return as_flat();
  Vec center = centroid + scale * (out.basis * c0);
  double r = std::sqrt(r2) * scale;
  double res = 0.0;
  for (const auto& p : pts) {
    double dev = (p - center).norm() - r;
    res += dev * dev;
  }
  res = std::sqrt(res / m);
  double diam = 2.0 * std::sqrt(sv[0] * sv[0] / m);
  // A least-squares sphere that does not fit is a flat region of the hull.
  if (res > 1e-3 * diam) return as_flat();
  out.flat = false;
  out.center = center;
  out.radius = r;
  out.residual = std::sqrt(res * res + off_hull * off_hull);
  return out;
}

RankInfo numerical_rank(const Mat& A, double rel) {
  RankInfo out;
  if (A.size() == 0) {
    out.gap = std::numeric_limits<double>::infinity();
    return out;
  }
  Eigen::JacobiSVD<Mat> svd(A);
  out.spectrum = svd.singularValues();
  const double smax = out.spectrum.size() ? out.spectrum[0] : 0.0;
  for (int k = 0; k < out.spectrum.size(); ++k)
    if (out.spectrum[k] > rel * smax && smax > 0) ++out.rank;
  if (out.rank == 0 || out.rank >= out.spectrum.size())
    out.gap = std::numeric_limits<double>::infinity();
  else if (out.spectrum[out.rank] <= 0)
    out.gap = std::numeric_limits<double>::infinity();
  else
    out.gap = out.spectrum[out.rank - 1] / out.spectrum[out.rank];
  return out;
}

LineInterpolator::LineInterpolator(int n, int points) : n_(n), p_(std::min({points, n, 32})) {
  if (n < 1) fail(ErrorCode::InvalidArgument, "empty line");
}

int LineInterpolator::window_start(double x) const {
  int s = static_cast<int>(std::floor(x)) - p_ / 2 + 1;
  return std::clamp(s, 0, n_ - p_);
}

void LineInterpolator::weights(double x, double* w, int* start) const {
  int s = window_start(x);
  *start = s;
  for (int k = 0; k < p_; ++k) {
    double xk = s + k;
    if (std::abs(x - xk) < 1e-14) {
      for (int j = 0; j < p_; ++j) w[j] = (j == k) ? 1.0 : 0.0;
      return;
    }
  }
  for (int k = 0; k < p_; ++k) {
    double num = 1.0, den = 1.0;
    const double xk = s + k;
    for (int j = 0; j < p_; ++j) {
      if (j == k) continue;
      num *= x - (s + j);
      den *= xk - (s + j);
    }
    w[k] = num / den;
  }
}

double LineInterpolator::eval(const double* values, std::ptrdiff_t stride, double x) const {
  double w[32];
  int s = 0;
  weights(x, w, &s);
  double acc = 0.0;
  for (int k = 0; k < p_; ++k) acc += w[k] * values[(s + k) * stride];
  return acc;
}

}  // namespace dupin
