#include "dupin/integrable.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dupin/errors.hpp"
#include "dupin/parallel.hpp"

namespace dupin {

void LineIntegrator::validate() const {
  if (substeps < 1) fail(ErrorCode::InvalidArgument, "substeps must be >= 1");
  if (interp_points < 2) fail(ErrorCode::InvalidArgument, "interpolation needs at least 2 points");
}

LinePoint::LinePoint(const LineInterpolator& ip, double s) : p_(ip.points()) { ip.weights(s, w_, &start_); }

double LinePoint::at(const double* values, std::ptrdiff_t stride) const {
  double acc = 0.0;
  for (int k = 0; k < p_; ++k) acc += w_[k] * values[(start_ + k) * stride];
  return acc;
}

double SweepResult::masked_fraction() const {
  if (mask.empty()) return 0.0;
  std::size_t c = 0;
  for (auto m : mask) c += m ? 1 : 0;
  return static_cast<double>(c) / static_cast<double>(mask.size());
}

namespace {

std::vector<int> resolve_base(const Grid& g, const std::vector<int>& base) {
  if (base.empty()) return std::vector<int>(g.dims(), 0);
  if (static_cast<int>(base.size()) != g.dims()) fail(ErrorCode::DimensionMismatch, "base node has wrong rank");
  for (int a = 0; a < g.dims(); ++a)
    if (base[a] < 0 || base[a] >= g.count(a)) fail(ErrorCode::AxisOutOfRange, "base node outside the grid");
  return base;
}

std::vector<double> point_on(const Grid& g, const LineSpec& L, double s) {
  auto p = g.point(L.start);
  p[L.axis] += g.spacing(L.axis) * s;
  return p;
}

void probe_box(const Grid& g, const std::vector<int>& base, int probe, std::vector<int>& lo, std::vector<int>& hi) {
  lo.assign(g.dims(), 0);
  hi.assign(g.dims(), 0);
  for (int a = 0; a < g.dims(); ++a) {
    hi[a] = g.count(a) - 1;
    if (probe > 0 && probe < g.count(a)) {
      int l = std::clamp(base[a] - probe / 2, 0, g.count(a) - probe);
      lo[a] = l;
      hi[a] = l + probe - 1;
    }
  }
}

std::vector<int> ascending(int d) {
  std::vector<int> o(d);
  std::iota(o.begin(), o.end(), 0);
  return o;
}

}  // namespace

SweepResult sweep_lines(const Grid& g, int dim, const std::vector<int>& base_in, const std::vector<double>& y0,
                        const std::vector<int>& order, const std::vector<int>& lo, const std::vector<int>& hi,
                        const LineRhs& rhs, const NodeCheck& check, const LineIntegrator& integ,
                        const NodeFix& fix) {
  integ.validate();
  const int D = g.dims();
  const auto base = resolve_base(g, base_in);
  if (static_cast<int>(y0.size()) != dim) fail(ErrorCode::DimensionMismatch, "initial state has wrong size");
  SweepResult R;
  R.dim = dim;
  R.lo = lo;
  R.hi = hi;
  R.y.assign(g.size() * dim, 0.0);
  R.mask.assign(g.size(), 1);
  const std::size_t b0 = g.index(base);
  std::copy(y0.begin(), y0.end(), R.y.begin() + static_cast<std::ptrdiff_t>(b0 * dim));
  if (check && !check(y0.data())) return R;
  R.mask[b0] = 0;

  auto ok = [&](const std::vector<double>& y) {
    for (double x : y)
      if (!std::isfinite(x) || std::abs(x) > integ.blowup) return false;
    return !check || check(y.data());
  };

  for (int k = 0; k < D; ++k) {
    const int a = order[k];
    // Line starts: free axes are those swept in earlier stages.
    std::vector<std::size_t> starts;
    std::vector<int> idx = base;
    std::vector<int> free_axes(order.begin(), order.begin() + k);
    std::function<void(std::size_t)> rec = [&](std::size_t j) {
      if (j == free_axes.size()) {
        starts.push_back(g.index(idx));
        return;
      }
      const int ax = free_axes[j];
      for (int i = lo[ax]; i <= hi[ax]; ++i) {
        idx[ax] = i;
        rec(j + 1);
      }
      idx[ax] = base[ax];
    };
    rec(0);

    const int n = g.count(a);
    const double h = g.spacing(a);
    const auto stride = static_cast<std::ptrdiff_t>(g.stride(a));
    LineInterpolator ip(n, integ.interp_points);
    const int sub = integ.substeps;

    parallel_for(starts.size(), [&](std::size_t li) {
      const std::size_t node = starts[li];
      if (R.mask[node]) return;
      LineSpec L{a, node - static_cast<std::size_t>(base[a]) * static_cast<std::size_t>(stride), stride, n, h};
      std::vector<double> y(dim), k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
      for (int dir : {+1, -1}) {
        std::copy_n(R.y.begin() + static_cast<std::ptrdiff_t>(node * dim), dim, y.begin());
        int i = base[a];
        const double ds = static_cast<double>(dir) / sub;
        const double du = h * ds;
        while (dir > 0 ? i < hi[a] : i > lo[a]) {
          double s = i;
          for (int st = 0; st < sub; ++st) {
            rhs(L, ip, s, y.data(), k1.data());
            for (int c = 0; c < dim; ++c) tmp[c] = y[c] + 0.5 * du * k1[c];
            rhs(L, ip, s + 0.5 * ds, tmp.data(), k2.data());
            for (int c = 0; c < dim; ++c) tmp[c] = y[c] + 0.5 * du * k2[c];
            rhs(L, ip, s + 0.5 * ds, tmp.data(), k3.data());
            for (int c = 0; c < dim; ++c) tmp[c] = y[c] + du * k3[c];
            rhs(L, ip, s + ds, tmp.data(), k4.data());
            for (int c = 0; c < dim; ++c) y[c] += du / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
            s += ds;
          }
          i += dir;
          if (fix) fix(L, i, y.data());
          if (!ok(y)) break;
          const std::size_t at = L.start + static_cast<std::size_t>(i) * static_cast<std::size_t>(stride);
          std::copy(y.begin(), y.end(), R.y.begin() + static_cast<std::ptrdiff_t>(at * dim));
          R.mask[at] = 0;
        }
      }
    });
  }
  return R;
}

double sweep_disagreement(const Grid& g, const SweepResult& a, const SweepResult& b) {
  double diff = 0.0, scale = 0.0;
  const int dim = a.dim;
  for (std::size_t p = 0; p < g.size(); ++p) {
    if (a.mask[p] || b.mask[p]) continue;
    for (int c = 0; c < dim; ++c) {
      const double x = a.y[p * dim + c], y = b.y[p * dim + c];
      diff = std::max(diff, std::abs(x - y));
      scale = std::max(scale, std::abs(x));
    }
  }
  return scale > 0 ? diff / scale : diff;
}

TripleBoundary boundary_from(const Triple& t, const std::vector<int>& base_in) {
  TripleBoundary b;
  b.grid = t.grid;
  b.cmap = t.cmap;
  b.normals = t.normals;
  b.base = resolve_base(t.grid, base_in);
  for (int a = 0; a < t.grid.dims(); ++a) {
    TripleAxisData d;
    auto line = [&](const ScalarField& f) {
      std::vector<double> out;
      auto idx = b.base;
      for (int i = 0; i < t.grid.count(a); ++i) {
        idx[a] = i;
        out.push_back(f.values[t.grid.index(idx)]);
      }
      return out;
    };
    for (const auto& f : t.v) d.v.push_back(line(f));
    for (const auto& f : t.h) d.h.push_back(line(f));
    for (const auto& f : t.V) d.V.push_back(line(f));
    b.axis.push_back(std::move(d));
  }
  return b;
}

TripleSolve integrate_triple(const TripleBoundary& b, const SweepOptions& opt, const TripleClosure& closure) {
  const Grid& g = b.grid;
  b.cmap.validate();
  const int n = b.cmap.coords(), K = b.cmap.classes(), q = b.normals;
  const auto& c = b.cmap.cls;
  if (g.dims() != n) fail(ErrorCode::GridMismatch, "grid dimension differs from coordinate count");
  if (static_cast<int>(b.axis.size()) != n) fail(ErrorCode::InvalidArgument, "boundary data missing an axis");
  const auto base = resolve_base(g, b.base.empty() ? opt.base : b.base);
  for (int a = 0; a < n; ++a) {
    const auto& d = b.axis[a];
    if (static_cast<int>(d.v.size()) != K || static_cast<int>(d.h.size()) != n * K ||
        static_cast<int>(d.V.size()) != K * q)
      fail(ErrorCode::InvalidArgument, "boundary component count mismatch");
    for (const auto* comp : {&d.v, &d.h, &d.V})
      for (const auto& line : *comp)
        if (static_cast<int>(line.size()) != g.count(a)) fail(ErrorCode::GridMismatch, "boundary line length");
  }

  const int dim = K + n * K + K * q;
  const int oh = K, oV = K + n * K;
  std::vector<double> y0(dim);
  for (int m = 0; m < K; ++m) y0[m] = b.axis[0].v[m][base[0]];
  for (int j = 0; j < n * K; ++j) y0[oh + j] = b.axis[0].h[j][base[0]];
  for (int j = 0; j < K * q; ++j) y0[oV + j] = b.axis[0].V[j][base[0]];
  for (int m = 0; m < K; ++m)
    if (y0[m] == 0.0) fail(ErrorCode::LameVanishes, "Lame coefficient vanishes at the base node");

  auto is_free = [&](int a, int i, int m) { return i == a || c[i] == m; };

  auto rhs = [&](const LineSpec& L, const LineInterpolator& ip, double s, const double* y, double* dy) {
    const int a = L.axis, ap = c[a];
    LinePoint lp(ip, s);
    std::vector<double> pt;
    if (closure) pt = point_on(g, L, s);
    auto freev = [&](int i, int m) {
      if (closure) return closure(i, m, pt);
      return lp.at(b.axis[a].h[static_cast<std::size_t>(i * K + m)].data(), 1);
    };
    auto H = [&](int i, int m) { return is_free(a, i, m) ? freev(i, m) : y[oh + i * K + m]; };
    std::vector<double> ham(K);
    for (int m = 0; m < K; ++m) ham[m] = H(a, m);
    for (int m = 0; m < K; ++m) dy[m] = ham[m] * y[ap];
    for (int i = 0; i < n; ++i)
      for (int m = 0; m < K; ++m) dy[oh + i * K + m] = is_free(a, i, m) ? 0.0 : H(i, ap) * ham[m];
    for (int m = 0; m < K; ++m)
      for (int r = 0; r < q; ++r) dy[oV + m * q + r] = ham[m] * y[oV + ap * q + r];
  };
  std::vector<double> sign(y0.begin(), y0.begin() + K);
  auto check = [&](const double* y) {
    for (int m = 0; m < K; ++m)
      if (!(y[m] * sign[m] > 0.0)) return false;
    return true;
  };

  // Free components take their closure values at every node a line reaches.
  auto fix = [&](const LineSpec& L, int i, double* y) {
    const int a = L.axis;
    std::vector<double> pt;
    if (closure) pt = point_on(g, L, i);
    for (int ii = 0; ii < n; ++ii)
      for (int m = 0; m < K; ++m)
        if (is_free(a, ii, m))
          y[oh + ii * K + m] = closure ? closure(ii, m, pt) : b.axis[a].h[static_cast<std::size_t>(ii * K + m)][i];
  };

  auto run = [&](const std::vector<int>& order, const std::vector<int>& lo, const std::vector<int>& hi) {
    return sweep_lines(g, dim, base, y0, order, lo, hi, rhs, check, opt.integ, fix);
  };

  std::vector<int> lo, hi;
  probe_box(g, base, 0, lo, hi);
  SweepResult main = run(ascending(n), lo, hi);

  TripleSolve out;
  out.triple = Triple::zeros(g, b.cmap, q);
  Triple& t = out.triple;
  for (std::size_t p = 0; p < g.size(); ++p) {
    const double* y = &main.y[p * dim];
    for (int m = 0; m < K; ++m) t.v[m].values[p] = y[m];
    for (int j = 0; j < n * K; ++j) t.h[j].values[p] = y[oh + j];
    for (int j = 0; j < K * q; ++j) t.V[j].values[p] = y[oV + j];
    if (main.mask[p]) {
      for (auto& f : t.v) f.set_mask(p);
      for (auto& f : t.h) f.set_mask(p);
      for (auto& f : t.V) f.set_mask(p);
    }
  }

  double path = 0.0;
  if (opt.alternate && n > 1) {
    std::vector<int> plo, phi;
    probe_box(g, base, opt.probe_nodes, plo, phi);
    auto rev = ascending(n);
    std::reverse(rev.begin(), rev.end());
    SweepResult alt = run(rev, plo, phi);
    SweepResult sub = main;
    for (std::size_t p = 0; p < g.size(); ++p) {
      auto idx = g.multi_index(p);
      for (int a = 0; a < n; ++a)
        if (idx[a] < plo[a] || idx[a] > phi[a]) sub.mask[p] = 1;
    }
    path = sweep_disagreement(g, sub, alt);
  }

  // Integrated components along each axis against the supplied boundary data.
  double bc = 0.0, scale = 0.0;
  for (int a = 0; a < n; ++a) {
    auto idx = base;
    for (int i = 0; i < g.count(a); ++i) {
      idx[a] = i;
      const std::size_t p = g.index(idx);
      if (main.mask[p]) continue;
      const double* y = &main.y[p * dim];
      const auto& d = b.axis[a];
      for (int m = 0; m < K; ++m) {
        bc = std::max(bc, std::abs(y[m] - d.v[m][i]));
        scale = std::max(scale, std::abs(d.v[m][i]));
      }
      for (int j = 0; j < n * K; ++j) {
        bc = std::max(bc, std::abs(y[oh + j] - d.h[j][i]));
        scale = std::max(scale, std::abs(d.h[j][i]));
      }
      for (int j = 0; j < K * q; ++j) {
        bc = std::max(bc, std::abs(y[oV + j] - d.V[j][i]));
        scale = std::max(scale, std::abs(d.V[j][i]));
      }
    }
  }
  out.report.rows.push_back({"path_independence", path, main.masked_fraction()});
  out.report.rows.push_back({"boundary_consistency", scale > 0 ? bc / scale : bc, main.masked_fraction()});
  spdlog::debug("integrate_triple: path {:.3e}, boundary {:.3e}, masked {:.3f}", path, bc, main.masked_fraction());
  return out;
}

FrameInit standard_frame(int n, int q, int ambient) {
  if (n + q > ambient) fail(ErrorCode::DimensionMismatch, "frame does not fit the ambient space");
  FrameInit f;
  f.point = Vec::Zero(ambient);
  for (int i = 0; i < n; ++i) f.X.push_back(Vec::Unit(ambient, i));
  for (int r = 0; r < q; ++r) f.xi.push_back(Vec::Unit(ambient, n + r));
  return f;
}

FrameSolve reconstruct_frame(const Triple& t, const FrameInit& f0, double tol, const SweepOptions& opt) {
  const Grid& g = t.grid;
  const int n = t.coords(), K = t.classes(), q = t.normals;
  const int N = static_cast<int>(f0.point.size());
  const auto& c = t.cmap.cls;
  if (static_cast<int>(f0.X.size()) != n || static_cast<int>(f0.xi.size()) != q)
    fail(ErrorCode::DimensionMismatch, "initial frame does not match the triple");
  if (n + q > N) fail(ErrorCode::DimensionMismatch, "frame does not fit the ambient space");
  {
    Mat F(N, n + q);
    for (int i = 0; i < n; ++i) F.col(i) = f0.X[i];
    for (int r = 0; r < q; ++r) F.col(n + r) = f0.xi[r];
    if ((F.transpose() * F - Mat::Identity(n + q, n + q)).cwiseAbs().maxCoeff() > 1e-10)
      fail(ErrorCode::InvalidArgument, "initial frame is not orthonormal");
  }
  const auto base = resolve_base(g, opt.base);
  const int dim = N * (1 + n + q);
  std::vector<double> y0(dim);
  for (int k = 0; k < N; ++k) y0[k] = f0.point[k];
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < N; ++k) y0[N * (1 + i) + k] = f0.X[i][k];
  for (int r = 0; r < q; ++r)
    for (int k = 0; k < N; ++k) y0[N * (1 + n + r) + k] = f0.xi[r][k];

  auto rhs = [&](const LineSpec& L, const LineInterpolator& ip, double s, const double* y, double* dy) {
    const int a = L.axis, ap = c[a];
    LinePoint lp(ip, s);
    const double va = lp.at(t.v[ap], L);
    const double* Xa = y + N * (1 + a);
    std::fill(dy, dy + dim, 0.0);
    for (int k = 0; k < N; ++k) dy[k] = va * Xa[k];
    double* dXa = dy + N * (1 + a);
    for (int j = 0; j < n; ++j) {
      if (j == a) continue;
      const double hj = lp.at(t.hf(j, ap), L);
      const double* Xj = y + N * (1 + j);
      double* dXj = dy + N * (1 + j);
      for (int k = 0; k < N; ++k) {
        dXa[k] -= hj * Xj[k];
        dXj[k] = hj * Xa[k];
      }
    }
    for (int r = 0; r < q; ++r) {
      const double Vr = lp.at(t.Vf(ap, r), L);
      const double* xr = y + N * (1 + n + r);
      double* dxr = dy + N * (1 + n + r);
      for (int k = 0; k < N; ++k) {
        dXa[k] += Vr * xr[k];
        dxr[k] = -Vr * Xa[k];
      }
    }
  };

  std::vector<int> lo, hi;
  probe_box(g, base, 0, lo, hi);
  SweepResult R = sweep_lines(g, dim, base, y0, ascending(n), lo, hi, rhs, nullptr, opt.integ);

  FrameSolve out;
  if (opt.alternate && n > 1) {
    std::vector<int> plo, phi;
    probe_box(g, base, opt.probe_nodes, plo, phi);
    auto rev = ascending(n);
    std::reverse(rev.begin(), rev.end());
    SweepResult alt = sweep_lines(g, dim, base, y0, rev, plo, phi, rhs, nullptr, opt.integ);
    SweepResult sub = R;
    for (std::size_t p = 0; p < g.size(); ++p) {
      auto idx = g.multi_index(p);
      for (int a = 0; a < n; ++a)
        if (idx[a] < plo[a] || idx[a] > phi[a]) sub.mask[p] = 1;
    }
    out.path_residual = sweep_disagreement(g, sub, alt);
  }

  ImmersionSample& s = out.sample;
  s.grid = g;
  s.ambient = N;
  s.pos = VectorField(g, Vec::Zero(N), "g");
  for (int i = 0; i < n; ++i) s.X.emplace_back(g, Vec::Zero(N), "X" + std::to_string(i));
  for (int r = 0; r < q; ++r) s.xi.emplace_back(g, Vec::Zero(N), "xi" + std::to_string(r));
  double gram = 0.0;
  for (std::size_t p = 0; p < g.size(); ++p) {
    const double* y = &R.y[p * dim];
    s.pos.values[p] = Eigen::Map<const Vec>(y, N);
    for (int i = 0; i < n; ++i) s.X[i].values[p] = Eigen::Map<const Vec>(y + N * (1 + i), N);
    for (int r = 0; r < q; ++r) s.xi[r].values[p] = Eigen::Map<const Vec>(y + N * (1 + n + r), N);
    if (R.mask[p] || t.v[0].masked(p)) {
      s.pos.set_mask(p);
      continue;
    }
    Mat F(N, n + q);
    for (int i = 0; i < n; ++i) F.col(i) = s.X[i].values[p];
    for (int r = 0; r < q; ++r) F.col(n + r) = s.xi[r].values[p];
    gram = std::max(gram, (F.transpose() * F - Mat::Identity(n + q, n + q)).cwiseAbs().maxCoeff());
  }
  out.gram_defect = gram;
  (void)K;
  if (!(gram < tol)) fail(ErrorCode::FrameDrift, "frame Gram defect " + std::to_string(gram) + " exceeds tolerance");
  s.triple = t;
  fill_principal_cache(s);
  return out;
}

BSolve solve_B(const Triple& t, const std::vector<double>& B0, const SweepOptions& opt,
               const OwnAxisForcing& forcing) {
  const Grid& g = t.grid;
  const int n = t.coords(), K = t.classes();
  const auto& c = t.cmap.cls;
  if (static_cast<int>(B0.size()) != K) fail(ErrorCode::DimensionMismatch, "B0 needs one value per class");
  const auto base = resolve_base(g, opt.base);
  auto rhs = [&](const LineSpec& L, const LineInterpolator& ip, double s, const double* y, double* dy) {
    const int a = L.axis, ap = c[a];
    LinePoint lp(ip, s);
    for (int m = 0; m < K; ++m) dy[m] = lp.at(t.hf(a, m), L) * y[ap];
    if (forcing) dy[ap] += forcing(a, point_on(g, L, s));
  };
  std::vector<int> lo, hi;
  probe_box(g, base, 0, lo, hi);
  SweepResult R = sweep_lines(g, K, base, B0, ascending(n), lo, hi, rhs, nullptr, opt.integ);
  BSolve out;
  if (opt.alternate && n > 1) {
    std::vector<int> plo, phi;
    probe_box(g, base, opt.probe_nodes, plo, phi);
    auto rev = ascending(n);
    std::reverse(rev.begin(), rev.end());
    SweepResult alt = sweep_lines(g, K, base, B0, rev, plo, phi, rhs, nullptr, opt.integ);
    SweepResult sub = R;
    for (std::size_t p = 0; p < g.size(); ++p) {
      auto idx = g.multi_index(p);
      for (int a = 0; a < n; ++a)
        if (idx[a] < plo[a] || idx[a] > phi[a]) sub.mask[p] = 1;
    }
    out.path_residual = sweep_disagreement(g, sub, alt);
  }
  for (int m = 0; m < K; ++m) {
    ScalarField f(g, 0.0, "B" + std::to_string(m));
    for (std::size_t p = 0; p < g.size(); ++p) {
      f.values[p] = R.y[p * K + m];
      if (R.mask[p]) f.set_mask(p);
    }
    out.B.push_back(std::move(f));
  }
  out.masked_fraction = R.masked_fraction();
  return out;
}

RibaucourSolution solve_linear(const Triple& t, const std::vector<ScalarField>& B, const LinearInit& init,
                               const SweepOptions& opt) {
  const Grid& g = t.grid;
  const int n = t.coords(), K = t.classes(), q = t.normals;
  const auto& c = t.cmap.cls;
  if (static_cast<int>(B.size()) != K) fail(ErrorCode::DimensionMismatch, "B needs one field per class");
  for (const auto& f : B)
    if (f.grid != g) fail(ErrorCode::GridMismatch, "B on a different grid");
  std::vector<double> gam = init.gamma.empty() ? std::vector<double>(n, 0.0) : init.gamma;
  std::vector<double> bet = init.beta.empty() ? std::vector<double>(q, 0.0) : init.beta;
  if (static_cast<int>(gam.size()) != n || static_cast<int>(bet.size()) != q)
    fail(ErrorCode::DimensionMismatch, "initial gamma/beta sizes");
  const auto base = resolve_base(g, opt.base);
  const int dim = 1 + n + q;
  std::vector<double> y0(dim);
  y0[0] = init.phi;
  for (int i = 0; i < n; ++i) y0[1 + i] = gam[i];
  for (int r = 0; r < q; ++r) y0[1 + n + r] = bet[r];

  auto rhs = [&](const LineSpec& L, const LineInterpolator& ip, double s, const double* y, double* dy) {
    const int a = L.axis, ap = c[a];
    LinePoint lp(ip, s);
    const double ga = y[1 + a];
    dy[0] = lp.at(t.v[ap], L) * ga;
    double dga = lp.at(B[ap], L);
    for (int j = 0; j < n; ++j) {
      if (j == a) continue;
      const double hj = lp.at(t.hf(j, ap), L);
      dy[1 + j] = hj * ga;
      dga -= hj * y[1 + j];
    }
    for (int r = 0; r < q; ++r) {
      const double Vr = lp.at(t.Vf(ap, r), L);
      dga += y[1 + n + r] * Vr;
      dy[1 + n + r] = -Vr * ga;
    }
    dy[1 + a] = dga;
  };

  std::vector<int> lo, hi;
  probe_box(g, base, 0, lo, hi);
  SweepResult R = sweep_lines(g, dim, base, y0, ascending(n), lo, hi, rhs, nullptr, opt.integ);
  double path = 0.0;
  if (opt.alternate && n > 1) {
    std::vector<int> plo, phi;
    probe_box(g, base, opt.probe_nodes, plo, phi);
    auto rev = ascending(n);
    std::reverse(rev.begin(), rev.end());
    SweepResult alt = sweep_lines(g, dim, base, y0, rev, plo, phi, rhs, nullptr, opt.integ);
    SweepResult sub = R;
    for (std::size_t p = 0; p < g.size(); ++p) {
      auto idx = g.multi_index(p);
      for (int a = 0; a < n; ++a)
        if (idx[a] < plo[a] || idx[a] > phi[a]) sub.mask[p] = 1;
    }
    path = sweep_disagreement(g, sub, alt);
  }

  RibaucourSolution w;
  w.grid = g;
  w.base = base;
  w.phi = ScalarField(g, 0.0, "phi");
  for (int i = 0; i < n; ++i) w.gamma.emplace_back(g, 0.0, "gamma" + std::to_string(i));
  for (int r = 0; r < q; ++r) w.beta.emplace_back(g, 0.0, "beta" + std::to_string(r));
  w.B = B;
  double phimax = 0.0;
  for (std::size_t p = 0; p < g.size(); ++p)
    if (!R.mask[p]) phimax = std::max(phimax, std::abs(R.y[p * dim]));
  std::size_t vanish = 0;
  for (std::size_t p = 0; p < g.size(); ++p) {
    const double* y = &R.y[p * dim];
    w.phi.values[p] = y[0];
    for (int i = 0; i < n; ++i) w.gamma[i].values[p] = y[1 + i];
    for (int r = 0; r < q; ++r) w.beta[r].values[p] = y[1 + n + r];
    bool m = R.mask[p] != 0;
    if (!m && std::abs(y[0]) <= 1e-10 * phimax) {
      m = true;
      ++vanish;
    }
    if (m) {
      w.phi.set_mask(p);
      for (auto& f : w.gamma) f.set_mask(p);
      for (auto& f : w.beta) f.set_mask(p);
    }
  }
  const double mf = w.phi.masked_fraction();
  w.report.rows.push_back({"path_independence", path, mf});
  w.report.rows.push_back({"phi_vanishes", static_cast<double>(vanish), mf});
  (void)K;
  return w;
}

RibaucourSolution combine(const RibaucourSolution& a, double c, const RibaucourSolution& b) {
  if (a.grid != b.grid) fail(ErrorCode::GridMismatch, "solutions on different grids");
  if (a.gamma.size() != b.gamma.size() || a.beta.size() != b.beta.size())
    fail(ErrorCode::DimensionMismatch, "solutions of different shape");
  RibaucourSolution w = a;
  auto mix = [&](ScalarField& x, const ScalarField& y) {
    for (std::size_t p = 0; p < x.size(); ++p) {
      x.values[p] += c * y.values[p];
      if (y.masked(p)) x.set_mask(p);
    }
  };
  mix(w.phi, b.phi);
  for (std::size_t i = 0; i < w.gamma.size(); ++i) mix(w.gamma[i], b.gamma[i]);
  for (std::size_t r = 0; r < w.beta.size(); ++r) mix(w.beta[r], b.beta[r]);
  for (std::size_t m = 0; m < w.B.size() && m < b.B.size(); ++m) mix(w.B[m], b.B[m]);
  w.report = {};
  return w;
}

}  // namespace dupin
