#include "dupin/moebius.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "dupin/errors.hpp"

namespace dupin {

namespace {

constexpr double kOriginTol = 1e-10;
constexpr double kOffsetTol = 1e-10;

ClassMap class_map_of(const ImmersionSample& s) {
  return s.triple ? s.triple->cmap : ClassMap::identity(s.coords());
}

// V_m^r at a node, from the triple when present and from the curvature cache otherwise.
double V_at(const ImmersionSample& s, const ClassMap& cm, int m, int r, std::size_t n) {
  if (s.triple) return s.triple->Vf(m, r).values[n];
  const int i = cm.members(m).front();
  return s.kap(i, r, n) * s.lame[i].values[n];
}

double lorentz(const Vec& a, const Vec& b) { return a.dot(b) - 2.0 * a[0] * b[0]; }

Vec normal_combo(const ImmersionSample& s, const std::vector<int>& idx, std::size_t n,
                 const std::vector<double>& c) {
  Vec t = Vec::Zero(s.ambient);
  for (std::size_t e = 0; e < idx.size(); ++e) t += c[e] * s.xi[idx[e]].values[n];
  return t;
}

ImmersionSample positions_only(const Grid& g, int ambient) {
  ImmersionSample out;
  out.grid = g;
  out.ambient = ambient;
  out.pos = VectorField(g, Vec::Zero(ambient), "pos");
  return out;
}

void check_indices(const ImmersionSample& s, const std::vector<int>& idx) {
  for (int r : idx)
    if (r < 0 || r >= s.normals()) fail(ErrorCode::AxisOutOfRange, "normal index out of range");
}

}  // namespace

LTransform LTransform::translate(Vec u) {
  LTransform t;
  t.kind = Kind::Translate;
  t.u = std::move(u);
  return t;
}

LTransform LTransform::orthogonal(Mat O) {
  LTransform t;
  t.kind = Kind::Orthogonal;
  t.O = std::move(O);
  return t;
}

LTransform LTransform::homothety(double k) {
  LTransform t;
  t.kind = Kind::Homothety;
  t.k = k;
  return t;
}

LTransform LTransform::inversion() {
  LTransform t;
  t.kind = Kind::Inversion;
  return t;
}

LTransform LTransform::parallel(std::vector<double> c) {
  LTransform t;
  t.kind = Kind::ParallelTranslate;
  t.c = std::move(c);
  return t;
}

void LTransform::validate(int ambient, int normals) const {
  switch (kind) {
    case Kind::Translate:
      if (u.size() != ambient) fail(ErrorCode::DimensionMismatch, "translation vector has wrong size");
      break;
    case Kind::Orthogonal: {
      if (O.rows() != ambient || O.cols() != ambient)
        fail(ErrorCode::DimensionMismatch, "orthogonal matrix has wrong size");
      const double d = (O.transpose() * O - Mat::Identity(ambient, ambient)).cwiseAbs().maxCoeff();
      if (d > 1e-10) fail(ErrorCode::InvalidArgument, "matrix is not orthogonal");
      break;
    }
    case Kind::Homothety:
      if (k == 0.0 || !std::isfinite(k)) fail(ErrorCode::InvalidArgument, "homothety factor must be nonzero");
      break;
    case Kind::Inversion:
      break;
    case Kind::ParallelTranslate:
      if (static_cast<int>(c.size()) != normals)
        fail(ErrorCode::DimensionMismatch, "parallel translation needs one coefficient per normal");
      break;
  }
}

std::string LTransform::describe() const {
  std::ostringstream os;
  os << to_string(kind);
  auto list = [&os](auto first, auto last) {
    os << '(';
    for (auto it = first; it != last; ++it) os << (it == first ? "" : ", ") << *it;
    os << ')';
  };
  switch (kind) {
    case Kind::Translate:
      list(u.data(), u.data() + u.size());
      break;
    case Kind::Homothety:
      os << '(' << k << ')';
      break;
    case Kind::ParallelTranslate:
      list(c.begin(), c.end());
      break;
    default:
      break;
  }
  return os.str();
}

const char* to_string(LTransform::Kind k) {
  switch (k) {
    case LTransform::Kind::Translate: return "translate";
    case LTransform::Kind::Orthogonal: return "orthogonal";
    case LTransform::Kind::Homothety: return "homothety";
    case LTransform::Kind::Inversion: return "inversion";
    case LTransform::Kind::ParallelTranslate: return "parallel";
  }
  return "?";
}

ImmersionSample apply_ltransform(const ImmersionSample& s, const LTransform& T) {
  T.validate(s.ambient, s.normals());
  ImmersionSample out = s;
  const std::size_t P = s.grid.size();
  const int n = s.coords(), q = s.normals();
  const bool frames = s.has_frames();
  const bool principal = s.principal();

  switch (T.kind) {
    case LTransform::Kind::Translate:
      for (auto& p : out.pos.values) p += T.u;
      break;

    case LTransform::Kind::Orthogonal:
      for (auto& p : out.pos.values) p = T.O * p;
      for (auto& X : out.X)
        for (auto& x : X.values) x = T.O * x;
      for (auto& xi : out.xi)
        for (auto& x : xi.values) x = T.O * x;
      break;

    case LTransform::Kind::Homothety:
      for (auto& p : out.pos.values) p *= T.k;
      for (auto& l : out.lame)
        for (auto& x : l.values) x *= T.k;
      for (auto& k : out.kappa)
        for (auto& x : k.values) x /= T.k;
      if (out.triple)
        for (auto& v : out.triple->v)
          for (auto& x : v.values) x *= T.k;
      break;

    case LTransform::Kind::Inversion: {
      const int K = out.triple ? out.triple->classes() : 0;
      for (std::size_t p = 0; p < P; ++p) {
        const Vec f = s.pos.values[p];
        const double f2 = f.squaredNorm();
        if (f2 < kOriginTol * kOriginTol) {
          if (s.masked(p)) continue;
          fail(ErrorCode::ThroughOrigin, "inversion: sample passes through the origin");
        }
        out.pos.values[p] = f / f2;
        if (!frames) continue;
        auto Pm = [&](const Vec& x) -> Vec { return x - 2.0 * f * (f.dot(x) / f2); };
        for (int i = 0; i < n; ++i) out.X[i].values[p] = Pm(s.X[i].values[p]);
        for (int r = 0; r < q; ++r) out.xi[r].values[p] = Pm(s.xi[r].values[p]);
        if (principal) {
          for (int i = 0; i < n; ++i) {
            out.lame[i].values[p] = s.lame[i].values[p] / f2;
            for (int r = 0; r < q; ++r)
              out.kappa[i * q + r].values[p] = f2 * s.kap(i, r, p) + 2.0 * f.dot(s.xi[r].values[p]);
          }
        }
        if (out.triple) {
          const Triple& t = *s.triple;
          Triple& u = *out.triple;
          for (int m = 0; m < K; ++m) {
            const double vm = t.v[m].values[p];
            u.v[m].values[p] = vm / f2;
            for (int r = 0; r < q; ++r)
              u.Vf(m, r).values[p] = t.Vf(m, r).values[p] + 2.0 * f.dot(s.xi[r].values[p]) * vm / f2;
            for (int j = 0; j < n; ++j)
              u.hf(j, m).values[p] = t.hf(j, m).values[p] - 2.0 * vm * f.dot(s.X[j].values[p]) / f2;
          }
        }
      }
      if (out.triple && !frames) fail(ErrorCode::InvalidArgument, "inversion of a triple needs frames");
      break;
    }

    case LTransform::Kind::ParallelTranslate: {
      if (!principal) fail(ErrorCode::InvalidArgument, "parallel translation needs principal frame data");
      const ClassMap cm = class_map_of(s);
      const int K = cm.classes();
      for (std::size_t p = 0; p < P; ++p) {
        Vec shift = Vec::Zero(s.ambient);
        for (int r = 0; r < q; ++r) shift += T.c[r] * s.xi[r].values[p];
        out.pos.values[p] += shift;
        for (int i = 0; i < n; ++i) {
          double fac = 1.0;
          for (int r = 0; r < q; ++r) fac -= T.c[r] * s.kap(i, r, p);
          if (std::abs(fac) <= kOffsetTol) {
            if (s.masked(p)) continue;
            fail(ErrorCode::DegenerateOffset, "parallel translation hits a focal point");
          }
          out.lame[i].values[p] *= fac;
          for (int r = 0; r < q; ++r) out.kappa[i * q + r].values[p] /= fac;
        }
        if (out.triple)
          for (int m = 0; m < K; ++m) {
            double vm = s.triple->v[m].values[p];
            for (int r = 0; r < q; ++r) vm -= T.c[r] * s.triple->Vf(m, r).values[p];
            out.triple->v[m].values[p] = vm;
          }
      }
      break;
    }
  }
  return out;
}

ImmersionSample apply_chain(const ImmersionSample& s, const std::vector<LTransform>& chain) {
  ImmersionSample cur = s;
  for (const auto& T : chain) cur = apply_ltransform(cur, T);
  return cur;
}

RibaucourSolution pushforward_w(const RibaucourSolution& w, const LTransform& T, const ImmersionSample& s) {
  if (w.grid != s.grid) fail(ErrorCode::GridMismatch, "solution and sample grids differ");
  T.validate(s.ambient, s.normals());
  RibaucourSolution out = w;
  const std::size_t P = s.grid.size();
  const int n = s.coords(), q = s.normals();

  switch (T.kind) {
    case LTransform::Kind::Translate:
    case LTransform::Kind::Orthogonal:
      break;
    case LTransform::Kind::Homothety:
      for (auto& x : out.phi.values) x *= T.k;
      break;
    case LTransform::Kind::ParallelTranslate:
      for (std::size_t p = 0; p < P; ++p)
        for (int r = 0; r < q; ++r) out.phi.values[p] += T.c[r] * w.beta[r].values[p];
      break;
    case LTransform::Kind::Inversion: {
      if (!s.principal()) fail(ErrorCode::InvalidArgument, "inversion pushforward needs principal frame data");
      const ClassMap cm = class_map_of(s);
      const int K = cm.classes();
      std::vector<int> first(K);
      for (int m = 0; m < K; ++m) first[m] = cm.members(m).front();
      for (std::size_t p = 0; p < P; ++p) {
        const Vec& f = s.pos.values[p];
        const double f2 = f.squaredNorm();
        if (f2 < kOriginTol * kOriginTol) {
          if (s.masked(p) || w.masked(p)) continue;
          fail(ErrorCode::ThroughOrigin, "inversion: sample passes through the origin");
        }
        Vec F = Vec::Zero(s.ambient);
        for (int i = 0; i < n; ++i) F += w.gamma[i].values[p] * s.X[i].values[p];
        for (int r = 0; r < q; ++r) F += w.beta[r].values[p] * s.xi[r].values[p];
        const double phi = w.phi.values[p];
        const double c = 2.0 * (F.dot(f) - phi) / f2;
        const Vec F2 = F - c * f;
        auto Pm = [&](const Vec& x) -> Vec { return x - 2.0 * f * (f.dot(x) / f2); };
        out.phi.values[p] = phi / f2;
        for (int i = 0; i < n; ++i) out.gamma[i].values[p] = F2.dot(Pm(s.X[i].values[p]));
        for (int r = 0; r < q; ++r) out.beta[r].values[p] = F2.dot(Pm(s.xi[r].values[p]));
        for (int m = 0; m < K; ++m) out.B[m].values[p] = w.B[m].values[p] - c * s.lame[first[m]].values[p];
      }
      break;
    }
  }
  return out;
}

EpsilonValue epsilon_of(const LTrivialSpec& spec, const std::vector<int>& nidx, double tol) {
  double dperp = 0.0, dall = 0.0;
  std::vector<char> inN(spec.d.size(), 0);
  for (int l : nidx)
    if (l >= 0 && l < static_cast<int>(spec.d.size())) inN[l] = 1;
  for (std::size_t r = 0; r < spec.d.size(); ++r) {
    dall += spec.d[r] * spec.d[r];
    if (!inN[r]) dperp += spec.d[r] * spec.d[r];
  }
  const double v2 = spec.v.size() ? spec.v.squaredNorm() : 0.0;
  EpsilonValue e;
  e.expr = spec.a * spec.c - v2 + dperp;
  const double scale = std::max({1.0, std::abs(spec.a * spec.c), v2, dall});
  if (std::abs(e.expr) < tol * scale) {
    e.value = 0;
    e.ambiguous = e.expr != 0.0;
  } else {
    e.value = e.expr > 0 ? 1 : -1;
  }
  return e;
}

LTrivialSpec pushforward_trivial(const LTrivialSpec& s, const LTransform& T) {
  LTrivialSpec o = s;
  switch (T.kind) {
    case LTransform::Kind::Translate:
      if (T.u.size() != s.v.size()) fail(ErrorCode::DimensionMismatch, "translation vector has wrong size");
      o.v = s.v - s.a * T.u;
      o.c = s.c - 2.0 * T.u.dot(s.v) + s.a * T.u.squaredNorm();
      break;
    case LTransform::Kind::Orthogonal:
      o.v = T.O * s.v;
      break;
    case LTransform::Kind::Homothety:
      o.a = s.a / T.k;
      o.c = s.c * T.k;
      break;
    case LTransform::Kind::Inversion:
      o.a = s.c;
      o.c = s.a;
      break;
    case LTransform::Kind::ParallelTranslate: {
      if (T.c.size() != s.d.size()) fail(ErrorCode::DimensionMismatch, "parallel translation has wrong size");
      double dc = 0.0, cc = 0.0;
      for (std::size_t r = 0; r < s.d.size(); ++r) {
        o.d[r] = s.d[r] - s.a * T.c[r];
        dc += s.d[r] * T.c[r];
        cc += T.c[r] * T.c[r];
      }
      o.c = s.c + 2.0 * dc - s.a * cc;
      break;
    }
  }
  return o;
}

LTrivialSpec apply_trivial_chain(const LTrivialSpec& spec, const std::vector<LTransform>& chain) {
  LTrivialSpec cur = spec;
  for (const auto& T : chain) cur = pushforward_trivial(cur, T);
  return cur;
}

RibaucourSolution ltrivial_solution(const ImmersionSample& s, const LTrivialSpec& spec) {
  if (!s.principal()) fail(ErrorCode::InvalidArgument, "sample lacks principal frame data");
  if (spec.v.size() != s.ambient) fail(ErrorCode::DimensionMismatch, "v has wrong size");
  if (static_cast<int>(spec.d.size()) != s.normals()) fail(ErrorCode::DimensionMismatch, "d has wrong size");
  const ClassMap cm = class_map_of(s);
  const int n = s.coords(), q = s.normals(), K = cm.classes();
  const Grid& g = s.grid;

  RibaucourSolution w;
  w.grid = g;
  w.base.assign(n, 0);
  w.phi = ScalarField(g, 0.0, "phi");
  for (int i = 0; i < n; ++i) w.gamma.emplace_back(g, 0.0, "gamma" + std::to_string(i));
  for (int r = 0; r < q; ++r) w.beta.emplace_back(g, 0.0, "beta" + std::to_string(r));
  for (int m = 0; m < K; ++m) w.B.emplace_back(g, 0.0, "B" + std::to_string(m));
  w.phi.mask = s.pos.mask;

  for (std::size_t p = 0; p < g.size(); ++p) {
    const Vec& f = s.pos.values[p];
    Vec F = spec.a * f + spec.v;
    for (int r = 0; r < q; ++r) F += spec.d[r] * s.xi[r].values[p];
    w.phi.values[p] = 0.5 * (spec.a * f.squaredNorm() + 2.0 * f.dot(spec.v) + spec.c);
    for (int i = 0; i < n; ++i) w.gamma[i].values[p] = F.dot(s.X[i].values[p]);
    for (int r = 0; r < q; ++r) w.beta[r].values[p] = F.dot(s.xi[r].values[p]);
    for (int m = 0; m < K; ++m) {
      double b = spec.a * s.lame[cm.members(m).front()].values[p];
      for (int r = 0; r < q; ++r) b -= spec.d[r] * V_at(s, cm, m, r, p);
      w.B[m].values[p] = b;
    }
  }
  w.report.rows.push_back({"closed_form", 0.0, w.phi.masked_fraction()});
  return w;
}

LTrivialDetection detect_ltrivial(const ImmersionSample& s, const RibaucourSolution& w, double tol,
                                  const std::vector<int>& nidx) {
  if (!s.has_frames()) fail(ErrorCode::InvalidArgument, "sample lacks frames");
  if (w.grid != s.grid) fail(ErrorCode::GridMismatch, "solution and sample grids differ");
  const int n = s.coords(), q = s.normals(), N = s.ambient;
  const int cols = 1 + N + q;

  std::vector<std::size_t> nodes;
  for (std::size_t p = 0; p < s.grid.size(); ++p)
    if (!s.masked(p) && !w.masked(p)) nodes.push_back(p);
  if (nodes.empty()) fail(ErrorCode::TooFewNodes, "no unmasked nodes");

  Mat A = Mat::Zero(static_cast<Eigen::Index>(nodes.size()) * N, cols);
  Vec b(A.rows());
  std::vector<Vec> Fs(nodes.size());
  double Fmax = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const std::size_t p = nodes[k];
    Vec F = Vec::Zero(N);
    for (int i = 0; i < n; ++i) F += w.gamma[i].values[p] * s.X[i].values[p];
    for (int r = 0; r < q; ++r) F += w.beta[r].values[p] * s.xi[r].values[p];
    Fs[k] = F;
    Fmax = std::max(Fmax, F.norm());
    const auto row = static_cast<Eigen::Index>(k) * N;
    A.block(row, 0, N, 1) = s.pos.values[p];
    A.block(row, 1, N, N).setIdentity();
    for (int r = 0; r < q; ++r) A.block(row, 1 + N + r, N, 1) = s.xi[r].values[p];
    b.segment(row, N) = F;
  }

  LTrivialDetection out;
  out.rank = numerical_rank(A, 1e-9);
  out.substantial = out.rank.rank == cols;
  const Vec x = A.completeOrthogonalDecomposition().solve(b);

  out.spec.a = x[0];
  out.spec.v = x.segment(1, N);
  out.spec.d.assign(x.data() + 1 + N, x.data() + cols);

  double fit = 0.0;
  const Vec res = A * x - b;
  for (std::size_t k = 0; k < nodes.size(); ++k)
    fit = std::max(fit, res.segment(static_cast<Eigen::Index>(k) * N, N).norm());
  out.fit_residual = fit / std::max(1.0, Fmax);

  std::vector<double> cs(nodes.size());
  double mean = 0.0, phimax = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const std::size_t p = nodes[k];
    const Vec& f = s.pos.values[p];
    const double phi = w.phi.values[p];
    cs[k] = 2.0 * phi - out.spec.a * f.squaredNorm() - 2.0 * f.dot(out.spec.v);
    mean += cs[k];
    phimax = std::max(phimax, std::abs(2.0 * phi));
  }
  mean /= static_cast<double>(nodes.size());
  out.spec.c = mean;
  double dev = 0.0;
  for (double c : cs) dev = std::max(dev, std::abs(c - mean));
  out.const_residual = dev / std::max(1.0, phimax);

  out.trivial = out.fit_residual < tol && out.const_residual < tol;
  out.eps = epsilon_of(out.spec, nidx);
  spdlog::debug("detect_ltrivial: fit {:.3e} const {:.3e} rank {}/{}", out.fit_residual, out.const_residual,
                out.rank.rank, cols);
  return out;
}

ImmersionSample embed_with_pole(const ImmersionSample& s) {
  const int N = s.ambient, q = s.normals(), n = s.coords();
  auto lift = [N](const Vec& x) {
    Vec y = Vec::Zero(N + 1);
    y.tail(N) = x;
    return y;
  };
  ImmersionSample out;
  out.grid = s.grid;
  out.ambient = N + 1;
  out.pos = VectorField(s.grid, Vec::Zero(N + 1), s.pos.tag);
  out.pos.mask = s.pos.mask;
  for (std::size_t p = 0; p < s.grid.size(); ++p) out.pos.values[p] = lift(s.pos.values[p]);
  if (!s.has_frames()) return out;

  for (const auto& X : s.X) {
    VectorField Y(s.grid, Vec::Zero(N + 1), X.tag);
    for (std::size_t p = 0; p < s.grid.size(); ++p) Y.values[p] = lift(X.values[p]);
    out.X.push_back(std::move(Y));
  }
  for (const auto& xi : s.xi) {
    VectorField Y(s.grid, Vec::Zero(N + 1), xi.tag);
    for (std::size_t p = 0; p < s.grid.size(); ++p) Y.values[p] = lift(xi.values[p]);
    out.xi.push_back(std::move(Y));
  }
  Vec e0 = Vec::Zero(N + 1);
  e0[0] = 1.0;
  out.xi.emplace_back(s.grid, e0, "xi_pole");

  out.lame = s.lame;
  if (s.principal()) {
    for (int i = 0; i < n; ++i) {
      for (int r = 0; r < q; ++r) out.kappa.push_back(s.kappa[i * q + r]);
      out.kappa.emplace_back(s.grid, 0.0, "kappa_pole");
    }
  }
  if (s.triple) {
    const Triple& t = *s.triple;
    Triple u = Triple::zeros(t.grid, t.cmap, q + 1);
    u.v = t.v;
    u.h = t.h;
    for (int m = 0; m < t.classes(); ++m)
      for (int r = 0; r < q; ++r) u.Vf(m, r) = t.Vf(m, r);
    out.triple = std::move(u);
  }
  return out;
}

ImmersionSample stereographic(const ImmersionSample& s, const StereographicMap& map, bool forward) {
  const int eps = map.eps;
  if (eps < -1 || eps > 1) fail(ErrorCode::InvalidArgument, "stereographic eps must be -1, 0 or 1");
  const double e2 = eps * eps;

  if (forward) {
    ImmersionSample e = embed_with_pole(s);
    Vec e0 = Vec::Zero(e.ambient);
    e0[0] = 1.0;
    if (eps >= 0) {
      return apply_chain(e, {LTransform::translate(-e2 * e0), LTransform::inversion(),
                             LTransform::homothety(1.0 + e2), LTransform::translate(eps * e0)});
    }
    ImmersionSample out = positions_only(e.grid, e.ambient);
    out.pos.mask = e.pos.mask;
    for (std::size_t p = 0; p < e.grid.size(); ++p) {
      const Vec x = e.pos.values[p] - e0;
      const double l = lorentz(x, x);
      if (std::abs(l) < 1e-12) {
        out.pos.set_mask(p);
        continue;
      }
      out.pos.values[p] = 2.0 * x / l - e0;
    }
    return out;
  }

  if (s.ambient < 2) fail(ErrorCode::DimensionMismatch, "inverse stereographic map needs ambient >= 2");
  const int N = s.ambient - 1;
  ImmersionSample out = positions_only(s.grid, N);
  out.pos.mask = s.pos.mask;
  Vec e0 = Vec::Zero(s.ambient);
  e0[0] = 1.0;
  for (std::size_t p = 0; p < s.grid.size(); ++p) {
    const Vec x = (s.pos.values[p] - eps * e0) / (1.0 + e2);
    const double l = eps < 0 ? lorentz(x, x) : x.squaredNorm();
    if (std::abs(l) < 1e-20) {
      out.pos.set_mask(p);
      continue;
    }
    const Vec y = x / l + e2 * e0;
    out.pos.values[p] = y.tail(N);
  }
  return out;
}

Vec cylinder_point(const ImmersionSample& h, const std::vector<int>& vidx, int eps, std::size_t node,
                   const std::vector<double>& t) {
  const Vec& k = h.pos.values[node];
  const Vec th = normal_combo(h, vidx, node, t);
  if (eps == 0) return k + th;
  const double n2 = eps < 0 ? lorentz(th, th) : th.squaredNorm();
  return k - 2.0 * (eps * k + th) / (eps + n2);
}

ImmersionSample generalized_cylinder(const ImmersionSample& h, const std::vector<int>& vidx, int eps,
                                     const Grid& grid, double quadric_tol) {
  if (eps < -1 || eps > 1) fail(ErrorCode::InvalidArgument, "eps must be -1, 0 or 1");
  if (!h.has_frames()) fail(ErrorCode::InvalidArgument, "cylinder base needs a normal frame");
  if (grid.dims() != static_cast<int>(vidx.size())) fail(ErrorCode::DimensionMismatch, "fiber grid rank mismatch");
  check_indices(h, vidx);
  for (std::size_t p = 0; p < h.grid.size(); ++p) {
    if (h.masked(p) || eps == 0) continue;
    const Vec& k = h.pos.values[p];
    const double d = eps > 0 ? k.squaredNorm() - 1.0 : lorentz(k, k) + 1.0;
    if (std::abs(d) > quadric_tol) fail(ErrorCode::NotOnQuadric, "cylinder base is not on the quadric");
  }
  const Grid g = h.grid.product(grid);
  ImmersionSample out = positions_only(g, h.ambient);
  const std::size_t fiber = grid.size();
  for (std::size_t p = 0; p < g.size(); ++p) {
    const std::size_t src = p / fiber;
    if (h.masked(src)) {
      out.pos.set_mask(p);
      continue;
    }
    const std::vector<double> t = grid.point(p % fiber);
    if (eps != 0) {
      const Vec th = normal_combo(h, vidx, src, t);
      const double n2 = eps < 0 ? lorentz(th, th) : th.squaredNorm();
      if (std::abs(eps + n2) < 1e-12) {
        out.pos.set_mask(p);
        continue;
      }
    }
    out.pos.values[p] = cylinder_point(h, vidx, eps, src, t);
  }
  return out;
}

Grid sphere_angle_grid(int rank, int nodes) {
  if (rank < 1) fail(ErrorCode::InvalidArgument, "sphere rank must be positive");
  if (rank == 1) return Grid({1}, {1.0}, {0.0});
  if (nodes < 2) fail(ErrorCode::InvalidArgument, "too few angle nodes");
  constexpr double pi = std::numbers::pi;
  constexpr double margin = 0.2;
  std::vector<int> counts(rank - 1, nodes);
  std::vector<double> h, o;
  for (int a = 0; a + 1 < rank - 1; ++a) {
    h.push_back((pi - 2.0 * margin) / (nodes - 1));
    o.push_back(margin);
  }
  h.push_back(2.0 * pi / nodes);
  o.push_back(0.0);
  return Grid(counts, h, o);
}

Vec sphere_direction(int rank, const std::vector<double>& angles) {
  if (rank < 1) fail(ErrorCode::InvalidArgument, "sphere rank must be positive");
  Vec x(rank);
  if (rank == 1) {
    x[0] = 1.0;
    return x;
  }
  if (static_cast<int>(angles.size()) != rank - 1) fail(ErrorCode::DimensionMismatch, "angle count mismatch");
  double s = 1.0;
  for (int k = 0; k < rank - 1; ++k) {
    x[k] = s * std::cos(angles[k]);
    s *= std::sin(angles[k]);
  }
  x[rank - 1] = s;
  return x;
}

Vec tube_point(const ImmersionSample& g, const std::vector<int>& nidx, double a, std::size_t node,
               const std::vector<double>& unit_coeffs) {
  return g.pos.values[node] + a * normal_combo(g, nidx, node, unit_coeffs);
}

ImmersionSample generalized_tube(const ImmersionSample& g, const std::vector<int>& nidx, double a,
                                 const Grid& angles) {
  if (a == 0.0) fail(ErrorCode::InvalidArgument, "tube radius must be nonzero");
  if (!g.has_frames()) fail(ErrorCode::InvalidArgument, "tube base needs a normal frame");
  const int rank = static_cast<int>(nidx.size());
  if (rank < 1) fail(ErrorCode::RankZero, "tube needs a nonzero subbundle");
  check_indices(g, nidx);
  if (angles.dims() != std::max(rank - 1, 1)) fail(ErrorCode::DimensionMismatch, "angle grid rank mismatch");

  // A rank-one tube is the + side only and keeps the base grid.
  const Grid G = rank == 1 ? g.grid : g.grid.product(angles);
  ImmersionSample out = positions_only(G, g.ambient);
  const std::size_t fiber = rank == 1 ? 1 : angles.size();
  const int n = g.coords(), q = g.normals();
  std::size_t focal = 0;
  for (std::size_t p = 0; p < G.size(); ++p) {
    const std::size_t src = p / fiber;
    if (g.masked(src)) {
      out.pos.set_mask(p);
      continue;
    }
    const Vec dir = sphere_direction(rank, rank == 1 ? std::vector<double>{} : angles.point(p % fiber));
    const std::vector<double> c(dir.data(), dir.data() + rank);
    out.pos.values[p] = tube_point(g, nidx, a, src, c);
    if (g.principal()) {
      for (int i = 0; i < n; ++i) {
        double fac = 1.0;
        for (int e = 0; e < rank; ++e) fac -= a * c[e] * g.kappa[i * q + nidx[e]].values[src];
        if (std::abs(fac) < 1e-8) {
          out.pos.set_mask(p);
          ++focal;
          break;
        }
      }
    }
  }
  if (focal) spdlog::warn("generalized_tube: {} nodes masked at focal points", focal);
  return out;
}

Vec rotation_point(const ImmersionSample& g, const std::vector<int>& vidx, const Vec& e, std::size_t node,
                   const std::vector<double>& t) {
  const Vec& x = g.pos.values[node];
  const Vec d = e + normal_combo(g, vidx, node, t);
  return x - 2.0 * x.dot(e) * d / d.squaredNorm();
}

ImmersionSample generalized_rotation(const ImmersionSample& g, const std::vector<int>& vidx, const Vec& e,
                                     const Grid& grid) {
  if (e.size() != g.ambient) fail(ErrorCode::DimensionMismatch, "axis vector has wrong size");
  if (std::abs(e.norm() - 1.0) > 1e-12) fail(ErrorCode::InvalidArgument, "axis vector must be a unit vector");
  if (!g.has_frames()) fail(ErrorCode::InvalidArgument, "rotation base needs a normal frame");
  if (grid.dims() != static_cast<int>(vidx.size())) fail(ErrorCode::DimensionMismatch, "fiber grid rank mismatch");
  check_indices(g, vidx);

  const Grid G = g.grid.product(grid);
  ImmersionSample out = positions_only(G, g.ambient);
  const std::size_t fiber = grid.size();
  std::size_t incident = 0;
  for (std::size_t p = 0; p < G.size(); ++p) {
    const std::size_t src = p / fiber;
    const std::vector<double> t = grid.point(p % fiber);
    const Vec d = e + normal_combo(g, vidx, src, t);
    if (g.masked(src) || std::abs(g.pos.values[src].dot(e)) < 1e-12 || d.norm() < 1e-12) {
      if (!g.masked(src)) ++incident;
      out.pos.set_mask(p);
      continue;
    }
    out.pos.values[p] = rotation_point(g, vidx, e, src, t);
  }
  if (incident) spdlog::warn("generalized_rotation: {} nodes masked on the axis", incident);
  return out;
}

ImmersionSample umb_normal_form(char kind, const UmbIngredients& in) {
  const ImmersionSample& g = in.g;
  const Grid G = g.grid.product(in.extra);
  const std::size_t fiber = in.extra.size();
  const int d = in.extra.dims();

  switch (kind) {
    case 'a': {
      ImmersionSample out = positions_only(G, g.ambient + d);
      for (std::size_t p = 0; p < G.size(); ++p) {
        const std::size_t src = p / fiber;
        const auto y = in.extra.point(p % fiber);
        Vec x(g.ambient + d);
        x.head(g.ambient) = g.pos.values[src];
        for (int k = 0; k < d; ++k) x[g.ambient + k] = y[k];
        out.pos.values[p] = x;
        if (g.masked(src)) out.pos.set_mask(p);
      }
      return out;
    }
    case 'b': {
      for (std::size_t p = 0; p < g.grid.size(); ++p)
        if (!g.masked(p) && std::abs(g.pos.values[p].norm() - 1.0) > 1e-9)
          fail(ErrorCode::NotOnQuadric, "cone base must lie on the unit sphere");
      ImmersionSample out = positions_only(G, g.ambient + d - 1);
      for (std::size_t p = 0; p < G.size(); ++p) {
        const std::size_t src = p / fiber;
        const auto y = in.extra.point(p % fiber);
        if (y[0] <= 0.0) fail(ErrorCode::InvalidArgument, "cone radius axis must be positive");
        Vec x(g.ambient + d - 1);
        x.head(g.ambient) = y[0] * g.pos.values[src];
        for (int k = 1; k < d; ++k) x[g.ambient + k - 1] = y[k];
        out.pos.values[p] = x;
        if (g.masked(src)) out.pos.set_mask(p);
      }
      return out;
    }
    case 'c': {
      if (!in.rho) fail(ErrorCode::InvalidArgument, "normal form (c) needs a warping function");
      if (in.rho->grid != g.grid) fail(ErrorCode::GridMismatch, "warping function grid differs");
      const int rank = d + 1;
      ImmersionSample out = positions_only(G, g.ambient + rank);
      for (std::size_t p = 0; p < G.size(); ++p) {
        const std::size_t src = p / fiber;
        const double rho = in.rho->values[src];
        if (rho <= 0.0) fail(ErrorCode::InvalidArgument, "warping function must be positive");
        Vec x(g.ambient + rank);
        x.head(g.ambient) = g.pos.values[src];
        x.tail(rank) = rho * sphere_direction(rank, in.extra.point(p % fiber));
        out.pos.values[p] = x;
        if (g.masked(src)) out.pos.set_mask(p);
      }
      return out;
    }
    default:
      fail(ErrorCode::InvalidArgument, std::string("unknown normal form '") + kind + "'");
  }
}

namespace {

struct ChainState {
  ImmersionSample cur;
  LTrivialSpec spec;
  NormalizationChain out;

  void push(const LTransform& T) {
    cur = apply_ltransform(cur, T);
    spec = pushforward_trivial(spec, T);
    out.steps.push_back(T);
    std::ostringstream os;
    os << T.describe() << " -> a=" << spec.a << " |v|=" << spec.v.norm() << " c=" << spec.c;
    out.log.push_back(os.str());
  }
};

std::vector<double> perp_part(const std::vector<double>& d, const std::vector<int>& nidx) {
  std::vector<double> o = d;
  for (int l : nidx) o[l] = 0.0;
  return o;
}

// Smallest |1 - sum c_r kappa_i^r| over unmasked nodes.
double offset_margin(const ImmersionSample& s, const std::vector<double>& c) {
  const int n = s.coords(), q = s.normals();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < s.grid.size(); ++p) {
    if (s.masked(p)) continue;
    for (int i = 0; i < n; ++i) {
      double fac = 1.0;
      for (int r = 0; r < q; ++r) fac -= c[r] * s.kap(i, r, p);
      best = std::min(best, std::abs(fac));
    }
  }
  return best;
}

double min_radius(const ImmersionSample& s) {
  double r = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < s.grid.size(); ++p)
    if (!s.masked(p)) r = std::min(r, s.pos.values[p].norm());
  return r;
}

double max_radius(const ImmersionSample& s) {
  double r = 0.0;
  for (std::size_t p = 0; p < s.grid.size(); ++p)
    if (!s.masked(p)) r = std::max(r, s.pos.values[p].norm());
  return r;
}

// (a, v, d, c) with a != 0 -> (1, 0, d, c').
void affine_normalize(ChainState& st) {
  st.push(LTransform::homothety(st.spec.a));
  if (st.spec.v.norm() > 0.0) st.push(LTransform::translate(st.spec.v));
}

}  // namespace

NormalizationChain normalize_ltrivial(const ImmersionSample& s, const LTrivialSpec& spec,
                                      const std::vector<int>& nidx) {
  if (!s.principal()) fail(ErrorCode::InvalidArgument, "sample lacks principal frame data");
  if (static_cast<int>(spec.d.size()) != s.normals()) fail(ErrorCode::DimensionMismatch, "d has wrong size");
  check_indices(s, nidx);
  ChainState st{s, spec, {}};
  const double scale = std::max({1.0, std::abs(spec.a), std::abs(spec.c), spec.v.norm()});
  const double tiny = 1e-12 * scale;
  const int N = s.ambient;
  const double R = std::max(1.0, max_radius(s));

  // Candidate translations for escaping the origin or a focal parallel translation.
  std::vector<Vec> qs;
  for (double mult : {2.0, -2.0, 3.0, -3.0})
    for (int j = 0; j < N; ++j) {
      Vec q = Vec::Zero(N);
      q[j] = mult * R;
      qs.push_back(q);
    }
  qs.push_back(Vec::Constant(N, 1.7 * R));

  if (std::abs(st.spec.a) <= tiny) {
    if (std::abs(st.spec.c) <= tiny) {
      if (st.spec.v.norm() <= tiny) fail(ErrorCode::NotSubstantial, "L-trivial data with vanishing phi");
      st.push(LTransform::translate(-st.spec.v));
    }
    bool done = false;
    if (min_radius(st.cur) > 1e-6 * R) {
      st.push(LTransform::inversion());
      done = true;
    }
    for (std::size_t k = 0; !done && k < qs.size(); ++k) {
      ChainState trial = st;
      trial.push(LTransform::translate(qs[k]));
      ++st.out.q_trials;
      if (std::abs(trial.spec.c) <= tiny || min_radius(trial.cur) <= 1e-6 * R) continue;
      trial.push(LTransform::inversion());
      trial.out.q_trials = st.out.q_trials;
      st = std::move(trial);
      done = true;
    }
    if (!done) fail(ErrorCode::ThroughOrigin, "no translation moves the sample off the origin");
  }

  affine_normalize(st);

  auto dperp = perp_part(st.spec.d, nidx);
  double dnorm = 0.0;
  for (double x : dperp) dnorm += x * x;
  if (dnorm > tiny * tiny) {
    constexpr double margin = 1e-6;
    if (offset_margin(st.cur, dperp) > margin) {
      st.push(LTransform::parallel(dperp));
    } else {
      bool ok = false;
      for (std::size_t k = 0; !ok && k < qs.size(); ++k) {
        ++st.out.q_trials;
        try {
          ChainState trial = st;
          trial.push(LTransform::translate(qs[k]));
          if (std::abs(trial.spec.c) <= tiny || min_radius(trial.cur) <= 1e-6 * R) continue;
          trial.push(LTransform::inversion());
          affine_normalize(trial);
          const auto dp = perp_part(trial.spec.d, nidx);
          if (offset_margin(trial.cur, dp) <= margin) continue;
          trial.push(LTransform::parallel(dp));
          trial.out.q_trials = st.out.q_trials;
          st = std::move(trial);
          ok = true;
        } catch (const Error& e) {
          spdlog::debug("normalize_ltrivial: q trial {} rejected: {}", k, e.what());
        }
      }
      if (!ok) fail(ErrorCode::DegenerateOffset, "no conformal change makes the parallel translation regular");
      st.out.log.push_back("q search accepted after " + std::to_string(st.out.q_trials) + " trials");
    }
  }

  const double c2 = st.spec.c;
  if (std::abs(c2) > tiny) st.push(LTransform::homothety(1.0 / std::sqrt(std::abs(c2))));

  LTrivialSpec fin = st.spec;
  const double a = fin.a;
  fin.a = 1.0;
  fin.v /= a;
  for (auto& x : fin.d) x /= a;
  fin.c /= a;
  st.out.final_spec = fin;
  st.out.eps = epsilon_of(fin, nidx);
  for (const auto& line : st.out.log) spdlog::debug("normalize_ltrivial: {}", line);
  return std::move(st.out);
}

}  // namespace dupin
