#include "dupin/net.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dupin/errors.hpp"

namespace dupin {

int ClassMap::classes() const {
  int k = 0;
  for (int c : cls) k = std::max(k, c + 1);
  return k;
}

std::vector<int> ClassMap::multiplicities() const {
  std::vector<int> m(classes(), 0);
  for (int c : cls) ++m[c];
  return m;
}

std::vector<int> ClassMap::members(int m) const {
  std::vector<int> out;
  for (int i = 0; i < coords(); ++i)
    if (cls[i] == m) out.push_back(i);
  return out;
}

void ClassMap::validate() const {
  if (cls.empty()) fail(ErrorCode::InvalidArgument, "class map is empty");
  int next = 0;
  for (int c : cls) {
    if (c < 0 || c > next) fail(ErrorCode::InvalidArgument, "classes must be numbered by first coordinate");
    if (c == next) ++next;
  }
}

ClassMap ClassMap::identity(int n) {
  ClassMap cm;
  for (int i = 0; i < n; ++i) cm.cls.push_back(i);
  return cm;
}

Triple Triple::zeros(const Grid& g, const ClassMap& cm, int q) {
  cm.validate();
  Triple t;
  t.grid = g;
  t.cmap = cm;
  t.normals = q;
  const int K = cm.classes(), n = cm.coords();
  for (int m = 0; m < K; ++m) t.v.emplace_back(g, 0.0, "v" + std::to_string(m));
  for (int i = 0; i < n; ++i)
    for (int m = 0; m < K; ++m) t.h.emplace_back(g, 0.0, "h" + std::to_string(i) + std::to_string(m));
  for (int m = 0; m < K; ++m)
    for (int r = 0; r < q; ++r) t.V.emplace_back(g, 0.0, "V" + std::to_string(m) + std::to_string(r));
  return t;
}

std::vector<int> ParallelNormalSubbundle::complement(int q) const {
  std::vector<int> out;
  for (int r = 0; r < q; ++r)
    if (std::find(indices.begin(), indices.end(), r) == indices.end()) out.push_back(r);
  return out;
}

double ResidualReport::max() const {
  double m = 0.0;
  for (const auto& r : rows) m = std::max(m, r.max_residual);
  return m;
}

std::string ResidualReport::csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "equation,max_residual,masked_fraction\n";
  for (const auto& r : rows) os << r.id << ',' << r.max_residual << ',' << r.masked_fraction << '\n';
  return os.str();
}

namespace {

int fit_accuracy(int n, int accuracy, int order = 1) {
  int a = accuracy;
  while (a > 2 && n < a + order) a -= 2;
  return a;
}

struct MaxAcc {
  double value = 0.0;
  std::size_t masked = 0, total = 0;
};

void check_grid(const Triple& t) {
  if (t.grid.dims() != t.coords()) fail(ErrorCode::GridMismatch, "grid dimension differs from coordinate count");
  auto same = [&](const ScalarField& f) {
    if (f.grid != t.grid || f.values.size() != t.grid.size())
      fail(ErrorCode::GridMismatch, "triple component on a different grid");
  };
  for (const auto& f : t.v) same(f);
  for (const auto& f : t.h) same(f);
  for (const auto& f : t.V) same(f);
  const std::size_t K = static_cast<std::size_t>(t.classes());
  if (t.v.size() != K || t.h.size() != K * t.coords() || t.V.size() != K * t.normals)
    fail(ErrorCode::InvalidArgument, "triple component count mismatch");
}

}  // namespace

ResidualReport validate_triple(const Triple& t, double tol, int accuracy, int skip_layers) {
  check_grid(t);
  const Grid& g = t.grid;
  const int n = t.coords(), K = t.classes(), q = t.normals;
  const auto& c = t.cmap.cls;

  std::vector<std::vector<ScalarField>> dv(n), dh(n), dV(n);
  for (int j = 0; j < n; ++j) {
    int acc = fit_accuracy(g.count(j), accuracy);
    for (int m = 0; m < K; ++m) dv[j].push_back(fd_jet(t.v[m], j, 1, acc));
    for (const auto& f : t.h) dh[j].push_back(fd_jet(f, j, 1, acc));
    for (const auto& f : t.V) dV[j].push_back(fd_jet(f, j, 1, acc));
  }
  auto H = [&](int i, int m, std::size_t p) { return t.h[static_cast<std::size_t>(i * K + m)].values[p]; };
  auto dH = [&](int along, int i, int m, std::size_t p) {
    return dh[along][static_cast<std::size_t>(i * K + m)].values[p];
  };
  auto VV = [&](int m, int r, std::size_t p) { return t.V[static_cast<std::size_t>(m * q + r)].values[p]; };

  MaxAcc e1, e2, e3, e4;
  const std::size_t total = g.size();
  for (std::size_t p = 0; p < total; ++p) {
    if (g.depth(p) < skip_layers) continue;
    bool masked = t.v[0].masked(p);
    for (int j = 0; j < n && !masked; ++j) masked = dv[j][0].masked(p);
    for (auto* acc : {&e1, &e2, &e3, &e4}) {
      ++acc->total;
      if (masked) ++acc->masked;
    }
    if (masked) continue;
    for (int j = 0; j < n; ++j)
      for (int m = 0; m < K; ++m)
        e1.value = std::max(e1.value, std::abs(dv[j][m].values[p] - H(j, m, p) * t.v[c[j]].values[p]));
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        if (c[i] == c[j]) continue;
        double r = dH(i, i, c[j], p) + dH(j, j, c[i], p);
        for (int l = 0; l < n; ++l)
          if (c[l] != c[i] && c[l] != c[j]) r += H(l, c[i], p) * H(l, c[j], p);
        for (int s = 0; s < q; ++s) r += VV(c[i], s, p) * VV(c[j], s, p);
        e2.value = std::max(e2.value, std::abs(r));
      }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        for (int m = 0; m < K; ++m) {
          if (m == c[i]) continue;
          double r = dH(j, i, m, p) - H(i, c[j], p) * H(j, m, p);
          e3.value = std::max(e3.value, std::abs(r));
        }
      }
    for (int j = 0; j < n; ++j)
      for (int m = 0; m < K; ++m)
        for (int s = 0; s < q; ++s) {
          double r = dV[j][static_cast<std::size_t>(m * q + s)].values[p] - H(j, m, p) * VV(c[j], s, p);
          e4.value = std::max(e4.value, std::abs(r));
        }
  }
  ResidualReport rep;
  auto add = [&](const char* id, const MaxAcc& a) {
    ResidualRow row;
    row.id = id;
    row.max_residual = a.value;
    row.masked_fraction = a.total ? static_cast<double>(a.masked) / static_cast<double>(a.total) : 0.0;
    rep.rows.push_back(row);
    if (!(a.value < tol)) rep.pass = false;
  };
  add("I.i", e1);
  add("I.ii", e2);
  add("I.iii", e3);
  add("I.iv", e4);
  return rep;
}

PrincipalData principal_normals_from_triple(const Triple& t, const ImmersionSample& s) {
  if (s.grid != t.grid) fail(ErrorCode::GridMismatch, "sample and triple grids differ");
  if (s.normals() != t.normals) fail(ErrorCode::DimensionMismatch, "normal frame size differs from triple");
  const int K = t.classes(), q = t.normals;
  PrincipalData pd;
  pd.grid = t.grid;
  pd.assignment = t.cmap.cls;
  pd.multiplicity = t.cmap.multiplicities();
  double vmax = 0.0;
  for (const auto& f : t.v)
    for (double x : f.values) vmax = std::max(vmax, std::abs(x));
  for (int m = 0; m < K; ++m) {
    VectorField eta(t.grid, Vec::Zero(s.ambient), "eta" + std::to_string(m));
    eta.mask = s.pos.mask;
    for (std::size_t p = 0; p < t.grid.size(); ++p) {
      if (s.masked(p)) continue;
      double vm = t.v[m].values[p];
      if (std::abs(vm) <= 1e-12 * vmax) fail(ErrorCode::ZeroLame, "Lame coefficient vanishes");
      Vec e = Vec::Zero(s.ambient);
      for (int r = 0; r < q; ++r) e += (t.Vf(m, r).values[p] / vm) * s.xi[r].values[p];
      eta.values[p] = e;
    }
    pd.eta.push_back(std::move(eta));
  }
  return pd;
}

ParallelNormalSubbundle attach_subbundle(const ImmersionSample& s, const std::vector<int>& indices,
                                         double tol, int accuracy) {
  ParallelNormalSubbundle b;
  b.indices = indices;
  for (int r : indices)
    if (r < 0 || r >= s.normals()) fail(ErrorCode::InvalidArgument, "normal index out of range");
  const int n = s.coords();
  double res = 0.0;
  for (int r : indices) {
    for (int i = 0; i < n; ++i) {
      auto d = fd_jet(s.xi[r], i, 1, fit_accuracy(s.grid.count(i), accuracy));
      for (std::size_t p = 0; p < s.grid.size(); ++p) {
        if (s.grid.depth(p) < 2 || d.masked(p)) continue;
        Vec w = d.values[p];
        // normal part with the xi_r component removed
        Vec nrm = Vec::Zero(s.ambient);
        for (int t = 0; t < s.normals(); ++t) {
          if (t == r) continue;
          nrm += w.dot(s.xi[t].values[p]) * s.xi[t].values[p];
        }
        res = std::max(res, nrm.norm());
      }
    }
  }
  b.residual = res;
  if (!(res < tol)) fail(ErrorCode::NotParallel, "normal fields are not parallel (residual " + std::to_string(res) + ")");
  return b;
}

SampleCheck check_sample(const ImmersionSample& s, int accuracy, int skip_layers) {
  SampleCheck out;
  const int n = s.coords(), q = s.normals();
  const std::size_t total = s.grid.size();
  if (s.has_frames()) {
    for (std::size_t p = 0; p < total; ++p) {
      if (s.masked(p)) continue;
      std::vector<const Vec*> F;
      for (int i = 0; i < n; ++i) F.push_back(&s.X[i].values[p]);
      for (int r = 0; r < q; ++r) F.push_back(&s.xi[r].values[p]);
      for (std::size_t a = 0; a < F.size(); ++a)
        for (std::size_t b = a; b < F.size(); ++b)
          out.gram_defect = std::max(out.gram_defect, std::abs(F[a]->dot(*F[b]) - (a == b ? 1.0 : 0.0)));
    }
  }
  if (!s.X.empty() && !s.lame.empty()) {
    for (int i = 0; i < n; ++i) {
      int acc = fit_accuracy(s.grid.count(i), accuracy, 2);
      auto d = fd_jet(s.pos, i, 1, acc);
      auto dd = fd_jet(s.pos, i, 2, acc);
      for (std::size_t p = 0; p < total; ++p) {
        if (s.grid.depth(p) < skip_layers || d.masked(p)) continue;
        double v = s.lame[i].values[p];
        out.lame_defect = std::max(out.lame_defect, (d.values[p] - v * s.X[i].values[p]).norm());
        if (!s.kappa.empty())
          for (int r = 0; r < q; ++r) {
            double k = dd.values[p].dot(s.xi[r].values[p]) / (v * v);
            out.kappa_defect = std::max(out.kappa_defect, std::abs(k - s.kap(i, r, p)));
          }
      }
    }
  }
  return out;
}

void fill_principal_cache(ImmersionSample& s) {
  if (!s.triple) fail(ErrorCode::InvalidArgument, "sample has no triple");
  const Triple& t = *s.triple;
  const int n = t.coords(), q = t.normals;
  s.lame.clear();
  s.kappa.clear();
  for (int i = 0; i < n; ++i) {
    ScalarField f = t.v[t.cmap.cls[i]];
    f.tag = "lame" + std::to_string(i);
    s.lame.push_back(std::move(f));
  }
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < q; ++r) {
      ScalarField k(t.grid, 0.0, "kappa" + std::to_string(i) + std::to_string(r));
      const auto& V = t.Vf(t.cmap.cls[i], r);
      const auto& v = t.v[t.cmap.cls[i]];
      for (std::size_t p = 0; p < t.grid.size(); ++p)
        k.values[p] = v.values[p] != 0.0 ? V.values[p] / v.values[p] : 0.0;
      s.kappa.push_back(std::move(k));
    }
}

}  // namespace dupin
