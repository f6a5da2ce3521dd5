#include "dupin/ribaucour.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "dupin/errors.hpp"
#include "dupin/parallel.hpp"

namespace dupin {

Mat TransformJet::P(std::size_t n) const {
  const Vec& f = F.values[n];
  return Mat::Identity(f.size(), f.size()) - 2.0 * nu.values[n] * f * f.transpose();
}

namespace {

ClassMap class_map_of(const ImmersionSample& s) {
  return s.triple ? s.triple->cmap : ClassMap::identity(s.coords());
}

int fit_accuracy(int n, int accuracy, int order = 1) {
  int a = accuracy;
  while (a > 2 && n < a + order) a -= 2;
  return a;
}

void require_principal(const ImmersionSample& s) {
  if (!s.principal()) fail(ErrorCode::InvalidArgument, "sample lacks principal frame data");
}

}  // namespace

TransformPoint transform_point(const ImmersionSample& s, const RibaucourSolution& w, std::size_t node,
                               const std::vector<int>& nidx, const std::vector<double>& y) {
  const int n = s.coords(), q = s.normals(), N = s.ambient;
  const ClassMap cm = class_map_of(s);
  const auto& c = cm.cls;
  const int K = cm.classes();
  const int S = static_cast<int>(nidx.size());
  if (static_cast<int>(y.size()) != S) fail(ErrorCode::DimensionMismatch, "y has wrong size");
  if (static_cast<int>(w.B.size()) != K) fail(ErrorCode::DimensionMismatch, "B needs one field per class");

  std::vector<char> inN(q, 0);
  for (int l : nidx) inN[l] = 1;
  std::vector<int> comp;
  for (int r = 0; r < q; ++r)
    if (!inN[r]) comp.push_back(r);
  const int qn = static_cast<int>(comp.size());

  const Vec& g = s.pos.values[node];
  std::vector<double> vi(n), vm(K, 0.0), B(K), gam(n), bet(q), bhat(q);
  for (int i = 0; i < n; ++i) vi[i] = s.lame[i].values[node];
  for (int i = n - 1; i >= 0; --i) vm[c[i]] = vi[i];
  for (int m = 0; m < K; ++m) B[m] = w.B[m].values[node];
  const double phi = w.phi.values[node];
  for (int i = 0; i < n; ++i) gam[i] = w.gamma[i].values[node];
  for (int r = 0; r < q; ++r) bet[r] = bhat[r] = w.beta[r].values[node];
  for (int e = 0; e < S; ++e) bhat[nidx[e]] += y[e];
  // On the slice y the tensor is Phi - A_y, so B_m shifts by -sum_l y_l V_m^l.
  auto Vof = [&](int m, int r) {
    if (s.triple) return s.triple->Vf(m, r).values[node];
    const int i = cm.members(m).front();
    return s.kap(i, r, node) * vi[i];
  };
  for (int e = 0; e < S; ++e)
    for (int m = 0; m < K; ++m) B[m] -= y[e] * Vof(m, nidx[e]);

  TransformPoint t;
  t.phi = phi;
  t.beta = Vec::Zero(N);
  Vec bperp = Vec::Zero(N);
  t.F = Vec::Zero(N);
  for (int i = 0; i < n; ++i) t.F += gam[i] * s.X[i].values[node];
  for (int r = 0; r < q; ++r) {
    t.F += bhat[r] * s.xi[r].values[node];
    t.beta += bhat[r] * s.xi[r].values[node];
    if (!inN[r]) bperp += bet[r] * s.xi[r].values[node];
  }
  const double F2 = t.F.squaredNorm();
  t.phiF_zero = !(std::abs(phi) > 1e-12) || !(F2 > 1e-24);
  if (t.phiF_zero) return t;
  const double nu = 1.0 / F2;
  t.nu = nu;
  auto P = [&](const Vec& z) -> Vec { return z - 2.0 * nu * t.F.dot(z) * t.F; };
  t.f = g - 2.0 * phi * nu * t.F;
  t.delta = -t.F / phi;
  t.beta_bar = -bperp / phi;
  t.rho.resize(K);
  t.lambda.resize(K);
  for (int m = 0; m < K; ++m) {
    t.rho[m] = B[m] / vm[m];
    t.lambda[m] = 1.0 - 2.0 * phi * nu * t.rho[m];
  }
  double det = 1.0, lmax = 0.0;
  for (int i = 0; i < n; ++i) {
    det *= t.lambda[c[i]];
    lmax = std::max(lmax, std::abs(t.lambda[c[i]]));
  }
  t.degenerate_D = !(std::abs(det) > 1e-8 * std::pow(lmax, n));

  for (int i = 0; i < n; ++i) t.X.push_back(P(s.X[i].values[node]));
  for (int e = 0; e < S; ++e) t.X.push_back(P(s.xi[nidx[e]].values[node]));
  for (int r : comp) t.xi.push_back(P(s.xi[r].values[node]));
  for (int i = 0; i < n; ++i) t.lame.push_back(t.lambda[c[i]] * vi[i]);
  for (int e = 0; e < S; ++e) t.lame.push_back(-2.0 * phi * nu);
  for (int i = 0; i < n; ++i)
    for (int r : comp) t.kappa.push_back((s.kap(i, r, node) + 2.0 * nu * bet[r] * t.rho[c[i]]) / t.lambda[c[i]]);
  for (int e = 0; e < S; ++e)
    for (int r : comp) t.kappa.push_back(-bet[r] / phi);

  if (s.triple) {
    const Triple& tr = *s.triple;
    const int Kn = S > 0 ? K + 1 : K;
    const int nn = n + S;
    auto H = [&](int i, int m) { return tr.hf(i, m).values[node]; };
    auto V = [&](int m, int r) { return tr.Vf(m, r).values[node]; };
    t.v.resize(Kn);
    for (int m = 0; m < K; ++m) t.v[m] = vm[m] - 2.0 * phi * nu * B[m];
    if (S > 0) t.v[K] = -2.0 * phi * nu;
    t.V.assign(static_cast<std::size_t>(Kn * qn), 0.0);
    for (int m = 0; m < K; ++m)
      for (int k = 0; k < qn; ++k) t.V[m * qn + k] = V(m, comp[k]) + 2.0 * nu * B[m] * bet[comp[k]];
    if (S > 0)
      for (int k = 0; k < qn; ++k) t.V[K * qn + k] = 2.0 * nu * bet[comp[k]];
    // h~_{jm} = d_j v~_m / v~_{j'} from the right-hand sides of the linear system.
    t.h.assign(static_cast<std::size_t>(nn * Kn), 0.0);
    for (int j = 0; j < nn; ++j) {
      double dphi = 0, dnuinv = 0;
      std::vector<double> dv(K, 0.0), dB(K, 0.0);
      int cj;
      if (j < n) {
        cj = c[j];
        dphi = vi[j] * gam[j];
        double dgj = B[cj];
        for (int i = 0; i < n; ++i) {
          if (i == j) continue;
          const double hij = H(i, cj);
          dnuinv += 2.0 * gam[i] * hij * gam[j];
          dgj -= hij * gam[i];
        }
        for (int r = 0; r < q; ++r) {
          dgj += bet[r] * V(cj, r);
          dnuinv += 2.0 * bhat[r] * (-V(cj, r) * gam[j]);
        }
        dnuinv += 2.0 * gam[j] * dgj;
        for (int m = 0; m < K; ++m) {
          dv[m] = H(j, m) * vm[cj];
          dB[m] = H(j, m) * B[cj];
        }
      } else {
        cj = K;
        dnuinv = 2.0 * bhat[nidx[j - n]];
        for (int m = 0; m < K; ++m) dB[m] = -V(m, nidx[j - n]);
      }
      const double dnu = -nu * nu * dnuinv;
      const double vj = t.v[cj];
      for (int m = 0; m < K; ++m) {
        const double d = dv[m] - 2.0 * (dphi * nu * B[m] + phi * dnu * B[m] + phi * nu * dB[m]);
        t.h[j * Kn + m] = d / vj;
      }
      if (S > 0) t.h[j * Kn + K] = -2.0 * (dphi * nu + phi * dnu) / vj;
    }
  }
  return t;
}

ResidualReport combescure_check(const ImmersionSample& s, const RibaucourSolution& w, int accuracy,
                                int skip_layers) {
  require_principal(s);
  if (s.grid != w.grid) fail(ErrorCode::GridMismatch, "sample and solution grids differ");
  const int n = s.coords(), q = s.normals(), N = s.ambient;
  const auto c = class_map_of(s).cls;
  const Grid& g = s.grid;
  VectorField F(g, Vec::Zero(N), "F");
  F.mask = s.pos.mask;
  for (std::size_t p = 0; p < g.size(); ++p) {
    if (w.masked(p)) F.set_mask(p);
    Vec x = Vec::Zero(N);
    for (int i = 0; i < n; ++i) x += w.gamma[i].values[p] * s.X[i].values[p];
    for (int r = 0; r < q; ++r) x += w.beta[r].values[p] * s.xi[r].values[p];
    F.values[p] = x;
  }
  double comb = 0, diag = 0, gn = 0;
  std::size_t masked = 0, total = 0;
  for (int j = 0; j < n; ++j) {
    const int acc = fit_accuracy(g.count(j), accuracy);
    auto dF = fd_jet(F, j, 1, acc);
    std::vector<ScalarField> dbeta;
    for (int r = 0; r < q; ++r) {
      ScalarField b = w.beta[r];
      b.mask = F.mask;
      dbeta.push_back(fd_jet(b, j, 1, acc));
    }
    for (std::size_t p = 0; p < g.size(); ++p) {
      if (g.depth(p) < skip_layers) continue;
      ++total;
      if (dF.masked(p)) {
        ++masked;
        continue;
      }
      const double vj = s.lame[j].values[p];
      const double Bj = w.B[c[j]].values[p];
      comb = std::max(comb, (dF.values[p] - Bj * s.X[j].values[p]).norm());
      diag = std::max(diag, std::abs(dF.values[p].dot(s.X[j].values[p]) / vj - Bj / vj));
      for (int r = 0; r < q; ++r) {
        const double res = w.gamma[j].values[p] * s.kap(j, r, p) + dbeta[r].values[p] / vj;
        gn = std::max(gn, std::abs(res));
      }
    }
  }
  ResidualReport rep;
  const double mf = total ? static_cast<double>(masked) / static_cast<double>(total) : 0.0;
  rep.rows.push_back({"combescure", comb, mf});
  rep.rows.push_back({"phi_diag", diag, mf});
  rep.rows.push_back({"gnorm", gn, mf});
  return rep;
}

namespace {

// Fills jet, sample and triple entries of output node p from a kernel evaluation.
struct Assembler {
  TransformJet& jet;
  ImmersionSample& out;
  std::optional<Triple>* triple;

  void mask(std::size_t p) {
    jet.F.set_mask(p);
    out.pos.set_mask(p);
    if (triple && *triple) {
      for (auto& f : (*triple)->v) f.set_mask(p);
      for (auto& f : (*triple)->h) f.set_mask(p);
      for (auto& f : (*triple)->V) f.set_mask(p);
    }
  }

  void put(std::size_t p, const TransformPoint& t, const std::vector<VectorField>& nperp_src, std::size_t u) {
    jet.phi.values[p] = t.phi;
    jet.nu.values[p] = t.nu;
    jet.F.values[p] = t.F;
    jet.beta.values[p] = t.beta;
    jet.delta.values[p] = t.delta;
    jet.beta_bar.values[p] = t.beta_bar;
    for (std::size_t m = 0; m < t.rho.size(); ++m) {
      jet.rho[m].values[p] = t.rho[m];
      jet.lambda[m].values[p] = t.lambda[m];
    }
    for (std::size_t k = 0; k < nperp_src.size(); ++k) jet.nperp[k].values[p] = nperp_src[k].values[u];
    out.pos.values[p] = t.f;
    for (std::size_t i = 0; i < t.X.size(); ++i) {
      out.X[i].values[p] = t.X[i];
      out.lame[i].values[p] = t.lame[i];
    }
    for (std::size_t r = 0; r < t.xi.size(); ++r) out.xi[r].values[p] = t.xi[r];
    for (std::size_t k = 0; k < t.kappa.size(); ++k) out.kappa[k].values[p] = t.kappa[k];
    if (triple && *triple) {
      Triple& tr = **triple;
      for (std::size_t k = 0; k < t.v.size(); ++k) tr.v[k].values[p] = t.v[k];
      for (std::size_t k = 0; k < t.h.size(); ++k) tr.h[k].values[p] = t.h[k];
      for (std::size_t k = 0; k < t.V.size(); ++k) tr.V[k].values[p] = t.V[k];
    }
  }
};

void init_outputs(const Grid& g, int N, int ncoords, int qn, int K, TransformJet& jet, ImmersionSample& out) {
  jet.grid = g;
  jet.phi = ScalarField(g, 0.0, "phi");
  jet.nu = ScalarField(g, 0.0, "nu");
  jet.F = VectorField(g, Vec::Zero(N), "F");
  jet.beta = VectorField(g, Vec::Zero(N), "beta");
  jet.delta = VectorField(g, Vec::Zero(N), "delta");
  jet.beta_bar = VectorField(g, Vec::Zero(N), "beta_bar");
  for (int m = 0; m < K; ++m) {
    jet.rho.emplace_back(g, 0.0, "rho" + std::to_string(m));
    jet.lambda.emplace_back(g, 0.0, "lambda" + std::to_string(m));
  }
  for (int k = 0; k < qn; ++k) jet.nperp.emplace_back(g, Vec::Zero(N), "nperp" + std::to_string(k));
  out.grid = g;
  out.ambient = N;
  out.pos = VectorField(g, Vec::Zero(N), "g");
  for (int i = 0; i < ncoords; ++i) {
    out.X.emplace_back(g, Vec::Zero(N), "X" + std::to_string(i));
    out.lame.emplace_back(g, 0.0, "lame" + std::to_string(i));
  }
  for (int r = 0; r < qn; ++r) out.xi.emplace_back(g, Vec::Zero(N), "xi" + std::to_string(r));
  for (int k = 0; k < ncoords * qn; ++k) out.kappa.emplace_back(g, 0.0, "kappa" + std::to_string(k));
}

}  // namespace

RibaucourResult ribaucour_transform(const ImmersionSample& s, const RibaucourSolution& w) {
  require_principal(s);
  if (s.grid != w.grid) fail(ErrorCode::GridMismatch, "sample and solution grids differ");
  const Grid& g = s.grid;
  const ClassMap cm = class_map_of(s);
  const int n = s.coords(), q = s.normals(), K = cm.classes();
  RibaucourResult res;
  init_outputs(g, s.ambient, n, q, K, res.jet, res.sample);
  std::optional<Triple> tr;
  if (s.triple) tr = Triple::zeros(g, cm, q);
  Assembler as{res.jet, res.sample, &tr};
  std::vector<std::uint8_t> bad(g.size(), 0);
  parallel_for(g.size(), [&](std::size_t p) {
    if (s.masked(p) || w.masked(p)) {
      bad[p] = 1;
      return;
    }
    TransformPoint t = transform_point(s, w, p, {}, {});
    if (t.phiF_zero || t.degenerate_D) {
      bad[p] = t.phiF_zero ? 2 : 3;
      if (t.phiF_zero) return;
    }
    as.put(p, t, s.xi, p);
  });
  std::size_t nz = 0, nd = 0;
  for (std::size_t p = 0; p < g.size(); ++p)
    if (bad[p]) {
      as.mask(p);
      nz += bad[p] == 2;
      nd += bad[p] == 3;
    }
  if (nz) spdlog::debug("ribaucour_transform: {} nodes with phi F = 0 masked", nz);
  if (nd) spdlog::debug("ribaucour_transform: {} nodes with degenerate D masked", nd);
  if (tr) {
    res.sample.triple = std::move(tr);
  }
  return res;
}

Grid default_ygrid(int s) {
  return Grid(std::vector<int>(s, 21), std::vector<double>(s, 0.3), std::vector<double>(s, -3.0));
}

bool is_canonical(const RibaucourSolution& w, const std::vector<int>& nidx, double tol) {
  std::vector<int> base = w.base.empty() ? std::vector<int>(w.grid.dims(), 0) : w.base;
  const std::size_t p = w.grid.index(base);
  const double phi = w.phi.values[p];
  if (phi != 0.0) {
    if (std::abs(phi - 1.0) > tol) return false;
  } else {
    double b2 = 0;
    for (const auto& b : w.beta) b2 += b.values[p] * b.values[p];
    if (std::abs(std::sqrt(b2) - 1.0) > tol) return false;
  }
  for (int l : nidx)
    if (std::abs(w.beta[l].values[p]) > tol) return false;
  return true;
}

RibaucourSolution canonicalize(const RibaucourSolution& w, const Triple& t, const std::vector<int>& nidx) {
  if (t.grid != w.grid) fail(ErrorCode::GridMismatch, "triple and solution grids differ");
  RibaucourSolution out = w;
  std::vector<int> base = w.base.empty() ? std::vector<int>(w.grid.dims(), 0) : w.base;
  const std::size_t p0 = w.grid.index(base);
  const int K = t.classes();
  for (int l : nidx) {
    if (l < 0 || l >= static_cast<int>(w.beta.size())) fail(ErrorCode::InvalidArgument, "normal index out of range");
    const double c = -w.beta[l].values[p0];
    for (std::size_t p = 0; p < w.grid.size(); ++p) {
      out.beta[l].values[p] += c;
      for (int m = 0; m < K; ++m) out.B[m].values[p] -= c * t.Vf(m, l).values[p];
    }
  }
  double scale = out.phi.values[p0];
  if (scale == 0.0) {
    double b2 = 0;
    for (const auto& b : out.beta) b2 += b.values[p0] * b.values[p0];
    scale = std::sqrt(b2);
    if (scale == 0.0) fail(ErrorCode::PhiFZero, "solution vanishes at the base node");
  }
  auto sc = [&](ScalarField& f) {
    for (auto& x : f.values) x /= scale;
  };
  sc(out.phi);
  for (auto& f : out.gamma) sc(f);
  for (auto& f : out.beta) sc(f);
  for (auto& f : out.B) sc(f);
  out.base = base;
  return out;
}

PrincipalData principal_from_cache(const ImmersionSample& s) {
  require_principal(s);
  const ClassMap cm = class_map_of(s);
  const int K = cm.classes(), q = s.normals();
  PrincipalData pd;
  pd.grid = s.grid;
  pd.assignment = cm.cls;
  pd.multiplicity = cm.multiplicities();
  for (int m = 0; m < K; ++m) {
    const int i = cm.members(m).front();
    VectorField eta(s.grid, Vec::Zero(s.ambient), "eta" + std::to_string(m));
    eta.mask = s.pos.mask;
    for (std::size_t p = 0; p < s.grid.size(); ++p) {
      Vec e = Vec::Zero(s.ambient);
      for (int r = 0; r < q; ++r) e += s.kap(i, r, p) * s.xi[r].values[p];
      eta.values[p] = e;
    }
    pd.eta.push_back(std::move(eta));
  }
  return pd;
}

PrincipalData transform_principal_data(const PrincipalData& in, const TransformJet& jet, int y_count) {
  const Grid& g = jet.grid;
  const int K = in.k();
  if (static_cast<int>(jet.lambda.size()) != K) fail(ErrorCode::DimensionMismatch, "jet has wrong class count");
  const int N = jet.F.values.empty() ? 0 : static_cast<int>(jet.F.values[0].size());
  PrincipalData out;
  out.grid = g;
  out.assignment = in.assignment;
  out.multiplicity = in.multiplicity;
  for (int m = 0; m < K; ++m) {
    out.eta.emplace_back(g, Vec::Zero(N), "eta" + std::to_string(m));
    out.eta.back().mask = jet.F.mask;
  }
  if (y_count > 0) {
    for (int e = 0; e < y_count; ++e) out.assignment.push_back(K);
    out.multiplicity.push_back(y_count);
    out.eta.emplace_back(g, Vec::Zero(N), "eta" + std::to_string(K));
    out.eta.back().mask = jet.F.mask;
  }
  std::vector<std::uint8_t> lam_zero(g.size(), 0);
  parallel_for(g.size(), [&](std::size_t p) {
    if (jet.F.masked(p)) return;
    const std::size_t u = jet.source(p);
    const Vec& F = jet.F.values[p];
    const double nu = jet.nu.values[p], phi = jet.phi.values[p];
    auto P = [&](const Vec& z) -> Vec { return z - 2.0 * nu * F.dot(z) * F; };
    auto perp = [&](const Vec& z) -> Vec {
      Vec o = Vec::Zero(z.size());
      for (const auto& e : jet.nperp) o += e.values[p].dot(z) * e.values[p];
      return o;
    };
    for (int m = 0; m < K; ++m) {
      const double lam = jet.lambda[m].values[p];
      if (!(std::abs(lam) > 1e-12)) {
        lam_zero[p] = 1;
        return;
      }
      const Vec z = in.eta[m].values[u] - 2.0 * phi * nu * jet.rho[m].values[p] * jet.beta_bar.values[p];
      out.eta[m].values[p] = P(perp(z)) / lam;
    }
    if (y_count > 0) out.eta[K].values[p] = P(jet.beta_bar.values[p]);
  });
  for (std::size_t p = 0; p < g.size(); ++p)
    if (lam_zero[p])
      for (auto& e : out.eta) e.set_mask(p);
  return out;
}

NRibaucourResult n_ribaucour_transform(const ImmersionSample& h, const ParallelNormalSubbundle& nsub,
                                       const RibaucourSolution& w, const Grid& ygrid) {
  require_principal(h);
  if (nsub.rank() == 0) fail(ErrorCode::RankZero, "N-Ribaucour transform needs a nontrivial subbundle");
  if (ygrid.dims() != nsub.rank()) fail(ErrorCode::DimensionMismatch, "y-grid rank differs from the subbundle");
  if (h.grid != w.grid) fail(ErrorCode::GridMismatch, "sample and solution grids differ");
  for (int l : nsub.indices)
    if (l < 0 || l >= h.normals()) fail(ErrorCode::InvalidArgument, "normal index out of range");
  if (!is_canonical(w, nsub.indices)) fail(ErrorCode::NotCanonical, "solution is not the canonical representative");

  const ClassMap cm = class_map_of(h);
  const int n = h.coords(), K = cm.classes(), S = nsub.rank();
  NRibaucourResult res;
  res.nindices = nsub.indices;
  res.complement = nsub.complement(h.normals());
  const int qn = static_cast<int>(res.complement.size());
  const Grid g = h.grid.product(ygrid);
  for (int e = 0; e < S; ++e) res.y_axes.push_back(n + e);
  init_outputs(g, h.ambient, n + S, qn, K, res.jet, res.sample);
  res.jet.fiber = ygrid.size();
  ClassMap ncm = cm;
  for (int e = 0; e < S; ++e) ncm.cls.push_back(K);
  std::optional<Triple> tr;
  if (h.triple) tr = Triple::zeros(g, ncm, qn);
  std::vector<VectorField> nperp_src;
  for (int r : res.complement) nperp_src.push_back(h.xi[r]);
  Assembler as{res.jet, res.sample, &tr};
  res.regular.assign(g.size(), 0);
  const std::size_t fiber = ygrid.size();
  parallel_for(g.size(), [&](std::size_t p) {
    const std::size_t u = p / fiber;
    if (h.masked(u) || w.masked(u)) return;
    const auto yp = ygrid.point(p % fiber);
    TransformPoint t = transform_point(h, w, u, nsub.indices, yp);
    if (t.phiF_zero) return;
    as.put(p, t, nperp_src, u);
    if (!t.degenerate_D) res.regular[p] = 1;
  });
  for (std::size_t p = 0; p < g.size(); ++p)
    if (!res.regular[p]) as.mask(p);
  if (tr) res.sample.triple = std::move(tr);
  res.principal = transform_principal_data(principal_from_cache(h), res.jet, S);
  return res;
}

RegularityFlags regularity_predicates(const ImmersionSample& h, const ParallelNormalSubbundle& nsub,
                                      const RibaucourSolution& w, const NRibaucourResult& r, double tol) {
  RegularityFlags out;
  const auto comp = nsub.complement(h.normals());
  out.degenerate = comp.empty();
  const PrincipalData pd = principal_from_cache(h);
  const int K = pd.k();
  double ew = std::numeric_limits<double>::infinity(), reg = ew, gen = ew;
  for (std::size_t p = 0; p < h.grid.size(); ++p) {
    if (h.masked(p) || w.masked(p)) continue;
    const double phi = w.phi.values[p];
    if (phi == 0.0) continue;
    auto perp = [&](const Vec& z) -> Vec {
      Vec o = Vec::Zero(z.size());
      for (int k : comp) o += h.xi[k].values[p].dot(z) * h.xi[k].values[p];
      return o;
    };
    Vec bb = Vec::Zero(h.ambient);
    for (int k : comp) bb -= w.beta[k].values[p] * h.xi[k].values[p] / phi;
    std::vector<Vec> pts{bb};
    for (int m = 0; m < K; ++m) {
      Vec e = perp(pd.eta[m].values[p]);
      ew = std::min(ew, (bb - e).norm());
      pts.push_back(e);
    }
    for (std::size_t a = 0; a < pts.size(); ++a)
      for (std::size_t b = a + 1; b < pts.size(); ++b) reg = std::min(reg, (pts[a] - pts[b]).norm());
  }
  for (std::size_t p = 0; p < r.jet.grid.size(); ++p) {
    if (!r.regular[p]) continue;
    for (int a = 0; a < r.principal.k(); ++a)
      for (int b = a + 1; b < r.principal.k(); ++b)
        gen = std::min(gen, (r.principal.eta[a].values[p] - r.principal.eta[b].values[p]).norm());
  }
  out.ew_gap = ew;
  out.regular_gap = reg;
  out.generic_gap = gen;
  out.Ew_zero = !out.degenerate && ew > tol;
  out.regular = !out.degenerate && reg > tol;
  out.generic = gen > tol;
  return out;
}

Mat predicted_shape_operator(const ImmersionSample& s, const TransformJet& jet, std::size_t node, const Vec& xi) {
  require_principal(s);
  const auto c = class_map_of(s).cls;
  const int n = s.coords(), q = s.normals();
  const std::size_t u = jet.source(node);
  const double nu = jet.nu.values[node];
  const double bx = jet.beta.values[node].dot(xi);
  Mat A = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double a = 0;
    for (int r = 0; r < q; ++r) a += xi.dot(s.xi[r].values[u]) * s.kap(i, r, u);
    A(i, i) = (a + 2.0 * nu * bx * jet.rho[c[i]].values[node]) / jet.lambda[c[i]].values[node];
  }
  return A;
}

CodResidual ribaucour_conditions_check(const ImmersionSample& s, const RibaucourSolution& w, const RibaucourResult& r,
                              std::uint64_t seed) {
  require_principal(s);
  const ClassMap cm = class_map_of(s);
  const auto& c = cm.cls;
  const int n = s.coords(), q = s.normals(), N = s.ambient;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  CodResidual out;
  for (std::size_t p = 0; p < s.grid.size(); ++p) {
    if (r.sample.masked(p)) continue;
    const TransformJet& J = r.jet;
    const Vec& F = J.F.values[p];
    const double nu = J.nu.values[p], phi = J.phi.values[p];
    const Mat P = J.P(p);
    const Vec& f = s.pos.values[p];
    const Vec& ft = r.sample.pos.values[p];
    for (int k = 0; k < 3; ++k) {
      Vec Z(N);
      for (int a = 0; a < N; ++a) Z[a] = nd(rng);
      const Vec PZ = P * Z;
      out.isometry = std::max(out.isometry, std::abs(PZ.norm() - Z.norm()) / Z.norm());
      out.condition_a =
          std::max(out.condition_a, (PZ - Z - J.delta.values[p].dot(Z) * (f - ft)).norm() / Z.norm());
    }
    std::vector<double> v(n), gam(n), bet(q);
    for (int i = 0; i < n; ++i) {
      v[i] = s.lame[i].values[p];
      gam[i] = w.gamma[i].values[p];
    }
    for (int rr = 0; rr < q; ++rr) bet[rr] = w.beta[rr].values[p];
    auto Vc = [&](int cls_idx, int i_member, int rr) {
      return s.triple ? s.triple->Vf(cls_idx, rr).values[p] : s.kap(i_member, rr, p) * v[i_member];
    };
    Mat M(n, n);
    for (int j = 0; j < n; ++j) {
      const int cj = c[j];
      const double Bj = w.B[cj].values[p];
      // d_j gamma_i and d_j beta_r from the linear system
      std::vector<double> dg(n, 0.0), db(q, 0.0);
      double dgj = Bj;
      for (int i = 0; i < n; ++i) {
        if (i == j) continue;
        const double hij = s.triple ? s.triple->hf(i, cj).values[p] : 0.0;
        dg[i] = hij * gam[j];
        dgj -= hij * gam[i];
      }
      for (int rr = 0; rr < q; ++rr) {
        dgj += bet[rr] * Vc(cj, j, rr);
        db[rr] = -Vc(cj, j, rr) * gam[j];
      }
      dg[j] = dgj;
      double dnuinv = 0;
      for (int i = 0; i < n; ++i) dnuinv += 2.0 * gam[i] * dg[i];
      for (int rr = 0; rr < q; ++rr) dnuinv += 2.0 * bet[rr] * db[rr];
      const double dnu = -nu * nu * dnuinv;
      const double dphi = v[j] * gam[j];
      const Vec& Xj = s.X[j].values[p];
      const Vec dft = v[j] * Xj - 2.0 * (dphi * nu * F + phi * dnu * F + phi * nu * Bj * Xj);
      const Vec Pd = P * dft;
      Vec tan = Vec::Zero(N);
      for (int i = 0; i < n; ++i) {
        M(i, j) = s.X[i].values[p].dot(Pd) / v[j];
        tan += s.X[i].values[p].dot(Pd) * s.X[i].values[p];
      }
      out.d_normal = std::max(out.d_normal, (Pd - tan).norm() / std::abs(v[j]));
      // parallelism of P xi_r
      for (int rr = 0; rr < q; ++rr) {
        const Vec& xr = s.xi[rr].values[p];
        const Vec dPx = -Vc(cj, j, rr) * Xj - 2.0 * (dnu * bet[rr] + nu * db[rr]) * F - 2.0 * nu * bet[rr] * Bj * Xj;
        for (int t = 0; t < q; ++t) {
          if (t == rr) continue;
          const Vec Pxt = P * s.xi[t].values[p];
          out.normal_parallel = std::max(out.normal_parallel, std::abs(dPx.dot(Pxt)) / std::abs(v[j]));
        }
        (void)xr;
      }
    }
    out.d_symmetry = std::max(out.d_symmetry, (M - M.transpose()).cwiseAbs().maxCoeff());
    Mat Dl = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) Dl(i, i) = J.lambda[c[i]].values[p];
    out.d_diagonal = std::max(out.d_diagonal, (M - Dl).cwiseAbs().maxCoeff());
  }
  return out;
}

SliceResidual slice_ribaucour_residual(const NRibaucourResult& r, std::size_t y1, std::size_t y2, int accuracy) {
  const Grid& g = r.sample.grid;
  const int S = static_cast<int>(r.y_axes.size());
  const int n = g.dims() - S;
  std::vector<int> uax(n);
  for (int i = 0; i < n; ++i) uax[i] = i;
  const Grid ug = g.sub(uax);
  const std::size_t fiber = r.jet.fiber;
  if (y1 >= fiber || y2 >= fiber) fail(ErrorCode::AxisOutOfRange, "slice index outside the y-grid");
  const int N = r.sample.ambient;
  auto slice = [&](std::size_t y) {
    VectorField f(ug, Vec::Zero(N), "slice");
    for (std::size_t u = 0; u < ug.size(); ++u) {
      const std::size_t p = u * fiber + y;
      f.values[u] = r.sample.pos.values[p];
      if (r.sample.masked(p)) f.set_mask(u);
    }
    return f;
  };
  const VectorField f1 = slice(y1), f2 = slice(y2);
  std::vector<VectorField> d1, d2;
  for (int a = 0; a < n; ++a) {
    const int acc = fit_accuracy(ug.count(a), accuracy);
    d1.push_back(fd_jet(f1, a, 1, acc));
    d2.push_back(fd_jet(f2, a, 1, acc));
  }
  SliceResidual out;
  for (std::size_t u = 0; u < ug.size(); ++u) {
    if (ug.depth(u) < 2 || d1[0].masked(u) || d2[0].masked(u)) continue;
    bool skip = false;
    for (int a = 1; a < n; ++a) skip = skip || d1[a].masked(u) || d2[a].masked(u);
    if (skip) continue;
    const Vec d = f1.values[u] - f2.values[u];
    if (d.squaredNorm() < 1e-24) continue;
    const Mat P = Mat::Identity(N, N) - 2.0 * d * d.transpose() / d.squaredNorm();
    Mat T1(N, n), T2(N, n);
    for (int a = 0; a < n; ++a) {
      T1.col(a) = d1[a].values[u];
      T2.col(a) = d2[a].values[u];
    }
    const Mat PT2 = P * T2;
    Eigen::HouseholderQR<Mat> qr(T1);
    const Mat Q = qr.householderQ() * Mat::Identity(N, n);
    const Mat off = PT2 - Q * (Q.transpose() * PT2);
    out.tangency = std::max(out.tangency, off.norm() / T2.norm());
    const Mat Sm = T1.transpose() * PT2;
    out.symmetry = std::max(out.symmetry, (Sm - Sm.transpose()).norm() / Sm.norm());
  }
  return out;
}

}  // namespace dupin
