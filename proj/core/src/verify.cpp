#include "dupin/verify.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "dupin/errors.hpp"

namespace dupin {

namespace {

int fit_accuracy(int n, int accuracy, int order) {
  int a = accuracy;
  while (a > 2 && n < a + order) a -= 2;
  return a;
}

// Labels of single-linkage clusters of points within tau, numbered by first member.
std::vector<int> link_clusters(const std::vector<Vec>& pts, double tau) {
  const int n = static_cast<int>(pts.size());
  std::vector<int> lab(n, -1);
  int next = 0;
  for (int i = 0; i < n; ++i) {
    if (lab[i] >= 0) continue;
    lab[i] = next;
    std::vector<int> stack{i};
    while (!stack.empty()) {
      const int a = stack.back();
      stack.pop_back();
      for (int b = 0; b < n; ++b)
        if (lab[b] < 0 && (pts[a] - pts[b]).norm() <= tau) {
          lab[b] = next;
          stack.push_back(b);
        }
    }
    ++next;
  }
  return lab;
}

Vec tangent_strip(const Mat& T, const Mat& G, const Vec& x) { return x - T * G.ldlt().solve(T.transpose() * x); }

int rank_of(const Mat& A, double rel, double floor_abs, Vec* spectrum = nullptr) {
  if (A.cols() == 0) return 0;
  RankInfo r = numerical_rank(A, rel);
  if (spectrum) *spectrum = r.spectrum;
  if (r.spectrum.size() == 0 || r.spectrum[0] <= floor_abs) return 0;
  return r.rank;
}

}  // namespace

Mat FundamentalForms::tangent(std::size_t p) const {
  const int n = coords();
  Mat T(ambient, n);
  for (int i = 0; i < n; ++i) T.col(i) = d1[i].values[p];
  return T;
}

Mat FundamentalForms::metric(std::size_t p) const {
  const Mat T = tangent(p);
  return T.transpose() * T;
}

Mat FundamentalForms::normal_basis(std::size_t p) const {
  const Mat T = tangent(p);
  Eigen::HouseholderQR<Mat> qr(T);
  const Mat Q = qr.householderQ() * Mat::Identity(ambient, ambient);
  return Q.rightCols(ambient - coords());
}

Vec FundamentalForms::alpha(std::size_t p, int i, int j) const {
  const Mat T = tangent(p);
  return tangent_strip(T, T.transpose() * T, d2[static_cast<std::size_t>(i * coords() + j)].values[p]);
}

Mat FundamentalForms::shape(std::size_t p, const Vec& xi) const {
  const int n = coords();
  Mat H(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) H(i, j) = d2[static_cast<std::size_t>(i * n + j)].values[p].dot(xi);
  Eigen::LLT<Mat> llt(metric(p));
  const Mat L = llt.matrixL();
  const Mat Li = L.inverse();
  return Li * H * Li.transpose();
}

FundamentalForms numeric_jet(const ImmersionSample& s, int accuracy, int skip_layers) {
  const Grid& g = s.grid;
  const int n = s.coords();
  FundamentalForms J;
  J.grid = g;
  J.ambient = s.ambient;
  if (s.ambient <= n) fail(ErrorCode::DimensionMismatch, "ambient dimension must exceed the grid dimension");
  for (int i = 0; i < n; ++i) J.d1.push_back(fd_jet(s.pos, i, 1, fit_accuracy(g.count(i), accuracy, 1)));
  J.d2.resize(static_cast<std::size_t>(n * n));
  for (int i = 0; i < n; ++i) {
    J.d2[i * n + i] = fd_jet(s.pos, i, 2, fit_accuracy(g.count(i), accuracy, 2));
    for (int j = i + 1; j < n; ++j) {
      J.d2[i * n + j] = fd_jet(J.d1[i], j, 1, fit_accuracy(g.count(j), accuracy, 1));
      J.d2[j * n + i] = J.d2[i * n + j];
    }
  }
  const std::size_t P = g.size();
  J.defined.assign(P, 0);
  J.valid.assign(P, 0);
  std::size_t nvalid = 0;
  for (std::size_t p = 0; p < P; ++p) {
    bool ok = !s.masked(p);
    for (const auto& f : J.d1) ok = ok && !f.masked(p);
    for (const auto& f : J.d2) ok = ok && !f.masked(p);
    if (ok) {
      const Mat G = J.metric(p);
      ok = Eigen::LLT<Mat>(G).info() == Eigen::Success && G.determinant() > 1e-300;
    }
    J.defined[p] = ok;
    J.valid[p] = ok && g.depth(p) >= skip_layers;
    nvalid += J.valid[p];
  }
  if (!nvalid) fail(ErrorCode::TooFewNodes, "no unmasked interior nodes");
  return J;
}

PrincipalExtraction extract_principal_normals(const ImmersionSample& s, const VerifyOptions& opt) {
  PrincipalExtraction ex;
  ex.jet = numeric_jet(s, opt.accuracy, opt.skip_layers);
  const FundamentalForms& J = ex.jet;
  const Grid& g = s.grid;
  const std::size_t P = g.size();
  const int n = s.coords(), N = s.ambient, q = N - n;

  // Shape operators on the QR normal basis.
  std::vector<std::vector<Mat>> S(P);
  std::vector<Mat> nb(P);
  double Smax = 0.0;
  for (std::size_t p = 0; p < P; ++p) {
    if (!J.defined[p]) continue;
    nb[p] = J.normal_basis(p);
    for (int a = 0; a < q; ++a) {
      S[p].push_back(J.shape(p, nb[p].col(a)));
      if (J.valid[p]) Smax = std::max(Smax, S[p].back().cwiseAbs().maxCoeff());
    }
  }
  ex.tau = opt.cluster_rel * (Smax > 0 ? Smax : 1.0);

  // Principal coordinates: orthogonal and conjugate coordinate net.
  bool coord = true;
  for (std::size_t p = 0; p < P && coord; ++p) {
    if (!J.valid[p]) continue;
    const Mat G = J.metric(p);
    for (int i = 0; i < n && coord; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double d = std::sqrt(G(i, i) * G(j, j));
        const double a = J.alpha(p, i, j).norm() / d;
        if (std::abs(G(i, j)) / d > opt.principal_coord_tol ||
            a > opt.principal_coord_tol * std::max(Smax, 1e-300)) {
          coord = false;
          break;
        }
      }
  }
  ex.coordinate_net = coord;

  // Per node: class label of each direction, eta per direction, directions as coefficients.
  std::vector<std::vector<int>> labels(P);
  std::vector<std::vector<Vec>> etas(P);
  std::vector<Mat> dirs(P);
  const Vec weights = [&] {
    Vec w(q);
    for (int a = 0; a < q; ++a) w[a] = 1.0 + 0.37 * a + 0.011 * a * a;
    return w;
  }();
  for (std::size_t p = 0; p < P; ++p) {
    if (!J.defined[p]) continue;
    const Mat G = J.metric(p);
    std::vector<Vec> e(n);
    Mat D(n, n);
    if (coord) {
      for (int i = 0; i < n; ++i) {
        e[i] = J.alpha(p, i, i) / G(i, i);
        D.col(i) = Vec::Unit(n, i) / std::sqrt(G(i, i));
      }
    } else {
      Mat M = Mat::Zero(n, n);
      for (int a = 0; a < q; ++a) M += weights[a] * S[p][a];
      Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (M + M.transpose()));
      Eigen::LLT<Mat> llt(G);
      const Mat Lt = Mat(llt.matrixL()).transpose();
      for (int k = 0; k < n; ++k) {
        const Vec ev = es.eigenvectors().col(n - 1 - k);
        Vec eta = Vec::Zero(N);
        for (int a = 0; a < q; ++a) eta += ev.dot(S[p][a] * ev) * nb[p].col(a);
        e[k] = eta;
        D.col(k) = Lt.triangularView<Eigen::Upper>().solve(ev);
      }
    }
    labels[p] = link_clusters(e, ex.tau);
    etas[p] = std::move(e);
    dirs[p] = std::move(D);
  }

  // Dominant labeling over valid nodes.
  std::map<std::vector<int>, std::size_t> votes;
  for (std::size_t p = 0; p < P; ++p)
    if (J.valid[p]) ++votes[labels[p]];
  std::vector<int> best;
  std::size_t bestc = 0;
  for (const auto& [lab, c] : votes)
    if (c > bestc) {
      best = lab;
      bestc = c;
    }
  // Without a coordinate net only the class sizes in order must agree.
  auto sizes = [](const std::vector<int>& lab) {
    std::vector<int> m;
    for (int l : lab) {
      if (l >= static_cast<int>(m.size())) m.resize(l + 1, 0);
      ++m[l];
    }
    return m;
  };
  const std::vector<int> best_sizes = sizes(best);
  const int K = static_cast<int>(best_sizes.size());

  PrincipalData& pd = ex.pd;
  pd.grid = g;
  pd.multiplicity = best_sizes;
  if (coord) pd.assignment = best;
  for (int m = 0; m < K; ++m) pd.eta.emplace_back(g, Vec::Zero(N), "eta" + std::to_string(m));
  ex.directions.assign(P, {});
  for (std::size_t p = 0; p < P; ++p) {
    bool ok = J.defined[p] && (coord ? labels[p] == best : sizes(labels[p]) == best_sizes);
    if (!ok) {
      if (J.valid[p]) ++ex.improper_nodes;
      for (auto& f : pd.eta) f.set_mask(p);
      continue;
    }
    std::vector<int> cnt(K, 0);
    std::vector<Vec> sum(K, Vec::Zero(N));
    std::vector<std::vector<int>> cols(K);
    for (int d = 0; d < n; ++d) {
      sum[labels[p][d]] += etas[p][d];
      cols[labels[p][d]].push_back(d);
    }
    ex.directions[p].resize(K);
    for (int m = 0; m < K; ++m) {
      pd.eta[m].values[p] = sum[m] / static_cast<double>(cols[m].size());
      Mat E(n, static_cast<int>(cols[m].size()));
      for (std::size_t c = 0; c < cols[m].size(); ++c) E.col(static_cast<int>(c)) = dirs[p].col(cols[m][c]);
      ex.directions[p][m] = E;
      if (J.valid[p]) ex.scale = std::max(ex.scale, pd.eta[m].values[p].norm());
    }
  }
  ex.proper = ex.improper_nodes == 0;
  if (!ex.proper)
    spdlog::info("extract_principal_normals: {} nodes disagree with k = {} and are masked", ex.improper_nodes, K);

  // Flat normal bundle: shape operators commute.
  const double s2 = ex.scale > 0 ? ex.scale * ex.scale : 1.0;
  for (std::size_t p = 0; p < P; ++p) {
    if (!J.valid[p]) continue;
    for (int a = 0; a < q; ++a)
      for (int b = a + 1; b < q; ++b) {
        const Mat C = S[p][a] * S[p][b] - S[p][b] * S[p][a];
        ex.flat_normal = std::max(ex.flat_normal, C.norm() / s2);
      }
  }
  return ex;
}

std::vector<double> dupin_residual(const PrincipalExtraction& ex, const VerifyOptions& opt) {
  const FundamentalForms& J = ex.jet;
  const Grid& g = J.grid;
  const int n = J.coords();
  const double s2 = ex.scale > 0 ? ex.scale * ex.scale : 1.0;
  std::vector<double> out;
  for (int m = 0; m < ex.pd.k(); ++m) {
    std::vector<VectorField> D;
    for (int i = 0; i < n; ++i)
      D.push_back(fd_jet(ex.pd.eta[m], i, 1, fit_accuracy(g.count(i), opt.accuracy, 1)));
    double worst = 0.0;
    for (std::size_t p = 0; p < g.size(); ++p) {
      if (!J.valid[p] || ex.pd.eta[m].masked(p)) continue;
      bool skip = false;
      for (const auto& d : D) skip = skip || d.masked(p);
      if (skip) continue;
      const Mat T = J.tangent(p);
      const Mat G = T.transpose() * T;
      const Mat& E = ex.directions[p][m];
      for (int c = 0; c < E.cols(); ++c) {
        Vec v = Vec::Zero(J.ambient);
        for (int i = 0; i < n; ++i) v += E(i, c) * D[i].values[p];
        worst = std::max(worst, tangent_strip(T, G, v).norm());
      }
    }
    out.push_back(worst / s2);
  }
  return out;
}

ConullityVerdict conullity_integrability(const PrincipalExtraction& ex, int cls, const VerifyOptions& opt) {
  const FundamentalForms& J = ex.jet;
  const Grid& g = J.grid;
  const int n = J.coords(), K = ex.pd.k();
  if (cls < 0 || cls >= K) fail(ErrorCode::InvalidArgument, "class index out of range");
  ConullityVerdict v;
  const std::size_t P = g.size();

  // Sufficient condition: eta_i - eta_l and eta_j - eta_l independent.
  if (K >= 3) {
    v.sufficient = true;
    for (std::size_t p = 0; p < P && v.sufficient; ++p) {
      if (!J.valid[p] || ex.pd.eta[0].masked(p)) continue;
      for (int l = 0; l < K && v.sufficient; ++l) {
        if (l == cls) continue;
        for (int i = 0; i < K; ++i) {
          if (i == cls || i == l) continue;
          Mat A(J.ambient, 2);
          A.col(0) = ex.pd.eta[i].values[p] - ex.pd.eta[l].values[p];
          A.col(1) = ex.pd.eta[cls].values[p] - ex.pd.eta[l].values[p];
          if (rank_of(A, 1e-6, 1e-12 * std::max(ex.scale, 1e-300)) < 2) {
            v.sufficient = false;
            break;
          }
        }
      }
    }
  }

  if (n - ex.pd.multiplicity[cls] < 2) {
    v.trivial = true;
    return v;
  }

  // Projector onto E_cls in coefficient space, Pi = E E^T G.
  std::vector<ScalarField> Pi(static_cast<std::size_t>(n * n), ScalarField(g, 0.0));
  for (std::size_t p = 0; p < P; ++p) {
    if (!J.defined[p] || ex.directions[p].empty()) {
      for (auto& f : Pi) f.set_mask(p);
      continue;
    }
    const Mat& E = ex.directions[p][cls];
    const Mat M = E * E.transpose() * J.metric(p);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) Pi[a * n + b].values[p] = M(a, b);
  }
  // dPi[i][a * n + b] = d_i Pi^a_b
  std::vector<std::vector<ScalarField>> dPi(n);
  for (int i = 0; i < n; ++i)
    for (const auto& f : Pi) dPi[i].push_back(fd_jet(f, i, 1, fit_accuracy(g.count(i), opt.accuracy, 1)));

  const double scale = ex.scale > 0 ? ex.scale : 1.0;
  for (std::size_t p = 0; p < P; ++p) {
    if (!J.valid[p] || ex.directions[p].empty()) continue;
    bool skip = false;
    for (const auto& row : dPi)
      for (const auto& f : row) skip = skip || f.masked(p);
    if (skip) continue;
    const Mat G = J.metric(p);
    Mat M(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) M(a, b) = Pi[a * n + b].values[p];
    const Mat Y = Mat::Identity(n, n) - M;  // column a: Y_a
    auto gnorm = [&G](const Vec& x) { return std::sqrt(std::max(0.0, x.dot(G * x))); };
    for (int a = 0; a < n; ++a) {
      const double na = gnorm(Y.col(a));
      if (na < 1e-8 * std::sqrt(G(a, a))) continue;
      for (int b = a + 1; b < n; ++b) {
        const double nbv = gnorm(Y.col(b));
        if (nbv < 1e-8 * std::sqrt(G(b, b))) continue;
        // [Y_a, Y_b]^k = Y_a^i d_i Y_b^k - Y_b^i d_i Y_a^k with d_i Y_c^k = -d_i Pi^k_c.
        Vec br = Vec::Zero(n);
        for (int k = 0; k < n; ++k)
          for (int i = 0; i < n; ++i)
            br[k] += -Y(i, a) * dPi[i][k * n + b].values[p] + Y(i, b) * dPi[i][k * n + a].values[p];
        v.residual = std::max(v.residual, gnorm(M * br) / (na * nbv * scale));
      }
    }
  }
  v.integrable = v.residual < opt.integrability_tol;
  return v;
}

SphereLeafReport sphere_leaf_check(const NRibaucourResult& r, double tol) {
  const ImmersionSample& s = r.sample;
  const std::size_t fiber = r.jet.fiber;
  if (fiber < 5) fail(ErrorCode::TooFewNodes, "sphere leaf check needs at least 5 y-nodes");
  const std::size_t U = s.grid.size() / fiber;
  const bool have_eta = r.principal.k() > 0;
  const VectorField* eta = have_eta ? &r.principal.eta.back() : nullptr;

  SphereLeafReport out;
  out.flat_nodes.assign(U, 0);
  double fit_worst = 0.0, const_worst = 0.0;
  std::size_t skipped = 0;
  for (std::size_t u = 0; u < U; ++u) {
    std::vector<Vec> pts;
    std::vector<Vec> centers;
    double rad = 0.0;
    for (std::size_t y = 0; y < fiber; ++y) {
      const std::size_t p = u * fiber + y;
      if (s.masked(p)) continue;
      pts.push_back(s.pos.values[p]);
      if (eta && !eta->masked(p)) {
        const Vec& e = eta->values[p];
        const double e2 = e.squaredNorm();
        if (e2 > 1e-24) {
          centers.push_back(s.pos.values[p] + e / e2);
          rad = std::max(rad, 1.0 / std::sqrt(e2));
        }
      }
    }
    if (pts.size() < 5) {
      ++skipped;
      continue;
    }
    SphereFit fit;
    try {
      fit = sphere_fit(pts);
    } catch (const Error&) {
      ++skipped;
      continue;
    }
    Vec mean = Vec::Zero(pts[0].size());
    for (const auto& x : pts) mean += x;
    mean /= static_cast<double>(pts.size());
    double extent = 0.0;
    for (const auto& x : pts) extent = std::max(extent, (x - mean).norm());
    fit_worst = std::max(fit_worst, fit.residual / std::max(extent, 1e-300));
    if (fit.flat) {
      out.flat_nodes[u] = 1;
      ++out.flats;
      continue;
    }
    if (centers.size() >= 2) {
      Vec c = Vec::Zero(centers[0].size());
      for (const auto& x : centers) c += x;
      c /= static_cast<double>(centers.size());
      double dev = 0.0;
      for (const auto& x : centers) dev = std::max(dev, (x - c).norm());
      const_worst = std::max(const_worst, dev / std::max(rad, 1e-300));
    }
  }
  const double mf = static_cast<double>(skipped) / static_cast<double>(std::max<std::size_t>(U, 1));
  out.report.rows.push_back({"sphere_fit", fit_worst, mf});
  out.report.rows.push_back({"center_const", const_worst, mf});
  out.report.pass = fit_worst < tol && const_worst < std::max(tol, 1e-5);
  return out;
}

namespace {

// Leaves of a coordinate class: nodes differing only along the class axes.
void leaf_residuals(const ImmersionSample& s, const PrincipalExtraction& ex, int m, double& sphere,
                    double& center) {
  const Grid& g = s.grid;
  const int n = s.coords();
  std::vector<int> axes;
  for (int i = 0; i < n; ++i)
    if (ex.pd.assignment[i] == m) axes.push_back(i);
  const Grid leaf = g.sub(axes);
  sphere = center = 0.0;
  for (std::size_t p = 0; p < g.size(); ++p) {
    auto idx = g.multi_index(p);
    bool root = true;
    for (int a : axes) root = root && idx[a] == 0;
    if (!root) continue;
    std::vector<Vec> pts, cs;
    double rad = 0.0;
    for (std::size_t l = 0; l < leaf.size(); ++l) {
      auto li = leaf.multi_index(l);
      for (std::size_t c = 0; c < axes.size(); ++c) idx[axes[c]] = li[c];
      const std::size_t node = g.index(idx);
      if (s.masked(node)) continue;
      pts.push_back(s.pos.values[node]);
      if (!ex.jet.valid[node] || ex.pd.eta[m].masked(node)) continue;
      const Vec& e = ex.pd.eta[m].values[node];
      const double e2 = e.squaredNorm();
      if (e2 > 1e-12 * ex.scale * ex.scale && e2 > 0) {
        cs.push_back(s.pos.values[node] + e / e2);
        rad = std::max(rad, 1.0 / std::sqrt(e2));
      }
    }
    if (pts.size() < 5) continue;
    try {
      const SphereFit fit = sphere_fit(pts);
      Vec mean = Vec::Zero(pts[0].size());
      for (const auto& x : pts) mean += x;
      mean /= static_cast<double>(pts.size());
      double extent = 0.0;
      for (const auto& x : pts) extent = std::max(extent, (x - mean).norm());
      sphere = std::max(sphere, fit.residual / std::max(extent, 1e-300));
    } catch (const Error&) {
    }
    if (cs.size() >= 2) {
      Vec c = Vec::Zero(cs[0].size());
      for (const auto& x : cs) c += x;
      c /= static_cast<double>(cs.size());
      double dev = 0.0;
      for (const auto& x : cs) dev = std::max(dev, (x - c).norm());
      center = std::max(center, dev / std::max(rad, 1e-300));
    }
  }
}

}  // namespace

DiagnosticsReport sf_report(const PrincipalExtraction& ex, const VerifyOptions& opt) {
  const FundamentalForms& J = ex.jet;
  const Grid& g = J.grid;
  DiagnosticsReport d;
  const int K = ex.pd.k();
  d.k = K;
  d.multiplicities = ex.pd.multiplicity;
  d.proper = ex.proper;
  d.flat_normal = ex.flat_normal;
  d.dupin = dupin_residual(ex, opt);
  d.holonomic = true;
  for (int m = 0; m < K; ++m) {
    d.conullity.push_back(conullity_integrability(ex, m, opt));
    d.holonomic = d.holonomic && d.conullity.back().integrable;
  }

  std::map<int, std::size_t> n1votes, sfvotes;
  std::vector<int> n1(g.size(), -1), sf(g.size(), -1);
  std::size_t valid = 0;
  bool first = true;
  const double floor_abs = opt.rank_rel * std::max(ex.scale, 1e-300);
  for (std::size_t p = 0; p < g.size(); ++p) {
    if (!J.valid[p] || ex.pd.eta.empty() || ex.pd.eta[0].masked(p)) continue;
    ++valid;
    Mat A(J.ambient, K), B(J.ambient, std::max(K - 1, 0));
    for (int m = 0; m < K; ++m) A.col(m) = ex.pd.eta[m].values[p];
    for (int m = 1; m < K; ++m) B.col(m - 1) = ex.pd.eta[m].values[p] - ex.pd.eta[0].values[p];
    Vec sa, sb;
    n1[p] = rank_of(A, opt.rank_rel, floor_abs, &sa);
    sf[p] = rank_of(B, opt.rank_rel, floor_abs, &sb);
    if (first) {
      d.N1_spectrum = sa;
      d.Sf_spectrum = sb;
      first = false;
    }
    ++n1votes[n1[p]];
    ++sfvotes[sf[p]];
  }
  auto mode = [](const std::map<int, std::size_t>& v) {
    int best = 0;
    std::size_t c = 0;
    for (const auto& [k, n] : v)
      if (n > c) {
        best = k;
        c = n;
      }
    return best;
  };
  d.dim_N1 = mode(n1votes);
  d.dim_Sf = mode(sfvotes);
  for (std::size_t p = 0; p < g.size(); ++p)
    if (n1[p] >= 0 && (n1[p] != d.dim_N1 || sf[p] != d.dim_Sf)) ++d.transition_nodes;
  d.c = d.dim_Sf;
  d.masked_fraction = 1.0 - static_cast<double>(valid) / static_cast<double>(g.size());
  d.bound_ok = d.c <= std::max(K - 1, 0);
  d.holonomic_consistent = K < 2 || d.c != K - 1 || d.holonomic;
  d.weak_bound = 2.0 * K / 3.0 - 1.0;
  return d;
}

DiagnosticsReport diagnose(const ImmersionSample& s, const VerifyOptions& opt) {
  PrincipalExtraction ex = extract_principal_normals(s, opt);
  DiagnosticsReport d = sf_report(ex, opt);
  if (ex.coordinate_net) {
    for (int m = 0; m < ex.pd.k(); ++m) {
      double a = 0, b = 0;
      leaf_residuals(s, ex, m, a, b);
      d.leaf_sphere.push_back(a);
      d.leaf_center.push_back(b);
    }
  }
  return d;
}

std::string DiagnosticsReport::csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "check,value\n";
  os << "k," << k << "\n";
  for (std::size_t m = 0; m < multiplicities.size(); ++m) os << "multiplicity_" << m << "," << multiplicities[m] << "\n";
  os << "proper," << proper << "\n";
  for (std::size_t m = 0; m < dupin.size(); ++m) os << "dupin_" << m << "," << dupin[m] << "\n";
  os << "flat_normal," << flat_normal << "\n";
  for (std::size_t m = 0; m < conullity.size(); ++m) {
    os << "conullity_integrable_" << m << "," << conullity[m].integrable << "\n";
    os << "conullity_residual_" << m << "," << conullity[m].residual << "\n";
  }
  for (std::size_t m = 0; m < leaf_sphere.size(); ++m) os << "leaf_sphere_" << m << "," << leaf_sphere[m] << "\n";
  for (std::size_t m = 0; m < leaf_center.size(); ++m) os << "leaf_center_" << m << "," << leaf_center[m] << "\n";
  os << "dim_N1," << dim_N1 << "\n";
  os << "dim_Sf," << dim_Sf << "\n";
  os << "c," << c << "\n";
  os << "holonomic," << holonomic << "\n";
  os << "masked_fraction," << masked_fraction << "\n";
  os << "transition_nodes," << transition_nodes << "\n";
  os << "bound_ok," << bound_ok << "\n";
  os << "holonomic_consistent," << holonomic_consistent << "\n";
  os << "weak_bound," << weak_bound << "\n";
  return os.str();
}

DupinTensorSpace dupin_tensor_space(const Triple& t, const SweepOptions& opt, std::uint64_t seed) {
  const int K = t.classes();
  const std::size_t P = t.grid.size();
  std::vector<std::vector<double>> seeds;
  for (int m = 0; m < K; ++m) {
    std::vector<double> e(K, 0.0);
    e[m] = 1.0;
    seeds.push_back(e);
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<double> extra(K);
  for (auto& x : extra) x = U(rng);
  seeds.push_back(extra);

  SweepOptions o = opt;
  o.alternate = false;
  std::vector<std::vector<ScalarField>> sols;
  std::vector<std::uint8_t> bad(P, 0);
  for (const auto& s : seeds) {
    BSolve b = solve_B(t, s, o);
    for (const auto& f : b.B)
      for (std::size_t p = 0; p < P; ++p) bad[p] |= f.masked(p);
    sols.push_back(std::move(b.B));
  }
  std::size_t rows = 0;
  for (auto b : bad) rows += b ? 0 : 1;
  Mat A(static_cast<Eigen::Index>(rows * K), K + 1);
  for (int c = 0; c <= K; ++c) {
    Eigen::Index r = 0;
    for (std::size_t p = 0; p < P; ++p) {
      if (bad[p]) continue;
      for (int m = 0; m < K; ++m) A(r++, c) = sols[c][m].values[p];
    }
  }
  DupinTensorSpace out;
  out.rank = numerical_rank(A, 1e-6);
  out.dimension = out.rank.rank;
  const Mat base = A.leftCols(K);
  const Vec x = base.colPivHouseholderQr().solve(A.col(K));
  out.span_residual = (base * x - A.col(K)).norm() / std::max(A.col(K).norm(), 1e-300);
  sols.pop_back();
  out.basis = std::move(sols);
  if (out.dimension < K) fail(ErrorCode::RankDeficient, "Dupin tensor solutions are rank deficient");
  return out;
}

}  // namespace dupin
