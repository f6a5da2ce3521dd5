#pragma once

// Shared fixtures and small oracles for the unit, property and acceptance tests.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "dupin/integrable.hpp"
#include "dupin/moebius.hpp"
#include "dupin/net.hpp"
#include "dupin/ribaucour.hpp"
#include "dupin/seeds.hpp"
#include "dupin/verify.hpp"

namespace dupin::test {

inline Grid box(std::vector<int> n, std::vector<double> lo, std::vector<double> hi) {
  std::vector<double> h(n.size());
  for (std::size_t a = 0; a < n.size(); ++a) h[a] = n[a] > 1 ? (hi[a] - lo[a]) / (n[a] - 1) : 1.0;
  return Grid(std::move(n), std::move(h), std::move(lo));
}

inline Grid torus_patch(int n = 21, double h = 1e-2) { return Grid({n, n}, {h, h}, {0.3, 0.5}); }

inline double max_dist(const VectorField& a, const VectorField& b) {
  double m = 0.0;
  for (std::size_t p = 0; p < a.size(); ++p)
    if (!a.masked(p) && !b.masked(p)) m = std::max(m, (a.values[p] - b.values[p]).norm());
  return m;
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double max_dupin(const DiagnosticsReport& d) { return max_abs(d.dupin); }

// L-trivial data whose transform is the inversion in the sphere of radius r centered at P0.
inline LTrivialSpec inversion_spec(const Vec& P0, double r, int normals) {
  return {1.0, -P0, std::vector<double>(normals, 0.0), P0.squaredNorm() - r * r};
}

// L-trivial data whose transform is the parallel translation by sum_r c_r xi_r.
inline LTrivialSpec parallel_spec(const std::vector<double>& c, int ambient) {
  double n2 = 0.0;
  std::vector<double> d(c.size());
  for (std::size_t r = 0; r < c.size(); ++r) {
    d[r] = -c[r];
    n2 += c[r] * c[r];
  }
  return {0.0, Vec::Zero(ambient), d, n2};
}

// Seeded generator of random catalog transforms that keep a sample of the given size away
// from the inversion center and from focal offsets.
class TransformGen {
 public:
  explicit TransformGen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

  Mat orthogonal(int N) {
    Mat A(N, N);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) A(i, j) = uniform(-1, 1);
    Eigen::HouseholderQR<Mat> qr(A);
    return qr.householderQ() * Mat::Identity(N, N);
  }

  Vec vec(int N, double scale) {
    Vec v(N);
    for (int i = 0; i < N; ++i) v[i] = uniform(-scale, scale);
    return v;
  }

  // Catalog transform for s; inversions are preceded by a translation that moves the sample
  // away from the origin. `normals_ok` lists normal indices usable for parallel offsets, which
  // stay below a fifth of the smallest curvature radius.
  std::vector<LTransform> next(const ImmersionSample& s, const std::vector<int>& normals_ok) {
    const int N = s.ambient;
    double R = 0.0;
    Vec c = Vec::Zero(N);
    std::size_t cnt = 0;
    for (std::size_t p = 0; p < s.grid.size(); ++p)
      if (!s.masked(p)) {
        c += s.pos.values[p];
        ++cnt;
      }
    c /= static_cast<double>(std::max<std::size_t>(cnt, 1));
    for (std::size_t p = 0; p < s.grid.size(); ++p)
      if (!s.masked(p)) R = std::max(R, (s.pos.values[p] - c).norm());
    switch (pick(normals_ok.empty() ? 4 : 5)) {
      case 0:
        return {LTransform::translate(vec(N, 2.0))};
      case 1:
        return {LTransform::orthogonal(orthogonal(N))};
      case 2:
        return {LTransform::homothety(uniform(0.5, 2.0) * (pick(2) ? 1.0 : -1.0))};
      case 3: {
        Vec dir = vec(N, 1.0).normalized();
        return {LTransform::translate(-c + (2.5 * R + 0.5) * dir), LTransform::inversion()};
      }
      default: {
        double kmax = 1e-12;
        for (const auto& f : s.kappa)
          for (std::size_t p = 0; p < f.size(); ++p)
            if (!s.masked(p)) kmax = std::max(kmax, std::abs(f.values[p]));
        const double off = std::min(0.2 / kmax, 0.5 * R + 0.1) / std::sqrt(double(normals_ok.size()));
        std::vector<double> k(static_cast<std::size_t>(s.normals()), 0.0);
        for (int r : normals_ok) k[r] = uniform(-off, off);
        return {LTransform::parallel(k)};
      }
    }
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace dupin::test
