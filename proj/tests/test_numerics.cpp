#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dupin/errors.hpp"
#include "dupin/numerics.hpp"
#include "support.hpp"

using namespace dupin;
using dupin::test::box;

namespace {

ScalarField sample1d(int n, double h, double (*f)(double)) {
  ScalarField s(Grid({n}, {h}), 0.0);
  for (int i = 0; i < n; ++i) s.values[i] = f(s.grid.coord(0, i));
  return s;
}

}  // namespace

TEST(Grid, IndexRoundTrip) {
  const Grid g({3, 4, 5}, {0.1, 0.2, 0.3}, {1, 2, 3});
  EXPECT_EQ(g.size(), 60u);
  for (std::size_t p = 0; p < g.size(); ++p) EXPECT_EQ(g.index(g.multi_index(p)), p);
  EXPECT_EQ(g.stride(0), 20u);
  EXPECT_EQ(g.stride(2), 1u);
  EXPECT_DOUBLE_EQ(g.coord(1, 2), 2.4);
}

TEST(Grid, RejectsNonUniformAxes) {
  EXPECT_NO_THROW(Grid::from_coordinates({{0.0, 0.5, 1.0}}));
  try {
    Grid::from_coordinates({{0.0, 0.5, 1.2}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonUniformGrid);
  }
}

TEST(Grid, ProductAndSub) {
  const Grid a({3}, {0.5}, {1.0}), b({4, 2}, {1.0, 2.0}, {0.0, 0.0});
  const Grid p = a.product(b);
  EXPECT_EQ(p.dims(), 3);
  EXPECT_EQ(p.size(), 24u);
  EXPECT_EQ(p.sub({1, 2}), b);
  EXPECT_EQ(Grid({5, 5}, {1, 1}).depth(Grid({5, 5}, {1, 1}).index({1, 3})), 1);
}

TEST(FdJet, LinearHasUnitDerivative) {
  const ScalarField f = sample1d(11, 0.1, [](double u) { return u; });
  const ScalarField d = fd_jet(f, 0, 1);
  for (double x : d.values) EXPECT_NEAR(x, 1.0, 1e-12);
}

TEST(FdJet, QuadraticSecondDerivativeIsExact) {
  const ScalarField f = sample1d(11, 0.1, [](double u) { return u * u; });
  for (int acc : {2, 4, 6, 8}) {
    const ScalarField d = fd_jet(f, 0, 2, acc);
    for (double x : d.values) EXPECT_NEAR(x, 2.0, 1e-9) << "accuracy " << acc;
  }
}

TEST(FdJet, SineFirstDerivative) {
  const ScalarField f = sample1d(200, 0.01, [](double u) { return std::sin(u); });
  const ScalarField d = fd_jet(f, 0, 1);
  double err = 0.0;
  for (int i = 1; i + 1 < 200; ++i) err = std::max(err, std::abs(d.values[i] - std::cos(f.grid.coord(0, i))));
  EXPECT_LT(err, 1e-4);
}

TEST(FdJet, HigherAccuracyConverges) {
  auto err = [](int n, int acc) {
    const double h = 1.0 / (n - 1);
    const ScalarField f = sample1d(n, h, [](double u) { return std::exp(u); });
    const ScalarField d = fd_jet(f, 0, 1, acc);
    double e = 0.0;
    for (int i = 0; i < n; ++i) e = std::max(e, std::abs(d.values[i] - std::exp(f.grid.coord(0, i))));
    return e;
  };
  // Halving h gains about 2^acc.
  for (int acc : {2, 4}) EXPECT_GT(err(21, acc) / err(41, acc), 0.6 * std::pow(2.0, acc));
}

TEST(FdJet, VectorFieldAndAxis) {
  const Grid g = box({9, 7}, {0, 0}, {1, 1});
  VectorField f(g, Vec::Zero(2));
  for (std::size_t p = 0; p < g.size(); ++p) {
    const auto u = g.point(p);
    f.values[p] = Vec::Zero(2);
    f.values[p] << u[0] * u[1], u[1] * u[1];
  }
  const VectorField d = fd_jet(f, 1, 1);
  for (std::size_t p = 0; p < g.size(); ++p) {
    const auto u = g.point(p);
    EXPECT_NEAR(d.values[p][0], u[0], 1e-12);
    EXPECT_NEAR(d.values[p][1], 2 * u[1], 1e-12);
  }
}

TEST(FdJet, Errors) {
  const ScalarField f = sample1d(4, 0.1, [](double u) { return u; });
  try {
    fd_jet(f, 0, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GridTooSmall);
  }
  const ScalarField g = sample1d(11, 0.1, [](double u) { return u; });
  try {
    fd_jet(g, 1, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AxisOutOfRange);
  }
}

TEST(Fornberg, CentralWeights) {
  const auto w = fornberg_weights(0.0, {-1, 0, 1}, 1);
  EXPECT_NEAR(w[0], -0.5, 1e-15);
  EXPECT_NEAR(w[1], 0.0, 1e-15);
  EXPECT_NEAR(w[2], 0.5, 1e-15);
  const auto w2 = fornberg_weights(0.0, {-1, 0, 1}, 2);
  EXPECT_NEAR(w2[0], 1.0, 1e-15);
  EXPECT_NEAR(w2[1], -2.0, 1e-15);
}

TEST(SymEigen, Identity) {
  const Eigenpairs e = sym_eigen(Mat::Identity(3, 3));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(e.values[i], 1.0, 1e-14);
  ASSERT_EQ(e.clusters.size(), 1u);
  EXPECT_EQ(e.clusters[0].size(), 3u);
}

TEST(SymEigen, Diagonal) {
  Mat M = Mat::Zero(2, 2);
  M(0, 0) = -1;
  M(1, 1) = 2;
  const Eigenpairs e = sym_eigen(M);
  EXPECT_NEAR(e.values[0], 2.0, 1e-14);
  EXPECT_NEAR(e.values[1], -1.0, 1e-14);
  EXPECT_NEAR(e.vectors(1, 0), 1.0, 1e-14);
  EXPECT_NEAR(e.vectors(0, 1), 1.0, 1e-14);
}

TEST(SymEigen, RotatedDiagonal) {
  const double t = std::numbers::pi / 6;
  Mat R(2, 2);
  R << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  Mat D = Mat::Zero(2, 2);
  D(0, 0) = 3;
  D(1, 1) = 1;
  const Eigenpairs e = sym_eigen(R * D * R.transpose());
  EXPECT_NEAR(e.values[0], 3.0, 1e-13);
  EXPECT_NEAR(e.values[1], 1.0, 1e-13);
  EXPECT_NEAR(e.vectors(0, 0), std::cos(t), 1e-13);
  EXPECT_NEAR(e.vectors(1, 0), std::sin(t), 1e-13);
}

TEST(SymEigen, RejectsAsymmetric) {
  Mat M(2, 2);
  M << 1, 2, 0, 1;
  try {
    sym_eigen(M);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotSymmetric);
  }
}

TEST(SymEigenProperty, EigenEquationAndOrthonormality) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 6;
    Mat A(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = U(rng);
    const Mat M = A + A.transpose();
    const Eigenpairs e = sym_eigen(M);
    EXPECT_LT((M * e.vectors - e.vectors * e.values.asDiagonal()).norm(), 1e-12);
    EXPECT_LT((e.vectors.transpose() * e.vectors - Mat::Identity(n, n)).norm(), 1e-12);
    for (int i = 0; i + 1 < n; ++i) EXPECT_GE(e.values[i], e.values[i + 1]);
    for (int c = 0; c < n; ++c) {
      int r = 0;
      while (r < n && std::abs(e.vectors(r, c)) <= 1e-12) ++r;
      if (r < n) EXPECT_GT(e.vectors(r, c), 0.0);
    }
  }
}

TEST(SphereFit, UnitSphere) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> N;
  std::vector<Vec> pts;
  for (int i = 0; i < 20; ++i) {
    Vec p(3);
    p << N(rng), N(rng), N(rng);
    pts.push_back(p.normalized());
  }
  const SphereFit f = sphere_fit(pts);
  EXPECT_FALSE(f.flat);
  EXPECT_LT(f.center.norm(), 1e-12);
  EXPECT_NEAR(f.radius, 1.0, 1e-12);
  EXPECT_LT(f.residual, 1e-12);
}

TEST(SphereFit, CollinearIsFlat) {
  std::vector<Vec> pts;
  for (int i = 0; i < 10; ++i) {
    Vec p(3);
    p << i, 2.0 * i, -1.0 * i;
    pts.push_back(p);
  }
  const SphereFit f = sphere_fit(pts);
  EXPECT_TRUE(f.flat);
  EXPECT_EQ(f.hull_dim, 1);
}

TEST(SphereFit, JitteredSphereRecovered) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> N;
  Vec c(3);
  c << 1, 2, 3;
  std::vector<Vec> pts;
  for (int i = 0; i < 40; ++i) {
    Vec d(3);
    d << N(rng), N(rng), N(rng);
    Vec j(3);
    j << N(rng), N(rng), N(rng);
    pts.push_back(c + 0.5 * d.normalized() + 1e-8 * j);
  }
  const SphereFit f = sphere_fit(pts);
  EXPECT_LT((f.center - c).norm(), 1e-6);
  EXPECT_NEAR(f.radius, 0.5, 1e-6);
}

TEST(SphereFit, CoincidentPointsRejected) {
  std::vector<Vec> pts(5, Vec::Ones(3));
  try {
    sphere_fit(pts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateCloud);
  }
}

TEST(SphereFitProperty, FixedPoint) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-1, 1);
  std::normal_distribution<double> N;
  for (int trial = 0; trial < 50; ++trial) {
    const int dim = 2 + trial % 3;
    Vec c(dim);
    for (int i = 0; i < dim; ++i) c[i] = 3 * U(rng);
    const double r = 0.2 + std::abs(U(rng));
    std::vector<Vec> pts;
    for (int i = 0; i < dim + 6; ++i) {
      Vec d(dim);
      for (int k = 0; k < dim; ++k) d[k] = N(rng);
      pts.push_back(c + r * d.normalized());
    }
    const SphereFit a = sphere_fit(pts);
    std::vector<Vec> again;
    for (const Vec& p : pts) again.push_back(a.center + a.radius * (p - a.center).normalized());
    const SphereFit b = sphere_fit(again);
    EXPECT_LT((a.center - b.center).norm(), 1e-10);
    EXPECT_NEAR(a.radius, b.radius, 1e-10);
  }
}

TEST(NumericalRank, GapAndSpectrum) {
  Mat A = Mat::Zero(4, 3);
  A(0, 0) = 5;
  A(1, 1) = 2;
  A(2, 2) = 1e-9;
  const RankInfo r = numerical_rank(A);
  EXPECT_EQ(r.rank, 2);
  EXPECT_EQ(r.spectrum.size(), 3);
  EXPECT_NEAR(r.gap, 2e9, 1e3);
}

TEST(LineInterpolator, ReproducesPolynomials) {
  const LineInterpolator ip(20, 6);
  std::vector<double> v(20);
  for (int i = 0; i < 20; ++i) v[i] = std::pow(i, 5) - 3.0 * i;
  for (double x : {0.0, 0.3, 7.5, 18.9, 19.0}) EXPECT_NEAR(ip.eval(v.data(), 1, x), std::pow(x, 5) - 3 * x, 1e-6);
}
