#include <gtest/gtest.h>

#include <cmath>

#include "dupin/errors.hpp"
#include "support.hpp"

using namespace dupin;
using namespace dupin::test;

namespace {

double rel_dist(const std::vector<ScalarField>& a, const std::vector<ScalarField>& b) {
  double num = 0.0, den = 1e-300;
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t p = 0; p < a[k].size(); ++p) {
      if (a[k].masked(p)) continue;
      num = std::max(num, std::abs(a[k].values[p] - b[k].values[p]));
      den = std::max(den, std::abs(b[k].values[p]));
    }
  return num / den;
}

}  // namespace

TEST(IntegrateTriple, ConstantData) {
  const Grid g = box({9, 9}, {0, 0}, {1, 1});
  Triple t = Triple::zeros(g, ClassMap::identity(2), 1);
  for (auto& v : t.v) v.values.assign(g.size(), 1.0);
  t.Vf(0, 0).values.assign(g.size(), 0.7);
  const TripleSolve s = integrate_triple(boundary_from(t));
  EXPECT_EQ(rel_dist(s.triple.v, t.v), 0.0);
  EXPECT_EQ(rel_dist(s.triple.V, t.V), 0.0);
  EXPECT_LT(s.report.max(), 1e-14);
}

TEST(IntegrateTriple, TorusFromBoundary) {
  const Triple t = torus_triple(2.0, 1.0, box({31, 31}, {0.1, 0.2}, {1.5, 1.6}));
  const TripleSolve s = integrate_triple(boundary_from(t));
  EXPECT_LT(rel_dist(s.triple.v, t.v), 1e-6);
  EXPECT_LT(rel_dist(s.triple.h, t.h), 1e-6);
  EXPECT_LT(rel_dist(s.triple.V, t.V), 1e-6);
  EXPECT_TRUE(validate_triple(s.triple, 1e-5).pass);
}

TEST(IntegrateTriple, SweepOrdersAgree) {
  const Triple t = cylinder_triple(1.3, box({21, 21}, {0, 0}, {2, 2}));
  const TripleSolve s = integrate_triple(boundary_from(t));
  ASSERT_FALSE(s.report.rows.empty());
  EXPECT_EQ(s.report.rows[0].id, "path_independence");
  EXPECT_LT(s.report.rows[0].max_residual, 1e-8);
}

TEST(LineIntegrator, RejectsBadSettings) {
  LineIntegrator li;
  li.substeps = 0;
  EXPECT_THROW(li.validate(), Error);
}

TEST(ReconstructFrame, CircleIsUnitCircle) {
  const Triple t = circle_triple(1.0, box({41}, {0}, {6}));
  SweepOptions opt;
  opt.integ.substeps = 100;
  const FrameSolve f = reconstruct_frame(t, standard_frame(1, 2, 3), 1e-8, opt);
  const Vec center = f.sample.pos.values[0] - f.sample.xi[0].values[0];
  for (std::size_t p = 0; p < f.sample.grid.size(); ++p)
    EXPECT_NEAR((f.sample.pos.values[p] - center).norm(), 1.0, 1e-10);
  EXPECT_LT(f.gram_defect, 1e-10);
}

TEST(ReconstructFrame, CylinderMatchesClosedForm) {
  const Grid g = box({21, 21}, {0, 0}, {1.5, 1.5});
  const ImmersionSample c = cylinder(1.3, g);
  FrameInit f0;
  f0.point = c.pos.values[0];
  f0.X = {c.X[0].values[0], c.X[1].values[0]};
  f0.xi = {c.xi[0].values[0]};
  const FrameSolve f = reconstruct_frame(*c.triple, f0);
  EXPECT_LT(max_dist(f.sample.pos, c.pos), 1e-9);
}

TEST(ReconstructFrame, RotationEquivariance) {
  const Triple t = torus_triple(2.0, 1.0, box({15, 15}, {0.1, 0.2}, {1.0, 1.1}));
  const FrameInit a = standard_frame(2, 1, 3);
  TransformGen gen(17);
  const Mat O = gen.orthogonal(3);
  FrameInit b = a;
  b.point = O * a.point;
  for (auto& x : b.X) x = O * x;
  for (auto& x : b.xi) x = O * x;
  const FrameSolve fa = reconstruct_frame(t, a), fb = reconstruct_frame(t, b);
  double m = 0.0;
  for (std::size_t p = 0; p < t.grid.size(); ++p)
    m = std::max(m, (O * fa.sample.pos.values[p] - fb.sample.pos.values[p]).norm());
  EXPECT_LT(m, 1e-12);
}

TEST(ReconstructFrame, NonOrthonormalFrameRejected) {
  const Triple t = circle_triple(1.0, box({11}, {0}, {1}));
  FrameInit f = standard_frame(1, 2, 3);
  f.X[0] *= 1.5;
  EXPECT_THROW(reconstruct_frame(t, f), Error);
}

TEST(SolveB, TrivialRotationGivesConstants) {
  const Grid g = box({11, 11}, {0, 0}, {1, 1});
  Triple t = Triple::zeros(g, ClassMap::identity(2), 1);
  for (auto& v : t.v) v.values.assign(g.size(), 1.0);
  const BSolve b = solve_B(t, {0.3, -2.0});
  for (std::size_t p = 0; p < g.size(); ++p) {
    EXPECT_DOUBLE_EQ(b.B[0].values[p], 0.3);
    EXPECT_DOUBLE_EQ(b.B[1].values[p], -2.0);
  }
}

TEST(SolveB, ZeroInitialData) {
  const BSolve b = solve_B(torus_triple(2.0, 1.0, torus_patch(15, 0.05)), {0.0, 0.0});
  for (const auto& f : b.B)
    for (double x : f.values) EXPECT_EQ(x, 0.0);
}

TEST(SolveB, Superposition) {
  const Triple t = torus_triple(2.0, 1.0, torus_patch(15, 0.05));
  const BSolve a = solve_B(t, {1, 0}), b = solve_B(t, {0, 1}), c = solve_B(t, {1, 1});
  for (int m = 0; m < 2; ++m)
    for (std::size_t p = 0; p < t.grid.size(); ++p)
      EXPECT_NEAR(c.B[m].values[p], a.B[m].values[p] + b.B[m].values[p], 1e-9);
}

TEST(SolveLinear, HomogeneousConstants) {
  const Grid g = box({11, 11}, {0, 0}, {1, 1});
  Triple t = Triple::zeros(g, ClassMap::identity(2), 1);
  for (auto& v : t.v) v.values.assign(g.size(), 1.0);
  const std::vector<ScalarField> B(2, ScalarField(g, 0.0));
  const RibaucourSolution w = solve_linear(t, B, {1.0, {0.0, 0.0}, {0.0}});
  for (std::size_t p = 0; p < g.size(); ++p) {
    EXPECT_EQ(w.phi.values[p], 1.0);
    EXPECT_EQ(w.gamma[0].values[p], 0.0);
    EXPECT_EQ(w.beta[0].values[p], 0.0);
  }
}

TEST(SolveLinear, InversionClosedForm) {
  const ImmersionSample s = sphere_patch(1.2, box({21, 21}, {0.5, 0.2}, {1.5, 1.2}));
  Vec P0(3);
  P0 << 0.3, 0.1, 2.5;
  const RibaucourSolution exact = ltrivial_solution(s, inversion_spec(P0, 0.9, 1));
  LinearInit init{exact.phi.values[0], {exact.gamma[0].values[0], exact.gamma[1].values[0]},
                  {exact.beta[0].values[0]}};
  const RibaucourSolution w = solve_linear(*s.triple, exact.B, init);
  EXPECT_LT(rel_dist({w.phi}, {exact.phi}), 1e-7);
  EXPECT_LT(rel_dist(w.beta, exact.beta), 1e-7);
  for (std::size_t p = 0; p < s.grid.size(); ++p)
    EXPECT_NEAR(exact.phi.values[p], 0.5 * ((s.pos.values[p] - P0).squaredNorm() - 0.81), 1e-12);
}

TEST(SolveLinear, Combination) {
  const Triple t = torus_triple(2.0, 1.0, torus_patch(15, 0.05));
  const BSolve B = solve_B(t, {1.0, 0.5});
  const RibaucourSolution a = solve_linear(t, B.B, {1.0, {0.1, 0.2}, {0.3}});
  const RibaucourSolution b = solve_linear(t, B.B, {-0.5, {0.0, 0.4}, {-0.2}});
  const RibaucourSolution c = combine(a, 2.0, b);
  // B combines along with the solution.
  std::vector<ScalarField> B3 = B.B;
  for (auto& f : B3)
    for (double& x : f.values) x *= 3.0;
  const RibaucourSolution d = solve_linear(t, B3, {0.0, {0.1, 1.0}, {-0.1}});
  EXPECT_LT(rel_dist({c.phi}, {d.phi}), 1e-10);
  EXPECT_LT(rel_dist(c.gamma, d.gamma), 1e-10);
}
