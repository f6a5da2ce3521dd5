// Randomized invariants over seeded hand-rolled generators.

#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace dupin;
using namespace dupin::test;

namespace {

LTransform inverse(const LTransform& T) {
  switch (T.kind) {
    case LTransform::Kind::Translate:
      return LTransform::translate(-T.u);
    case LTransform::Kind::Orthogonal:
      return LTransform::orthogonal(T.O.transpose());
    case LTransform::Kind::Homothety:
      return LTransform::homothety(1.0 / T.k);
    case LTransform::Kind::Inversion:
      return LTransform::inversion();
    case LTransform::Kind::ParallelTranslate: {
      std::vector<double> c = T.c;
      for (double& x : c) x = -x;
      return LTransform::parallel(c);
    }
  }
  return T;
}

LTrivialSpec random_spec(TransformGen& gen, int normals) {
  LTrivialSpec s;
  s.a = gen.uniform(-2, 2);
  s.v = gen.vec(3, 1.5);
  for (int r = 0; r < normals; ++r) s.d.push_back(gen.uniform(-1, 1));
  s.c = gen.uniform(-3, 3);
  return s;
}

}  // namespace

TEST(GroupProperty, ChainThenInverseIsIdentity) {
  const ImmersionSample s = torus(2.0, 1.0, torus_patch(9, 0.05));
  TransformGen gen(101);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<LTransform> chain;
    ImmersionSample cur = s;
    for (int k = 0; k < 3; ++k)
      for (const LTransform& T : gen.next(cur, {0})) {
        chain.push_back(T);
        cur = apply_ltransform(cur, T);
      }
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) cur = apply_ltransform(cur, inverse(*it));
    double scale = 0.0;
    for (const Vec& x : s.pos.values) scale = std::max(scale, x.norm());
    EXPECT_LT(max_dist(cur.pos, s.pos) / scale, 1e-10);
    EXPECT_LT(max_dist(cur.xi[0], s.xi[0]), 1e-9);
  }
}

TEST(EpsilonProperty, ConformalInvariance) {
  TransformGen gen(202);
  const ImmersionSample s = torus(2.0, 1.0, torus_patch(9, 0.05));
  int checked = 0, decided = 0, total = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const LTrivialSpec spec = random_spec(gen, 1);
    const EpsilonValue e0 = epsilon_of(spec);
    if (e0.ambiguous || std::abs(e0.expr) < 1e-3) continue;
    LTrivialSpec cur = spec;
    for (int k = 0; k < 4; ++k) {
      auto chain = gen.next(s, {});
      for (const LTransform& T : chain) cur = pushforward_trivial(cur, T);
      // Chains of inversions can blow the coefficients up until the sign drowns in the
      // relative tolerance band; those report AMBIGUOUS and are not compared.
      const EpsilonValue e = epsilon_of(cur);
      ++total;
      if (e.ambiguous) continue;
      ++decided;
      EXPECT_EQ(e.value, e0.value);
    }
    ++checked;
  }
  EXPECT_GT(checked, 100);
  EXPECT_GT(decided, 0.9 * total);
}

TEST(LinearityProperty, SolveBSuperposition) {
  const Triple t = torus_triple(2.0, 1.0, torus_patch(11, 0.05));
  TransformGen gen(303);
  const BSolve e0 = solve_B(t, {1, 0}), e1 = solve_B(t, {0, 1});
  for (int trial = 0; trial < 10; ++trial) {
    const double a = gen.uniform(-3, 3), b = gen.uniform(-3, 3);
    const BSolve s = solve_B(t, {a, b});
    for (int m = 0; m < 2; ++m)
      for (std::size_t p = 0; p < t.grid.size(); ++p)
        EXPECT_NEAR(s.B[m].values[p], a * e0.B[m].values[p] + b * e1.B[m].values[p], 1e-10 * (1 + std::abs(s.B[m].values[p])));
  }
}

TEST(ProjectiveProperty, RescaledSolutionsGiveSameTransform) {
  const ImmersionSample s = torus(2.0, 1.0, torus_patch(9, 0.05));
  const RibaucourSolution w = solve_linear(*s.triple, solve_B(*s.triple, {1.0, 0.5}).B, {1.5, {0.1, -0.2}, {0.2}});
  const ImmersionSample ref = ribaucour_transform(s, w).sample;
  TransformGen gen(404);
  for (int trial = 0; trial < 10; ++trial) {
    double c = gen.uniform(-3, 3);
    if (std::abs(c + 1) < 0.1) c = 2.0;
    EXPECT_LT(max_dist(ribaucour_transform(s, combine(w, c, w)).sample.pos, ref.pos), 1e-10);
  }
}

TEST(InvarianceProperty, ConullityUnderCatalogTransforms) {
  const ImmersionSample s = torus(2.0, 1.0, torus_patch(15, 1e-2));
  const DiagnosticsReport d0 = diagnose(s);
  TransformGen gen(505);
  for (int trial = 0; trial < 4; ++trial) {
    const DiagnosticsReport d = diagnose(apply_chain(s, gen.next(s, {0})));
    EXPECT_EQ(d.c, d0.c);
    EXPECT_EQ(d.k, d0.k);
  }
}
