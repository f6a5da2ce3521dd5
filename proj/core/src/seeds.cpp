#include "dupin/seeds.hpp"

#include <cmath>
#include <functional>

#include "dupin/errors.hpp"

namespace dupin {

namespace {

struct Frame {
  Vec pos;
  std::vector<Vec> X, xi;
};

ImmersionSample build(const Grid& g, int ambient, const std::function<Frame(const std::vector<double>&)>& at) {
  ImmersionSample s;
  s.grid = g;
  s.ambient = ambient;
  s.pos = VectorField(g, Vec::Zero(ambient), "pos");
  for (std::size_t p = 0; p < g.size(); ++p) {
    Frame f = at(g.point(p));
    if (s.X.empty()) {
      for (std::size_t i = 0; i < f.X.size(); ++i) s.X.emplace_back(g, Vec::Zero(ambient), "X" + std::to_string(i));
      for (std::size_t r = 0; r < f.xi.size(); ++r)
        s.xi.emplace_back(g, Vec::Zero(ambient), "xi" + std::to_string(r));
    }
    s.pos.values[p] = f.pos;
    for (std::size_t i = 0; i < f.X.size(); ++i) s.X[i].values[p] = f.X[i];
    for (std::size_t r = 0; r < f.xi.size(); ++r) s.xi[r].values[p] = f.xi[r];
  }
  return s;
}

Vec vec(int N, std::initializer_list<double> head) {
  Vec v = Vec::Zero(N);
  int k = 0;
  for (double x : head) v[k++] = x;
  return v;
}

Vec unit(int N, int k) { return Vec::Unit(N, k); }

void require(bool ok, const char* what) {
  if (!ok) fail(ErrorCode::InvalidArgument, what);
}

ImmersionSample with_triple(ImmersionSample s, Triple t) {
  s.triple = std::move(t);
  fill_principal_cache(s);
  return s;
}

}  // namespace

Triple circle_triple(double radius, const Grid& g, int ambient) {
  require(radius > 0 && ambient >= 2 && g.dims() == 1, "circle needs radius > 0, ambient >= 2 and a 1D grid");
  Triple t = Triple::zeros(g, ClassMap::identity(1), ambient - 1);
  for (std::size_t p = 0; p < g.size(); ++p) {
    t.v[0].values[p] = radius;
    t.Vf(0, 0).values[p] = -1.0;
  }
  return t;
}

ImmersionSample circle(double radius, const Grid& g, int ambient) {
  Triple t = circle_triple(radius, g, ambient);
  auto s = build(g, ambient, [&](const std::vector<double>& u) {
    const double c = std::cos(u[0]), sn = std::sin(u[0]);
    Frame f;
    f.pos = vec(ambient, {radius * c, radius * sn});
    f.X = {vec(ambient, {-sn, c})};
    f.xi = {vec(ambient, {c, sn})};
    for (int k = 2; k < ambient; ++k) f.xi.push_back(unit(ambient, k));
    return f;
  });
  return with_triple(std::move(s), std::move(t));
}

Triple torus_triple(double R, double r, const Grid& g, int ambient) {
  require(r > 0 && R > r && ambient >= 3 && g.dims() == 2, "torus needs R > r > 0, ambient >= 3 and a 2D grid");
  Triple t = Triple::zeros(g, ClassMap::identity(2), ambient - 2);
  for (std::size_t p = 0; p < g.size(); ++p) {
    const auto u = g.point(p);
    t.v[0].values[p] = r;
    t.v[1].values[p] = R + r * std::cos(u[0]);
    t.hf(0, 1).values[p] = -std::sin(u[0]);
    t.Vf(0, 0).values[p] = -1.0;
    t.Vf(1, 0).values[p] = -std::cos(u[0]);
  }
  return t;
}

ImmersionSample torus(double R, double r, const Grid& g, int ambient) {
  Triple t = torus_triple(R, r, g, ambient);
  auto s = build(g, ambient, [&](const std::vector<double>& u) {
    const double c1 = std::cos(u[0]), s1 = std::sin(u[0]), c2 = std::cos(u[1]), s2 = std::sin(u[1]);
    const double w = R + r * c1;
    Frame f;
    f.pos = vec(ambient, {w * c2, w * s2, r * s1});
    f.X = {vec(ambient, {-s1 * c2, -s1 * s2, c1}), vec(ambient, {-s2, c2, 0.0})};
    f.xi = {vec(ambient, {c1 * c2, c1 * s2, s1})};
    for (int k = 3; k < ambient; ++k) f.xi.push_back(unit(ambient, k));
    return f;
  });
  return with_triple(std::move(s), std::move(t));
}

Triple cylinder_triple(double rho, const Grid& g) {
  require(rho > 0 && g.dims() == 2, "cylinder needs rho > 0 and a 2D grid");
  Triple t = Triple::zeros(g, ClassMap::identity(2), 1);
  for (std::size_t p = 0; p < g.size(); ++p) {
    t.v[0].values[p] = rho;
    t.v[1].values[p] = 1.0;
    t.Vf(0, 0).values[p] = -1.0;
  }
  return t;
}

ImmersionSample cylinder(double rho, const Grid& g) {
  Triple t = cylinder_triple(rho, g);
  auto s = build(g, 3, [&](const std::vector<double>& u) {
    const double c = std::cos(u[0]), sn = std::sin(u[0]);
    Frame f;
    f.pos = vec(3, {rho * c, rho * sn, u[1]});
    f.X = {vec(3, {-sn, c, 0.0}), unit(3, 2)};
    f.xi = {vec(3, {c, sn, 0.0})};
    return f;
  });
  return with_triple(std::move(s), std::move(t));
}

Triple sphere_triple(double radius, const Grid& g) {
  require(radius > 0 && g.dims() == 2, "sphere needs radius > 0 and a 2D grid");
  Triple t = Triple::zeros(g, ClassMap::identity(2), 1);
  for (std::size_t p = 0; p < g.size(); ++p) {
    const auto u = g.point(p);
    const double st = std::sin(u[0]);
    require(std::abs(st) > 1e-12, "sphere patch must avoid the poles");
    t.v[0].values[p] = radius;
    t.v[1].values[p] = radius * st;
    t.hf(0, 1).values[p] = std::cos(u[0]);
    t.Vf(0, 0).values[p] = -1.0;
    t.Vf(1, 0).values[p] = -st;
  }
  return t;
}

ImmersionSample sphere_patch(double radius, const Grid& g) {
  Triple t = sphere_triple(radius, g);
  auto s = build(g, 3, [&](const std::vector<double>& u) {
    const double ct = std::cos(u[0]), st = std::sin(u[0]), cp = std::cos(u[1]), sp = std::sin(u[1]);
    Frame f;
    f.pos = radius * vec(3, {st * cp, st * sp, ct});
    f.X = {vec(3, {ct * cp, ct * sp, -st}), vec(3, {-sp, cp, 0.0})};
    f.xi = {vec(3, {st * cp, st * sp, ct})};
    return f;
  });
  return with_triple(std::move(s), std::move(t));
}

ImmersionSample plane(const Grid& g) {
  require(g.dims() == 2, "plane needs a 2D grid");
  Triple t = Triple::zeros(g, ClassMap::identity(2), 1);
  for (std::size_t p = 0; p < g.size(); ++p) t.v[0].values[p] = t.v[1].values[p] = 1.0;
  auto s = build(g, 3, [](const std::vector<double>& u) {
    Frame f;
    f.pos = vec(3, {u[0], u[1], 0.0});
    f.X = {unit(3, 0), unit(3, 1)};
    f.xi = {unit(3, 2)};
    return f;
  });
  return with_triple(std::move(s), std::move(t));
}

ImmersionSample ellipsoid(double a, double b, double c, const Grid& g) {
  require(a > 0 && b > 0 && c > 0 && g.dims() == 2, "ellipsoid needs positive axes and a 2D grid");
  ImmersionSample s;
  s.grid = g;
  s.ambient = 3;
  s.pos = VectorField(g, Vec::Zero(3), "pos");
  for (std::size_t p = 0; p < g.size(); ++p) {
    const auto u = g.point(p);
    s.pos.values[p] = vec(3, {a * std::sin(u[0]) * std::cos(u[1]), b * std::sin(u[0]) * std::sin(u[1]),
                              c * std::cos(u[0])});
  }
  return s;
}

ImmersionSample helix_frenet(double a, double b, const Grid& g) {
  require(a > 0 && g.dims() == 1, "helix needs a > 0 and a 1D grid");
  const double sp = std::sqrt(a * a + b * b);
  const double kappa = a / (sp * sp);
  auto s = build(g, 3, [&](const std::vector<double>& u) {
    const double c = std::cos(u[0]), sn = std::sin(u[0]);
    Frame f;
    f.pos = vec(3, {a * c, a * sn, b * u[0]});
    f.X = {vec(3, {-a * sn, a * c, b}) / sp};
    f.xi = {vec(3, {-c, -sn, 0.0}), vec(3, {b * sn, -b * c, a}) / sp};
    return f;
  });
  s.lame.emplace_back(g, sp, "lame0");
  s.kappa.emplace_back(g, kappa, "kappa00");
  s.kappa.emplace_back(g, 0.0, "kappa01");
  return s;
}

}  // namespace dupin
