#pragma once

#include "dupin/net.hpp"

namespace dupin {

// Closed-form samples. Those carrying a triple also have their principal caches filled.

// Circle of the given radius in the x1x2-plane of R^ambient. Normal frame: outward radial
// direction, then e3, e4, ...
Triple circle_triple(double radius, const Grid& g, int ambient = 3);
ImmersionSample circle(double radius, const Grid& g, int ambient = 3);

// Torus ((R + r cos u1) cos u2, (R + r cos u1) sin u2, r sin u1) with the outward normal,
// followed by e4, ... when ambient > 3.
Triple torus_triple(double R, double r, const Grid& g, int ambient = 3);
ImmersionSample torus(double R, double r, const Grid& g, int ambient = 3);

// Round cylinder (rho cos u1, rho sin u1, u2).
Triple cylinder_triple(double rho, const Grid& g);
ImmersionSample cylinder(double rho, const Grid& g);

// Sphere patch in spherical coordinates (theta, phi).
Triple sphere_triple(double radius, const Grid& g);
ImmersionSample sphere_patch(double radius, const Grid& g);

ImmersionSample plane(const Grid& g);

// Ellipsoid with semi-axes a, b, c in spherical coordinates; positions only.
ImmersionSample ellipsoid(double a, double b, double c, const Grid& g);

// Helix (a cos u, a sin u, b u) with its Frenet normals, which are not parallel.
ImmersionSample helix_frenet(double a, double b, const Grid& g);

}  // namespace dupin
