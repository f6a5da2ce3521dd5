#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dupin/integrable.hpp"
#include "dupin/net.hpp"
#include "dupin/ribaucour.hpp"

namespace dupin {

// Catalog transform. A parallel normal field is stored by its constant coefficients on the
// sample's parallel orthonormal normal frame.
struct LTransform {
  enum class Kind { Translate, Orthogonal, Homothety, Inversion, ParallelTranslate };
  Kind kind = Kind::Translate;
  Vec u;                  // Translate
  Mat O;                  // Orthogonal
  double k = 1.0;         // Homothety
  std::vector<double> c;  // ParallelTranslate

  static LTransform translate(Vec u);
  static LTransform orthogonal(Mat O);
  static LTransform homothety(double k);
  static LTransform inversion();
  static LTransform parallel(std::vector<double> c);

  void validate(int ambient, int normals) const;
  std::string describe() const;
};

const char* to_string(LTransform::Kind k);

ImmersionSample apply_ltransform(const ImmersionSample& s, const LTransform& T);
ImmersionSample apply_chain(const ImmersionSample& s, const std::vector<LTransform>& chain);

// Data w^T with T~(R_w(f)) = R_{w^T}(T(f)), expressed in the frames of T(f).
RibaucourSolution pushforward_w(const RibaucourSolution& w, const LTransform& T, const ImmersionSample& s);

// (a, v, delta, c) of L-trivial data: F = a f + v + delta, 2 phi = a |f|^2 + 2 <f, v> + c.
// delta is a parallel normal field given by its coefficients on the normal frame.
struct LTrivialSpec {
  double a = 0.0;
  Vec v;
  std::vector<double> d;
  double c = 0.0;
};

struct EpsilonValue {
  int value = 0;       // -1, 0, +1
  bool ambiguous = false;
  double expr = 0.0;   // ac - |v|^2 + |delta|^2
};
// `nindices` selects frame coefficients dropped from delta (the N part).
EpsilonValue epsilon_of(const LTrivialSpec& spec, const std::vector<int>& nindices = {}, double tol = 1e-9);

LTrivialSpec pushforward_trivial(const LTrivialSpec& spec, const LTransform& T);

// Closed-form solution of the linear system for L-trivial data on a principal sample.
RibaucourSolution ltrivial_solution(const ImmersionSample& s, const LTrivialSpec& spec);

struct LTrivialDetection {
  bool trivial = false;
  bool substantial = true;  // false when the decomposition is not unique
  LTrivialSpec spec;
  EpsilonValue eps;
  double fit_residual = 0.0;
  double const_residual = 0.0;
  RankInfo rank;
};
LTrivialDetection detect_ltrivial(const ImmersionSample& s, const RibaucourSolution& w, double tol = 1e-7,
                                  const std::vector<int>& nindices = {});

struct StereographicMap {
  int eps = 1;  // +1 sphere, -1 hyperboloid (Lorentz inversion), 0 plain inversion
};

// Embeds R^N as {x_0 = 0} in R^{N+1}; frames gain the parallel normal e_0.
ImmersionSample embed_with_pole(const ImmersionSample& s);

// Forward: embed, then T_{eps e0} H_{1+eps^2} i T_{-eps^2 e0}. The hyperbolic case returns
// positions only. Inverse: the inverse composition followed by dropping x_0.
ImmersionSample stereographic(const ImmersionSample& s, const StereographicMap& map, bool forward = true);

// Generalized cylinder over h with fiber coordinates on `grid` (product grid h x grid).
ImmersionSample generalized_cylinder(const ImmersionSample& h, const std::vector<int>& vindices, int eps,
                                     const Grid& grid, double quadric_tol = 1e-9);
Vec cylinder_point(const ImmersionSample& h, const std::vector<int>& vindices, int eps, std::size_t node,
                   const std::vector<double>& t);

// Unit sphere of the subbundle discretized by hyperspherical angles (rank - 1 axes). A rank-one
// tube keeps the base grid and uses the + side.
Grid sphere_angle_grid(int rank, int nodes = 21);
Vec sphere_direction(int rank, const std::vector<double>& angles);

ImmersionSample generalized_tube(const ImmersionSample& g, const std::vector<int>& nindices, double a,
                                 const Grid& angles);
Vec tube_point(const ImmersionSample& g, const std::vector<int>& nindices, double a, std::size_t node,
               const std::vector<double>& unit_coeffs);

ImmersionSample generalized_rotation(const ImmersionSample& g, const std::vector<int>& vindices, const Vec& e,
                                     const Grid& grid);
Vec rotation_point(const ImmersionSample& g, const std::vector<int>& vindices, const Vec& e, std::size_t node,
                   const std::vector<double>& t);

struct UmbIngredients {
  ImmersionSample g;
  Grid extra;                      // (a) R^d axes; (b) radius axis then R^d axes; (c) sphere angles
  std::optional<ScalarField> rho;  // (c) warping function on g's grid
};
ImmersionSample umb_normal_form(char kind, const UmbIngredients& in);

// Normalization of L-trivial data: a logged chain of catalog transforms bringing L-trivial data to
// (1, 0, 0, eps) up to a projective factor.
struct NormalizationChain {
  std::vector<LTransform> steps;
  std::vector<std::string> log;
  LTrivialSpec final_spec;   // after the chain, rescaled so a = 1 (or c = 1 when a = 0)
  EpsilonValue eps;
  int q_trials = 0;          // conformal maps tried before the parallel translation was regular
};
NormalizationChain normalize_ltrivial(const ImmersionSample& s, const LTrivialSpec& spec,
                                      const std::vector<int>& nindices);

LTrivialSpec apply_trivial_chain(const LTrivialSpec& spec, const std::vector<LTransform>& chain);

}  // namespace dupin
