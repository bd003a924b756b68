#pragma once

#include "hyperite/linalg.hpp"

namespace hyperite::geometry {

// Absolute value of the (negative) sectional curvature. c == 0 selects an
// exact Euclidean branch in every operation, not a small-c approximation.
struct Curvature {
  double c = 0.0;

  explicit Curvature(double value = 0.0);
  bool euclidean() const { return c == 0.0; }
  double sqrt_c() const { return std::sqrt(c); }
  // Ball radius 1/sqrt(c) shrunk by the numerical-safety margin.
  double max_norm() const;
};

inline constexpr double kBallMargin = 1e-5;
inline constexpr double kAtanhClamp = 1e-15;
inline constexpr double kZeroNormEps = 1e-12;
inline constexpr double kDenomEps = 1e-15;

double conformal_factor(std::span<const double> x, Curvature c);

Vec mobius_add(std::span<const double> x, std::span<const double> y, Curvature c);

Vec exp_map(std::span<const double> z, std::span<const double> v, Curvature c);
Vec log_map(std::span<const double> z, std::span<const double> y, Curvature c);

// Origin-based maps, the workhorses of the encoder (all tangent-space
// arithmetic happens in the chart at o).
Vec exp_map_origin(std::span<const double> v, Curvature c);
Vec log_map_origin(std::span<const double> y, Curvature c);

Vec project_to_ball(std::span<const double> x, Curvature c);
void project_to_ball_inplace(std::span<double> x, Curvature c);

double hyp_distance(std::span<const double> x, std::span<const double> y, Curvature c);

// Vector-Jacobian products. Each takes the op's original input(s) and the
// upstream gradient g = dL/d(output) and returns dL/d(input). Forward values
// are recomputed from the inputs; the projection branch inside
// exp_map_origin is differentiated exactly.
Vec exp_origin_vjp(std::span<const double> v, std::span<const double> g, Curvature c);
Vec log_origin_vjp(std::span<const double> y, std::span<const double> g, Curvature c);
void mobius_add_vjp(std::span<const double> x, std::span<const double> y, std::span<const double> g,
                    Curvature c, std::span<double> gx, std::span<double> gy);
Vec project_vjp(std::span<const double> x, std::span<const double> g, Curvature c);

}  // namespace hyperite::geometry
