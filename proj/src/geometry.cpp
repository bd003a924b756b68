#include "hyperite/geometry.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace hyperite::geometry {

Curvature::Curvature(double value) : c(value) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument("Curvature: c must be finite and >= 0");
  }
}

double Curvature::max_norm() const {
  if (euclidean()) return std::numeric_limits<double>::infinity();
  return (1.0 - kBallMargin) / sqrt_c();
}

double conformal_factor(std::span<const double> x, Curvature c) {
  if (c.euclidean()) return 2.0;
  const double cn2 = c.c * norm_sq(x);
  if (cn2 >= 1.0) throw std::domain_error("conformal_factor: point outside the ball");
  return 2.0 / (1.0 - cn2);
}

Vec project_to_ball(std::span<const double> x, Curvature c) {
  Vec out(x.begin(), x.end());
  project_to_ball_inplace(out, c);
  return out;
}

void project_to_ball_inplace(std::span<double> x, Curvature c) {
  if (c.euclidean()) return;
  const double r = norm(x);
  const double mx = c.max_norm();
  if (r > mx) scale(x, mx / r);
}

Vec mobius_add(std::span<const double> x, std::span<const double> y, Curvature c) {
  if (x.size() != y.size()) throw std::invalid_argument("mobius_add: dimension mismatch");
  Vec out(x.size());
  if (c.euclidean()) {
    for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
    return out;
  }
  const double cc = c.c;
  const double xy = dot(x, y);
  const double x2 = norm_sq(x);
  const double y2 = norm_sq(y);
  const double a = 1.0 + 2.0 * cc * xy + cc * y2;
  const double b = 1.0 - cc * x2;
  const double den = 1.0 + 2.0 * cc * xy + cc * cc * x2 * y2;
  if (std::abs(den) <= kDenomEps) throw std::domain_error("mobius_add: degenerate denominator");
  for (size_t i = 0; i < x.size(); ++i) out[i] = (a * x[i] + b * y[i]) / den;
  return out;
}

Vec exp_map_origin(std::span<const double> v, Curvature c) {
  Vec out(v.begin(), v.end());
  if (c.euclidean()) return out;
  const double r = norm(v);
  if (r < kZeroNormEps) return out;
  const double u = c.sqrt_c() * r;
  const double s = std::tanh(u) / u;
  scale(out, s);
  project_to_ball_inplace(out, c);
  return out;
}

Vec log_map_origin(std::span<const double> y, Curvature c) {
  Vec out(y.begin(), y.end());
  if (c.euclidean()) return out;
  const double r = norm(y);
  if (r < kZeroNormEps) return out;
  const double u = std::min(c.sqrt_c() * r, 1.0 - kAtanhClamp);
  const double t = std::atanh(u) / (c.sqrt_c() * r);
  scale(out, t);
  return out;
}

Vec exp_map(std::span<const double> z, std::span<const double> v, Curvature c) {
  if (z.size() != v.size()) throw std::invalid_argument("exp_map: dimension mismatch");
  if (c.euclidean()) {
    Vec out(z.begin(), z.end());
    axpy(1.0, v, out);
    return out;
  }
  const double r = norm(v);
  if (r < kZeroNormEps) return Vec(z.begin(), z.end());
  const double lam = conformal_factor(z, c);
  const double arg = c.sqrt_c() * lam * r / 2.0;
  Vec w(v.begin(), v.end());
  scale(w, std::tanh(arg) / (c.sqrt_c() * r));
  Vec out = mobius_add(z, w, c);
  project_to_ball_inplace(out, c);
  return out;
}

Vec log_map(std::span<const double> z, std::span<const double> y, Curvature c) {
  if (z.size() != y.size()) throw std::invalid_argument("log_map: dimension mismatch");
  if (c.euclidean()) {
    Vec out(y.begin(), y.end());
    axpy(-1.0, z, out);
    return out;
  }
  Vec neg_z(z.size());
  for (size_t i = 0; i < z.size(); ++i) neg_z[i] = -z[i];
  Vec u = mobius_add(neg_z, y, c);
  const double r = norm(u);
  if (r < kZeroNormEps) return Vec(z.size(), 0.0);
  const double lam = conformal_factor(z, c);
  const double arg = std::min(c.sqrt_c() * r, 1.0 - kAtanhClamp);
  scale(u, 2.0 * std::atanh(arg) / (c.sqrt_c() * lam * r));
  return u;
}

double hyp_distance(std::span<const double> x, std::span<const double> y, Curvature c) {
  if (c.euclidean()) throw std::domain_error("hyp_distance: undefined for c = 0");
  Vec neg_x(x.size());
  for (size_t i = 0; i < x.size(); ++i) neg_x[i] = -x[i];
  const Vec u = mobius_add(neg_x, y, c);
  const double arg = std::min(c.sqrt_c() * norm(u), 1.0 - kAtanhClamp);
  return 2.0 / c.sqrt_c() * std::atanh(arg);
}

namespace {

// d/dr [tanh(sqrt(c) r) / (sqrt(c) r)] / r, with its r -> 0 limit.
double exp_scale_derivative_over_r(double u, double r, double cc) {
  if (u < 1e-4) return -2.0 * cc / 3.0;
  const double t = std::tanh(u);
  return cc * (u * (1.0 - t * t) - t) / (u * u * u);
}

// d/dr [atanh(sqrt(c) r) / (sqrt(c) r)] / r, with its r -> 0 limit.
double log_scale_derivative_over_r(double u, double r, double cc) {
  if (u < 1e-4) return 2.0 * cc / 3.0;
  const double a = std::atanh(u);
  return cc * (u / (1.0 - u * u) - a) / (u * u * u);
}

// vjp of f(x) = R x / ||x|| (the active branch of project_to_ball)
Vec sphere_projection_vjp(std::span<const double> x, std::span<const double> g, double target_norm) {
  const double r = norm(x);
  Vec out(g.begin(), g.end());
  const double gx = dot(g, x);
  for (size_t i = 0; i < x.size(); ++i) out[i] = target_norm / r * (g[i] - gx * x[i] / (r * r));
  return out;
}

}  // namespace

Vec exp_origin_vjp(std::span<const double> v, std::span<const double> g, Curvature c) {
  Vec out(g.begin(), g.end());
  if (c.euclidean()) return out;
  const double r = norm(v);
  if (r < kZeroNormEps) return out;
  const double u = c.sqrt_c() * r;
  const double s = std::tanh(u) / u;
  // Projection active: the composition R * (s v) / ||s v|| collapses to R v / ||v||.
  if (s * r > c.max_norm()) return sphere_projection_vjp(v, g, c.max_norm());
  const double dsr = exp_scale_derivative_over_r(u, r, c.c);
  const double gv = dot(g, v);
  for (size_t i = 0; i < v.size(); ++i) out[i] = s * g[i] + gv * dsr * v[i];
  return out;
}

Vec log_origin_vjp(std::span<const double> y, std::span<const double> g, Curvature c) {
  Vec out(g.begin(), g.end());
  if (c.euclidean()) return out;
  const double r = norm(y);
  if (r < kZeroNormEps) return out;
  const double u = std::min(c.sqrt_c() * r, 1.0 - kAtanhClamp);
  const double t = std::atanh(u) / (c.sqrt_c() * r);
  const double dtr = log_scale_derivative_over_r(u, r, c.c);
  const double gy = dot(g, y);
  for (size_t i = 0; i < y.size(); ++i) out[i] = t * g[i] + gy * dtr * y[i];
  return out;
}

Vec project_vjp(std::span<const double> x, std::span<const double> g, Curvature c) {
  if (c.euclidean() || norm(x) <= c.max_norm()) return Vec(g.begin(), g.end());
  return sphere_projection_vjp(x, g, c.max_norm());
}

void mobius_add_vjp(std::span<const double> x, std::span<const double> y, std::span<const double> g,
                    Curvature c, std::span<double> gx, std::span<double> gy) {
  if (c.euclidean()) {
    std::copy(g.begin(), g.end(), gx.begin());
    std::copy(g.begin(), g.end(), gy.begin());
    return;
  }
  const double cc = c.c;
  const double xy = dot(x, y);
  const double x2 = norm_sq(x);
  const double y2 = norm_sq(y);
  const double a = 1.0 + 2.0 * cc * xy + cc * y2;
  const double b = 1.0 - cc * x2;
  const double den = 1.0 + 2.0 * cc * xy + cc * cc * x2 * y2;
  if (std::abs(den) <= kDenomEps) throw std::domain_error("mobius_add_vjp: degenerate denominator");
  Vec m(x.size());
  for (size_t i = 0; i < x.size(); ++i) m[i] = (a * x[i] + b * y[i]) / den;
  const double gdx = dot(g, x);
  const double gdy = dot(g, y);
  const double gdm = dot(g, std::span<const double>(m));
  for (size_t i = 0; i < x.size(); ++i) {
    gx[i] = (a * g[i] + 2.0 * cc * gdx * y[i] - 2.0 * cc * gdy * x[i]) / den -
            gdm / den * (2.0 * cc * y[i] + 2.0 * cc * cc * y2 * x[i]);
    gy[i] = (2.0 * cc * gdx * (x[i] + y[i]) + b * g[i]) / den -
            gdm / den * (2.0 * cc * x[i] + 2.0 * cc * cc * x2 * y[i]);
  }
}

}  // namespace hyperite::geometry
