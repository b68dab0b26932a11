#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "cloaksim/core.hpp"

namespace cloaksim::quad {

struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre rule on [-1, 1], nodes by Newton iteration on P_n.
inline Rule1D gauss_legendre(int n) {
  if (n < 1) throw invalid_parameter("gauss_legendre: order must be >= 1");
  Rule1D rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int mid = (n + 1) / 2;
  for (int i = 0; i < mid; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double p0 = 0, p1 = 0;
    for (int iter = 0; iter < 100; ++iter) {
      p0 = 1.0;
      p1 = 0.0;
      for (int k = 0; k < n; ++k) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k + 1.0) * x * p1 - k * p2) / (k + 1.0);
      }
      // p0 = P_n(x), derivative from P_n and P_{n-1}
      double dp = n * (x * p0 - p1) / (x * x - 1.0);
      double dx = p0 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    double p_nm1 = p1;
    double dp = n * (x * p0 - p_nm1) / (x * x - 1.0);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

inline Rule1D gauss_legendre(int n, double a, double b) {
  Rule1D rule = gauss_legendre(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = 0.5 * (b - a) * rule.nodes[i] + 0.5 * (a + b);
    rule.weights[i] *= 0.5 * (b - a);
  }
  return rule;
}

/// Quadrature on the unit sphere: Gauss-Legendre in cos(theta) crossed with
/// a uniform (trapezoid) grid in phi. Exact for spherical harmonics up to
/// degree 2*n_theta - 1 (and azimuthal order n_phi - 1), which is the same
/// role a Lebedev grid plays, with order control instead of fixed tables.
struct SphereRule {
  std::vector<Vec3> points;     // unit vectors
  std::vector<double> weights;  // sum = 4*pi
};

inline SphereRule sphere_rule(int n_theta, int n_phi) {
  if (n_theta < 1 || n_phi < 1)
    throw invalid_parameter("sphere_rule: orders must be >= 1");
  SphereRule rule;
  Rule1D glt = gauss_legendre(n_theta);
  rule.points.reserve(static_cast<std::size_t>(n_theta) * n_phi);
  rule.weights.reserve(static_cast<std::size_t>(n_theta) * n_phi);
  const double wphi = 2.0 * pi / n_phi;
  for (int i = 0; i < n_theta; ++i) {
    double ct = glt.nodes[i];
    double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    for (int j = 0; j < n_phi; ++j) {
      double phi = wphi * j;
      rule.points.emplace_back(st * std::cos(phi), st * std::sin(phi), ct);
      rule.weights.push_back(glt.weights[i] * wphi);
    }
  }
  return rule;
}

/// Convenience sphere rule sized for integrands band-limited to degree L.
inline SphereRule sphere_rule_for_degree(int degree) {
  int nt = degree / 2 + 2;
  int np = degree + 4;
  return sphere_rule(nt, np);
}

template <typename F>
auto integrate_sphere(const SphereRule& rule, double radius, F&& f)
    -> decltype(f(Vec3{})) {
  decltype(f(Vec3{})) acc{};
  for (std::size_t i = 0; i < rule.points.size(); ++i)
    acc += rule.weights[i] * f(Vec3(radius * rule.points[i]));
  return acc * (radius * radius);
}

/// Volume integral over the spherical shell a < |x| < b.
template <typename F>
auto integrate_shell(const Rule1D& radial, const SphereRule& sph, F&& f)
    -> decltype(f(Vec3{})) {
  decltype(f(Vec3{})) acc{};
  for (std::size_t ir = 0; ir < radial.nodes.size(); ++ir) {
    double r = radial.nodes[ir];
    decltype(f(Vec3{})) slice{};
    for (std::size_t is = 0; is < sph.points.size(); ++is)
      slice += sph.weights[is] * f(Vec3(r * sph.points[is]));
    acc += radial.weights[ir] * r * r * slice;
  }
  return acc;
}

/// Adaptive 1-D Simpson; used by oracles and the Sobolev-norm decay check.
template <typename F>
double adaptive_simpson(F&& f, double a, double b, double tol, int depth = 24) {
  auto simpson = [&](double lo, double hi) {
    double mid = 0.5 * (lo + hi);
    return (hi - lo) / 6.0 * (f(lo) + 4.0 * f(mid) + f(hi));
  };
  std::function<double(double, double, double, double, int)> rec =
      [&](double lo, double hi, double whole, double eps, int d) -> double {
    double mid = 0.5 * (lo + hi);
    double left = simpson(lo, mid);
    double right = simpson(mid, hi);
    if (d <= 0 || std::abs(left + right - whole) < 15.0 * eps)
      return left + right + (left + right - whole) / 15.0;
    return rec(lo, mid, left, eps / 2, d - 1) +
           rec(mid, hi, right, eps / 2, d - 1);
  };
  return rec(a, b, simpson(a, b), tol, depth);
}

}  // namespace cloaksim::quad
