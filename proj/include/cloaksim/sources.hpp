#pragma once

#include <cmath>
#include <vector>

#include "cloaksim/core.hpp"
#include "cloaksim/modal.hpp"
#include "cloaksim/quadrature.hpp"
#include "cloaksim/special_functions.hpp"

namespace cloaksim {

/// Smooth radial bump supported in [r_in, r_out] (classic mollifier profile),
/// with analytic first and second derivatives.
struct RadialBump {
  double r_in;
  double r_out;

  double map(double r) const { return (2.0 * r - (r_in + r_out)) / (r_out - r_in); }

  double value(double r) const {
    double s = map(r);
    if (std::abs(s) >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - s * s));
  }

  double deriv(double r) const {
    double s = map(r);
    if (std::abs(s) >= 1.0) return 0.0;
    double den = 1.0 - s * s;
    double g = -2.0 * s / (den * den);
    return value(r) * g * 2.0 / (r_out - r_in);
  }

  double second_deriv(double r) const {
    double s = map(r);
    if (std::abs(s) >= 1.0) return 0.0;
    double den = 1.0 - s * s;
    double g = -2.0 * s / (den * den);
    double dg = (-2.0 - 6.0 * s * s) / (den * den * den);
    double sigma = 2.0 / (r_out - r_in);
    return value(r) * (g * g + dg) * sigma * sigma;
  }
};

/// Divergence-free time-harmonic current J = amplitude * curl(chi(|x|) c).
/// div J = 0 holds identically by construction and the support lies in the
/// shell r_in < |x| < r_out outside B_2.
class CurrentDensity {
 public:
  CurrentDensity(double r_in, double r_out, const Vec3& direction,
                 double amplitude = 1.0)
      : bump_{r_in, r_out}, c_(direction), amplitude_(amplitude) {
    if (!(2.0 < r_in && r_in < r_out))
      throw invalid_parameter("CurrentDensity: require 2 < r_in < r_out");
    if (c_.norm() == 0.0)
      throw invalid_parameter("CurrentDensity: zero direction");
  }

  double r_in() const { return bump_.r_in; }
  double r_out() const { return bump_.r_out; }
  double amplitude() const { return amplitude_; }
  const Vec3& direction() const { return c_; }
  const RadialBump& profile() const { return bump_; }

  /// J(x) = amplitude * chi'(|x|) x_hat x c.
  Vec3 operator()(const Vec3& x) const {
    double r = x.norm();
    if (r <= bump_.r_in || r >= bump_.r_out) return Vec3::Zero();
    return amplitude_ * bump_.deriv(r) * Vec3(x / r).cross(c_);
  }

  /// curl J, analytic.
  Vec3 curl(const Vec3& x) const {
    double r = x.norm();
    if (r <= bump_.r_in || r >= bump_.r_out) return Vec3::Zero();
    Vec3 u = x / r;
    double xc = u.dot(c_);
    double d1 = bump_.deriv(r);
    double d2 = bump_.second_deriv(r);
    Vec3 grad_div = d2 * xc * u + (d1 / r) * (c_ - xc * u);
    Vec3 lap = (d2 + 2.0 * d1 / r) * c_;
    return amplitude_ * (grad_div - lap);
  }

  bool inside_support(const Vec3& x) const {
    double r = x.norm();
    return r > bump_.r_in && r < bump_.r_out;
  }

  /// || J ||_{L2(R^3)} = amplitude |c| sqrt(8 pi / 3 * int chi'^2 r^2 dr).
  double l2_norm() const {
    auto rule = quad::gauss_legendre(64, bump_.r_in, bump_.r_out);
    double radial = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      double d = bump_.deriv(rule.nodes[i]);
      radial += rule.weights[i] * d * d * rule.nodes[i] * rule.nodes[i];
    }
    return amplitude_ * c_.norm() * std::sqrt(8.0 * pi / 3.0 * radial);
  }

 private:
  RadialBump bump_;
  Vec3 c_;
  double amplitude_;
};

inline CurrentDensity make_divfree_current(double r_in, double r_out,
                                           const Vec3& direction,
                                           double amplitude = 1.0) {
  return CurrentDensity(r_in, r_out, direction, amplitude);
}

struct FreeFieldOptions {
  double tol = 1e-8;
  int base_radial = 16;
  /// 0: pick from omega (kernel band limit); otherwise fixed order.
  int n_theta = 0;
  int max_doublings = 5;
};

/// Radiated free-space field of J at frequency omega:
///   E(x) = -i omega int J(y) G_omega(x,y) dy
///   H(x) = -grad_x x int J(y) G_omega(x,y) dy
/// by tensor-product Gauss-Legendre quadrature over the support shell, with
/// order doubling until self-consistent. Off-support evaluation only.
inline std::pair<Vec3c, Vec3c> free_field(const CurrentDensity& j, double omega,
                                          const Vec3& x,
                                          FreeFieldOptions opt = {}) {
  if (omega <= 0.0) throw invalid_parameter("free_field: omega must be > 0");
  if (j.inside_support(x))
    throw unsupported_region_error("free_field: x inside source support");

  // The angular integrand is band-limited by the kernel oscillation across
  // the support; a fixed spectral order suffices and only the radial
  // direction (the non-analytic bump profile) needs adaptation.
  int nt = opt.n_theta > 0
               ? opt.n_theta
               : 16 + static_cast<int>(std::ceil(0.8 * omega * j.r_out()));
  auto sph = quad::sphere_rule(nt, 2 * nt);

  auto level_value = [&](int level) -> std::pair<Vec3c, Vec3c> {
    int nr = opt.base_radial << level;
    auto radial = quad::gauss_legendre(nr, j.r_in(), j.r_out());
    Vec3c a = Vec3c::Zero();   // int G J
    Vec3c ca = Vec3c::Zero();  // int grad_x G x J
    for (std::size_t ir = 0; ir < radial.nodes.size(); ++ir) {
      double r = radial.nodes[ir];
      double wr = radial.weights[ir] * r * r;
      for (std::size_t is = 0; is < sph.points.size(); ++is) {
        Vec3 y = r * sph.points[is];
        Vec3 jy = j(y);
        if (jy.isZero()) continue;
        double w = wr * sph.weights[is];
        complexd g = sf::green_scalar(omega, x, y);
        Vec3c grad = sf::green_grad_x(omega, x, y);
        a += (w * g) * jy.cast<complexd>();
        ca += w * cross_c(grad, jy.cast<complexd>());
      }
    }
    return {-iu * omega * a, -ca};
  };

  auto [e_prev, h_prev] = level_value(0);
  if (opt.max_doublings == 0) return {e_prev, h_prev};  // fixed-order mode
  for (int level = 1; level <= opt.max_doublings; ++level) {
    auto [e, h] = level_value(level);
    double scale = std::max({e.norm(), h.norm(), 1e-300});
    double change =
        std::max((e - e_prev).norm(), (h - h_prev).norm()) / scale;
    if (change < opt.tol) return {e, h};
    e_prev = e;
    h_prev = h;
  }
  throw quadrature_error("free_field: quadrature did not self-converge",
                         opt.tol);
}

/// Regular-wave multipole coefficients of the free field about the origin,
/// valid throughout B_2 (the source lives outside B_2). Projection of the
/// source against outgoing waves via the radial/angular split of the scalar
/// addition theorem applied to x.E and x.H, with signs matching the pair
/// free_field returns:
///   a_TE =  omega^2/(n(n+1)) int h1_n(omega r) conj(Y_nm) (y . curl J) dy
///   a_TM = -omega^3/(n(n+1)) int h1_n(omega r) conj(Y_nm) (y . J) dy
inline ModalCoefficients modal_expand_incident(const CurrentDensity& j,
                                               double omega, int n_max,
                                               double radial_tol = 1e-11) {
  if (omega <= 0.0)
    throw invalid_parameter("modal_expand_incident: omega must be > 0");
  if (n_max < 1 || n_max > sf::order_cap())
    throw invalid_parameter("modal_expand_incident: n_max out of range");

  // Angular rule exact for conj(Y_nm) times the degree-1 content of the
  // source projections; only the radial order needs adaptation.
  auto sph = quad::sphere_rule(n_max / 2 + 3, n_max + 5);
  const std::size_t n_sph = sph.points.size();

  // Cache conj(Y_nm) at the angular nodes.
  std::vector<std::vector<complexd>> conj_y(n_sph);
  auto flat = [n_max](int n, int m) {
    return static_cast<std::size_t>(n) * n - 1 + (m + n);
  };
  for (std::size_t is = 0; is < n_sph; ++is) {
    conj_y[is].resize(static_cast<std::size_t>(n_max) * (n_max + 2));
    sf::VshEvaluator vsh(n_max, sph.points[is]);
    for (int n = 1; n <= n_max; ++n)
      for (int m = -n; m <= n; ++m)
        conj_y[is][flat(n, m)] = std::conj(vsh.harmonic(n, m));
  }

  auto integrate = [&](int nr) {
    std::vector<complexd> ite(static_cast<std::size_t>(n_max) * (n_max + 2),
                              complexd{0, 0});
    std::vector<complexd> itm = ite;
    auto radial = quad::gauss_legendre(nr, j.r_in(), j.r_out());
    for (std::size_t ir = 0; ir < radial.nodes.size(); ++ir) {
      double r = radial.nodes[ir];
      double wr = radial.weights[ir] * r * r;
      auto [h, dh] = sf::sph_h1n_table(n_max, complexd(omega * r, 0.0));
      for (std::size_t is = 0; is < n_sph; ++is) {
        Vec3 y = r * sph.points[is];
        double w = wr * sph.weights[is];
        double ydotj = y.dot(j(y));
        double ydotc = y.dot(j.curl(y));
        if (ydotj == 0.0 && ydotc == 0.0) continue;
        for (int n = 1; n <= n_max; ++n)
          for (int m = -n; m <= n; ++m) {
            complexd base = w * h[n] * conj_y[is][flat(n, m)];
            ite[flat(n, m)] += base * ydotc;
            itm[flat(n, m)] += base * ydotj;
          }
      }
    }
    return std::make_pair(ite, itm);
  };

  int nr = 24;
  auto [ite, itm] = integrate(nr);
  for (int pass = 0; pass < 5; ++pass) {
    auto [ite2, itm2] = integrate(2 * nr);
    double num = 0, den = 1e-300;
    for (std::size_t i = 0; i < ite.size(); ++i) {
      num += std::norm(ite2[i] - ite[i]) + std::norm(itm2[i] - itm[i]);
      den += std::norm(ite2[i]) + std::norm(itm2[i]);
    }
    ite = std::move(ite2);
    itm = std::move(itm2);
    nr *= 2;
    if (std::sqrt(num / den) < radial_tol) break;
  }

  ModalCoefficients out(n_max, sf::WaveKind::regular);
  for (int n = 1; n <= n_max; ++n) {
    double nn = double(n) * (n + 1.0);
    for (int m = -n; m <= n; ++m) {
      out.at(n, m, sf::Polarization::TE) = omega * omega / nn * ite[flat(n, m)];
      out.at(n, m, sf::Polarization::TM) =
          -omega * omega * omega / nn * itm[flat(n, m)];
    }
  }
  return out;
}

/// Classical multipole coefficients of the unit plane wave p exp(i omega d.x):
///   a_TE = 4 pi i^n / sqrt(n(n+1)) conj(C_nm(d)) . p
///   a_TM = -4 pi i^{n+1} / sqrt(n(n+1)) conj(B_nm(d)) . p
inline ModalCoefficients plane_wave_coeffs(const Vec3& direction,
                                           const Vec3& polarization,
                                           double omega, int n_max) {
  if (omega <= 0.0)
    throw invalid_parameter("plane_wave_coeffs: omega must be > 0");
  if (n_max < 1 || n_max > sf::order_cap())
    throw invalid_parameter("plane_wave_coeffs: n_max out of range");
  if (std::abs(direction.norm() - 1.0) > 1e-12)
    throw invalid_parameter("plane_wave_coeffs: |direction| must be 1");
  if (std::abs(direction.dot(polarization)) > 1e-12 * polarization.norm())
    throw invalid_parameter(
        "plane_wave_coeffs: polarization must be orthogonal to direction");

  ModalCoefficients out(n_max, sf::WaveKind::regular);
  sf::VshEvaluator vsh(n_max, direction);
  Vec3c p = polarization.cast<complexd>();
  complexd i_pow{1.0, 0.0};
  for (int n = 1; n <= n_max; ++n) {
    i_pow *= iu;  // i^n
    double kap = std::sqrt(double(n) * (n + 1.0));
    for (int m = -n; m <= n; ++m) {
      sf::VshTriple a = vsh.triple(n, m);
      // Eigen's dot conjugates its first argument: a.C.dot(p) = conj(C) . p.
      out.at(n, m, sf::Polarization::TE) = 4.0 * pi * i_pow / kap * a.C.dot(p);
      out.at(n, m, sf::Polarization::TM) =
          -4.0 * pi * i_pow * iu / kap * a.B.dot(p);
    }
  }
  return out;
}

}  // namespace cloaksim
