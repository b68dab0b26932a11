#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <utility>
#include <vector>

#include "cloaksim/core.hpp"

namespace cloaksim::sf {

/// Configurable hard cap on multipole degree (guards runaway truncation).
inline int& order_cap() {
  static int cap = 60;
  return cap;
}

enum class BesselKind { j, y, h1 };

/// Principal square root folded into the upper half plane (Im >= 0),
/// the branch of decaying outgoing waves in lossy media.
inline complexd sqrt_upper(complexd z) {
  complexd s = std::sqrt(z);
  return s.imag() < 0.0 ? -s : s;
}

namespace detail {

inline void check_order(int n_max) {
  if (n_max < 0) throw invalid_parameter("spherical_bessel: n must be >= 0");
  if (n_max > order_cap())
    throw invalid_parameter("spherical_bessel: n exceeds configured cap");
}

inline void check_argument(complexd z) {
  if (std::abs(z.imag()) > 600.0)
    throw invalid_parameter("spherical_bessel: |Im z| beyond supported range");
}

// Small-|z| Taylor series of j_n; relative error < 1e-25 for |z| < 1e-3.
inline complexd jn_series(int n, complexd z) {
  double dfact = 1.0;  // (2n+1)!!
  for (int k = 1; k <= n; ++k) dfact *= 2.0 * k + 1.0;
  complexd zn = 1.0;
  for (int k = 0; k < n; ++k) zn *= z;
  complexd t = 0.5 * z * z;
  complexd sum = 1.0 - t / (2.0 * n + 3.0) +
                 t * t / (2.0 * (2.0 * n + 3.0) * (2.0 * n + 5.0));
  return zn / dfact * sum;
}

}  // namespace detail

/// j_0..j_{n_max} and derivatives at complex z. Downward (Miller) recurrence
/// normalized against the closed forms of j_0 / j_1, with a series branch for
/// small arguments; stable for n well beyond |z|.
inline std::pair<std::vector<complexd>, std::vector<complexd>> sph_jn_table(
    int n_max, complexd z) {
  detail::check_order(n_max);
  detail::check_argument(z);
  std::vector<complexd> j(n_max + 1), dj(n_max + 1);
  const double az = std::abs(z);

  if (az == 0.0) {
    j[0] = 1.0;
    if (n_max >= 1) dj[1] = 1.0 / 3.0;
    return {j, dj};
  }

  if (az < 1e-3) {
    for (int n = 0; n <= n_max; ++n) j[n] = detail::jn_series(n, z);
    dj[0] = -detail::jn_series(1, z);
    for (int n = 1; n <= n_max; ++n)
      dj[n] = (double(n) / z) * j[n] - detail::jn_series(n + 1, z);
    return {j, dj};
  }

  const int n_top = std::max(n_max, 1);
  const int n_eff = std::max<int>(n_top, static_cast<int>(std::ceil(az)));
  const int n_start =
      n_eff + 16 + static_cast<int>(std::ceil(2.0 * std::sqrt(double(n_eff))));
  std::vector<complexd> raw(n_top + 1);
  complexd fk{0.0, 0.0};
  complexd fkm{1e-280, 0.0};
  for (int k = n_start; k >= 1; --k) {
    complexd fprev = (2.0 * k + 1.0) / z * fkm - fk;
    fk = fkm;
    fkm = fprev;
    if (k - 1 <= n_top) raw[k - 1] = fprev;
    if (std::abs(fprev) > 1e280) {
      const double s = 1e-280;
      fk *= s;
      fkm *= s;
      for (int i = k - 1; i <= n_top; ++i) raw[i] *= s;
    }
  }
  const complexd j0 = std::sin(z) / z;
  const complexd j1 = std::sin(z) / (z * z) - std::cos(z) / z;
  // Normalize against whichever closed form carries the larger magnitude;
  // the j_1 form loses digits to cancellation only when j_0 dominates.
  const complexd scale =
      std::abs(j0) >= std::abs(j1) ? j0 / raw[0] : j1 / raw[1];
  for (int n = 0; n <= n_max; ++n) j[n] = raw[n] * scale;

  dj[0] = -(raw[1] * scale);
  for (int n = 1; n <= n_max; ++n) dj[n] = j[n - 1] - (n + 1.0) / z * j[n];
  return {j, dj};
}

/// y_0..y_{n_max} and derivatives; upward recurrence (y is the dominant
/// solution for growing order, so upward is the stable direction).
inline std::pair<std::vector<complexd>, std::vector<complexd>> sph_yn_table(
    int n_max, complexd z) {
  detail::check_order(n_max);
  detail::check_argument(z);
  if (std::abs(z) == 0.0)
    throw singularity_error("sph_yn_table: y_n is singular at z = 0");
  std::vector<complexd> y(n_max + 1), dy(n_max + 1);
  y[0] = -std::cos(z) / z;
  if (n_max >= 1) y[1] = -std::cos(z) / (z * z) - std::sin(z) / z;
  for (int n = 2; n <= n_max; ++n)
    y[n] = (2.0 * n - 1.0) / z * y[n - 1] - y[n - 2];
  dy[0] = n_max >= 1 ? -y[1] : -(-std::cos(z) / (z * z) - std::sin(z) / z);
  for (int n = 1; n <= n_max; ++n) dy[n] = y[n - 1] - (n + 1.0) / z * y[n];
  return {y, dy};
}

/// h1_0..h1_{n_max} and derivatives, by direct upward recurrence on the
/// closed forms (avoids the j + i*y cancellation for Im z > 0).
inline std::pair<std::vector<complexd>, std::vector<complexd>> sph_h1n_table(
    int n_max, complexd z) {
  detail::check_order(n_max);
  detail::check_argument(z);
  if (std::abs(z) == 0.0)
    throw singularity_error("sph_h1n_table: h1_n is singular at z = 0");
  std::vector<complexd> h(n_max + 1), dh(n_max + 1);
  const complexd eiz = std::exp(iu * z);
  h[0] = -iu * eiz / z;
  if (n_max >= 1) h[1] = -eiz / z * (1.0 + iu / z);
  for (int n = 2; n <= n_max; ++n)
    h[n] = (2.0 * n - 1.0) / z * h[n - 1] - h[n - 2];
  dh[0] = n_max >= 1 ? -h[1] : -(-eiz / z * (1.0 + iu / z));
  for (int n = 1; n <= n_max; ++n) dh[n] = h[n - 1] - (n + 1.0) / z * h[n];
  return {h, dh};
}

struct BesselValue {
  complexd value;
  complexd derivative;
};

inline BesselValue spherical_bessel(BesselKind kind, int n, complexd z) {
  switch (kind) {
    case BesselKind::j: {
      auto [v, d] = sph_jn_table(n, z);
      return {v[n], d[n]};
    }
    case BesselKind::y: {
      auto [v, d] = sph_yn_table(n, z);
      return {v[n], d[n]};
    }
    default: {
      auto [v, d] = sph_h1n_table(n, z);
      return {v[n], d[n]};
    }
  }
}

/// Riccati-Bessel pair psi_n(z) = z j_n(z) (with derivative) for n = 0..n_max.
struct RiccatiTable {
  std::vector<complexd> value;
  std::vector<complexd> derivative;
};

inline RiccatiTable riccati_psi(int n_max, complexd z) {
  auto [j, dj] = sph_jn_table(n_max, z);
  RiccatiTable t;
  t.value.resize(n_max + 1);
  t.derivative.resize(n_max + 1);
  for (int n = 0; n <= n_max; ++n) {
    t.value[n] = z * j[n];
    t.derivative[n] = j[n] + z * dj[n];
  }
  return t;
}

inline RiccatiTable riccati_xi(int n_max, complexd z) {
  auto [h, dh] = sph_h1n_table(n_max, z);
  RiccatiTable t;
  t.value.resize(n_max + 1);
  t.derivative.resize(n_max + 1);
  for (int n = 0; n <= n_max; ++n) {
    t.value[n] = z * h[n];
    t.derivative[n] = h[n] + z * dh[n];
  }
  return t;
}

// ---------------------------------------------------------------------------
// Normalized associated Legendre functions and the pole-safe angular pair
//   pi_n^m  = m * Pbar_n^m / sin(theta)
//   tau_n^m = d Pbar_n^m / d theta
// Normalization: int_{S^2} |Pbar_n^m e^{im phi}|^2 dOmega = 1 (Condon-Shortley
// phase included).
// ---------------------------------------------------------------------------

struct AngularTable {
  int n_max;
  std::vector<double> P;    // Pbar_n^m(cos theta), m >= 0
  std::vector<double> pim;  // m Pbar / sin(theta)
  std::vector<double> tau;  // d Pbar / d theta
  static std::size_t idx(int n, int m) {
    return static_cast<std::size_t>(n) * (n + 1) / 2 + m;
  }
};

inline AngularTable angular_table(int n_max, double cos_theta) {
  if (n_max < 0) throw invalid_parameter("angular_table: n_max must be >= 0");
  AngularTable t;
  t.n_max = n_max;
  const std::size_t sz = AngularTable::idx(n_max, n_max) + 1;
  t.P.assign(sz, 0.0);
  t.pim.assign(sz, 0.0);
  t.tau.assign(sz, 0.0);
  const double x = cos_theta;
  const double s = std::sqrt(std::max(0.0, 1.0 - x * x));

  // Pbar table: diagonal seed then upward in n for each m.
  t.P[AngularTable::idx(0, 0)] = 1.0 / std::sqrt(4.0 * pi);
  for (int m = 1; m <= n_max; ++m)
    t.P[AngularTable::idx(m, m)] = -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) *
                                   s * t.P[AngularTable::idx(m - 1, m - 1)];
  for (int m = 0; m <= n_max; ++m) {
    if (m + 1 <= n_max)
      t.P[AngularTable::idx(m + 1, m)] =
          std::sqrt(2.0 * m + 3.0) * x * t.P[AngularTable::idx(m, m)];
    for (int n = m + 2; n <= n_max; ++n) {
      double a = std::sqrt((2.0 * n - 1.0) * (2.0 * n + 1.0) /
                           (double(n - m) * double(n + m)));
      double b = std::sqrt((2.0 * n + 1.0) * double(n - 1 - m) *
                           double(n - 1 + m) /
                           (double(n - m) * double(n + m) * (2.0 * n - 3.0)));
      t.P[AngularTable::idx(n, m)] = a * x * t.P[AngularTable::idx(n - 1, m)] -
                                     b * t.P[AngularTable::idx(n - 2, m)];
    }
  }

  // pi table: same recurrences applied to m Pbar_m^m / sin(theta), whose
  // diagonal seed carries sin^{m-1} and so stays finite at the poles.
  if (n_max >= 1) {
    double diag_over_sin = -std::sqrt(3.0 / 2.0) / std::sqrt(4.0 * pi);
    for (int m = 1; m <= n_max; ++m) {
      if (m >= 2)
        diag_over_sin *= -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s;
      t.pim[AngularTable::idx(m, m)] = m * diag_over_sin;
      if (m + 1 <= n_max)
        t.pim[AngularTable::idx(m + 1, m)] =
            std::sqrt(2.0 * m + 3.0) * x * t.pim[AngularTable::idx(m, m)];
      for (int n = m + 2; n <= n_max; ++n) {
        double a = std::sqrt((2.0 * n - 1.0) * (2.0 * n + 1.0) /
                             (double(n - m) * double(n + m)));
        double b = std::sqrt((2.0 * n + 1.0) * double(n - 1 - m) *
                             double(n - 1 + m) /
                             (double(n - m) * double(n + m) * (2.0 * n - 3.0)));
        t.pim[AngularTable::idx(n, m)] =
            a * x * t.pim[AngularTable::idx(n - 1, m)] -
            b * t.pim[AngularTable::idx(n - 2, m)];
      }
    }
  }

  // tau by the ladder identity; Pbar_n^{-1} = -Pbar_n^{1} covers m = 0.
  for (int n = 1; n <= n_max; ++n) {
    for (int m = 0; m <= n; ++m) {
      double up = (m + 1 <= n) ? t.P[AngularTable::idx(n, m + 1)] : 0.0;
      double down;
      if (m == 0)
        down = -t.P[AngularTable::idx(n, 1)];
      else
        down = t.P[AngularTable::idx(n, m - 1)];
      t.tau[AngularTable::idx(n, m)] =
          0.5 * (std::sqrt(double(n - m) * double(n + m + 1)) * up -
                 std::sqrt(double(n + m) * double(n - m + 1)) * down);
    }
  }
  return t;
}

/// Orthonormal spherical harmonic Y_n^m(direction), any sign of m.
inline complexd sph_harmonic(int n, int m, const Vec3& dir) {
  Vec3 u = dir.normalized();
  double ct = std::clamp(u.z(), -1.0, 1.0);
  double phi = std::atan2(u.y(), u.x());
  int ma = std::abs(m);
  AngularTable t = angular_table(n, ct);
  double p = t.P[AngularTable::idx(n, ma)];
  complexd e = std::exp(iu * double(m) * phi);
  if (m < 0 && (ma % 2 == 1)) p = -p;
  return p * e;
}

// ---------------------------------------------------------------------------
// Vector spherical harmonics and wave functions.
// ---------------------------------------------------------------------------

enum class Polarization { TE, TM };
enum class WaveKind { regular, outgoing };

/// Multipole index (n, m, polarization, wave kind); n >= 1 since Maxwell
/// fields carry no monopole term.
struct SphericalWaveIndex {
  int n;
  int m;
  Polarization pol;
  WaveKind kind;
  SphericalWaveIndex(int n_, int m_, Polarization p_, WaveKind k_)
      : n(n_), m(m_), pol(p_), kind(k_) {
    if (n < 1 || std::abs(m) > n)
      throw invalid_parameter("SphericalWaveIndex: require n >= 1, |m| <= n");
  }
};

struct VshTriple {
  Vec3c P;  // radial   Y r_hat
  Vec3c B;  // grad-type tangential harmonic
  Vec3c C;  // curl-type tangential harmonic
};

/// Evaluates the orthonormal triple (P,B,C) at a fixed direction for many
/// (n,m); the Legendre table is shared across the whole series.
class VshEvaluator {
 public:
  VshEvaluator(int n_max, const Vec3& x) : n_max_(n_max) {
    double r = x.norm();
    Vec3 u = r > 0 ? Vec3(x / r) : Vec3(0, 0, 1);
    double ct = std::clamp(u.z(), -1.0, 1.0);
    double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    double phi = (st < 1e-15) ? 0.0 : std::atan2(u.y(), u.x());
    double cp = std::cos(phi), sp = std::sin(phi);
    rhat_ = Vec3(st * cp, st * sp, ct);
    theta_hat_ = Vec3(ct * cp, ct * sp, -st);
    phi_hat_ = Vec3(-sp, cp, 0.0);
    phi_ = phi;
    table_ = angular_table(n_max, ct);
  }

  VshTriple triple(int n, int m) const {
    int ma = std::abs(m);
    double p = table_.P[AngularTable::idx(n, ma)];
    double tau = table_.tau[AngularTable::idx(n, ma)];
    double pim = table_.pim[AngularTable::idx(n, ma)];
    if (m < 0) {
      double sign = (ma % 2 == 1) ? -1.0 : 1.0;
      p *= sign;
      tau *= sign;
      pim *= -sign;
    }
    complexd e = std::exp(iu * double(m) * phi_);
    double kap = std::sqrt(double(n) * (n + 1.0));
    VshTriple out;
    out.P = (p * e) * rhat_.cast<complexd>();
    out.B = (e / kap) * (tau * theta_hat_.cast<complexd>() +
                         iu * pim * phi_hat_.cast<complexd>());
    out.C = (e / kap) * (iu * pim * theta_hat_.cast<complexd>() -
                         tau * phi_hat_.cast<complexd>());
    return out;
  }

  /// Scalar harmonic Y_n^m at the evaluator's direction.
  complexd harmonic(int n, int m) const {
    int ma = std::abs(m);
    double p = table_.P[AngularTable::idx(n, ma)];
    if (m < 0 && (ma % 2 == 1)) p = -p;
    return p * std::exp(iu * double(m) * phi_);
  }

  int n_max() const { return n_max_; }
  const Vec3& rhat() const { return rhat_; }

 private:
  int n_max_;
  Vec3 rhat_, theta_hat_, phi_hat_;
  double phi_ = 0;
  AngularTable table_;
};

/// Divergence-free vector spherical wave function. Returns the (E, H) pair
/// of the mode normalized to a unit-admittance medium: H = (ik)^{-1} curl E,
/// so that curl E = ik H and curl H = -ik E hold pointwise. In a material
/// shell the physical magnetic field is Y * H with Y = k / (omega mu).
inline std::pair<Vec3c, Vec3c> vector_wave(const SphericalWaveIndex& index,
                                           complexd k, const Vec3& x) {
  if (k == 0.0) throw invalid_parameter("vector_wave: k must be nonzero");
  double r = x.norm();
  if (index.kind == WaveKind::outgoing && r == 0.0)
    throw singularity_error("vector_wave: outgoing wave singular at origin");
  complexd u = k * r;

  complexd zn, dzn;
  if (index.kind == WaveKind::regular) {
    auto [v, d] = sph_jn_table(index.n, u);
    zn = v[index.n];
    dzn = d[index.n];
  } else {
    auto [v, d] = sph_h1n_table(index.n, u);
    zn = v[index.n];
    dzn = d[index.n];
  }

  VshEvaluator vsh(index.n, x);
  VshTriple a = vsh.triple(index.n, index.m);
  const double nn = double(index.n) * (index.n + 1.0);
  const double kap = std::sqrt(nn);

  // z_n(u)/u and (u z_n)'/u, with the regular-kind limits at u -> 0.
  complexd zn_over_u, ric_over_u;
  if (std::abs(u) < 1e-280) {
    zn_over_u = (index.n == 1) ? complexd(1.0 / 3.0) : complexd(0.0);
    ric_over_u = (index.n == 1) ? complexd(2.0 / 3.0) : complexd(0.0);
  } else {
    zn_over_u = zn / u;
    ric_over_u = zn / u + dzn;
  }

  Vec3c M = kap * zn * a.C;
  Vec3c N = nn * zn_over_u * a.P + kap * ric_over_u * a.B;

  if (index.pol == Polarization::TE) return {M, -iu * N};
  return {N, -iu * M};
}

// ---------------------------------------------------------------------------
// Scalar Green kernel for the Helmholtz operator.
// ---------------------------------------------------------------------------

/// G_k(x,y) = exp(ik|x-y|) / (4 pi |x-y|), Im k >= 0.
inline complexd green_scalar(complexd k, const Vec3& x, const Vec3& y) {
  if (k.imag() < 0.0)
    throw invalid_parameter("green_scalar: require Im k >= 0");
  double d = (x - y).norm();
  if (d == 0.0) throw singularity_error("green_scalar: x == y");
  return std::exp(iu * k * d) / (4.0 * pi * d);
}

/// grad_x G_k(x,y), analytic.
inline Vec3c green_grad_x(complexd k, const Vec3& x, const Vec3& y) {
  if (k.imag() < 0.0)
    throw invalid_parameter("green_grad_x: require Im k >= 0");
  Vec3 diff = x - y;
  double d = diff.norm();
  if (d == 0.0) throw singularity_error("green_grad_x: x == y");
  complexd g = std::exp(iu * k * d) / (4.0 * pi * d);
  complexd factor = (iu * k - 1.0 / d) * g / d;
  return factor * diff.cast<complexd>();
}

}  // namespace cloaksim::sf
