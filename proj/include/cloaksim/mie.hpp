#pragma once

#include <atomic>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "cloaksim/core.hpp"
#include "cloaksim/modal.hpp"
#include "cloaksim/quadrature.hpp"
#include "cloaksim/sources.hpp"
#include "cloaksim/special_functions.hpp"
#include "cloaksim/transform.hpp"

namespace cloaksim {

/// Isotropic material data of one shell.
struct ShellMaterial {
  double eps = 1.0;
  double mu = 1.0;
  double sigma = 0.0;
};

/// Concentric isotropic shells: interface radii r_1 < ... < r_L with one
/// material per enclosed region; the exterior is vacuum. Region j lies
/// between r_j and r_{j+1} (region 0 contains the origin).
class RadialLayeredMedium {
 public:
  RadialLayeredMedium() = default;

  RadialLayeredMedium(std::vector<double> radii,
                      std::vector<ShellMaterial> materials)
      : radii_(std::move(radii)), materials_(std::move(materials)) {
    if (materials_.size() != radii_.size())
      throw invalid_parameter(
          "RadialLayeredMedium: one material per interface radius");
    double prev = 0.0;
    for (double r : radii_) {
      if (!(r > prev))
        throw invalid_parameter(
            "RadialLayeredMedium: radii must be strictly increasing and > 0");
      prev = r;
    }
    for (const auto& m : materials_) {
      if (m.eps <= 0.0 || m.mu <= 0.0 || m.sigma < 0.0)
        throw invalid_parameter(
            "RadialLayeredMedium: require eps, mu > 0 and sigma >= 0");
    }
  }

  static RadialLayeredMedium vacuum() { return RadialLayeredMedium(); }

  std::size_t interface_count() const { return radii_.size(); }
  const std::vector<double>& radii() const { return radii_; }

  /// Material of region j (j == interface_count() is the vacuum exterior).
  ShellMaterial material(std::size_t region) const {
    if (region >= materials_.size()) return ShellMaterial{};
    return materials_[region];
  }

  complexd effective_eps(std::size_t region, double omega) const {
    ShellMaterial m = material(region);
    return complexd(m.eps, m.sigma / omega);
  }

  /// Wavenumber of region j at omega, on the Im k >= 0 branch.
  complexd wavenumber(std::size_t region, double omega) const {
    return omega * sf::sqrt_upper(effective_eps(region, omega) *
                                  complexd(material(region).mu, 0.0));
  }

  /// Wave admittance Y = k / (omega mu) of region j.
  complexd admittance(std::size_t region, double omega) const {
    return wavenumber(region, omega) / (omega * material(region).mu);
  }

  /// Region index containing x; throws on interface points.
  std::size_t region_of(double r) const {
    for (std::size_t i = 0; i < radii_.size(); ++i) {
      if (std::abs(r - radii_[i]) <= 1e-13 * std::max(1.0, radii_[i]))
        throw interface_point_error(
            "RadialLayeredMedium: point on interface sphere");
      if (r < radii_[i]) return i;
    }
    return radii_.size();
  }

  bool is_vacuum() const {
    for (const auto& m : materials_)
      if (m.eps != 1.0 || m.mu != 1.0 || m.sigma != 0.0) return false;
    return true;
  }

 private:
  std::vector<double> radii_;
  std::vector<ShellMaterial> materials_;
};

/// The small-inclusion medium of the regularized cloak: core B_{rho/2} with
/// (eps_O/rho, mu_O/rho, 0) and damping shell B_rho \ B_{rho/2} with
/// (1/rho, 1/rho, sigma/rho).
inline RadialLayeredMedium small_inclusion_medium(const MediumDescriptor& d) {
  d.validate();
  std::vector<double> radii{0.5 * d.rho, d.rho};
  std::vector<ShellMaterial> mats{
      {d.eps_core / d.rho, d.mu_core / d.rho, 0.0},
      {1.0 / d.rho, 1.0 / d.rho, d.loss_sigma / d.rho}};
  return RadialLayeredMedium(std::move(radii), std::move(mats));
}

struct SolveOptions {
  double tail_tol = 1e-10;    // scattered-tail truncation criterion
  double cond_warn = 1e12;    // per-mode condition number warning threshold
  bool check_tail = true;
  double scale_trigger = 30.0;  // |Im k r| above which basis scaling kicks in
};

struct ModeDiagnostics {
  int n = 0;
  sf::Polarization pol = sf::Polarization::TE;
  double condition_number = 0.0;
  /// Max coefficient difference between the chained and the dense solve,
  /// relative to the mode's unit-incident coefficient vector.
  double dual_path_residual = 0.0;
};

/// Global counter of modal solves (used to assert solve-once-per-omega
/// reuse in the synthesis pipeline).
inline std::atomic<long>& solve_counter() {
  static std::atomic<long> counter{0};
  return counter;
}

/// Frequency-domain solution of the transmission problem: per-shell modal
/// coefficients plus the exterior incident/scattered split. Immutable after
/// construction; shareable across threads.
struct FrequencySolution {
  double omega = 0.0;
  RadialLayeredMedium medium;
  ModalCoefficients incident;   // regular waves, valid in B_2
  ModalCoefficients scattered;  // outgoing waves, exterior
  std::vector<ModalCoefficients> shell_regular;
  std::vector<ModalCoefficients> shell_outgoing;  // innermost stays zero
  /// Per-region basis rescaling exponents (deep-lossy safety): the physical
  /// coefficient is stored_coefficient * exp(scale_log).
  std::vector<double> scale_log_regular;
  std::vector<double> scale_log_outgoing;
  std::vector<ModeDiagnostics> diagnostics;
  std::vector<std::string> warnings;

  double max_condition_number() const {
    double c = 0;
    for (const auto& d : diagnostics) c = std::max(c, d.condition_number);
    return c;
  }
  double max_dual_path_residual() const {
    double c = 0;
    for (const auto& d : diagnostics) c = std::max(c, d.dual_path_residual);
    return c;
  }
};

namespace detail {

// Tangential-continuity interface matrix of one region at radius a.
// Columns: (regular, outgoing) basis; rows: (E_tan, H_tan) coefficients
// after the common geometric factors cancel across the interface.
//   TE: [ psi_n(ka)/k,  xi_n(ka)/k  ;  psi_n'(ka)/mu,  xi_n'(ka)/mu ]
//   TM: [ psi_n'(ka)/k, xi_n'(ka)/k ;  psi_n(ka)/mu,   xi_n(ka)/mu  ]
inline Eigen::Matrix2cd interface_matrix(int n, sf::Polarization pol,
                                         complexd k, double mu, double a,
                                         double scale_log_reg,
                                         double scale_log_out) {
  auto psi = sf::riccati_psi(n, k * a);
  auto xi = sf::riccati_xi(n, k * a);
  double sreg = std::exp(scale_log_reg);
  double sout = std::exp(scale_log_out);
  Eigen::Matrix2cd w;
  if (pol == sf::Polarization::TE) {
    w << psi.value[n] / k * sreg, xi.value[n] / k * sout,
        psi.derivative[n] / mu * sreg, xi.derivative[n] / mu * sout;
  } else {
    w << psi.derivative[n] / k * sreg, xi.derivative[n] / k * sout,
        psi.value[n] / mu * sreg, xi.value[n] / mu * sout;
  }
  return w;
}

}  // namespace detail

/// Solves the transmission problem mode by mode. For each (n, pol) the
/// 2x2-per-interface chained system is solved and cross-checked against a
/// dense solve of the full interface system (two independent linear-algebra
/// paths); per-mode condition numbers are recorded, with a warning above
/// options.cond_warn.
inline FrequencySolution solve_modes(const RadialLayeredMedium& medium,
                                     const ModalCoefficients& incident,
                                     double omega, SolveOptions options = {}) {
  if (omega <= 0.0) throw invalid_parameter("solve_modes: omega must be > 0");
  if (incident.kind() != sf::WaveKind::regular)
    throw invalid_parameter("solve_modes: incident waves must be regular");
  solve_counter()++;

  const int n_max = incident.n_max();
  const std::size_t L = medium.interface_count();

  FrequencySolution sol;
  sol.omega = omega;
  sol.medium = medium;
  sol.incident = incident;
  sol.scattered = ModalCoefficients(n_max, sf::WaveKind::outgoing);
  sol.shell_regular.assign(L, ModalCoefficients(n_max, sf::WaveKind::regular));
  sol.shell_outgoing.assign(L,
                            ModalCoefficients(n_max, sf::WaveKind::outgoing));
  sol.scale_log_regular.assign(L, 0.0);
  sol.scale_log_outgoing.assign(L, 0.0);
  if (L == 0 || n_max < 1) return sol;

  // Per-region wavenumbers and deep-lossy rescaling exponents. Regions are
  // 0..L interior..exterior; exterior (vacuum, real k) is never rescaled.
  std::vector<complexd> k(L + 1);
  std::vector<double> mu(L + 1);
  for (std::size_t j = 0; j <= L; ++j) {
    k[j] = medium.wavenumber(j, omega);
    mu[j] = medium.material(j).mu;
  }
  for (std::size_t j = 0; j < L; ++j) {
    double a_out = medium.radii()[j];               // outer radius of region j
    double b_in = (j == 0) ? 0.0 : medium.radii()[j - 1];
    if (k[j].imag() * a_out > options.scale_trigger) {
      sol.scale_log_regular[j] = -k[j].imag() * a_out;
      sol.scale_log_outgoing[j] = k[j].imag() * b_in;
    }
  }

  for (int n = 1; n <= n_max; ++n) {
    for (sf::Polarization pol : {sf::Polarization::TE, sf::Polarization::TM}) {
      // Per-interface matrices for both adjacent regions.
      std::vector<Eigen::Matrix2cd> w_in(L), w_out(L);
      for (std::size_t i = 0; i < L; ++i) {
        double a = medium.radii()[i];
        double slr_in = sol.scale_log_regular[i];
        double slo_in = sol.scale_log_outgoing[i];
        double slr_out = (i + 1 < L) ? sol.scale_log_regular[i + 1] : 0.0;
        double slo_out = (i + 1 < L) ? sol.scale_log_outgoing[i + 1] : 0.0;
        w_in[i] =
            detail::interface_matrix(n, pol, k[i], mu[i], a, slr_in, slo_in);
        w_out[i] = detail::interface_matrix(n, pol, k[i + 1], mu[i + 1], a,
                                            slr_out, slo_out);
      }

      // Chained path: unit regular coefficient in the core, propagate out.
      Eigen::Vector2cd v(1.0, 0.0);
      std::vector<Eigen::Vector2cd> chain(L + 1);
      chain[0] = v;
      for (std::size_t i = 0; i < L; ++i) {
        v = w_out[i].partialPivLu().solve(w_in[i] * v);
        chain[i + 1] = v;
      }
      const complexd v_reg_ext = chain[L](0);

      // Dense path: all 2L unknowns at once, unit incident on the right.
      // Unknown layout: [c0_reg, c1_reg, c1_out, ..., c(L-1)_out, cL_out].
      const int dim = static_cast<int>(2 * L);
      Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(dim, dim);
      Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(dim);
      auto col_reg = [&](std::size_t region) -> int {
        return region == 0 ? 0 : static_cast<int>(2 * region - 1);
      };
      auto col_out = [&](std::size_t region) -> int {
        // The exterior has no regular unknown, so its outgoing column packs
        // down to the last slot.
        return region == L ? dim - 1 : static_cast<int>(2 * region);
      };
      for (std::size_t i = 0; i < L; ++i) {
        int r0 = static_cast<int>(2 * i);
        A(r0, col_reg(i)) += w_in[i](0, 0);
        A(r0 + 1, col_reg(i)) += w_in[i](1, 0);
        if (i > 0) {
          A(r0, col_out(i)) += w_in[i](0, 1);
          A(r0 + 1, col_out(i)) += w_in[i](1, 1);
        }
        if (i + 1 < L) {
          A(r0, col_reg(i + 1)) -= w_out[i](0, 0);
          A(r0 + 1, col_reg(i + 1)) -= w_out[i](1, 0);
        } else {
          rhs(r0) += w_out[i](0, 0);  // known unit incident coefficient
          rhs(r0 + 1) += w_out[i](1, 0);
        }
        A(r0, col_out(i + 1)) -= w_out[i](0, 1);
        A(r0 + 1, col_out(i + 1)) -= w_out[i](1, 1);
      }
      Eigen::VectorXcd x_dense = A.partialPivLu().solve(rhs);

      Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A);
      double smin = svd.singularValues()(svd.singularValues().size() - 1);
      double cond = smin > 0 ? svd.singularValues()(0) / smin
                             : std::numeric_limits<double>::infinity();

      // Chained result normalized to unit incident.
      Eigen::VectorXcd x_chain(dim);
      x_chain(0) = chain[0](0) / v_reg_ext;
      for (std::size_t j = 1; j < L; ++j) {
        x_chain(col_reg(j)) = chain[j](0) / v_reg_ext;
        x_chain(col_out(j)) = chain[j](1) / v_reg_ext;
      }
      x_chain(col_out(L)) = chain[L](1) / v_reg_ext;

      double scale = std::max({x_chain.norm(), x_dense.norm(), 1e-300});
      double dual = (x_chain - x_dense).cwiseAbs().maxCoeff() / scale;

      ModeDiagnostics diag;
      diag.n = n;
      diag.pol = pol;
      diag.condition_number = cond;
      diag.dual_path_residual = dual;
      sol.diagnostics.push_back(diag);
      if (!(cond < options.cond_warn))
        sol.warnings.push_back("ill-conditioned mode (n=" + std::to_string(n) +
                               ", pol=" +
                               (pol == sf::Polarization::TE ? "TE" : "TM") +
                               "): cond=" + std::to_string(cond));

      // Populate coefficients for every order m of this degree.
      for (int m = -n; m <= n; ++m) {
        complexd c_inc = incident.at(n, m, pol);
        if (c_inc == complexd{0, 0}) continue;
        sol.scattered.at(n, m, pol) = c_inc * x_chain(col_out(L));
        for (std::size_t j = 0; j < L; ++j) {
          sol.shell_regular[j].at(n, m, pol) = c_inc * x_chain(col_reg(j));
          if (j > 0)
            sol.shell_outgoing[j].at(n, m, pol) = c_inc * x_chain(col_out(j));
        }
      }
    }
  }

  if (options.check_tail && n_max >= 3) {
    double total = sol.scattered.norm();
    if (total > 0) {
      double tail = std::hypot(sol.scattered.degree_norm(n_max),
                               sol.scattered.degree_norm(n_max - 1));
      if (tail > options.tail_tol * total)
        throw truncation_error(
            "solve_modes: scattered series not converged at n_max=" +
            std::to_string(n_max));
    }
  }
  return sol;
}

/// Evaluates the total field at x: shell-appropriate modal series inside,
/// incident + scattered outside the outermost interface. H carries the
/// physical admittance of the local region.
inline std::pair<Vec3c, Vec3c> eval_field(const FrequencySolution& sol,
                                          const Vec3& x) {
  double r = x.norm();
  std::size_t region = sol.medium.region_of(r);
  const std::size_t L = sol.medium.interface_count();
  if (region == L) {
    auto [ei, hi] = sol.incident.evaluate(complexd(sol.omega, 0.0), x);
    auto [es, hs] = sol.scattered.evaluate(complexd(sol.omega, 0.0), x);
    return {ei + es, hi + hs};
  }
  complexd k = sol.medium.wavenumber(region, sol.omega);
  complexd y = sol.medium.admittance(region, sol.omega);
  auto [er, hr] = sol.shell_regular[region].evaluate(k, x);
  Vec3c e = std::exp(sol.scale_log_regular[region]) * er;
  Vec3c h = std::exp(sol.scale_log_regular[region]) * hr;
  if (region > 0) {
    auto [eo, ho] = sol.shell_outgoing[region].evaluate(k, x);
    e += std::exp(sol.scale_log_outgoing[region]) * eo;
    h += std::exp(sol.scale_log_outgoing[region]) * ho;
  }
  return {e, Vec3c(y * h)};
}

/// Spec-shaped overload; the medium must be the one the solution was built
/// with (kept for interface parity, validated cheaply).
inline std::pair<Vec3c, Vec3c> eval_field(const FrequencySolution& sol,
                                          const RadialLayeredMedium& medium,
                                          const Vec3& x) {
  if (medium.radii() != sol.medium.radii())
    throw invalid_parameter("eval_field: medium does not match solution");
  return eval_field(sol, x);
}

/// Leading 1/|x| far-field amplitudes: E(x) ~ (e^{ik r}/r) F_E(x_hat), and
/// likewise for H; F_H x x_hat = F_E realizes the radiation condition in the
/// amplitude.
inline std::pair<Vec3c, Vec3c> scattered_farfield(const FrequencySolution& sol,
                                                  const Vec3& direction) {
  if (std::abs(direction.norm() - 1.0) > 1e-12)
    throw invalid_parameter("scattered_farfield: |direction| must be 1");
  const int n_max = sol.scattered.n_max();
  Vec3c fe = Vec3c::Zero(), fh = Vec3c::Zero();
  if (n_max < 1) return {fe, fh};
  sf::VshEvaluator vsh(n_max, direction);
  const double k = sol.omega;
  complexd minus_i_pow{1.0, 0.0};  // (-i)^n
  for (int n = 1; n <= n_max; ++n) {
    minus_i_pow *= -iu;
    double kap = std::sqrt(double(n) * (n + 1.0));
    for (int m = -n; m <= n; ++m) {
      complexd cte = sol.scattered.at(n, m, sf::Polarization::TE);
      complexd ctm = sol.scattered.at(n, m, sf::Polarization::TM);
      if (cte == complexd{0, 0} && ctm == complexd{0, 0}) continue;
      sf::VshTriple a = vsh.triple(n, m);
      fe += kap / k * (cte * minus_i_pow * (-iu) * a.C + ctm * minus_i_pow * a.B);
      fh += kap / k *
            (cte * minus_i_pow * (-iu) * a.B - ctm * minus_i_pow * a.C);
    }
  }
  return {fe, fh};
}

/// Difference-field evaluator: (E_rho, H_rho) - (E, H) outside the inclusion
/// (pure scattered series there) and (E_rho, H_rho) itself inside B_rho.
inline FieldPair difference_field(const FrequencySolution& sol,
                                  const ModalCoefficients& incident) {
  if (incident.n_max() != sol.incident.n_max() ||
      incident.kind() != sf::WaveKind::regular)
    throw invalid_parameter("difference_field: incident data mismatch");
  for (int n = 1; n <= incident.n_max(); ++n)
    for (int m = -n; m <= n; ++m)
      for (auto pol : {sf::Polarization::TE, sf::Polarization::TM})
        if (std::abs(incident.at(n, m, pol) - sol.incident.at(n, m, pol)) >
            1e-12 * (1.0 + std::abs(sol.incident.at(n, m, pol))))
          throw invalid_parameter(
              "difference_field: incident coefficients do not match solution");

  double r_out = sol.medium.interface_count() == 0
                     ? 0.0
                     : sol.medium.radii().back();
  return [sol, r_out](const Vec3& x) -> std::pair<Vec3c, Vec3c> {
    double r = x.norm();
    if (r > r_out)
      return sol.scattered.evaluate(complexd(sol.omega, 0.0), x);
    return eval_field(sol, x);
  };
}

/// Max over a sphere of |H x x - |x| E| for the scattered field; decays like
/// C/R for a radiating series.
inline double silver_muller_residual(const FrequencySolution& sol, double R,
                                     int n_theta = 12, int n_phi = 24) {
  auto rule = quad::sphere_rule(n_theta, n_phi);
  double worst = 0.0;
  for (const auto& p : rule.points) {
    Vec3 x = R * p;
    auto [e, h] = sol.scattered.evaluate(complexd(sol.omega, 0.0), x);
    Vec3c res = cross_c(h, x.cast<complexd>()) - R * e;
    worst = std::max(worst, res.norm());
  }
  return worst;
}

/// Re of the Poynting flux of a field pair through the sphere |x| = R.
inline double poynting_flux(const FieldPair& field, double R, int n_theta = 16,
                            int n_phi = 32) {
  auto rule = quad::sphere_rule(n_theta, n_phi);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.points.size(); ++i) {
    Vec3 x = R * rule.points[i];
    auto [e, h] = field(x);
    Vec3c s = cross_c(e, h.conjugate());
    acc += rule.weights[i] * s.real().dot(rule.points[i]);
  }
  return acc * R * R;
}

}  // namespace cloaksim
