#pragma once

#include <vector>

#include "cloaksim/core.hpp"
#include "cloaksim/special_functions.hpp"

namespace cloaksim {

/// Dense container of complex expansion coefficients over
/// (n = 1..n_max, m = -n..n, polarization). The wave kind (regular or
/// outgoing) is a property of the whole set.
class ModalCoefficients {
 public:
  ModalCoefficients() = default;
  ModalCoefficients(int n_max, sf::WaveKind kind)
      : n_max_(n_max), kind_(kind), data_(2 * slots(n_max), complexd{0, 0}) {
    if (n_max < 0) throw invalid_parameter("ModalCoefficients: n_max >= 0");
  }

  int n_max() const { return n_max_; }
  sf::WaveKind kind() const { return kind_; }

  complexd& at(int n, int m, sf::Polarization pol) {
    return data_[index(n, m, pol)];
  }
  const complexd& at(int n, int m, sf::Polarization pol) const {
    return data_[index(n, m, pol)];
  }

  /// l2 norm of all coefficients.
  double norm() const {
    double s = 0;
    for (const auto& c : data_) s += std::norm(c);
    return std::sqrt(s);
  }

  /// l2 norm of the coefficients of one degree n (both polarizations).
  double degree_norm(int n) const {
    double s = 0;
    for (int m = -n; m <= n; ++m) {
      s += std::norm(at(n, m, sf::Polarization::TE));
      s += std::norm(at(n, m, sf::Polarization::TM));
    }
    return std::sqrt(s);
  }

  ModalCoefficients& operator*=(complexd a) {
    for (auto& c : data_) c *= a;
    return *this;
  }

  ModalCoefficients& operator+=(const ModalCoefficients& other) {
    if (other.n_max_ != n_max_ || other.kind_ != kind_)
      throw invalid_parameter("ModalCoefficients: incompatible operands");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
  }

  /// Field reconstruction: sums coefficient * vector_wave over all modes.
  /// Returns the (E, H) pair for a unit-admittance medium of wavenumber k.
  std::pair<Vec3c, Vec3c> evaluate(complexd k, const Vec3& x) const {
    Vec3c e = Vec3c::Zero(), h = Vec3c::Zero();
    if (n_max_ < 1) return {e, h};
    sf::VshEvaluator vsh(n_max_, x);
    double r = x.norm();
    complexd u = k * r;

    std::vector<complexd> zn(n_max_ + 1), dzn(n_max_ + 1);
    if (kind_ == sf::WaveKind::regular) {
      auto [v, d] = sf::sph_jn_table(n_max_, u);
      zn = v;
      dzn = d;
    } else {
      auto [v, d] = sf::sph_h1n_table(n_max_, u);
      zn = v;
      dzn = d;
    }

    for (int n = 1; n <= n_max_; ++n) {
      const double nn = double(n) * (n + 1.0);
      const double kap = std::sqrt(nn);
      complexd zn_over_u, ric_over_u;
      if (std::abs(u) < 1e-280) {
        zn_over_u = (n == 1) ? complexd(1.0 / 3.0) : complexd(0.0);
        ric_over_u = (n == 1) ? complexd(2.0 / 3.0) : complexd(0.0);
      } else {
        zn_over_u = zn[n] / u;
        ric_over_u = zn[n] / u + dzn[n];
      }
      for (int m = -n; m <= n; ++m) {
        complexd cte = at(n, m, sf::Polarization::TE);
        complexd ctm = at(n, m, sf::Polarization::TM);
        if (cte == complexd{0, 0} && ctm == complexd{0, 0}) continue;
        sf::VshTriple a = vsh.triple(n, m);
        Vec3c M = kap * zn[n] * a.C;
        Vec3c N = nn * zn_over_u * a.P + kap * ric_over_u * a.B;
        e += cte * M + ctm * N;
        h += -iu * (cte * N + ctm * M);
      }
    }
    return {e, h};
  }

 private:
  static std::size_t slots(int n_max) {
    return static_cast<std::size_t>(n_max) * (n_max + 2);
  }
  std::size_t index(int n, int m, sf::Polarization pol) const {
    if (n < 1 || n > n_max_ || std::abs(m) > n)
      throw invalid_parameter("ModalCoefficients: index out of range");
    std::size_t base = static_cast<std::size_t>(n) * n - 1 + (m + n);
    return (pol == sf::Polarization::TM ? slots(n_max_) : 0) + base;
  }

  int n_max_ = 0;
  sf::WaveKind kind_ = sf::WaveKind::regular;
  std::vector<complexd> data_;
};

}  // namespace cloaksim
