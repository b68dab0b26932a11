#pragma once

#include <cmath>
#include <functional>

#include "cloaksim/core.hpp"

namespace cloaksim {

/// Permittivity / permeability tensors and scalar conductivity at a point.
struct MaterialTensor {
  Mat3 eps = Mat3::Identity();
  Mat3 mu = Mat3::Identity();
  double sigma = 0.0;

  /// Effective complex permittivity eps + i sigma / omega * I.
  Mat3c effective_eps(double omega) const {
    if (omega <= 0.0)
      throw invalid_parameter("MaterialTensor: omega must be > 0");
    return eps.cast<complexd>() + (iu * sigma / omega) * Mat3c::Identity();
  }

  /// Ellipticity check: symmetric with eigenvalues in [1/lambda, lambda].
  bool is_elliptic(double lambda) const {
    if (lambda < 1.0) return false;
    auto check = [&](const Mat3& a) {
      if (!a.isApprox(a.transpose(), 1e-12)) return false;
      Eigen::SelfAdjointEigenSolver<Mat3> es(a);
      double lo = es.eigenvalues().minCoeff();
      double hi = es.eigenvalues().maxCoeff();
      return lo >= 1.0 / lambda - 1e-12 && hi <= lambda + 1e-12;
    };
    return sigma >= 0.0 && check(eps) && check(mu);
  }
};

/// The radial blow-up map: identity outside B_2, affine-radial in
/// B_2 \ B_rho, and x/rho inside B_rho, so B_rho inflates to B_1.
class BlowupMap {
 public:
  explicit BlowupMap(double rho) : rho_(rho) {
    if (!(rho > 0.0 && rho < 1.0))
      throw invalid_parameter("BlowupMap: rho must lie in (0,1)");
  }

  double rho() const { return rho_; }

  Vec3 forward(const Vec3& x) const {
    double r = x.norm();
    if (r >= 2.0) return x;
    if (r <= rho_) return x / rho_;
    double f = (2.0 - 2.0 * rho_) / (2.0 - rho_) + r / (2.0 - rho_);
    return (f / r) * x;
  }

  Vec3 inverse(const Vec3& y) const {
    double s = y.norm();
    if (s >= 2.0) return y;
    if (s <= 1.0) return rho_ * y;
    // invert the affine radial branch: s = a + b r with r in (rho, 2)
    double a = (2.0 - 2.0 * rho_) / (2.0 - rho_);
    double b = 1.0 / (2.0 - rho_);
    double r = (s - a) / b;
    return (r / s) * y;
  }

  /// Analytic Jacobian DF_rho(x). The branch is chosen by |x|; exactly on
  /// an interface sphere the one-sided value is ambiguous and an error is
  /// raised (callers displace to the side they mean).
  Mat3 jacobian(const Vec3& x) const {
    double r = x.norm();
    if (on_interface(r))
      throw interface_point_error("BlowupMap::jacobian: x on interface");
    if (r > 2.0) return Mat3::Identity();
    if (r < rho_) return Mat3::Identity() / rho_;
    double a = (2.0 - 2.0 * rho_) / (2.0 - rho_);
    double b = 1.0 / (2.0 - rho_);
    Vec3 u = x / r;
    Mat3 rad = u * u.transpose();
    return b * rad + ((a + b * r) / r) * (Mat3::Identity() - rad);
  }

  bool on_interface(double r) const {
    double tol = 1e-13 * std::max(1.0, r);
    return std::abs(r - rho_) <= tol || std::abs(r - 2.0) <= tol;
  }

 private:
  double rho_;
};

/// Differentiable map bundle used by the tensor / field transport below.
struct MapWithJacobian {
  std::function<Vec3(const Vec3&)> forward;
  std::function<Vec3(const Vec3&)> inverse;
  std::function<Mat3(const Vec3&)> jacobian;

  static MapWithJacobian identity() {
    return {[](const Vec3& x) { return x; }, [](const Vec3& y) { return y; },
            [](const Vec3&) { return Mat3::Identity(); }};
  }

  static MapWithJacobian scaling(double s) {
    if (s == 0.0) throw singular_map_error("scaling map: factor is zero");
    return {[s](const Vec3& x) { return Vec3(s * x); },
            [s](const Vec3& y) { return Vec3(y / s); },
            [s](const Vec3&) { return Mat3(s * Mat3::Identity()); }};
  }

  static MapWithJacobian blowup(const BlowupMap& f) {
    return {[f](const Vec3& x) { return f.forward(x); },
            [f](const Vec3& y) { return f.inverse(y); },
            [f](const Vec3& x) { return f.jacobian(x); }};
  }
};

/// Tensor push-forward F_*A = (DF A DF^T / |det DF|) o F^{-1}, the transport
/// under which the Maxwell material tensors move with a change of variables.
/// `A` is sampled in the preimage; the result is a field on the image.
inline std::function<Mat3(const Vec3&)> push_forward_tensor(
    std::function<Mat3(const Vec3&)> a, const MapWithJacobian& map) {
  return [a, map](const Vec3& y) -> Mat3 {
    Vec3 x = map.inverse(y);
    Mat3 df = map.jacobian(x);
    double det = df.determinant();
    if (std::abs(det) < 1e-300)
      throw singular_map_error("push_forward_tensor: singular Jacobian");
    return df * a(x) * df.transpose() / std::abs(det);
  };
}

inline std::function<Mat3(const Vec3&)> push_forward_tensor(
    const Mat3& constant, const MapWithJacobian& map) {
  return push_forward_tensor(
      std::function<Mat3(const Vec3&)>([constant](const Vec3&) { return constant; }),
      map);
}

/// Field pull-back x -> DF(x)^T E(F(x)); takes exterior solutions to the
/// transformed-media picture.
inline VectorField pull_back_field(VectorField field_on_image,
                                   const MapWithJacobian& map) {
  return [field_on_image, map](const Vec3& x) -> Vec3c {
    Mat3 df = map.jacobian(x);
    return df.transpose().cast<complexd>() * field_on_image(map.forward(x));
  };
}

/// Exact inverse of pull_back_field: y -> DF(F^{-1}y)^{-T} E(F^{-1}y).
inline VectorField push_forward_field(VectorField field_on_preimage,
                                      const MapWithJacobian& map) {
  return [field_on_preimage, map](const Vec3& y) -> Vec3c {
    Vec3 x = map.inverse(y);
    Mat3 df = map.jacobian(x);
    return df.transpose().inverse().cast<complexd>() * field_on_preimage(x);
  };
}

/// Which of the three equivalent scattering pictures a descriptor encodes.
enum class MediumPicture { cloak, small_inclusion, rescaled };

/// Radially layered medium description for the three pictures. The core is
/// isotropic: scalar eps_O, mu_O (the piecewise-C1 matrix-valued case is an
/// extension hook, not implemented).
struct MediumDescriptor {
  MediumPicture picture = MediumPicture::small_inclusion;
  double rho = 0.1;
  double eps_core = 2.0;
  double mu_core = 1.0;
  /// Conductivity of the damping layer in the rescaled picture (1 for the
  /// standard lossy cloak; 0 gives the lossless variant).
  double loss_sigma = 1.0;

  void validate() const {
    if (!(rho > 0.0 && rho < 1.0))
      throw invalid_parameter("MediumDescriptor: rho must lie in (0,1)");
    if (eps_core <= 0.0 || mu_core <= 0.0)
      throw invalid_parameter("MediumDescriptor: core constants must be > 0");
    if (loss_sigma < 0.0)
      throw invalid_parameter("MediumDescriptor: loss_sigma must be >= 0");
  }
};

/// Pointwise medium evaluation by region classification. Points on an
/// interface sphere raise interface_point_error: the media are defined a.e.
/// and quadrature nodes are placed strictly inside shells.
inline MaterialTensor eval_medium(const MediumDescriptor& d, const Vec3& x) {
  d.validate();
  double r = x.norm();
  auto on = [&](double rad) { return std::abs(r - rad) <= 1e-13 * std::max(1.0, rad); };
  MaterialTensor m;
  switch (d.picture) {
    case MediumPicture::cloak: {
      if (on(0.5) || on(1.0) || on(2.0))
        throw interface_point_error("eval_medium: point on interface sphere");
      if (r > 2.0) return m;  // (I, I, 0)
      if (r > 1.0) {
        BlowupMap f(d.rho);
        auto layer = push_forward_tensor(Mat3(Mat3::Identity()),
                                         MapWithJacobian::blowup(f));
        Mat3 t = layer(x);
        m.eps = t;
        m.mu = t;
        m.sigma = 0.0;
        return m;
      }
      if (r > 0.5) {
        m.sigma = d.loss_sigma;
        return m;  // (I, I, loss)
      }
      m.eps = d.eps_core * Mat3::Identity();
      m.mu = d.mu_core * Mat3::Identity();
      return m;
    }
    case MediumPicture::small_inclusion: {
      if (on(0.5 * d.rho) || on(d.rho))
        throw interface_point_error("eval_medium: point on interface sphere");
      if (r > d.rho) return m;  // vacuum
      if (r > 0.5 * d.rho) {
        m.eps = Mat3::Identity() / d.rho;
        m.mu = Mat3::Identity() / d.rho;
        m.sigma = d.loss_sigma / d.rho;
        return m;
      }
      m.eps = (d.eps_core / d.rho) * Mat3::Identity();
      m.mu = (d.mu_core / d.rho) * Mat3::Identity();
      return m;
    }
    default: {  // rescaled
      if (on(0.5) || on(1.0))
        throw interface_point_error("eval_medium: point on interface sphere");
      if (r > 1.0) {
        m.eps = d.rho * Mat3::Identity();
        m.mu = d.rho * Mat3::Identity();
        return m;
      }
      if (r > 0.5) {
        m.sigma = d.loss_sigma;
        return m;
      }
      m.eps = d.eps_core * Mat3::Identity();
      m.mu = d.mu_core * Mat3::Identity();
      return m;
    }
  }
}

}  // namespace cloaksim
