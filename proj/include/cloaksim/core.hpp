#pragma once

#include <atomic>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace cloaksim {

using complexd = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using Vec3c = Eigen::Vector3cd;
using Mat3 = Eigen::Matrix3d;
using Mat3c = Eigen::Matrix3cd;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr complexd iu{0.0, 1.0};

/// Evaluator for a complex vector field (frequency domain).
using VectorField = std::function<Vec3c(const Vec3&)>;
/// Evaluator returning an (E, H) pair.
using FieldPair = std::function<std::pair<Vec3c, Vec3c>(const Vec3&)>;

// Error taxonomy. Each type corresponds to a named failure mode of the
// public operations; catching std::invalid_argument / std::domain_error /
// std::runtime_error at call sites covers the whole family.

struct invalid_parameter : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Evaluation requested exactly on a material interface sphere.
struct interface_point_error : std::domain_error {
  using std::domain_error::domain_error;
};

struct singular_map_error : std::domain_error {
  using std::domain_error::domain_error;
};

struct singularity_error : std::domain_error {
  using std::domain_error::domain_error;
};

/// Field evaluation requested inside the source support.
struct unsupported_region_error : std::domain_error {
  using std::domain_error::domain_error;
};

struct unsupported_domain_error : std::domain_error {
  using std::domain_error::domain_error;
};

/// Quadrature failed to self-converge; carries the achieved tolerance.
struct quadrature_error : std::runtime_error {
  double achieved;
  explicit quadrature_error(const std::string& what, double achieved_tol)
      : std::runtime_error(what), achieved(achieved_tol) {}
};

struct truncation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct resolution_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct decay_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Plain bilinear cross product of complex 3-vectors. Eigen's cross()
/// conjugates the result for complex scalars, which is not the Maxwell
/// convention; use this everywhere complex fields are crossed.
inline Vec3c cross_c(const Vec3c& a, const Vec3c& b) {
  return Vec3c(a.y() * b.z() - a.z() * b.y(), a.z() * b.x() - a.x() * b.z(),
               a.x() * b.y() - a.y() * b.x());
}

/// Relative residual between two quantities, floored for zero-vs-zero.
inline double relative_residual(double lhs, double rhs) {
  double denom = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
  return std::abs(lhs - rhs) / denom;
}

inline double relative_residual(const complexd& lhs, const complexd& rhs) {
  double denom = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
  return std::abs(lhs - rhs) / denom;
}

namespace parallel {

inline unsigned default_workers() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

/// Index-parallel map with deterministic placement: out[i] = fn(i).
/// Results are independent of the worker count; each unit of work is
/// evaluated serially so reductions downstream stay bit-reproducible.
template <typename T, typename Fn>
std::vector<T> map_indexed(std::size_t count, Fn&& fn, unsigned workers = 0) {
  std::vector<T> out(count);
  if (count == 0) return out;
  unsigned nw = workers == 0 ? default_workers() : workers;
  nw = std::min<std::size_t>(nw, count);
  if (nw <= 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  std::vector<std::thread> pool;
  pool.reserve(nw);
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(nw);
  for (unsigned w = 0; w < nw; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (;;) {
          std::size_t i = next.fetch_add(1);
          if (i >= count) break;
          out[i] = fn(i);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace parallel

}  // namespace cloaksim
