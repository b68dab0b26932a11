#include <catch2/catch_amalgamated.hpp>

#include "cloaksim/quadrature.hpp"
#include "cloaksim/special_functions.hpp"
#include "test_helpers.hpp"

using namespace cloaksim;
using sf::BesselKind;
using sf::Polarization;
using sf::WaveKind;

TEST_CASE("spherical bessel closed forms", "[specfun]") {
  // j_0(z) = sin z / z at z = 1
  auto j0 = sf::spherical_bessel(BesselKind::j, 0, complexd(1.0, 0.0));
  REQUIRE(std::abs(j0.value - std::sin(1.0)) < 1e-13);

  // j_1 closed form at a generic complex argument
  complexd z(1.7, 0.4);
  auto j1 = sf::spherical_bessel(BesselKind::j, 1, z);
  complexd j1_exact = std::sin(z) / (z * z) - std::cos(z) / z;
  REQUIRE(std::abs(j1.value - j1_exact) < 1e-13 * std::abs(j1_exact));

  auto y0 = sf::spherical_bessel(BesselKind::y, 0, complexd(2.0, 0.0));
  REQUIRE(std::abs(y0.value - (-std::cos(2.0) / 2.0)) < 1e-14);

  auto h0 = sf::spherical_bessel(BesselKind::h1, 0, complexd(2.0, 0.0));
  REQUIRE(std::abs(h0.value - (-iu * std::exp(iu * 2.0) / 2.0)) < 1e-14);
}

TEST_CASE("Wronskian identity at the spec point", "[specfun]") {
  // j_n y_n' - j_n' y_n = 1/x^2 at x = 2.7, n = 5
  complexd x(2.7, 0.0);
  auto j = sf::spherical_bessel(BesselKind::j, 5, x);
  auto y = sf::spherical_bessel(BesselKind::y, 5, x);
  complexd w = j.value * y.derivative - j.derivative * y.value;
  REQUIRE(std::abs(w - 1.0 / (x * x)) < 1e-12 * std::abs(1.0 / (x * x)));
}

TEST_CASE("Wronskian identities hold over the (n, x) envelope", "[specfun]") {
  for (int n : {1, 5, 12, 25, 40}) {
    for (double x : {0.1, 0.7, 2.7, 9.0, 31.0, 100.0}) {
      auto [jv, jd] = sf::sph_jn_table(n, complexd(x, 0.0));
      auto [yv, yd] = sf::sph_yn_table(n, complexd(x, 0.0));
      complexd w = jv[n] * yd[n] - jd[n] * yv[n];
      REQUIRE(std::abs(w - 1.0 / (x * x)) < 1e-12 / (x * x));
    }
  }
}

TEST_CASE("h1 matches j + i y for complex arguments", "[specfun]") {
  for (complexd z : {complexd(3.0, 0.5), complexd(0.4, 0.2), complexd(8.0, 2.0)}) {
    auto [jv, jd] = sf::sph_jn_table(6, z);
    auto [yv, yd] = sf::sph_yn_table(6, z);
    auto [hv, hd] = sf::sph_h1n_table(6, z);
    for (int n = 0; n <= 6; ++n) {
      REQUIRE(std::abs(hv[n] - (jv[n] + iu * yv[n])) <
              1e-12 * std::abs(hv[n]));
      REQUIRE(std::abs(hd[n] - (jd[n] + iu * yd[n])) <
              1e-12 * std::abs(hd[n]));
    }
  }
}

TEST_CASE("outgoing asymptotics h1_n(x) ~ (-i)^{n+1} e^{ix}/x", "[specfun]") {
  double x = 500.0;
  int n = 3;
  auto h = sf::spherical_bessel(BesselKind::h1, n, complexd(x, 0.0));
  // leading term with the first asymptotic correction i n(n+1)/(2x); the
  // bare leading term alone is only good to ~6e-3 here
  complexd asym = std::pow(-iu, n + 1) * std::exp(iu * x) / x *
                  (1.0 + iu * double(n) * (n + 1.0) / (2.0 * x));
  REQUIRE(std::abs(h.value - asym) < 1e-4 * std::abs(asym));
  complexd bare = std::pow(-iu, n + 1) * std::exp(iu * x) / x;
  REQUIRE(std::abs(h.value - bare) < 2e-2 * std::abs(bare));
}

TEST_CASE("bessel argument and order guards", "[specfun]") {
  REQUIRE_THROWS_AS(sf::spherical_bessel(BesselKind::y, 2, complexd(0, 0)),
                    singularity_error);
  REQUIRE_THROWS_AS(sf::spherical_bessel(BesselKind::h1, 2, complexd(0, 0)),
                    singularity_error);
  REQUIRE_NOTHROW(sf::spherical_bessel(BesselKind::j, 2, complexd(0, 0)));
  REQUIRE_THROWS_AS(
      sf::spherical_bessel(BesselKind::j, sf::order_cap() + 1, complexd(1, 0)),
      invalid_parameter);
}

TEST_CASE("normalized Legendre closed forms and derivatives", "[specfun]") {
  double theta = 1.1;
  double ct = std::cos(theta);
  auto t = sf::angular_table(3, ct);
  using T = sf::AngularTable;
  double c = 1.0 / std::sqrt(4.0 * pi);
  REQUIRE(t.P[T::idx(0, 0)] == Catch::Approx(c).epsilon(1e-14));
  REQUIRE(t.P[T::idx(1, 0)] ==
          Catch::Approx(std::sqrt(3.0) * c * ct).epsilon(1e-14));
  REQUIRE(t.P[T::idx(1, 1)] ==
          Catch::Approx(-std::sqrt(1.5) * c * std::sin(theta)).epsilon(1e-14));

  // tau = dP/dtheta against central differences
  for (int n : {1, 2, 3}) {
    for (int m = 0; m <= n; ++m) {
      double h = 1e-6;
      auto tp = sf::angular_table(n, std::cos(theta + h));
      auto tm = sf::angular_table(n, std::cos(theta - h));
      double fd = (tp.P[T::idx(n, m)] - tm.P[T::idx(n, m)]) / (2.0 * h);
      REQUIRE(t.tau[T::idx(n, m)] == Catch::Approx(fd).margin(1e-8));
      // pim * sin(theta) = m * P
      REQUIRE(t.pim[T::idx(n, m)] * std::sin(theta) ==
              Catch::Approx(m * t.P[T::idx(n, m)]).margin(1e-13));
    }
  }
}

TEST_CASE("angular functions stay finite at the poles", "[specfun]") {
  auto t = sf::angular_table(10, 1.0);
  for (std::size_t i = 0; i < t.P.size(); ++i) {
    REQUIRE(std::isfinite(t.P[i]));
    REQUIRE(std::isfinite(t.pim[i]));
    REQUIRE(std::isfinite(t.tau[i]));
  }
  // pi_1^1 at the north pole: m Pbar_1^1/sin -> -sqrt(3/(8 pi))
  REQUIRE(t.pim[sf::AngularTable::idx(1, 1)] ==
          Catch::Approx(-std::sqrt(3.0 / (8.0 * pi))).epsilon(1e-13));
}

TEST_CASE("vector waves are divergence-free", "[specfun]") {
  testutil::ShellSampler sampler(0.4, 3.0, 42);
  complexd k(1.3, 0.0);
  std::vector<sf::SphericalWaveIndex> modes = {
      {1, 0, Polarization::TE, WaveKind::regular},
      {1, 1, Polarization::TM, WaveKind::regular},
      {2, -1, Polarization::TE, WaveKind::outgoing},
      {3, 2, Polarization::TM, WaveKind::outgoing},
      {4, -3, Polarization::TE, WaveKind::regular},
  };
  for (const auto& idx : modes) {
    auto e_field = [&](const Vec3& p) {
      return sf::vector_wave(idx, k, p).first;
    };
    for (int s = 0; s < 10; ++s) {
      Vec3 x = sampler.next();
      complexd div = testutil::fd_divergence(e_field, x, 1e-4);
      double scale = std::max(1.0, e_field(x).norm());
      REQUIRE(std::abs(div) < 1e-6 * scale);
    }
  }
}

TEST_CASE("curl consistency: fd curl E vs i k H", "[specfun]") {
  complexd k(0.9, 0.0);
  std::vector<sf::SphericalWaveIndex> modes = {
      {1, 1, Polarization::TE, WaveKind::regular},
      {2, 0, Polarization::TM, WaveKind::outgoing},
      {3, -2, Polarization::TE, WaveKind::outgoing},
  };
  testutil::ShellSampler sampler(0.6, 2.5, 7);
  for (const auto& idx : modes) {
    auto e_field = [&](const Vec3& p) {
      return sf::vector_wave(idx, k, p).first;
    };
    for (int s = 0; s < 6; ++s) {
      Vec3 x = sampler.next();
      Vec3c curl = testutil::fd_curl(e_field, x, 1e-4);
      Vec3c ikh = iu * k * sf::vector_wave(idx, k, x).second;
      REQUIRE((curl - ikh).norm() < 1e-5 * std::max(1.0, ikh.norm()));
    }
  }
}

TEST_CASE("outgoing waves satisfy the radiation condition residual decay",
          "[specfun]") {
  sf::SphericalWaveIndex idx(2, 1, Polarization::TE, WaveKind::outgoing);
  complexd k(1.0, 0.0);
  auto residual = [&](double r) {
    double worst = 0;
    auto rule = quad::sphere_rule(6, 12);
    for (const auto& p : rule.points) {
      Vec3 x = r * p;
      auto [e, h] = sf::vector_wave(idx, k, x);
      worst = std::max(worst, (cross_c(h, x.cast<complexd>()) -
                               complexd(r, 0) * e)
                                  .norm());
    }
    return worst;
  };
  double r50 = residual(50.0), r500 = residual(500.0);
  // O(1/r): tenfold radius cuts the residual tenfold (with slack)
  REQUIRE(r500 < 1.5 * r50 * (50.0 / 500.0));
}

TEST_CASE("regular kind is finite at the origin", "[specfun]") {
  for (int n : {1, 2, 3}) {
    sf::SphericalWaveIndex te(n, 0, Polarization::TE, WaveKind::regular);
    sf::SphericalWaveIndex tm(n, 0, Polarization::TM, WaveKind::regular);
    auto [em, hm] = sf::vector_wave(te, complexd(1.0, 0.0), Vec3(1e-12, 0, 0));
    auto [en, hn] = sf::vector_wave(tm, complexd(1.0, 0.0), Vec3(1e-12, 0, 0));
    REQUIRE(std::isfinite(em.norm()));
    REQUIRE(std::isfinite(en.norm()));
    REQUIRE(em.norm() < 1e-10);  // M vanishes at the origin
  }
  REQUIRE_THROWS_AS(
      sf::vector_wave({1, 0, Polarization::TE, WaveKind::outgoing},
                      complexd(1.0, 0.0), Vec3::Zero()),
      singularity_error);
}

TEST_CASE("green kernel values and Helmholtz residual", "[specfun]") {
  Vec3 x(1.0, 0.0, 0.0), y(0.0, 0.0, 0.0);
  REQUIRE(std::abs(sf::green_scalar(complexd(0, 0), x, y) -
                   1.0 / (4.0 * pi)) < 1e-15);
  complexd expect = std::exp(iu) / (4.0 * pi);
  REQUIRE(std::abs(sf::green_scalar(complexd(1.0, 0.0), x, y) - expect) <
          1e-15);

  // (Delta + k^2) G ~ 0 away from the singularity (central differences)
  complexd k(1.0, 0.0);
  Vec3 src(0.2, -0.1, 0.3);
  Vec3 at(1.1, 0.7, -0.4);
  double h = 1e-3;
  auto g = [&](const Vec3& p) { return sf::green_scalar(k, p, src); };
  complexd lap{0, 0};
  for (int i = 0; i < 3; ++i) {
    Vec3 e = Vec3::Zero();
    e[i] = h;
    lap += (g(at + e) - 2.0 * g(at) + g(at - e)) / (h * h);
  }
  complexd resid = lap + k * k * g(at);
  REQUIRE(std::abs(resid) < 1e-3 * std::abs(g(at)));

  REQUIRE_THROWS_AS(sf::green_scalar(k, x, x), singularity_error);
  REQUIRE_THROWS_AS(sf::green_scalar(complexd(1.0, -0.1), x, y),
                    invalid_parameter);

  // gradient against finite differences
  Vec3c grad = sf::green_grad_x(k, at, src);
  for (int i = 0; i < 3; ++i) {
    Vec3 e = Vec3::Zero();
    e[i] = 1e-6;
    complexd fd = (g(at + e) - g(at - e)) / 2e-6;
    REQUIRE(std::abs(grad[i] - fd) < 1e-7);
  }
}

TEST_CASE("sph_harmonic matches an explicit low-order value", "[specfun]") {
  // Y_1^1 = -sqrt(3/8pi) sin(theta) e^{i phi}
  Vec3 dir(std::sin(0.8) * std::cos(0.3), std::sin(0.8) * std::sin(0.3),
           std::cos(0.8));
  complexd y11 = sf::sph_harmonic(1, 1, dir);
  complexd expect = -std::sqrt(3.0 / (8.0 * pi)) * std::sin(0.8) *
                    std::exp(iu * 0.3);
  REQUIRE(std::abs(y11 - expect) < 1e-14);
  // conjugation symmetry
  complexd y1m1 = sf::sph_harmonic(1, -1, dir);
  REQUIRE(std::abs(y1m1 - (-std::conj(y11))) < 1e-14);
}
