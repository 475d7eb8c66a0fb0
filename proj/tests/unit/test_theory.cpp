#include <doctest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "mesoclt/errors.hpp"
#include "mesoclt/quadrature.hpp"
#include "mesoclt/theory.hpp"

using namespace mesoclt;
using std::numbers::pi;

TEST_CASE("semicircle density and cdf") {
  CHECK(semicircle_density(0) == doctest::Approx(1 / pi));
  CHECK(semicircle_density(2) == 0.0);
  CHECK(semicircle_density(-2) == 0.0);
  CHECK(semicircle_density(3) == 0.0);
  CHECK(semicircle_cdf(0) == doctest::Approx(0.5));
  CHECK(semicircle_cdf(2) == 1.0);
  CHECK(semicircle_cdf(-2) == 0.0);
  CHECK(semicircle_cdf(-7) == 0.0);
  quad::Options o;
  o.abs_tol = 1e-13;
  const double one = quad::integrate(semicircle_density, -2, 1, o).value;
  CHECK(std::abs(semicircle_cdf(1) - one) <= 1e-10);
  CHECK(std::abs(quad::integrate(semicircle_density, -2, 2, o).value - 1.0) <= 1e-10);
  for (double p : {0.01, 0.3, 0.5, 0.77, 0.999}) CHECK(semicircle_cdf(semicircle_quantile(p)) == doctest::Approx(p));
}

TEST_CASE("stieltjes transform") {
  const cplx i(0, 1);
  const auto m1 = stieltjes_m(i);
  CHECK(std::abs(m1 - i * (std::sqrt(5.0) - 1) / 2.0) < 1e-14);
  CHECK(std::abs(stieltjes_m(2.0 * i) - i * (std::sqrt(2.0) - 1)) < 1e-14);
  CHECK_THROWS_AS(stieltjes_m(cplx(0.5, 0)), DomainError);
  for (cplx z : {cplx(0.3, 0.01), cplx(-1.9, 1e-4), cplx(5, 2), cplx(-0.7, 3), cplx(1.0, -0.2)}) {
    const auto m = stieltjes_m(z);
    CHECK(std::abs(m + 1.0 / m + z) <= 1e-12);
    CHECK(m.imag() * z.imag() > 0);
    if (z.imag() > 0) CHECK(std::abs(m) < 1.0);
    CHECK(std::abs(stieltjes_m(-std::conj(z)) + std::conj(m)) < 1e-14);
  }
  // Stieltjes integral of the density
  const cplx z(0.4, 0.3);
  const double re = quad::integrate([&](double x) { return semicircle_density(x) * ((x - z) / std::norm(x - z)).real(); }, -2, 2).value;
  const double im = quad::integrate([&](double x) { return semicircle_density(x) * z.imag() / std::norm(x - z); }, -2, 2).value;
  CHECK(std::abs(stieltjes_m(z) - cplx(re, im)) < 1e-9);
}

TEST_CASE("resolvent covariance kernel") {
  const cplx i(0, 1);
  auto c = resolvent_covariance(i, i);
  CHECK(std::abs(c.cov - 0.5) < 1e-15);
  CHECK(c.pseudo_cov == cplx(0));
  c = resolvent_covariance(i, 1.0 + i);
  CHECK(std::abs(c.cov - cplx(0.24, -0.32)) < 1e-15);
  CHECK(resolvent_covariance(2.0 * i, 3.0 + 0.5 * i).pseudo_cov == cplx(0));
  CHECK(std::abs(resolvent_covariance(2.0 * i, 2.0 * i).cov - 0.125) < 1e-15);
  CHECK_THROWS_AS(resolvent_covariance(cplx(1, 0), i), DomainError);
  CHECK_THROWS_AS(resolvent_covariance(i, cplx(0, -1)), DomainError);
}

TEST_CASE("H^1/2 covariance: closed values") {
  const auto cauchy = catalog::cauchy();
  const auto gauss = catalog::gauss();
  CHECK(std::abs(h_half_covariance(cauchy, cauchy) - 0.25) <= 1e-7);
  CHECK(std::abs(h_half_covariance(gauss, gauss) - 1 / pi) <= 1e-7);
  CHECK(h_half_covariance(cauchy, catalog::zero()) == 0.0);
  CHECK(std::abs(h_half_variance_fourier(cauchy) - 0.25) <= 1e-10);
  CHECK(h_half_variance_fourier(catalog::zero()) == 0.0);
}

TEST_CASE("H^1/2: fourier and real-space forms agree") {
  for (const auto& f : catalog::all()) {
    CAPTURE(f.label);
    const double direct = h_half_covariance(f, f);
    CHECK(std::abs(h_half_variance_fourier(f) - direct) <= 1e-6);
  }
}

TEST_CASE("H^1/2: grid transform fallback") {
  CHECK(std::abs(h_half_variance_grid(catalog::cauchy()) - 0.25) <= 1e-5);
  CHECK(std::abs(h_half_variance_grid(catalog::gauss()) - 1 / pi) <= 1e-6);
}

TEST_CASE("H^1/2: symmetric, bilinear, PSD, dilation invariant") {
  const auto fs = catalog::all();
  Eigen::MatrixXd g(4, 4);
  for (int a = 0; a < 4; ++a)
    for (int b = a; b < 4; ++b) g(a, b) = g(b, a) = h_half_covariance(fs[a], fs[b]);
  CHECK(std::abs(h_half_covariance(fs[1], fs[0]) - g(0, 1)) <= 1e-8);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  CHECK(es.eigenvalues().minCoeff() >= -1e-8);
  const double lin = h_half_covariance(fs[0].scaled(2.0).plus(fs[1]), fs[2]);
  CHECK(std::abs(lin - (2 * g(0, 2) + g(1, 2))) <= 1e-7);
  for (const auto& f : {fs[0], fs[1]})
    for (double lambda : {0.5, 2.0}) {
      const auto d = f.dilated(lambda);
      CHECK(std::abs(h_half_covariance(d, d) - h_half_covariance(f, f)) <= 1e-7);
    }
}

TEST_CASE("centering integral") {
  const auto f = catalog::cauchy();
  const double eta = 1e-3;
  const int n = 1000;
  CHECK(centering_integral(f, 0.0, eta, n) / (n * eta) == doctest::Approx(pi * semicircle_density(0)).epsilon(0.01));
  CHECK(centering_integral(f, 0.3, 0.05, 2 * n) == 2 * centering_integral(f, 0.3, 0.05, n));
  CHECK(centering_integral(catalog::zero(), 0.0, 0.1, n) == 0.0);
  // Poisson kernel: N eta Im m(E + i eta)
  const cplx z(0.5, 0.2);
  CHECK(centering_integral(f, z.real(), z.imag(), 1) == doctest::Approx(z.imag() * stieltjes_m(z).imag()).epsilon(1e-9));
}

TEST_CASE("rates and moment predictions") {
  CHECK(rate_c0(0.5) == doctest::Approx(1.0 / 6));
  CHECK(rate_c0(0.9) == doctest::Approx(1.0 / 30));
  CHECK(rate_c0(0.2) == doctest::Approx(rate_c0(0.8)));
  CHECK_THROWS_AS(rate_c0(1.0), DomainError);
  CHECK_THROWS_AS(rate_c0(0.0), DomainError);
  const int n = 1024;
  CHECK(predicted_mixed_moment(1, 1, 0.5, n) == doctest::Approx(0.5 * std::pow(n, -1.0)));
  CHECK(predicted_mixed_moment(2, 2, 0.5, n) == doctest::Approx(0.5 * std::pow(n, -2.0)));
  CHECK(predicted_mixed_moment(3, 3, 0.3, n) == doctest::Approx(6.0 / 8 * std::pow(n, 6 * (0.3 - 1))));
  CHECK(predicted_mixed_moment(2, 1, 0.5, n) == 0.0);
}

TEST_CASE("mesoscopic scale") {
  MesoscopicScale s{0.5, 0.0};
  CHECK(s.eta(1024) == doctest::Approx(1.0 / 32));
  CHECK(s.kappa() == 2.0);
  CHECK_NOTHROW(s.validate());
  CHECK_THROWS_AS((MesoscopicScale{1.0, 0.0}).validate(), ConfigError);
  CHECK_THROWS_AS((MesoscopicScale{0.5, 2.0}).validate(), ConfigError);
}
