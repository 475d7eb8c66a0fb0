#include <doctest.h>

#include <cmath>
#include <vector>

#include "mesoclt/errors.hpp"
#include "mesoclt/gp_sampler.hpp"

using namespace mesoclt;

namespace {
const cplx I(0, 1);

cplx empirical_cross(const Eigen::MatrixXcd& y, int a, int b) {
  return (y.col(a).array() * y.col(b).conjugate().array()).mean();
}
cplx empirical_pseudo(const Eigen::MatrixXcd& y, int a, int b) { return (y.col(a).array() * y.col(b).array()).mean(); }
}  // namespace

TEST_CASE("tail variance matches a brute-force sum") {
  for (cplx b : {1.0 + I, 2.0 * I, -0.5 + 0.3 * I})
    for (int K : {1, 5, 20}) {
      const double q = std::norm((b - I) / (b + I));
      const double coef = std::norm(std::pow(2.0 / (b + I), 2)) / 2.0;
      double s = 0;
      for (int k = K + 1; k < 20000; ++k) s += (k + 1) * std::pow(q, k);
      CHECK(series_tail_variance(b, K) == doctest::Approx(coef * s).epsilon(1e-10));
    }
  CHECK(series_tail_variance(I, 1) == 0.0);
}

TEST_CASE("choose_truncation") {
  const std::vector<cplx> at_i{I};
  CHECK(choose_truncation(at_i, 1e-300) == 1);
  const std::vector<cplx> b{1.0 + I};
  int last = 0;
  for (double eps : {1e-2, 5e-3, 1e-4, 5e-5, 1e-8}) {
    const int k = choose_truncation(b, eps);
    CHECK(k >= last);
    CHECK(series_tail_variance(b[0], k) <= eps);
    CHECK(series_tail_variance(b[0], k - 1) > eps);
    last = k;
  }
  // log(1/eps)/log(1/r^2) with r^2 = 1/5
  const int k12 = choose_truncation(b, 1e-12);
  CHECK(k12 >= std::log(1e12) / std::log(5.0) - 2);
  CHECK(k12 <= std::log(1e12) / std::log(5.0) + 10);
  const std::vector<cplx> bad{cplx(1, 0)};
  CHECK_THROWS_AS(choose_truncation(bad, 1e-6), DomainError);
}

TEST_CASE("sample_Y covariance") {
  const std::vector<cplx> b{I, 1.0 + I, 2.0 * I};
  GPConfig cfg;
  cfg.seed = 17;
  const int n = 100000;
  const auto y = sample_Y(b, cfg, n);
  const double tol = 4.0 / std::sqrt(double(n));
  for (int a = 0; a < 3; ++a)
    for (int c = 0; c < 3; ++c) {
      const auto want = resolvent_covariance(b[a], b[c]);
      const auto got = empirical_cross(y, a, c);
      CHECK(std::abs(got.real() - want.cov.real()) <= tol);
      CHECK(std::abs(got.imag() - want.cov.imag()) <= tol);
      const auto pg = empirical_pseudo(y, a, c);
      CHECK(std::abs(pg.real()) <= tol);
      CHECK(std::abs(pg.imag()) <= tol);
    }
  CHECK(std::abs(empirical_cross(y, 0, 0).real() - 0.5) <= tol);
  CHECK(std::abs(empirical_cross(y, 2, 2).real() - 0.125) <= tol);
}

TEST_CASE("sample_Y rows are schedule independent and K-insensitive at b = i") {
  const std::vector<cplx> b{I};
  GPConfig a, c;
  a.seed = c.seed = 3;
  a.truncation_K = 1;
  c.truncation_K = 40;
  const auto ya = sample_Y(b, a, 50);
  const auto yc = sample_Y(b, c, 50);
  CHECK((ya - yc).cwiseAbs().maxCoeff() == 0.0);
  const auto head = sample_Y(b, a, 10);
  CHECK((head - ya.topRows(10)).cwiseAbs().maxCoeff() == 0.0);
  const std::vector<cplx> bad{cplx(0, -1)};
  CHECK_THROWS_AS(sample_Y(bad, a, 1), DomainError);
}

TEST_CASE("doubling K changes the variance by less than eps plus noise") {
  const std::vector<cplx> b{1.0 + I};
  GPConfig cfg;
  cfg.seed = 5;
  cfg.target_tail_variance = 1e-6;
  const int k = choose_truncation(b, cfg.target_tail_variance);
  const int n = 40000;
  cfg.truncation_K = k;
  const double v1 = empirical_cross(sample_Y(b, cfg, n), 0, 0).real();
  cfg.truncation_K = 2 * k;
  const double v2 = empirical_cross(sample_Y(b, cfg, n), 0, 0).real();
  // common random numbers: the first k+1 thetas are shared
  CHECK(std::abs(v1 - v2) <= cfg.target_tail_variance + 4.0 * std::sqrt(cfg.target_tail_variance / n) + 1e-6);
}

TEST_CASE("sample_Z") {
  const auto f = catalog::cauchy();
  const int n = 100000;
  {
    const std::vector<TestFunction> fs{f};
    const auto z = sample_Z(fs, n, 9);
    const double var = z.col(0).squaredNorm() / n;
    // sd of a sample variance of a normal: sqrt(2) sigma^2 / sqrt(n)
    CHECK(std::abs(var - 0.25) <= 4 * std::sqrt(2.0) * 0.25 / std::sqrt(double(n)));
    const std::vector<TestFunction> dil{f.dilated(2.0)};
    const auto zd = sample_Z(dil, n, 10);
    const double vd = zd.col(0).squaredNorm() / n;
    CHECK(std::abs(vd - var) <= 4 * 2 * 0.25 / std::sqrt(double(n)));
  }
  {
    // the PSD jitter leaves a residue of order sqrt(1e-10 trace) per draw
    const std::vector<TestFunction> fs{f, f.scaled(-1.0), f};
    const auto z = sample_Z(fs, 1000, 11);
    const double sd = z.col(0).norm();
    CHECK(z.col(0).dot(z.col(1)) / (sd * z.col(1).norm()) == doctest::Approx(-1.0).epsilon(1e-8));
    CHECK(z.col(0).dot(z.col(2)) / (sd * z.col(2).norm()) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK((z.col(0) + z.col(1)).cwiseAbs().maxCoeff() <= 1e-4);
    CHECK((z.col(0) - z.col(2)).cwiseAbs().maxCoeff() <= 1e-4);
  }
}

TEST_CASE("gaussian field factorisation") {
  Eigen::MatrixXd indefinite(2, 2);
  indefinite << 1, 2, 2, 1;
  CHECK_THROWS_AS(sample_gaussian_field(indefinite, 10, 0), NumericalError);
  Eigen::MatrixXd nearly(2, 2);
  nearly << 1, 1, 1, 1 - 1e-9;
  CHECK_NOTHROW(sample_gaussian_field(nearly, 10, 0));
  Eigen::MatrixXd g(2, 2);
  g << 2, 0.6, 0.6, 1;
  const int n = 100000;
  const auto z = sample_gaussian_field(g, n, 1);
  const Eigen::MatrixXd cov = z.transpose() * z / n;
  CHECK((cov - g).cwiseAbs().maxCoeff() < 0.03);
}

TEST_CASE("config validation") {
  GPConfig c;
  c.target_tail_variance = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
