#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mesoclt/ensemble.hpp"
#include "mesoclt/errors.hpp"
#include "mesoclt/quadrature.hpp"

using namespace mesoclt;

namespace {
EnsembleSpec make(SymmetryClass c, EntryLaw law, int n, std::uint64_t seed = 1) {
  EnsembleSpec s;
  s.symmetry_class = c;
  s.entry_law = law;
  s.dimension = n;
  s.master_seed = seed;
  return s;
}

double gaussian_moment(int k) {
  const auto phi = [k](double x) { return std::pow(x, k) * std::exp(-x * x / 2) / std::sqrt(2 * std::numbers::pi); };
  return quad::integrate(phi, -quad::kInf, quad::kInf).value;
}

bool within(const Estimate& e, double target, double k = 4.0) {
  return std::abs(e.value - target) <= k * e.std_error;
}
}  // namespace

TEST_CASE("invalid specs are rejected") {
  auto s = make(SymmetryClass::real_symmetric, EntryLaw::gaussian, 0);
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.dimension = 3;
  s.diagonal_variance = -1.0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.diagonal_variance.reset();
  s.entry_law = EntryLaw::heavy_tail;
  s.heavy_tail_exponent = 4.0;
  CHECK_THROWS_AS(sample_matrix(s, 0), ConfigError);
  s.heavy_tail_exponent = 4.5;
  CHECK_NOTHROW(s.validate());
  CHECK_THROWS_AS(parse_entry_law("cauchy"), ConfigError);
  CHECK(parse_symmetry_class("complex_hermitian") == SymmetryClass::complex_hermitian);
}

TEST_CASE("default diagonal variance by class") {
  CHECK(EnsembleSpec::goe(4, 0).zeta() == 2.0);
  CHECK(EnsembleSpec::gue(4, 0).zeta() == 1.0);
}

TEST_CASE("rademacher entries have modulus one") {
  const auto s = make(SymmetryClass::real_symmetric, EntryLaw::rademacher, 2);
  for (std::uint64_t k = 0; k < 50; ++k) {
    const auto h = sample_matrix(s, k);
    CHECK(std::abs(std::sqrt(2.0) * h.entry(0, 1)) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("samples are hermitian and reproducible") {
  for (auto c : {SymmetryClass::real_symmetric, SymmetryClass::complex_hermitian})
    for (auto law : {EntryLaw::gaussian, EntryLaw::rademacher, EntryLaw::uniform, EntryLaw::heavy_tail}) {
      const auto s = make(c, law, 17, 99);
      const auto a = sample_matrix(s, 3);
      const auto b = sample_matrix(s, 3);
      CHECK(a.is_hermitian());
      CHECK(a.to_complex() == b.to_complex());
      CHECK(a.to_complex() != sample_matrix(s, 4).to_complex());
      CHECK(a.is_real() == (c == SymmetryClass::real_symmetric));
      for (int i = 0; i < 17; ++i)
        for (int j = 0; j < 17; ++j)
          CHECK(std::abs(a.entry(i, j) * std::sqrt(17.0) - scaled_entry(s, 3, i, j)) < 1e-12);
    }
}

TEST_CASE("entries do not depend on N") {
  const auto small = make(SymmetryClass::real_symmetric, EntryLaw::gaussian, 4, 5);
  const auto big = make(SymmetryClass::real_symmetric, EntryLaw::gaussian, 40, 5);
  CHECK(scaled_entry(small, 2, 1, 3) == scaled_entry(big, 2, 1, 3));
}

TEST_CASE("gaussian real: unit off-diagonal and zeta diagonal variance") {
  auto s = make(SymmetryClass::real_symmetric, EntryLaw::gaussian, 512, 11);
  s.diagonal_variance = 2.0;
  const auto r = entry_moment_report(s, 10000);
  CHECK(std::abs(r.off_diagonal.second_abs.value - 1.0) <= 0.05);
  CHECK(std::abs(r.diagonal.second_abs.value - 2.0) <= 0.1);
  CHECK(within(r.off_diagonal.fourth_abs, gaussian_moment(4)));
  CHECK(within(r.diagonal.fourth_abs, 4.0 * gaussian_moment(4)));
  CHECK(std::abs(r.off_diagonal.mean.value.real()) <= 4 * r.off_diagonal.mean.std_error_re);
}

TEST_CASE("gaussian complex: zero pseudo-variance") {
  const auto s = make(SymmetryClass::complex_hermitian, EntryLaw::gaussian, 8, 12);
  const int n = 20000;
  const auto r = entry_moment_report(s, n);
  CHECK(std::abs(r.off_diagonal.pseudo_variance.value) <= 3.0 / std::sqrt(double(n)));
  CHECK(within(r.off_diagonal.second_abs, 1.0));
  // |x|^2 = (g1^2 + g2^2)/2 with independent unit normals
  CHECK(within(r.off_diagonal.fourth_abs, (2 * gaussian_moment(4) + 2) / 4));
  CHECK(r.diagonal.pseudo_variance.value.imag() == 0.0);
}

TEST_CASE("bounded laws") {
  const auto rad = entry_moment_report(make(SymmetryClass::real_symmetric, EntryLaw::rademacher, 3), 500);
  CHECK(rad.off_diagonal.second_abs.value == 1.0);
  CHECK(rad.off_diagonal.fourth_abs.value == 1.0);
  const auto uni = entry_moment_report(make(SymmetryClass::real_symmetric, EntryLaw::uniform, 3), 20000);
  CHECK(within(uni.off_diagonal.second_abs, 1.0));
  CHECK(within(uni.off_diagonal.fourth_abs, 9.0 / 5.0));
}

TEST_CASE("heavy tail: finite fourth moment, diverging sixth") {
  auto s = make(SymmetryClass::real_symmetric, EntryLaw::heavy_tail, 2, 21);
  s.heavy_tail_exponent = 4.5;
  const double a = 4.5, xm2 = (a - 2) / a;
  const double m4 = a * xm2 * xm2 / (a - 4);
  const auto small = entry_moment_report(s, 200);
  const auto large = entry_moment_report(s, 200000);
  CHECK(std::abs(large.off_diagonal.second_abs.value - 1.0) < 0.1);
  CHECK(large.off_diagonal.fourth_abs.value == doctest::Approx(m4).epsilon(0.5));
  CHECK(large.off_diagonal.sixth_abs.value > 2.0 * small.off_diagonal.sixth_abs.value);
}

TEST_CASE("moment report preconditions") {
  CHECK_THROWS_AS(entry_moment_report(EnsembleSpec::goe(4, 0), 99), ConfigError);
}
