#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "mesoclt/errors.hpp"
#include "mesoclt/rng.hpp"
#include "mesoclt/stats.hpp"

using namespace mesoclt;
using cd = std::complex<double>;

namespace {
std::vector<cd> complex_draws(int n, std::uint64_t seed) {
  CounterStream s(seed, RngDomain::test_draws, 0);
  std::vector<cd> out;
  for (int i = 0; i < n; ++i) out.emplace_back(1.0 + s.normal(), 0.5 * s.normal());
  return out;
}

std::vector<double> normal_draws(int n, double sd, std::uint64_t seed) {
  CounterStream s(seed, RngDomain::test_draws, 1);
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(sd * s.normal());
  return out;
}

// Batch accumulators over 2 observables built from one sample stream.
std::vector<MCAccumulator> per_batch(const std::vector<cd>& a, const std::vector<cd>& b, int nb) {
  std::vector<MCAccumulator> accs;
  for (int k = 0; k < nb; ++k) accs.emplace_back(2, 4, nb);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int bid = batch_of(i, a.size(), nb);
    const cd row[2] = {a[i], b[i]};
    accs[bid].add(bid, row);
  }
  return accs;
}
}  // namespace

TEST_CASE("accumulator moments equal brute-force averages") {
  const auto a = complex_draws(1000, 1);
  const auto b = complex_draws(1000, 2);
  auto accs = per_batch(a, b, 8);
  MCAccumulator acc(2, 4, 8);
  for (auto& x : accs) acc.merge(x);
  CHECK(acc.num_samples() == 1000);
  cd mean(0), cross(0), pseudo(0), mix(0);
  for (int i = 0; i < 1000; ++i) {
    mean += a[i];
    cross += a[i] * std::conj(b[i]);
    pseudo += a[i] * b[i];
    mix += std::pow(std::conj(a[i]), 2) * a[i];
  }
  CHECK(std::abs(acc.mean(0).value - mean / 1000.0) < 1e-13);
  CHECK(std::abs(acc.cross(0, 1).value - cross / 1000.0) < 1e-13);
  CHECK(std::abs(acc.pseudo(0, 1).value - pseudo / 1000.0) < 1e-13);
  CHECK(std::abs(acc.mixed(0, 2, 1).value - mix / 1000.0) < 1e-12);
  CHECK(acc.mean(0).std_error_re > 0);
}

TEST_CASE("merge order does not matter, double ownership is rejected") {
  const auto a = complex_draws(997, 3);
  const auto b = complex_draws(997, 4);
  auto accs = per_batch(a, b, 32);
  std::vector<int> order(32);
  std::iota(order.begin(), order.end(), 0);
  MCAccumulator ref(2, 4, 32);
  for (int k : order) ref.merge(accs[k]);
  std::mt19937 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    std::shuffle(order.begin(), order.end(), rng);
    // tree-shaped merge in a shuffled order
    MCAccumulator left(2, 4, 32), right(2, 4, 32), all(2, 4, 32);
    for (int q = 0; q < 32; ++q) (q % 2 ? left : right).merge(accs[order[q]]);
    all.merge(right);
    all.merge(left);
    for (int j = 0; j < 2; ++j) {
      CHECK(all.mean(j).value == ref.mean(j).value);
      CHECK(all.mixed(j, 2, 2).value == ref.mixed(j, 2, 2).value);
      CHECK(all.mixed(j, 1, 1).std_error_re == ref.mixed(j, 1, 1).std_error_re);
    }
    CHECK(all.cross(0, 1).value == ref.cross(0, 1).value);
  }
  MCAccumulator twice(2, 4, 32);
  twice.merge(accs[0]);
  CHECK_THROWS_AS(twice.merge(accs[0]), ContractViolation);
}

TEST_CASE("conjugation consistency is exact") {
  const auto a = complex_draws(500, 7);
  const auto b = complex_draws(500, 8);
  MCAccumulator acc(2, 4, 32);
  for (auto& x : per_batch(a, b, 32)) acc.merge(x);
  CHECK(acc.cross(0, 1).value == std::conj(acc.cross(1, 0).value));
  CHECK(acc.total().cross(1, 0) == std::conj(acc.total().cross(0, 1)));
}

TEST_CASE("batch standard error") {
  const auto x = normal_draws(32000, 1.0, 9);
  MCAccumulator acc(1, 2, 32);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v[1] = {x[i]};
    acc.add(batch_of(i, x.size(), 32), v);
  }
  const auto m = acc.mean(0);
  CHECK(m.std_error_re == doctest::Approx(1.0 / std::sqrt(32000.0)).epsilon(0.4));
  CHECK(m.std_error_im == 0.0);
  const auto e = acc.estimate([](const MomentView& v) { return v.mixed(0, 1, 1).real(); });
  CHECK(std::abs(e.value - 1.0) < 4 * e.std_error);
}

TEST_CASE("two-pass centring sums to zero") {
  const auto x = normal_draws(1001, 3.0, 10);
  std::vector<double> shifted;
  for (double v : x) shifted.push_back(v + 1e6);
  const auto c = centre(std::span<const double>(shifted));
  double s = 0;
  for (double v : c) s += v;
  CHECK(std::abs(s) < 1e-6);
  const auto z = complex_draws(333, 11);
  const auto cz = centre(std::span<const cd>(z));
  cd t(0);
  for (auto v : cz) t += v;
  CHECK(std::abs(t) < 1e-12);
}

TEST_CASE("batch_of covers contiguous ranges") {
  int prev = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    const int b = batch_of(i, 100, 32);
    CHECK(b >= prev);
    CHECK(b < 32);
    prev = b;
  }
  CHECK(batch_of(99, 100, 32) == 31);
}

TEST_CASE("cumulants from moments") {
  const std::vector<double> gauss{0, 1, 0, 3};
  const auto cg = cumulants_from_moments(gauss);
  CHECK(cg.values == std::vector<double>{0, 1, 0, 0});
  const std::vector<double> rad{0, 1, 0, 1};
  CHECK(cumulants_from_moments(rad)[4] == -2.0);
  const std::vector<double> zeros(6, 0.0);
  for (double v : cumulants_from_moments(zeros).values) CHECK(v == 0.0);
  // Poisson(2): every cumulant equals 2; raw moments 2, 6, 22, 94
  const std::vector<double> poi{2, 6, 22, 94};
  for (double v : cumulants_from_moments(poi).values) CHECK(v == doctest::Approx(2.0));
  const std::vector<double> nine(9, 1.0);
  CHECK_THROWS_AS(cumulants_from_moments(nine), ConfigError);
}

TEST_CASE("cumulant round trip") {
  CounterStream s(12, RngDomain::test_draws, 2);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> m;
    for (int k = 0; k < 8; ++k) m.push_back(s.normal());
    const auto back = moments_from_cumulants(cumulants_from_moments(m));
    for (int k = 0; k < 8; ++k) CHECK(back[k] == doctest::Approx(m[k]).epsilon(1e-10).scale(1));
  }
}

TEST_CASE("sample cumulants of a gaussian") {
  const auto x = normal_draws(40000, 2.0, 13);
  const auto k = sample_cumulants(x);
  REQUIRE(k.size() == 4);
  CHECK(std::abs(k[0].value) < 4 * k[0].std_error);
  CHECK(std::abs(k[1].value - 4.0) < 4 * k[1].std_error);
  CHECK(std::abs(k[2].value) < 4 * k[2].std_error);
  CHECK(std::abs(k[3].value) < 4 * k[3].std_error);
}

TEST_CASE("gauss-hermite rule integrates normal moments") {
  std::vector<double> x, w;
  gauss_hermite_normal(20, x, w);
  double s0 = 0, s2 = 0, s4 = 0, s8 = 0;
  for (int i = 0; i < 20; ++i) {
    s0 += w[i];
    s2 += w[i] * x[i] * x[i];
    s4 += w[i] * std::pow(x[i], 4);
    s8 += w[i] * std::pow(x[i], 8);
  }
  CHECK(s0 == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(s2 == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(s4 == doctest::Approx(3.0).epsilon(1e-13));
  CHECK(s8 == doctest::Approx(105.0).epsilon(1e-12));
}

TEST_CASE("cumulant expansion") {
  const ScalarFunction sine{{[](double x) { return std::sin(x); }, [](double x) { return std::cos(x); }}};
  auto r = cumulant_expansion_check(HLaw::gaussian, sine, 1, 60);
  CHECK(r.lhs == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(std::abs(r.residual) <= 1e-8);
  r = cumulant_expansion_check(HLaw::gaussian, sine, 1, 60, 2.5);
  CHECK(r.lhs == doctest::Approx(2.5 * std::exp(-1.25)).epsilon(1e-10));
  CHECK(std::abs(r.residual) <= 1e-8);

  const ScalarFunction cube{{[](double x) { return x * x * x; }, [](double x) { return 3 * x * x; },
                             [](double x) { return 6 * x; }, [](double) { return 6.0; }}};
  r = cumulant_expansion_check(HLaw::rademacher, cube, 3, 2);
  CHECK(r.lhs == 1.0);
  CHECK(r.rhs == 1.0);
  CHECK(r.residual == 0.0);

  const ScalarFunction linear{{[](double x) { return 2 * x + 1; }, [](double) { return 2.0; }}};
  for (HLaw law : {HLaw::gaussian, HLaw::rademacher, HLaw::centered_poisson})
    CHECK(std::abs(cumulant_expansion_check(law, linear, 1, 40).residual) <= 1e-12);

  // residual shrinks with the order for a centred poisson variable
  const ScalarFunction expo{{[](double x) { return std::exp(0.3 * x); }, [](double x) { return 0.3 * std::exp(0.3 * x); },
                             [](double x) { return 0.09 * std::exp(0.3 * x); },
                             [](double x) { return 0.027 * std::exp(0.3 * x); },
                             [](double x) { return 0.0081 * std::exp(0.3 * x); }}};
  double prev = 1e9;
  for (int l = 0; l <= 4; ++l) {
    const double res = std::abs(cumulant_expansion_check(HLaw::centered_poisson, expo, l, 80, 3.0).residual);
    CHECK(res < prev);
    prev = res;
  }
  CHECK_THROWS_AS(cumulant_expansion_check(HLaw::gaussian, sine, 2, 60), ConfigError);
}

TEST_CASE("kolmogorov distribution") {
  CHECK(kolmogorov_survival(1.3581) == doctest::Approx(0.05).epsilon(1e-3));
  CHECK(kolmogorov_survival(1.6276) == doctest::Approx(0.01).epsilon(2e-3));
  CHECK(kolmogorov_survival(0.5) == doctest::Approx(0.9639452436).epsilon(1e-8));
  CHECK(kolmogorov_survival(0.0) == 1.0);
  CHECK(kolmogorov_survival(10.0) < 1e-80);
  // continuity across the series switch
  CHECK(kolmogorov_survival(1.18 - 1e-9) == doctest::Approx(kolmogorov_survival(1.18 + 1e-9)).epsilon(1e-7));
}

TEST_CASE("ks normality test") {
  auto x = normal_draws(10000, 0.5, 14);
  const auto r = ks_normality_test(x, 0.5);
  CHECK(r.statistic >= 0.0);
  CHECK(r.statistic <= 1.0);
  CHECK(r.p_value >= 0.01);

  // brute-force statistic
  std::vector<double> s = x;
  std::sort(s.begin(), s.end());
  double d = 0;
  const double n = double(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double F = 0.5 * std::erfc(-s[i] / (0.5 * std::sqrt(2.0)));
    d = std::max({d, (i + 1) / n - F, F - i / n});
  }
  CHECK(r.statistic == doctest::Approx(d).epsilon(1e-12));

  std::vector<double> scaled;
  for (double v : x) scaled.push_back(7.0 * v);
  CHECK(ks_normality_test(scaled, 3.5).statistic == doctest::Approx(r.statistic).epsilon(1e-12));

  const std::vector<double> constant(500, 0.3);
  const auto c = ks_normality_test(constant, 1.0);
  CHECK(c.statistic >= 0.5);
  CHECK(c.p_value < 1e-10);

  const std::vector<double> wide = normal_draws(2000, 1.0, 15);
  CHECK(ks_normality_test(wide, 0.5).p_value < 1e-6);
  const std::vector<double> few(199, 0.0);
  CHECK_THROWS_AS(ks_normality_test(few, 1.0), ConfigError);
}
