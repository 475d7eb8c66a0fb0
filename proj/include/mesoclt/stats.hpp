#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "mesoclt/numeric.hpp"

namespace mesoclt {

/// Moments of one batch (or of the merged total): count, means, second
/// moments of every pair, and conj(x)^n x^m for n + m <= max_degree.
class MomentView {
 public:
  MomentView(int num_observables, int max_degree);

  [[nodiscard]] std::int64_t count() const noexcept { return count_; }
  [[nodiscard]] int num_observables() const noexcept { return p_; }
  [[nodiscard]] int max_degree() const noexcept { return d_; }

  [[nodiscard]] std::complex<double> mean(int j) const;
  /// E x_j conj(x_k). Entries with j > k are the conjugates of the stored ones.
  [[nodiscard]] std::complex<double> cross(int j, int k) const;
  /// E x_j x_k.
  [[nodiscard]] std::complex<double> pseudo(int j, int k) const;
  /// E conj(x_j)^n x_j^m.
  [[nodiscard]] std::complex<double> mixed(int j, int n, int m) const;

 private:
  friend class MCAccumulator;
  void add(std::span<const std::complex<double>> x);
  void absorb(const MomentView& other);
  [[nodiscard]] std::size_t pair_index(int j, int k) const;
  [[nodiscard]] std::size_t power_index(int j, int n, int m) const;

  int p_;
  int d_;
  std::int64_t count_ = 0;
  std::vector<ComplexCompensatedSum> sum_;
  std::vector<ComplexCompensatedSum> cross_;
  std::vector<ComplexCompensatedSum> pseudo_;
  std::vector<ComplexCompensatedSum> powers_;
};

/// Batched Monte Carlo accumulator. Each batch is owned by exactly one
/// accumulator; merge is a disjoint union, and every total is reduced in
/// ascending batch id.
class MCAccumulator {
 public:
  explicit MCAccumulator(int num_observables, int max_degree = 4, int num_batches = 32);

  void add(int batch, std::span<const std::complex<double>> x);
  void add(int batch, std::span<const double> x);
  /// Throws ContractViolation if a batch id is present in both.
  void merge(const MCAccumulator& other);

  [[nodiscard]] std::int64_t num_samples() const;
  [[nodiscard]] int num_batches() const noexcept { return num_batches_; }
  [[nodiscard]] int num_observables() const noexcept { return p_; }
  [[nodiscard]] MomentView total() const;

  /// Statistic evaluated on the total, with the batch-means standard error.
  [[nodiscard]] Estimate estimate(const std::function<double(const MomentView&)>& stat) const;
  [[nodiscard]] ComplexEstimate estimate_complex(
      const std::function<std::complex<double>(const MomentView&)>& stat) const;

  [[nodiscard]] ComplexEstimate mean(int j) const;
  [[nodiscard]] ComplexEstimate cross(int j, int k) const;
  [[nodiscard]] ComplexEstimate pseudo(int j, int k) const;
  [[nodiscard]] ComplexEstimate mixed(int j, int n, int m) const;

 private:
  int p_;
  int d_;
  int num_batches_;
  std::map<int, MomentView> batches_;
};

/// Subtracts the compensated sample mean from every entry (two-pass centring).
std::vector<std::complex<double>> centre(std::span<const std::complex<double>> x);
std::vector<double> centre(std::span<const double> x);

/// Batch id of sample i out of n in the standard contiguous batching.
int batch_of(std::size_t i, std::size_t n, int num_batches);

// Cumulants ---------------------------------------------------------------

struct CumulantVector {
  enum class Source { from_moments, from_samples };
  std::vector<double> values;  // values[k-1] = C_k
  Source source = Source::from_moments;

  [[nodiscard]] double operator[](int k) const { return values.at(static_cast<std::size_t>(k - 1)); }
};

/// moments[k-1] = E h^k, at most 8 of them.
CumulantVector cumulants_from_moments(std::span<const double> moments);
std::vector<double> moments_from_cumulants(const CumulantVector& c);

/// Cumulants k1..k4 of real samples, each with batch standard errors.
std::vector<Estimate> sample_cumulants(std::span<const double> samples, int num_batches = 32);

enum class HLaw { gaussian, rademacher, centered_poisson };

struct ScalarFunction {
  /// derivatives[0] = f, derivatives[k] = f^(k).
  std::vector<std::function<double(double)>> derivatives;
};

struct ExpansionResult {
  double lhs = 0.0;  // E f(h) h
  double rhs = 0.0;  // sum_{k<=l} C_{k+1}/k! E f^(k)(h)
  double residual = 0.0;
};

/// Cumulant expansion of E f(h) h truncated at order l. `parameter` is the
/// variance (gaussian) or the rate (centered_poisson); ignored for rademacher.
ExpansionResult cumulant_expansion_check(HLaw law, const ScalarFunction& f, int order, int num_quadrature_nodes,
                                         double parameter = 1.0);

/// Gauss-Hermite nodes/weights for the standard normal density (weights sum to 1).
void gauss_hermite_normal(int n, std::vector<double>& nodes, std::vector<double>& weights);

// Distribution tests -----------------------------------------------------

struct KSResult {
  double statistic = 0.0;
  double p_value = 0.0;
};

/// One-sample KS against N(0, target_sd^2). Needs at least 200 samples.
KSResult ks_normality_test(std::span<const double> samples, double target_sd);

/// P(sup |B| > lambda) for the Brownian bridge.
double kolmogorov_survival(double lambda);

}  // namespace mesoclt
