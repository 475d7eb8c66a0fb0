#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace mesoclt {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

class ComplexCompensatedSum {
 public:
  void add(std::complex<double> z) noexcept {
    re_.add(z.real());
    im_.add(z.imag());
  }
  [[nodiscard]] std::complex<double> value() const noexcept { return {re_.value(), im_.value()}; }

 private:
  CompensatedSum re_;
  CompensatedSum im_;
};

/// Estimate with a standard error.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

struct ComplexEstimate {
  std::complex<double> value;
  double std_error_re = 0.0;
  double std_error_im = 0.0;
};

/// Half-open index range [begin, end) of batch `b` when `n` items are cut into
/// `num_batches` contiguous batches as evenly as possible.
inline std::pair<std::size_t, std::size_t> batch_range(std::size_t n, std::size_t num_batches,
                                                       std::size_t b) noexcept {
  return {b * n / num_batches, (b + 1) * n / num_batches};
}

/// Standard error of a statistic from its per-batch values:
/// sd(batch values) / sqrt(num_batches).
inline double batch_standard_error(std::span<const double> batch_values) {
  const std::size_t k = batch_values.size();
  if (k < 2) return 0.0;
  CompensatedSum s;
  for (double v : batch_values) s.add(v);
  const double mean = s.value() / static_cast<double>(k);
  CompensatedSum ss;
  for (double v : batch_values) ss.add((v - mean) * (v - mean));
  const double var = ss.value() / static_cast<double>(k - 1);
  return std::sqrt(var / static_cast<double>(k));
}

}  // namespace mesoclt
