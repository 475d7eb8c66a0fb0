#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mesoclt/test_function.hpp"
#include "mesoclt/theory.hpp"

namespace mesoclt {

struct GPConfig {
  int truncation_K = 0;  // 0: choose from target_tail_variance
  std::uint64_t seed = 0;
  double target_tail_variance = 1e-6;

  void validate() const;
};

/// Variance of the terms k > K omitted from the series for Y(b).
double series_tail_variance(cplx b, int truncation_K);

/// Smallest K >= 1 whose omitted tail variance is <= eps at every b.
int choose_truncation(std::span<const cplx> b_points, double eps);

/// Rows are independent draws of (Y(b_1), ..., Y(b_p)) from the series
///   Y(b) = 2^{-1/2} (2/(b+i))^2 sum_k sqrt(k+1) ((b-i)/(b+i))^k theta_k,
/// one set of standard complex Gaussians theta per row, shared across b.
/// Row r depends only on (seed, r).
Eigen::MatrixXcd sample_Y(std::span<const cplx> b_points, const GPConfig& config, int num_samples);

/// Gram matrix of the limiting linear-statistic covariance on f_list.
Eigen::MatrixXd h_half_gram(std::span<const TestFunction> f_list, QuadTolerance tol = {});

/// Mean-zero Gaussian vectors with covariance `gram`, via eigendecomposition.
/// Jitter 1e-10 * trace is added when the smallest eigenvalue is in
/// (-1e-8, 0); anything more negative throws NumericalError.
Eigen::MatrixXd sample_gaussian_field(const Eigen::MatrixXd& gram, int num_samples, std::uint64_t seed);

/// Samples of (Z(f_1), ..., Z(f_p)); rows are draws.
Eigen::MatrixXd sample_Z(std::span<const TestFunction> f_list, int num_samples, std::uint64_t seed);

}  // namespace mesoclt
