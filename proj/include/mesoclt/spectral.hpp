#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mesoclt/ensemble.hpp"
#include "mesoclt/test_function.hpp"

namespace mesoclt {

/// Eigenvalues of one matrix, ascending.
struct Spectrum {
  std::vector<double> eigenvalues;
  std::uint64_t master_seed = 0;
  std::uint64_t sample_index = 0;

  [[nodiscard]] int dimension() const noexcept { return static_cast<int>(eigenvalues.size()); }
};

/// Real symmetric tridiagonal matrix: diagonal d (n), off-diagonal e (n-1).
struct Tridiagonal {
  std::vector<double> diagonal;
  std::vector<double> off_diagonal;
};

/// Unitary reduction of a Hermitian matrix to real symmetric tridiagonal form
/// by Householder reflectors. Works in place on the lower triangle of the
/// column-major n x n buffer.
Tridiagonal householder_tridiagonalize(double* a, int n);
Tridiagonal householder_tridiagonalize(std::complex<double>* a, int n);

/// Implicit QL iteration with Wilkinson shifts; returns sorted eigenvalues.
/// Deflates when |e_i| <= tol * (|d_i| + |d_{i+1}|). Throws NumericalError
/// after 30 sweeps on one eigenvalue.
std::vector<double> tridiagonal_eigenvalues(Tridiagonal t,
                                            double tol = std::numeric_limits<double>::epsilon());

/// All eigenvalues of a Hermitian sample (no eigenvectors).
/// Throws ContractViolation if the sample is not exactly Hermitian.
Spectrum eigenvalues(const MatrixSample& sample, double tol = std::numeric_limits<double>::epsilon());

/// (1/N) sum_i 1/(lambda_i - z). Throws DomainError for Im z = 0.
std::complex<double> trace_resolvent(const Spectrum& spectrum, std::complex<double> z);

/// sum_i f((lambda_i - E)/eta).
double linear_statistic(const Spectrum& spectrum, const TestFunction& f, double energy, double eta);

/// G(z) = (H - z)^{-1} from one LU factorisation of H - z.
Eigen::MatrixXcd resolvent_matrix(const MatrixSample& sample, std::complex<double> z);

/// sup_x |F_N(x) - F_sc(x)| between the empirical eigenvalue CDF and the semicircle CDF.
double empirical_cdf_distance(const Spectrum& spectrum);

}  // namespace mesoclt
