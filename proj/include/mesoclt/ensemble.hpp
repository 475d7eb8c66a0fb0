#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include <Eigen/Dense>

#include "mesoclt/numeric.hpp"

namespace mesoclt {

enum class SymmetryClass { real_symmetric, complex_hermitian };
enum class EntryLaw { gaussian, rademacher, uniform, heavy_tail };

std::string_view to_string(SymmetryClass c);
std::string_view to_string(EntryLaw law);
SymmetryClass parse_symmetry_class(std::string_view s);
EntryLaw parse_entry_law(std::string_view s);

/// How a Wigner matrix is drawn. Off-diagonal entries of sqrt(N) H have mean
/// zero and unit variance for every law; the diagonal has variance zeta.
struct EnsembleSpec {
  SymmetryClass symmetry_class = SymmetryClass::real_symmetric;
  EntryLaw entry_law = EntryLaw::gaussian;
  int dimension = 1;
  /// Variance of sqrt(N) H_ii. Unset means 2 for the real class (GOE) and 1
  /// for the complex class (GUE).
  std::optional<double> diagonal_variance;
  double heavy_tail_exponent = 4.5;
  std::uint64_t master_seed = 0;

  [[nodiscard]] double zeta() const noexcept {
    if (diagonal_variance) return *diagonal_variance;
    return symmetry_class == SymmetryClass::real_symmetric ? 2.0 : 1.0;
  }

  /// Throws ConfigError naming the offending field.
  void validate() const;

  static EnsembleSpec goe(int n, std::uint64_t seed);
  static EnsembleSpec gue(int n, std::uint64_t seed);
};

/// A dense Hermitian matrix together with where it came from. The real class
/// is stored as a real matrix; its imaginary parts are zero by construction.
class MatrixSample {
 public:
  using RealMatrix = Eigen::MatrixXd;
  using ComplexMatrix = Eigen::MatrixXcd;

  MatrixSample(RealMatrix m, std::uint64_t seed = 0, std::uint64_t index = 0);
  MatrixSample(ComplexMatrix m, std::uint64_t seed = 0, std::uint64_t index = 0);

  [[nodiscard]] int dimension() const noexcept;
  [[nodiscard]] bool is_real() const noexcept { return std::holds_alternative<RealMatrix>(entries_); }
  [[nodiscard]] std::complex<double> entry(int i, int j) const;
  [[nodiscard]] const RealMatrix& real() const { return std::get<RealMatrix>(entries_); }
  [[nodiscard]] const ComplexMatrix& complex() const { return std::get<ComplexMatrix>(entries_); }
  [[nodiscard]] ComplexMatrix to_complex() const;
  [[nodiscard]] std::complex<double> trace() const;

  /// Exact check of H = H^*.
  [[nodiscard]] bool is_hermitian() const;

  [[nodiscard]] std::uint64_t master_seed() const noexcept { return seed_; }
  [[nodiscard]] std::uint64_t sample_index() const noexcept { return index_; }
  [[nodiscard]] std::string provenance() const;

 private:
  std::variant<RealMatrix, ComplexMatrix> entries_;
  std::uint64_t seed_;
  std::uint64_t index_;
};

/// Draw sample `sample_index` of the ensemble. Every entry is a pure function
/// of (master_seed, sample_index, i, j), so the result does not depend on
/// which thread produces it.
MatrixSample sample_matrix(const EnsembleSpec& spec, std::uint64_t sample_index);

/// Single entry sqrt(N) H_ij (i <= j) exactly as sample_matrix would draw it.
std::complex<double> scaled_entry(const EnsembleSpec& spec, std::uint64_t sample_index, int i, int j);

struct EntryMoments {
  ComplexEstimate mean;
  Estimate second_abs;       // E|x|^2
  Estimate fourth_abs;       // E|x|^4
  Estimate sixth_abs;        // E|x|^6
  ComplexEstimate pseudo_variance;  // E x^2
};

struct EntryMomentReport {
  EntryMoments off_diagonal;  // sqrt(N) H_12
  EntryMoments diagonal;      // sqrt(N) H_11
  int num_samples = 0;
};

/// Empirical moments of representative entries across independent samples,
/// with 32-batch standard errors. Requires num_samples >= 100.
EntryMomentReport entry_moment_report(const EnsembleSpec& spec, int num_samples);

}  // namespace mesoclt
