#pragma once

#include <complex>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mesoclt/ensemble.hpp"
#include "mesoclt/numeric.hpp"
#include "mesoclt/spectral.hpp"
#include "mesoclt/test_function.hpp"
#include "mesoclt/theory.hpp"

namespace mesoclt {

struct RunOptions {
  int num_workers = 0;  // 0: hardware concurrency
  int num_batches = 32;
};

/// Spectra of samples 0..n-1 of one ensemble, stored by sample index.
/// Samples whose eigensolve fails are dropped and counted.
struct SpectraSet {
  EnsembleSpec spec;
  std::vector<Spectrum> spectra;
  int requested = 0;
  int aborted = 0;
  std::vector<std::string> abort_reports;
};

/// Throws NumericalError when more than 1% of the samples abort.
SpectraSet sample_spectra(const EnsembleSpec& spec, int num_samples, const RunOptions& opts = {});

enum class Centering {
  empirical,    // subtract the sample mean
  theoretical,  // keep the raw values (bias studies)
};

// Resolvent CLT -----------------------------------------------------------

struct ResolventExperiment {
  int dimension = 0;
  double eta = 0.0;
  std::vector<cplx> b_points;
  Eigen::MatrixXcd samples;  // row r: Y^(b_j) of sample r, uncentred
  std::vector<ComplexEstimate> mean;
  std::vector<std::vector<ComplexEstimate>> cov;         // E <Y_j> conj(<Y_k>)
  std::vector<std::vector<ComplexEstimate>> pseudo_cov;  // E <Y_j> <Y_k>
  std::vector<std::vector<cplx>> cov_theory;
  std::vector<std::vector<cplx>> pseudo_cov_theory;
  /// mixed[j][(n, m)] = E conj(<Y_j>)^n <Y_j>^m, 2 <= n + m <= 4
  std::vector<std::map<std::pair<int, int>, ComplexEstimate>> mixed;
  int num_samples = 0;
  int aborted = 0;
};

ResolventExperiment run_resolvent_experiment(const EnsembleSpec& spec, const MesoscopicScale& scale,
                                             std::span<const cplx> b_points, int num_samples,
                                             const RunOptions& opts = {}, Centering centering = Centering::empirical);
ResolventExperiment resolvent_from_spectra(const SpectraSet& set, const MesoscopicScale& scale,
                                           std::span<const cplx> b_points, const RunOptions& opts = {},
                                           Centering centering = Centering::empirical);

/// Limiting covariance factor of the symmetry class: 1 real, 1/2 complex.
double class_factor(SymmetryClass c);

// Linear statistics -------------------------------------------------------

struct LinstatExperiment {
  int dimension = 0;
  double eta = 0.0;
  std::vector<std::string> labels;
  Eigen::MatrixXd samples;  // row r: Z^(f_j) of sample r, uncentred
  std::vector<Estimate> mean;
  std::vector<Estimate> variance;
  std::vector<Estimate> cumulant3;
  std::vector<Estimate> cumulant4;
  std::vector<std::vector<Estimate>> cov;
  std::vector<std::vector<double>> cov_theory;
  int num_samples = 0;
  int aborted = 0;
};

LinstatExperiment run_linstat_experiment(const EnsembleSpec& spec, const MesoscopicScale& scale,
                                         std::span<const TestFunction> f_list, int num_samples,
                                         const RunOptions& opts = {});
LinstatExperiment linstat_from_spectra(const SpectraSet& set, const MesoscopicScale& scale,
                                       std::span<const TestFunction> f_list, const RunOptions& opts = {});

// Complex / real ratio ----------------------------------------------------

struct RatioObservable {
  enum class Kind { resolvent_abs2, linstat_variance };
  Kind kind = Kind::resolvent_abs2;
  cplx b{0.0, 1.0};
  TestFunction f = catalog::cauchy();
};

struct RatioResult {
  Estimate ratio;
  Estimate numerator;    // first spec of the pair
  Estimate denominator;  // second spec of the pair
};

/// Variance of the observable under pair.first divided by that under
/// pair.second. The specs may differ only in symmetry_class.
RatioResult complex_vs_real_ratio(const std::pair<EnsembleSpec, EnsembleSpec>& spec_pair,
                                  const MesoscopicScale& scale, const RatioObservable& observable, int num_samples,
                                  const RunOptions& opts = {});
/// Ratio with first-order propagated error, treating the two as independent.
RatioResult variance_ratio(Estimate numerator, Estimate denominator);

// Bias rate ---------------------------------------------------------------

struct BiasPoint {
  int dimension = 0;
  double eta = 0.0;
  ComplexEstimate bias;  // E G - m(E + i eta)
  Estimate magnitude;
  double noise = 0.0;        // combined standard error of the bias
  double coarse_bound = 0.0;  // N^{alpha - 1}
  int num_samples = 0;
};

struct BiasFit {
  std::vector<BiasPoint> points;
  double slope = 0.0;
  double intercept = 0.0;
  double slope_std_error = 0.0;
  double slope_ci_low = 0.0;
  double slope_ci_high = 0.0;
  double target_slope = 0.0;  // alpha - 1 - c0/2
  bool noise_dominated = false;
  bool slope_ok = false;
  bool coarse_bound_ok = false;
};

BiasPoint bias_point(const SpectraSet& set, double alpha, double energy, const RunOptions& opts = {});
/// Log-log least squares through the points; needs >= 3 increasing N.
BiasFit fit_bias(std::vector<BiasPoint> points, double alpha);
/// Each N draws from its own seed, derived from spec.master_seed and N.
BiasFit bias_rate_fit(const EnsembleSpec& spec, double alpha, double energy, std::span<const int> n_list,
                      std::span<const int> num_samples, const RunOptions& opts = {});
std::uint64_t seed_for_dimension(std::uint64_t master_seed, int n);

// Local law ---------------------------------------------------------------

struct LocalLawRow {
  cplx z;
  double frac_averaged = 0.0;
  double frac_entrywise = 0.0;
  double worst_averaged = 0.0;   // max over samples of |G - m| / bound
  double worst_entrywise = 0.0;  // max over samples of max_ij |G_ij - delta_ij m| / bound
  bool pass_averaged = false;
  bool pass_entrywise = false;
};

struct LocalLawTable {
  int dimension = 0;
  double epsilon = 0.0;
  int num_samples = 0;
  std::vector<LocalLawRow> rows;
  bool all_pass = false;
};

LocalLawTable local_law_check(const EnsembleSpec& spec, std::span<const cplx> z_grid, int num_samples,
                              double epsilon, const RunOptions& opts = {});

// Mixed moments -----------------------------------------------------------

struct MixedMomentCell {
  int n = 0;
  int m = 0;
  ComplexEstimate empirical;  // E conj(<G>)^n <G>^m at z = E + i eta
  double predicted = 0.0;
  double scale = 0.0;  // N^{(n+m)(alpha-1)}
  Estimate ratio;      // Re empirical / predicted, when predicted != 0
  bool consistent = false;
};

struct MixedMomentTable {
  int dimension = 0;
  double alpha = 0.0;
  int num_samples = 0;
  std::vector<MixedMomentCell> cells;
};

MixedMomentTable mixed_moment_table(const EnsembleSpec& spec, const MesoscopicScale& scale, int max_degree,
                                    int num_samples, const RunOptions& opts = {});
MixedMomentTable mixed_moments_from_spectra(const SpectraSet& set, const MesoscopicScale& scale, int max_degree,
                                            const RunOptions& opts = {});

}  // namespace mesoclt
