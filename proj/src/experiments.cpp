#include "mesoclt/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <optional>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "mesoclt/errors.hpp"
#include "mesoclt/parallel.hpp"
#include "mesoclt/rng.hpp"
#include "mesoclt/stats.hpp"

namespace mesoclt {

namespace {

void check_samples(int num_samples) {
  if (num_samples < 64) throw ConfigError("num_samples must be >= 64, got " + std::to_string(num_samples));
}

void check_b_points(std::span<const cplx> b_points) {
  if (b_points.empty()) throw ConfigError("b_points must not be empty");
  for (cplx b : b_points)
    if (!(b.imag() > 0.0)) throw DomainError("b_points: every Im b must be positive");
}

std::vector<std::vector<ComplexEstimate>> square(std::size_t p) {
  return std::vector<std::vector<ComplexEstimate>>(p, std::vector<ComplexEstimate>(p));
}

Estimate real_part(const ComplexEstimate& e) { return {e.value.real(), e.std_error_re}; }

}  // namespace

SpectraSet sample_spectra(const EnsembleSpec& spec, int num_samples, const RunOptions& opts) {
  spec.validate();
  if (num_samples < 1) throw ConfigError("num_samples must be positive");
  std::vector<std::optional<Spectrum>> slots(static_cast<std::size_t>(num_samples));
  std::vector<std::string> reports(slots.size());
  parallel_for(slots.size(), opts.num_workers, [&](std::size_t i) {
    try {
      slots[i] = eigenvalues(sample_matrix(spec, i));
    } catch (const NumericalError& e) {
      reports[i] = e.what();
    }
  });
  SpectraSet set;
  set.spec = spec;
  set.requested = num_samples;
  set.spectra.reserve(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i]) {
      set.spectra.push_back(std::move(*slots[i]));
    } else {
      ++set.aborted;
      set.abort_reports.push_back(reports[i]);
    }
  }
  if (100 * set.aborted > num_samples) {
    std::ostringstream msg;
    msg << set.aborted << " of " << num_samples << " samples aborted (> 1%); first: " << set.abort_reports.front();
    throw NumericalError(msg.str());
  }
  return set;
}

double class_factor(SymmetryClass c) { return c == SymmetryClass::complex_hermitian ? 0.5 : 1.0; }

// Resolvent CLT -----------------------------------------------------------

ResolventExperiment resolvent_from_spectra(const SpectraSet& set, const MesoscopicScale& scale,
                                           std::span<const cplx> b_points, const RunOptions& opts,
                                           Centering centering) {
  scale.validate();
  check_b_points(b_points);
  const int n = set.spec.dimension;
  const double eta = scale.eta(n);
  const auto p = b_points.size();
  const auto rows = set.spectra.size();

  ResolventExperiment r;
  r.dimension = n;
  r.eta = eta;
  r.b_points.assign(b_points.begin(), b_points.end());
  r.num_samples = static_cast<int>(rows);
  r.aborted = set.aborted;
  r.samples.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(p));

  std::vector<cplx> m_at(p);
  for (std::size_t j = 0; j < p; ++j) m_at[j] = stieltjes_m(cplx(scale.energy, 0.0) + b_points[j] * eta);
  parallel_for(rows, opts.num_workers, [&](std::size_t i) {
    for (std::size_t j = 0; j < p; ++j) {
      const cplx z = cplx(scale.energy, 0.0) + b_points[j] * eta;
      r.samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          static_cast<double>(n) * eta * (trace_resolvent(set.spectra[i], z) - m_at[j]);
    }
  });

  // per-b two-pass centring
  std::vector<std::vector<cplx>> centred(p);
  for (std::size_t j = 0; j < p; ++j) {
    std::vector<cplx> col(rows);
    for (std::size_t i = 0; i < rows; ++i) col[i] = r.samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    centred[j] = centering == Centering::empirical ? centre(col) : col;
  }
  MCAccumulator raw(static_cast<int>(p), 2, opts.num_batches);
  MCAccumulator acc(static_cast<int>(p), 4, opts.num_batches);
  std::vector<cplx> row(p), crow(p);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      row[j] = r.samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      crow[j] = centred[j][i];
    }
    const int b = batch_of(i, rows, opts.num_batches);
    raw.add(b, std::span<const cplx>(row));
    acc.add(b, std::span<const cplx>(crow));
  }

  const double k = class_factor(set.spec.symmetry_class);
  r.cov = square(p);
  r.pseudo_cov = square(p);
  r.cov_theory.assign(p, std::vector<cplx>(p));
  r.pseudo_cov_theory.assign(p, std::vector<cplx>(p));
  r.mixed.resize(p);
  for (std::size_t j = 0; j < p; ++j) {
    r.mean.push_back(raw.mean(static_cast<int>(j)));
    for (std::size_t l = 0; l < p; ++l) {
      r.cov[j][l] = acc.cross(static_cast<int>(j), static_cast<int>(l));
      r.pseudo_cov[j][l] = acc.pseudo(static_cast<int>(j), static_cast<int>(l));
      const auto th = resolvent_covariance(b_points[j], b_points[l]);
      r.cov_theory[j][l] = k * th.cov;
      r.pseudo_cov_theory[j][l] = k * th.pseudo_cov;
    }
    for (int d = 2; d <= 4; ++d)
      for (int nn = 0; nn <= d; ++nn) r.mixed[j][{nn, d - nn}] = acc.mixed(static_cast<int>(j), nn, d - nn);
  }
  return r;
}

ResolventExperiment run_resolvent_experiment(const EnsembleSpec& spec, const MesoscopicScale& scale,
                                             std::span<const cplx> b_points, int num_samples, const RunOptions& opts,
                                             Centering centering) {
  check_samples(num_samples);
  check_b_points(b_points);
  scale.validate();
  return resolvent_from_spectra(sample_spectra(spec, num_samples, opts), scale, b_points, opts, centering);
}

// Linear statistics -------------------------------------------------------

LinstatExperiment linstat_from_spectra(const SpectraSet& set, const MesoscopicScale& scale,
                                       std::span<const TestFunction> f_list, const RunOptions& opts) {
  scale.validate();
  if (f_list.empty()) throw ConfigError("test_functions must not be empty");
  const int n = set.spec.dimension;
  const double eta = scale.eta(n);
  const auto p = f_list.size();
  const auto rows = set.spectra.size();

  LinstatExperiment r;
  r.dimension = n;
  r.eta = eta;
  r.num_samples = static_cast<int>(rows);
  r.aborted = set.aborted;
  for (const auto& f : f_list) r.labels.push_back(f.label);

  std::vector<double> shift(p);
  for (std::size_t j = 0; j < p; ++j) shift[j] = centering_integral(f_list[j], scale.energy, eta, n);
  r.samples.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(p));
  parallel_for(rows, opts.num_workers, [&](std::size_t i) {
    for (std::size_t j = 0; j < p; ++j)
      r.samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          linear_statistic(set.spectra[i], f_list[j], scale.energy, eta) - shift[j];
  });

  std::vector<std::vector<double>> centred(p);
  for (std::size_t j = 0; j < p; ++j) {
    std::vector<double> col(rows);
    for (std::size_t i = 0; i < rows; ++i) col[i] = r.samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    centred[j] = centre(col);
    const auto cum = sample_cumulants(col, opts.num_batches);
    r.cumulant3.push_back(cum[2]);
    r.cumulant4.push_back(cum[3]);
  }
  MCAccumulator raw(static_cast<int>(p), 2, opts.num_batches);
  MCAccumulator acc(static_cast<int>(p), 2, opts.num_batches);
  std::vector<double> row(p), crow(p);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      row[j] = r.samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      crow[j] = centred[j][i];
    }
    const int b = batch_of(i, rows, opts.num_batches);
    raw.add(b, std::span<const double>(row));
    acc.add(b, std::span<const double>(crow));
  }
  const double k = class_factor(set.spec.symmetry_class);
  r.cov.assign(p, std::vector<Estimate>(p));
  r.cov_theory.assign(p, std::vector<double>(p));
  for (std::size_t j = 0; j < p; ++j) {
    r.mean.push_back(real_part(raw.mean(static_cast<int>(j))));
    for (std::size_t l = 0; l < p; ++l) {
      r.cov[j][l] = real_part(acc.cross(static_cast<int>(j), static_cast<int>(l)));
      r.cov_theory[j][l] = l < j ? r.cov_theory[l][j] : k * h_half_covariance(f_list[j], f_list[l]);
    }
    r.variance.push_back(r.cov[j][j]);
  }
  return r;
}

LinstatExperiment run_linstat_experiment(const EnsembleSpec& spec, const MesoscopicScale& scale,
                                         std::span<const TestFunction> f_list, int num_samples,
                                         const RunOptions& opts) {
  check_samples(num_samples);
  scale.validate();
  if (f_list.empty()) throw ConfigError("test_functions must not be empty");
  return linstat_from_spectra(sample_spectra(spec, num_samples, opts), scale, f_list, opts);
}

// Ratio -------------------------------------------------------------------

RatioResult variance_ratio(Estimate num, Estimate den) {
  if (den.value == 0.0) throw NumericalError("variance_ratio: zero denominator");
  RatioResult r{{}, num, den};
  r.ratio.value = num.value / den.value;
  const double a = num.value != 0.0 ? num.std_error / num.value : 0.0;
  const double b = den.std_error / den.value;
  r.ratio.std_error = std::abs(r.ratio.value) * std::hypot(a, b);
  return r;
}

RatioResult complex_vs_real_ratio(const std::pair<EnsembleSpec, EnsembleSpec>& spec_pair,
                                  const MesoscopicScale& scale, const RatioObservable& observable, int num_samples,
                                  const RunOptions& opts) {
  const auto& [a, b] = spec_pair;
  if (a.entry_law != b.entry_law || a.dimension != b.dimension || a.diagonal_variance != b.diagonal_variance ||
      a.heavy_tail_exponent != b.heavy_tail_exponent || a.master_seed != b.master_seed)
    throw ConfigError("complex_vs_real_ratio: the two specs may differ only in symmetry_class");
  check_samples(num_samples);
  auto value = [&](const EnsembleSpec& s) -> Estimate {
    if (observable.kind == RatioObservable::Kind::resolvent_abs2) {
      const cplx b_pt[] = {observable.b};
      return real_part(run_resolvent_experiment(s, scale, b_pt, num_samples, opts).cov[0][0]);
    }
    const TestFunction f[] = {observable.f};
    return run_linstat_experiment(s, scale, f, num_samples, opts).variance[0];
  };
  return variance_ratio(value(a), value(b));
}

// Bias --------------------------------------------------------------------

std::uint64_t seed_for_dimension(std::uint64_t master_seed, int n) {
  return splitmix64(master_seed ^ splitmix64(static_cast<std::uint64_t>(n)));
}

BiasPoint bias_point(const SpectraSet& set, double alpha, double energy, const RunOptions& opts) {
  const MesoscopicScale scale{alpha, energy};
  scale.validate();
  const int n = set.spec.dimension;
  BiasPoint pt;
  pt.dimension = n;
  pt.eta = scale.eta(n);
  pt.num_samples = static_cast<int>(set.spectra.size());
  pt.coarse_bound = std::pow(static_cast<double>(n), alpha - 1.0);
  const cplx z(energy, pt.eta);
  const cplx m = stieltjes_m(z);
  MCAccumulator acc(1, 2, opts.num_batches);
  const auto rows = set.spectra.size();
  for (std::size_t i = 0; i < rows; ++i) {
    const cplx v[] = {trace_resolvent(set.spectra[i], z) - m};
    acc.add(batch_of(i, rows, opts.num_batches), std::span<const cplx>(v));
  }
  pt.bias = acc.mean(0);
  const double re = pt.bias.value.real(), im = pt.bias.value.imag();
  const double mag = std::abs(pt.bias.value);
  pt.magnitude.value = mag;
  pt.magnitude.std_error =
      mag > 0.0 ? std::hypot(re * pt.bias.std_error_re, im * pt.bias.std_error_im) / mag : 0.0;
  pt.noise = std::hypot(pt.bias.std_error_re, pt.bias.std_error_im);
  return pt;
}

BiasFit fit_bias(std::vector<BiasPoint> points, double alpha) {
  if (points.size() < 3) throw ConfigError("bias_rate_fit: N_list needs at least 3 values");
  for (std::size_t i = 1; i < points.size(); ++i)
    if (points[i].dimension <= points[i - 1].dimension) throw ConfigError("bias_rate_fit: N_list must be increasing");
  BiasFit fit;
  fit.target_slope = alpha - 1.0 - rate_c0(alpha) / 2.0;
  fit.coarse_bound_ok = true;
  for (const auto& p : points) {
    if (p.magnitude.value < 3.0 * p.noise || p.magnitude.value == 0.0) fit.noise_dominated = true;
    if (p.magnitude.value > p.coarse_bound) fit.coarse_bound_ok = false;
  }
  const double k = static_cast<double>(points.size());
  double sx = 0, sy = 0;
  for (const auto& p : points) {
    sx += std::log(static_cast<double>(p.dimension));
    sy += std::log(p.magnitude.value);
  }
  const double mx = sx / k, my = sy / k;
  double sxx = 0, sxy = 0;
  for (const auto& p : points) {
    const double dx = std::log(static_cast<double>(p.dimension)) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(p.magnitude.value) - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0;
  for (const auto& p : points) {
    const double e = std::log(p.magnitude.value) - (fit.intercept + fit.slope * std::log(static_cast<double>(p.dimension)));
    rss += e * e;
  }
  fit.slope_std_error = std::sqrt(rss / (k - 2.0) / sxx);
  const boost::math::students_t t(k - 2.0);
  const double q = boost::math::quantile(boost::math::complement(t, 0.025));
  fit.slope_ci_low = fit.slope - q * fit.slope_std_error;
  fit.slope_ci_high = fit.slope + q * fit.slope_std_error;
  fit.slope_ok = std::isfinite(fit.slope) && fit.slope <= fit.target_slope;
  fit.points = std::move(points);
  return fit;
}

BiasFit bias_rate_fit(const EnsembleSpec& spec, double alpha, double energy, std::span<const int> n_list,
                      std::span<const int> num_samples, const RunOptions& opts) {
  if (n_list.size() < 3) throw ConfigError("bias_rate_fit: N_list needs at least 3 values");
  if (num_samples.size() != n_list.size() && num_samples.size() != 1)
    throw ConfigError("bias_rate_fit: num_samples must have one entry or one per N");
  for (std::size_t i = 1; i < n_list.size(); ++i)
    if (n_list[i] <= n_list[i - 1]) throw ConfigError("bias_rate_fit: N_list must be increasing");
  MesoscopicScale{alpha, energy}.validate();
  std::vector<BiasPoint> points;
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    EnsembleSpec s = spec;
    s.dimension = n_list[i];
    s.master_seed = seed_for_dimension(spec.master_seed, n_list[i]);
    const int count = num_samples.size() == 1 ? num_samples[0] : num_samples[i];
    check_samples(count);
    points.push_back(bias_point(sample_spectra(s, count, opts), alpha, energy, opts));
  }
  return fit_bias(std::move(points), alpha);
}

// Local law ---------------------------------------------------------------

LocalLawTable local_law_check(const EnsembleSpec& spec, std::span<const cplx> z_grid, int num_samples,
                              double epsilon, const RunOptions& opts) {
  spec.validate();
  if (z_grid.empty()) throw ConfigError("local_law: z_grid must not be empty");
  for (cplx z : z_grid)
    if (!(z.imag() > 0.0) || std::abs(z.real()) > 10.0)
      throw DomainError("local_law: z_grid point outside the spectral domain");
  if (!(epsilon >= 0.0)) throw ConfigError("local_law: epsilon must be >= 0");
  if (num_samples < 1) throw ConfigError("num_samples must be positive");
  const int n = spec.dimension;
  const double nd = static_cast<double>(n);
  const auto nz = z_grid.size();
  const auto ns = static_cast<std::size_t>(num_samples);
  std::vector<double> avg_ratio(ns * nz), entry_ratio(ns * nz);
  std::vector<cplx> m(nz);
  std::vector<double> avg_bound(nz), entry_bound(nz);
  for (std::size_t k = 0; k < nz; ++k) {
    const cplx z = z_grid[k];
    m[k] = stieltjes_m(z);
    const double ne = nd * z.imag();
    avg_bound[k] = std::pow(nd, epsilon) / ne;
    entry_bound[k] = std::pow(nd, epsilon) * (std::sqrt(m[k].imag() / ne) + 1.0 / ne);
  }
  parallel_for(ns, opts.num_workers, [&](std::size_t i) {
    const MatrixSample h = sample_matrix(spec, i);
    for (std::size_t k = 0; k < nz; ++k) {
      const Eigen::MatrixXcd g = resolvent_matrix(h, z_grid[k]);
      const cplx avg = g.trace() / nd;
      double worst = 0.0;
      for (Eigen::Index c = 0; c < g.cols(); ++c)
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
          const cplx v = r == c ? g(r, c) - m[k] : g(r, c);
          worst = std::max(worst, std::abs(v));
        }
      avg_ratio[i * nz + k] = std::abs(avg - m[k]) / avg_bound[k];
      entry_ratio[i * nz + k] = worst / entry_bound[k];
    }
  });
  LocalLawTable t;
  t.dimension = n;
  t.epsilon = epsilon;
  t.num_samples = num_samples;
  t.all_pass = true;
  for (std::size_t k = 0; k < nz; ++k) {
    LocalLawRow row;
    row.z = z_grid[k];
    int va = 0, ve = 0;
    for (std::size_t i = 0; i < ns; ++i) {
      const double a = avg_ratio[i * nz + k], e = entry_ratio[i * nz + k];
      va += a > 1.0;
      ve += e > 1.0;
      row.worst_averaged = std::max(row.worst_averaged, a);
      row.worst_entrywise = std::max(row.worst_entrywise, e);
    }
    row.frac_averaged = static_cast<double>(va) / static_cast<double>(ns);
    row.frac_entrywise = static_cast<double>(ve) / static_cast<double>(ns);
    row.pass_averaged = row.frac_averaged <= 1e-2;
    row.pass_entrywise = row.frac_entrywise <= 1e-2;
    t.all_pass = t.all_pass && row.pass_averaged && row.pass_entrywise;
    t.rows.push_back(row);
  }
  return t;
}

// Mixed moments -----------------------------------------------------------

MixedMomentTable mixed_moments_from_spectra(const SpectraSet& set, const MesoscopicScale& scale, int max_degree,
                                            const RunOptions& opts) {
  scale.validate();
  if (max_degree < 2 || max_degree > 4) throw ConfigError("mixed_moments: max_degree must be in [2, 4]");
  const int n = set.spec.dimension;
  const double eta = scale.eta(n);
  const cplx z(scale.energy, eta);
  const auto rows = set.spectra.size();
  std::vector<cplx> g(rows);
  parallel_for(rows, opts.num_workers, [&](std::size_t i) { g[i] = trace_resolvent(set.spectra[i], z); });
  const auto c = centre(g);
  MCAccumulator acc(1, max_degree, opts.num_batches);
  for (std::size_t i = 0; i < rows; ++i) acc.add(batch_of(i, rows, opts.num_batches), std::span<const cplx>(&c[i], 1));

  MixedMomentTable t;
  t.dimension = n;
  t.alpha = scale.alpha;
  t.num_samples = static_cast<int>(rows);
  const double k = class_factor(set.spec.symmetry_class);
  for (int d = 2; d <= max_degree; ++d) {
    for (int a = d; a >= 0; --a) {
      MixedMomentCell cell;
      cell.n = a;
      cell.m = d - a;
      cell.empirical = acc.mixed(0, cell.n, cell.m);
      cell.predicted = predicted_mixed_moment(cell.n, cell.m, scale.alpha, n) * std::pow(k, cell.n);
      cell.scale = std::pow(static_cast<double>(n), d * (scale.alpha - 1.0));
      if (cell.predicted != 0.0) {
        cell.ratio = {cell.empirical.value.real() / cell.predicted, cell.empirical.std_error_re / cell.predicted};
        cell.consistent = std::abs(cell.ratio.value - 1.0) <= 3.0 * cell.ratio.std_error;
      } else {
        cell.consistent = std::abs(cell.empirical.value.real()) <= 3.0 * cell.empirical.std_error_re &&
                          std::abs(cell.empirical.value.imag()) <= 3.0 * cell.empirical.std_error_im;
      }
      t.cells.push_back(cell);
    }
  }
  return t;
}

MixedMomentTable mixed_moment_table(const EnsembleSpec& spec, const MesoscopicScale& scale, int max_degree,
                                    int num_samples, const RunOptions& opts) {
  check_samples(num_samples);
  scale.validate();
  if (max_degree < 2 || max_degree > 4) throw ConfigError("mixed_moments: max_degree must be in [2, 4]");
  return mixed_moments_from_spectra(sample_spectra(spec, num_samples, opts), scale, max_degree, opts);
}

}  // namespace mesoclt
