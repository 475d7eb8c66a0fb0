#include "mesoclt/ensemble.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "mesoclt/errors.hpp"
#include "mesoclt/rng.hpp"

namespace mesoclt {

std::string_view to_string(SymmetryClass c) {
  return c == SymmetryClass::real_symmetric ? "real_symmetric" : "complex_hermitian";
}

std::string_view to_string(EntryLaw law) {
  switch (law) {
    case EntryLaw::gaussian: return "gaussian";
    case EntryLaw::rademacher: return "rademacher";
    case EntryLaw::uniform: return "uniform";
    case EntryLaw::heavy_tail: return "heavy_tail";
  }
  return "?";
}

SymmetryClass parse_symmetry_class(std::string_view s) {
  if (s == "real_symmetric" || s == "real" || s == "goe") return SymmetryClass::real_symmetric;
  if (s == "complex_hermitian" || s == "complex" || s == "gue") return SymmetryClass::complex_hermitian;
  throw ConfigError("symmetry_class: unknown value '" + std::string(s) + "'");
}

EntryLaw parse_entry_law(std::string_view s) {
  if (s == "gaussian") return EntryLaw::gaussian;
  if (s == "rademacher") return EntryLaw::rademacher;
  if (s == "uniform") return EntryLaw::uniform;
  if (s == "heavy_tail") return EntryLaw::heavy_tail;
  throw ConfigError("entry_law: unknown value '" + std::string(s) + "'");
}

void EnsembleSpec::validate() const {
  if (dimension < 1) throw ConfigError("dimension: must be >= 1, got " + std::to_string(dimension));
  if (diagonal_variance && !(*diagonal_variance >= 0.0))
    throw ConfigError("diagonal_variance: must be >= 0");
  if (entry_law == EntryLaw::heavy_tail && !(heavy_tail_exponent > 4.0))
    throw ConfigError("heavy_tail_exponent: must be > 4 for entry_law = heavy_tail");
}

EnsembleSpec EnsembleSpec::goe(int n, std::uint64_t seed) {
  EnsembleSpec s;
  s.dimension = n;
  s.master_seed = seed;
  return s;
}

EnsembleSpec EnsembleSpec::gue(int n, std::uint64_t seed) {
  EnsembleSpec s = goe(n, seed);
  s.symmetry_class = SymmetryClass::complex_hermitian;
  return s;
}

// ---------------------------------------------------------------------------

MatrixSample::MatrixSample(RealMatrix m, std::uint64_t seed, std::uint64_t index)
    : entries_(std::move(m)), seed_(seed), index_(index) {}

MatrixSample::MatrixSample(ComplexMatrix m, std::uint64_t seed, std::uint64_t index)
    : entries_(std::move(m)), seed_(seed), index_(index) {}

int MatrixSample::dimension() const noexcept {
  return std::visit([](const auto& m) { return static_cast<int>(m.rows()); }, entries_);
}

std::complex<double> MatrixSample::entry(int i, int j) const {
  return std::visit([&](const auto& m) { return std::complex<double>(m(i, j)); }, entries_);
}

MatrixSample::ComplexMatrix MatrixSample::to_complex() const {
  if (is_real()) return real().cast<std::complex<double>>();
  return complex();
}

std::complex<double> MatrixSample::trace() const {
  return std::visit([](const auto& m) { return std::complex<double>(m.trace()); }, entries_);
}

bool MatrixSample::is_hermitian() const {
  return std::visit(
      [](const auto& m) {
        if (m.rows() != m.cols()) return false;
        for (Eigen::Index j = 0; j < m.cols(); ++j)
          for (Eigen::Index i = j; i < m.rows(); ++i)
            if (std::complex<double>(m(i, j)) != std::conj(std::complex<double>(m(j, i)))) return false;
        return true;
      },
      entries_);
}

std::string MatrixSample::provenance() const {
  std::ostringstream s;
  s << "(master_seed=" << seed_ << ", sample_index=" << index_ << ", N=" << dimension() << ")";
  return s.str();
}

// ---------------------------------------------------------------------------

namespace {

// Unit-variance real variate from one 64-bit word (all laws but gaussian).
// Bits 11..63 drive the magnitude, bit 0 the sign.
double unit_variate(EntryLaw law, double tail_exponent, std::uint64_t w) {
  const double sign = (w & 1u) ? -1.0 : 1.0;
  switch (law) {
    case EntryLaw::rademacher:
      return sign;
    case EntryLaw::uniform:
      // uniform on [-sqrt3, sqrt3]
      return std::numbers::sqrt3 * (2.0 * to_unit_open_closed(w) - 1.0);
    case EntryLaw::heavy_tail: {
      // symmetrised Pareto(x_m, a): E X^2 = a x_m^2 / (a - 2) = 1
      const double a = tail_exponent;
      const double xm = std::sqrt((a - 2.0) / a);
      return sign * xm * std::pow(to_unit_open_closed(w), -1.0 / a);
    }
    case EntryLaw::gaussian:
      break;
  }
  return 0.0;
}

// Entries are keyed by their position in the packed upper triangle, which
// does not depend on N.
std::uint64_t packed_index(int i, int j) {
  return static_cast<std::uint64_t>(j) * (static_cast<std::uint64_t>(j) + 1) / 2 +
         static_cast<std::uint64_t>(i);
}

}  // namespace

std::complex<double> scaled_entry(const EnsembleSpec& spec, std::uint64_t sample_index, int i, int j) {
  if (i > j) return std::conj(scaled_entry(spec, sample_index, j, i));
  const RandomWords w =
      random_words(spec.master_seed, RngDomain::matrix_entries, sample_index, packed_index(i, j));
  const bool gauss = spec.entry_law == EntryLaw::gaussian;
  if (i == j) {
    const double x = gauss ? box_muller(w).first
                           : unit_variate(spec.entry_law, spec.heavy_tail_exponent, w.first);
    return std::sqrt(spec.zeta()) * x;
  }
  if (spec.symmetry_class == SymmetryClass::real_symmetric) {
    return gauss ? box_muller(w).first : unit_variate(spec.entry_law, spec.heavy_tail_exponent, w.first);
  }
  double re, im;
  if (gauss) {
    std::tie(re, im) = box_muller(w);
  } else {
    re = unit_variate(spec.entry_law, spec.heavy_tail_exponent, w.first);
    im = unit_variate(spec.entry_law, spec.heavy_tail_exponent, w.second);
  }
  return {re * std::numbers::sqrt2 / 2.0, im * std::numbers::sqrt2 / 2.0};
}

MatrixSample sample_matrix(const EnsembleSpec& spec, std::uint64_t sample_index) {
  spec.validate();
  const int n = spec.dimension;
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  if (spec.symmetry_class == SymmetryClass::real_symmetric) {
    Eigen::MatrixXd h(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i <= j; ++i) {
        const double v = scaled_entry(spec, sample_index, i, j).real() * scale;
        h(i, j) = v;
        h(j, i) = v;
      }
    return {std::move(h), spec.master_seed, sample_index};
  }
  Eigen::MatrixXcd h(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= j; ++i) {
      const std::complex<double> v = scaled_entry(spec, sample_index, i, j) * scale;
      h(i, j) = v;
      h(j, i) = std::conj(v);
    }
  return {std::move(h), spec.master_seed, sample_index};
}

namespace {

EntryMoments moments_of(const std::vector<std::complex<double>>& xs) {
  constexpr std::size_t kBatches = 32;
  const std::size_t n = xs.size();
  std::array<std::vector<double>, 7> batch;  // re mean, im mean, m2, m4, m6, pv re, pv im
  for (auto& b : batch) b.resize(kBatches);
  std::array<CompensatedSum, 7> total;
  for (std::size_t b = 0; b < kBatches; ++b) {
    auto [lo, hi] = batch_range(n, kBatches, b);
    std::array<CompensatedSum, 7> s;
    for (std::size_t k = lo; k < hi; ++k) {
      const auto x = xs[k];
      const double a2 = std::norm(x);
      const auto sq = x * x;
      const std::array<double, 7> vals{x.real(), x.imag(), a2, a2 * a2, a2 * a2 * a2, sq.real(), sq.imag()};
      for (int q = 0; q < 7; ++q) {
        s[q].add(vals[q]);
        total[q].add(vals[q]);
      }
    }
    const double cnt = static_cast<double>(hi - lo);
    for (int q = 0; q < 7; ++q) batch[q][b] = s[q].value() / cnt;
  }
  const double nn = static_cast<double>(n);
  auto est = [&](int q) { return Estimate{total[q].value() / nn, batch_standard_error(batch[q])}; };
  EntryMoments m;
  m.mean = {{total[0].value() / nn, total[1].value() / nn}, batch_standard_error(batch[0]),
            batch_standard_error(batch[1])};
  m.second_abs = est(2);
  m.fourth_abs = est(3);
  m.sixth_abs = est(4);
  m.pseudo_variance = {{total[5].value() / nn, total[6].value() / nn}, batch_standard_error(batch[5]),
                       batch_standard_error(batch[6])};
  return m;
}

}  // namespace

EntryMomentReport entry_moment_report(const EnsembleSpec& spec, int num_samples) {
  spec.validate();
  if (num_samples < 100) throw ConfigError("num_samples: entry_moment_report needs >= 100 samples");
  if (spec.dimension < 2) throw ConfigError("dimension: entry_moment_report needs N >= 2");
  std::vector<std::complex<double>> off(num_samples), diag(num_samples);
  for (int s = 0; s < num_samples; ++s) {
    off[s] = scaled_entry(spec, static_cast<std::uint64_t>(s), 0, 1);
    diag[s] = scaled_entry(spec, static_cast<std::uint64_t>(s), 0, 0);
  }
  return {moments_of(off), moments_of(diag), num_samples};
}

}  // namespace mesoclt
