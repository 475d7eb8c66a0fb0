#pragma once

#include <complex>

#include "mesoclt/ensemble.hpp"
#include "mesoclt/spectral.hpp"
#include "mesoclt/test_function.hpp"

namespace mesoclt {

/// Smooth cutoff: 1 on [-1, 1], 0 outside [-2, 2], C-infinity in between.
struct CutoffFunction {
  [[nodiscard]] static double value(double y);
  [[nodiscard]] static double derivative(double y);
};

enum class ExtensionVariant {
  first_order,      // f(x) + i (f(x+y) - f(x)); needs f in C^1
  derivative_form,  // f(x) + i y f'(x);         needs f in C^2
};

/// Almost analytic extension of f, cut off by chi(Im z / cutoff_scale).
class AlmostAnalyticExtension {
 public:
  AlmostAnalyticExtension(ExtensionVariant variant, TestFunction f, double cutoff_scale = 1.0);

  [[nodiscard]] std::complex<double> value(std::complex<double> z) const;
  /// d/d(conj z) of value(z) * chi(Im z / cutoff_scale).
  [[nodiscard]] std::complex<double> dbar(std::complex<double> z) const;

  [[nodiscard]] ExtensionVariant variant() const noexcept { return variant_; }
  [[nodiscard]] const TestFunction& source() const noexcept { return f_; }
  [[nodiscard]] double cutoff_scale() const noexcept { return scale_; }

 private:
  ExtensionVariant variant_;
  TestFunction f_;
  double scale_;
};

/// f(lambda) recovered as (1/pi) int dbar(f~ chi)(z) / (lambda - z) d^2z.
/// Throws NumericalError when the 2D quadrature misses quad_tol.
double hs_reconstruct_scalar(const AlmostAnalyticExtension& ext, double lambda, double quad_tol);

/// Weight of the first-order representation of f_eta(x) = f((x-E)/eta):
/// Tr f_eta(H) = int varphi_f(z) Tr G(z) d^2z, cutoff chi(y/sigma).
std::complex<double> varphi_f(std::complex<double> z, const TestFunction& f, double energy, double eta,
                              double sigma);

/// Tr f((H-E)/eta) from the resolvent-trace integral. sigma = 0 selects eta/4.
/// Requires 0 < sigma <= eta.
double hs_trace(const Spectrum& spectrum, const TestFunction& f, double energy, double eta, double sigma,
                double quad_tol, ExtensionVariant variant = ExtensionVariant::first_order);
double hs_trace(const MatrixSample& sample, const TestFunction& f, double energy, double eta, double sigma,
                double quad_tol, ExtensionVariant variant = ExtensionVariant::first_order);

}  // namespace mesoclt
