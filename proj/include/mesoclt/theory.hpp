#pragma once

#include <complex>
#include <utility>

#include "mesoclt/test_function.hpp"

namespace mesoclt {

using cplx = std::complex<double>;

/// Spectral window around energy E in the bulk: eta = N^{-alpha}.
struct MesoscopicScale {
  double alpha = 0.5;
  double energy = 0.0;

  [[nodiscard]] double eta(int n) const;
  /// Throws ConfigError unless alpha in (0,1) and |E| < 2.
  void validate() const;
  [[nodiscard]] double kappa() const;
};

// Semicircle law ---------------------------------------------------------

double semicircle_density(double x);
double semicircle_cdf(double x);
/// Inverse of semicircle_cdf on [0, 1].
double semicircle_quantile(double p);

/// Stieltjes transform of the semicircle law: the root of m^2 + z m + 1 = 0
/// with Im m * Im z > 0. Throws DomainError for Im z = 0.
cplx stieltjes_m(cplx z);

// Limiting covariances ----------------------------------------------------

struct ResolventCovariance {
  cplx cov;         // E Y(b1) conj(Y(b2))
  cplx pseudo_cov;  // E Y(b1) Y(b2)
};

/// Covariance kernel of the limiting resolvent process: -2/(b1 - conj(b2))^2, pseudo 0.
ResolventCovariance resolvent_covariance(cplx b1, cplx b2);

struct QuadTolerance {
  double abs_tol = 1e-8;
};

/// (1/(2 pi^2)) int int (f1(x)-f1(y))(f2(x)-f2(y))/(x-y)^2 dx dy.
double h_half_covariance(const TestFunction& f1, const TestFunction& f2, QuadTolerance tol = {});

struct FourierGrid {
  double half_width = 2e3;
  int log2_points = 20;
  /// Largest tolerated change when the grid half-width is doubled.
  double aliasing_tol = 1e-5;
};

/// (1/pi) int |xi| |f^(xi)|^2 dxi, from the closed-form transform when the
/// function carries one, otherwise from a trapezoidal transform on a grid.
double h_half_variance_fourier(const TestFunction& f, const FourierGrid& grid = {});

/// Grid-transform path only (ignores any closed form).
double h_half_variance_grid(const TestFunction& f, const FourierGrid& grid = {});

/// N int_{-2}^{2} rho(x) f((x-E)/eta) dx.
double centering_integral(const TestFunction& f, double energy, double eta, int n);

// Rates and moment predictions --------------------------------------------

/// c0(alpha) = min(alpha, 1 - alpha) / 3.
double rate_c0(double alpha);

/// Leading term of E<conj(G)>^n <G>^m: n!/2^n N^{2n(alpha-1)} when m = n, else 0.
double predicted_mixed_moment(int n, int m, double alpha, int dimension);

}  // namespace mesoclt
