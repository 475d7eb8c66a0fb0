#include "mesoclt/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <fftw3.h>

#include "mesoclt/errors.hpp"
#include "mesoclt/quadrature.hpp"

namespace mesoclt {

using std::numbers::pi;

double MesoscopicScale::eta(int n) const { return std::pow(static_cast<double>(n), -alpha); }

void MesoscopicScale::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha: must lie in (0, 1)");
  if (!(std::abs(energy) < 2.0)) throw ConfigError("energy: must lie in (-2, 2)");
}

double MesoscopicScale::kappa() const { return 2.0 - std::abs(energy); }

double semicircle_density(double x) {
  const double q = 4.0 - x * x;
  return q > 0.0 ? std::sqrt(q) / (2.0 * pi) : 0.0;
}

double semicircle_cdf(double x) {
  if (x <= -2.0) return 0.0;
  if (x >= 2.0) return 1.0;
  const double v = 0.5 + x * std::sqrt(4.0 - x * x) / (4.0 * pi) + std::asin(x / 2.0) / pi;
  return std::clamp(v, 0.0, 1.0);
}

double semicircle_quantile(double p) {
  if (p <= 0.0) return -2.0;
  if (p >= 1.0) return 2.0;
  double lo = -2.0, hi = 2.0;
  for (int it = 0; it < 200 && hi - lo > 4e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    (semicircle_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

cplx stieltjes_m(cplx z) {
  if (z.imag() == 0.0) throw DomainError("stieltjes_m: Im z must be nonzero");
  // Roots of m^2 + z m + 1: take the larger-modulus root from the stable
  // formula, the other is its reciprocal (product of roots = 1).
  const cplx s = std::sqrt(z * z - 4.0);
  const cplx q1 = -0.5 * (z + s);
  const cplx q2 = -0.5 * (z - s);
  const cplx big = std::abs(q1) >= std::abs(q2) ? q1 : q2;
  const cplx small = 1.0 / big;
  // Select by the sign condition, never by a branch cut.
  return (small.imag() * z.imag() > 0.0) ? small : big;
}

ResolventCovariance resolvent_covariance(cplx b1, cplx b2) {
  if (!(b1.imag() > 0.0) || !(b2.imag() > 0.0))
    throw DomainError("resolvent_covariance: arguments must lie in the upper half-plane");
  const cplx d = b1 - std::conj(b2);
  return {-2.0 / (d * d), cplx(0.0, 0.0)};
}

namespace {

// (f(x + u/2) - f(x - u/2)) / u; the removable singularity at u = 0 is f'(x).
double difference_quotient(const TestFunction& f, double x, double u) {
  if (u < 1e-5 * (1.0 + std::abs(x))) {
    return 0.5 * (f.derivative(x + 0.25 * u) + f.derivative(x - 0.25 * u));
  }
  return (f.value(x + 0.5 * u) - f.value(x - 0.5 * u)) / u;
}

}  // namespace

double h_half_covariance(const TestFunction& f1, const TestFunction& f2, QuadTolerance tol) {
  // With y = x - u the double integral becomes int_R du int_R dx D1 D2, and
  // the u -> -u symmetry folds it onto u > 0, giving (1/pi^2) int_0^inf.
  const double target = tol.abs_tol * pi * pi;
  quad::Options inner_opts;
  inner_opts.abs_tol = 0.05 * target;
  inner_opts.rel_tol = 1e-11;
  quad::Options outer_opts;
  outer_opts.abs_tol = 0.5 * target;
  outer_opts.rel_tol = 1e-11;
  // For large u the x-integrand is two bumps at x = +-u/2.
  auto inner = [&](double u) {
    auto g = [&](double x) { return difference_quotient(f1, x, u) * difference_quotient(f2, x, u); };
    std::vector<double> pts{-quad::kInf, 0.0, quad::kInf};
    for (double c : {-0.5 * u, 0.5 * u})
      for (double d : {-1e4, -1e3, -100.0, -10.0, -1.0, 0.0, 1.0, 10.0, 100.0, 1e3, 1e4}) pts.push_back(c + d);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end(), [](double a, double b) { return std::abs(a - b) < 0.25; }),
              pts.end());
    return quad::integrate_pieces(g, pts, inner_opts).value;
  };
  const auto r = quad::integrate_pieces(inner, {0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0, quad::kInf}, outer_opts);
  return r.value / (pi * pi);
}

double h_half_variance_grid(const TestFunction& f, const FourierGrid& grid) {
  auto variance_on = [&](double half_width, long m) {
    const double dx = 2.0 * half_width / static_cast<double>(m);
    std::vector<double> in(static_cast<std::size_t>(m));
    for (long j = 0; j < m; ++j) in[static_cast<std::size_t>(j)] = f.value(-half_width + dx * j);
    const long nc = m / 2 + 1;
    fftw_complex* out = fftw_alloc_complex(static_cast<std::size_t>(nc));
    fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(m), in.data(), out, FFTW_ESTIMATE);
    fftw_execute(plan);
    // |f^(xi_k)| = dx / sqrt(2 pi) |sum_j f(x_j) e^{-i xi_k x_j}|, xi_k = 2 pi k / (m dx)
    const double dxi = 2.0 * pi / (static_cast<double>(m) * dx);
    double acc = 0.0;
    for (long k = 1; k < nc; ++k) {
      const double re = out[k][0], im = out[k][1];
      const double mod2 = (re * re + im * im) * dx * dx / (2.0 * pi);
      const double w = (k == nc - 1 && m % 2 == 0) ? 0.5 : 1.0;  // Nyquist counted once
      acc += w * (dxi * k) * mod2;
    }
    fftw_destroy_plan(plan);
    fftw_free(out);
    // symmetric in xi: (1/pi) * 2 * sum_{k>0}
    return 2.0 * acc * dxi / pi;
  };
  const long m = 1L << grid.log2_points;
  const double v1 = variance_on(grid.half_width, m);
  const double v2 = variance_on(2.0 * grid.half_width, 2 * m);
  if (std::abs(v2 - v1) > grid.aliasing_tol) {
    std::ostringstream msg;
    msg << "h_half_variance_fourier: grid transform of '" << f.label << "' unstable under doubling L ("
        << v1 << " vs " << v2 << ", tolerance " << grid.aliasing_tol << ")";
    throw NumericalError(msg.str());
  }
  return v2;
}

double h_half_variance_fourier(const TestFunction& f, const FourierGrid& grid) {
  if (!f.has_fourier()) return h_half_variance_grid(f, grid);
  auto g = [&](double xi) {
    const double a = f.fourier_modulus(xi);
    return xi * a * a;
  };
  quad::Options opts;
  opts.abs_tol = 1e-13;
  opts.rel_tol = 1e-12;
  const auto r = quad::integrate_pieces(g, {0.0, 1.0, 4.0, 16.0, quad::kInf}, opts);
  return 2.0 * r.value / pi;
}

double centering_integral(const TestFunction& f, double energy, double eta, int n) {
  if (!(eta > 0.0)) throw DomainError("centering_integral: eta must be positive");
  if (!(std::abs(energy) < 2.0)) throw DomainError("centering_integral: |E| must be < 2");
  // x = 2 cos t turns rho(x) dx into (2/pi) sin^2 t dt, removing the edge
  // square-root singularities.
  auto g = [&](double t) {
    const double s = std::sin(t);
    return (2.0 / pi) * s * s * f.value((2.0 * std::cos(t) - energy) / eta);
  };
  const double t0 = std::acos(energy / 2.0);
  const double width = eta / (2.0 * std::sin(t0));
  std::vector<double> pts{0.0, pi};
  for (double k : {-100.0, -10.0, -1.0, 0.0, 1.0, 10.0, 100.0}) {
    const double t = t0 + k * width;
    if (t > 0.0 && t < pi) pts.push_back(t);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  quad::Options opts;
  opts.abs_tol = 1e-15;
  opts.rel_tol = 1e-12;
  opts.max_subdivisions = 5000;
  const auto r = quad::integrate_pieces(g, pts, opts);
  return static_cast<double>(n) * r.value;
}

double rate_c0(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("rate_c0: alpha must lie in (0, 1)");
  return std::min(alpha, 1.0 - alpha) / 3.0;
}

double predicted_mixed_moment(int n, int m, double alpha, int dimension) {
  if (n < 0 || m < 0 || n + m < 2) throw DomainError("predicted_mixed_moment: need n, m >= 0 and n + m >= 2");
  if (n != m) return 0.0;
  return std::tgamma(n + 1.0) / std::pow(2.0, n) *
         std::pow(static_cast<double>(dimension), 2.0 * n * (alpha - 1.0));
}

}  // namespace mesoclt
