#include "mesoclt/hs_calculus.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <sstream>
#include <vector>

#include "mesoclt/errors.hpp"
#include "mesoclt/quadrature.hpp"

namespace mesoclt {

using cplx = std::complex<double>;
using std::numbers::pi;

namespace {

// Standard smooth step built from exp(-1/t).
double bump(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }
double bump_prime(double t) { return t > 0.0 ? std::exp(-1.0 / t) / (t * t) : 0.0; }

}  // namespace

double CutoffFunction::value(double y) {
  const double a = std::abs(y);
  if (a <= 1.0) return 1.0;
  if (a >= 2.0) return 0.0;
  const double t = a - 1.0;
  const double p = bump(1.0 - t), q = bump(t);
  return p / (p + q);
}

double CutoffFunction::derivative(double y) {
  const double a = std::abs(y);
  if (a <= 1.0 || a >= 2.0) return 0.0;
  const double t = a - 1.0;
  const double p = bump(1.0 - t), q = bump(t);
  const double dp = -bump_prime(1.0 - t), dq = bump_prime(t);
  const double s = p + q;
  const double d = (dp * q - p * dq) / (s * s);
  return y > 0.0 ? d : -d;
}

namespace {

// f((x - E)/eta) with its x-derivatives.
struct Rescaled {
  const TestFunction& f;
  double energy;
  double eta;
  double value(double x) const { return f.value((x - energy) / eta); }
  double d1(double x) const { return f.derivative((x - energy) / eta) / eta; }
  double d2(double x) const { return f.second_derivative((x - energy) / eta) / (eta * eta); }
};

cplx dbar_of(ExtensionVariant variant, const Rescaled& g, double s, cplx z) {
  const double x = z.real(), y = z.imag();
  const double chi = CutoffFunction::value(y / s);
  const double chip = CutoffFunction::derivative(y / s) / s;
  const cplx i(0.0, 1.0);
  if (variant == ExtensionVariant::first_order) {
    if (chi == 0.0 && chip == 0.0) return 0.0;
    const double fx = g.value(x);
    const double df = g.d1(x + y) - g.d1(x);
    cplx r = 0.5 * (i - 1.0) * df * chi;
    if (chip != 0.0) r += 0.5 * (i * fx - (g.value(x + y) - fx)) * chip;
    return r;
  }
  if (chi == 0.0 && chip == 0.0) return 0.0;
  cplx r = 0.5 * i * y * g.d2(x) * chi;
  if (chip != 0.0) r += 0.5 * (i * g.value(x) - y * g.d1(x)) * chip;
  return r;
}

void check_variant(ExtensionVariant variant, const TestFunction& f) {
  if (variant == ExtensionVariant::derivative_form && !f.is_c2())
    throw ConfigError("derivative_form extension needs a C^2 test function; '" + f.label +
                      "' has no second derivative");
}

// (1/pi) Re int_{|y| > y_min} dbar(z) * sum_k 1/(lambda_k - z) d^2z
//
// Strips in |y| shrink geometrically towards 0. The x-integration gets
// breakpoints at every pole and at the bump of f.
double hs_integrate(ExtensionVariant variant, const Rescaled& g, double s, std::span<const double> poles,
                    double quad_tol) {
  const double y_min = s * 1e-6;
  std::vector<double> y_breaks;
  for (double y = 2.0 * s; y > y_min; y *= 1.0 / 16.0) y_breaks.push_back(y);
  y_breaks.push_back(y_min);
  std::reverse(y_breaks.begin(), y_breaks.end());

  std::vector<double> centres(poles.begin(), poles.end());
  std::sort(centres.begin(), centres.end());
  centres.erase(std::unique(centres.begin(), centres.end()), centres.end());

  quad::Options inner_opts;
  inner_opts.abs_tol = 0.02 * quad_tol * pi / (4.0 * s);
  inner_opts.rel_tol = 1e-13;
  inner_opts.max_subdivisions = 4000;
  quad::Options tail_opts = inner_opts;
  tail_opts.max_subdivisions = 40;
  tail_opts.throw_on_failure = false;
  quad::Options outer_opts;
  outer_opts.abs_tol = 0.25 * quad_tol * pi;
  outer_opts.rel_tol = 1e-13;
  outer_opts.max_subdivisions = 4000;

  auto x_integral = [&](double y) {
    auto h = [&](double x) {
      const cplx z(x, y);
      const cplx d = dbar_of(variant, g, s, z);
      if (d == 0.0) return 0.0;
      double acc = 0.0;
      for (double lam : poles) {
        const double dx = lam - x;
        // Re[d / (dx - i y)] = Re[d (dx + i y)] / (dx^2 + y^2)
        acc += (d.real() * dx - d.imag() * y) / (dx * dx + y * y);
      }
      return acc;
    };
    std::vector<double> pts;
    const double ay = std::abs(y);
    for (double c : centres)
      for (double k : {-10.0, -1.0, 0.0, 1.0, 10.0}) pts.push_back(c + k * ay);
    for (double k : {-1e3, -1e2, -10.0, -1.0, 0.0, 1.0, 10.0, 1e2, 1e3}) pts.push_back(g.energy + k * g.eta);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    double v = quad::integrate_pieces(h, pts, inner_opts).value;
    // far tails get a capped budget
    v += quad::integrate(h, -quad::kInf, pts.front(), tail_opts).value;
    v += quad::integrate(h, pts.back(), quad::kInf, tail_opts).value;
    return v;
  };

  double total = 0.0;
  for (double sign : {1.0, -1.0}) {
    auto outer = [&](double ay) { return x_integral(sign * ay); };
    total += quad::integrate_pieces(outer, y_breaks, outer_opts).value;
  }
  return total / pi;
}

}  // namespace

AlmostAnalyticExtension::AlmostAnalyticExtension(ExtensionVariant variant, TestFunction f, double cutoff_scale)
    : variant_(variant), f_(std::move(f)), scale_(cutoff_scale) {
  if (!(cutoff_scale > 0.0)) throw DomainError("AlmostAnalyticExtension: cutoff_scale must be positive");
  check_variant(variant_, f_);
}

cplx AlmostAnalyticExtension::value(cplx z) const {
  const double x = z.real(), y = z.imag();
  const double fx = f_.value(x);
  if (variant_ == ExtensionVariant::first_order) return {fx, f_.value(x + y) - fx};
  return {fx, y * f_.derivative(x)};
}

cplx AlmostAnalyticExtension::dbar(cplx z) const {
  return dbar_of(variant_, Rescaled{f_, 0.0, 1.0}, scale_, z);
}

double hs_reconstruct_scalar(const AlmostAnalyticExtension& ext, double lambda, double quad_tol) {
  if (!(quad_tol > 0.0)) throw DomainError("hs_reconstruct_scalar: quad_tol must be positive");
  const double pole[] = {lambda};
  return hs_integrate(ext.variant(), Rescaled{ext.source(), 0.0, 1.0}, ext.cutoff_scale(), pole, quad_tol);
}

cplx varphi_f(cplx z, const TestFunction& f, double energy, double eta, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("varphi_f: sigma must be positive");
  if (!(eta > 0.0)) throw DomainError("varphi_f: eta must be positive");
  return dbar_of(ExtensionVariant::first_order, Rescaled{f, energy, eta}, sigma, z) / pi;
}

double hs_trace(const Spectrum& spectrum, const TestFunction& f, double energy, double eta, double sigma,
                double quad_tol, ExtensionVariant variant) {
  if (sigma == 0.0) sigma = eta / 4.0;
  if (!(eta > 0.0) || !(sigma > 0.0) || sigma > eta)
    throw DomainError("hs_trace: need 0 < sigma <= eta");
  if (!(quad_tol > 0.0)) throw DomainError("hs_trace: quad_tol must be positive");
  check_variant(variant, f);
  return hs_integrate(variant, Rescaled{f, energy, eta}, sigma, spectrum.eigenvalues, quad_tol);
}

double hs_trace(const MatrixSample& sample, const TestFunction& f, double energy, double eta, double sigma,
                double quad_tol, ExtensionVariant variant) {
  return hs_trace(eigenvalues(sample), f, energy, eta, sigma, quad_tol, variant);
}

}  // namespace mesoclt
