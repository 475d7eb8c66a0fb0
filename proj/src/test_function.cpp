#include "mesoclt/test_function.hpp"

#include <algorithm>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>

#include "mesoclt/errors.hpp"

namespace mesoclt {

TestFunction TestFunction::dilated(double lambda) const {
  if (!(lambda > 0.0)) throw DomainError("dilation factor must be positive");
  TestFunction g = *this;
  g.label = label + "@" + std::to_string(lambda);
  g.value = [f = value, lambda](double x) { return f(lambda * x); };
  g.derivative = [f = derivative, lambda](double x) { return lambda * f(lambda * x); };
  if (second_derivative)
    g.second_derivative = [f = second_derivative, lambda](double x) { return lambda * lambda * f(lambda * x); };
  if (fourier_modulus)
    g.fourier_modulus = [f = fourier_modulus, lambda](double xi) { return f(xi / lambda) / lambda; };
  return g;
}

TestFunction TestFunction::scaled(double c) const {
  TestFunction g = *this;
  g.label = std::to_string(c) + "*" + label;
  g.value = [f = value, c](double x) { return c * f(x); };
  g.derivative = [f = derivative, c](double x) { return c * f(x); };
  if (second_derivative) g.second_derivative = [f = second_derivative, c](double x) { return c * f(x); };
  if (fourier_modulus) g.fourier_modulus = [f = fourier_modulus, c](double xi) { return std::abs(c) * f(xi); };
  return g;
}

TestFunction TestFunction::plus(const TestFunction& o) const {
  TestFunction g;
  g.label = label + "+" + o.label;
  g.value = [f = value, h = o.value](double x) { return f(x) + h(x); };
  g.derivative = [f = derivative, h = o.derivative](double x) { return f(x) + h(x); };
  if (second_derivative && o.second_derivative)
    g.second_derivative = [f = second_derivative, h = o.second_derivative](double x) { return f(x) + h(x); };
  g.hoelder_r = std::min(hoelder_r, o.hoelder_r);
  g.decay_s = std::min(decay_s, o.decay_s);
  return g;
}

namespace catalog {

TestFunction cauchy() {
  TestFunction f;
  f.label = "cauchy";
  f.value = [](double x) { return 1.0 / (1.0 + x * x); };
  f.derivative = [](double x) {
    const double q = 1.0 + x * x;
    return -2.0 * x / (q * q);
  };
  f.second_derivative = [](double x) {
    const double q = 1.0 + x * x;
    return (6.0 * x * x - 2.0) / (q * q * q);
  };
  f.fourier_modulus = [](double xi) { return std::sqrt(std::numbers::pi / 2.0) * std::exp(-std::abs(xi)); };
  return f;
}

TestFunction gauss() {
  TestFunction f;
  f.label = "gauss";
  f.value = [](double x) { return std::exp(-0.5 * x * x); };
  f.derivative = [](double x) { return -x * std::exp(-0.5 * x * x); };
  f.second_derivative = [](double x) { return (x * x - 1.0) * std::exp(-0.5 * x * x); };
  f.fourier_modulus = [](double xi) { return std::exp(-0.5 * xi * xi); };
  return f;
}

TestFunction poly_decay() {
  TestFunction f;
  f.label = "poly_decay";
  f.decay_s = 0.5;
  f.value = [](double x) { return std::pow(1.0 + x * x, -0.75); };
  f.derivative = [](double x) { return -1.5 * x * std::pow(1.0 + x * x, -1.75); };
  f.second_derivative = [](double x) {
    const double q = 1.0 + x * x;
    return -1.5 * std::pow(q, -1.75) + 5.25 * x * x * std::pow(q, -2.75);
  };
  // int e^{-i xi x} (1+x^2)^{-nu-1/2} dx = 2 sqrt(pi)/Gamma(nu+1/2) (|xi|/2)^nu K_nu(|xi|), nu = 1/4
  f.fourier_modulus = [](double xi) {
    const double a = std::abs(xi);
    const double g34 = boost::math::tgamma(0.75);
    const double pref = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    if (a < 1e-300) return pref * std::sqrt(std::numbers::pi) * boost::math::tgamma(0.25) / g34;
    if (a > 700.0) return 0.0;
    return pref * 2.0 * std::sqrt(std::numbers::pi) / g34 * std::pow(a / 2.0, 0.25) *
           boost::math::cyl_bessel_k(0.25, a);
  };
  return f;
}

TestFunction wiggle() {
  TestFunction f;
  f.label = "wiggle";
  f.value = [](double x) { return std::sin(x) / (1.0 + x * x); };
  f.derivative = [](double x) {
    const double q = 1.0 + x * x;
    return std::cos(x) / q - 2.0 * x * std::sin(x) / (q * q);
  };
  f.second_derivative = [](double x) {
    const double q = 1.0 + x * x;
    return -std::sin(x) / q - 4.0 * x * std::cos(x) / (q * q) + std::sin(x) * (6.0 * x * x - 2.0) / (q * q * q);
  };
  // f^ = (2 pi)^{-1/2} (pi / 2i) (e^{-|xi-1|} - e^{-|xi+1|})
  f.fourier_modulus = [](double xi) {
    return std::sqrt(std::numbers::pi / 8.0) * std::abs(std::exp(-std::abs(xi - 1.0)) - std::exp(-std::abs(xi + 1.0)));
  };
  return f;
}

TestFunction zero() {
  TestFunction f;
  f.label = "zero";
  f.value = [](double) { return 0.0; };
  f.derivative = [](double) { return 0.0; };
  f.second_derivative = [](double) { return 0.0; };
  f.fourier_modulus = [](double) { return 0.0; };
  return f;
}

std::vector<TestFunction> all() { return {cauchy(), gauss(), poly_decay(), wiggle()}; }

TestFunction by_label(const std::string& label) {
  const auto at = label.find('@');
  const std::string base = label.substr(0, at);
  TestFunction f;
  if (base == "cauchy") f = cauchy();
  else if (base == "gauss") f = gauss();
  else if (base == "poly_decay") f = poly_decay();
  else if (base == "wiggle") f = wiggle();
  else if (base == "zero") f = zero();
  else throw ConfigError("test_functions: unknown label '" + base + "'");
  if (at == std::string::npos) return f;
  double lambda = 0.0;
  try {
    lambda = std::stod(label.substr(at + 1));
  } catch (const std::exception&) {
    throw ConfigError("test_functions: bad dilation in '" + label + "'");
  }
  if (!(lambda > 0.0)) throw ConfigError("test_functions: dilation must be positive in '" + label + "'");
  TestFunction g = f.dilated(lambda);
  g.label = label;
  return g;
}

}  // namespace catalog

double decay_constant(const TestFunction& f, double x_max, int grid_points) {
  double worst = 0.0;
  for (int k = 0; k < grid_points; ++k) {
    const double x = -x_max + 2.0 * x_max * k / (grid_points - 1);
    const double w = std::pow(1.0 + std::abs(x), 1.0 + f.decay_s);
    worst = std::max(worst, (std::abs(f.value(x)) + std::abs(f.derivative(x))) * w);
  }
  return worst;
}

}  // namespace mesoclt
