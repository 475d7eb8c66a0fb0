#pragma once

#include <functional>
#include <limits>

namespace mesoclt::quad {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Result {
  double value = 0.0;
  double error = 0.0;      // estimated absolute error
  int evaluations = 0;
  bool converged = false;
};

struct Options {
  double abs_tol = 1e-10;
  double rel_tol = 1e-12;
  int max_subdivisions = 2000;
  /// Throw NumericalError when the tolerance is not reached.
  bool throw_on_failure = true;
};

/// Globally adaptive 21-point Gauss-Kronrod integration over [a, b].
/// Either endpoint may be infinite; infinite ranges are mapped onto finite
/// ones. The interval with the largest error estimate is bisected until
/// error <= max(abs_tol, rel_tol * |value|).
Result integrate(const std::function<double(double)>& f, double a, double b,
                 const Options& opts = {});

/// Integrates over consecutive pieces [p0,p1], [p1,p2], ... and sums; use to
/// put breakpoints at known peaks or kinks. The tolerance is shared evenly.
Result integrate_pieces(const std::function<double(double)>& f, const std::vector<double>& points,
                        const Options& opts = {});

}  // namespace mesoclt::quad
