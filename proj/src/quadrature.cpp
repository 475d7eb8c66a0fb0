#include "mesoclt/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mesoclt/errors.hpp"

namespace mesoclt::quad {
namespace {

using Kronrod = boost::math::quadrature::gauss_kronrod<double, 21>;
using Gauss = boost::math::quadrature::gauss<double, 10>;

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

// One GK21 panel on [a, b] of a function already mapped to a finite range.
template <class F>
Panel gk21(const F& g, double a, double b) {
  const auto& xk = Kronrod::abscissa();
  const auto& wk = Kronrod::weights();
  const auto& wg = Gauss::weights();
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  // 10-point Gauss has no centre node; Kronrod odd indices are the Gauss nodes.
  const double fc = g(mid);
  double kron = fc * wk[0];
  double gauss = 0.0;
  for (std::size_t i = 1; i < xk.size(); ++i) {
    const double dx = half * xk[i];
    const double fsum = g(mid - dx) + g(mid + dx);
    kron += wk[i] * fsum;
    if (i % 2 == 1) gauss += wg[i / 2] * fsum;
  }
  kron *= half;
  gauss *= half;
  const double err = std::max(std::abs(kron - gauss),
                              50.0 * std::numeric_limits<double>::epsilon() * std::abs(kron));
  return {a, b, kron, err};
}

template <class F>
Result adapt(const F& g, double a, double b, const Options& opts) {
  Result res;
  std::priority_queue<Panel> heap;
  Panel first = gk21(g, a, b);
  res.evaluations = 21;
  heap.push(first);
  double total = first.value;
  double total_err = first.error;
  int splits = 0;
  auto done = [&] {
    return total_err <= std::max(opts.abs_tol, opts.rel_tol * std::abs(total));
  };
  while (!done() && splits < opts.max_subdivisions) {
    Panel worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {  // interval exhausted in double precision
      heap.push(worst);
      break;
    }
    Panel left = gk21(g, worst.a, mid);
    Panel right = gk21(g, mid, worst.b);
    res.evaluations += 42;
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++splits;
  }
  // fresh sum over the panels
  std::vector<Panel> panels;
  panels.reserve(heap.size());
  while (!heap.empty()) {
    panels.push_back(heap.top());
    heap.pop();
  }
  std::sort(panels.begin(), panels.end(), [](const Panel& p, const Panel& q) { return p.a < q.a; });
  double v = 0.0, e = 0.0;
  for (const auto& p : panels) {
    v += p.value;
    e += p.error;
  }
  res.value = v;
  res.error = e;
  res.converged = e <= std::max(opts.abs_tol, opts.rel_tol * std::abs(v));
  return res;
}

void maybe_throw(const Result& r, const Options& opts, double a, double b) {
  if (r.converged || !opts.throw_on_failure) return;
  std::ostringstream msg;
  msg << "quadrature on [" << a << ", " << b << "] did not converge: achieved error " << r.error
      << " vs tolerance " << std::max(opts.abs_tol, opts.rel_tol * std::abs(r.value))
      << " after " << r.evaluations << " evaluations";
  throw NumericalError(msg.str());
}

}  // namespace

Result integrate(const std::function<double(double)>& f, double a, double b, const Options& opts) {
  if (std::isnan(a) || std::isnan(b)) throw DomainError("quadrature: NaN integration limit");
  if (a == b) return {0.0, 0.0, 0, true};
  if (a > b) {
    Result r = integrate(f, b, a, opts);
    r.value = -r.value;
    return r;
  }
  Result r;
  const bool lo_inf = std::isinf(a);
  const bool hi_inf = std::isinf(b);
  if (lo_inf && hi_inf) {
    // x = t / (1 - t^2), t in (-1, 1)
    auto g = [&](double t) {
      const double t2 = t * t;
      const double inv = 1.0 / (1.0 - t2);
      const double x = t * inv;
      const double w = (1.0 + t2) * inv * inv;
      const double fx = f(x);
      return fx == 0.0 ? 0.0 : fx * w;
    };
    r = adapt(g, -1.0, 1.0, opts);
  } else if (hi_inf) {
    // x = a + t / (1 - t), t in [0, 1)
    auto g = [&](double t) {
      const double inv = 1.0 / (1.0 - t);
      const double fx = f(a + t * inv);
      return fx == 0.0 ? 0.0 : fx * inv * inv;
    };
    r = adapt(g, 0.0, 1.0, opts);
  } else if (lo_inf) {
    auto g = [&](double t) {
      const double inv = 1.0 / (1.0 - t);
      const double fx = f(b - t * inv);
      return fx == 0.0 ? 0.0 : fx * inv * inv;
    };
    r = adapt(g, 0.0, 1.0, opts);
  } else {
    r = adapt(f, a, b, opts);
  }
  maybe_throw(r, opts, a, b);
  return r;
}

Result integrate_pieces(const std::function<double(double)>& f, const std::vector<double>& points,
                        const Options& opts) {
  Result total{0.0, 0.0, 0, true};
  if (points.size() < 2) return total;
  Options piece = opts;
  piece.abs_tol = opts.abs_tol / static_cast<double>(points.size() - 1);
  piece.throw_on_failure = false;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const Result r = integrate(f, points[i], points[i + 1], piece);
    total.value += r.value;
    total.error += r.error;
    total.evaluations += r.evaluations;
  }
  total.converged = total.error <= std::max(opts.abs_tol, opts.rel_tol * std::abs(total.value));
  maybe_throw(total, opts, points.front(), points.back());
  return total;
}

}  // namespace mesoclt::quad
