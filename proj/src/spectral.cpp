#include "mesoclt/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mesoclt/errors.hpp"
#include "mesoclt/numeric.hpp"
#include "mesoclt/theory.hpp"

namespace mesoclt {

// Reduction as in LAPACK's xSYTD2/xHETD2 (lower). The rank-2 update of step k
// is fused into the matrix-vector product of step k+1.

namespace {

struct Reflector {
  double tau = 0.0;
  double beta = 0.0;
};

// Householder for a real column segment: (I - tau v v^T) [alpha; x] = [beta; 0], v[0] = 1.
Reflector make_reflector(const double* col, int from, int n, double* v) {
  const double alpha = col[from];
  double xn2 = 0.0;
  for (int i = from + 1; i < n; ++i) xn2 += col[i] * col[i];
  v[from] = 1.0;
  if (xn2 == 0.0) {
    for (int i = from + 1; i < n; ++i) v[i] = 0.0;
    return {0.0, alpha};
  }
  const double beta = -std::copysign(std::hypot(alpha, std::sqrt(xn2)), alpha);
  const double scale = 1.0 / (alpha - beta);
  for (int i = from + 1; i < n; ++i) v[i] = col[i] * scale;
  return {(beta - alpha) / beta, beta};
}

// x := tau y; x += (-tau/2 x.v) v
void finish_real(double tau, const double* v, double* y, int from, int n) {
  double dot = 0.0;
#pragma omp simd reduction(+ : dot)
  for (int i = from; i < n; ++i) {
    y[i] *= tau;
    dot += y[i] * v[i];
  }
  const double a = -0.5 * tau * dot;
#pragma omp simd
  for (int i = from; i < n; ++i) y[i] += a * v[i];
}

}  // namespace

Tridiagonal householder_tridiagonalize(double* a, int n) {
  Tridiagonal t;
  t.diagonal.assign(static_cast<std::size_t>(n), 0.0);
  t.off_diagonal.assign(static_cast<std::size_t>(std::max(n - 1, 0)), 0.0);
  if (n == 0) return t;
  if (n == 1) {
    t.diagonal[0] = a[0];
    return t;
  }
  const auto ld = static_cast<std::size_t>(n);
  std::vector<double> v(ld), x(ld, 0.0), w(ld), y(ld, 0.0);

  Reflector cur = make_reflector(a, 1, n, v.data());
  t.off_diagonal[0] = cur.beta;
  if (cur.tau != 0.0) {
    for (int j = 1; j < n; ++j) {
      const double* cj = a + j * ld;
      const double vj = v[j];
      double s = 0.0;
      x[j] += cj[j] * vj;
#pragma omp simd reduction(+ : s)
      for (int i = j + 1; i < n; ++i) {
        x[i] += cj[i] * vj;
        s += cj[i] * v[i];
      }
      x[j] += s;
    }
    finish_real(cur.tau, v.data(), x.data(), 1, n);
  }

  for (int k = 0; k < n - 1; ++k) {
    t.diagonal[k] = a[k * ld + k];
    const int c1 = k + 1;
    double* col1 = a + c1 * ld;
    if (cur.tau != 0.0) {
      const double vj = v[c1], xj = x[c1];
#pragma omp simd
      for (int i = c1; i < n; ++i) col1[i] -= v[i] * xj + x[i] * vj;
    }
    if (k == n - 2) {
      t.diagonal[n - 1] = col1[n - 1];
      break;
    }
    const Reflector next = make_reflector(col1, c1 + 1, n, w.data());
    t.off_diagonal[c1] = next.beta;
    std::fill(y.begin() + c1, y.end(), 0.0);
    for (int j = k + 2; j < n; ++j) {
      double* cj = a + j * ld;
      const double vj = v[j], xj = x[j], wj = w[j];
      double s = 0.0;
      if (cur.tau != 0.0) {
        cj[j] -= 2.0 * vj * xj;
        if (next.tau != 0.0) {
          y[j] += cj[j] * wj;
#pragma omp simd reduction(+ : s)
          for (int i = j + 1; i < n; ++i) {
            const double c = cj[i] - v[i] * xj - x[i] * vj;
            cj[i] = c;
            y[i] += c * wj;
            s += c * w[i];
          }
        } else {
#pragma omp simd
          for (int i = j + 1; i < n; ++i) cj[i] -= v[i] * xj + x[i] * vj;
        }
      } else if (next.tau != 0.0) {
        y[j] += cj[j] * wj;
#pragma omp simd reduction(+ : s)
        for (int i = j + 1; i < n; ++i) {
          y[i] += cj[i] * wj;
          s += cj[i] * w[i];
        }
      }
      y[j] += s;
    }
    if (next.tau != 0.0) finish_real(next.tau, w.data(), y.data(), c1 + 1, n);
    std::swap(v, w);
    std::swap(x, y);
    cur = next;
  }
  return t;
}

// Complex Hermitian version. Arithmetic is spelled out on (re, im) pairs so
// the inner loops vectorise and avoid the inf/nan-checking complex multiply.
namespace {

struct ComplexReflector {
  double tau_re = 0.0, tau_im = 0.0;
  double beta = 0.0;
  [[nodiscard]] bool identity() const { return tau_re == 0.0 && tau_im == 0.0; }
};

// (I - tau v v^H)^H [alpha; x] = [beta; 0] with beta real (xLARFG convention).
ComplexReflector make_complex_reflector(const double* col, int from, int n, double* v) {
  const double ar = col[2 * from], ai = col[2 * from + 1];
  double xn2 = 0.0;
  for (int i = from + 1; i < n; ++i) xn2 += col[2 * i] * col[2 * i] + col[2 * i + 1] * col[2 * i + 1];
  v[2 * from] = 1.0;
  v[2 * from + 1] = 0.0;
  if (xn2 == 0.0 && ai == 0.0) {
    for (int i = from + 1; i < n; ++i) v[2 * i] = v[2 * i + 1] = 0.0;
    return {0.0, 0.0, ar};
  }
  const double norm = std::sqrt(ar * ar + ai * ai + xn2);
  const double beta = -std::copysign(norm, ar);
  ComplexReflector r{(beta - ar) / beta, -ai / beta, beta};
  // scale = 1 / (alpha - beta)
  const double dr = ar - beta, di = ai;
  const double den = dr * dr + di * di;
  const double sr = dr / den, si = -di / den;
  for (int i = from + 1; i < n; ++i) {
    const double xr = col[2 * i], xi = col[2 * i + 1];
    v[2 * i] = xr * sr - xi * si;
    v[2 * i + 1] = xr * si + xi * sr;
  }
  return r;
}

// x := tau y; x += alpha v with alpha = -tau/2 (x^H v)
void finish_complex(const ComplexReflector& r, const double* v, double* y, int from, int n) {
  double dr = 0.0, di = 0.0;
  for (int i = from; i < n; ++i) {
    const double yr = y[2 * i], yi = y[2 * i + 1];
    const double xr = r.tau_re * yr - r.tau_im * yi;
    const double xi = r.tau_re * yi + r.tau_im * yr;
    y[2 * i] = xr;
    y[2 * i + 1] = xi;
    // conj(x) v
    dr += xr * v[2 * i] + xi * v[2 * i + 1];
    di += xr * v[2 * i + 1] - xi * v[2 * i];
  }
  const double alr = -0.5 * (r.tau_re * dr - r.tau_im * di);
  const double ali = -0.5 * (r.tau_re * di + r.tau_im * dr);
  for (int i = from; i < n; ++i) {
    const double vr = v[2 * i], vi = v[2 * i + 1];
    y[2 * i] += alr * vr - ali * vi;
    y[2 * i + 1] += alr * vi + ali * vr;
  }
}

}  // namespace

Tridiagonal householder_tridiagonalize(std::complex<double>* ac, int n) {
  Tridiagonal t;
  t.diagonal.assign(static_cast<std::size_t>(n), 0.0);
  t.off_diagonal.assign(static_cast<std::size_t>(std::max(n - 1, 0)), 0.0);
  if (n == 0) return t;
  auto* a = reinterpret_cast<double*>(ac);
  if (n == 1) {
    t.diagonal[0] = a[0];
    return t;
  }
  const auto ld = static_cast<std::size_t>(2 * n);
  std::vector<double> v(ld), x(ld, 0.0), w(ld), y(ld, 0.0);

  // y += A22 w over columns j >= from, A Hermitian lower (diagonal taken real).
  auto hemv_column = [&](const double* cj, int j, const double* wv, double* yv) {
    const double wr = wv[2 * j], wi = wv[2 * j + 1];
    const double d = cj[2 * j];
    yv[2 * j] += d * wr;
    yv[2 * j + 1] += d * wi;
    double sr = 0.0, si = 0.0;
#pragma omp simd reduction(+ : sr, si)
    for (int i = j + 1; i < n; ++i) {
      const double cr = cj[2 * i], ci = cj[2 * i + 1];
      yv[2 * i] += cr * wr - ci * wi;
      yv[2 * i + 1] += cr * wi + ci * wr;
      // conj(c) w_i
      sr += cr * wv[2 * i] + ci * wv[2 * i + 1];
      si += cr * wv[2 * i + 1] - ci * wv[2 * i];
    }
    yv[2 * j] += sr;
    yv[2 * j + 1] += si;
  };

  ComplexReflector cur = make_complex_reflector(a, 1, n, v.data());
  t.off_diagonal[0] = cur.beta;
  if (!cur.identity()) {
    for (int j = 1; j < n; ++j) hemv_column(a + j * ld, j, v.data(), x.data());
    finish_complex(cur, v.data(), x.data(), 1, n);
  }

  for (int k = 0; k < n - 1; ++k) {
    t.diagonal[k] = a[k * ld + 2 * k];
    const int c1 = k + 1;
    double* col1 = a + c1 * ld;
    // A(i,j) -= v_i conj(x_j) + x_i conj(v_j)
    auto update_column = [&](double* cj, int j) {
      const double vr = v[2 * j], vi = v[2 * j + 1], xr = x[2 * j], xi = x[2 * j + 1];
      cj[2 * j] -= 2.0 * (vr * xr + vi * xi);
      cj[2 * j + 1] = 0.0;
#pragma omp simd
      for (int i = j + 1; i < n; ++i) {
        const double pr = v[2 * i], pi = v[2 * i + 1], qr = x[2 * i], qi = x[2 * i + 1];
        cj[2 * i] -= (pr * xr + pi * xi) + (qr * vr + qi * vi);
        cj[2 * i + 1] -= (pi * xr - pr * xi) + (qi * vr - qr * vi);
      }
    };
    if (!cur.identity()) update_column(col1, c1);
    if (k == n - 2) {
      t.diagonal[n - 1] = col1[2 * (n - 1)];
      break;
    }
    const ComplexReflector next = make_complex_reflector(col1, c1 + 1, n, w.data());
    t.off_diagonal[c1] = next.beta;
    std::fill(y.begin() + 2 * c1, y.end(), 0.0);
    for (int j = k + 2; j < n; ++j) {
      double* cj = a + j * ld;
      if (!cur.identity()) update_column(cj, j);
      if (!next.identity()) hemv_column(cj, j, w.data(), y.data());
    }
    if (!next.identity()) finish_complex(next, w.data(), y.data(), c1 + 1, n);
    std::swap(v, w);
    std::swap(x, y);
    cur = next;
  }
  return t;
}

std::vector<double> tridiagonal_eigenvalues(Tridiagonal t, double tol) {
  std::vector<double>& d = t.diagonal;
  const int n = static_cast<int>(d.size());
  std::vector<double> e(static_cast<std::size_t>(n), 0.0);
  std::copy(t.off_diagonal.begin(), t.off_diagonal.end(), e.begin());
  const double thresh = std::max(tol, std::numeric_limits<double>::epsilon());
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= thresh * dd) break;
      }
      if (m != l) {
        if (iter++ == 30) {
          std::ostringstream msg;
          msg << "tridiagonal QL: no convergence for eigenvalue " << l << " after 30 sweeps";
          throw NumericalError(msg.str());
        }
        // Wilkinson shift from the leading 2x2 block
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        int i;
        for (i = m - 1; i >= l; --i) {
          double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
        }
        if (r == 0.0 && i >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
  std::sort(d.begin(), d.end());
  return std::move(d);
}

Spectrum eigenvalues(const MatrixSample& sample, double tol) {
  if (!sample.is_hermitian())
    throw ContractViolation("eigenvalues: matrix " + sample.provenance() + " is not Hermitian");
  const int n = sample.dimension();
  Tridiagonal tri;
  if (sample.is_real()) {
    Eigen::MatrixXd work = sample.real();
    tri = householder_tridiagonalize(work.data(), n);
  } else {
    Eigen::MatrixXcd work = sample.complex();
    tri = householder_tridiagonalize(work.data(), n);
  }
  Spectrum s;
  s.master_seed = sample.master_seed();
  s.sample_index = sample.sample_index();
  try {
    s.eigenvalues = tridiagonal_eigenvalues(std::move(tri), tol);
  } catch (const NumericalError& err) {
    throw NumericalError(std::string(err.what()) + " for matrix " + sample.provenance());
  }
  return s;
}

std::complex<double> trace_resolvent(const Spectrum& spectrum, std::complex<double> z) {
  if (z.imag() == 0.0) throw DomainError("trace_resolvent: Im z must be nonzero");
  ComplexCompensatedSum sum;
  const double zr = z.real(), zi = z.imag();
  for (double lambda : spectrum.eigenvalues) {
    // 1/(lambda - z) = (lambda - zr + i zi) / ((lambda - zr)^2 + zi^2)
    const double dx = lambda - zr;
    const double den = dx * dx + zi * zi;
    sum.add({dx / den, zi / den});
  }
  return sum.value() / static_cast<double>(spectrum.dimension());
}

double linear_statistic(const Spectrum& spectrum, const TestFunction& f, double energy, double eta) {
  if (!(eta > 0.0)) throw DomainError("linear_statistic: eta must be positive");
  CompensatedSum sum;
  for (double lambda : spectrum.eigenvalues) sum.add(f.value((lambda - energy) / eta));
  return sum.value();
}

Eigen::MatrixXcd resolvent_matrix(const MatrixSample& sample, std::complex<double> z) {
  if (z.imag() == 0.0) throw DomainError("resolvent_matrix: Im z must be nonzero");
  const int n = sample.dimension();
  Eigen::MatrixXcd shifted = sample.to_complex();
  shifted.diagonal().array() -= z;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(shifted);
  return lu.solve(Eigen::MatrixXcd::Identity(n, n));
}

double empirical_cdf_distance(const Spectrum& spectrum) {
  std::vector<double> ev = spectrum.eigenvalues;
  std::sort(ev.begin(), ev.end());
  const double n = static_cast<double>(ev.size());
  double d = 0.0;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    const double f = semicircle_cdf(ev[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

}  // namespace mesoclt
