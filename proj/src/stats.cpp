#include "mesoclt/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "mesoclt/errors.hpp"

namespace mesoclt {

using cplx = std::complex<double>;

// MomentView --------------------------------------------------------------

MomentView::MomentView(int num_observables, int max_degree) : p_(num_observables), d_(max_degree) {
  if (p_ < 1) throw DomainError("MomentView: need at least one observable");
  if (d_ < 2 || d_ > 8) throw DomainError("MomentView: max_degree must be in [2, 8]");
  const auto p = static_cast<std::size_t>(p_);
  const auto d1 = static_cast<std::size_t>(d_ + 1);
  sum_.resize(p);
  cross_.resize(p * (p + 1) / 2);
  pseudo_.resize(p * (p + 1) / 2);
  powers_.resize(p * d1 * d1);
}

std::size_t MomentView::pair_index(int j, int k) const {
  if (j > k) std::swap(j, k);
  return static_cast<std::size_t>(k) * static_cast<std::size_t>(k + 1) / 2 + static_cast<std::size_t>(j);
}

std::size_t MomentView::power_index(int j, int n, int m) const {
  const auto d1 = static_cast<std::size_t>(d_ + 1);
  return (static_cast<std::size_t>(j) * d1 + static_cast<std::size_t>(n)) * d1 + static_cast<std::size_t>(m);
}

void MomentView::add(std::span<const cplx> x) {
  if (static_cast<int>(x.size()) != p_) throw ContractViolation("MomentView::add: wrong observable count");
  ++count_;
  for (int k = 0; k < p_; ++k) {
    sum_[static_cast<std::size_t>(k)].add(x[static_cast<std::size_t>(k)]);
    for (int j = 0; j <= k; ++j) {
      const cplx a = x[static_cast<std::size_t>(j)], b = x[static_cast<std::size_t>(k)];
      cross_[pair_index(j, k)].add(a * std::conj(b));
      pseudo_[pair_index(j, k)].add(a * b);
    }
  }
  std::vector<cplx> xm(static_cast<std::size_t>(d_ + 1)), cn(static_cast<std::size_t>(d_ + 1));
  for (int j = 0; j < p_; ++j) {
    const cplx v = x[static_cast<std::size_t>(j)];
    xm[0] = cn[0] = 1.0;
    for (int q = 1; q <= d_; ++q) {
      xm[static_cast<std::size_t>(q)] = xm[static_cast<std::size_t>(q - 1)] * v;
      cn[static_cast<std::size_t>(q)] = cn[static_cast<std::size_t>(q - 1)] * std::conj(v);
    }
    for (int n = 0; n <= d_; ++n)
      for (int m = 0; n + m <= d_; ++m)
        powers_[power_index(j, n, m)].add(cn[static_cast<std::size_t>(n)] * xm[static_cast<std::size_t>(m)]);
  }
}

void MomentView::absorb(const MomentView& o) {
  count_ += o.count_;
  for (std::size_t i = 0; i < sum_.size(); ++i) sum_[i].add(o.sum_[i].value());
  for (std::size_t i = 0; i < cross_.size(); ++i) {
    cross_[i].add(o.cross_[i].value());
    pseudo_[i].add(o.pseudo_[i].value());
  }
  for (std::size_t i = 0; i < powers_.size(); ++i) powers_[i].add(o.powers_[i].value());
}

cplx MomentView::mean(int j) const {
  if (j < 0 || j >= p_) throw DomainError("MomentView: observable index out of range");
  return count_ ? sum_[static_cast<std::size_t>(j)].value() / static_cast<double>(count_) : cplx{};
}

cplx MomentView::cross(int j, int k) const {
  if (j < 0 || k < 0 || j >= p_ || k >= p_) throw DomainError("MomentView: observable index out of range");
  if (!count_) return {};
  const cplx v = cross_[pair_index(j, k)].value() / static_cast<double>(count_);
  return j <= k ? v : std::conj(v);
}

cplx MomentView::pseudo(int j, int k) const {
  if (j < 0 || k < 0 || j >= p_ || k >= p_) throw DomainError("MomentView: observable index out of range");
  return count_ ? pseudo_[pair_index(j, k)].value() / static_cast<double>(count_) : cplx{};
}

cplx MomentView::mixed(int j, int n, int m) const {
  if (j < 0 || j >= p_) throw DomainError("MomentView: observable index out of range");
  if (n < 0 || m < 0 || n + m > d_) throw DomainError("MomentView: degree beyond max_degree");
  return count_ ? powers_[power_index(j, n, m)].value() / static_cast<double>(count_) : cplx{};
}

// MCAccumulator -----------------------------------------------------------

MCAccumulator::MCAccumulator(int num_observables, int max_degree, int num_batches)
    : p_(num_observables), d_(max_degree), num_batches_(num_batches) {
  if (num_batches_ < 2) throw DomainError("MCAccumulator: need at least 2 batches");
  MomentView probe(p_, d_);  // validates p and d
}

void MCAccumulator::add(int batch, std::span<const cplx> x) {
  if (batch < 0 || batch >= num_batches_) throw DomainError("MCAccumulator: batch id out of range");
  auto it = batches_.try_emplace(batch, p_, d_).first;
  it->second.add(x);
}

void MCAccumulator::add(int batch, std::span<const double> x) {
  std::vector<cplx> z(x.begin(), x.end());
  add(batch, z);
}

void MCAccumulator::merge(const MCAccumulator& other) {
  if (other.p_ != p_ || other.d_ != d_ || other.num_batches_ != num_batches_)
    throw ContractViolation("MCAccumulator::merge: shape mismatch");
  for (const auto& [id, view] : other.batches_)
    if (batches_.count(id)) throw ContractViolation("MCAccumulator::merge: batch " + std::to_string(id) + " owned twice");
  for (const auto& [id, view] : other.batches_) batches_.emplace(id, view);
}

std::int64_t MCAccumulator::num_samples() const {
  std::int64_t n = 0;
  for (const auto& [id, view] : batches_) n += view.count();
  return n;
}

MomentView MCAccumulator::total() const {
  MomentView t(p_, d_);
  for (const auto& [id, view] : batches_) t.absorb(view);
  return t;
}

Estimate MCAccumulator::estimate(const std::function<double(const MomentView&)>& stat) const {
  std::vector<double> per_batch;
  for (const auto& [id, view] : batches_)
    if (view.count() > 0) per_batch.push_back(stat(view));
  return {stat(total()), batch_standard_error(per_batch)};
}

ComplexEstimate MCAccumulator::estimate_complex(const std::function<cplx(const MomentView&)>& stat) const {
  std::vector<double> re, im;
  for (const auto& [id, view] : batches_) {
    if (view.count() == 0) continue;
    const cplx v = stat(view);
    re.push_back(v.real());
    im.push_back(v.imag());
  }
  return {stat(total()), batch_standard_error(re), batch_standard_error(im)};
}

ComplexEstimate MCAccumulator::mean(int j) const {
  return estimate_complex([j](const MomentView& v) { return v.mean(j); });
}
ComplexEstimate MCAccumulator::cross(int j, int k) const {
  return estimate_complex([j, k](const MomentView& v) { return v.cross(j, k); });
}
ComplexEstimate MCAccumulator::pseudo(int j, int k) const {
  return estimate_complex([j, k](const MomentView& v) { return v.pseudo(j, k); });
}
ComplexEstimate MCAccumulator::mixed(int j, int n, int m) const {
  return estimate_complex([j, n, m](const MomentView& v) { return v.mixed(j, n, m); });
}

std::vector<cplx> centre(std::span<const cplx> x) {
  ComplexCompensatedSum s;
  for (cplx v : x) s.add(v);
  const cplx mu = x.empty() ? cplx{} : s.value() / static_cast<double>(x.size());
  std::vector<cplx> out(x.begin(), x.end());
  for (auto& v : out) v -= mu;
  return out;
}

std::vector<double> centre(std::span<const double> x) {
  CompensatedSum s;
  for (double v : x) s.add(v);
  const double mu = x.empty() ? 0.0 : s.value() / static_cast<double>(x.size());
  std::vector<double> out(x.begin(), x.end());
  for (auto& v : out) v -= mu;
  return out;
}

int batch_of(std::size_t i, std::size_t n, int num_batches) {
  // inverse of batch_range: largest b with b*n/num_batches <= i
  const auto nb = static_cast<std::size_t>(num_batches);
  std::size_t b = (i * nb) / n;
  while (b + 1 < nb && batch_range(n, nb, b + 1).first <= i) ++b;
  while (b > 0 && batch_range(n, nb, b).first > i) --b;
  return static_cast<int>(b);
}

// Cumulants ---------------------------------------------------------------

namespace {

std::vector<double> moment_to_cumulant(std::span<const double> m) {
  const std::size_t n = m.size();
  std::vector<double> c(n, 0.0);
  for (std::size_t k = 1; k <= n; ++k) {
    double acc = m[k - 1];
    double binom = 1.0;  // C(k-1, j-1)
    for (std::size_t j = 1; j < k; ++j) {
      acc -= binom * c[j - 1] * m[k - j - 1];
      binom = binom * static_cast<double>(k - 1 - (j - 1)) / static_cast<double>(j);
    }
    c[k - 1] = acc;
  }
  return c;
}

}  // namespace

CumulantVector cumulants_from_moments(std::span<const double> moments) {
  if (moments.size() > 8) throw ConfigError("cumulants_from_moments: at most 8 moments");
  return {moment_to_cumulant(moments), CumulantVector::Source::from_moments};
}

std::vector<double> moments_from_cumulants(const CumulantVector& c) {
  const std::size_t n = c.values.size();
  std::vector<double> m(n, 0.0);
  for (std::size_t k = 1; k <= n; ++k) {
    double acc = c.values[k - 1];
    double binom = 1.0;
    for (std::size_t j = 1; j < k; ++j) {
      acc += binom * c.values[j - 1] * m[k - j - 1];
      binom = binom * static_cast<double>(k - j) / static_cast<double>(j);
    }
    m[k - 1] = acc;
  }
  return m;
}

std::vector<Estimate> sample_cumulants(std::span<const double> samples, int num_batches) {
  if (samples.size() < static_cast<std::size_t>(2 * num_batches))
    throw ConfigError("sample_cumulants: too few samples for the batch count");
  const auto x = centre(samples);
  MCAccumulator acc(1, 4, num_batches);
  for (std::size_t i = 0; i < x.size(); ++i) acc.add(batch_of(i, x.size(), num_batches), std::span(&x[i], 1));
  std::vector<Estimate> out;
  for (int k = 1; k <= 4; ++k) {
    out.push_back(acc.estimate([k](const MomentView& v) {
      double m[4];
      for (int q = 1; q <= 4; ++q) m[q - 1] = v.mixed(0, 0, q).real();
      return moment_to_cumulant(std::span<const double>(m, 4))[static_cast<std::size_t>(k - 1)];
    }));
  }
  return out;
}

void gauss_hermite_normal(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw DomainError("gauss_hermite_normal: need at least one node");
  // Jacobi matrix of the probabilists' Hermite polynomials
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) sub[k - 1] = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  nodes.resize(static_cast<std::size_t>(n));
  weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    nodes[static_cast<std::size_t>(i)] = es.eigenvalues()[i];
    const double v0 = es.eigenvectors()(0, i);
    weights[static_cast<std::size_t>(i)] = v0 * v0;
  }
}

ExpansionResult cumulant_expansion_check(HLaw law, const ScalarFunction& f, int order, int num_quadrature_nodes,
                                         double parameter) {
  if (order < 0) throw ConfigError("cumulant_expansion_check: order must be >= 0");
  if (static_cast<int>(f.derivatives.size()) < order + 1)
    throw ConfigError("cumulant_expansion_check: order " + std::to_string(order) + " needs f^(" +
                      std::to_string(order) + ") but only " + std::to_string(f.derivatives.size()) +
                      " derivatives are supplied");
  if (num_quadrature_nodes < 1) throw ConfigError("cumulant_expansion_check: num_quadrature_nodes must be >= 1");

  std::vector<double> cum(static_cast<std::size_t>(order + 1), 0.0);  // cum[k] = C_{k+1}
  std::function<double(const std::function<double(double)>&)> expect;
  std::vector<double> xs, ws;
  switch (law) {
    case HLaw::gaussian: {
      if (!(parameter > 0.0)) throw ConfigError("cumulant_expansion_check: gaussian variance must be positive");
      if (order >= 1) cum[1] = parameter;
      gauss_hermite_normal(num_quadrature_nodes, xs, ws);
      const double sd = std::sqrt(parameter);
      for (auto& x : xs) x *= sd;
      break;
    }
    case HLaw::rademacher: {
      std::vector<double> m(static_cast<std::size_t>(order + 1));
      for (std::size_t k = 0; k < m.size(); ++k) m[k] = (k % 2 == 1) ? 1.0 : 0.0;  // m[k] = E h^{k+1}
      cum = moment_to_cumulant(m);
      xs = {-1.0, 1.0};
      ws = {0.5, 0.5};
      break;
    }
    case HLaw::centered_poisson: {
      if (!(parameter > 0.0) || parameter > 500.0)
        throw ConfigError("cumulant_expansion_check: poisson rate must be in (0, 500]");
      for (int k = 1; k <= order; ++k) cum[static_cast<std::size_t>(k)] = parameter;
      double p = std::exp(-parameter);
      for (int k = 0; k < num_quadrature_nodes; ++k) {
        xs.push_back(k - parameter);
        ws.push_back(p);
        p *= parameter / (k + 1);
        if (k > parameter && p < 1e-18) break;
      }
      break;
    }
  }
  auto mean_of = [&](const std::function<double(double)>& g) {
    CompensatedSum s;
    for (std::size_t i = 0; i < xs.size(); ++i) s.add(ws[i] * g(xs[i]));
    return s.value();
  };
  ExpansionResult r;
  r.lhs = mean_of([&](double h) { return f.derivatives[0](h) * h; });
  CompensatedSum rhs;
  double fact = 1.0;
  for (int k = 0; k <= order; ++k) {
    if (k > 0) fact *= k;
    const double c = cum[static_cast<std::size_t>(k)];
    if (c != 0.0) rhs.add(c / fact * mean_of(f.derivatives[static_cast<std::size_t>(k)]));
  }
  r.rhs = rhs.value();
  r.residual = r.lhs - r.rhs;
  return r;
}

// KS ----------------------------------------------------------------------

double kolmogorov_survival(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  constexpr double pi = std::numbers::pi;
  if (lambda < 1.18) {
    const double a = pi * pi / (8.0 * lambda * lambda);
    double s = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double t = std::exp(-static_cast<double>((2 * k - 1) * (2 * k - 1)) * a);
      s += t;
      if (t < 1e-17 * s) break;
    }
    return std::clamp(1.0 - std::sqrt(2.0 * pi) / lambda * s, 0.0, 1.0);
  }
  double s = 0.0, sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double t = std::exp(-2.0 * k * k * lambda * lambda);
    s += sign * t;
    sign = -sign;
    if (t < 1e-17) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

KSResult ks_normality_test(std::span<const double> samples, double target_sd) {
  if (samples.size() < 200)
    throw ConfigError("ks_normality_test: needs >= 200 samples, got " + std::to_string(samples.size()));
  if (!(target_sd > 0.0)) throw DomainError("ks_normality_test: target_sd must be positive");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double F = 0.5 * std::erfc(-x[i] / (target_sd * std::numbers::sqrt2));
    d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
  }
  const double rn = std::sqrt(n);
  return {d, kolmogorov_survival((rn + 0.12 + 0.11 / rn) * d)};
}

}  // namespace mesoclt
