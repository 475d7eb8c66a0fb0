#include "mesoclt/gp_sampler.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "mesoclt/errors.hpp"
#include "mesoclt/rng.hpp"

namespace mesoclt {

void GPConfig::validate() const {
  if (truncation_K < 0) throw ConfigError("truncation_K: must be >= 1 (or 0 for automatic)");
  if (!(target_tail_variance > 0.0)) throw ConfigError("target_tail_variance: must be > 0");
}

namespace {

void require_upper(std::span<const cplx> b_points) {
  for (const cplx b : b_points)
    if (!(b.imag() > 0.0)) throw DomainError("gp_sampler: every b must satisfy Im b > 0");
}

}  // namespace

double series_tail_variance(cplx b, int truncation_K) {
  const cplx i(0.0, 1.0);
  const double q = std::norm((b - i) / (b + i));  // r^2 < 1
  const double coef = 8.0 / std::norm((b + i) * (b + i));  // |(2/(b+i))^2 / sqrt2|^2
  if (q == 0.0) return 0.0;
  // sum_{k>K} (k+1) q^k = q^{K+1} ((K+2) - (K+1) q) / (1-q)^2
  const double k = truncation_K;
  return coef * std::pow(q, k + 1.0) * ((k + 2.0) - (k + 1.0) * q) / ((1.0 - q) * (1.0 - q));
}

int choose_truncation(std::span<const cplx> b_points, double eps) {
  if (!(eps > 0.0)) throw DomainError("choose_truncation: eps must be positive");
  require_upper(b_points);
  int worst = 1;
  for (const cplx b : b_points) {
    int k = 1;
    while (series_tail_variance(b, k) > eps) ++k;
    worst = std::max(worst, k);
  }
  return worst;
}

Eigen::MatrixXcd sample_Y(std::span<const cplx> b_points, const GPConfig& config, int num_samples) {
  config.validate();
  require_upper(b_points);
  if (num_samples < 0) throw ConfigError("num_samples: must be >= 0");
  const int K = config.truncation_K > 0 ? config.truncation_K
                                        : choose_truncation(b_points, config.target_tail_variance);
  const cplx i(0.0, 1.0);
  const auto p = static_cast<Eigen::Index>(b_points.size());
  // coeff(j, k) = 2^{-1/2} (2/(b_j+i))^2 sqrt(k+1) w_j^k
  Eigen::MatrixXcd coeff(p, K + 1);
  for (Eigen::Index j = 0; j < p; ++j) {
    const cplx b = b_points[static_cast<std::size_t>(j)];
    const cplx pre = std::pow(2.0 / (b + i), 2) / std::numbers::sqrt2;
    const cplx w = (b - i) / (b + i);
    cplx wk(1.0, 0.0);
    for (int k = 0; k <= K; ++k) {
      coeff(j, k) = pre * std::sqrt(k + 1.0) * wk;
      wk *= w;
    }
  }
  Eigen::MatrixXcd out(num_samples, p);
  Eigen::VectorXcd theta(K + 1);
  for (int r = 0; r < num_samples; ++r) {
    for (int k = 0; k <= K; ++k) {
      auto [g1, g2] = box_muller(random_words(config.seed, RngDomain::gp_series, static_cast<std::uint64_t>(r),
                                              static_cast<std::uint64_t>(k)));
      theta(k) = cplx(g1, g2) / std::numbers::sqrt2;
    }
    out.row(r) = (coeff * theta).transpose();
  }
  return out;
}

Eigen::MatrixXd h_half_gram(std::span<const TestFunction> f_list, QuadTolerance tol) {
  const auto p = static_cast<Eigen::Index>(f_list.size());
  Eigen::MatrixXd g(p, p);
  for (Eigen::Index a = 0; a < p; ++a)
    for (Eigen::Index b = a; b < p; ++b) {
      const double v = h_half_covariance(f_list[static_cast<std::size_t>(a)], f_list[static_cast<std::size_t>(b)], tol);
      g(a, b) = v;
      g(b, a) = v;
    }
  return g;
}

Eigen::MatrixXd sample_gaussian_field(const Eigen::MatrixXd& gram, int num_samples, std::uint64_t seed) {
  const Eigen::Index p = gram.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  Eigen::VectorXd lambda = es.eigenvalues();
  const double smallest = p > 0 ? lambda.minCoeff() : 0.0;
  if (smallest <= -1e-8) {
    std::ostringstream msg;
    msg << "sample_Z: Gram matrix is indefinite (smallest eigenvalue " << smallest << ")";
    throw NumericalError(msg.str());
  }
  if (smallest < 0.0) lambda.array() += 1e-10 * gram.trace();
  lambda = lambda.cwiseMax(0.0);
  const Eigen::MatrixXd factor = es.eigenvectors() * lambda.cwiseSqrt().asDiagonal();
  Eigen::MatrixXd out(num_samples, p);
  Eigen::VectorXd g(p);
  for (int r = 0; r < num_samples; ++r) {
    CounterStream stream(seed, RngDomain::gp_field, static_cast<std::uint64_t>(r));
    for (Eigen::Index k = 0; k < p; ++k) g(k) = stream.normal();
    out.row(r) = (factor * g).transpose();
  }
  return out;
}

Eigen::MatrixXd sample_Z(std::span<const TestFunction> f_list, int num_samples, std::uint64_t seed) {
  return sample_gaussian_field(h_half_gram(f_list), num_samples, seed);
}

}  // namespace mesoclt
