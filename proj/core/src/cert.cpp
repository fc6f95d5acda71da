#include "flexqp/cert.hpp"

#include "flexqp/error.hpp"

#include <algorithm>
#include <cmath>

namespace flexqp {

namespace {

double xlogy_ratio(double a, double b) {
  if (a == 0.0) return 0.0;
  if (b == 0.0) return INFINITY;
  return a * std::log(a / b);
}

void check_delta(double d, const char* what) {
  if (!(d > 0.0 && d < 1.0)) throw ArgumentError(std::string(what) + " must be in (0, 1)");
}

}  // namespace

double kl_bernoulli(double p, double q) { return xlogy_ratio(p, q) + xlogy_ratio(1.0 - p, 1.0 - q); }

double inv_kl_bernoulli(double p, double c) {
  if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("inv_kl_bernoulli: p must be in [0, 1]");
  if (!(c >= 0.0)) throw ArgumentError("inv_kl_bernoulli: c must be nonnegative");
  if (c == 0.0 || p == 1.0) return p;
  double lo = p, hi = 1.0;
  if (kl_bernoulli(p, hi) <= c) return 1.0;
  // Bisect until the midpoint no longer separates the endpoints.
  for (;;) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (kl_bernoulli(p, mid) <= c)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

double pac_bound(double sample_loss, double kl_div, int N, double delta) {
  if (N < 1) throw ArgumentError("pac_bound: N must be at least 1");
  if (kl_div < 0.0) throw ArgumentError("pac_bound: KL divergence must be nonnegative");
  check_delta(delta, "delta");
  const double c = (kl_div + std::log(2.0 * std::sqrt(static_cast<double>(N)) / delta)) / N;
  return inv_kl_bernoulli(sample_loss, c);
}

double final_bound(double mean_loss, double kl_div, int N, int M, double delta, double delta_prime) {
  if (M < 1) throw ArgumentError("final_bound: M must be at least 1");
  check_delta(delta_prime, "delta'");
  const double corrected = inv_kl_bernoulli(mean_loss, std::log(2.0 / delta_prime) / M);
  return pac_bound(corrected, kl_div, N, delta);
}

double final_bound(const Mat& losses, double kl_div, double delta, double delta_prime) {
  if (losses.size() == 0) throw ArgumentError("final_bound: empty loss grid");
  if ((losses.array() < 0.0).any() || (losses.array() > 1.0).any())
    throw ArgumentError("final_bound: losses must lie in [0, 1]");
  return final_bound(losses.mean(), kl_div, static_cast<int>(losses.rows()), static_cast<int>(losses.cols()), delta,
                     delta_prime);
}

double gen_bound_loss(double residual_K, double residual_star) {
  const double floor = 1e-12;
  const double rk = std::max(residual_K, floor), rs = std::max(residual_star, floor);
  // log|R*| = 0 leaves the ratio undefined; only "no worse than optimal" is
  // then meaningful.
  if (rs == 1.0) return rk <= 1.0 ? 0.0 : 1.0;
  return std::clamp(1.0 - std::log(rk) / std::log(rs), 0.0, 1.0);
}

double gen_bound_loss(const QpProblem& prob, const Vec& x_K, const Vec& yI_K, const Vec& yE_K, const Vec& x_star,
                      const Vec& yI_star, const Vec& yE_star) {
  const double rk = qp_residual(prob, x_K, yI_K, yE_K).stacked.norm();
  const double rs = qp_residual(prob, x_star, yI_star, yE_star).stacked.norm();
  return gen_bound_loss(rk, rs);
}

double progress_loss(const Vec& x0, const Vec& x_K, const Vec& x_star) {
  if (x0.size() != x_star.size() || x_K.size() != x_star.size())
    throw ArgumentError("progress_loss: vectors differ in size");
  const double d0 = (x0 - x_star).norm();
  if (d0 == 0.0) return 0.0;
  return std::min((x_K - x_star).norm() / d0, 1.0);
}

}  // namespace flexqp
