#pragma once

#include "flexqp/qp.hpp"

#include <vector>

namespace flexqp {

/// KL(B(p) || B(q)) with the 0 log 0 = 0 convention.
double kl_bernoulli(double p, double q);

/// sup { q in [p, 1] : KL(B(p) || B(q)) <= c }, by bisection to machine precision.
/// Throws ArgumentError when p is outside [0, 1] or c < 0.
double inv_kl_bernoulli(double p, double c);

/// D^-1(sample_loss || (kl + log(2 sqrt(N) / delta)) / N).
double pac_bound(double sample_loss, double kl_div, int N, double delta);

/// Losses on an N x M grid (problems x policy samples). The empirical mean
/// is first corrected by D^-1(mean || log(2 / delta') / M) and the result
/// is fed to pac_bound.
double final_bound(const Mat& losses, double kl_div, double delta, double delta_prime);
double final_bound(double mean_loss, double kl_div, int N, int M, double delta, double delta_prime);

/// clip(1 - log|R(xi_K)|_2 / log|R(xi*)|_2, 0, 1) with both norms floored
/// at 1e-12.
double gen_bound_loss(double residual_K, double residual_star);
double gen_bound_loss(const QpProblem& prob, const Vec& x_K, const Vec& yI_K, const Vec& yE_K, const Vec& x_star,
                      const Vec& yI_star, const Vec& yE_star);

/// min(|x_K - x*| / |x_0 - x*|, 1); zero when x_0 = x*.
double progress_loss(const Vec& x0, const Vec& x_K, const Vec& x_star);

}  // namespace flexqp
