#pragma once

#include <span>

namespace bbcd {

/// log(k!) for k >= 0, via a cached cumulative table of log terms.
double log_factorial(int k);

/// log of the binomial coefficient C(n, k). Returns -inf when k < 0 or k > n.
double log_choose(int n, int k);

/// log(sum_i exp(v[i])) with a fixed left-to-right compensated reduction.
/// Returns -inf for an empty range.
double log_sum_exp(std::span<const double> v);

/// 1 / (1 + exp(-x)) without overflow for any finite x.
double sigmoid(double x);

/// log(1 - p + p*exp(z)) for p in (0,1), evaluated without cancellation
/// near z = 0 and without overflow for large |z|.
double log_mix_exp(double p, double z);

/// Regularized upper incomplete gamma Q(a, x) for a > 0, x >= 0.
double regularized_gamma_upper(double a, double x);

/// Regularized lower incomplete gamma P(a, x) = 1 - Q(a, x).
double regularized_gamma_lower(double a, double x);

/// Upper tail P(Chi2_dof > statistic). Exactly 1 at statistic = 0.
double chi_square_upper_tail(double statistic, int dof);

/// P(Poisson(lambda) > k).
double poisson_upper_tail(double lambda, int k);

// Kahan-compensated accumulator. Sequential, deterministic order.
class CompensatedSum {
 public:
  void add(double x) {
    const double y = x - carry_;
    const double t = sum_ + y;
    carry_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

}  // namespace bbcd
