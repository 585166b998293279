#include "bbcd/math.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace bbcd {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

double log_factorial(int k) {
  if (k < 0) throw std::domain_error("log_factorial: negative argument");
  // Cumulative sum of log(i), grown on demand. thread_local keeps reads
  // lock-free while preserving the pure-function contract.
  thread_local std::vector<double> table{0.0, 0.0};  // 0!, 1!
  if (static_cast<std::size_t>(k) >= table.size()) {
    table.reserve(k + 1);
    for (std::size_t i = table.size(); i <= static_cast<std::size_t>(k); ++i) {
      table.push_back(table[i - 1] + std::log(static_cast<double>(i)));
    }
  }
  return table[k];
}

double log_choose(int n, int k) {
  if (n < 0) throw std::domain_error("log_choose: negative n");
  if (k < 0 || k > n) return kNegInf;
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) return kNegInf;
  double mx = kNegInf;
  for (double x : v) {
    if (x > mx) mx = x;
  }
  if (!std::isfinite(mx)) return mx;  // all -inf, or a +inf/nan dominates
  CompensatedSum acc;
  for (double x : v) acc.add(std::exp(x - mx));
  return mx + std::log(acc.value());
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_mix_exp(double p, double z) {
  // 1 - p + p*exp(z) = exp(z) * (1 - (1-p)*(1 - exp(-z)))
  if (z <= 0.0) return std::log1p(p * std::expm1(z));
  return z + std::log1p((1.0 - p) * std::expm1(-z));
}

namespace {

// Lower incomplete gamma by power series, x < a + 1.
double gamma_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 1000; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper incomplete gamma by modified Lentz continued fraction, x >= a + 1.
double gamma_cont_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double regularized_gamma_upper(double a, double x) {
  if (!(a > 0.0) || x < 0.0 || !std::isfinite(a) || !std::isfinite(x)) {
    throw std::domain_error("regularized_gamma_upper: require a > 0, x >= 0");
  }
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_series(a, x);
  return gamma_cont_fraction(a, x);
}

double regularized_gamma_lower(double a, double x) {
  if (!(a > 0.0) || x < 0.0 || !std::isfinite(a) || !std::isfinite(x)) {
    throw std::domain_error("regularized_gamma_lower: require a > 0, x >= 0");
  }
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_series(a, x);
  return 1.0 - gamma_cont_fraction(a, x);
}

double chi_square_upper_tail(double statistic, int dof) {
  if (dof < 1) throw std::domain_error("chi_square_upper_tail: dof must be >= 1");
  if (statistic < 0.0 || !std::isfinite(statistic)) {
    throw std::domain_error("chi_square_upper_tail: statistic must be finite and >= 0");
  }
  if (statistic == 0.0) return 1.0;
  return regularized_gamma_upper(0.5 * dof, 0.5 * statistic);
}

double poisson_upper_tail(double lambda, int k) {
  if (!(lambda > 0.0)) throw std::domain_error("poisson_upper_tail: lambda must be > 0");
  if (k < 0) return 1.0;
  // P(N > k) = P_reg(k+1, lambda), the regularized lower incomplete gamma.
  return regularized_gamma_lower(static_cast<double>(k) + 1.0, lambda);
}

}  // namespace bbcd
