#include "bbcd/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "bbcd/math.hpp"

namespace bbcd {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kOrderTol = 1e-12;

void check_kernel_args(int n1, int n2, double q1, double q2, double t) {
  if (n1 < 0 || n2 < 0) {
    throw std::domain_error("log_kernel_sum: trial counts must be >= 0");
  }
  if (!(q1 > 0.0) || !std::isfinite(q1) || !(q2 > 0.0) || !std::isfinite(q2) ||
      !(t > 0.0) || !std::isfinite(t)) {
    throw std::domain_error("log_kernel_sum: q1, q2, t must be finite and > 0");
  }
}

// Streams the grid twice (max pass, then sum pass) so no term buffer is
// needed even for large supports. Row-major order is part of the contract:
// results are reproducible bit for bit.
double kernel_lse(int n1, int n2, double log_q1, double log_q2, double log_t) {
  double mx = kNegInf;
  for (int x = 0; x <= n1; ++x) {
    const double row = log_choose(n1, x) + x * log_q1;
    for (int y = 0; y <= n2; ++y) {
      const double term = row + log_choose(n2, y) + y * log_q2 +
                          static_cast<double>(x) * y * log_t;
      if (term > mx) mx = term;
    }
  }
  CompensatedSum acc;
  for (int x = 0; x <= n1; ++x) {
    const double row = log_choose(n1, x) + x * log_q1;
    for (int y = 0; y <= n2; ++y) {
      const double term = row + log_choose(n2, y) + y * log_q2 +
                          static_cast<double>(x) * y * log_t;
      acc.add(std::exp(term - mx));
    }
  }
  return mx + std::log(acc.value());
}

double log_pmf_unchecked(const Params& p, double log_norm, int x, int y) {
  return -log_norm + log_choose(p.n1, x) + log_choose(p.n2, y) +
         x * std::log(p.p1) + y * std::log(p.p2) +
         (p.n1 - x) * std::log1p(-p.p1) + (p.n2 - y) * std::log1p(-p.p2) +
         static_cast<double>(x) * y * std::log(p.t);
}

// Closed-form marginal pmf of the first coordinate of `p`; marginal_y is
// obtained by swapping.
std::vector<double> marginal_first(const Params& p) {
  const double log_norm = log_norm_constant(p);
  const double log_t = std::log(p.t);
  std::vector<double> out(p.n1 + 1);
  for (int x = 0; x <= p.n1; ++x) {
    const double lw = p.n2 * log_mix_exp(p.p2, x * log_t);
    out[x] = std::exp(-log_norm + log_choose(p.n1, x) + x * std::log(p.p1) +
                      (p.n1 - x) * std::log1p(-p.p1) + lw);
  }
  return out;
}

// Closed-form E of the first coordinate: sum_x x * C(n1,x) p1^x (1-p1)^{n1-x}
// * [1 - p2 + t^x p2]^{n2}, normalized.
double mean_first_closed(const Params& p) {
  const double log_norm = log_norm_constant(p);
  const double log_t = std::log(p.t);
  std::vector<double> terms;
  terms.reserve(p.n1);
  for (int x = 1; x <= p.n1; ++x) {
    terms.push_back(std::log(static_cast<double>(x)) + log_choose(p.n1, x) +
                    x * std::log(p.p1) + (p.n1 - x) * std::log1p(-p.p1) +
                    p.n2 * log_mix_exp(p.p2, x * log_t));
  }
  return std::exp(log_sum_exp(terms) - log_norm);
}

std::vector<double> survival_from_pmf(const std::vector<double>& pmf, int upto) {
  // S(k) = P(value > k), accumulated from the top for accuracy.
  std::vector<double> surv(upto + 1, 0.0);
  double acc = 0.0;
  for (int k = upto; k >= 0; --k) {
    const std::size_t idx = static_cast<std::size_t>(k) + 1;
    if (idx < pmf.size()) acc += pmf[idx];
    surv[k] = acc;
  }
  return surv;
}

}  // namespace

double log_kernel_sum(int n1, int n2, double q1, double q2, double t) {
  check_kernel_args(n1, n2, q1, q2, t);
  return kernel_lse(n1, n2, std::log(q1), std::log(q2), std::log(t));
}

double log_kernel_sum_logs(int n1, int n2, double log_q1, double log_q2,
                           double log_t) {
  if (n1 < 0 || n2 < 0) {
    throw std::domain_error("log_kernel_sum: trial counts must be >= 0");
  }
  if (!std::isfinite(log_q1) || !std::isfinite(log_q2) || !std::isfinite(log_t)) {
    throw std::domain_error("log_kernel_sum: log parameters must be finite");
  }
  return kernel_lse(n1, n2, log_q1, log_q2, log_t);
}

double log_norm_constant(const Params& params) {
  params.validate();
  return params.n1 * std::log1p(-params.p1) + params.n2 * std::log1p(-params.p2) +
         log_kernel_sum(params.n1, params.n2, params.q1(), params.q2(), params.t);
}

double log_pmf(const Params& params, int x, int y) {
  params.validate();
  if (x < 0 || x > params.n1 || y < 0 || y > params.n2) return kNegInf;
  return log_pmf_unchecked(params, log_norm_constant(params), x, y);
}

JointTable build_table(const Params& params, std::size_t cell_cap) {
  params.validate();
  const std::size_t cells =
      (static_cast<std::size_t>(params.n1) + 1) * (static_cast<std::size_t>(params.n2) + 1);
  if (cells > cell_cap) {
    throw std::length_error("build_table: support of " + std::to_string(cells) +
                            " cells exceeds cap of " + std::to_string(cell_cap));
  }
  JointTable table;
  table.params = params;
  table.log_norm = log_norm_constant(params);
  table.probs.resize(cells);
  std::size_t idx = 0;
  for (int x = 0; x <= params.n1; ++x) {
    for (int y = 0; y <= params.n2; ++y) {
      table.probs[idx++] = std::exp(log_pmf_unchecked(params, table.log_norm, x, y));
    }
  }
  return table;
}

std::vector<double> marginal_x(const Params& params) {
  params.validate();
  return marginal_first(params);
}

std::vector<double> marginal_y(const Params& params) {
  params.validate();
  return marginal_first(params.swapped());
}

double mean_x_closed(const Params& params) {
  params.validate();
  return mean_first_closed(params);
}

double mean_y_closed(const Params& params) {
  params.validate();
  return mean_first_closed(params.swapped());
}

MomentSummary moments(const Params& params) {
  const JointTable table = build_table(params);
  CompensatedSum sx, sy;
  for (int x = 0; x <= params.n1; ++x) {
    for (int y = 0; y <= params.n2; ++y) {
      const double p = table.at(x, y);
      sx.add(x * p);
      sy.add(y * p);
    }
  }
  MomentSummary m;
  m.mean_x = sx.value();
  m.mean_y = sy.value();

  const double cx = mean_x_closed(params);
  const double cy = mean_y_closed(params);
  if (std::fabs(cx - m.mean_x) > 1e-10 * std::max(1.0, std::fabs(m.mean_x)) ||
      std::fabs(cy - m.mean_y) > 1e-10 * std::max(1.0, std::fabs(m.mean_y))) {
    throw std::logic_error("moments: closed-form and enumerated means disagree");
  }

  // Second pass around the known means keeps the variances nonnegative and
  // the covariance free of cancellation.
  CompensatedSum vx, vy, cxy;
  for (int x = 0; x <= params.n1; ++x) {
    const double dx = x - m.mean_x;
    for (int y = 0; y <= params.n2; ++y) {
      const double dy = y - m.mean_y;
      const double p = table.at(x, y);
      vx.add(dx * dx * p);
      vy.add(dy * dy * p);
      cxy.add(dx * dy * p);
    }
  }
  m.var_x = std::max(0.0, vx.value());
  m.var_y = std::max(0.0, vy.value());
  m.cov = cxy.value();
  const double denom = std::sqrt(m.var_x * m.var_y);
  m.corr = denom > 0.0 ? std::clamp(m.cov / denom, -1.0, 1.0) : 0.0;
  return m;
}

double factorial_moment(const Params& params, int r, int s) {
  params.validate();
  if (r < 0 || s < 0) {
    throw std::domain_error("factorial_moment: orders must be >= 0");
  }
  if (r > params.n1 || s > params.n2) return 0.0;  // falling factorial vanishes
  if (r == 0 && s == 0) return 1.0;
  const double log_t = std::log(params.t);
  double log_fall = 0.0;  // log of n1_(r) * n2_(s)
  for (int i = 0; i < r; ++i) log_fall += std::log(static_cast<double>(params.n1 - i));
  for (int i = 0; i < s; ++i) log_fall += std::log(static_cast<double>(params.n2 - i));
  const double log_q1 = std::log(params.q1());
  const double log_q2 = std::log(params.q2());
  const double log_num = log_kernel_sum_logs(params.n1 - r, params.n2 - s,
                                             log_q1 + s * log_t, log_q2 + r * log_t, log_t);
  const double log_den =
      log_kernel_sum_logs(params.n1, params.n2, log_q1, log_q2, log_t);
  return std::exp(static_cast<double>(r) * s * log_t + log_fall + r * log_q1 +
                  s * log_q2 + log_num - log_den);
}

double pgf(const Params& params, double s1, double s2) {
  params.validate();
  if (!(s1 > 0.0) || !(s2 > 0.0) || !std::isfinite(s1) || !std::isfinite(s2)) {
    throw std::domain_error("pgf: s1 and s2 must be finite and > 0");
  }
  const double log_q1 = std::log(params.q1());
  const double log_q2 = std::log(params.q2());
  const double log_t = std::log(params.t);
  const double log_num = log_kernel_sum_logs(params.n1, params.n2,
                                             log_q1 + std::log(s1),
                                             log_q2 + std::log(s2), log_t);
  const double log_den =
      log_kernel_sum_logs(params.n1, params.n2, log_q1, log_q2, log_t);
  return std::exp(log_num - log_den);
}

double mgf(const Params& params, double t1, double t2) {
  return pgf(params, std::exp(t1), std::exp(t2));
}

BinomialLaw conditional_x_given_y(const Params& params, int y) {
  params.validate();
  if (y < 0 || y > params.n2) {
    throw std::domain_error("conditional_x_given_y: y out of range");
  }
  // Success odds are q1 * t^y; the logistic form is stable for any t^y.
  return {params.n1, sigmoid(std::log(params.q1()) + y * std::log(params.t))};
}

BinomialLaw conditional_y_given_x(const Params& params, int x) {
  params.validate();
  if (x < 0 || x > params.n1) {
    throw std::domain_error("conditional_y_given_x: x out of range");
  }
  return {params.n2, sigmoid(std::log(params.q2()) + x * std::log(params.t))};
}

double regression_x_on_y(const Params& params, int y) {
  const BinomialLaw law = conditional_x_given_y(params, y);
  return law.n * law.p;
}

double regression_y_on_x(const Params& params, int x) {
  const BinomialLaw law = conditional_y_given_x(params, x);
  return law.n * law.p;
}

std::vector<double> conditional_given_sum(const Params& params, int u) {
  params.validate();
  if (u < 0 || u > params.n1 + params.n2) {
    throw std::domain_error("conditional_given_sum: u out of range");
  }
  const int lo = std::max(0, u - params.n2);
  const int hi = std::min(u, params.n1);
  // Unnormalized log weights along the anti-diagonal; the normalizing
  // constant cancels in the ratio.
  std::vector<double> logw(hi - lo + 1);
  for (int x = lo; x <= hi; ++x) {
    const int y = u - x;
    logw[x - lo] = log_choose(params.n1, x) + log_choose(params.n2, y) +
                   x * std::log(params.p1) + y * std::log(params.p2) +
                   (params.n1 - x) * std::log1p(-params.p1) +
                   (params.n2 - y) * std::log1p(-params.p2) +
                   static_cast<double>(x) * y * std::log(params.t);
  }
  const double lz = log_sum_exp(logw);
  if (!std::isfinite(lz)) {
    throw std::domain_error("conditional_given_sum: sum event has zero probability");
  }
  std::vector<double> out(logw.size());
  for (std::size_t i = 0; i < logw.size(); ++i) out[i] = std::exp(logw[i] - lz);
  return out;
}

double prob_x_less_y(const Params& params) {
  const JointTable table = build_table(params);
  CompensatedSum acc;
  for (int x = 0; x <= params.n1; ++x) {
    for (int y = x + 1; y <= params.n2; ++y) {
      acc.add(table.at(x, y));
    }
  }
  return acc.value();
}

double recurrence_step(const Params& params, StepDirection direction, int m, int n,
                       double base) {
  params.validate();
  if (m < 0 || m > params.n1 || n < 0 || n > params.n2) {
    throw std::out_of_range("recurrence_step: (m, n) outside the support");
  }
  switch (direction) {
    case StepDirection::x:
      if (m < 1) throw std::out_of_range("recurrence_step: x step needs m >= 1");
      return base * std::pow(params.t, n) * params.q1() *
             (static_cast<double>(params.n1 - m + 1) / m);
    case StepDirection::y:
      if (n < 1) throw std::out_of_range("recurrence_step: y step needs n >= 1");
      return base * std::pow(params.t, m) * params.q2() *
             (static_cast<double>(params.n2 - n + 1) / n);
    case StepDirection::diagonal:
      if (m < 1 || n < 1) {
        throw std::out_of_range("recurrence_step: diagonal step needs m, n >= 1");
      }
      // Ratio of the pmf at (m, n) and (m-1, n-1): the exponent of t is
      // mn - (m-1)(n-1) = m + n - 1.
      return base * params.q1() * params.q2() * std::pow(params.t, m + n - 1) *
             (static_cast<double>(params.n1 - m + 1) / m) *
             (static_cast<double>(params.n2 - n + 1) / n);
  }
  throw std::logic_error("recurrence_step: unknown direction");
}

OrderVerdict stochastic_order(const Params& params) {
  params.validate();
  const std::vector<double> mx = marginal_x(params);
  const std::vector<double> my = marginal_y(params);
  const int upto = std::max(params.n1, params.n2);
  const std::vector<double> sx = survival_from_pmf(mx, upto);
  const std::vector<double> sy = survival_from_pmf(my, upto);
  bool x_strict = false;
  bool y_strict = false;
  for (int k = 0; k <= upto; ++k) {
    const double d = sx[k] - sy[k];
    if (d > kOrderTol) x_strict = true;
    if (d < -kOrderTol) y_strict = true;
  }
  if (x_strict && y_strict) return OrderVerdict::incomparable;
  if (x_strict) return OrderVerdict::x_dominates;
  if (y_strict) return OrderVerdict::y_dominates;
  return OrderVerdict::equal;
}

std::vector<double> max_pmf(const Params& params) {
  const JointTable table = build_table(params);
  std::vector<double> out(std::max(params.n1, params.n2) + 1, 0.0);
  for (int x = 0; x <= params.n1; ++x) {
    for (int y = 0; y <= params.n2; ++y) {
      out[std::max(x, y)] += table.at(x, y);
    }
  }
  return out;
}

std::vector<double> min_survival(const Params& params) {
  const JointTable table = build_table(params);
  const int upto = std::max(params.n1, params.n2);
  std::vector<double> out(upto + 1, 0.0);
  for (int u = 0; u <= upto; ++u) {
    CompensatedSum acc;
    for (int x = u + 1; x <= params.n1; ++x) {
      for (int y = u + 1; y <= params.n2; ++y) {
        acc.add(table.at(x, y));
      }
    }
    out[u] = acc.value();
  }
  return out;
}

namespace {

// Log weights of the limit law on [0, truncation]^2 and their total,
// with the tail-mass guard shared by the pmf and table paths.
std::vector<double> limit_log_weights(const PoissonLimitParams& limit, int truncation,
                                      double* log_total) {
  limit.validate();
  if (truncation < 1) {
    throw std::domain_error("poisson_limit: truncation must be >= 1");
  }
  const double l1 = std::log(limit.lambda1);
  const double l2 = std::log(limit.lambda2);
  const double lt = std::log(limit.t);
  const int T = truncation;
  std::vector<double> logw(static_cast<std::size_t>(T + 1) * (T + 1));
  std::size_t idx = 0;
  for (int x = 0; x <= T; ++x) {
    for (int y = 0; y <= T; ++y) {
      logw[idx++] = x * l1 + y * l2 + static_cast<double>(x) * y * lt -
                    log_factorial(x) - log_factorial(y);
    }
  }
  *log_total = log_sum_exp(logw);
  // For t <= 1 the unnormalized tail is dominated by the independent-Poisson
  // tail: sum_{x>T or y>T} <= e^{l1+l2} (P(N1 > T) + P(N2 > T)).
  const double tail_bound =
      std::exp(limit.lambda1 + limit.lambda2 - *log_total) *
      (poisson_upper_tail(limit.lambda1, T) + poisson_upper_tail(limit.lambda2, T));
  if (!(tail_bound < 1e-12)) {
    throw std::domain_error(
        "poisson_limit: truncation too small, tail bound " + std::to_string(tail_bound));
  }
  return logw;
}

}  // namespace

double poisson_limit_pmf(const PoissonLimitParams& limit, int x, int y, int truncation) {
  double log_total = 0.0;
  const std::vector<double> logw = limit_log_weights(limit, truncation, &log_total);
  if (x < 0 || y < 0 || x > truncation || y > truncation) return 0.0;
  return std::exp(logw[static_cast<std::size_t>(x) * (truncation + 1) + y] - log_total);
}

std::vector<double> poisson_limit_table(const PoissonLimitParams& limit, int truncation) {
  double log_total = 0.0;
  std::vector<double> logw = limit_log_weights(limit, truncation, &log_total);
  for (double& w : logw) w = std::exp(w - log_total);
  return logw;
}

double poisson_limit_tv(const PoissonLimitParams& limit, int n, int truncation) {
  limit.validate();
  if (n < 1 || limit.lambda1 >= n || limit.lambda2 >= n) {
    throw std::domain_error("poisson_limit_tv: need n > max(lambda1, lambda2)");
  }
  const int T = std::max(truncation, n);
  const Params finite{n, n, limit.lambda1 / n, limit.lambda2 / n, limit.t};
  const JointTable table = build_table(finite);
  const std::vector<double> bpd = poisson_limit_table(limit, T);
  CompensatedSum acc;
  for (int x = 0; x <= T; ++x) {
    for (int y = 0; y <= T; ++y) {
      const double p = (x <= n && y <= n) ? table.at(x, y) : 0.0;
      acc.add(std::fabs(p - bpd[static_cast<std::size_t>(x) * (T + 1) + y]));
    }
  }
  return 0.5 * acc.value();
}

double tv_distance(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) {
    throw std::invalid_argument("tv_distance: vectors must have equal length");
  }
  CompensatedSum acc;
  for (std::size_t i = 0; i < p.size(); ++i) acc.add(std::fabs(p[i] - q[i]));
  return 0.5 * acc.value();
}

}  // namespace bbcd
