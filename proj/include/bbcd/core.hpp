#pragma once

#include <cstddef>
#include <vector>

#include "bbcd/params.hpp"

namespace bbcd {

inline constexpr std::size_t kDefaultTableCellCap = 100'000'000;

/// Exact joint probability table over {0..n1} x {0..n2}, row-major in x.
struct JointTable {
  Params params;
  double log_norm = 0.0;  // log of the reciprocal normalizing constant
  std::vector<double> probs;

  int rows() const { return params.n1 + 1; }
  int cols() const { return params.n2 + 1; }
  double at(int x, int y) const {
    return probs[static_cast<std::size_t>(x) * cols() + y];
  }
};

struct MomentSummary {
  double mean_x = 0.0;
  double mean_y = 0.0;
  double var_x = 0.0;
  double var_y = 0.0;
  double cov = 0.0;
  double corr = 0.0;
};

/// A binomial(n, p) law, used for the one-dimensional conditionals.
struct BinomialLaw {
  int n = 0;
  double p = 0.0;
};

enum class StepDirection { x, y, diagonal };

enum class OrderVerdict { x_dominates, y_dominates, equal, incomparable };

/// log of sum_{x=0..n1} sum_{y=0..n2} C(n1,x) q1^x C(n2,y) q2^y t^{xy},
/// the unnormalized mass of the family in odds form. Log-sum-exp over the
/// full grid; finite for all valid inputs.
double log_kernel_sum(int n1, int n2, double q1, double q2, double t);

/// Same sum with the multipliers passed on the log scale, so callers working
/// in an unconstrained parameterization avoid exp/log round trips.
double log_kernel_sum_logs(int n1, int n2, double log_q1, double log_q2, double log_t);

/// log of the reciprocal normalizing constant: the joint pmf is
/// exp(log_pmf) with this subtracted. Equals 0 when t = 1; <= 0 when t <= 1.
double log_norm_constant(const Params& params);

/// Exact log joint pmf at (x, y). Returns -inf outside the support.
double log_pmf(const Params& params, int x, int y);

/// Materializes the full joint table. Throws std::length_error when the
/// support exceeds cell_cap cells.
JointTable build_table(const Params& params, std::size_t cell_cap = kDefaultTableCellCap);

/// Marginal pmf of X (length n1+1): closed form with the tilt weight
/// [1 - p2 + t^x p2]^{n2}, not row sums of the table.
std::vector<double> marginal_x(const Params& params);
std::vector<double> marginal_y(const Params& params);

/// Closed-form marginal means from the tilt-weighted binomial sums.
double mean_x_closed(const Params& params);
double mean_y_closed(const Params& params);

/// First and second moments. Means are computed both from the closed-form
/// sums and from the table; disagreement beyond 1e-10 throws std::logic_error
/// since it can only indicate an internal fault.
MomentSummary moments(const Params& params);

/// E[X_(r) Y_(s)] with falling factorials, via the ratio of kernel sums
/// t^{rs} n1_(r) n2_(s) q1^r q2^s * S(n1-r, n2-s, t^s q1, t^r q2, t) / S(...).
/// Exactly 0 when r > n1 or s > n2. r, s must be nonnegative.
double factorial_moment(const Params& params, int r, int s);

/// Joint probability generating function E[s1^X s2^Y], s1, s2 > 0.
double pgf(const Params& params, double s1, double s2);

/// Joint moment generating function, mgf(t1, t2) = pgf(e^{t1}, e^{t2}).
double mgf(const Params& params, double t1, double t2);

/// Conditional law X | Y = y: Binomial(n1, sigmoid(log q1 + y log t)).
BinomialLaw conditional_x_given_y(const Params& params, int y);
BinomialLaw conditional_y_given_x(const Params& params, int x);

/// Regression E[X | Y = y] = n1 * p of the conditional law.
double regression_x_on_y(const Params& params, int y);
double regression_y_on_x(const Params& params, int x);

/// P(X = x | X + Y = u) for x in [max(0, u-n2), min(u, n1)], normalized
/// anti-diagonal of the joint law. Entry 0 of the result corresponds to
/// x = max(0, u-n2).
std::vector<double> conditional_given_sum(const Params& params, int u);

/// P(X < Y) by exact enumeration.
double prob_x_less_y(const Params& params);

/// One lattice step of the pmf recurrence: returns P at (m, n) given the
/// exact value `base` at the predecessor cell ((m-1,n), (m,n-1) or
/// (m-1,n-1) according to direction).
double recurrence_step(const Params& params, StepDirection direction, int m, int n,
                       double base);

/// Compares the marginal survival functions with tolerance 1e-12.
OrderVerdict stochastic_order(const Params& params);

/// pmf of max(X, Y), length max(n1,n2)+1, by enumeration.
std::vector<double> max_pmf(const Params& params);

/// Survival function P(min(X, Y) > u) for u = 0..max(n1,n2), by enumeration.
/// Nonincreasing, with a zero final entry.
std::vector<double> min_survival(const Params& params);

/// pmf of the Poisson-conditionals limit law, proportional to
/// lambda1^x lambda2^y t^{xy} / (x! y!), normalized over the truncated grid
/// [0, truncation]^2. Throws std::domain_error when the neglected tail mass
/// cannot be bounded below 1e-12.
double poisson_limit_pmf(const PoissonLimitParams& limit, int x, int y, int truncation);

/// Normalized truncated table of the limit law, (truncation+1)^2 row-major.
std::vector<double> poisson_limit_table(const PoissonLimitParams& limit, int truncation);

/// Total variation distance between the binomial-conditionals law with
/// n1 = n2 = n, p1 = lambda1/n, p2 = lambda2/n and its Poisson-conditionals
/// limit, both evaluated on a shared grid.
double poisson_limit_tv(const PoissonLimitParams& limit, int n, int truncation);

/// 0.5 * L1 distance between two pmf vectors of equal length.
double tv_distance(const std::vector<double>& p, const std::vector<double>& q);

}  // namespace bbcd
