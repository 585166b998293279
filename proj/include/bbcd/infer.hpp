#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bbcd/core.hpp"
#include "bbcd/params.hpp"

namespace bbcd {

/// Observed pairs with cached sufficient statistics (sum x, sum y, sum xy)
/// and a sparse cell map. Weights are doubles so population-level pseudo
/// samples (expected counts) flow through the same code path; for real data
/// they are the integer multiplicities.
struct SampleData {
  std::vector<std::pair<int, int>> pairs;  // empty when built from cells
  std::map<std::pair<int, int>, double> cells;
  double m = 0.0;
  double sum_x = 0.0;
  double sum_y = 0.0;
  double sum_xy = 0.0;

  static SampleData from_pairs(std::vector<std::pair<int, int>> pairs);
  static SampleData from_weighted_cells(std::map<std::pair<int, int>, double> cells);

  int max_x() const;
  int max_y() const;

  double mean_x() const { return sum_x / m; }
  double mean_y() const { return sum_y / m; }

  /// Pearson correlation of the observed pairs.
  double sample_corr() const;
};

/// Relative frequencies of the four corner cells (0,0), (0,1), (1,0), (1,1).
struct CellFrequencies {
  double f00 = 0.0;
  double f01 = 0.0;
  double f10 = 0.0;
  double f11 = 0.0;
};

CellFrequencies cell_frequencies(const SampleData& data);

enum class FitMethod { proportions, mle_fixed_n, mle_profiled_n };

const char* to_string(FitMethod method);

struct ProfilePoint {
  int n1 = 0;
  int n2 = 0;
  double log_lik = 0.0;
  bool converged = false;
};

struct FitResult {
  Params params_hat;
  std::optional<double> log_lik;  // absent for the closed-form estimator
  bool converged = false;
  long n_evaluations = 0;
  MomentSummary model_moments;
  FitMethod method = FitMethod::mle_fixed_n;
  std::string diagnosis;                    // nonempty on clamping or boundary data
  std::vector<ProfilePoint> profile_trace;  // filled by fit_mle_profile_n
};

struct PooledCell {
  std::vector<std::pair<int, int>> members;
  double observed = 0.0;
  double expected = 0.0;
};

struct GofReport {
  double statistic = 0.0;
  int dof = 1;
  double p_value = 1.0;
  std::vector<PooledCell> pooled_cells;
  bool dof_floored = false;
};

struct OptimizerOptions {
  double simplex_tol = 1e-8;
  long max_evaluations = 100000;
  double initial_step = 0.5;  // in the transformed space
  std::optional<Params> start;
};

struct SimplexResult {
  std::vector<double> x;
  double fmin = 0.0;
  long n_evaluations = 0;
  bool converged = false;
};

/// Derivative-free simplex minimization (reflection, expansion, contraction,
/// shrink). Converges when the simplex diameter falls below tol.
SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> x0, double step, double tol,
                          long max_evaluations);

/// Closed-form estimates from the corner-cell frequencies:
///   p2 = f01 / (f01 + n2 f00),
///   p1 = f10 / (f10 + n1 f00),
///   t  = (1 - p1) f11 / (n1 p1 f01).
/// Estimates falling outside the parameter space are clamped, with the clamp
/// reported in the diagnosis field.
FitResult estimate_from_proportions(const CellFrequencies& freq, int n1, int n2);

/// Log-likelihood of the data, computable from the sufficient statistics and
/// the per-cell binomial coefficients.
double log_likelihood(const Params& params, const SampleData& data);

/// Maximum likelihood over (p1, p2, t) at fixed trial counts, by simplex
/// search in the unconstrained (logit p1, logit p2, log t) space. A converged
/// fit matches the model (E[X], E[Y], E[XY]) to the sample means within 1e-4
/// relative error, the stationarity condition of this exponential family.
FitResult fit_mle(const SampleData& data, int n1, int n2,
                  const OptimizerOptions& opts = {});

/// Profiles the integer trial counts over [n_min, n_max]: n1 = n2 = n when
/// equal_n, otherwise the full grid product. Returns the best fit by
/// maximized log-likelihood, ties broken toward smaller n; the per-n trace
/// is kept in profile_trace.
FitResult fit_mle_profile_n(const SampleData& data, int n_min, int n_max,
                            bool equal_n, const OptimizerOptions& opts = {});

/// Pearson chi-square test of the fitted model. Cells are pooled greedily in
/// descending expected-count order until every group has expected >= 5;
/// dof = #groups - 1 - n_estimated_params, floored at 1 (flagged).
GofReport chi_square_gof(const SampleData& data, const FitResult& fitted,
                         int n_estimated_params);

}  // namespace bbcd
