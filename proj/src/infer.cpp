#include "bbcd/infer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "bbcd/math.hpp"

namespace bbcd {

namespace {

constexpr double kStationarityTol = 1e-4;

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

SampleData SampleData::from_pairs(std::vector<std::pair<int, int>> pairs) {
  SampleData data;
  data.pairs = std::move(pairs);
  for (const auto& [x, y] : data.pairs) {
    if (x < 0 || y < 0) {
      throw std::domain_error("SampleData: observations must be nonnegative");
    }
    data.cells[{x, y}] += 1.0;
    data.sum_x += x;
    data.sum_y += y;
    data.sum_xy += static_cast<double>(x) * y;
  }
  data.m = static_cast<double>(data.pairs.size());
  return data;
}

SampleData SampleData::from_weighted_cells(std::map<std::pair<int, int>, double> cells) {
  SampleData data;
  data.cells = std::move(cells);
  for (const auto& [cell, w] : data.cells) {
    if (cell.first < 0 || cell.second < 0 || w < 0.0 || !std::isfinite(w)) {
      throw std::domain_error("SampleData: cells need nonnegative coordinates and weights");
    }
    data.m += w;
    data.sum_x += w * cell.first;
    data.sum_y += w * cell.second;
    data.sum_xy += w * cell.first * cell.second;
  }
  if (!(data.m > 0.0)) throw std::domain_error("SampleData: total weight must be > 0");
  return data;
}

int SampleData::max_x() const {
  int mx = 0;
  for (const auto& [cell, w] : cells) {
    if (w > 0.0) mx = std::max(mx, cell.first);
  }
  return mx;
}

int SampleData::max_y() const {
  int my = 0;
  for (const auto& [cell, w] : cells) {
    if (w > 0.0) my = std::max(my, cell.second);
  }
  return my;
}

double SampleData::sample_corr() const {
  const double mx = mean_x();
  const double my = mean_y();
  double vx = 0.0, vy = 0.0, cxy = 0.0;
  for (const auto& [cell, w] : cells) {
    const double dx = cell.first - mx;
    const double dy = cell.second - my;
    vx += w * dx * dx;
    vy += w * dy * dy;
    cxy += w * dx * dy;
  }
  const double denom = std::sqrt(vx * vy);
  return denom > 0.0 ? cxy / denom : 0.0;
}

CellFrequencies cell_frequencies(const SampleData& data) {
  auto freq = [&](int x, int y) {
    const auto it = data.cells.find({x, y});
    return it == data.cells.end() ? 0.0 : it->second / data.m;
  };
  return {freq(0, 0), freq(0, 1), freq(1, 0), freq(1, 1)};
}

const char* to_string(FitMethod method) {
  switch (method) {
    case FitMethod::proportions: return "proportions";
    case FitMethod::mle_fixed_n: return "mle_fixed_n";
    case FitMethod::mle_profiled_n: return "mle_profiled_n";
  }
  return "unknown";
}

SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                          std::vector<double> x0, double step, double tol,
                          long max_evaluations) {
  const std::size_t n = x0.size();
  if (n == 0) throw std::invalid_argument("nelder_mead: empty start point");
  constexpr double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;

  std::vector<std::vector<double>> x(n + 1, x0);
  for (std::size_t i = 0; i < n; ++i) x[i + 1][i] += step;

  SimplexResult result;
  std::vector<double> fx(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    fx[i] = f(x[i]);
    ++result.n_evaluations;
  }

  std::vector<double> centroid(n), xr(n), xe(n), xk(n);
  while (result.n_evaluations < max_evaluations) {
    std::vector<std::size_t> idx(n + 1);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });

    double diameter = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        diameter = std::max(diameter, std::fabs(x[idx[i]][j] - x[idx[0]][j]));
      }
    }
    if (diameter < tol) {
      result.converged = true;
      break;
    }

    for (std::size_t j = 0; j < n; ++j) centroid[j] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) centroid[j] += x[idx[i]][j];
    }
    for (std::size_t j = 0; j < n; ++j) centroid[j] /= static_cast<double>(n);

    const std::vector<double>& worst = x[idx[n]];
    for (std::size_t j = 0; j < n; ++j) xr[j] = centroid[j] + alpha * (centroid[j] - worst[j]);
    const double fr = f(xr);
    ++result.n_evaluations;

    if (fr < fx[idx[0]]) {
      for (std::size_t j = 0; j < n; ++j) xe[j] = centroid[j] + gamma * (xr[j] - centroid[j]);
      const double fe = f(xe);
      ++result.n_evaluations;
      if (fe < fr) {
        x[idx[n]] = xe;
        fx[idx[n]] = fe;
      } else {
        x[idx[n]] = xr;
        fx[idx[n]] = fr;
      }
      continue;
    }
    if (fr < fx[idx[n - 1]]) {
      x[idx[n]] = xr;
      fx[idx[n]] = fr;
      continue;
    }
    if (fr < fx[idx[n]]) {
      for (std::size_t j = 0; j < n; ++j) xk[j] = centroid[j] + rho * (xr[j] - centroid[j]);
    } else {
      for (std::size_t j = 0; j < n; ++j) xk[j] = centroid[j] + rho * (worst[j] - centroid[j]);
    }
    const double fk = f(xk);
    ++result.n_evaluations;
    if (fk < std::min(fr, fx[idx[n]])) {
      x[idx[n]] = xk;
      fx[idx[n]] = fk;
      continue;
    }
    for (std::size_t i = 1; i <= n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        x[idx[i]][j] = x[idx[0]][j] + sigma * (x[idx[i]][j] - x[idx[0]][j]);
      }
      fx[idx[i]] = f(x[idx[i]]);
      ++result.n_evaluations;
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    if (fx[i] < fx[best]) best = i;
  }
  result.x = x[best];
  result.fmin = fx[best];
  return result;
}

FitResult estimate_from_proportions(const CellFrequencies& freq, int n1, int n2) {
  if (n1 < 1 || n2 < 1) {
    throw std::domain_error("estimate_from_proportions: trial counts must be >= 1");
  }
  const struct { const char* name; double value; } corners[] = {
      {"f00", freq.f00}, {"f01", freq.f01}, {"f10", freq.f10}, {"f11", freq.f11}};
  for (const auto& c : corners) {
    if (!(c.value > 0.0)) {
      throw std::domain_error(std::string("estimate_from_proportions: cell ") + c.name +
                              " has zero frequency");
    }
    if (!(c.value <= 1.0)) {
      throw std::domain_error(std::string("estimate_from_proportions: cell ") + c.name +
                              " is not a relative frequency");
    }
  }

  FitResult result;
  result.method = FitMethod::proportions;
  double p2 = freq.f01 / (freq.f01 + n2 * freq.f00);
  double p1 = freq.f10 / (freq.f10 + n1 * freq.f00);
  double t = (1.0 - p1) * freq.f11 / (n1 * p1 * freq.f01);

  constexpr double lo = 1e-12;
  auto clamp_report = [&result](double v, double a, double b, const char* name) {
    if (v < a || v > b) {
      result.diagnosis += std::string(result.diagnosis.empty() ? "" : "; ") +
                          "clamped " + name + " from " + std::to_string(v);
      return std::clamp(v, a, b);
    }
    return v;
  };
  p1 = clamp_report(p1, lo, 1.0 - lo, "p1");
  p2 = clamp_report(p2, lo, 1.0 - lo, "p2");
  t = clamp_report(t, lo, std::numeric_limits<double>::max(), "t");

  result.params_hat = Params{n1, n2, p1, p2, t};
  result.params_hat.validate();
  result.converged = true;
  result.model_moments = moments(result.params_hat);
  return result;
}

double log_likelihood(const Params& params, const SampleData& data) {
  params.validate();
  if (!(data.m > 0.0)) throw std::domain_error("log_likelihood: empty data");
  CompensatedSum lchoose_sum;
  std::size_t index = 0;
  for (const auto& [cell, w] : data.cells) {
    if (cell.first > params.n1 || cell.second > params.n2) {
      throw std::domain_error("log_likelihood: observation " + std::to_string(index) +
                              " at (" + std::to_string(cell.first) + "," +
                              std::to_string(cell.second) + ") lies outside the support");
    }
    lchoose_sum.add(w * (log_choose(params.n1, cell.first) +
                         log_choose(params.n2, cell.second)));
    ++index;
  }
  return -data.m * log_norm_constant(params) + lchoose_sum.value() +
         data.sum_x * std::log(params.p1) + data.sum_y * std::log(params.p2) +
         (data.m * params.n1 - data.sum_x) * std::log1p(-params.p1) +
         (data.m * params.n2 - data.sum_y) * std::log1p(-params.p2) +
         data.sum_xy * std::log(params.t);
}

namespace {

// Expected sufficient statistics (E[X], E[Y], E[XY]) of the model.
std::array<double, 3> model_sufficient_means(const Params& params) {
  const MomentSummary mom = moments(params);
  return {mom.mean_x, mom.mean_y, mom.cov + mom.mean_x * mom.mean_y};
}

bool stationarity_holds(const Params& params, const SampleData& data) {
  const auto model = model_sufficient_means(params);
  const double sample[3] = {data.sum_x / data.m, data.sum_y / data.m,
                            data.sum_xy / data.m};
  for (int i = 0; i < 3; ++i) {
    const double scale = std::max(std::fabs(sample[i]), 1e-8);
    if (std::fabs(model[i] - sample[i]) / scale > kStationarityTol) return false;
  }
  return true;
}

// Maps the unconstrained optimizer point back to Params. sigmoid rounds to
// an exact 0 or 1 beyond |theta| ~ 37, so the probabilities are clamped to
// the open interval; a note records when that fires.
Params params_from_theta(int n1, int n2, const std::vector<double>& theta,
                         std::string* note) {
  constexpr double p_lo = 1e-15;
  constexpr double p_hi = 1.0 - 1e-12;
  const double p1 = sigmoid(theta[0]);
  const double p2 = sigmoid(theta[1]);
  const double t = std::exp(theta[2]);
  const Params params{n1, n2, std::clamp(p1, p_lo, p_hi), std::clamp(p2, p_lo, p_hi),
                      std::clamp(t, 1e-300, 1e300)};
  if (note && (params.p1 != p1 || params.p2 != p2 || params.t != t)) {
    *note = "estimate clamped away from the parameter-space boundary";
  }
  return params;
}

}  // namespace

FitResult fit_mle(const SampleData& data, int n1, int n2, const OptimizerOptions& opts) {
  if (n1 < 1 || n2 < 1) throw std::domain_error("fit_mle: trial counts must be >= 1");
  if (data.max_x() > n1 || data.max_y() > n2) {
    throw std::domain_error("fit_mle: data exceed the stated trial counts");
  }
  if (!(data.m >= 3.0)) throw std::domain_error("fit_mle: need at least 3 observations");

  FitResult result;
  result.method = FitMethod::mle_fixed_n;

  // Boundary data pin p at 0 or 1 where no interior optimum exists.
  const double mean_x = data.mean_x();
  const double mean_y = data.mean_y();
  if (mean_x <= 0.0 || mean_x >= n1 || mean_y <= 0.0 || mean_y >= n2) {
    result.diagnosis = "boundary: all observations sit at an edge of the support";
    constexpr double eps = 1e-6;
    result.params_hat = Params{n1, n2, std::clamp(mean_x / n1, eps, 1.0 - eps),
                               std::clamp(mean_y / n2, eps, 1.0 - eps), 1.0};
    result.converged = false;
    result.log_lik = log_likelihood(result.params_hat, data);
    result.model_moments = moments(result.params_hat);
    return result;
  }

  // In theta = (logit p1, logit p2, log t) the negative log-likelihood is
  //   m * logS(n1, n2, e^t1, e^t2, e^t3) - Sx t1 - Sy t2 - Sxy t3 - const,
  // smooth and convex on all of R^3.
  const auto objective = [&](const std::vector<double>& theta) {
    if (std::fabs(theta[0]) > 700.0 || std::fabs(theta[1]) > 700.0 ||
        std::fabs(theta[2]) > 700.0) {
      return std::numeric_limits<double>::infinity();
    }
    const double log_s = log_kernel_sum_logs(n1, n2, theta[0], theta[1], theta[2]);
    return data.m * log_s - data.sum_x * theta[0] - data.sum_y * theta[1] -
           data.sum_xy * theta[2];
  };

  Params start{n1, n2, std::clamp(mean_x / n1, 1e-6, 1.0 - 1e-6),
               std::clamp(mean_y / n2, 1e-6, 1.0 - 1e-6), 1.0};
  if (opts.start) start = *opts.start;
  std::vector<double> theta{logit(start.p1), logit(start.p2), std::log(start.t)};

  SimplexResult sr;
  long evaluations = 0;
  bool converged = false;
  std::string clamp_note;
  // A fresh simplex around the incumbent rescues the occasional premature
  // collapse; everything stays deterministic.
  for (int attempt = 0; attempt < 3 && evaluations < opts.max_evaluations; ++attempt) {
    sr = nelder_mead(objective, theta,
                     attempt == 0 ? opts.initial_step : opts.initial_step * 0.02,
                     opts.simplex_tol, opts.max_evaluations - evaluations);
    evaluations += sr.n_evaluations;
    theta = sr.x;
    const Params candidate = params_from_theta(n1, n2, theta, nullptr);
    if (sr.converged && stationarity_holds(candidate, data)) {
      converged = true;
      break;
    }
  }

  result.params_hat = params_from_theta(n1, n2, theta, &clamp_note);
  result.params_hat.validate();
  result.n_evaluations = evaluations;
  result.converged = converged;
  if (!converged) {
    result.diagnosis = "optimizer stopped without meeting the stationarity check";
  }
  if (!clamp_note.empty()) {
    result.diagnosis += (result.diagnosis.empty() ? "" : "; ") + clamp_note;
  }
  result.log_lik = log_likelihood(result.params_hat, data);
  result.model_moments = moments(result.params_hat);
  return result;
}

FitResult fit_mle_profile_n(const SampleData& data, int n_min, int n_max, bool equal_n,
                            const OptimizerOptions& opts) {
  if (n_min > n_max) throw std::domain_error("fit_mle_profile_n: empty n range");
  if (n_min < std::max({1, data.max_x(), data.max_y()})) {
    throw std::domain_error("fit_mle_profile_n: n_min below the largest observation");
  }

  std::optional<FitResult> best;
  std::vector<ProfilePoint> trace;
  std::string last_error;
  auto consider = [&](int n1, int n2) {
    FitResult fit;
    try {
      fit = fit_mle(data, n1, n2, opts);
    } catch (const std::exception& e) {
      last_error = e.what();
      return;
    }
    const double ll = fit.log_lik.value();
    trace.push_back({n1, n2, ll, fit.converged});
    if (!best || ll > best->log_lik.value()) best = std::move(fit);
  };

  if (equal_n) {
    for (int n = n_min; n <= n_max; ++n) consider(n, n);
  } else {
    for (int n1 = n_min; n1 <= n_max; ++n1) {
      for (int n2 = n_min; n2 <= n_max; ++n2) consider(n1, n2);
    }
  }
  if (!best) {
    throw std::runtime_error("fit_mle_profile_n: every grid point failed (" +
                             last_error + ")");
  }
  best->method = FitMethod::mle_profiled_n;
  best->profile_trace = std::move(trace);
  return *best;
}

GofReport chi_square_gof(const SampleData& data, const FitResult& fitted,
                         int n_estimated_params) {
  fitted.params_hat.validate();
  if (!(data.m >= 10.0)) {
    throw std::domain_error("chi_square_gof: need at least 10 observations");
  }
  if (n_estimated_params < 0) {
    throw std::domain_error("chi_square_gof: negative parameter count");
  }
  const Params& params = fitted.params_hat;
  if (data.max_x() > params.n1 || data.max_y() > params.n2) {
    throw std::domain_error("chi_square_gof: data exceed the fitted support");
  }
  const JointTable table = build_table(params);

  struct Cell {
    int x, y;
    double expected;
  };
  std::vector<Cell> order;
  order.reserve(table.probs.size());
  for (int x = 0; x <= params.n1; ++x) {
    for (int y = 0; y <= params.n2; ++y) {
      order.push_back({x, y, data.m * table.at(x, y)});
    }
  }
  std::sort(order.begin(), order.end(), [](const Cell& a, const Cell& b) {
    if (a.expected != b.expected) return a.expected > b.expected;
    return std::pair{a.x, a.y} < std::pair{b.x, b.y};
  });

  // Greedy pooling: walk in descending expected order, closing a group as
  // soon as it reaches expected >= 5; a short final group merges backwards.
  GofReport report;
  PooledCell current;
  auto observed_at = [&](int x, int y) {
    const auto it = data.cells.find({x, y});
    return it == data.cells.end() ? 0.0 : it->second;
  };
  for (const Cell& cell : order) {
    current.members.emplace_back(cell.x, cell.y);
    current.expected += cell.expected;
    current.observed += observed_at(cell.x, cell.y);
    if (current.expected >= 5.0) {
      report.pooled_cells.push_back(std::move(current));
      current = {};
    }
  }
  if (!current.members.empty()) {
    if (report.pooled_cells.empty()) {
      throw std::domain_error("chi_square_gof: expected counts too small to pool");
    }
    PooledCell& last = report.pooled_cells.back();
    last.members.insert(last.members.end(), current.members.begin(),
                        current.members.end());
    last.expected += current.expected;
    last.observed += current.observed;
  }

  CompensatedSum stat;
  for (const PooledCell& group : report.pooled_cells) {
    const double d = group.observed - group.expected;
    stat.add(d * d / group.expected);
  }
  report.statistic = stat.value();
  const int groups = static_cast<int>(report.pooled_cells.size());
  int dof = groups - 1 - n_estimated_params;
  if (dof < 1) {
    dof = 1;
    report.dof_floored = true;
  }
  report.dof = dof;
  report.p_value = chi_square_upper_tail(report.statistic, dof);
  return report;
}

}  // namespace bbcd
