#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <map>
#include <random>
#include <vector>

#include "bbcd/core.hpp"
#include "bbcd/infer.hpp"
#include "bbcd/sample.hpp"

#include "oracle.hpp"

using namespace bbcd;

namespace {

// Expected-count pseudo sample at population scale m from the exact law.
SampleData pseudo_sample(const Params& params, double m) {
  const JointTable table = build_table(params);
  std::map<std::pair<int, int>, double> cells;
  for (int x = 0; x <= params.n1; ++x) {
    for (int y = 0; y <= params.n2; ++y) {
      cells[{x, y}] = m * table.at(x, y);
    }
  }
  return SampleData::from_weighted_cells(std::move(cells));
}

CellFrequencies exact_frequencies(const Params& params) {
  const JointTable table = build_table(params);
  return {table.at(0, 0), table.at(0, 1), table.at(1, 0), table.at(1, 1)};
}

}  // namespace

TEST_CASE("SampleData caches the sufficient statistics") {
  const SampleData data = SampleData::from_pairs({{0, 0}, {1, 2}, {3, 1}});
  CHECK(data.m == 3.0);
  CHECK(data.sum_x == 4.0);
  CHECK(data.sum_y == 3.0);
  CHECK(data.sum_xy == 5.0);
  CHECK(data.max_x() == 3);
  CHECK(data.max_y() == 2);
  CHECK(data.cells.at({1, 2}) == 1.0);
  CHECK_THROWS_AS(SampleData::from_pairs({{-1, 0}}), std::domain_error);
}

TEST_CASE("nelder_mead minimizes a smooth bowl") {
  const auto f = [](const std::vector<double>& v) {
    return (v[0] - 2.0) * (v[0] - 2.0) + 3.0 * (v[1] + 1.0) * (v[1] + 1.0);
  };
  const SimplexResult r = nelder_mead(f, {0.0, 0.0}, 0.5, 1e-10, 10000);
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(r.x[1] == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("proportion estimator") {
  SUBCASE("round-trips exact cell probabilities") {
    const Params truth{5, 5, 0.3, 0.6, 0.7};
    const FitResult fit = estimate_from_proportions(exact_frequencies(truth), 5, 5);
    CHECK(fit.params_hat.p1 == doctest::Approx(truth.p1).epsilon(1e-12));
    CHECK(fit.params_hat.p2 == doctest::Approx(truth.p2).epsilon(1e-12));
    CHECK(fit.params_hat.t == doctest::Approx(truth.t).epsilon(1e-12));
    CHECK(fit.method == FitMethod::proportions);
    CHECK(fit.converged);
    CHECK(fit.diagnosis.empty());
    CHECK_FALSE(fit.log_lik.has_value());
  }
  SUBCASE("independence recovers t = 1") {
    const Params truth{4, 4, 0.5, 0.5, 1.0};
    const FitResult fit = estimate_from_proportions(exact_frequencies(truth), 4, 4);
    CHECK(fit.params_hat.t == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("50-point grid recovery to 1e-10") {
    std::mt19937 gen(99);
    std::uniform_int_distribution<int> n(2, 20);
    std::uniform_real_distribution<double> p(0.1, 0.9);
    std::uniform_real_distribution<double> t(0.1, 1.9);
    for (int i = 0; i < 50; ++i) {
      const Params truth{n(gen), n(gen), p(gen), p(gen), t(gen)};
      const FitResult fit =
          estimate_from_proportions(exact_frequencies(truth), truth.n1, truth.n2);
      CHECK(std::fabs(fit.params_hat.p1 - truth.p1) < 1e-10);
      CHECK(std::fabs(fit.params_hat.p2 - truth.p2) < 1e-10);
      CHECK(std::fabs(fit.params_hat.t - truth.t) < 1e-10);
    }
  }
  SUBCASE("zero corner frequency is named") {
    CHECK_THROWS_WITH_AS(estimate_from_proportions({0.5, 0.3, 0.2, 0.0}, 3, 3),
                         doctest::Contains("f11"), std::domain_error);
    CHECK_THROWS_AS(estimate_from_proportions({0.0, 0.3, 0.2, 0.5}, 3, 3),
                    std::domain_error);
    CHECK_THROWS_AS(estimate_from_proportions({0.5, 1.3, 0.2, 0.1}, 3, 3),
                    std::domain_error);
  }
  SUBCASE("cell_frequencies reads the four corners") {
    const SampleData data =
        SampleData::from_pairs({{0, 0}, {0, 0}, {0, 1}, {1, 0}, {1, 1}, {2, 2}});
    const CellFrequencies freq = cell_frequencies(data);
    CHECK(freq.f00 == doctest::Approx(2.0 / 6.0));
    CHECK(freq.f01 == doctest::Approx(1.0 / 6.0));
    CHECK(freq.f10 == doctest::Approx(1.0 / 6.0));
    CHECK(freq.f11 == doctest::Approx(1.0 / 6.0));
  }
}

TEST_CASE("log-likelihood") {
  const Params params{6, 7, 0.35, 0.65, 0.8};
  SUBCASE("single observation equals the log pmf") {
    const SampleData one = SampleData::from_pairs({{2, 5}});
    CHECK(log_likelihood(params, one) ==
          doctest::Approx(log_pmf(params, 2, 5)).epsilon(1e-13));
  }
  SUBCASE("duplication scales additively") {
    const SampleData one = SampleData::from_pairs({{3, 4}});
    const SampleData five =
        SampleData::from_pairs({{3, 4}, {3, 4}, {3, 4}, {3, 4}, {3, 4}});
    CHECK(log_likelihood(params, five) ==
          doctest::Approx(5.0 * log_likelihood(params, one)).epsilon(1e-13));
  }
  SUBCASE("independence factorizes into binomial likelihoods") {
    const Params ind{6, 7, 0.35, 0.65, 1.0};
    const SampleData data = SampleData::from_pairs({{1, 2}, {4, 6}, {0, 3}});
    long double expected = 0.0L;
    for (const auto& [x, y] : data.pairs) {
      expected += std::log(oracle::binomial_pmf(ind.n1, ind.p1, x));
      expected += std::log(oracle::binomial_pmf(ind.n2, ind.p2, y));
    }
    CHECK(log_likelihood(ind, data) ==
          doctest::Approx(static_cast<double>(expected)).epsilon(1e-12));
  }
  SUBCASE("support violations name the offending point") {
    const SampleData bad = SampleData::from_pairs({{1, 1}, {9, 1}});
    CHECK_THROWS_WITH_AS(log_likelihood(params, bad), doctest::Contains("(9,1)"),
                         std::domain_error);
  }
  SUBCASE("weighted cells and raw pairs agree") {
    const SampleData pairs = SampleData::from_pairs({{1, 2}, {1, 2}, {0, 3}, {4, 1}});
    const SampleData cells = SampleData::from_weighted_cells(
        {{{1, 2}, 2.0}, {{0, 3}, 1.0}, {{4, 1}, 1.0}});
    CHECK(log_likelihood(params, cells) ==
          doctest::Approx(log_likelihood(params, pairs)).epsilon(1e-14));
    CHECK(cells.sample_corr() == doctest::Approx(pairs.sample_corr()).epsilon(1e-14));
  }
}

TEST_CASE("maximum likelihood fit") {
  SUBCASE("population-level self consistency") {
    const Params truth{10, 10, 0.5, 0.9, 0.8};
    const SampleData data = pseudo_sample(truth, 1000.0);
    const FitResult fit = fit_mle(data, truth.n1, truth.n2);
    CHECK(fit.converged);
    CHECK(std::fabs(fit.params_hat.p1 - truth.p1) < 1e-6);
    CHECK(std::fabs(fit.params_hat.p2 - truth.p2) < 1e-6);
    CHECK(std::fabs(fit.params_hat.t - truth.t) < 1e-6);
  }
  SUBCASE("stationarity: fitted model reproduces the sample moments") {
    const Params truth{8, 6, 0.45, 0.3, 0.5};
    const SamplePairs draws = exact_sample(truth, 4000, 11);
    const SampleData data = SampleData::from_pairs(draws.pairs);
    const FitResult fit = fit_mle(data, truth.n1, truth.n2);
    REQUIRE(fit.converged);
    const double exy =
        fit.model_moments.cov + fit.model_moments.mean_x * fit.model_moments.mean_y;
    CHECK(std::fabs(fit.model_moments.mean_x - data.mean_x()) / data.mean_x() < 1e-4);
    CHECK(std::fabs(fit.model_moments.mean_y - data.mean_y()) / data.mean_y() < 1e-4);
    CHECK(std::fabs(exy - data.sum_xy / data.m) / (data.sum_xy / data.m) < 1e-4);
  }
  SUBCASE("independent data puts t near one") {
    const Params truth{5, 5, 0.4, 0.6, 1.0};
    const SamplePairs draws = exact_sample(truth, 10000, 3);
    const FitResult fit =
        fit_mle(SampleData::from_pairs(draws.pairs), truth.n1, truth.n2);
    CHECK(fit.converged);
    CHECK(fit.params_hat.t > 0.9);
    CHECK(fit.params_hat.t < 1.1);
  }
  SUBCASE("degenerate data is diagnosed, not fitted") {
    const SampleData flat = SampleData::from_pairs({{0, 1}, {0, 2}, {0, 1}});
    const FitResult fit = fit_mle(flat, 4, 4);
    CHECK_FALSE(fit.converged);
    CHECK(fit.diagnosis.find("boundary") != std::string::npos);
  }
  SUBCASE("near-boundary weights clamp instead of throwing") {
    const SampleData skewed = SampleData::from_weighted_cells(
        {{{2, 4}, 1e16}, {{1, 3}, 1.0}, {{2, 3}, 1.0}});
    const FitResult fit = fit_mle(skewed, 4, 4);
    CHECK(fit.params_hat.p2 < 1.0);
    CHECK(fit.params_hat.p2 > 0.99);
  }
  SUBCASE("preconditions") {
    const SampleData tiny = SampleData::from_pairs({{1, 1}, {2, 2}});
    CHECK_THROWS_AS(fit_mle(tiny, 4, 4), std::domain_error);
    const SampleData data = SampleData::from_pairs({{1, 1}, {2, 2}, {5, 1}});
    CHECK_THROWS_AS(fit_mle(data, 4, 4), std::domain_error);
  }
}

TEST_CASE("profiled fit over the trial count") {
  const Params truth{6, 6, 0.4, 0.7, 0.6};
  const SamplePairs draws = exact_sample(truth, 3000, 21);
  const SampleData data = SampleData::from_pairs(draws.pairs);
  SUBCASE("single-point grid equals the fixed fit") {
    const FitResult profiled = fit_mle_profile_n(data, 6, 6, true);
    const FitResult fixed = fit_mle(data, 6, 6);
    CHECK(profiled.params_hat.p1 == doctest::Approx(fixed.params_hat.p1).epsilon(1e-10));
    CHECK(profiled.params_hat.t == doctest::Approx(fixed.params_hat.t).epsilon(1e-10));
    CHECK(profiled.method == FitMethod::mle_profiled_n);
    REQUIRE(profiled.profile_trace.size() == 1);
  }
  SUBCASE("returned n attains the trace maximum") {
    const int n_lo = std::max({data.max_x(), data.max_y(), 6});
    const FitResult profiled = fit_mle_profile_n(data, n_lo, n_lo + 4, true);
    REQUIRE_FALSE(profiled.profile_trace.empty());
    double best = -1e300;
    for (const ProfilePoint& point : profiled.profile_trace) {
      best = std::max(best, point.log_lik);
    }
    CHECK(profiled.log_lik.value() == doctest::Approx(best));
    // Ties break toward the smaller trial count.
    for (const ProfilePoint& point : profiled.profile_trace) {
      if (point.log_lik == profiled.log_lik.value()) {
        CHECK(profiled.params_hat.n1 <= point.n1);
        break;
      }
    }
  }
  SUBCASE("range below the data is rejected") {
    CHECK_THROWS_AS(fit_mle_profile_n(data, 1, 3, true), std::domain_error);
    CHECK_THROWS_AS(fit_mle_profile_n(data, 9, 7, true), std::domain_error);
  }
  SUBCASE("unequal trial counts search the full grid product") {
    const int n_lo = std::max({data.max_x(), data.max_y(), 6});
    const FitResult profiled = fit_mle_profile_n(data, n_lo, n_lo + 2, false);
    CHECK(profiled.profile_trace.size() == 9);
    double best = -1e300;
    for (const ProfilePoint& point : profiled.profile_trace) {
      best = std::max(best, point.log_lik);
    }
    CHECK(profiled.log_lik.value() == doctest::Approx(best));
  }
}

TEST_CASE("chi-square goodness of fit") {
  const Params truth{5, 5, 0.4, 0.7, 0.6};
  SUBCASE("perfect fractional counts give statistic 0") {
    const SampleData data = pseudo_sample(truth, 200.0);
    FitResult fitted;
    fitted.params_hat = truth;
    fitted.converged = true;
    fitted.model_moments = moments(truth);
    const GofReport report = chi_square_gof(data, fitted, 0);
    CHECK(report.statistic == doctest::Approx(0.0).epsilon(1e-18));
    CHECK(report.p_value == doctest::Approx(1.0));
    double total_exp = 0.0, total_obs = 0.0;
    for (const PooledCell& group : report.pooled_cells) {
      CHECK(group.expected >= 5.0);
      total_exp += group.expected;
      total_obs += group.observed;
    }
    CHECK(std::fabs(total_exp - data.m) < 1e-9);
    CHECK(std::fabs(total_obs - data.m) < 1e-9);
  }
  SUBCASE("calibrated on correctly specified data") {
    const SamplePairs draws = exact_sample(truth, 5000, 77);
    const SampleData data = SampleData::from_pairs(draws.pairs);
    const FitResult fit = fit_mle(data, truth.n1, truth.n2);
    const GofReport report = chi_square_gof(data, fit, 3);
    CHECK(report.p_value > 0.001);
    CHECK(report.dof >= 1);
  }
  SUBCASE("rejects a misspecified independence model") {
    const Params dependent{10, 10, 0.5, 0.5, 0.1};
    const SamplePairs draws = exact_sample(dependent, 2000, 5);
    const SampleData data = SampleData::from_pairs(draws.pairs);
    FitResult independence;
    independence.params_hat =
        Params{10, 10, data.mean_x() / 10.0, data.mean_y() / 10.0, 1.0};
    independence.converged = true;
    independence.model_moments = moments(independence.params_hat);
    const GofReport report = chi_square_gof(data, independence, 2);
    CHECK(report.p_value < 0.01);
  }
  SUBCASE("dof floor is flagged") {
    const Params small{1, 1, 0.5, 0.5, 1.0};
    const SamplePairs draws = exact_sample(small, 40, 8);
    const SampleData data = SampleData::from_pairs(draws.pairs);
    FitResult fitted;
    fitted.params_hat = small;
    fitted.converged = true;
    fitted.model_moments = moments(small);
    const GofReport report = chi_square_gof(data, fitted, 3);
    CHECK(report.dof == 1);
    CHECK(report.dof_floored);
  }
  SUBCASE("insufficient data") {
    const SampleData data = SampleData::from_pairs({{1, 1}, {2, 2}, {0, 1}});
    FitResult fitted;
    fitted.params_hat = truth;
    CHECK_THROWS_AS(chi_square_gof(data, fitted, 0), std::domain_error);
  }
}
