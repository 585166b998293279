#include "bbcd/cli.hpp"

#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bbcd/core.hpp"
#include "bbcd/infer.hpp"
#include "bbcd/io.hpp"
#include "bbcd/math.hpp"
#include "bbcd/params.hpp"
#include "bbcd/sample.hpp"

namespace bbcd::cli {

namespace {

using nlohmann::json;

enum class Format { json, csv };

struct RunConfig {
  std::string subcommand;
  Format format = Format::json;
  bool format_given = false;

  int n1 = 0;
  int n2 = 0;  // defaults to n1 when omitted
  double p1 = 0.0;
  double p2 = 0.0;
  double t = 0.0;

  int x = 0;
  int y = 0;

  std::string input_path;
  bool freq = false;

  std::optional<std::uint64_t> seed;
  std::size_t n_samples = 1000;
  std::size_t burn_in = 500;
  std::size_t thin = 1;

  int n_min = 0;
  int n_max = 0;
  bool equal_n = false;
  bool have_n1 = false;
  bool have_n_range = false;

  std::size_t mem_cap = kDefaultTableCellCap;
};

Params params_from(const RunConfig& cfg) {
  Params params{cfg.n1, cfg.n2 > 0 ? cfg.n2 : cfg.n1, cfg.p1, cfg.p2, cfg.t};
  params.validate();
  return params;
}

std::uint64_t resolve_seed(const RunConfig& cfg, std::ostream& err) {
  if (cfg.seed) return *cfg.seed;
  std::random_device rd;
  const std::uint64_t seed =
      (static_cast<std::uint64_t>(rd()) << 32) ^ static_cast<std::uint64_t>(rd());
  err << "seed: " << seed << "\n";  // echo so the run can be replayed
  return seed;
}

void print_json(std::ostream& out, const json& j) { out << j.dump(2) << "\n"; }

int run_pmf(const RunConfig& cfg, std::ostream& out) {
  const Params params = params_from(cfg);
  const double lp = log_pmf(params, cfg.x, cfg.y);
  const double p = std::exp(lp);
  if (cfg.format == Format::csv) {
    out << "x,y,log_pmf,pmf\n"
        << cfg.x << ',' << cfg.y << ',' << std::setprecision(17) << lp << ',' << p
        << "\n";
  } else {
    print_json(out, json{{"params", to_json(params)},
                         {"x", cfg.x},
                         {"y", cfg.y},
                         {"log_pmf", lp},
                         {"pmf", p}});
  }
  return 0;
}

int run_table(const RunConfig& cfg, std::ostream& out) {
  const Params params = params_from(cfg);
  const JointTable table = build_table(params, cfg.mem_cap);
  if (cfg.format == Format::json && cfg.format_given) {
    json rows = json::array();
    for (int x = 0; x <= params.n1; ++x) {
      for (int y = 0; y <= params.n2; ++y) {
        rows.push_back({{"x", x}, {"y", y}, {"prob", table.at(x, y)}});
      }
    }
    print_json(out, json{{"params", to_json(params)},
                         {"log_norm", table.log_norm},
                         {"cells", std::move(rows)}});
    return 0;
  }
  out << "x,y,prob\n" << std::setprecision(17);
  for (int x = 0; x <= params.n1; ++x) {
    for (int y = 0; y <= params.n2; ++y) {
      out << x << ',' << y << ',' << table.at(x, y) << '\n';
    }
  }
  return 0;
}

int run_moments(const RunConfig& cfg, std::ostream& out) {
  const Params params = params_from(cfg);
  const MomentSummary m = moments(params);
  if (cfg.format == Format::csv) {
    out << "mean_x,mean_y,var_x,var_y,cov,corr\n"
        << std::setprecision(17) << m.mean_x << ',' << m.mean_y << ',' << m.var_x << ','
        << m.var_y << ',' << m.cov << ',' << m.corr << "\n";
  } else {
    json j = to_json(m);
    j["params"] = to_json(params);
    print_json(out, j);
  }
  return 0;
}

int run_sample(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Params params = params_from(cfg);
  GibbsConfig gibbs;
  gibbs.n_samples = cfg.n_samples;
  gibbs.burn_in = cfg.burn_in;
  gibbs.thin = cfg.thin;
  gibbs.seed = resolve_seed(cfg, err);
  const SamplePairs draws = gibbs_sample(params, gibbs);
  if (cfg.format == Format::json && cfg.format_given) {
    json pairs = json::array();
    for (const auto& [x, y] : draws.pairs) pairs.push_back({x, y});
    print_json(out, json{{"params", to_json(params)},
                         {"seed", gibbs.seed},
                         {"burn_in", gibbs.burn_in},
                         {"thin", gibbs.thin},
                         {"algorithm", draws.rng_algorithm},
                         {"pairs", std::move(pairs)}});
    return 0;
  }
  write_sample_csv(out, draws);
  return 0;
}

FitResult fit_from_config(const RunConfig& cfg, const SampleData& data,
                          int* n_estimated) {
  if (cfg.have_n_range) {
    *n_estimated = cfg.equal_n ? 4 : 5;
    return fit_mle_profile_n(data, cfg.n_min, cfg.n_max, cfg.equal_n);
  }
  if (!cfg.have_n1) {
    throw std::domain_error("fit: supply either --n1 [--n2] or --n-min/--n-max");
  }
  *n_estimated = 3;
  return fit_mle(data, cfg.n1, cfg.n2 > 0 ? cfg.n2 : cfg.n1);
}

json fit_report(const FitResult& fit, const SampleData& data) {
  json j = to_json(fit);
  j["model_corr"] = fit.model_moments.corr;
  j["sample_corr"] = data.sample_corr();
  return j;
}

int run_fit(const RunConfig& cfg, std::ostream& out) {
  const SampleData data = parse_csv(cfg.input_path, cfg.freq);
  int n_estimated = 0;
  const FitResult fit = fit_from_config(cfg, data, &n_estimated);
  if (cfg.format == Format::csv) {
    const Params& p = fit.params_hat;
    out << "n1,n2,p1,p2,t,log_lik,converged,method,model_corr,sample_corr\n"
        << std::setprecision(17) << p.n1 << ',' << p.n2 << ',' << p.p1 << ',' << p.p2
        << ',' << p.t << ',' << fit.log_lik.value_or(0.0) << ','
        << (fit.converged ? "true" : "false") << ',' << to_string(fit.method) << ','
        << fit.model_moments.corr << ',' << data.sample_corr() << "\n";
  } else {
    print_json(out, fit_report(fit, data));
  }
  return 0;
}

int run_gof(const RunConfig& cfg, std::ostream& out) {
  const SampleData data = parse_csv(cfg.input_path, cfg.freq);
  FitResult fitted;
  int n_estimated = 0;
  bool fitted_here = false;
  const int given = (cfg.p1 > 0.0) + (cfg.p2 > 0.0) + (cfg.t > 0.0);
  if (given > 0) {
    // Fully specified model: nothing estimated.
    if (given < 3) {
      throw std::domain_error(
          "gof: a fixed model needs all of --p1, --p2 and --t (plus --n1)");
    }
    fitted.params_hat = params_from(cfg);
    fitted.converged = true;
    fitted.model_moments = moments(fitted.params_hat);
  } else {
    fitted = fit_from_config(cfg, data, &n_estimated);
    fitted_here = true;
  }
  const GofReport report = chi_square_gof(data, fitted, n_estimated);
  if (cfg.format == Format::csv) {
    out << "statistic,dof,p_value\n"
        << std::setprecision(17) << report.statistic << ',' << report.dof << ','
        << report.p_value << "\n";
  } else {
    json j = to_json(report);
    j["params"] = to_json(fitted.params_hat);
    if (fitted_here) j["fit"] = fit_report(fitted, data);
    print_json(out, j);
  }
  return 0;
}

int run_limit(const RunConfig& cfg, std::ostream& out) {
  const Params base = params_from(cfg);
  PoissonLimitParams limit{base.n1 * base.p1, base.n2 * base.p2, base.t};
  limit.validate();
  const int n_lo = cfg.have_n_range ? cfg.n_min : 10;
  const int n_hi = cfg.have_n_range ? cfg.n_max : 80;
  if (n_lo < 1 || n_hi < n_lo) throw std::domain_error("limit: bad n ladder");
  // Truncation chosen so the limit-law tail is provably below 1e-12.
  const int truncation =
      std::max<int>(64, static_cast<int>(8.0 * (limit.lambda1 + limit.lambda2)) + 32);

  json ladder = json::array();
  std::ostringstream csv;
  csv << "n,tv\n" << std::setprecision(17);
  for (int n = n_lo; n <= n_hi; n *= 2) {
    const double tv = poisson_limit_tv(limit, n, truncation);
    ladder.push_back({{"n", n}, {"tv", tv}});
    csv << n << ',' << tv << '\n';
  }
  if (cfg.format == Format::csv) {
    out << csv.str();
  } else {
    print_json(out, json{{"lambda1", limit.lambda1},
                         {"lambda2", limit.lambda2},
                         {"t", limit.t},
                         {"truncation", truncation},
                         {"ladder", std::move(ladder)}});
  }
  return 0;
}

int fail(std::ostream& out, const std::string& code, const std::string& message) {
  print_json(out, json{{"error", {{"code", code}, {"message", message}}}});
  return 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Exact evaluation, sampling, fitting and goodness-of-fit for the "
               "bivariate binomial-conditionals distribution",
               "bbcd"};
  app.require_subcommand(1);
  app.fallthrough();  // subcommands inherit this, so --output-format works anywhere

  std::string format = "json";
  app.add_option("--output-format", format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}));

  auto add_params = [&](CLI::App* sub, bool required) {
    auto* n1 = sub->add_option("--n1", cfg.n1, "first trial count");
    sub->add_option("--n2", cfg.n2, "second trial count (defaults to --n1)");
    auto* p1 = sub->add_option("--p1", cfg.p1, "first success probability");
    auto* p2 = sub->add_option("--p2", cfg.p2, "second success probability");
    auto* t = sub->add_option("--t", cfg.t, "dependence parameter");
    if (required) {
      n1->required();
      p1->required();
      p2->required();
      t->required();
    }
  };

  CLI::App* pmf = app.add_subcommand("pmf", "evaluate the joint pmf at one point");
  add_params(pmf, true);
  pmf->add_option("--x", cfg.x, "first coordinate")->required();
  pmf->add_option("--y", cfg.y, "second coordinate")->required();

  CLI::App* table = app.add_subcommand("table", "emit the full joint table");
  add_params(table, true);
  table->add_option("--mem-cap", cfg.mem_cap, "maximum table cells");

  CLI::App* mom = app.add_subcommand("moments", "means, variances and correlation");
  add_params(mom, true);

  CLI::App* sample = app.add_subcommand("sample", "Gibbs draws from the joint law");
  add_params(sample, true);
  sample->add_option("--n-samples", cfg.n_samples, "number of kept draws");
  sample->add_option("--burn-in", cfg.burn_in, "discarded initial sweeps");
  sample->add_option("--thin", cfg.thin, "keep every thin-th sweep");
  std::uint64_t seed_value = 0;
  auto* seed_opt = sample->add_option("--seed", seed_value, "RNG seed");

  CLI::App* fit = app.add_subcommand("fit", "maximum likelihood fit from CSV data");
  fit->add_option("--input", cfg.input_path, "CSV file with header x,y")->required();
  fit->add_flag("--freq", cfg.freq, "input rows are x,y,count aggregates");
  auto* fit_n1 = fit->add_option("--n1", cfg.n1, "fixed first trial count");
  fit->add_option("--n2", cfg.n2, "fixed second trial count (defaults to --n1)");
  auto* fit_nmin = fit->add_option("--n-min", cfg.n_min, "smallest profiled n");
  fit->add_option("--n-max", cfg.n_max, "largest profiled n");
  fit->add_flag("--equal-n", cfg.equal_n, "profile with n1 = n2");

  CLI::App* gof = app.add_subcommand("gof", "chi-square goodness of fit");
  gof->add_option("--input", cfg.input_path, "CSV file with header x,y")->required();
  gof->add_flag("--freq", cfg.freq, "input rows are x,y,count aggregates");
  add_params(gof, false);
  auto* gof_nmin = gof->add_option("--n-min", cfg.n_min, "smallest profiled n");
  gof->add_option("--n-max", cfg.n_max, "largest profiled n");
  gof->add_flag("--equal-n", cfg.equal_n, "profile with n1 = n2");

  CLI::App* limit = app.add_subcommand("limit", "distance to the Poisson-conditionals limit");
  add_params(limit, true);
  auto* lim_nmin = limit->add_option("--n-min", cfg.n_min, "first rung of the n ladder");
  limit->add_option("--n-max", cfg.n_max, "last rung of the n ladder");

  std::vector<std::string> cli_args(args.rbegin(), args.rend());
  try {
    app.parse(cli_args);
  } catch (const CLI::CallForHelp& e) {
    std::ostringstream help;
    const int code = app.exit(e, help, help);
    out << help.str();
    return code;
  } catch (const CLI::ParseError& e) {
    return fail(out, "usage_error", e.what());
  }

  cfg.format = (format == "csv") ? Format::csv : Format::json;
  cfg.format_given = app.count("--output-format") > 0;
  if (seed_opt->count() > 0) cfg.seed = seed_value;
  CLI::App* active = app.get_subcommands().front();
  cfg.subcommand = active->get_name();
  cfg.have_n1 = (active == fit) ? fit_n1->count() > 0 : active->count("--n1") > 0;
  auto* nmin_opt = (active == fit) ? fit_nmin : (active == gof) ? gof_nmin : lim_nmin;
  cfg.have_n_range = (active == fit || active == gof || active == limit) &&
                     nmin_opt->count() > 0;
  if (cfg.have_n1 && cfg.have_n_range && (active == fit || active == gof)) {
    return fail(out, "usage_error", "give either fixed --n1 or a --n-min/--n-max range");
  }

  try {
    if (cfg.subcommand == "pmf") return run_pmf(cfg, out);
    if (cfg.subcommand == "table") return run_table(cfg, out);
    if (cfg.subcommand == "moments") return run_moments(cfg, out);
    if (cfg.subcommand == "sample") return run_sample(cfg, out, err);
    if (cfg.subcommand == "fit") return run_fit(cfg, out);
    if (cfg.subcommand == "gof") return run_gof(cfg, out);
    if (cfg.subcommand == "limit") return run_limit(cfg, out);
    return fail(out, "usage_error", "unknown subcommand " + cfg.subcommand);
  } catch (const std::domain_error& e) {
    return fail(out, "domain_error", e.what());
  } catch (const std::invalid_argument& e) {
    return fail(out, "parse_error", e.what());
  } catch (const std::length_error& e) {
    return fail(out, "capacity_error", e.what());
  } catch (const std::out_of_range& e) {
    return fail(out, "domain_error", e.what());
  } catch (const std::logic_error& e) {
    return fail(out, "internal_error", e.what());
  } catch (const std::exception& e) {
    return fail(out, "runtime_error", e.what());
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  args.reserve(argc > 0 ? argc - 1 : 0);
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace bbcd::cli
