#include "bbcd/sample.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bbcd/math.hpp"

namespace bbcd {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Xoshiro256pp::Xoshiro256pp(std::uint64_t seed) : seed_(seed) {
  std::uint64_t s = seed;
  for (auto& word : state_) word = splitmix64(s);
}

std::uint64_t Xoshiro256pp::next_u64() {
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double Xoshiro256pp::next_double() {
  return (next_u64() >> 11) * 0x1.0p-53;
}

Xoshiro256pp Xoshiro256pp::fork(std::uint64_t stream) const {
  std::uint64_t s = seed_ ^ (0xa3ec647659359acdULL + stream);
  return Xoshiro256pp(splitmix64(s));
}

namespace {

// CDF walk from k = 0, suitable when n * p is modest. Caller guarantees
// p <= 0.5 so the start term cannot underflow for the n routed here.
int binomial_inversion(Xoshiro256pp& rng, int n, double p) {
  const double u = rng.next_double();
  const double ratio = p / (1.0 - p);
  double mass = std::pow(1.0 - p, n);
  double cdf = mass;
  int k = 0;
  while (u >= cdf && k < n) {
    ++k;
    mass *= ratio * (n - k + 1) / k;
    cdf += mass;
  }
  return k;
}

// Transformed rejection with squeeze (Hormann's BTRS); requires p <= 0.5
// and n * p >= 10.
int binomial_btrs(Xoshiro256pp& rng, int n, double p) {
  const double q = 1.0 - p;
  const double spq = std::sqrt(n * p * q);
  const double b = 1.15 + 2.53 * spq;
  const double a = -0.0873 + 0.0248 * b + 0.01 * p;
  const double c = n * p + 0.5;
  const double vr = 0.92 - 4.2 / b;
  const double lr = std::log(p / q);
  const double alpha = (2.83 + 5.1 / b) * spq;
  const double m = std::floor((n + 1) * p);
  const double h = log_factorial(static_cast<int>(m)) +
                   log_factorial(n - static_cast<int>(m));
  while (true) {
    const double u = rng.next_double() - 0.5;
    double v = rng.next_double();
    const double us = 0.5 - std::fabs(u);
    const double kf = std::floor((2.0 * a / us + b) * u + c);
    if (kf < 0.0 || kf > n) continue;
    const int k = static_cast<int>(kf);
    if (us >= 0.07 && v <= vr) return k;
    v = std::log(v * alpha / (a / (us * us) + b));
    const double bound =
        h - log_factorial(k) - log_factorial(n - k) + (kf - m) * lr;
    if (v <= bound) return k;
  }
}

int binomial_core(Xoshiro256pp& rng, int n, double p) {
  if (p <= 0.5) {
    if (n <= 64 || n * p < 10.0) return binomial_inversion(rng, n, p);
    return binomial_btrs(rng, n, p);
  }
  const double pc = 1.0 - p;
  if (n <= 64 || n * pc < 10.0) return n - binomial_inversion(rng, n, pc);
  return n - binomial_btrs(rng, n, pc);
}

}  // namespace

int binomial_draw(Xoshiro256pp& rng, int n, double p) {
  if (n < 0 || !(p >= 0.0 && p <= 1.0)) {
    throw std::domain_error("binomial_draw: require n >= 0 and p in [0,1]");
  }
  if (n == 0 || p == 0.0) return 0;
  if (p == 1.0) return n;
  return binomial_core(rng, n, p);
}

void GibbsConfig::validate(const Params& params) const {
  params.validate();
  if (n_samples < 1) throw std::domain_error("GibbsConfig: n_samples must be >= 1");
  if (thin < 1) throw std::domain_error("GibbsConfig: thin must be >= 1");
  if (init.first < 0 || init.first > params.n1 || init.second < 0 ||
      init.second > params.n2) {
    throw std::domain_error("GibbsConfig: initial state outside the support");
  }
}

SamplePairs gibbs_sample(const Params& params, const GibbsConfig& config) {
  config.validate(params);
  Xoshiro256pp rng(config.seed);
  const double log_q1 = std::log(params.q1());
  const double log_q2 = std::log(params.q2());
  const double log_t = std::log(params.t);

  SamplePairs out;
  out.params_used = params;
  out.config_used = config;
  out.pairs.reserve(config.n_samples);

  int x = config.init.first;
  int y = config.init.second;
  const std::size_t total_sweeps = config.burn_in + config.n_samples * config.thin;
  for (std::size_t sweep = 1; sweep <= total_sweeps; ++sweep) {
    y = binomial_draw(rng, params.n2, sigmoid(log_q2 + x * log_t));
    x = binomial_draw(rng, params.n1, sigmoid(log_q1 + y * log_t));
    if (sweep > config.burn_in && (sweep - config.burn_in) % config.thin == 0) {
      out.pairs.emplace_back(x, y);
    }
  }
  return out;
}

SamplePairs exact_sample(const Params& params, std::size_t n_samples,
                         std::uint64_t seed, std::size_t cell_cap) {
  if (n_samples < 1) throw std::domain_error("exact_sample: n_samples must be >= 1");
  const JointTable table = build_table(params, cell_cap);
  std::vector<double> cdf(table.probs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < table.probs.size(); ++i) {
    acc += table.probs[i];
    cdf[i] = acc;
  }
  cdf.back() = 1.0;  // guard against the trailing rounding gap

  Xoshiro256pp rng(seed);
  SamplePairs out;
  out.params_used = params;
  out.config_used = GibbsConfig{n_samples, 0, 1, seed, {0, 0}};
  out.pairs.reserve(n_samples);
  const int cols = table.cols();
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double u = rng.next_double();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const std::size_t flat = std::min<std::size_t>(it - cdf.begin(), cdf.size() - 1);
    out.pairs.emplace_back(static_cast<int>(flat / cols), static_cast<int>(flat % cols));
  }
  return out;
}

std::vector<double> empirical_table(const SamplePairs& sample) {
  const Params& p = sample.params_used;
  std::vector<double> freq(static_cast<std::size_t>(p.n1 + 1) * (p.n2 + 1), 0.0);
  if (sample.pairs.empty()) return freq;
  const double w = 1.0 / sample.pairs.size();
  for (const auto& [x, y] : sample.pairs) {
    freq[static_cast<std::size_t>(x) * (p.n2 + 1) + y] += w;
  }
  return freq;
}

}  // namespace bbcd
