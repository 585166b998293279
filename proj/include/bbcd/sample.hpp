#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bbcd/core.hpp"
#include "bbcd/params.hpp"

namespace bbcd {

/// xoshiro256++ stream seeded through splitmix64. Fully specified output,
/// so identical seeds give identical draws on every platform.
class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double();

  /// Decorrelated child stream; deterministic in (parent seed, stream index).
  Xoshiro256pp fork(std::uint64_t stream) const;

  static constexpr const char* kAlgorithmId = "xoshiro256++";

 private:
  std::array<std::uint64_t, 4> state_{};
  std::uint64_t seed_ = 0;
};

/// Binomial(n, p) variate: CDF inversion for small n or small mean,
/// transformed rejection with squeeze for the rest.
int binomial_draw(Xoshiro256pp& rng, int n, double p);

struct GibbsConfig {
  std::size_t n_samples = 0;
  std::size_t burn_in = 500;
  std::size_t thin = 1;
  std::uint64_t seed = 0;
  std::pair<int, int> init{0, 0};

  void validate(const Params& params) const;
};

struct SamplePairs {
  std::vector<std::pair<int, int>> pairs;
  Params params_used;
  GibbsConfig config_used;
  std::string rng_algorithm = Xoshiro256pp::kAlgorithmId;
};

/// Alternating conditional draws: each sweep updates Y | X = x then X | Y = y
/// from their binomial conditionals. Drops burn_in sweeps, keeps every
/// thin-th sweep until n_samples pairs are collected.
SamplePairs gibbs_sample(const Params& params, const GibbsConfig& config);

/// i.i.d. draws by inverse-CDF lookup on the flattened exact table.
SamplePairs exact_sample(const Params& params, std::size_t n_samples,
                         std::uint64_t seed,
                         std::size_t cell_cap = kDefaultTableCellCap);

/// Relative cell frequencies of the draws on the (n1+1) x (n2+1) grid,
/// row-major, comparable entrywise with JointTable::probs.
std::vector<double> empirical_table(const SamplePairs& sample);

}  // namespace bbcd
