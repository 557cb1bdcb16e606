#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "chebrisk/distmoments.hpp"
#include "chebrisk/riskbounds.hpp"

namespace chebrisk {

inline constexpr std::uint64_t kDefaultSeed = 20240611;

struct SampleConfig {
  std::int64_t n = 1'000'000;
  std::uint64_t seed = kDefaultSeed;
  double ci_level = 0.99;
  /// 0 picks std::thread::hardware_concurrency(). The estimate does not
  /// depend on this value.
  unsigned threads = 0;
};

using Rng = std::mt19937_64;

/// One draw. Uniform uses the inverse CDF, Beta the ratio of two gamma
/// variates, a point mass returns its value. Moment tables have no law to
/// sample from and throw kValidation.
double sample(const Marginal& dist, Rng& rng);

struct McEstimate {
  double estimate = 0.0;
  double ci_halfwidth = 0.0;  // Wilson interval at ci_level
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::int64_t hits = 0;
  std::int64_t n = 0;
  double ci_level = 0.99;
  /// Binomial standard error sqrt(p(1-p)/n).
  double sigma = 0.0;
};

/// Wilson score interval for `hits` successes in `n` trials.
McEstimate wilson(std::int64_t hits, std::int64_t n, double ci_level);

/// Fraction of draws for which every unscaled constraint holds (closed
/// intervals). Samples are drawn in fixed-size chunks with seeds derived
/// from (seed, chunk index), so the result is independent of the thread count.
McEstimate mc_risk(const RiskProblem& problem, const SampleConfig& cfg = {});

/// Seed of chunk `chunk` (splitmix64 of the pair).
std::uint64_t chunk_seed(std::uint64_t seed, std::uint64_t chunk);

inline constexpr std::int64_t kMcChunk = 65536;

/// `problem,n,seed,estimate,ci` with a trailing newline.
std::string mc_csv_row(const std::string& problem_name, const SampleConfig& cfg, const McEstimate& est);
inline constexpr const char* kMcCsvHeader = "problem,n,seed,estimate,ci\n";

}  // namespace chebrisk
