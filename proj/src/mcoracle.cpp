#include "chebrisk/mcoracle.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <cstdio>
#include <thread>
#include <type_traits>
#include <vector>

#include "chebrisk/error.hpp"

namespace chebrisk {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

double unit(Rng& rng) { return std::generate_canonical<double, 53>(rng); }

}  // namespace

std::uint64_t chunk_seed(std::uint64_t seed, std::uint64_t chunk) {
  return splitmix64(splitmix64(seed) ^ (chunk + 0x632be59bd9b4e019ull));
}

double sample(const Marginal& dist, Rng& rng) {
  return std::visit(
      [&rng](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Uniform>) {
          return d.a + (d.b - d.a) * unit(rng);
        } else if constexpr (std::is_same_v<T, Beta>) {
          std::gamma_distribution<double> ga(d.alpha, 1.0);
          std::gamma_distribution<double> gb(d.beta, 1.0);
          const double x = ga(rng);
          const double y = gb(rng);
          return d.a + (d.b - d.a) * (x / (x + y));
        } else if constexpr (std::is_same_v<T, PointMass>) {
          return d.v;
        } else {
          throw Error(ErrorKind::kValidation, "cannot sample a marginal given only by moments");
        }
      },
      dist);
}

McEstimate wilson(std::int64_t hits, std::int64_t n, double ci_level) {
  if (n < 1) throw Error(ErrorKind::kValidation, "sample count must be at least 1");
  if (!(ci_level > 0.0 && ci_level < 1.0)) throw Error(ErrorKind::kValidation, "ci_level must lie in (0,1)");
  McEstimate e;
  e.hits = hits;
  e.n = n;
  e.ci_level = ci_level;
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(hits) / nn;
  e.estimate = p;
  e.sigma = std::sqrt(p * (1.0 - p) / nn);
  const double zq = boost::math::quantile(boost::math::normal(), 0.5 + 0.5 * ci_level);
  const double z2 = zq * zq;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = zq * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  e.ci_lo = std::max(0.0, center - half);
  e.ci_hi = std::min(1.0, center + half);
  e.ci_halfwidth = half;
  return e;
}

McEstimate mc_risk(const RiskProblem& problem, const SampleConfig& cfg) {
  problem.validate();
  if (cfg.n < 1) throw Error(ErrorKind::kValidation, "sample count must be at least 1");
  for (const auto& m : problem.margins) {
    if (std::holds_alternative<MomentTable>(m)) {
      throw Error(ErrorKind::kValidation, "cannot sample a marginal given only by moments");
    }
  }
  const std::int64_t chunks = (cfg.n + kMcChunk - 1) / kMcChunk;
  unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::int64_t>(threads, chunks));

  std::vector<std::int64_t> hits(static_cast<std::size_t>(chunks), 0);
  std::atomic<std::int64_t> next{0};
  auto worker = [&] {
    std::vector<double> point(problem.margins.size());
    for (std::int64_t c = next++; c < chunks; c = next++) {
      Rng rng(chunk_seed(cfg.seed, static_cast<std::uint64_t>(c)));
      const std::int64_t count = std::min(kMcChunk, cfg.n - c * kMcChunk);
      std::int64_t h = 0;
      for (std::int64_t s = 0; s < count; ++s) {
        for (std::size_t v = 0; v < point.size(); ++v) point[v] = sample(problem.margins[v], rng);
        bool inside = true;
        for (const auto& con : problem.constraints) {
          const double z = con.poly.evaluate(point);
          if (!(con.lower <= z && z <= con.upper)) {
            inside = false;
            break;
          }
        }
        h += inside ? 1 : 0;
      }
      hits[static_cast<std::size_t>(c)] = h;
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  std::int64_t total = 0;
  for (auto h : hits) total += h;
  return wilson(total, cfg.n, cfg.ci_level);
}

std::string mc_csv_row(const std::string& problem_name, const SampleConfig& cfg, const McEstimate& est) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%lld,%llu,%.6f,%.6f\n", problem_name.c_str(), static_cast<long long>(cfg.n),
                static_cast<unsigned long long>(cfg.seed), est.estimate, est.ci_halfwidth);
  return buf;
}

}  // namespace chebrisk
