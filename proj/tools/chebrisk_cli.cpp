// chebrisk: indicator certificates, risk bounds and Monte Carlo checks.
//
// Exit codes: 0 success, 1 I/O error, 2 validation error (bad arguments,
// problem file or missing certificate), 3 solver failure, 4 moment
// instability.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "chebrisk/certcache.hpp"
#include "chebrisk/error.hpp"
#include "chebrisk/mcoracle.hpp"
#include "chebrisk/problemfile.hpp"
#include "chebrisk/riskbounds.hpp"
#include "chebrisk/sosapprox.hpp"
#include "chebrisk/table1.hpp"

namespace {

using namespace chebrisk;

constexpr int kExitIo = 1;
constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;
constexpr int kExitMoments = 4;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kSolverFailure: return kExitSolver;
    case ErrorKind::kMomentInstability: return kExitMoments;
    case ErrorKind::kIo: return kExitIo;
    default: return kExitValidation;
  }
}

// Appends to `path` (header first when the file is new), or prints to stdout.
void emit_csv(const std::string& path, const char* header, const std::string& row) {
  if (path.empty()) {
    std::cout << header << row;
    return;
  }
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error(ErrorKind::kIo, "cannot open " + path);
  if (fresh) out << header;
  out << row;
}

CertificateCache open_cache(const std::string& dir) {
  return CertificateCache(dir.empty() ? CertificateCache::default_dir() : std::filesystem::path(dir));
}

IntervalSet parse_target(const std::vector<double>& lu, bool complement) {
  if (lu.size() != 2) throw Error(ErrorKind::kValidation, "--target expects l,u");
  if (!(lu[0] >= -1.0 && lu[0] <= lu[1] && lu[1] <= 1.0)) {
    throw Error(ErrorKind::kValidation, "--target requires -1 <= l <= u <= 1");
  }
  const IntervalSet k = IntervalSet::single(lu[0], lu[1]);
  return complement ? k.complement() : k;
}

struct ApproximateArgs {
  std::vector<double> target;
  bool complement = false;
  int degree = 20;
  std::string cache;
  int grid = 10000;
  std::string dump_sdp;
  int max_iter = SdpSettings{}.max_iter;
  bool verbose = false;
};

int cmd_approximate(const ApproximateArgs& a) {
  const IntervalSet target = parse_target(a.target, a.complement);
  if (a.grid < 1000) throw Error(ErrorKind::kValidation, "--grid must be at least 1000");
  SdpSettings settings;
  settings.verbose = a.verbose;
  settings.max_iter = a.max_iter;
  if (!a.dump_sdp.empty() && !target.empty()) {
    std::ofstream out(a.dump_sdp);
    if (!out) throw Error(ErrorKind::kIo, "cannot open " + a.dump_sdp);
    write_triplets(build_sdp(target, a.degree).sdp, out);
  }
  const IndicatorCertificate cert = approximate_indicator(target, a.degree, settings);
  const CertificateAudit audit = validate_certificate(cert, a.grid);
  std::printf("target          %s\n", target.to_string().c_str());
  std::printf("degree          %d%s\n", cert.degree, cert.degree_rounded ? " (rounded up to even)" : "");
  std::printf("status          %s (%d iterations)\n", std::string(to_string(cert.solver_status)).c_str(),
              cert.iterations);
  std::printf("objective       %.12f\n", cert.objective_value);
  std::printf("residuals       primal %.3e  dual %.3e  gap %.3e\n", cert.residuals.primal, cert.residuals.dual,
              cert.residuals.gap);
  std::printf("audit           min p %.3e  min p-1 on target %.3e  gram floor %.3e  recon %.3e  -> %s\n",
              audit.min_box, audit.min_target, audit.min_gram_eig, audit.recon_residual,
              audit.passed ? "pass" : ("FAIL: " + audit.failure).c_str());
  std::printf("wall time       %.3f s\n", cert.solve_seconds);
  if (cert.solver_status != SdpStatus::kOptimal || !audit.passed) {
    std::fprintf(stderr, "error: certificate rejected; cache left unchanged\n");
    return kExitSolver;
  }
  if (!target.empty()) {
    const CertificateCache cache = open_cache(a.cache);
    std::printf("cache           %s\n", cache.store(cert, settings).string().c_str());
  }
  return 0;
}

struct EvalArgs {
  std::string problem;
  std::string cache;
  std::string degree;
  bool solve_missing = false;
  std::string csv;
};

int cmd_eval(const EvalArgs& a) {
  const ProblemFile pf = load_problem(a.problem);
  const CertificateCache cache = open_cache(a.cache);
  EstimateConfig cfg;
  cfg.solve_missing = a.solve_missing;
  RiskBounds rb;
  if (a.degree == "auto") {
    rb = estimate_auto(pf.problem, cache, cfg);
  } else {
    if (!a.degree.empty()) {
      try {
        std::size_t used = 0;
        cfg.degree_override = std::stoi(a.degree, &used);
        if (used != a.degree.size() || cfg.degree_override < 1) throw std::invalid_argument("degree");
      } catch (const std::exception&) {
        throw Error(ErrorKind::kValidation, "--degree expects a positive integer or 'auto'");
      }
    }
    rb = estimate(pf.problem, cache, cfg);
  }
  std::printf("problem         %s\n", pf.problem.name.c_str());
  if (rb.empty_set) {
    std::printf("note            a constraint cannot hold on the support box; probability is 0\n");
  }
  std::printf("p_l             %.6f%s\n", rb.p_l(),
              rb.upper_only ? " (upper bound only for several constraints)"
                            : (rb.lower.clamped ? " (clamped)" : ""));
  std::printf("p_u             %.6f%s\n", rb.p_u(), rb.upper.clamped ? " (clamped)" : "");
  std::printf("raw             p_l %.9f  p_u %.9f\n", rb.lower.raw, rb.upper.raw);
  std::printf("d_used          %d (requested %d)\n", rb.degree_used, rb.degree_requested);
  std::printf("validity_degree %d\n", rb.validity_degree);
  for (std::size_t j = 0; j < rb.scaled.size(); ++j) {
    std::printf("scale[%zu]        %.6g (%s bound)\n", j, rb.scaled[j].scale,
                std::string(to_string(rb.scaled[j].bound.method)).c_str());
  }
  std::printf("certificates    ");
  for (const auto& id : rb.certificate_ids) std::printf("%s ", id.c_str());
  std::printf("(%d solved now)\n", rb.certificates_solved);
  std::printf("offline_s       %.4f\n", rb.offline_s);
  std::printf("moments_s       %.4f\n", rb.moments_s);
  std::printf("online_s        %.6f\n", rb.online_s);
  char row[512];
  std::snprintf(row, sizeof row, "%s,%d,%d,%d,%.9f,%.9f,%.9f,%.9f,%d,%.6f,%.6f,%.6f\n", pf.problem.name.c_str(),
                rb.degree_requested, rb.degree_used, rb.validity_degree, rb.p_l(), rb.p_u(), rb.lower.raw,
                rb.upper.raw, rb.upper_only ? 1 : 0, rb.offline_s, rb.moments_s, rb.online_s);
  emit_csv(a.csv,
           "problem,d_requested,d_used,validity_degree,p_l,p_u,p_l_raw,p_u_raw,upper_only,offline_s,moments_s,online_s\n",
           row);
  return 0;
}

struct McArgs {
  std::string problem;
  std::int64_t samples = 1'000'000;
  std::uint64_t seed = kDefaultSeed;
  unsigned threads = 0;
  double ci_level = 0.99;
  std::string csv;
};

int cmd_mc(const McArgs& a) {
  const ProblemFile pf = load_problem(a.problem);
  SampleConfig cfg;
  cfg.n = a.samples;
  cfg.seed = a.seed;
  cfg.threads = a.threads;
  cfg.ci_level = a.ci_level;
  const McEstimate est = mc_risk(pf.problem, cfg);
  std::printf("problem         %s\n", pf.problem.name.c_str());
  std::printf("estimate        %.6f  (%lld / %lld)\n", est.estimate, static_cast<long long>(est.hits),
              static_cast<long long>(est.n));
  std::printf("wilson %.0f%%      [%.6f, %.6f]  half-width %.6f\n", 100.0 * est.ci_level, est.ci_lo, est.ci_hi,
              est.ci_halfwidth);
  emit_csv(a.csv, kMcCsvHeader, mc_csv_row(pf.problem.name, cfg, est));
  return 0;
}

int cmd_table1(const std::string& out_path, const std::string& cache_dir) {
  const CertificateCache cache = open_cache(cache_dir);
  const auto rows = run_table1(illustrative_problem(), cache);
  std::string body = kTable1CsvHeader;
  for (const auto& r : rows) body += table1_csv_row(r);
  if (out_path.empty()) {
    std::cout << body;
  } else {
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot open " + out_path);
    out << body;
    std::cout << body;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Polynomial chance-constraint risk bounds from Chebyshev moments"};
  app.require_subcommand(1);

  ApproximateArgs approx;
  auto* sa = app.add_subcommand("approximate", "Solve and cache an indicator certificate");
  sa->add_option("--target", approx.target, "Interval l,u inside [-1,1]")->required()->delimiter(',');
  sa->add_flag("--complement", approx.complement, "Approximate the complement of the interval");
  sa->add_option("--degree", approx.degree, "Polynomial degree (odd values are rounded up)");
  sa->add_option("--cache", approx.cache, "Certificate cache directory");
  sa->add_option("--grid", approx.grid, "Audit grid size");
  sa->add_option("--dump-sdp", approx.dump_sdp, "Write the SDP as sparse triplets");
  sa->add_option("--max-iter", approx.max_iter, "Interior-point iteration limit")->check(CLI::PositiveNumber);
  sa->add_flag("--verbose", approx.verbose, "Print solver iterations");

  EvalArgs eval;
  auto* se = app.add_subcommand("eval", "Risk bounds for a problem file");
  se->add_option("--problem", eval.problem, "Problem JSON file")->required();
  se->add_option("--cache", eval.cache, "Certificate cache directory");
  se->add_option("--degree", eval.degree, "Degree override, or 'auto'");
  se->add_flag("--solve-missing", eval.solve_missing, "Solve certificates that are not cached");
  se->add_option("--csv", eval.csv, "Append the result row to this CSV file");

  McArgs mc;
  auto* sm = app.add_subcommand("mc", "Monte Carlo estimate for a problem file");
  sm->add_option("--problem", mc.problem, "Problem JSON file")->required();
  sm->add_option("--samples", mc.samples, "Number of samples")->check(CLI::PositiveNumber);
  sm->add_option("--seed", mc.seed, "Random seed");
  sm->add_option("--threads", mc.threads, "Worker threads (0 = all cores)");
  sm->add_option("--ci-level", mc.ci_level, "Confidence level of the Wilson interval")->check(CLI::Range(0.5, 0.999999));
  sm->add_option("--csv", mc.csv, "Append the result row to this CSV file");

  std::string table_out;
  std::string table_cache;
  auto* st = app.add_subcommand("table1", "Bounds of the ball-and-hole problem across degrees");
  st->add_option("--out", table_out, "CSV output file");
  st->add_option("--cache", table_cache, "Certificate cache directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }

  try {
    if (*sa) return cmd_approximate(approx);
    if (*se) return cmd_eval(eval);
    if (*sm) return cmd_mc(mc);
    if (*st) return cmd_table1(table_out, table_cache);
  } catch (const MomentInstability& e) {
    std::fprintf(stderr, "error: %s; usable degree %d\n", e.what(), e.usable_degree());
    return kExitMoments;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  }
  return 0;
}
