#include "chebrisk/certcache.hpp"

#include <atomic>
#include <bit>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <thread>
#include <unistd.h>

#include "chebrisk/error.hpp"

namespace chebrisk {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "chebrisk-certificate/1";

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double unhex(const json& j) {
  if (!j.is_string()) throw Error(ErrorKind::kIo, "certificate field is not a hex-float string");
  const std::string s = j.get<std::string>();
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw Error(ErrorKind::kIo, "bad hex float '" + s + "'");
  return v;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

SdpStatus status_from_string(const std::string& s) {
  for (auto st : {SdpStatus::kOptimal, SdpStatus::kMaxIter, SdpStatus::kInfeasible, SdpStatus::kNumerical}) {
    if (to_string(st) == s) return st;
  }
  throw Error(ErrorKind::kIo, "unknown solver status '" + s + "'");
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string certificate_id(const IntervalSet& target, int degree, const SdpSettings& settings) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  mix(target.intervals().size());
  for (const auto& iv : target.intervals()) {
    // +0.0 and -0.0 name the same endpoint
    mix(std::bit_cast<std::uint64_t>(iv.lo + 0.0));
    mix(std::bit_cast<std::uint64_t>(iv.hi + 0.0));
  }
  mix(static_cast<std::uint64_t>(effective_degree(degree)));
  mix(settings.hash());
  return hex64(h);
}

std::string certificate_to_json(const IndicatorCertificate& cert, const SdpSettings& settings) {
  json doc;
  doc["format"] = kFormat;
  doc["id"] = certificate_id(cert.target, cert.degree, settings);
  json target = json::array();
  json readable = json::array();
  for (const auto& iv : cert.target.intervals()) {
    target.push_back({hex(iv.lo), hex(iv.hi)});
    readable.push_back({iv.lo, iv.hi});
  }
  doc["target"] = target;
  doc["target_decimal"] = readable;
  doc["degree"] = cert.degree;
  doc["degree_rounded"] = cert.degree_rounded;
  json coeffs = json::array();
  for (double c : cert.coeffs.coeffs()) coeffs.push_back(hex(c));
  doc["coeffs"] = coeffs;
  doc["objective"] = hex(cert.objective_value);
  doc["residuals"] = {{"primal", hex(cert.residuals.primal)},
                      {"dual", hex(cert.residuals.dual)},
                      {"gap", hex(cert.residuals.gap)},
                      {"min_eig", hex(cert.residuals.min_eig)},
                      {"grid_violation", hex(cert.residuals.grid_violation)}};
  doc["status"] = std::string(to_string(cert.solver_status));
  doc["iterations"] = cert.iterations;
  doc["solve_seconds"] = cert.solve_seconds;
  doc["solver_cfg_hash"] = hex64(settings.hash());
  doc["created_at"] = utc_now();
  json grams = json::array();
  for (const auto& q : cert.gram_blocks) {
    json upper = json::array();
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
      for (Eigen::Index i = 0; i <= j; ++i) upper.push_back(hex(q(i, j)));
    }
    grams.push_back({{"n", q.rows()}, {"upper", upper}});
  }
  doc["gram_blocks"] = grams;
  return doc.dump(1);
}

IndicatorCertificate certificate_from_json(const std::string& text, std::uint64_t* cfg_hash) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kIo, std::string("certificate is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format") != kFormat) throw Error(ErrorKind::kIo, "unsupported certificate format");
    IndicatorCertificate cert;
    std::vector<Interval> ivs;
    for (const auto& iv : doc.at("target")) ivs.push_back({unhex(iv.at(0)), unhex(iv.at(1))});
    try {
      cert.target = IntervalSet(std::move(ivs));
    } catch (const Error& e) {
      throw Error(ErrorKind::kIo, std::string("certificate target: ") + e.what());
    }
    cert.degree = doc.at("degree").get<int>();
    cert.degree_rounded = doc.value("degree_rounded", false);
    std::vector<double> coeffs;
    for (const auto& c : doc.at("coeffs")) coeffs.push_back(unhex(c));
    if (static_cast<int>(coeffs.size()) != cert.degree + 1) {
      throw Error(ErrorKind::kIo, "certificate has " + std::to_string(coeffs.size()) +
                                      " coefficients for degree " + std::to_string(cert.degree));
    }
    cert.coeffs = ChebSeries(std::move(coeffs));
    cert.objective_value = unhex(doc.at("objective"));
    const auto& r = doc.at("residuals");
    cert.residuals = {unhex(r.at("primal")), unhex(r.at("dual")), unhex(r.at("gap")), unhex(r.at("min_eig")),
                      unhex(r.at("grid_violation"))};
    cert.solver_status = status_from_string(doc.at("status").get<std::string>());
    cert.iterations = doc.value("iterations", 0);
    cert.solve_seconds = doc.value("solve_seconds", 0.0);
    if (doc.contains("gram_blocks")) {
      for (const auto& g : doc.at("gram_blocks")) {
        const int n = g.at("n").get<int>();
        const auto& upper = g.at("upper");
        if (n < 0 || upper.size() != static_cast<std::size_t>(n) * (n + 1) / 2) {
          throw Error(ErrorKind::kIo, "gram block size mismatch");
        }
        Eigen::MatrixXd q(n, n);
        std::size_t pos = 0;
        for (int j = 0; j < n; ++j) {
          for (int i = 0; i <= j; ++i) q(i, j) = q(j, i) = unhex(upper[pos++]);
        }
        cert.gram_blocks.push_back(std::move(q));
      }
    }
    if (cfg_hash) *cfg_hash = std::stoull(doc.at("solver_cfg_hash").get<std::string>(), nullptr, 16);
    return cert;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kIo, std::string("malformed certificate: ") + e.what());
  }
}

CertificateCache::CertificateCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::filesystem::path CertificateCache::default_dir() {
  if (const char* env = std::getenv(kCacheEnvVar); env && *env) return env;
  return "chebrisk_cache";
}

std::filesystem::path CertificateCache::path_for(const IntervalSet& target, int degree,
                                                 const SdpSettings& settings) const {
  return dir_ / ("cert-" + certificate_id(target, degree, settings) + ".json");
}

std::optional<IndicatorCertificate> CertificateCache::load(const IntervalSet& target, int degree,
                                                           const SdpSettings& settings) const {
  const auto path = path_for(target, degree, settings);
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  std::uint64_t cfg = 0;
  IndicatorCertificate cert = certificate_from_json(buf.str(), &cfg);
  // A hash collision or a hand-edited file must not be used silently.
  if (!(cert.target == target) || cert.degree != effective_degree(degree) || cfg != settings.hash()) {
    throw Error(ErrorKind::kIo, "cache entry " + path.string() + " does not match its key");
  }
  return cert;
}

std::filesystem::path CertificateCache::store(const IndicatorCertificate& cert, const SdpSettings& settings) const {
  static std::atomic<unsigned> counter{0};
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create cache directory " + dir_.string() + ": " + ec.message());
  const auto path = path_for(cert.target, cert.degree, settings);
  std::ostringstream tmp_name;
  tmp_name << path.filename().string() << ".tmp." << ::getpid() << "."
           << std::hash<std::thread::id>{}(std::this_thread::get_id()) << "." << counter++;
  const auto tmp = dir_ / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << certificate_to_json(cert, settings);
    if (!out.flush()) throw Error(ErrorKind::kIo, "cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error(ErrorKind::kIo, "cannot move certificate into place: " + ec.message());
  }
  return path;
}

IndicatorCertificate CertificateCache::fetch_or_solve(const IntervalSet& target, int degree,
                                                      const SdpSettings& settings, bool solve_missing,
                                                      bool* solved) const {
  if (solved) *solved = false;
  if (target.empty()) return approximate_indicator(target, degree, settings);
  if (auto cert = load(target, degree, settings)) return *std::move(cert);
  if (!solve_missing) {
    throw Error(ErrorKind::kMissingCertificate,
                "no cached certificate for target " + target.to_string() + " at degree " +
                    std::to_string(effective_degree(degree)) + " (expected " +
                    path_for(target, degree, settings).string() + ")");
  }
  IndicatorCertificate cert = approximate_indicator(target, degree, settings);
  if (solved) *solved = true;
  if (cert.solver_status != SdpStatus::kOptimal) {
    std::ostringstream os;
    os << "solver " << to_string(cert.solver_status) << " for target " << target.to_string() << " at degree "
       << cert.degree << " (primal " << cert.residuals.primal << ", dual " << cert.residuals.dual << ", gap "
       << cert.residuals.gap << ")";
    throw Error(ErrorKind::kSolverFailure, os.str());
  }
  store(cert, settings);
  return cert;
}

}  // namespace chebrisk
