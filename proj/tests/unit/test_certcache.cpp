#include <doctest.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "chebrisk/certcache.hpp"
#include "chebrisk/error.hpp"

using namespace chebrisk;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("chebrisk_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const IndicatorCertificate& sample_cert() {
  static const IndicatorCertificate c = approximate_indicator(IntervalSet::single(-0.4, 0.0).complement(), 24);
  return c;
}

}  // namespace

TEST_CASE("JSON round trip is bit exact") {
  const IndicatorCertificate& c = sample_cert();
  REQUIRE(c.solver_status == SdpStatus::kOptimal);
  const SdpSettings cfg;
  std::uint64_t h = 0;
  const IndicatorCertificate r = certificate_from_json(certificate_to_json(c, cfg), &h);
  CHECK(h == cfg.hash());
  CHECK(r.target == c.target);
  CHECK(r.degree == c.degree);
  REQUIRE(r.coeffs.coeffs().size() == c.coeffs.coeffs().size());
  for (std::size_t k = 0; k < c.coeffs.coeffs().size(); ++k) CHECK(bit_equal(r.coeffs[k], c.coeffs[k]));
  CHECK(bit_equal(r.objective_value, c.objective_value));
  CHECK(bit_equal(r.residuals.gap, c.residuals.gap));
  CHECK(bit_equal(r.residuals.min_eig, c.residuals.min_eig));
  CHECK(r.solver_status == c.solver_status);
  CHECK(r.iterations == c.iterations);
  REQUIRE(r.gram_blocks.size() == c.gram_blocks.size());
  for (std::size_t b = 0; b < c.gram_blocks.size(); ++b) CHECK(r.gram_blocks[b] == c.gram_blocks[b]);
}

TEST_CASE("malformed documents throw kIo") {
  for (const char* text : {"", "{", "[]", R"({"format":"other"})", R"({"format":"chebrisk-certificate/1"})"}) {
    try {
      certificate_from_json(text);
      FAIL("expected an error for: " << text);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kIo);
    }
  }
}

TEST_CASE("certificate ids") {
  const SdpSettings cfg;
  const IntervalSet a = IntervalSet::single(-0.4, 0.0);
  CHECK(certificate_id(a, 20, cfg) == certificate_id(IntervalSet::single(-0.4, -0.0), 20, cfg));
  CHECK(certificate_id(a, 20, cfg) == certificate_id(a, 19, cfg));  // same effective degree
  CHECK(certificate_id(a, 20, cfg) != certificate_id(a, 22, cfg));
  CHECK(certificate_id(a, 20, cfg) != certificate_id(a.complement(), 20, cfg));
  SdpSettings other;
  other.tol_gap = 1e-7;
  CHECK(certificate_id(a, 20, cfg) != certificate_id(a, 20, other));
  CHECK(certificate_id(a, 20, cfg).size() == 16);
}

TEST_CASE("store and load") {
  TempDir tmp;
  const CertificateCache cache(tmp.path);
  const SdpSettings cfg;
  const IndicatorCertificate& c = sample_cert();
  CHECK_FALSE(cache.load(c.target, c.degree, cfg).has_value());
  const fs::path written = cache.store(c, cfg);
  CHECK(written == cache.path_for(c.target, c.degree, cfg));
  CHECK(written.filename().string() == "cert-" + certificate_id(c.target, c.degree, cfg) + ".json");
  const auto loaded = cache.load(c.target, c.degree, cfg);
  REQUIRE(loaded.has_value());
  for (std::size_t k = 0; k < c.coeffs.coeffs().size(); ++k) CHECK(bit_equal(loaded->coeffs[k], c.coeffs[k]));

  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(tmp.path)) {
    ++files;
    CHECK(e.path().extension() == ".json");
  }
  CHECK(files == 1);
}

TEST_CASE("a document under the wrong key is rejected") {
  TempDir tmp;
  const CertificateCache cache(tmp.path);
  const SdpSettings cfg;
  const IndicatorCertificate& c = sample_cert();
  cache.store(c, cfg);
  const IntervalSet other = IntervalSet::single(-0.3, 0.0);
  fs::create_directories(tmp.path);
  fs::copy_file(cache.path_for(c.target, c.degree, cfg), cache.path_for(other, c.degree, cfg));
  try {
    cache.load(other, c.degree, cfg);
    FAIL("expected a key mismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kIo);
  }
}

TEST_CASE("fetch_or_solve") {
  TempDir tmp;
  const CertificateCache cache(tmp.path);
  const SdpSettings cfg;
  const IntervalSet k = IntervalSet::single(-0.4, 0.0);

  try {
    cache.fetch_or_solve(k, 12, cfg, false);
    FAIL("expected a missing certificate");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kMissingCertificate);
  }

  bool solved = false;
  const IndicatorCertificate first = cache.fetch_or_solve(k, 12, cfg, true, &solved);
  CHECK(solved);
  CHECK(fs::exists(cache.path_for(k, 12, cfg)));
  const IndicatorCertificate second = cache.fetch_or_solve(k, 12, cfg, false, &solved);
  CHECK_FALSE(solved);
  CHECK(second.coeffs.coeffs() == first.coeffs.coeffs());

  const IndicatorCertificate empty = cache.fetch_or_solve(IntervalSet(), 12, cfg, false, &solved);
  CHECK_FALSE(solved);
  CHECK(empty.objective_value == 0.0);
}

TEST_CASE("concurrent stores leave one complete document") {
  TempDir tmp;
  const CertificateCache cache(tmp.path);
  const SdpSettings cfg;
  const IndicatorCertificate& c = sample_cert();
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 10; ++i) cache.store(c, cfg);
    });
  }
  for (auto& t : threads) t.join();
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(tmp.path)) {
    (void)e;
    ++files;
  }
  CHECK(files == 1);
  CHECK_NOTHROW(certificate_from_json(slurp(cache.path_for(c.target, c.degree, cfg))));
}

TEST_CASE("cache directory override") {
  const char* old = std::getenv(kCacheEnvVar);
  const std::string saved = old ? old : "";
  ::setenv(kCacheEnvVar, "/tmp/somewhere_else", 1);
  CHECK(CertificateCache::default_dir() == fs::path("/tmp/somewhere_else"));
  ::unsetenv(kCacheEnvVar);
  CHECK(CertificateCache::default_dir() == fs::path("chebrisk_cache"));
  if (old) ::setenv(kCacheEnvVar, saved.c_str(), 1);
}
