#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "chebrisk/sdpsolver.hpp"
#include "chebrisk/sosapprox.hpp"

namespace chebrisk {

/// Environment variable that overrides the default cache directory.
inline constexpr const char* kCacheEnvVar = "CHEBRISK_CACHE";

/// Content key of a certificate: FNV-1a over the target endpoints' bit
/// patterns, the effective degree and the solver settings fingerprint.
std::string certificate_id(const IntervalSet& target, int degree, const SdpSettings& settings);

/// JSON document with every floating-point field written as a C99 hex float
/// so reloading is bit-exact.
std::string certificate_to_json(const IndicatorCertificate& cert, const SdpSettings& settings);

/// Throws kIo on malformed documents.
IndicatorCertificate certificate_from_json(const std::string& text, std::uint64_t* cfg_hash = nullptr);

/// One JSON file per certificate under a directory. Reads may run
/// concurrently; writes go to a temporary file that is renamed into place.
class CertificateCache {
 public:
  explicit CertificateCache(std::filesystem::path dir);

  /// $CHEBRISK_CACHE if set, else ./chebrisk_cache.
  static std::filesystem::path default_dir();

  const std::filesystem::path& dir() const noexcept { return dir_; }
  std::filesystem::path path_for(const IntervalSet& target, int degree, const SdpSettings& settings) const;

  std::optional<IndicatorCertificate> load(const IntervalSet& target, int degree,
                                           const SdpSettings& settings) const;

  /// Returns the file written.
  std::filesystem::path store(const IndicatorCertificate& cert, const SdpSettings& settings) const;

  /// Cached certificate, or a fresh solve when `solve_missing` is set.
  /// Throws kMissingCertificate when absent and not allowed to solve, and
  /// kSolverFailure when the solve does not reach optimality. Empty targets
  /// never touch the disk.
  IndicatorCertificate fetch_or_solve(const IntervalSet& target, int degree, const SdpSettings& settings,
                                      bool solve_missing, bool* solved = nullptr) const;

 private:
  std::filesystem::path dir_;
};

}  // namespace chebrisk
