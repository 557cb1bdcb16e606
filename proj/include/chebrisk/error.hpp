#pragma once

#include <stdexcept>
#include <string>

namespace chebrisk {

enum class ErrorKind {
  kValidation,
  kDegreeCap,
  kSizeCap,
  kInsufficientMoments,
  kMomentInstability,
  kEmptyUnsafeSet,
  kSolverFailure,
  kMissingCertificate,
  kIo,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when a marginal cannot supply a moment of the requested order.
class InsufficientMoments : public Error {
 public:
  explicit InsufficientMoments(int needed_order)
      : Error(ErrorKind::kInsufficientMoments,
              "insufficient moments: order " + std::to_string(needed_order) + " required"),
        needed_order_(needed_order) {}
  int needed_order() const noexcept { return needed_order_; }

 private:
  int needed_order_;
};

/// Chebyshev moments leave [-1,1] beyond `usable_degree`.
class MomentInstability : public Error {
 public:
  explicit MomentInstability(int usable_degree)
      : Error(ErrorKind::kMomentInstability,
              "moments unstable beyond degree " + std::to_string(usable_degree)),
        usable_degree_(usable_degree) {}
  int usable_degree() const noexcept { return usable_degree_; }

 private:
  int usable_degree_;
};

}  // namespace chebrisk
