#pragma once

#include <filesystem>
#include <string>

#include "chebrisk/riskbounds.hpp"

namespace chebrisk {

/// JSON problem description:
///
///   {
///     "name": "illustrative",
///     "variables": [
///       {"name": "x", "dist": {"type": "uniform", "a": -0.5, "b": 0.5}},
///       {"name": "q", "dist": {"type": "beta", "alpha": 2, "beta": 3, "a": 0, "b": 1}}
///     ],
///     "constraints": [
///       {"poly": [{"coeff": 0.5, "exponents": {"x": 1}},
///                 {"coeff": -0.5, "exponents": {"q": 1}}],
///        "l": -0.4, "u": 0.0}
///     ],
///     "degree": 66,
///     "notes": "free text"
///   }
///
/// Distribution types: uniform {a, b}, beta {alpha, beta, a = 0, b = 1},
/// point {v}, moments {values}. A term with no exponents is a constant.
struct ProblemFile {
  RiskProblem problem;
  std::string notes;
};

/// Throws kValidation with a path-like location on any schema error.
ProblemFile parse_problem(const std::string& json_text);
ProblemFile load_problem(const std::filesystem::path& path);
std::string serialize_problem(const ProblemFile& file);

}  // namespace chebrisk
