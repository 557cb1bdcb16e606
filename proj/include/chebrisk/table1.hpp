#pragma once

#include <array>
#include <string>
#include <vector>

#include "chebrisk/riskbounds.hpp"

namespace chebrisk {

/// Published bounds for the ball-and-hole problem, by degree.
struct Table1Reference {
  int degree;
  double p_u;
  double p_l;
};

inline constexpr std::array<Table1Reference, 6> kTable1Reference{{
    {20, 0.92, 0.401},
    {30, 0.879, 0.485},
    {40, 0.859, 0.511},
    {50, 0.822, 0.562},
    {60, 0.804, 0.586},
    {66, 0.798, 0.591},
}};

struct Table1Row {
  Table1Reference ref;
  RiskBounds bounds;
  double seconds = 0.0;
};

/// The ball-and-hole problem: x ~ U[-0.5,0.5], q ~ Beta(3-sqrt2, 3+sqrt2),
/// -0.4 <= 0.5 (x - q) <= 0.
RiskProblem illustrative_problem();

/// Runs `problem` at each reference degree, solving missing certificates.
std::vector<Table1Row> run_table1(const RiskProblem& problem, const CertificateCache& cache,
                                  const EstimateConfig& cfg = {});

inline constexpr const char* kTable1CsvHeader = "d,p_u,p_l,ref_p_u,ref_p_l,delta_p_u,delta_p_l,seconds\n";
std::string table1_csv_row(const Table1Row& row);

}  // namespace chebrisk
