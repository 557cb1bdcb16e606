#include "chebrisk/table1.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

namespace chebrisk {

RiskProblem illustrative_problem() {
  RiskProblem p;
  p.name = "illustrative";
  p.variables = {"x", "q"};
  p.margins = {Uniform{-0.5, 0.5}, Beta{3.0 - std::sqrt(2.0), 3.0 + std::sqrt(2.0), 0.0, 1.0}};
  MultiPoly z(2);
  z.add_term({1, 0}, 0.5);
  z.add_term({0, 1}, -0.5);
  p.constraints.push_back({z, -0.4, 0.0});
  p.degree = 66;
  return p;
}

std::vector<Table1Row> run_table1(const RiskProblem& problem, const CertificateCache& cache,
                                  const EstimateConfig& cfg) {
  std::vector<Table1Row> rows;
  EstimateConfig c = cfg;
  c.solve_missing = true;
  for (const auto& ref : kTable1Reference) {
    c.degree_override = ref.degree;
    const auto t0 = std::chrono::steady_clock::now();
    Table1Row row{ref, estimate(problem, cache, c), 0.0};
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string table1_csv_row(const Table1Row& row) {
  char buf[256];
  const double pu = row.bounds.p_u();
  const double pl = row.bounds.p_l();
  std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.3f,%.3f,%+.6f,%+.6f,%.3f\n", row.ref.degree, pu, pl, row.ref.p_u,
                row.ref.p_l, pu - row.ref.p_u, pl - row.ref.p_l, row.seconds);
  return buf;
}

}  // namespace chebrisk
