#include "chebrisk/propagate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "chebrisk/error.hpp"

namespace chebrisk {

namespace {

void check_margins(std::size_t nvars, std::span<const Marginal> margins) {
  if (margins.size() != nvars) {
    throw Error(ErrorKind::kValidation, "expected " + std::to_string(nvars) + " marginals, got " +
                                            std::to_string(margins.size()));
  }
}

// Per-variable raw moment tables covering the given orders.
std::vector<std::vector<double>> moment_tables(std::span<const Marginal> margins,
                                               std::span<const int> max_orders) {
  std::vector<std::vector<double>> tables;
  tables.reserve(margins.size());
  for (std::size_t v = 0; v < margins.size(); ++v) tables.push_back(raw_moments(margins[v], max_orders[v]));
  return tables;
}

double expectation_with(const MultiPoly& p, const std::vector<std::vector<double>>& tables) {
  double s = 0.0;
  for (const auto& [e, c] : p.terms()) {
    double t = c;
    for (std::size_t v = 0; v < e.size(); ++v) t *= tables[v][e[v]];
    s += t;
  }
  return s;
}

std::vector<int> per_var_degrees(const MultiPoly& p) {
  std::vector<int> d(p.nvars());
  for (std::size_t v = 0; v < p.nvars(); ++v) d[v] = p.degree_in(v);
  return d;
}

// Visits every node of the tensor Gauss rule that integrates
// prod_j P_j^{orders[j]} exactly, handing fn the values P_j(node) and the
// node weight. The variable with the most nodes is evaluated innermost, with
// each P_j collapsed to a univariate polynomial in it.
template <class Fn>
void for_each_quadrature_node(std::span<const MultiPoly> polys, std::span<const Marginal> margins,
                              std::span<const int> orders, Fn&& fn) {
  const std::size_t n = margins.size();
  const std::size_t ell = polys.size();
  std::vector<QuadratureRule> rules(n);
  std::vector<int> max_exp(n, 0);
  for (std::size_t v = 0; v < n; ++v) {
    long exact = 0;
    for (std::size_t j = 0; j < ell; ++j) {
      const int dv = polys[j].degree_in(v);
      max_exp[v] = std::max(max_exp[v], dv);
      exact += static_cast<long>(orders[j]) * dv;
    }
    rules[v] = gauss_rule(margins[v], static_cast<int>(exact));
  }
  std::size_t inner = 0;
  for (std::size_t v = 1; v < n; ++v) {
    if (rules[v].nodes.size() > rules[inner].nodes.size()) inner = v;
  }

  // powers[v][node * (max_exp+1) + e] = x_node^e
  std::vector<std::vector<double>> powers(n);
  for (std::size_t v = 0; v < n; ++v) {
    const std::size_t stride = max_exp[v] + 1;
    powers[v].resize(rules[v].nodes.size() * stride);
    for (std::size_t i = 0; i < rules[v].nodes.size(); ++i) {
      double x = 1.0;
      for (std::size_t e = 0; e < stride; ++e) {
        powers[v][i * stride + e] = x;
        x *= rules[v].nodes[i];
      }
    }
  }

  struct FlatTerm {
    double coeff;
    std::vector<int> exps;
  };
  std::vector<std::vector<FlatTerm>> flat(ell);
  for (std::size_t j = 0; j < ell; ++j) {
    for (const auto& [e, c] : polys[j].terms()) flat[j].push_back({c, e});
  }

  std::vector<std::vector<double>> collapsed(ell);
  for (std::size_t j = 0; j < ell; ++j) collapsed[j].assign(polys[j].degree_in(inner) + 1, 0.0);
  std::vector<double> z(ell);
  std::vector<std::size_t> node(n, 0);
  const auto& inner_rule = rules[inner];

  while (true) {
    double w_outer = 1.0;
    for (std::size_t v = 0; v < n; ++v) {
      if (v != inner) w_outer *= rules[v].weights[node[v]];
    }
    for (std::size_t j = 0; j < ell; ++j) {
      auto& cj = collapsed[j];
      std::fill(cj.begin(), cj.end(), 0.0);
      for (const auto& t : flat[j]) {
        double c = t.coeff;
        for (std::size_t v = 0; v < n; ++v) {
          if (v != inner) c *= powers[v][node[v] * (max_exp[v] + 1) + t.exps[v]];
        }
        cj[t.exps[inner]] += c;
      }
    }
    for (std::size_t i = 0; i < inner_rule.nodes.size(); ++i) {
      const double x = inner_rule.nodes[i];
      for (std::size_t j = 0; j < ell; ++j) {
        const auto& cj = collapsed[j];
        double s = 0.0;
        for (std::size_t e = cj.size(); e-- > 0;) s = s * x + cj[e];
        z[j] = s;
      }
      fn(std::span<const double>(z), w_outer * inner_rule.weights[i]);
    }
    std::size_t v = 0;
    for (; v < n; ++v) {
      if (v == inner) continue;
      if (++node[v] < rules[v].nodes.size()) break;
      node[v] = 0;
    }
    if (v == n) break;
  }
}

// T_0(z)..T_d(z) written into out.
inline void cheb_values(double z, std::span<double> out) {
  out[0] = 1.0;
  if (out.size() > 1) out[1] = z;
  for (std::size_t k = 2; k < out.size(); ++k) out[k] = 2.0 * z * out[k - 1] - out[k - 2];
}

// T_0(p)..T_d(p) as polynomials.
std::vector<MultiPoly> cheb_polys(const MultiPoly& p, int d, int max_total_degree) {
  std::vector<MultiPoly> t;
  t.reserve(d + 1);
  t.push_back(MultiPoly::constant(p.nvars(), 1.0));
  if (d >= 1) t.push_back(p);
  for (int k = 2; k <= d; ++k) {
    MultiPoly next = poly_mul(p, t[k - 1], max_total_degree) * 2.0;
    next -= t[k - 2];
    t.push_back(std::move(next));
  }
  return t;
}

}  // namespace

double monomial_expectation(const Exponents& idx, std::span<const Marginal> margins) {
  check_margins(idx.size(), margins);
  double e = 1.0;
  for (std::size_t v = 0; v < idx.size(); ++v) {
    if (idx[v] != 0) e *= raw_moment(margins[v], idx[v]);
  }
  return e;
}

double expectation(const MultiPoly& p, std::span<const Marginal> margins) {
  check_margins(p.nvars(), margins);
  const auto orders = per_var_degrees(p);
  return expectation_with(p, moment_tables(margins, orders));
}

MomentVector z_moments_standard(const MultiPoly& p, std::span<const Marginal> margins, int d,
                                int max_total_degree) {
  if (d < 0) throw Error(ErrorKind::kValidation, "negative moment degree");
  check_margins(p.nvars(), margins);
  if (static_cast<long>(d) * p.total_degree() > max_total_degree) {
    throw Error(ErrorKind::kDegreeCap, "degree " + std::to_string(d * p.total_degree()) +
                                           " of p^" + std::to_string(d) + " exceeds cap " +
                                           std::to_string(max_total_degree));
  }
  auto orders = per_var_degrees(p);
  for (int& o : orders) o *= d;
  const auto tables = moment_tables(margins, orders);

  MomentVector mv{std::vector<double>(d + 1), MomentBasis::kStandard};
  mv.values[0] = 1.0;
  MultiPoly power = MultiPoly::constant(p.nvars(), 1.0);
  for (int a = 1; a <= d; ++a) {
    power = poly_mul(power, p, max_total_degree);
    mv.values[a] = expectation_with(power, tables);
  }
  return mv;
}

MomentVector cheb_moments_from_standard(const MomentVector& standard) {
  const int d = standard.degree();
  const auto table = cheb_monomial_table(d);
  MomentVector out{std::vector<double>(d + 1, 0.0), MomentBasis::kChebyshev};
  for (int k = 0; k <= d; ++k) {
    double s = 0.0;
    for (std::size_t j = 0; j < table[k].size(); ++j) s += table[k][j] * standard.values[j];
    out.values[k] = s;
  }
  return out;
}

std::pair<MomentVector, MomentVector> z_moments_both(const MultiPoly& p,
                                                     std::span<const Marginal> margins, int d) {
  if (d < 0) throw Error(ErrorKind::kValidation, "negative moment degree");
  check_margins(p.nvars(), margins);
  std::vector<double> std_acc(d + 1, 0.0), cheb_acc(d + 1, 0.0), t(d + 1);
  const std::vector<MultiPoly> polys{p};
  const std::vector<int> orders{d};
  for_each_quadrature_node(polys, margins, orders, [&](std::span<const double> z, double w) {
    cheb_values(z[0], t);
    double zp = w;
    for (int k = 0; k <= d; ++k) {
      std_acc[k] += zp;
      zp *= z[0];
      cheb_acc[k] += w * t[k];
    }
  });
  std_acc[0] = cheb_acc[0] = 1.0;
  return {MomentVector{std::move(std_acc), MomentBasis::kStandard},
          MomentVector{std::move(cheb_acc), MomentBasis::kChebyshev}};
}

MomentVector z_moments_cheb(const MultiPoly& p, std::span<const Marginal> margins, int d,
                            MomentPath path, int max_total_degree) {
  if (d < 0) throw Error(ErrorKind::kValidation, "negative moment degree");
  check_margins(p.nvars(), margins);
  switch (path) {
    case MomentPath::kConversion:
      return cheb_moments_from_standard(z_moments_standard(p, margins, d, max_total_degree));
    case MomentPath::kRecurrence: {
      if (static_cast<long>(d) * p.total_degree() > max_total_degree) {
        throw Error(ErrorKind::kDegreeCap, "T_" + std::to_string(d) + "(p) has degree " +
                                               std::to_string(d * p.total_degree()) +
                                               ", above cap " + std::to_string(max_total_degree));
      }
      auto orders = per_var_degrees(p);
      for (int& o : orders) o *= d;
      const auto tables = moment_tables(margins, orders);
      const auto t = cheb_polys(p, d, max_total_degree);
      MomentVector mv{std::vector<double>(d + 1), MomentBasis::kChebyshev};
      for (int k = 0; k <= d; ++k) mv.values[k] = expectation_with(t[k], tables);
      return mv;
    }
    case MomentPath::kQuadrature:
      break;
  }
  std::vector<double> acc(d + 1, 0.0), t(d + 1);
  const std::vector<MultiPoly> polys{p};
  const std::vector<int> orders{d};
  for_each_quadrature_node(polys, margins, orders, [&](std::span<const double> z, double w) {
    cheb_values(z[0], t);
    for (int k = 0; k <= d; ++k) acc[k] += w * t[k];
  });
  acc[0] = 1.0;
  return MomentVector{std::move(acc), MomentBasis::kChebyshev};
}

int moment_validity_degree(const MomentVector& mv) {
  for (int k = 0; k <= mv.degree(); ++k) {
    if (!(std::abs(mv.values[k]) <= 1.0 + 1e-9)) return k - 1;
  }
  return mv.degree();
}

int path_divergence_degree(const MomentVector& reference, const MomentVector& converted, double tol) {
  const int d = std::min(reference.degree(), converted.degree());
  for (int k = 0; k <= d; ++k) {
    if (!(std::abs(reference.values[k] - converted.values[k]) <= tol)) return k - 1;
  }
  return d;
}

MixedChebMoments::MixedChebMoments(std::vector<int> degrees) : degrees_(std::move(degrees)) {
  std::size_t total = 1;
  for (int d : degrees_) total *= static_cast<std::size_t>(d + 1);
  values_.assign(total, 0.0);
}

std::size_t MixedChebMoments::offset(std::span<const int> idx) const {
  if (idx.size() != degrees_.size()) throw Error(ErrorKind::kValidation, "mixed index arity mismatch");
  std::size_t off = 0;
  for (std::size_t j = 0; j < idx.size(); ++j) {
    if (idx[j] < 0 || idx[j] > degrees_[j]) throw Error(ErrorKind::kValidation, "mixed index out of range");
    off = off * static_cast<std::size_t>(degrees_[j] + 1) + static_cast<std::size_t>(idx[j]);
  }
  return off;
}

MixedChebMoments mixed_cheb_moments(std::span<const MultiPoly> polys,
                                    std::span<const Marginal> margins, std::span<const int> degrees,
                                    MomentPath path, std::size_t size_cap) {
  if (polys.empty()) throw Error(ErrorKind::kValidation, "mixed moments need at least one polynomial");
  if (degrees.size() != polys.size()) throw Error(ErrorKind::kValidation, "one degree per polynomial required");
  for (const auto& p : polys) check_margins(p.nvars(), margins);
  double total = 1.0;
  for (int d : degrees) {
    if (d < 0) throw Error(ErrorKind::kValidation, "negative moment degree");
    total *= d + 1.0;
  }
  if (total > static_cast<double>(size_cap)) {
    throw Error(ErrorKind::kSizeCap, "mixed moment tensor has " + std::to_string(static_cast<long double>(total)) +
                                         " entries, above cap " + std::to_string(size_cap));
  }
  MixedChebMoments out(std::vector<int>(degrees.begin(), degrees.end()));
  const std::size_t ell = polys.size();

  if (path != MomentPath::kQuadrature) {
    std::vector<std::vector<MultiPoly>> tpolys;
    std::vector<int> orders(margins.size(), 0);
    for (std::size_t j = 0; j < ell; ++j) {
      tpolys.push_back(cheb_polys(polys[j], degrees[j], kMaxTotalDegree));
      for (std::size_t v = 0; v < margins.size(); ++v) orders[v] += degrees[j] * polys[j].degree_in(v);
    }
    const auto tables = moment_tables(margins, orders);
    std::vector<int> idx(ell, 0);
    for (std::size_t flat = 0; flat < out.size(); ++flat) {
      MultiPoly prod = tpolys[0][idx[0]];
      for (std::size_t j = 1; j < ell; ++j) {
        prod = poly_mul(prod, tpolys[j][idx[j]], kMaxTotalDegree);
        if (prod.size() > size_cap) {
          throw Error(ErrorKind::kSizeCap, "product polynomial reached " + std::to_string(prod.size()) +
                                               " terms, above cap " + std::to_string(size_cap));
        }
      }
      out.values()[flat] = expectation_with(prod, tables);
      for (std::size_t j = ell; j-- > 0;) {
        if (++idx[j] <= degrees[j]) break;
        idx[j] = 0;
      }
    }
    return out;
  }

  std::vector<std::vector<double>> t(ell);
  for (std::size_t j = 0; j < ell; ++j) t[j].resize(degrees[j] + 1);
  std::vector<double> prod, next;
  prod.reserve(out.size());
  next.reserve(out.size());
  auto& acc = out.values();
  for_each_quadrature_node(polys, margins, degrees, [&](std::span<const double> z, double w) {
    prod.assign(1, w);
    for (std::size_t j = 0; j < ell; ++j) {
      cheb_values(z[j], t[j]);
      next.clear();
      for (double a : prod) {
        for (double b : t[j]) next.push_back(a * b);
      }
      prod.swap(next);
    }
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += prod[i];
  });
  acc[0] = 1.0;  // the weights sum to 1 only up to rounding
  return out;
}

}  // namespace chebrisk
