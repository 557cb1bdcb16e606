#include "chebrisk/polycore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <unordered_map>

#include "chebrisk/error.hpp"

namespace chebrisk {

namespace {

struct ExponentsHash {
  std::size_t operator()(const Exponents& e) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (int v : e) {
      h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return h;
  }
};

using TermAccumulator = std::unordered_map<Exponents, double, ExponentsHash>;

int sum_of(const Exponents& e) { return std::accumulate(e.begin(), e.end(), 0); }

// Chebyshev coefficients of x^j for j = 0..degree. All entries are >= 0 and
// each row sums to 1.
std::vector<std::vector<double>> power_to_cheb_table(int degree) {
  std::vector<std::vector<double>> rows;
  rows.reserve(degree + 1);
  rows.push_back({1.0});
  for (int j = 1; j <= degree; ++j) {
    const auto& prev = rows.back();
    std::vector<double> next(j + 1, 0.0);
    next[1] += prev[0];
    for (std::size_t k = 1; k < prev.size(); ++k) {
      next[k + 1] += 0.5 * prev[k];
      next[k - 1] += 0.5 * prev[k];
    }
    rows.push_back(std::move(next));
  }
  return rows;
}

// Tensor Chebyshev coefficients of p, keyed by per-variable Chebyshev degree.
TermAccumulator tensor_cheb_coeffs(const MultiPoly& p) {
  int max_deg = 0;
  for (std::size_t v = 0; v < p.nvars(); ++v) max_deg = std::max(max_deg, p.degree_in(v));
  const auto table = power_to_cheb_table(max_deg);

  TermAccumulator out;
  const std::size_t n = p.nvars();
  Exponents idx(n, 0);
  for (const auto& [exps, c] : p.terms()) {
    // Walk the tensor product of per-variable expansions. Only indices with
    // the parity of the exponent are nonzero, so step by 2.
    std::fill(idx.begin(), idx.end(), 0);
    for (std::size_t v = 0; v < n; ++v) idx[v] = exps[v] % 2;
    while (true) {
      double w = c;
      for (std::size_t v = 0; v < n; ++v) w *= table[exps[v]][idx[v]];
      out[idx] += w;
      std::size_t v = 0;
      for (; v < n; ++v) {
        idx[v] += 2;
        if (idx[v] <= exps[v]) break;
        idx[v] = exps[v] % 2;
      }
      if (v == n) break;
    }
  }
  return out;
}

}  // namespace

bool GradedLexLess::operator()(const Exponents& a, const Exponents& b) const {
  const int da = sum_of(a);
  const int db = sum_of(b);
  if (da != db) return da < db;
  return a < b;
}

MultiPoly::MultiPoly(std::size_t nvars) : nvars_(nvars) {
  if (nvars == 0) throw Error(ErrorKind::kValidation, "MultiPoly needs at least one variable");
}

MultiPoly MultiPoly::constant(std::size_t nvars, double value) {
  MultiPoly p(nvars);
  p.add_term(Exponents(nvars, 0), value);
  return p;
}

MultiPoly MultiPoly::variable(std::size_t nvars, std::size_t index, double coeff) {
  if (index >= nvars) throw Error(ErrorKind::kValidation, "variable index out of range");
  MultiPoly p(nvars);
  Exponents e(nvars, 0);
  e[index] = 1;
  p.add_term(e, coeff);
  return p;
}

void MultiPoly::add_term(const Exponents& exps, double coeff) {
  if (exps.size() != nvars_) {
    throw Error(ErrorKind::kValidation, "exponent vector length " + std::to_string(exps.size()) +
                                            " does not match nvars " + std::to_string(nvars_));
  }
  if (std::any_of(exps.begin(), exps.end(), [](int e) { return e < 0; })) {
    throw Error(ErrorKind::kValidation, "negative exponent");
  }
  if (!std::isfinite(coeff)) throw Error(ErrorKind::kValidation, "non-finite coefficient");
  auto [it, inserted] = terms_.try_emplace(exps, coeff);
  if (!inserted) it->second += coeff;
  if (std::abs(it->second) < kCoeffDropTol) terms_.erase(it);
}

int MultiPoly::total_degree() const {
  // The map is graded, so the last key carries the highest degree.
  return terms_.empty() ? 0 : sum_of(terms_.rbegin()->first);
}

int MultiPoly::degree_in(std::size_t var) const {
  int d = 0;
  for (const auto& [e, c] : terms_) d = std::max(d, e[var]);
  return d;
}

double MultiPoly::coeff(const Exponents& exps) const {
  auto it = terms_.find(exps);
  return it == terms_.end() ? 0.0 : it->second;
}

double MultiPoly::evaluate(std::span<const double> point) const {
  if (point.size() != nvars_) throw Error(ErrorKind::kValidation, "evaluation point has wrong arity");
  double sum = 0.0;
  for (const auto& [e, c] : terms_) {
    double t = c;
    for (std::size_t v = 0; v < nvars_; ++v) {
      if (e[v] != 0) t *= std::pow(point[v], e[v]);
    }
    sum += t;
  }
  return sum;
}

MultiPoly MultiPoly::operator-() const {
  MultiPoly out(*this);
  for (auto& [e, c] : out.terms_) c = -c;
  return out;
}

MultiPoly& MultiPoly::operator+=(const MultiPoly& other) {
  check_arity(other);
  for (const auto& [e, c] : other.terms_) terms_[e] += c;
  prune();
  return *this;
}

MultiPoly& MultiPoly::operator-=(const MultiPoly& other) {
  check_arity(other);
  for (const auto& [e, c] : other.terms_) terms_[e] -= c;
  prune();
  return *this;
}

MultiPoly& MultiPoly::operator*=(double s) {
  for (auto& [e, c] : terms_) c *= s;
  prune();
  return *this;
}

void MultiPoly::check_arity(const MultiPoly& other) const {
  if (other.nvars_ != nvars_) {
    throw Error(ErrorKind::kValidation, "variable-count mismatch: " + std::to_string(nvars_) +
                                            " vs " + std::to_string(other.nvars_));
  }
}

void MultiPoly::prune() {
  std::erase_if(terms_, [](const auto& kv) { return std::abs(kv.second) < kCoeffDropTol; });
}

MultiPoly poly_mul(const MultiPoly& a, const MultiPoly& b, int max_total_degree) {
  if (a.nvars() != b.nvars()) {
    throw Error(ErrorKind::kValidation, "variable-count mismatch in poly_mul");
  }
  MultiPoly out(a.nvars());
  if (a.is_zero() || b.is_zero()) return out;
  if (a.total_degree() + b.total_degree() > max_total_degree) {
    throw Error(ErrorKind::kDegreeCap, "product degree " +
                                           std::to_string(a.total_degree() + b.total_degree()) +
                                           " exceeds cap " + std::to_string(max_total_degree));
  }
  TermAccumulator acc;
  acc.reserve(a.size() * b.size());
  Exponents e(a.nvars());
  for (const auto& [ea, ca] : a.terms()) {
    for (const auto& [eb, cb] : b.terms()) {
      for (std::size_t v = 0; v < e.size(); ++v) e[v] = ea[v] + eb[v];
      acc[e] += ca * cb;
    }
  }
  for (const auto& [exps, c] : acc) {
    if (std::abs(c) >= kCoeffDropTol) out.add_term(exps, c);
  }
  return out;
}

MultiPoly poly_pow(const MultiPoly& a, int k, int max_total_degree) {
  if (k < 0) throw Error(ErrorKind::kValidation, "negative power");
  if (static_cast<long>(k) * a.total_degree() > max_total_degree) {
    throw Error(ErrorKind::kDegreeCap, "power degree exceeds cap " + std::to_string(max_total_degree));
  }
  MultiPoly out = MultiPoly::constant(a.nvars(), 1.0);
  for (int i = 0; i < k; ++i) out = poly_mul(out, a, max_total_degree);
  return out;
}

MultiPoly compose_affine(const MultiPoly& p, std::span<const double> center,
                         std::span<const double> halfwidth) {
  const std::size_t n = p.nvars();
  if (center.size() != n || halfwidth.size() != n) {
    throw Error(ErrorKind::kValidation, "affine map arity mismatch");
  }
  // (c + h t)^e expanded per variable and exponent, cached.
  std::vector<std::map<int, std::vector<double>>> cache(n);
  auto expansion = [&](std::size_t v, int e) -> const std::vector<double>& {
    auto it = cache[v].find(e);
    if (it != cache[v].end()) return it->second;
    std::vector<double> coeffs(e + 1, 0.0);
    double binom = 1.0;
    for (int j = 0; j <= e; ++j) {
      coeffs[j] = binom * std::pow(center[v], e - j) * std::pow(halfwidth[v], j);
      binom = binom * (e - j) / (j + 1);
    }
    return cache[v].emplace(e, std::move(coeffs)).first->second;
  };

  TermAccumulator acc;
  Exponents idx(n);
  for (const auto& [exps, c] : p.terms()) {
    std::vector<const std::vector<double>*> parts(n);
    for (std::size_t v = 0; v < n; ++v) parts[v] = &expansion(v, exps[v]);
    std::fill(idx.begin(), idx.end(), 0);
    while (true) {
      double w = c;
      for (std::size_t v = 0; v < n; ++v) w *= (*parts[v])[idx[v]];
      if (w != 0.0) acc[idx] += w;
      std::size_t v = 0;
      for (; v < n; ++v) {
        if (++idx[v] <= exps[v]) break;
        idx[v] = 0;
      }
      if (v == n) break;
    }
  }
  MultiPoly out(n);
  for (const auto& [e, c] : acc) {
    if (std::abs(c) >= kCoeffDropTol) out.add_term(e, c);
  }
  return out;
}

ChebSeries ChebSeries::basis(int k, double scale) {
  std::vector<double> c(k + 1, 0.0);
  c[k] = scale;
  return ChebSeries(std::move(c));
}

int ChebSeries::degree() const {
  for (int k = static_cast<int>(coeffs_.size()) - 1; k > 0; --k) {
    if (coeffs_[k] != 0.0) return k;
  }
  return 0;
}

double ChebSeries::operator()(double z) const { return cheb_eval(*this, z); }

ChebSeries cheb_mul(const ChebSeries& a, const ChebSeries& b, int max_degree) {
  const int da = a.degree();
  const int db = b.degree();
  if (da + db > max_degree) {
    throw Error(ErrorKind::kDegreeCap, "Chebyshev product degree " + std::to_string(da + db) +
                                           " exceeds cap " + std::to_string(max_degree));
  }
  std::vector<double> out(da + db + 1, 0.0);
  for (int i = 0; i <= da; ++i) {
    const double ai = a[i];
    if (ai == 0.0) continue;
    for (int j = 0; j <= db; ++j) {
      const double h = 0.5 * ai * b[j];
      out[i + j] += h;
      out[std::abs(i - j)] += h;
    }
  }
  for (double& c : out) {
    if (std::abs(c) < kCoeffDropTol) c = 0.0;
  }
  return ChebSeries(std::move(out));
}

double cheb_eval(const ChebSeries& a, double z) {
  const auto& c = a.coeffs();
  if (c.empty()) return 0.0;
  double b1 = 0.0;
  double b2 = 0.0;
  for (std::size_t k = c.size() - 1; k >= 1; --k) {
    const double b0 = c[k] + 2.0 * z * b1 - b2;
    b2 = b1;
    b1 = b0;
  }
  return c[0] + z * b1 - b2;
}

std::vector<double> cheb_integral_weights(int degree) {
  std::vector<double> w(degree + 1, 0.0);
  for (int k = 0; k <= degree; k += 2) w[k] = 2.0 / (1.0 - static_cast<double>(k) * k);
  return w;
}

double cheb_integral(const ChebSeries& a) {
  const auto w = cheb_integral_weights(static_cast<int>(a.coeffs().size()) - 1);
  double s = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * a.coeffs()[k];
  return s;
}

ChebSeries standard_to_cheb(std::span<const double> monomial_coeffs) {
  if (monomial_coeffs.empty()) return ChebSeries(std::vector<double>{0.0});
  const int d = static_cast<int>(monomial_coeffs.size()) - 1;
  if (d > kMaxUnivariateDegree) throw Error(ErrorKind::kDegreeCap, "univariate degree cap exceeded");
  const auto table = power_to_cheb_table(d);
  std::vector<double> out(d + 1, 0.0);
  for (int j = 0; j <= d; ++j) {
    for (std::size_t k = 0; k < table[j].size(); ++k) out[k] += monomial_coeffs[j] * table[j][k];
  }
  return ChebSeries(std::move(out));
}

std::vector<std::vector<double>> cheb_monomial_table(int degree) {
  std::vector<std::vector<double>> rows;
  rows.push_back({1.0});
  if (degree >= 1) rows.push_back({0.0, 1.0});
  for (int k = 2; k <= degree; ++k) {
    std::vector<double> next(k + 1, 0.0);
    const auto& t1 = rows[k - 1];
    const auto& t0 = rows[k - 2];
    for (std::size_t j = 0; j < t1.size(); ++j) next[j + 1] += 2.0 * t1[j];
    for (std::size_t j = 0; j < t0.size(); ++j) next[j] -= t0[j];
    rows.push_back(std::move(next));
  }
  return rows;
}

std::vector<double> cheb_to_standard(const ChebSeries& a) {
  const int d = static_cast<int>(a.coeffs().size()) - 1;
  if (d < 0) return {0.0};
  if (d > kMaxUnivariateDegree) throw Error(ErrorKind::kDegreeCap, "univariate degree cap exceeded");
  const auto table = cheb_monomial_table(d);
  std::vector<double> out(d + 1, 0.0);
  for (int k = 0; k <= d; ++k) {
    for (std::size_t j = 0; j < table[k].size(); ++j) out[j] += a.coeffs()[k] * table[k][j];
  }
  return out;
}

std::string_view to_string(BoundMethod m) {
  switch (m) {
    case BoundMethod::kChebyshev: return "chebyshev";
    case BoundMethod::kMonomial: return "monomial";
    case BoundMethod::kChebyshevSubdivided: return "chebyshev-subdivided";
  }
  return "unknown";
}

std::pair<double, double> cheb_range_enclosure(const MultiPoly& p) {
  if (p.is_zero()) return {0.0, 0.0};
  const auto coeffs = tensor_cheb_coeffs(p);
  const Exponents zero(p.nvars(), 0);
  double c0 = 0.0;
  double radius = 0.0;
  for (const auto& [idx, c] : coeffs) {
    if (idx == zero) {
      c0 = c;
    } else {
      radius += std::abs(c);
    }
  }
  return {c0 - radius, c0 + radius};
}

BoxBound box_bound(const MultiPoly& p, BoundMethod method) {
  if (method == BoundMethod::kMonomial) {
    double s = 0.0;
    for (const auto& [e, c] : p.terms()) s += std::abs(c);
    return {s, BoundMethod::kMonomial};
  }
  if (method == BoundMethod::kChebyshevSubdivided) return box_bound_subdivided(p, 1.0);
  double s = 0.0;
  for (const auto& [idx, c] : tensor_cheb_coeffs(p)) s += std::abs(c);
  return {s, BoundMethod::kChebyshev};
}

BoxBound box_bound_subdivided(const MultiPoly& p, double target, int max_boxes) {
  const std::size_t n = p.nvars();
  struct Box {
    double bound;
    std::vector<double> center;
    std::vector<double> half;
    bool operator<(const Box& o) const { return bound < o.bound; }
  };
  auto make_box = [&](std::vector<double> c, std::vector<double> h) {
    const auto [lo, hi] = cheb_range_enclosure(compose_affine(p, c, h));
    return Box{std::max(std::abs(lo), std::abs(hi)), std::move(c), std::move(h)};
  };

  const BoxBound whole = box_bound(p, BoundMethod::kChebyshev);
  std::priority_queue<Box> queue;
  queue.push(make_box(std::vector<double>(n, 0.0), std::vector<double>(n, 1.0)));
  int examined = 1;
  while (queue.top().bound > target && examined + 2 <= max_boxes) {
    Box worst = queue.top();
    queue.pop();
    std::size_t split = 0;
    double best = -1.0;
    for (std::size_t v = 0; v < n; ++v) {
      const double score = worst.half[v] * p.degree_in(v);
      if (score > best) {
        best = score;
        split = v;
      }
    }
    if (best <= 0.0) {
      queue.push(std::move(worst));
      break;
    }
    auto h = worst.half;
    h[split] *= 0.5;
    auto c_lo = worst.center;
    auto c_hi = worst.center;
    c_lo[split] -= h[split];
    c_hi[split] += h[split];
    queue.push(make_box(std::move(c_lo), h));
    queue.push(make_box(std::move(c_hi), h));
    examined += 2;
  }
  const double refined = queue.top().bound;
  if (refined < whole.value) return {refined, BoundMethod::kChebyshevSubdivided};
  return whole;
}

ScaledConstraint rescale_constraint(const MultiPoly& p, double lower, double upper) {
  return rescale_constraint(p, lower, upper, box_bound(p));
}

ScaledConstraint rescale_constraint(const MultiPoly& p, double lower, double upper,
                                    const BoxBound& bound) {
  if (!(lower <= upper)) throw Error(ErrorKind::kValidation, "constraint requires l <= u");
  if (p.is_zero()) {
    if (lower <= 0.0 && 0.0 <= upper) return {p, std::max(lower, -1.0), std::min(upper, 1.0), 1.0, bound};
    throw Error(ErrorKind::kEmptyUnsafeSet, "empty unsafe set: p is identically zero and 0 is outside [l,u]");
  }
  ScaledConstraint out{p, lower, upper, 1.0, bound};
  if (bound.value > 1.0) {
    out.scale = bound.value;
    out.poly *= 1.0 / bound.value;
    out.lower /= bound.value;
    out.upper /= bound.value;
  }
  if (out.lower > 1.0 || out.upper < -1.0) {
    throw Error(ErrorKind::kEmptyUnsafeSet, "empty unsafe set: thresholds outside the range of p");
  }
  out.lower = std::max(out.lower, -1.0);
  out.upper = std::min(out.upper, 1.0);
  return out;
}

}  // namespace chebrisk
