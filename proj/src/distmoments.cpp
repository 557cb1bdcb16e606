#include "chebrisk/distmoments.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include "chebrisk/error.hpp"

namespace chebrisk {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

constexpr double kSupportSlack = 1e-12;

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::kValidation, what);
}

void require_interval(double a, double b, const char* kind) {
  require(std::isfinite(a) && std::isfinite(b) && a < b, std::string(kind) + ": need a < b");
  require(a >= -1.0 - kSupportSlack && b <= 1.0 + kSupportSlack,
          std::string(kind) + ": support must lie in [-1,1]");
}

std::vector<double> beta_unit_moments(double alpha, double beta, int max_order) {
  std::vector<double> m(max_order + 1);
  m[0] = 1.0;
  for (int k = 1; k <= max_order; ++k) m[k] = (alpha + k - 1) / (alpha + beta + k - 1) * m[k - 1];
  return m;
}

// Recurrence coefficients (alpha_k, beta_k), k < n, of the monic orthogonal
// polynomials for the Jacobi weight (1-t)^a (1+t)^b, normalized so that
// beta_0 = 1.
std::pair<std::vector<double>, std::vector<double>> jacobi_recurrence(int n, double a, double b) {
  std::vector<double> al(n), be(n);
  al[0] = (b - a) / (a + b + 2.0);
  be[0] = 1.0;
  for (int k = 1; k < n; ++k) {
    const double s = 2.0 * k + a + b;
    al[k] = (b * b - a * a) / (s * (s + 2.0));
    if (k == 1) {
      be[k] = 4.0 * (a + 1.0) * (b + 1.0) / ((a + b + 2.0) * (a + b + 2.0) * (a + b + 3.0));
    } else {
      be[k] = 4.0 * k * (k + a) * (k + b) * (k + a + b) / (s * s * (s + 1.0) * (s - 1.0));
    }
  }
  return {std::move(al), std::move(be)};
}

// Chebyshev algorithm (ordinary moments) in extended precision. Stops early
// when the measure is exhausted (finitely many atoms).
std::pair<std::vector<double>, std::vector<double>> recurrence_from_moments(
    std::span<const double> mu, int n) {
  using real = long double;
  const int len = 2 * n;
  std::vector<real> prev2(len, 0.0L), prev(len), cur(len);
  for (int l = 0; l < len; ++l) prev[l] = mu[l];
  std::vector<double> al, be;
  al.push_back(static_cast<double>(prev[1] / prev[0]));
  be.push_back(static_cast<double>(prev[0]));
  real a_prev = prev[1] / prev[0];
  real b_prev = prev[0];
  for (int k = 1; k < n; ++k) {
    for (int l = k; l < len - k; ++l) {
      cur[l] = prev[l + 1] - a_prev * prev[l] - b_prev * prev2[l];
    }
    if (!(cur[k] > 1e-15L * std::abs(prev[k - 1]))) break;
    const real a_k = cur[k + 1] / cur[k] - prev[k] / prev[k - 1];
    const real b_k = cur[k] / prev[k - 1];
    al.push_back(static_cast<double>(a_k));
    be.push_back(static_cast<double>(b_k));
    a_prev = a_k;
    b_prev = b_k;
    prev2.swap(prev);
    prev.swap(cur);
  }
  return {std::move(al), std::move(be)};
}

QuadratureRule golub_welsch(const std::vector<double>& al, const std::vector<double>& be) {
  const int n = static_cast<int>(al.size());
  Eigen::VectorXd diag(n), sub(std::max(n - 1, 0));
  for (int k = 0; k < n; ++k) diag[k] = al[k];
  for (int k = 1; k < n; ++k) sub[k - 1] = std::sqrt(be[k]);
  QuadratureRule rule;
  if (n == 1) {
    rule.nodes = {al[0]};
    rule.weights = {be[0]};
    return rule;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = es.eigenvalues()[i];
    const double v0 = es.eigenvectors()(0, i);
    rule.weights[i] = be[0] * v0 * v0;
  }
  return rule;
}

}  // namespace

void validate(const Marginal& dist) {
  std::visit(Overloaded{
                 [](const Uniform& u) { require_interval(u.a, u.b, "uniform"); },
                 [](const Beta& d) {
                   require(d.alpha > 0.0 && d.beta > 0.0, "beta: alpha and beta must be positive");
                   require_interval(d.a, d.b, "beta");
                 },
                 [](const PointMass& p) {
                   require(std::isfinite(p.v) && std::abs(p.v) <= 1.0 + kSupportSlack,
                           "point: |v| must be <= 1");
                 },
                 [](const MomentTable& t) {
                   require(!t.values.empty(), "moments: empty table");
                   require(std::abs(t.values[0] - 1.0) <= 1e-12, "moments: m_0 must be 1");
                   for (double m : t.values) {
                     require(std::isfinite(m) && std::abs(m) <= 1.0 + 1e-12,
                             "moments: |m_k| must be <= 1");
                   }
                 },
             },
             dist);
}

std::pair<double, double> support(const Marginal& dist) {
  return std::visit(Overloaded{
                        [](const Uniform& u) { return std::pair{u.a, u.b}; },
                        [](const Beta& d) { return std::pair{d.a, d.b}; },
                        [](const PointMass& p) { return std::pair{p.v, p.v}; },
                        [](const MomentTable&) { return std::pair{-1.0, 1.0}; },
                    },
                    dist);
}

std::string describe(const Marginal& dist) {
  std::ostringstream os;
  std::visit(Overloaded{
                 [&](const Uniform& u) { os << "uniform(" << u.a << ", " << u.b << ")"; },
                 [&](const Beta& d) {
                   os << "beta(" << d.alpha << ", " << d.beta << ") on [" << d.a << ", " << d.b << "]";
                 },
                 [&](const PointMass& p) { os << "point(" << p.v << ")"; },
                 [&](const MomentTable& t) { os << "moments[" << t.values.size() << "]"; },
             },
             dist);
  return os.str();
}

std::vector<double> affine_moments(std::span<const double> base, double a, double b) {
  const double h = b - a;
  std::vector<double> out(base.size(), 0.0);
  for (std::size_t k = 0; k < base.size(); ++k) {
    double binom = 1.0;
    double s = 0.0;
    for (std::size_t j = 0; j <= k; ++j) {
      s += binom * std::pow(a, static_cast<double>(k - j)) * std::pow(h, static_cast<double>(j)) * base[j];
      binom = binom * static_cast<double>(k - j) / static_cast<double>(j + 1);
    }
    out[k] = s;
  }
  return out;
}

std::vector<double> raw_moments(const Marginal& dist, int max_order) {
  if (max_order < 0) throw Error(ErrorKind::kValidation, "negative moment order");
  return std::visit(
      Overloaded{
          [&](const Uniform& u) {
            std::vector<double> m(max_order + 1);
            for (int k = 0; k <= max_order; ++k) {
              m[k] = (std::pow(u.b, k + 1) - std::pow(u.a, k + 1)) / ((k + 1) * (u.b - u.a));
            }
            return m;
          },
          [&](const Beta& d) {
            if (d.a >= 0.0) {
              const auto unit = beta_unit_moments(d.alpha, d.beta, max_order);
              if (d.a == 0.0 && d.b == 1.0) return unit;
              return affine_moments(unit, d.a, d.b);
            }
            if (d.b <= 0.0) {
              // X = -(-b + (b - a) V) with V = 1 - U ~ Beta(beta, alpha)
              auto m = affine_moments(beta_unit_moments(d.beta, d.alpha, max_order), -d.b, -d.a);
              for (int k = 1; k <= max_order; k += 2) m[k] = -m[k];
              return m;
            }
            // The binomial sum alternates in sign here and loses everything
            // by order ~40; the Gauss rule has positive weights.
            const QuadratureRule rule = gauss_rule(d, max_order);
            std::vector<double> m(max_order + 1, 0.0);
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
              double p = rule.weights[i];
              for (int k = 0; k <= max_order; ++k) {
                m[k] += p;
                p *= rule.nodes[i];
              }
            }
            m[0] = 1.0;
            return m;
          },
          [&](const PointMass& p) {
            std::vector<double> m(max_order + 1);
            for (int k = 0; k <= max_order; ++k) m[k] = std::pow(p.v, k);
            return m;
          },
          [&](const MomentTable& t) {
            if (max_order >= static_cast<int>(t.values.size())) throw InsufficientMoments(max_order);
            return std::vector<double>(t.values.begin(), t.values.begin() + max_order + 1);
          },
      },
      dist);
}

double raw_moment(const Marginal& dist, int k) {
  if (k < 0) throw Error(ErrorKind::kValidation, "negative moment order");
  if (const auto* p = std::get_if<PointMass>(&dist)) return std::pow(p->v, k);
  if (const auto* u = std::get_if<Uniform>(&dist)) {
    return (std::pow(u->b, k + 1) - std::pow(u->a, k + 1)) / ((k + 1) * (u->b - u->a));
  }
  if (const auto* t = std::get_if<MomentTable>(&dist)) {
    if (k >= static_cast<int>(t->values.size())) throw InsufficientMoments(k);
    return t->values[k];
  }
  return raw_moments(dist, k).back();
}

MomentSequence::MomentSequence(Marginal dist) : dist_(std::move(dist)) { validate(dist_); }

void MomentSequence::extend(int max_order) const {
  if (max_order >= static_cast<int>(cache_.size())) {
    // Doubling keeps repeated small extensions cheap.
    const int target = std::max(max_order, 2 * static_cast<int>(cache_.size()));
    try {
      cache_ = raw_moments(dist_, target);
    } catch (const InsufficientMoments&) {
      cache_ = raw_moments(dist_, max_order);
    }
  }
}

double MomentSequence::operator()(int k) const {
  std::lock_guard lock(mutex_);
  extend(k);
  return cache_[k];
}

std::vector<double> MomentSequence::prefix(int max_order) const {
  std::lock_guard lock(mutex_);
  extend(max_order);
  return std::vector<double>(cache_.begin(), cache_.begin() + max_order + 1);
}

QuadratureRule gauss_rule(const Marginal& dist, int exact_degree) {
  validate(dist);
  const int n = std::max(exact_degree, 0) / 2 + 1;
  auto map_rule = [](QuadratureRule rule, double lo, double hi) {
    for (double& x : rule.nodes) x = lo + 0.5 * (hi - lo) * (x + 1.0);
    return rule;
  };
  return std::visit(
      Overloaded{
          [&](const Uniform& u) {
            auto [al, be] = jacobi_recurrence(n, 0.0, 0.0);
            return map_rule(golub_welsch(al, be), u.a, u.b);
          },
          [&](const Beta& d) {
            // On [-1,1] with t = 2y - 1, y^(alpha-1) (1-y)^(beta-1) becomes
            // (1+t)^(alpha-1) (1-t)^(beta-1).
            auto [al, be] = jacobi_recurrence(n, d.beta - 1.0, d.alpha - 1.0);
            return map_rule(golub_welsch(al, be), d.a, d.b);
          },
          [&](const PointMass& p) { return QuadratureRule{{p.v}, {1.0}}; },
          [&](const MomentTable& t) {
            if (2 * n > static_cast<int>(t.values.size())) throw InsufficientMoments(2 * n - 1);
            auto [al, be] = recurrence_from_moments(t.values, n);
            QuadratureRule rule = golub_welsch(al, be);
            // An early stop is legitimate only for a finite-atom measure, whose
            // rule then reproduces every supplied moment.
            for (double x : rule.nodes) {
              if (!(std::abs(x) <= 1.0 + 1e-9)) {
                throw Error(ErrorKind::kMomentInstability, "moment table implies mass outside [-1,1]");
              }
            }
            for (int k = 0; k < 2 * n; ++k) {
              double q = 0.0;
              for (std::size_t i = 0; i < rule.nodes.size(); ++i) q += rule.weights[i] * std::pow(rule.nodes[i], k);
              if (!(std::abs(q - t.values[k]) <= 1e-9)) {
                throw Error(ErrorKind::kMomentInstability,
                            "moment table is not the moment sequence of a distribution (order " +
                                std::to_string(k) + ")");
              }
            }
            return rule;
          },
      },
      dist);
}

}  // namespace chebrisk
