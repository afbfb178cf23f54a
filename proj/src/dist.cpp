#include "moebxii/dist.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace moebxii {

namespace detail {

double log1p_exp(double z) {
  if (z > 35.0) return z + std::exp(-z);
  if (z < -35.0) return std::exp(z);
  return std::log1p(std::exp(z));
}

Kernel kernel_at_log(const Params& p, double lx) {
  Kernel q;
  q.lp = log1p_exp(p.c * lx);
  q.t = std::exp(-p.k * q.lp);
  q.log_h = std::log1p((p.alpha - 1.0) * q.t);
  q.h = 1.0 - (1.0 - p.alpha) * q.t;  // always > 0 for valid parameters
  return q;
}

}  // namespace detail

namespace {

// Kernel plus log x, for x > 0.
struct Point {
  double lx;
  detail::Kernel q;
};

Point kernel(const Params& p, double x) {
  const double lx = std::log(x);
  return {lx, detail::kernel_at_log(p, lx)};
}

void require_nonnegative(double x, const char* op) {
  if (!(x >= 0.0)) throw std::domain_error(std::string(op) + ": x must be >= 0");
}

void require_positive(double x, const char* op) {
  if (!(x > 0.0)) throw std::domain_error(std::string(op) + ": x must be > 0");
}

}  // namespace

Params::Params(double alpha_, double c_, double k_) : alpha(alpha_), c(c_), k(k_) {
  if (!(alpha > 0.0) || !(c > 0.0) || !(k > 0.0) || !std::isfinite(alpha) ||
      !std::isfinite(c) || !std::isfinite(k)) {
    throw std::invalid_argument("Params: alpha, c, k must be finite and > 0");
  }
}

Sample::Sample(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw std::invalid_argument("Sample: at least one observation required");
  for (double v : values_) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("Sample: observations must be finite and >= 0");
    }
  }
  sorted_ = values_;
  std::sort(sorted_.begin(), sorted_.end());
}

double pdf(const Params& p, double x) {
  require_nonnegative(x, "pdf");
  if (x == 0.0) {
    if (p.c > 1.0) return 0.0;
    if (p.c == 1.0) return p.c * p.k / p.alpha;
    throw std::domain_error("pdf: density diverges at x = 0 for c < 1");
  }
  const Point pt = kernel(p, x);
  return std::exp(std::log(p.alpha * p.c * p.k) + (p.c - 1.0) * pt.lx -
                  (p.k + 1.0) * pt.q.lp - 2.0 * pt.q.log_h);
}

double cdf(const Params& p, double x) {
  require_nonnegative(x, "cdf");
  if (x == 0.0) return 0.0;
  const Point pt = kernel(p, x);
  return -std::expm1(-p.k * pt.q.lp) / pt.q.h;
}

double survival(const Params& p, double x) {
  require_nonnegative(x, "survival");
  if (x == 0.0) return 1.0;
  const Point pt = kernel(p, x);
  return p.alpha * pt.q.t / pt.q.h;
}

namespace {

// log of the inverted cdf with the complement 1-u supplied separately, so
// tail probabilities keep their precision. -log t with
// t = (1-u)/(1-(1-alpha)u) stays in logs throughout.
double log_quantile_split(const Params& p, double u, double one_minus_u) {
  // -log t = alpha u + alpha (2 - alpha) u^2 / 2 + O(u^3); the series keeps
  // the sign where the log difference would cancel below double spacing.
  const double neg_log_t =
      u < 1e-8 ? p.alpha * u * (1.0 + 0.5 * u * (2.0 - p.alpha))
               : std::log1p((p.alpha - 1.0) * u) - std::log(one_minus_u);
  const double z = neg_log_t / p.k;  // log(1 + x^c)
  const double log_xc = z > 0.7 ? z + std::log1p(-std::exp(-z)) : std::log(std::expm1(z));
  return log_xc / p.c;
}

double quantile_split(const Params& p, double u, double one_minus_u) {
  return std::exp(log_quantile_split(p, u, one_minus_u));
}

}  // namespace

double quantile(const Params& p, double u) {
  if (!(u > 0.0) || !(u < 1.0)) throw std::domain_error("quantile: u must lie in (0,1)");
  return quantile_split(p, u, 1.0 - u);
}

double log_pdf(const Params& p, double x) {
  require_positive(x, "log_pdf");
  const Point pt = kernel(p, x);
  return std::log(p.alpha * p.c * p.k) + (p.c - 1.0) * pt.lx - (p.k + 1.0) * pt.q.lp -
         2.0 * pt.q.log_h;
}

ScoreVec score(const Params& p, double x) {
  require_positive(x, "score");
  const auto [lx, q] = kernel(p, x);
  const double xc_frac = std::exp(p.c * lx - q.lp);  // x^c / (1 + x^c)
  ScoreVec s;
  s.d_alpha = 1.0 / p.alpha - 2.0 * q.t / q.h;
  s.d_c = 1.0 / p.c + lx - (p.k + 1.0) * xc_frac * lx -
          2.0 * p.k * (1.0 - p.alpha) * xc_frac * q.t * lx / q.h;
  s.d_k = 1.0 / p.k - q.lp - 2.0 * (1.0 - p.alpha) * q.t * q.lp / q.h;
  return s;
}

namespace detail {

// The 7th-order smoothstep
//   phi(w)  = 35 w^4 - 84 w^5 + 70 w^6 - 20 w^7
//   phi'(w) = 140 w^3 (1-w)^3
// Composing the quantile substitution with phi removes the logarithmic
// endpoint growth of score-type integrands, restoring fast Gauss-Legendre
// convergence. phi and its complement are evaluated from whichever endpoint
// is nearer, so neither ever rounds to 0 or 1.
namespace {

double smooth_poly(double z) {
  return (((-20.0 * z + 70.0) * z - 84.0) * z + 35.0) * z * z * z * z;
}

}  // namespace

MappedU smooth_map(double w) {
  const double omw = 1.0 - w;
  const double jac = 140.0 * w * w * w * omw * omw * omw;
  if (w <= 0.5) {
    const double u = smooth_poly(w);
    return {u, 1.0 - u, jac};
  }
  const double comp = smooth_poly(omw);
  return {1.0 - comp, comp, jac};
}

double expectation_abscissa(const Params& p, const MappedU& m) {
  return std::exp(std::clamp(log_quantile_split(p, m.u, m.one_minus_u), -700.0, 700.0));
}

}  // namespace detail

ExpectationRule expectation_rule(const Params& p, int nodes) {
  const numkit::QuadRule& rule = numkit::gauss_legendre_01(nodes);
  ExpectationRule out;
  out.x.resize(rule.nodes.size());
  out.w.resize(rule.nodes.size());
  for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
    const detail::MappedU m = detail::smooth_map(rule.nodes[j]);
    out.x[j] = detail::expectation_abscissa(p, m);
    out.w[j] = rule.weights[j] * m.jacobian;
  }
  return out;
}

numkit::Matrix3 fisher_information(const Params& p, const numkit::QuadratureConfig& quad) {
  // Six independent entries of the symmetric matrix E[s s^T].
  auto integrand = [&p](double w, std::span<double> out) {
    const detail::MappedU m = detail::smooth_map(w);
    const double jac = m.jacobian;
    const ScoreVec s = score(p, detail::expectation_abscissa(p, m));
    out[0] = jac * s.d_alpha * s.d_alpha;
    out[1] = jac * s.d_alpha * s.d_c;
    out[2] = jac * s.d_alpha * s.d_k;
    out[3] = jac * s.d_c * s.d_c;
    out[4] = jac * s.d_c * s.d_k;
    out[5] = jac * s.d_k * s.d_k;
  };
  const std::vector<double> v = numkit::integrate01(integrand, 6, quad);
  numkit::Matrix3 j;
  j(0, 0) = v[0];
  j(0, 1) = j(1, 0) = v[1];
  j(0, 2) = j(2, 0) = v[2];
  j(1, 1) = v[3];
  j(1, 2) = j(2, 1) = v[4];
  j(2, 2) = v[5];
  return j;
}

Sample sample(const Params& p, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
  UnitUniformRng rng(seed);
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = quantile(p, rng.next());
  return Sample(std::move(xs));
}

}  // namespace moebxii
