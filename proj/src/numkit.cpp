#include "moebxii/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>

namespace moebxii::numkit {

Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3 operator*(double s, const Vec3& v) { return {s * v[0], s * v[1], s * v[2]}; }
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
double norm_inf(const Vec3& v) {
  return std::max({std::fabs(v[0]), std::fabs(v[1]), std::fabs(v[2])});
}

bool operator==(const Vec3& a, const Vec3& b) { return a.v == b.v; }

Matrix3 Matrix3::identity() {
  Matrix3 r;
  r(0, 0) = r(1, 1) = r(2, 2) = 1.0;
  return r;
}

Matrix3 Matrix3::zero() { return Matrix3{}; }

Matrix3 operator*(const Matrix3& a, const Matrix3& b) {
  Matrix3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += a(i, k) * b(k, j);
      r(i, j) = s;
    }
  return r;
}

Vec3 operator*(const Matrix3& a, const Vec3& v) {
  Vec3 r{};
  for (int i = 0; i < 3; ++i) r[i] = a(i, 0) * v[0] + a(i, 1) * v[1] + a(i, 2) * v[2];
  return r;
}

Matrix3 transpose(const Matrix3& a) {
  Matrix3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = a(j, i);
  return r;
}

double max_abs(const Matrix3& a) {
  double m = 0.0;
  for (double v : a.m) m = std::max(m, std::fabs(v));
  return m;
}

bool is_symmetric(const Matrix3& a, double rel_tol) {
  const double scale = std::max(max_abs(a), 1e-300);
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      if (std::fabs(a(i, j) - a(j, i)) > rel_tol * scale) return false;
  return true;
}

Matrix3 invert3(const Matrix3& a) {
  const double det = a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
                     a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
                     a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
  const double scale = max_abs(a);
  if (!(std::fabs(det) > 1e-14 * scale * scale * scale)) {
    throw SingularMatrixError("invert3: matrix is singular to working precision");
  }
  Matrix3 r;
  r(0, 0) = (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) / det;
  r(0, 1) = (a(0, 2) * a(2, 1) - a(0, 1) * a(2, 2)) / det;
  r(0, 2) = (a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1)) / det;
  r(1, 0) = (a(1, 2) * a(2, 0) - a(1, 0) * a(2, 2)) / det;
  r(1, 1) = (a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0)) / det;
  r(1, 2) = (a(0, 2) * a(1, 0) - a(0, 0) * a(1, 2)) / det;
  r(2, 0) = (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0)) / det;
  r(2, 1) = (a(0, 1) * a(2, 0) - a(0, 0) * a(2, 1)) / det;
  r(2, 2) = (a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0)) / det;
  return r;
}

Matrix3 sqrt_spd(const Matrix3& m) {
  if (!is_symmetric(m, 1e-8)) {
    throw NotPositiveDefiniteError("sqrt_spd: matrix is not symmetric");
  }
  Matrix3 l = Matrix3::zero();
  for (int j = 0; j < 3; ++j) {
    double d = m(j, j);
    for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) {
      throw NotPositiveDefiniteError("sqrt_spd: matrix is not positive definite");
    }
    l(j, j) = std::sqrt(d);
    for (int i = j + 1; i < 3; ++i) {
      double s = m(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

Vec3 solve3(const Matrix3& m, const Vec3& b) { return invert3(m) * b; }

namespace {

double clean(double v) { return std::isnan(v) ? std::numeric_limits<double>::infinity() : v; }

struct SimplexPoint {
  Vec3 x;
  double f;
};

// One Nelder-Mead pass; returns true when both the f-spread and the simplex
// diameter fell under the configured tolerances.
bool nelder_mead_pass(const std::function<double(const Vec3&)>& f, SimplexPoint& best,
                      double scale, const OptimConfig& cfg, int& evals) {
  constexpr double kReflect = 1.0;
  constexpr double kExpand = 2.0;
  constexpr double kContract = 0.5;
  constexpr double kShrink = 0.5;

  std::array<SimplexPoint, 4> s;
  s[0] = best;
  for (int i = 0; i < 3; ++i) {
    Vec3 x = best.x;
    x[i] += scale * std::max(1.0, std::fabs(x[i]));
    s[static_cast<std::size_t>(i + 1)] = {x, clean(f(x))};
    ++evals;
  }

  auto order = [&s]() {
    std::stable_sort(s.begin(), s.end(),
                     [](const SimplexPoint& a, const SimplexPoint& b) { return a.f < b.f; });
  };
  auto centroid = [&s]() {
    Vec3 c{};
    for (int i = 0; i < 3; ++i)
      for (int d = 0; d < 3; ++d) c[d] += s[static_cast<std::size_t>(i)].x[d] / 3.0;
    return c;
  };

  bool converged = false;
  for (int it = 0; it < cfg.max_iter; ++it) {
    order();
    const double fspread = s[3].f - s[0].f;
    double diam = 0.0;
    for (int i = 1; i < 4; ++i)
      diam = std::max(diam, norm_inf(s[static_cast<std::size_t>(i)].x - s[0].x));
    if (fspread <= cfg.f_tol * (1.0 + std::fabs(s[0].f)) &&
        diam <= cfg.x_tol * (1.0 + norm_inf(s[0].x))) {
      converged = true;
      break;
    }

    const Vec3 c = centroid();
    const Vec3 xr = c + kReflect * (c - s[3].x);
    const double fr = clean(f(xr));
    ++evals;
    if (fr < s[0].f) {
      const Vec3 xe = c + kExpand * (xr - c);
      const double fe = clean(f(xe));
      ++evals;
      s[3] = fe < fr ? SimplexPoint{xe, fe} : SimplexPoint{xr, fr};
    } else if (fr < s[2].f) {
      s[3] = {xr, fr};
    } else {
      const Vec3 base = fr < s[3].f ? xr : s[3].x;
      const double fbase = std::min(fr, s[3].f);
      const Vec3 xc = c + kContract * (base - c);
      const double fc = clean(f(xc));
      ++evals;
      if (fc < fbase) {
        s[3] = {xc, fc};
      } else {
        for (int i = 1; i < 4; ++i) {
          auto& p = s[static_cast<std::size_t>(i)];
          p.x = s[0].x + kShrink * (p.x - s[0].x);
          p.f = clean(f(p.x));
          ++evals;
        }
      }
    }
  }
  order();
  if (s[0].f <= best.f) best = s[0];
  return converged;
}

}  // namespace

MinimizeResult minimize(const std::function<double(const Vec3&)>& f, const Vec3& x0,
                        const OptimConfig& cfg) {
  if (!(cfg.f_tol > 0.0) || !(cfg.x_tol > 0.0) || cfg.max_iter < 1 || cfg.restarts < 0) {
    throw std::invalid_argument("minimize: invalid OptimConfig");
  }
  SimplexPoint best{x0, clean(f(x0))};
  if (std::isinf(best.f)) {
    throw std::invalid_argument("minimize: objective not finite at starting point");
  }
  int evals = 1;
  bool converged = false;
  double scale = 0.5;
  for (int pass = 0; pass <= cfg.restarts; ++pass) {
    converged = nelder_mead_pass(f, best, scale, cfg, evals);
    scale *= 0.25;
  }
  return {best.x, best.f, converged, evals};
}

namespace {

// Nodes and weights of the n-point Gauss-Legendre rule on (-1,1) by Newton
// iteration on the Legendre polynomial recurrence.
QuadRule compute_gauss_legendre(int n) {
  QuadRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 64; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[static_cast<std::size_t>(i)] = -x;
    rule.weights[static_cast<std::size_t>(i)] = w;
    rule.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
    rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
  }
  // map to (0,1)
  for (int i = 0; i < n; ++i) {
    rule.nodes[static_cast<std::size_t>(i)] = 0.5 * (rule.nodes[static_cast<std::size_t>(i)] + 1.0);
    rule.weights[static_cast<std::size_t>(i)] *= 0.5;
  }
  return rule;
}

}  // namespace

const QuadRule& gauss_legendre_01(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre_01: node count must be positive");
  static std::mutex mu;
  static std::map<int, QuadRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_gauss_legendre(n)).first;
  return it->second;
}

std::vector<double> integrate01(const VectorIntegrand& g, std::size_t dim,
                                const QuadratureConfig& cfg) {
  if (cfg.nodes < 16 || cfg.refine_factor < 2 || !(cfg.tol > 0.0)) {
    throw std::invalid_argument("integrate01: invalid QuadratureConfig");
  }
  auto eval = [&](int n) {
    const QuadRule& rule = gauss_legendre_01(n);
    std::vector<double> acc(dim, 0.0);
    std::vector<double> out(dim);
    for (int j = 0; j < n; ++j) {
      g(rule.nodes[static_cast<std::size_t>(j)], out);
      const double w = rule.weights[static_cast<std::size_t>(j)];
      for (std::size_t d = 0; d < dim; ++d) {
        if (!std::isfinite(out[d])) {
          throw QuadratureError("integrate01: integrand not finite at interior node");
        }
        acc[d] += w * out[d];
      }
    }
    return acc;
  };
  const std::vector<double> coarse = eval(cfg.nodes);
  const std::vector<double> fine = eval(cfg.nodes * cfg.refine_factor);
  for (std::size_t d = 0; d < dim; ++d) {
    if (std::fabs(fine[d] - coarse[d]) > cfg.tol * std::max(1.0, std::fabs(fine[d]))) {
      throw QuadratureError("integrate01: refinement did not converge to tolerance");
    }
  }
  return fine;
}

}  // namespace moebxii::numkit
