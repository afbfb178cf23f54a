// Small self-contained numerics kernel: 3x3 linear algebra, Gauss-Legendre
// quadrature on the unit interval, and a derivative-free simplex minimizer.
#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace moebxii::numkit {

// Thrown when an iterative or direct numerical procedure cannot produce a
// result at the requested accuracy (as opposed to a caller error).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularMatrixError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NotPositiveDefiniteError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class QuadratureError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

struct Vec3 {
  std::array<double, 3> v{};

  double& operator[](int i) { return v[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return v[static_cast<std::size_t>(i)]; }
};

Vec3 operator+(const Vec3& a, const Vec3& b);
Vec3 operator-(const Vec3& a, const Vec3& b);
Vec3 operator*(double s, const Vec3& v);
double dot(const Vec3& a, const Vec3& b);
double norm(const Vec3& v);
double norm_inf(const Vec3& v);

// 3x3 matrix, row-major storage.
struct Matrix3 {
  std::array<double, 9> m{};

  double& operator()(int r, int c) { return m[static_cast<std::size_t>(3 * r + c)]; }
  double operator()(int r, int c) const { return m[static_cast<std::size_t>(3 * r + c)]; }

  static Matrix3 identity();
  static Matrix3 zero();
};

Matrix3 operator*(const Matrix3& a, const Matrix3& b);
Vec3 operator*(const Matrix3& a, const Vec3& v);
Matrix3 transpose(const Matrix3& a);
double max_abs(const Matrix3& a);
bool is_symmetric(const Matrix3& a, double rel_tol = 1e-10);

// Inverse by cofactor expansion. Throws SingularMatrixError when
// |det| <= 1e-14 * max|m_ij|^3.
Matrix3 invert3(const Matrix3& m);

// Lower-triangular Cholesky factor L with L*L^T = m.
// Throws NotPositiveDefiniteError when m is not symmetric positive definite.
Matrix3 sqrt_spd(const Matrix3& m);

// Solves m * x = b through invert3.
Vec3 solve3(const Matrix3& m, const Vec3& b);

struct QuadratureConfig {
  int nodes = 256;
  int refine_factor = 2;
  double tol = 1e-8;
};

struct OptimConfig {
  int max_iter = 2000;
  double f_tol = 1e-10;
  double x_tol = 1e-8;
  int restarts = 2;
};

struct MinimizeResult {
  Vec3 x{};
  double f = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Nelder-Mead simplex minimization of f over R^3. Restarts re-seed the
// simplex around the best point found so far with a shrinking scale.
// Non-convergence is reported through the flag; the best point seen is
// always returned. NaN objective values are treated as +infinity.
MinimizeResult minimize(const std::function<double(const Vec3&)>& f, const Vec3& x0,
                        const OptimConfig& cfg = {});

// Gauss-Legendre rule mapped to (0,1). Cached per node count; thread-safe.
struct QuadRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const QuadRule& gauss_legendre_01(int n);

// Integrates a vector-valued g over (0,1) with a single Gauss-Legendre rule
// of cfg.nodes points, then re-evaluates at cfg.refine_factor times as many
// points. Throws QuadratureError unless the two results agree to cfg.tol
// (mixed absolute/relative, per component). Returns the refined result.
using VectorIntegrand = std::function<void(double u, std::span<double> out)>;
std::vector<double> integrate01(const VectorIntegrand& g, std::size_t dim,
                                const QuadratureConfig& cfg = {});

}  // namespace moebxii::numkit
