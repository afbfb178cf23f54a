// The four fitting procedures: maximum likelihood, transformed least
// squares, Tukey-weighted M-estimation, and the standardized optimal
// B-robust estimator (OBRE).
#pragma once

#include <optional>
#include <vector>

#include "moebxii/dist.hpp"
#include "moebxii/numkit.hpp"

namespace moebxii::estimators {

enum class Method { ML, LS, M_TUKEY, OBRE };

// Short machine id ("ml", "ls", "m", "obre") and table label ("ML", ...).
const char* method_id(Method m);
const char* method_label(Method m);

// Raised when every Tukey weight vanishes (all residuals beyond the tuning
// constant), so the M-estimation equations carry no information.
class AllWeightsZeroError : public numkit::NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Raised when a sample has no spread at all (every observation equal).
class DegenerateSampleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct EstimationResult {
  Params params;
  Method method;
  bool converged;
  int iterations;
  double objective;  // final log-likelihood (ML) or final objective value
};

// The least-squares transformation: y_(i) = log(1/(1 - (i-0.5)/n)) against
// ascending observations. The model counterpart u_(i) is computed on demand.
struct TransformedSample {
  std::vector<double> x_sorted;
  std::vector<double> y;

  static TransformedSample from(const Sample& s);
  std::vector<double> model_u(const Params& p) const;
};

struct MEstConfig {
  double b = 1.345;  // robustness tuning constant
  int max_iter = 500;
  double tol = 1e-8;
};

struct ObreConfig {
  double c_b = 3.0;  // IF bound; must be >= sqrt(3)
  double tol = 1e-6;
  int max_outer = 200;
  int max_inner = 100;
  numkit::QuadratureConfig quad{};
};

// Scaling matrix A (with A^T A = M2^{-1}), centering vector a, and the
// parameter value they were solved at.
struct ObreState {
  numkit::Matrix3 A;
  numkit::Vec3 a;
  Params theta;
};

struct ObreWeight {
  double weight;        // min(1, c_B / ||A (s - a)||), in [0,1]
  numkit::Vec3 psi;     // weight * (s - a)
};

// Maximizes the log-likelihood over log-parameters with the simplex
// minimizer. The converged flag additionally requires the three score sums
// at the optimum to vanish to 1e-4 * n.
EstimationResult fit_ml(const Sample& s, const numkit::OptimConfig& cfg = {});

// Minimizes S = sum (y_(i) - u_(i))^2 directly; the gradient sums serve as
// a convergence diagnostic.
EstimationResult fit_ls(const Sample& s, const numkit::OptimConfig& cfg = {});

// Iterates the weighted fixed-point equations for (k, log alpha) jointly
// and the c-equation by bracketed bisection on log c, with Tukey weights
// refreshed every sweep. Throws AllWeightsZeroError when no observation
// retains positive weight.
EstimationResult fit_m_tukey(const Sample& s, const MEstConfig& cfg, const Params& init);

ObreWeight obre_weights(const ObreState& st, double x, double c_b);

// Expectation quadrature with segment boundaries at the truncation
// crossings ||A (s - a)|| = c_b of the given state. The OBRE integrands are
// only piecewise smooth there; splitting keeps Gauss-Legendre at full
// accuracy.
ExpectationRule obre_rule(const ObreState& st, double c_b, int nodes);

// Fixed-point solve of A^T A = M2^{-1} and the centering identity
// E[W (s - a)] = 0 at fixed theta, warm-started when a previous state is
// supplied. Throws on inner non-convergence or singular M2.
ObreState obre_solve_Aa(const Params& theta, double c_b, const ObreConfig& cfg,
                        const std::optional<ObreState>& warm = std::nullopt);

// Outer OBRE iteration: delta = M1^{-1} * mean(W (s_i - a)), with step
// halving to keep parameters positive and the empirical Psi-norm from
// growing. Numerical failures are reported through the converged flag.
EstimationResult fit_obre(const Sample& s, const ObreConfig& cfg, const Params& init);

}  // namespace moebxii::estimators
