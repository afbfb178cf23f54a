// Marshall-Olkin extended Burr XII distribution: density, distribution
// function, quantile, sampling, per-observation score, and Fisher
// information by quadrature.
#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "moebxii/numkit.hpp"

namespace moebxii {

// Parameter triple (alpha, c, k), all strictly positive. alpha is the
// Marshall-Olkin tilt; alpha = 1 recovers the plain Burr XII distribution.
struct Params {
  double alpha;
  double c;
  double k;

  Params(double alpha_, double c_, double k_);
};

// Ordered collection of non-negative observations. Keeps both the original
// generation order and an ascending copy (needed for plotting positions).
class Sample {
 public:
  explicit Sample(std::vector<double> values);

  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& sorted() const { return sorted_; }
  std::size_t size() const { return values_.size(); }

 private:
  std::vector<double> values_;
  std::vector<double> sorted_;
};

// Per-observation gradient of log f with respect to (alpha, c, k).
struct ScoreVec {
  double d_alpha;
  double d_c;
  double d_k;

  numkit::Vec3 vec() const { return {d_alpha, d_c, d_k}; }
};

double pdf(const Params& p, double x);
double cdf(const Params& p, double x);
double survival(const Params& p, double x);
double quantile(const Params& p, double u);
double log_pdf(const Params& p, double x);
ScoreVec score(const Params& p, double x);

// Fisher information J = E[s s^T], computed as an integral over (0,1) via
// the quantile substitution. Symmetric by construction; throws
// QuadratureError if the refine-and-compare check fails.
numkit::Matrix3 fisher_information(const Params& p, const numkit::QuadratureConfig& quad = {});

// n inverse-transform draws; deterministic for a fixed seed.
Sample sample(const Params& p, std::size_t n, std::uint64_t seed);

// Abscissae x_j and weights w_j such that sum_j w_j g(x_j) approximates
// E[g(X)]. The unit-interval nodes pass through a polynomial map that
// flattens both endpoints before the quantile substitution, so smooth
// integrands with logarithmic tail growth converge at full rate.
struct ExpectationRule {
  std::vector<double> x;
  std::vector<double> w;
};
ExpectationRule expectation_rule(const Params& p, int nodes);

namespace detail {

// log(1 + e^z) without overflow.
double log1p_exp(double z);

// Building blocks shared by density, score, and estimating equations, for
// an observation given as lx = log x:
//   lp = log(1 + x^c), t = (1 + x^c)^{-k}, h = 1 - (1 - alpha) t.
struct Kernel {
  double lp, t, h, log_h;
};
Kernel kernel_at_log(const Params& p, double lx);

// Endpoint-flattening map used by the expectation rules, with the
// complement carried separately so extreme nodes never round to 0 or 1.
struct MappedU {
  double u, one_minus_u, jacobian;
};
MappedU smooth_map(double w);

// Quantile at a mapped node, clamped to the representable range so score
// evaluations stay finite even for degenerate parameter values.
double expectation_abscissa(const Params& p, const MappedU& m);

}  // namespace detail

// Uniform deviates in (0,1) from a 64-bit Mersenne Twister; the stream is a
// pure function of the seed. Values are built from the top 53 bits so they
// never touch either endpoint.
class UnitUniformRng {
 public:
  explicit UnitUniformRng(std::uint64_t seed) : eng_(seed) {}

  double next() {
    return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace moebxii
