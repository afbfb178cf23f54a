#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "moebxii/dist.hpp"

using namespace moebxii;
using numkit::Matrix3;

namespace {

const double kGridAlpha[3] = {0.5, 1.0, 3.0};
const double kGridC[3] = {0.8, 1.0, 2.5};
const double kGridK[3] = {0.5, 1.0, 3.0};
const double kAbscissae[10] = {0.05, 0.2, 0.5, 0.8, 1.0, 1.5, 2.0, 5.0, 20.0, 200.0};

// The nine simulation-study parameter triples.
const double kStudyGrid[9][3] = {{3, 1, 1}, {3, 1, 2}, {3, 2, 1}, {3, 2, 2}, {3, 3, 3},
                                 {5, 1, 1}, {5, 1, 2}, {5, 2, 1}, {5, 2, 2}};

}  // namespace

TEST_CASE("Params rejects non-positive values") {
  CHECK_THROWS_AS(Params(0.0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(Params(1.0, -1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(Params(1.0, 1.0, 0.0), std::invalid_argument);
  CHECK_NOTHROW(Params(1e-8, 1e8, 2.0));
}

TEST_CASE("Sample validates and sorts") {
  CHECK_THROWS_AS(Sample(std::vector<double>{}), std::invalid_argument);
  CHECK_THROWS_AS(Sample({1.0, -0.5}), std::invalid_argument);
  const Sample s({3.0, 1.0, 2.0});
  CHECK(s.values() == std::vector<double>{3.0, 1.0, 2.0});
  CHECK(s.sorted() == std::vector<double>{1.0, 2.0, 3.0});
}

TEST_CASE("pdf: hand-evaluated points and the support boundary") {
  CHECK(pdf(Params(1, 2, 3), 0.0) == 0.0);
  CHECK(pdf(Params(2, 1, 1), 1.0) == doctest::Approx(2.0 / 9.0).epsilon(1e-14));
  CHECK(pdf(Params(1, 2, 1), 1.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(pdf(Params(3, 1, 2), 0.0) == doctest::Approx(2.0 / 3.0));  // c = 1: ck/alpha
  CHECK_THROWS_AS((void)pdf(Params(1, 1, 1), -0.1), std::domain_error);
  CHECK_THROWS_AS((void)pdf(Params(1, 0.5, 1), 0.0), std::domain_error);
}

TEST_CASE("cdf: hand-evaluated points, monotone, limits") {
  const Params p(2, 1, 1);
  CHECK(cdf(p, 0.0) == 0.0);
  CHECK(cdf(p, 1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(cdf(Params(1, 2, 2), 1.0) == doctest::Approx(0.75).epsilon(1e-14));
  double prev = 0.0;
  for (double x = 0.0; x < 50.0; x += 0.25) {
    const double f = cdf(p, x);
    CHECK(f >= prev);
    prev = f;
  }
  CHECK(cdf(p, 1e12) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS((void)cdf(p, -1.0), std::domain_error);
}

TEST_CASE("survival: complements the cdf") {
  const Params p(2, 1, 1);
  CHECK(survival(p, 0.0) == 1.0);
  CHECK(survival(p, 1.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  for (const auto& g : kStudyGrid) {
    const Params q(g[0], g[1], g[2]);
    for (double x : kAbscissae) {
      CHECK(std::fabs(survival(q, x) - (1.0 - cdf(q, x))) < 1e-12);
    }
  }
  // alpha = 1 recovers the baseline survival (1+x^c)^{-k}
  const Params base(1, 2, 3);
  for (double x : kAbscissae) {
    CHECK(survival(base, x) ==
          doctest::Approx(std::pow(1.0 + x * x, -3.0)).epsilon(1e-12));
  }
}

TEST_CASE("quantile: hand values, edges, and domain errors") {
  CHECK(quantile(Params(1, 1, 1), 0.5) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(quantile(Params(2, 1, 1), 1.0 / 3.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(quantile(Params(3, 2, 2), 1e-14) < 1e-6);  // left support edge
  CHECK_THROWS_AS((void)quantile(Params(1, 1, 1), 0.0), std::domain_error);
  CHECK_THROWS_AS((void)quantile(Params(1, 1, 1), 1.0), std::domain_error);
}

TEST_CASE("cdf of quantile is the identity over the study grid") {
  for (const auto& g : kStudyGrid) {
    const Params p(g[0], g[1], g[2]);
    for (int i = 1; i <= 99; ++i) {
      const double u = i / 100.0;
      CHECK(std::fabs(cdf(p, quantile(p, u)) - u) < 1e-10);
    }
    for (double x : kAbscissae) {
      // the round trip is only as precise as u's floating-point spacing
      const double u = cdf(p, x);
      if (u > 1e-12 && 1.0 - u > 1e-9) {
        CHECK(std::fabs(quantile(p, u) - x) < 1e-8 * std::max(1.0, x));
      }
    }
  }
}

TEST_CASE("pdf is the derivative of cdf") {
  for (const auto& g : kStudyGrid) {
    const Params p(g[0], g[1], g[2]);
    for (double x : {0.2, 0.5, 1.0, 2.0, 4.0}) {
      const double h = 1e-6 * std::max(1.0, x);
      const double fd = (cdf(p, x + h) - cdf(p, x - h)) / (2.0 * h);
      CHECK(std::fabs(fd - pdf(p, x)) < 1e-6 * std::max(1.0, std::fabs(fd)));
    }
  }
}

TEST_CASE("alpha = 1 collapses to Burr XII closed forms") {
  for (double c : {0.8, 1.0, 2.0, 3.5}) {
    for (double k : {0.5, 1.0, 2.0}) {
      const Params p(1.0, c, k);
      for (double x : kAbscissae) {
        const double xc = std::pow(x, c);
        const double burr_pdf = c * k * std::pow(x, c - 1.0) * std::pow(1.0 + xc, -(k + 1.0));
        const double burr_cdf = 1.0 - std::pow(1.0 + xc, -k);
        CHECK(std::fabs(pdf(p, x) - burr_pdf) <= 1e-12 * std::max(1.0, burr_pdf));
        CHECK(std::fabs(cdf(p, x) - burr_cdf) <= 1e-12);
      }
    }
  }
}

TEST_CASE("log_pdf agrees with pdf") {
  CHECK(log_pdf(Params(2, 1, 1), 1.0) == doctest::Approx(std::log(2.0 / 9.0)).epsilon(1e-14));
  for (const auto& g : kStudyGrid) {
    const Params p(g[0], g[1], g[2]);
    for (double x : kAbscissae) {
      const double f = pdf(p, x);
      if (f > 1e-300) CHECK(std::fabs(std::exp(log_pdf(p, x)) - f) <= 1e-12 * f);
    }
  }
  CHECK_THROWS_AS((void)log_pdf(Params(1, 1, 1), 0.0), std::domain_error);
}

TEST_CASE("score: hand value at (2,1,1), x=1") {
  const ScoreVec s = score(Params(2, 1, 1), 1.0);
  CHECK(s.d_alpha == doctest::Approx(-1.0 / 6.0).epsilon(1e-13));
}

TEST_CASE("score matches finite differences of log_pdf over the grid") {
  for (double a : kGridAlpha) {
    for (double c : kGridC) {
      for (double k : kGridK) {
        const Params p(a, c, k);
        for (double x : kAbscissae) {
          const ScoreVec s = score(p, x);
          const double sv[3] = {s.d_alpha, s.d_c, s.d_k};
          const double pv[3] = {a, c, k};
          for (int d = 0; d < 3; ++d) {
            const double eps = 1e-6 * pv[d];
            double lo[3] = {a, c, k}, hi[3] = {a, c, k};
            lo[d] -= eps;
            hi[d] += eps;
            const double fd = (log_pdf(Params(hi[0], hi[1], hi[2]), x) -
                               log_pdf(Params(lo[0], lo[1], lo[2]), x)) /
                              (2.0 * eps);
            CHECK(std::fabs(sv[d] - fd) <= 1e-6 * std::max(1.0, std::fabs(fd)));
          }
        }
      }
    }
  }
}

TEST_CASE("score has zero mean under the model (Monte Carlo)") {
  const Params p(3, 2, 2);
  const std::size_t n = 100000;
  const Sample xs = sample(p, n, 987654321);
  double mean[3] = {0, 0, 0}, sq[3] = {0, 0, 0};
  for (double x : xs.values()) {
    const ScoreVec s = score(p, x);
    const double v[3] = {s.d_alpha, s.d_c, s.d_k};
    for (int d = 0; d < 3; ++d) {
      mean[d] += v[d] / static_cast<double>(n);
      sq[d] += v[d] * v[d] / static_cast<double>(n);
    }
  }
  for (int d = 0; d < 3; ++d) {
    const double se = std::sqrt((sq[d] - mean[d] * mean[d]) / static_cast<double>(n));
    CHECK(std::fabs(mean[d]) < 3.0 * se);
  }
}

TEST_CASE("density integrates to one over the study grid") {
  // Independent of the quantile substitution: map x = v/(1-v).
  numkit::QuadratureConfig cfg;
  cfg.nodes = 512;
  cfg.tol = 1e-9;
  for (const auto& g : kStudyGrid) {
    const Params p(g[0], g[1], g[2]);
    auto integrand = [&p](double v, std::span<double> out) {
      const double x = v / (1.0 - v);
      out[0] = pdf(p, x) / ((1.0 - v) * (1.0 - v));
    };
    const double total = numkit::integrate01(integrand, 1, cfg)[0];
    CHECK(std::fabs(total - 1.0) < 1e-8);
  }
}

TEST_CASE("fisher information: symmetric, positive definite, node-stable") {
  for (const auto& g : kStudyGrid) {
    const Params p(g[0], g[1], g[2]);
    const Matrix3 j = fisher_information(p);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) CHECK(j(r, c) == j(c, r));
    // leading principal minors
    const double m1 = j(0, 0);
    const double m2 = j(0, 0) * j(1, 1) - j(0, 1) * j(1, 0);
    const double m3 = j(0, 0) * (j(1, 1) * j(2, 2) - j(1, 2) * j(2, 1)) -
                      j(0, 1) * (j(1, 0) * j(2, 2) - j(1, 2) * j(2, 0)) +
                      j(0, 2) * (j(1, 0) * j(2, 1) - j(1, 1) * j(2, 0));
    CHECK(m1 > 0.0);
    CHECK(m2 > 0.0);
    CHECK(m3 > 0.0);
  }
  // doubling the node count moves no entry beyond the quadrature tolerance
  const Params p(3, 2, 2);
  numkit::QuadratureConfig coarse, fine;
  fine.nodes = 2 * coarse.nodes;
  const Matrix3 a = fisher_information(p, coarse);
  const Matrix3 b = fisher_information(p, fine);
  for (int i = 0; i < 9; ++i) CHECK(std::fabs(a.m[i] - b.m[i]) < 1e-7);
}

TEST_CASE("fisher information tracks the Monte Carlo outer product") {
  const Params p(3, 2, 2);
  const Matrix3 j = fisher_information(p);
  const std::size_t n = 200000;
  const Sample xs = sample(p, n, 24680);
  Matrix3 mc = Matrix3::zero();
  for (double x : xs.values()) {
    const ScoreVec s = score(p, x);
    const double v[3] = {s.d_alpha, s.d_c, s.d_k};
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) mc(r, c) += v[r] * v[c] / static_cast<double>(n);
  }
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      const double scale = std::sqrt(j(r, r) * j(c, c));
      CHECK(std::fabs(mc(r, c) - j(r, c)) < 0.05 * scale);
    }
}

TEST_CASE("sample: deterministic per seed, distinct across seeds") {
  const Params p(3, 1, 1);
  const Sample a = sample(p, 500, 41);
  const Sample b = sample(p, 500, 41);
  const Sample c = sample(p, 500, 42);
  CHECK(a.values() == b.values());
  CHECK(a.values() != c.values());
}

TEST_CASE("sample: Kolmogorov-Smirnov against the cdf") {
  const Params p(3, 2, 2);
  const std::size_t n = 10000;
  const Sample s = sample(p, n, 1360);
  double dmax = 0.0;
  const auto& xs = s.sorted();
  for (std::size_t i = 0; i < n; ++i) {
    const double f = cdf(p, xs[i]);
    const double lo = static_cast<double>(i) / static_cast<double>(n);
    const double hi = static_cast<double>(i + 1) / static_cast<double>(n);
    dmax = std::max({dmax, std::fabs(f - lo), std::fabs(f - hi)});
  }
  CHECK(dmax < 1.358 / std::sqrt(static_cast<double>(n)));  // 95% band
}

TEST_CASE("expectation rule reproduces plain expectations") {
  const Params p(3, 2, 2);
  const ExpectationRule rule = expectation_rule(p, 256);
  double total = 0.0, mean_cdf = 0.0;
  for (std::size_t i = 0; i < rule.x.size(); ++i) {
    total += rule.w[i];
    mean_cdf += rule.w[i] * cdf(p, rule.x[i]);
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));       // E[1]
  CHECK(mean_cdf == doctest::Approx(0.5).epsilon(1e-10));    // E[F(X)] = 1/2
}
