#include "moebxii/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace moebxii::estimators {

namespace {

using numkit::Matrix3;
using numkit::Vec3;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Nelder-Mead searches over log-parameters inside this box; outside it the
// objective is +inf. e^40 keeps every kernel quantity representable.
constexpr double kNmLogBox = 40.0;

// The fixed-point estimators iterate inside a tighter box; a trajectory
// pinned to its boundary is reported as non-converged.
const double kFixedPointLogBox = std::log(1e4);

void check_sample(const Sample& s, const char* fn) {
  if (s.size() < 4) {
    throw std::invalid_argument(std::string(fn) + ": need at least 4 observations");
  }
  if (!(s.sorted().front() > 0.0)) {
    throw std::invalid_argument(std::string(fn) + ": observations must be > 0");
  }
}

bool in_box(const Vec3& lt, double box) {
  return std::fabs(lt[0]) <= box && std::fabs(lt[1]) <= box && std::fabs(lt[2]) <= box;
}

Vec3 clamp_log(const Vec3& lt, double box) {
  return {std::clamp(lt[0], -box, box), std::clamp(lt[1], -box, box),
          std::clamp(lt[2], -box, box)};
}

Params params_from_log(const Vec3& lt) {
  return Params(std::exp(lt[0]), std::exp(lt[1]), std::exp(lt[2]));
}

Vec3 log_of(const Params& p) { return {std::log(p.alpha), std::log(p.c), std::log(p.k)}; }

std::vector<double> logs_of(const std::vector<double>& xs) {
  std::vector<double> l(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) l[i] = std::log(xs[i]);
  return l;
}

}  // namespace

const char* method_id(Method m) {
  switch (m) {
    case Method::ML: return "ml";
    case Method::LS: return "ls";
    case Method::M_TUKEY: return "m";
    case Method::OBRE: return "obre";
  }
  return "?";
}

const char* method_label(Method m) {
  switch (m) {
    case Method::ML: return "ML";
    case Method::LS: return "LS";
    case Method::M_TUKEY: return "M (Tukey)";
    case Method::OBRE: return "OBR";
  }
  return "?";
}

TransformedSample TransformedSample::from(const Sample& s) {
  if (!(s.sorted().front() > 0.0)) {
    throw std::invalid_argument("TransformedSample: observations must be > 0");
  }
  TransformedSample ts;
  ts.x_sorted = s.sorted();
  const double n = static_cast<double>(s.size());
  ts.y.resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    // y_(i) = log(1 / (1 - (i - 0.5)/n))
    ts.y[i] = -std::log1p(-(static_cast<double>(i) + 0.5) / n);
  }
  return ts;
}

std::vector<double> TransformedSample::model_u(const Params& p) const {
  std::vector<double> u(x_sorted.size());
  const double la = std::log(p.alpha);
  for (std::size_t i = 0; i < x_sorted.size(); ++i) {
    const detail::Kernel q = detail::kernel_at_log(p, std::log(x_sorted[i]));
    u[i] = p.k * q.lp - la + q.log_h;
  }
  return u;
}

EstimationResult fit_ml(const Sample& s, const numkit::OptimConfig& cfg) {
  check_sample(s, "fit_ml");
  if (s.sorted().front() == s.sorted().back()) {
    throw DegenerateSampleError("fit_ml: sample has no spread");
  }
  const std::vector<double> lxs = logs_of(s.sorted());
  const double n = static_cast<double>(s.size());
  double sum_lx = 0.0;
  for (double lx : lxs) sum_lx += lx;

  auto nll = [&](const Vec3& lt) -> double {
    if (!in_box(lt, kNmLogBox)) return kInf;
    const double a = std::exp(lt[0]), c = std::exp(lt[1]), k = std::exp(lt[2]);
    double acc_lp = 0.0, acc_lh = 0.0;
    for (double lx : lxs) {
      const double lp = detail::log1p_exp(c * lx);
      acc_lp += lp;
      acc_lh += std::log1p((a - 1.0) * std::exp(-k * lp));
    }
    const double ll =
        n * (lt[0] + lt[1] + lt[2]) + (c - 1.0) * sum_lx - (k + 1.0) * acc_lp - 2.0 * acc_lh;
    return std::isfinite(ll) ? -ll : kInf;
  };

  const numkit::MinimizeResult r = numkit::minimize(nll, {0.0, 0.0, 0.0}, cfg);
  const Params p = params_from_log(r.x);

  Vec3 score_sum{};
  for (double x : s.sorted()) {
    const ScoreVec sc = score(p, x);
    score_sum = score_sum + sc.vec();
  }
  const bool stationary = numkit::norm_inf(score_sum) < 1e-4 * n;
  return {p, Method::ML, r.converged && stationary, r.iterations, -r.f};
}

EstimationResult fit_ls(const Sample& s, const numkit::OptimConfig& cfg) {
  check_sample(s, "fit_ls");
  const TransformedSample ts = TransformedSample::from(s);
  const std::vector<double> lxs = logs_of(ts.x_sorted);
  const double n = static_cast<double>(s.size());

  auto obj = [&](const Vec3& lt) -> double {
    if (!in_box(lt, kNmLogBox)) return kInf;
    const Params p = params_from_log(lt);
    double acc = 0.0;
    for (std::size_t i = 0; i < lxs.size(); ++i) {
      const detail::Kernel q = detail::kernel_at_log(p, lxs[i]);
      const double r = ts.y[i] - (p.k * q.lp - lt[0] + q.log_h);
      acc += r * r;
    }
    return std::isfinite(acc) ? acc : kInf;
  };

  const numkit::MinimizeResult r = numkit::minimize(obj, {0.0, 0.0, 0.0}, cfg);
  const Params p = params_from_log(r.x);

  // Gradient sums of the objective (the normal equations at the optimum),
  // used purely as a convergence diagnostic.
  double d_alpha = 0.0, d_c = 0.0, d_k = 0.0;
  for (std::size_t i = 0; i < lxs.size(); ++i) {
    const detail::Kernel q = detail::kernel_at_log(p, lxs[i]);
    const double res = ts.y[i] - (p.k * q.lp - std::log(p.alpha) + q.log_h);
    const double xc_frac = std::exp(p.c * lxs[i] - q.lp);
    d_alpha += res * (1.0 - q.t) / (p.alpha * q.h);
    d_c += res * p.k * xc_frac * lxs[i] / q.h;
    d_k += res * q.lp / q.h;
  }
  const bool stationary = std::max({std::fabs(d_alpha), std::fabs(d_c), std::fabs(d_k)}) < 1e-4 * n;
  return {p, Method::LS, r.converged && stationary, r.iterations, r.f};
}

namespace {

// Tukey rho: 1 - (1 - (r/b)^2)^2 inside the tuning constant, 1 beyond it.
double tukey_rho(double r, double b) {
  if (std::fabs(r) > b) return 1.0;
  const double z = 1.0 - (r / b) * (r / b);
  return 1.0 - z * z;
}

double tukey_weight(double r, double b) {
  if (std::fabs(r) > b) return 0.0;
  const double z = 1.0 - (r / b) * (r / b);
  return z * z;
}

struct MEquationTerms {
  std::vector<double> lp, t, h, log_h;
};

MEquationTerms equation_terms(const Params& p, const std::vector<double>& lxs) {
  MEquationTerms e;
  const std::size_t n = lxs.size();
  e.lp.resize(n);
  e.t.resize(n);
  e.h.resize(n);
  e.log_h.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const detail::Kernel q = detail::kernel_at_log(p, lxs[i]);
    e.lp[i] = q.lp;
    e.t[i] = q.t;
    e.h[i] = q.h;
    e.log_h[i] = q.log_h;
  }
  return e;
}

}  // namespace

EstimationResult fit_m_tukey(const Sample& s, const MEstConfig& cfg, const Params& init) {
  check_sample(s, "fit_m_tukey");
  if (!(cfg.b > 0.0) || !(cfg.tol > 0.0) || cfg.max_iter < 1) {
    throw std::invalid_argument("fit_m_tukey: invalid MEstConfig");
  }
  const TransformedSample ts = TransformedSample::from(s);
  const std::vector<double> lxs = logs_of(ts.x_sorted);
  const std::size_t n = s.size();

  Vec3 cur_log = clamp_log(log_of(init), kFixedPointLogBox);
  auto rho_at = [&](const Params& p) {
    const std::vector<double> u = ts.model_u(p);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += tukey_rho(ts.y[i] - u[i], cfg.b);
    return acc;
  };

  // One sweep of the estimating equations: the k-ratio and the log(alpha)
  // average are the stationarity of the same weighted residual under two
  // weightings, solved simultaneously as a 2x2 linear system (the cyclic
  // variant is unstable, see ledger); then the c-equation by bracketed
  // bisection on log c. Weights are frozen at the entry parameters. The
  // returned step is clipped to 0.7 per component in log space.
  auto sweep = [&](const Vec3& at_log) -> Vec3 {
    const Params cur = params_from_log(at_log);
    const MEquationTerms e = equation_terms(cur, lxs);
    std::vector<double> w(n);
    double w_total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = ts.y[i] - (cur.k * e.lp[i] - at_log[0] + e.log_h[i]);
      w[i] = tukey_weight(r, cfg.b);
      w_total += w[i];
    }
    if (w_total == 0.0) {
      throw AllWeightsZeroError("fit_m_tukey: every residual exceeds the tuning constant");
    }

    double a11 = 0.0, a12 = 0.0, b1 = 0.0, a21 = 0.0, a22 = 0.0, b2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double w1 = w[i] * e.lp[i] / e.h[i];
      const double w2 = w[i] * (1.0 - e.t[i]) / (cur.alpha * e.h[i]);
      const double rhs = ts.y[i] - e.log_h[i];
      a11 += w1 * e.lp[i];
      a12 -= w1;
      b1 += w1 * rhs;
      a21 += w2 * e.lp[i];
      a22 -= w2;
      b2 += w2 * rhs;
    }
    const double det = a11 * a22 - a12 * a21;
    double k_new = cur.k, la_new = at_log[0];
    if (std::fabs(det) > 1e-12 * std::max(1.0, std::fabs(a11 * a22))) {
      const double k_cand = (b1 * a22 - a12 * b2) / det;
      const double la_cand = (a11 * b2 - b1 * a21) / det;
      if (k_cand > 0.0 && std::isfinite(la_cand)) {
        k_new = k_cand;
        la_new = std::clamp(la_cand, -kFixedPointLogBox, kFixedPointLogBox);
      }
    }
    const double alpha_new = std::exp(la_new);

    // stationarity in c with the gradient weight k x^c log x / ((1+x^c) h)
    auto c_equation = [&](double c_try) -> double {
      const Params pt(alpha_new, c_try, k_new);
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const detail::Kernel q = detail::kernel_at_log(pt, lxs[i]);
        const double res = ts.y[i] - (k_new * q.lp - la_new + q.log_h);
        const double xc_frac = std::exp(c_try * lxs[i] - q.lp);
        acc += w[i] * res * k_new * xc_frac * lxs[i] / q.h;
      }
      return acc;
    };
    double c_new = cur.c;
    {
      double lo = at_log[1] - 2.0, hi = at_log[1] + 2.0;
      double g_lo = c_equation(std::exp(lo)), g_hi = c_equation(std::exp(hi));
      for (int widen = 0; widen < 3 && g_lo * g_hi > 0.0; ++widen) {
        lo -= 2.0;
        hi += 2.0;
        g_lo = c_equation(std::exp(lo));
        g_hi = c_equation(std::exp(hi));
      }
      if (g_lo * g_hi <= 0.0) {
        for (int b = 0; b < 100 && hi - lo > 1e-13; ++b) {
          const double mid = 0.5 * (lo + hi);
          const double g_mid = c_equation(std::exp(mid));
          if (g_lo * g_mid <= 0.0) {
            hi = mid;
            g_hi = g_mid;
          } else {
            lo = mid;
            g_lo = g_mid;
          }
        }
        c_new = std::exp(0.5 * (lo + hi));
      }
    }

    const Vec3 cand_log{la_new, std::log(c_new), std::log(k_new)};
    Vec3 out;
    for (int d = 0; d < 3; ++d) {
      out[d] = std::clamp(at_log[d] + std::clamp(cand_log[d] - at_log[d], -0.7, 0.7),
                          -kFixedPointLogBox, kFixedPointLogBox);
    }
    return out;
  };

  auto raw_delta = [](const Vec3& from_log, const Vec3& to_log) {
    const Params a = params_from_log(from_log);
    const Params b = params_from_log(to_log);
    return std::max(
        {std::fabs(a.alpha - b.alpha), std::fabs(a.c - b.c), std::fabs(a.k - b.k)});
  };

  bool converged = false;
  int it = 0;
  Vec3 hist[3] = {cur_log, cur_log, cur_log};
  for (it = 1; it <= cfg.max_iter; ++it) {
    const Vec3 next_log = sweep(cur_log);
    const double delta = raw_delta(cur_log, next_log);
    hist[0] = hist[1];
    hist[1] = hist[2];
    hist[2] = next_log;
    cur_log = next_log;
    if (delta < cfg.tol) {
      const bool on_box = std::max({std::fabs(cur_log[0]), std::fabs(cur_log[1]),
                                    std::fabs(cur_log[2])}) >= kFixedPointLogBox - 1e-9;
      converged = !on_box;
      break;
    }
    // Aitken extrapolation of the slow linear mode, kept only when it
    // shrinks the sweep residual
    if (it % 3 == 0 && it >= 3) {
      Vec3 extrap = cur_log;
      bool usable = false;
      for (int d = 0; d < 3; ++d) {
        const double d1 = hist[1][d] - hist[0][d];
        const double d2 = hist[2][d] - 2.0 * hist[1][d] + hist[0][d];
        if (std::fabs(d2) > 1e-14) {
          extrap[d] = std::clamp(hist[0][d] - d1 * d1 / d2, -kFixedPointLogBox,
                                 kFixedPointLogBox);
          usable = true;
        }
      }
      if (usable) {
        try {
          const double res_cur = raw_delta(cur_log, sweep(cur_log));
          const double res_ext = raw_delta(extrap, sweep(extrap));
          if (res_ext < res_cur) {
            cur_log = extrap;
            hist[0] = hist[1] = hist[2] = cur_log;
          }
        } catch (const AllWeightsZeroError&) {
          // extrapolated point is unusable; keep the sweep iterate
        }
      }
    }
  }

  const Params final_p = params_from_log(cur_log);
  return {final_p, Method::M_TUKEY, converged, std::min(it, cfg.max_iter), rho_at(final_p)};
}

namespace {

void check_obre_config(const ObreConfig& cfg) {
  if (!(cfg.c_b >= std::sqrt(3.0))) {
    throw std::invalid_argument("ObreConfig: c_b must be >= sqrt(3)");
  }
  if (!(cfg.tol > 0.0) || cfg.max_outer < 1 || cfg.max_inner < 1) {
    throw std::invalid_argument("ObreConfig: invalid tolerances or iteration limits");
  }
}

double truncation_weight(const Matrix3& A, const Vec3& d, double c_b) {
  const double nrm = numkit::norm(A * d);
  return nrm <= c_b ? 1.0 : c_b / nrm;
}

// Expectation nodes with the score evaluated once per node.
struct ScoredRule {
  ExpectationRule rule;
  std::vector<Vec3> s;

  static ScoredRule from(const Params& theta, ExpectationRule r) {
    ScoredRule sr;
    sr.rule = std::move(r);
    sr.s.resize(sr.rule.x.size());
    for (std::size_t j = 0; j < sr.rule.x.size(); ++j) {
      sr.s[j] = score(theta, sr.rule.x[j]).vec();
    }
    return sr;
  }
};

// w-positions where ||A (s(Q(phi(w))) - a)|| crosses c_b, located by
// bisection between scout nodes.
std::vector<double> truncation_breakpoints(const Params& theta, const Matrix3& A, const Vec3& a,
                                           double c_b) {
  auto excess = [&](double w) {
    const detail::MappedU m = detail::smooth_map(w);
    const double x = detail::expectation_abscissa(theta, m);
    return numkit::norm(A * (score(theta, x).vec() - a)) - c_b;
  };
  constexpr int kScout = 128;
  std::vector<double> breaks;
  double w_prev = 1e-9;
  double f_prev = excess(w_prev);
  for (int i = 1; i <= kScout; ++i) {
    const double w = i == kScout ? 1.0 - 1e-9 : static_cast<double>(i) / kScout;
    const double f = excess(w);
    if ((f_prev <= 0.0) != (f <= 0.0)) {
      double lo = w_prev, hi = w, f_lo = f_prev;
      for (int b = 0; b < 60; ++b) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = excess(mid);
        if ((f_lo <= 0.0) != (f_mid <= 0.0)) {
          hi = mid;
        } else {
          lo = mid;
          f_lo = f_mid;
        }
      }
      breaks.push_back(0.5 * (lo + hi));
      if (breaks.size() >= 8) break;
    }
    w_prev = w;
    f_prev = f;
  }
  return breaks;
}

// Piecewise Gauss-Legendre over (0,1) with the given interior breakpoints,
// composed with the endpoint map and the quantile substitution.
ExpectationRule split_expectation_rule(const Params& theta, const std::vector<double>& breaks,
                                       int nodes) {
  std::vector<double> edges{0.0};
  edges.insert(edges.end(), breaks.begin(), breaks.end());
  edges.push_back(1.0);
  ExpectationRule out;
  for (std::size_t seg = 0; seg + 1 < edges.size(); ++seg) {
    const double lo = edges[seg], hi = edges[seg + 1];
    const int seg_nodes =
        std::max(24, static_cast<int>(std::ceil(nodes * (hi - lo))));
    const numkit::QuadRule& rule = numkit::gauss_legendre_01(seg_nodes);
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      const double w = lo + (hi - lo) * rule.nodes[j];
      const detail::MappedU m = detail::smooth_map(w);
      out.x.push_back(detail::expectation_abscissa(theta, m));
      out.w.push_back((hi - lo) * rule.weights[j] * m.jacobian);
    }
  }
  return out;
}

ObreState solve_Aa_impl(const Params& theta, double c_b, const ObreConfig& cfg,
                        const std::optional<ObreState>& warm) {
  Matrix3 A;
  Vec3 a{};
  Matrix3 ata;
  if (warm) {
    A = warm->A;
    a = warm->a;
    ata = numkit::transpose(A) * A;
  } else {
    // fisher information over the unsplit rule (the score outer product is
    // smooth, so no truncation breakpoints are involved)
    const ScoredRule sr = ScoredRule::from(theta, expectation_rule(theta, cfg.quad.nodes));
    Matrix3 j = Matrix3::zero();
    for (std::size_t q = 0; q < sr.rule.x.size(); ++q) {
      const Vec3& sv = sr.s[q];
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) j(r, c) += sr.rule.w[q] * sv[r] * sv[c];
    }
    ata = numkit::invert3(j);
    A = numkit::transpose(numkit::sqrt_spd(ata));  // A^T A = J^{-1}
  }

  for (int inner = 0; inner < cfg.max_inner; ++inner) {
    const ScoredRule sr = ScoredRule::from(
        theta,
        split_expectation_rule(theta, truncation_breakpoints(theta, A, a, c_b), cfg.quad.nodes));
    const std::size_t m = sr.rule.x.size();

    Vec3 num{};
    double den = 0.0;
    for (std::size_t q = 0; q < m; ++q) {
      const double wt = sr.rule.w[q] * truncation_weight(A, sr.s[q] - a, c_b);
      num = num + wt * sr.s[q];
      den += wt;
    }
    if (!(den > 0.0)) throw numkit::NumericalError("obre_solve_Aa: zero total weight");
    const Vec3 a_new = (1.0 / den) * num;

    Matrix3 m2 = Matrix3::zero();
    for (std::size_t q = 0; q < m; ++q) {
      const Vec3 d = sr.s[q] - a_new;
      const double wq = truncation_weight(A, d, c_b);
      const double w = sr.rule.w[q] * wq * wq;
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m2(r, c) += w * d[r] * d[c];
    }
    const Matrix3 ata_new = numkit::invert3(m2);
    const Matrix3 A_new = numkit::transpose(numkit::sqrt_spd(ata_new));

    const double delta_a = numkit::norm_inf(a_new - a);
    double delta_ata = 0.0;
    for (std::size_t i = 0; i < 9; ++i) {
      delta_ata = std::max(delta_ata, std::fabs(ata_new.m[i] - ata.m[i]));
    }
    delta_ata /= 1.0 + numkit::max_abs(ata_new);
    A = A_new;
    a = a_new;
    ata = ata_new;
    if (std::max(delta_a, delta_ata) < cfg.tol) return {A, a, theta};
  }
  throw numkit::NumericalError("obre_solve_Aa: fixed point did not converge");
}

}  // namespace

ObreWeight obre_weights(const ObreState& st, double x, double c_b) {
  const Vec3 d = score(st.theta, x).vec() - st.a;
  const double w = truncation_weight(st.A, d, c_b);
  return {w, w * d};
}

ExpectationRule obre_rule(const ObreState& st, double c_b, int nodes) {
  return split_expectation_rule(st.theta,
                                truncation_breakpoints(st.theta, st.A, st.a, c_b), nodes);
}

ObreState obre_solve_Aa(const Params& theta, double c_b, const ObreConfig& cfg,
                        const std::optional<ObreState>& warm) {
  check_obre_config(cfg);
  return solve_Aa_impl(theta, c_b, cfg, warm);
}

EstimationResult fit_obre(const Sample& s, const ObreConfig& cfg, const Params& init) {
  check_sample(s, "fit_obre");
  check_obre_config(cfg);
  const std::vector<double>& xs = s.sorted();
  const double n = static_cast<double>(s.size());

  // Wildly off initial values (ML on contaminated small samples can run off
  // along the flat alpha ridge) make the starting Fisher information
  // numerically singular; pull them into a generous box first.
  Params theta(std::clamp(init.alpha, 1e-3, 1e3), std::clamp(init.c, 1e-3, 1e3),
               std::clamp(init.k, 1e-3, 1e3));

  // Empirical mean of W (s_i - a) at the given parameters, with the
  // truncation geometry (A, a) held fixed.
  auto empirical_psi = [&](const Params& p, const ObreState& st) -> Vec3 {
    Vec3 acc{};
    for (double x : xs) {
      const Vec3 d = score(p, x).vec() - st.a;
      acc = acc + truncation_weight(st.A, d, cfg.c_b) * d;
    }
    return (1.0 / n) * acc;
  };

  std::optional<ObreState> warm;
  bool failed = false;
  bool converged = false;
  double psi_norm = kInf;
  int it = 0;
  for (it = 1; it <= cfg.max_outer; ++it) {
    ObreState st{Matrix3::identity(), {}, theta};
    try {
      st = solve_Aa_impl(theta, cfg.c_b, cfg, warm);
    } catch (const numkit::NumericalError&) {
      if (!warm) {
        failed = true;
        break;
      }
      try {
        st = solve_Aa_impl(theta, cfg.c_b, cfg, std::nullopt);
      } catch (const numkit::NumericalError&) {
        failed = true;
        break;
      }
    }
    warm = st;

    const ScoredRule sr = ScoredRule::from(theta, obre_rule(st, cfg.c_b, cfg.quad.nodes));
    Matrix3 m1 = Matrix3::zero();
    for (std::size_t q = 0; q < sr.rule.x.size(); ++q) {
      const Vec3 d = sr.s[q] - st.a;
      const double w = sr.rule.w[q] * truncation_weight(st.A, d, cfg.c_b);
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m1(r, c) += w * d[r] * d[c];
    }
    const Vec3 z = empirical_psi(theta, st);
    psi_norm = numkit::norm(z);

    Vec3 delta;
    try {
      delta = numkit::solve3(m1, z);
    } catch (const numkit::SingularMatrixError&) {
      failed = true;
      break;
    }
    if (numkit::norm(delta) <= cfg.tol) {
      converged = true;
      break;
    }

    // Keep any single step below a 50% relative parameter change.
    const Vec3 th{theta.alpha, theta.c, theta.k};
    double scale = 1.0;
    for (int d = 0; d < 3; ++d) {
      if (std::fabs(delta[d]) > 0.5 * th[d]) scale = std::min(scale, 0.5 * th[d] / std::fabs(delta[d]));
    }
    Vec3 step = scale * delta;
    Params next = theta;
    for (int halve = 0; halve <= 10; ++halve) {
      const Vec3 cand{th[0] + step[0], th[1] + step[1], th[2] + step[2]};
      if (cand[0] > 0.0 && cand[1] > 0.0 && cand[2] > 0.0) {
        const Params cand_p(cand[0], cand[1], cand[2]);
        if (halve == 10 || numkit::norm(empirical_psi(cand_p, st)) <= psi_norm) {
          next = cand_p;
          break;
        }
      }
      step = 0.5 * step;
    }
    theta = next;
  }

  return {theta, Method::OBRE, converged && !failed, std::min(it, cfg.max_outer), psi_norm};
}

}  // namespace moebxii::estimators
