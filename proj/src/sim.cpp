#include "moebxii/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>

namespace moebxii::sim {

namespace {

using estimators::EstimationResult;
using estimators::Method;

// splitmix64 step; decorrelates per-replication seeds derived from a base
// seed and a counter.
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t replication_seed(std::uint64_t base, int r) {
  return mix64(base ^ mix64(static_cast<std::uint64_t>(r) + 1));
}

struct RepOutcome {
  // One optional estimate per method slot (ML, LS, M, OBRE); empty when the
  // fit failed or did not converge.
  std::array<std::optional<Params>, 4> estimate;
};

int slot(Method m) { return static_cast<int>(m); }

RepOutcome run_replication(const Scenario& sc, int r) {
  RepOutcome out;
  const Sample clean = sample(sc.truth, static_cast<std::size_t>(sc.n),
                              replication_seed(sc.seed, r));
  const Sample data = inject_outliers(clean, sc.n_outliers);

  const bool want_ml = std::count(sc.methods.begin(), sc.methods.end(), Method::ML) > 0;
  const bool want_ls = std::count(sc.methods.begin(), sc.methods.end(), Method::LS) > 0;
  const bool want_m = std::count(sc.methods.begin(), sc.methods.end(), Method::M_TUKEY) > 0;
  const bool want_obre = std::count(sc.methods.begin(), sc.methods.end(), Method::OBRE) > 0;

  std::optional<Params> ml_params;   // initialization chain: OBRE starts at ML
  std::optional<Params> ls_params;   // and M starts at LS
  if (want_ml || want_obre) {
    try {
      const EstimationResult res = estimators::fit_ml(data);
      ml_params = res.params;
      if (want_ml && res.converged) out.estimate[slot(Method::ML)] = res.params;
    } catch (const std::exception&) {
    }
  }
  if (want_ls || want_m) {
    try {
      const EstimationResult res = estimators::fit_ls(data);
      ls_params = res.params;
      if (want_ls && res.converged) out.estimate[slot(Method::LS)] = res.params;
    } catch (const std::exception&) {
    }
  }
  if (want_m) {
    estimators::MEstConfig mc;
    mc.b = sc.b;
    const Params init = ls_params ? *ls_params : Params(1, 1, 1);
    try {
      const EstimationResult res = estimators::fit_m_tukey(data, mc, init);
      if (res.converged) out.estimate[slot(Method::M_TUKEY)] = res.params;
    } catch (const std::exception&) {
    }
  }
  if (want_obre) {
    estimators::ObreConfig oc;
    oc.c_b = sc.c_b;
    oc.quad.nodes = sc.quad_nodes;
    const Params init = ml_params ? *ml_params : Params(1, 1, 1);
    try {
      const EstimationResult res = estimators::fit_obre(data, oc, init);
      if (res.converged) out.estimate[slot(Method::OBRE)] = res.params;
    } catch (const std::exception&) {
    }
  }
  return out;
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

Sample inject_outliers(const Sample& s, int m) {
  if (m < 0 || static_cast<std::size_t>(m) >= s.size()) {
    throw std::invalid_argument("inject_outliers: outlier count must satisfy 0 <= m < n");
  }
  std::vector<double> values = s.values();
  if (m > 0) {
    const double repl = 5.0 * *std::max_element(values.begin(), values.end());
    for (std::size_t i = values.size() - static_cast<std::size_t>(m); i < values.size(); ++i) {
      values[i] = repl;
    }
  }
  return Sample(std::move(values));
}

BiasRmse bias_rmse(const std::vector<Params>& estimates, const Params& truth) {
  if (estimates.empty()) throw std::invalid_argument("bias_rmse: no estimates");
  BiasRmse out;
  const double n = static_cast<double>(estimates.size());
  const std::array<double, 3> t{truth.alpha, truth.c, truth.k};
  for (const Params& p : estimates) {
    const std::array<double, 3> e{p.alpha, p.c, p.k};
    for (int d = 0; d < 3; ++d) {
      const double err = e[static_cast<std::size_t>(d)] - t[static_cast<std::size_t>(d)];
      out.bias[static_cast<std::size_t>(d)] += err / n;
      out.rmse[static_cast<std::size_t>(d)] += err * err / n;
    }
  }
  for (int d = 0; d < 3; ++d) {
    out.rmse[static_cast<std::size_t>(d)] = std::sqrt(out.rmse[static_cast<std::size_t>(d)]);
  }
  return out;
}

std::vector<MetricRow> run_scenario(const Scenario& sc, int jobs) {
  if (sc.n < 1 || sc.replications < 1 || sc.n_outliers < 0 || sc.n_outliers >= sc.n) {
    throw std::invalid_argument("run_scenario: invalid scenario");
  }
  const int reps = sc.replications;
  std::vector<RepOutcome> outcomes(static_cast<std::size_t>(reps));

  if (jobs <= 1) {
    for (int r = 0; r < reps; ++r) outcomes[static_cast<std::size_t>(r)] = run_replication(sc, r);
  } else {
    std::atomic<int> next{0};
    auto worker = [&]() {
      for (;;) {
        const int r = next.fetch_add(1);
        if (r >= reps) return;
        outcomes[static_cast<std::size_t>(r)] = run_replication(sc, r);
      }
    };
    std::vector<std::thread> pool;
    const int nthreads = std::min(jobs, reps);
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  std::vector<MetricRow> rows;
  for (const Method m : sc.methods) {
    std::vector<Params> good;
    int failures = 0;
    for (const RepOutcome& o : outcomes) {
      const auto& est = o.estimate[static_cast<std::size_t>(slot(m))];
      if (est) {
        good.push_back(*est);
      } else {
        ++failures;
      }
    }
    MetricRow row;
    row.estimator = m;
    row.failure_count = failures;
    if (!good.empty()) {
      const BiasRmse br = bias_rmse(good, sc.truth);
      row.bias = br.bias;
      row.rmse = br.rmse;
    } else {
      row.bias = {std::nan(""), std::nan(""), std::nan("")};
      row.rmse = {std::nan(""), std::nan(""), std::nan("")};
    }
    rows.push_back(row);
  }
  return rows;
}

std::string scenario_id(const Scenario& sc) {
  std::ostringstream os;
  os << "a" << format_number(sc.truth.alpha) << "_c" << format_number(sc.truth.c) << "_k"
     << format_number(sc.truth.k) << "_n" << sc.n << "_out" << sc.n_outliers;
  return os.str();
}

void write_csv_header(std::ostream& os) { os << "scenario,estimator,parameter,bias,rmse,failures\n"; }

void write_csv_rows(std::ostream& os, const Scenario& sc, const std::vector<MetricRow>& rows) {
  static const char* param_names[3] = {"alpha", "c", "k"};
  const std::string id = scenario_id(sc);
  for (const MetricRow& row : rows) {
    for (int d = 0; d < 3; ++d) {
      os << id << ',' << estimators::method_id(row.estimator) << ',' << param_names[d] << ','
         << format_number(row.bias[static_cast<std::size_t>(d)]) << ','
         << format_number(row.rmse[static_cast<std::size_t>(d)]) << ',' << row.failure_count
         << '\n';
    }
  }
}

void write_table(std::ostream& os,
                 const std::vector<std::pair<Scenario, std::vector<MetricRow>>>& results) {
  static const char* param_names[3] = {"alpha", "c", "k"};
  if (results.empty()) return;
  const auto& methods = results.front().first.methods;

  for (int d = 0; d < 3; ++d) {
    os << "Parameter " << param_names[d] << '\n';
    char head[256];
    int off = std::snprintf(head, sizeof(head), "%-24s", "scenario");
    for (const auto m : methods) {
      off += std::snprintf(head + off, sizeof(head) - static_cast<std::size_t>(off), " %-20s",
                           estimators::method_label(m));
    }
    os << head << '\n';
    for (const auto& [sc, rows] : results) {
      char label[64];
      std::snprintf(label, sizeof(label), "(%g,%g,%g) n=%d m=%d", sc.truth.alpha, sc.truth.c,
                    sc.truth.k, sc.n, sc.n_outliers);
      char line[512];
      off = std::snprintf(line, sizeof(line), "%-24s", label);
      for (const MetricRow& row : rows) {
        char cell[64];
        std::snprintf(cell, sizeof(cell), "%.4f (%.4f)", row.bias[static_cast<std::size_t>(d)],
                      row.rmse[static_cast<std::size_t>(d)]);
        off += std::snprintf(line + off, sizeof(line) - static_cast<std::size_t>(off), " %-20s",
                             cell);
      }
      os << line << '\n';
    }
    os << '\n';
  }
}

}  // namespace moebxii::sim
