// Command-line front-end: dataset fitting, random sampling, density export,
// and the Monte Carlo simulation driver.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "moebxii/estimators.hpp"
#include "moebxii/sim.hpp"

namespace {

using moebxii::Params;
using moebxii::Sample;
using moebxii::estimators::EstimationResult;
using moebxii::estimators::Method;
using json = nlohmann::ordered_json;

// Plain text dataset: one positive real per line, '#' starts a comment.
std::vector<double> read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  std::vector<double> values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double v;
    if (!(ls >> v)) continue;  // blank or comment-only line
    std::string rest;
    if (ls >> rest) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected one value per line");
    }
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": values must be positive");
    }
    values.push_back(v);
  }
  if (values.empty()) throw std::runtime_error(path + ": no observations found");
  return values;
}

int quad_nodes_from_env() {
  const char* env = std::getenv("MOEBXII_QUAD_NODES");
  if (env == nullptr) return 256;
  const int n = std::atoi(env);
  if (n < 16) throw std::runtime_error("MOEBXII_QUAD_NODES must be an integer >= 16");
  return n;
}

std::vector<Method> parse_methods(const std::string& csv) {
  std::vector<Method> out;
  std::istringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "ml") out.push_back(Method::ML);
    else if (tok == "ls") out.push_back(Method::LS);
    else if (tok == "m") out.push_back(Method::M_TUKEY);
    else if (tok == "obre") out.push_back(Method::OBRE);
    else throw std::runtime_error("unknown method '" + tok + "' (expected ml,ls,m,obre)");
  }
  if (out.empty()) throw std::runtime_error("no methods requested");
  return out;
}

// Mode of the fitted density by grid scan plus golden-section refinement.
struct Mode {
  double x;
  double density;
};

Mode density_mode(const Params& p, double x_max) {
  constexpr int kGrid = 512;
  double best_x = x_max / kGrid;
  double best_f = -1.0;
  if (p.c >= 1.0) {
    const double f0 = moebxii::pdf(p, 0.0);
    best_x = 0.0;
    best_f = f0;
  }
  for (int i = 1; i <= kGrid; ++i) {
    const double x = x_max * i / kGrid;
    const double f = moebxii::pdf(p, x);
    if (f > best_f) {
      best_f = f;
      best_x = x;
    }
  }
  if (best_x == 0.0) return {0.0, best_f};
  double lo = std::max(0.0, best_x - x_max / kGrid);
  double hi = std::min(x_max, best_x + x_max / kGrid);
  constexpr double kGolden = 0.6180339887498949;
  for (int i = 0; i < 60; ++i) {
    const double m1 = hi - kGolden * (hi - lo);
    const double m2 = lo + kGolden * (hi - lo);
    if (moebxii::pdf(p, m1) < moebxii::pdf(p, m2)) lo = m1; else hi = m2;
  }
  const double x = 0.5 * (lo + hi);
  return {x, moebxii::pdf(p, x)};
}

struct FitOutput {
  Method method;
  std::optional<EstimationResult> result;
  std::string error;
};

json result_to_json(const FitOutput& out, double x_max) {
  json j;
  j["method"] = moebxii::estimators::method_id(out.method);
  if (!out.result) {
    j["error"] = out.error;
    return j;
  }
  const EstimationResult& r = *out.result;
  j["alpha"] = r.params.alpha;
  j["c"] = r.params.c;
  j["k"] = r.params.k;
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  j["objective"] = r.objective;
  const Mode mode = density_mode(r.params, x_max);
  j["mode_x"] = mode.x;
  j["mode_pdf"] = std::isfinite(mode.density) ? json(mode.density) : json("inf");
  return j;
}

int cmd_fit(const std::string& input, const std::string& methods_csv, double c_b, double b,
            double tol, const std::string& density_out) {
  const std::vector<Method> methods = parse_methods(methods_csv);
  Sample data{read_dataset(input)};
  const double x_max = 1.05 * data.sorted().back();
  const int nodes = quad_nodes_from_env();

  const bool want_obre = std::count(methods.begin(), methods.end(), Method::OBRE) > 0;
  const bool want_m = std::count(methods.begin(), methods.end(), Method::M_TUKEY) > 0;

  std::vector<FitOutput> outputs;
  std::optional<EstimationResult> ml, ls;
  auto run = [&](Method m) -> FitOutput {
    FitOutput out{m, std::nullopt, ""};
    try {
      switch (m) {
        case Method::ML:
          if (!ml) ml = moebxii::estimators::fit_ml(data);
          out.result = *ml;
          break;
        case Method::LS:
          if (!ls) ls = moebxii::estimators::fit_ls(data);
          out.result = *ls;
          break;
        case Method::M_TUKEY: {
          if (!ls) ls = moebxii::estimators::fit_ls(data);
          moebxii::estimators::MEstConfig mc;
          mc.b = b;
          out.result = moebxii::estimators::fit_m_tukey(data, mc, ls->params);
          break;
        }
        case Method::OBRE: {
          // three-step protocol: ML start, OBRE, then OBRE again from the
          // first OBRE estimate
          if (!ml) ml = moebxii::estimators::fit_ml(data);
          moebxii::estimators::ObreConfig oc;
          oc.c_b = c_b;
          oc.tol = tol;
          oc.quad.nodes = nodes;
          const EstimationResult first = moebxii::estimators::fit_obre(data, oc, ml->params);
          out.result = moebxii::estimators::fit_obre(data, oc, first.params);
          break;
        }
      }
    } catch (const std::exception& e) {
      out.error = e.what();
    }
    return out;
  };
  // warm the shared dependencies in a deterministic order
  if (want_m) (void)0;
  if (want_obre) (void)0;
  for (Method m : methods) outputs.push_back(run(m));

  json report;
  report["input"] = input;
  report["n"] = data.size();
  {
    // Sturges' rule for the histogram bin count
    const int bins = static_cast<int>(std::ceil(std::log2(static_cast<double>(data.size())))) + 1;
    json hist;
    hist["bins"] = bins;
    hist["min"] = data.sorted().front();
    hist["max"] = data.sorted().back();
    report["histogram"] = hist;
  }
  json jm = json::array();
  for (const FitOutput& out : outputs) jm.push_back(result_to_json(out, x_max));
  report["methods"] = jm;
  std::cout << report.dump(2) << '\n';

  bool any_failed = false;
  for (const FitOutput& out : outputs) any_failed |= !out.result.has_value();

  if (!density_out.empty()) {
    std::ofstream os(density_out);
    if (!os) throw std::runtime_error("cannot write density file: " + density_out);
    os << "x";
    for (const FitOutput& out : outputs) {
      if (out.result) os << ',' << moebxii::estimators::method_id(out.method);
    }
    os << '\n';
    constexpr int kPoints = 512;
    bool include_zero = true;
    for (const FitOutput& out : outputs) {
      if (out.result && out.result->params.c < 1.0) include_zero = false;
    }
    for (int i = 0; i < kPoints; ++i) {
      const double x = include_zero ? x_max * i / (kPoints - 1) : x_max * (i + 1) / kPoints;
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.10g", x);
      os << buf;
      for (const FitOutput& out : outputs) {
        if (!out.result) continue;
        std::snprintf(buf, sizeof(buf), "%.10g", moebxii::pdf(out.result->params, x));
        os << ',' << buf;
      }
      os << '\n';
    }
  }
  return any_failed ? 1 : 0;
}

int cmd_sample(double alpha, double c, double k, int n, std::uint64_t seed,
               const std::string& out_path) {
  const Params p(alpha, c, k);
  const Sample s = moebxii::sample(p, static_cast<std::size_t>(n), seed);
  std::ofstream os(out_path);
  if (!os) throw std::runtime_error("cannot write output file: " + out_path);
  for (double v : s.values()) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf << '\n';
  }
  return 0;
}

struct SimulateArgs {
  bool paper_grid = false;
  double alpha = 3, c = 1, k = 1;
  int n = 25;
  int outliers = 0;
  int replications = 100;
  std::uint64_t seed = 20240601;
  int jobs = 1;
  std::string out_path;
};

int cmd_simulate(const SimulateArgs& args) {
  std::vector<moebxii::sim::Scenario> scenarios;
  const int nodes = quad_nodes_from_env();
  if (args.paper_grid) {
    const double grid[9][3] = {{3, 1, 1}, {3, 1, 2}, {3, 2, 1}, {3, 2, 2}, {3, 3, 3},
                               {5, 1, 1}, {5, 1, 2}, {5, 2, 1}, {5, 2, 2}};
    const int sizes[3] = {25, 50, 100};
    const int outliers_for[3] = {1, 2, 4};
    for (int si = 0; si < 3; ++si) {
      for (const auto& g : grid) {
        moebxii::sim::Scenario sc{Params(g[0], g[1], g[2]), sizes[si]};
        sc.n_outliers = outliers_for[si];
        sc.replications = args.replications;
        sc.seed = args.seed;
        sc.quad_nodes = nodes;
        scenarios.push_back(sc);
      }
    }
  } else {
    moebxii::sim::Scenario sc{Params(args.alpha, args.c, args.k), args.n};
    sc.n_outliers = args.outliers;
    sc.replications = args.replications;
    sc.seed = args.seed;
    sc.quad_nodes = nodes;
    scenarios.push_back(sc);
  }

  std::vector<std::pair<moebxii::sim::Scenario, std::vector<moebxii::sim::MetricRow>>> results;
  for (const auto& sc : scenarios) {
    results.emplace_back(sc, moebxii::sim::run_scenario(sc, args.jobs));
  }

  std::ostringstream csv;
  moebxii::sim::write_csv_header(csv);
  for (const auto& [sc, rows] : results) moebxii::sim::write_csv_rows(csv, sc, rows);

  if (!args.out_path.empty()) {
    std::ofstream os(args.out_path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write output file: " + args.out_path);
    os << csv.str();
    moebxii::sim::write_table(std::cout, results);
  } else {
    std::cout << csv.str();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Marshall-Olkin extended Burr XII fitting, sampling, and simulation"};
  app.require_subcommand(1);

  auto* fit = app.add_subcommand("fit", "Fit a dataset and emit a JSON report");
  std::string fit_input, fit_methods = "ml,ls,m,obre", fit_density_out;
  double fit_cb = 3.0, fit_b = 1.345, fit_tol = 1e-6;
  fit->add_option("--input", fit_input, "dataset file, one positive value per line")->required();
  fit->add_option("--methods", fit_methods, "comma list from: ml,ls,m,obre");
  fit->add_option("--cb", fit_cb, "OBRE influence bound (>= sqrt(3))");
  fit->add_option("--b", fit_b, "Tukey tuning constant");
  fit->add_option("--tol", fit_tol, "OBRE precision threshold");
  fit->add_option("--density-out", fit_density_out, "CSV of fitted density curves");

  auto* smp = app.add_subcommand("sample", "Draw random variates to a file");
  double s_alpha = 1, s_c = 1, s_k = 1;
  int s_n = 0;
  std::uint64_t s_seed = 1;
  std::string s_out;
  smp->add_option("--alpha", s_alpha, "tilt parameter")->required();
  smp->add_option("--c", s_c, "first shape parameter")->required();
  smp->add_option("--k", s_k, "second shape parameter")->required();
  smp->add_option("--n", s_n, "number of draws")->required()->check(CLI::PositiveNumber);
  smp->add_option("--seed", s_seed, "RNG seed");
  smp->add_option("--out", s_out, "output file")->required();

  auto* sim = app.add_subcommand("simulate", "Bias/RMSE study over replicated samples");
  SimulateArgs sim_args;
  sim->add_flag("--paper-grid", sim_args.paper_grid,
                "run the nine parameter triples at n=25/50/100 with 1/2/4 outliers");
  sim->add_option("--alpha", sim_args.alpha, "true tilt parameter");
  sim->add_option("--c", sim_args.c, "true first shape parameter");
  sim->add_option("--k", sim_args.k, "true second shape parameter");
  sim->add_option("--n", sim_args.n, "sample size");
  sim->add_option("--outliers", sim_args.outliers, "outlier count per sample");
  sim->add_option("--replications", sim_args.replications, "Monte Carlo replications");
  sim->add_option("--seed", sim_args.seed, "base RNG seed");
  sim->add_option("--jobs", sim_args.jobs, "worker threads")->check(CLI::PositiveNumber);
  sim->add_option("--out", sim_args.out_path, "CSV output path (table goes to stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fit) return cmd_fit(fit_input, fit_methods, fit_cb, fit_b, fit_tol, fit_density_out);
    if (*smp) return cmd_sample(s_alpha, s_c, s_k, s_n, s_seed, s_out);
    if (*sim) return cmd_simulate(sim_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
