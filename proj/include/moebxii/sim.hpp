// Monte Carlo contamination harness: draws replicated samples, injects
// outliers, runs the requested estimators, and reduces per-parameter bias
// and RMSE tables.
#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "moebxii/estimators.hpp"

namespace moebxii::sim {

struct Scenario {
  Params truth;
  int n;
  int n_outliers = 0;
  int replications = 100;
  std::uint64_t seed = 0;
  std::vector<estimators::Method> methods = {estimators::Method::ML, estimators::Method::LS,
                                             estimators::Method::M_TUKEY,
                                             estimators::Method::OBRE};
  double c_b = 3.0;     // OBRE influence bound
  double b = 1.345;     // Tukey tuning constant
  int quad_nodes = 256;
};

struct MetricRow {
  estimators::Method estimator;
  std::array<double, 3> bias{};   // per parameter: alpha, c, k
  std::array<double, 3> rmse{};
  int failure_count = 0;
};

// Replaces the last m values (in generation order) with five times the
// maximum of the original sample.
Sample inject_outliers(const Sample& s, int m);

struct BiasRmse {
  std::array<double, 3> bias{};
  std::array<double, 3> rmse{};
};

// Mean error and root-mean-square error per parameter over the supplied
// estimates. Throws std::invalid_argument when empty.
BiasRmse bias_rmse(const std::vector<Params>& estimates, const Params& truth);

// Runs every replication (optionally across `jobs` threads; results are
// reduced in replication order, so the output does not depend on
// scheduling) and returns one row per requested estimator.
std::vector<MetricRow> run_scenario(const Scenario& sc, int jobs = 1);

// Compact id used in CSV output, e.g. "a3_c1_k1_n25_out1".
std::string scenario_id(const Scenario& sc);

// CSV: header "scenario,estimator,parameter,bias,rmse,failures", one row per
// estimator x parameter, '.' decimal separator, LF line endings.
void write_csv_header(std::ostream& os);
void write_csv_rows(std::ostream& os, const Scenario& sc, const std::vector<MetricRow>& rows);

// Aligned human-readable table: one block per parameter, one line per
// scenario, estimator columns formatted "bias (rmse)".
void write_table(std::ostream& os,
                 const std::vector<std::pair<Scenario, std::vector<MetricRow>>>& results);

}  // namespace moebxii::sim
