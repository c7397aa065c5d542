#pragma once

#include "locpoly/scenario.hpp"
#include "locpoly/uib_scan.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace locpoly {

//! Lower end a_n of the scanned bandwidth range.
enum class FloorRule
{
  //! c log(n) / n, the dyadic grid start.
  Log,
  //! c (log(n)/n)^gamma.
  Power,
  //! c log(n)^2 / n, which satisfies n a_n / log n -> infinity.
  LogSquared
};

std::string to_string(FloorRule r);
FloorRule parse_floor_rule(const std::string& text);

struct ScanConfig
{
  std::string kernel = "uniform";
  std::vector<Target> targets{ Target::kde() };
  CenteringKind centering = CenteringKind::Expectation;
  double c = 1.0;
  double h0 = 0.25;
  FloorRule floor = FloorRule::Log;
  //! Exponent for FloorRule::Power; defaults to the scenario's floor exponent.
  std::optional<double> gamma;
  //! Optional upper end b_n = upper_scale * n^-upper_exponent; without it
  //! the grid stops at 2 h0.
  std::optional<double> upper_scale;
  double upper_exponent = 0.2;
  std::size_t xgrid_points = 401;
};

//! Bandwidths scanned for sample size n.
BandwidthGrid study_grid(const ScanConfig& cfg, const Scenario& scenario, std::size_t n);

struct StudyFailure
{
  int replicate = 0;
  std::size_t n = 0;
  std::string target;
  std::string message;
};

//! Distribution of overall_rate_stat across replicates for one (n, target).
struct StudySummaryRow
{
  std::size_t n = 0;
  std::string target;
  std::size_t count = 0;
  double mean = 0.0;
  double min = 0.0;
  double p10 = 0.0;
  double median = 0.0;
  double p90 = 0.0;
  double p99 = 0.0;
  double max = 0.0;
};

struct StudyResult
{
  //! Ordered by (n, replicate, target).
  std::vector<RateReport> reports;
  std::vector<StudySummaryRow> summary;
  std::vector<StudyFailure> failures;
  //! Run metadata (key, value), e.g. the bandwidth-floor convention used.
  std::vector<std::pair<std::string, std::string>> meta;
};

//! One RateReport per (replicate, n, target). Replicates run in parallel;
//! output is a pure function of (plan, cfg).
StudyResult run_study(const ReplicationPlan& plan, const ScanConfig& cfg);

//! Linear-interpolation quantile (q in [0, 1]) of unsorted values.
double quantile(std::vector<double> values, double q);

//! Parsed study config file.
struct StudyConfig
{
  ReplicationPlan plan;
  ScanConfig scan;
};

//! Fields: scenario, master_seed, replicates, sample_sizes, c, h0, gamma, p,
//! kernel, xgrid_points, plus optional target(s), centering, floor,
//! upper_scale, upper_exponent. `p` (int or array) adds REGRESSION(p)
//! targets when no explicit target is given. Throws ArgumentError.
StudyConfig parse_study_config(const nlohmann::json& j);

} // namespace locpoly
