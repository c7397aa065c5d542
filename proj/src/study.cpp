#include "locpoly/study.hpp"

#include "locpoly/error.hpp"
#include "locpoly/parallel.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace locpoly {

std::string to_string(FloorRule r)
{
  switch (r) {
    case FloorRule::Log:
      return "log";
    case FloorRule::Power:
      return "power";
    case FloorRule::LogSquared:
      return "log2";
  }
  return "unknown";
}

FloorRule parse_floor_rule(const std::string& text)
{
  std::string s = text;
  for (auto& ch : s)
    ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (s == "log" || s == "dyadic")
    return FloorRule::Log;
  if (s == "power" || s == "powerlaw")
    return FloorRule::Power;
  if (s == "log2" || s == "logsquared")
    return FloorRule::LogSquared;
  throw ArgumentError("unknown floor rule '" + text + "' (expected log, power or log2)");
}

namespace {

double floor_value(const ScanConfig& cfg, const Scenario& sc, std::size_t n)
{
  const double nd = static_cast<double>(n);
  const double ln = std::log(nd);
  switch (cfg.floor) {
    case FloorRule::Log:
      return cfg.c * ln / nd;
    case FloorRule::Power:
      return cfg.c * std::pow(ln / nd, cfg.gamma.value_or(sc.floor_exponent()));
    case FloorRule::LogSquared:
      return cfg.c * ln * ln / nd;
  }
  return cfg.c * ln / nd;
}

std::string fmt(double v)
{
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

} // namespace

BandwidthGrid study_grid(const ScanConfig& cfg, const Scenario& scenario, std::size_t n)
{
  if (cfg.upper_scale) {
    const double b = *cfg.upper_scale * std::pow(static_cast<double>(n), -cfg.upper_exponent);
    BandwidthGrid g = range_grid(floor_value(cfg, scenario, n), b, n);
    g.c = cfg.c;
    g.gamma = cfg.gamma.value_or(scenario.floor_exponent());
    return g;
  }
  switch (cfg.floor) {
    case FloorRule::Log:
      return dyadic_grid(cfg.c, n, cfg.h0);
    case FloorRule::Power:
      return power_law_grid(cfg.c, n, cfg.h0, cfg.gamma.value_or(scenario.floor_exponent()));
    case FloorRule::LogSquared: {
      const double a = floor_value(cfg, scenario, n);
      if (a > 2.0 * cfg.h0)
        throw ArgumentError("empty grid: floor exceeds 2 h0");
      BandwidthGrid g;
      g.n = n;
      for (double h = a; h <= 2.0 * cfg.h0; h *= 2.0)
        g.hs.push_back(h);
      g.c = cfg.c;
      g.h0 = cfg.h0;
      g.kind = GridKind::PowerLaw;
      return g;
    }
  }
  return dyadic_grid(cfg.c, n, cfg.h0);
}

double quantile(std::vector<double> values, double q)
{
  if (values.empty())
    throw ArgumentError("quantile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

StudyResult run_study(const ReplicationPlan& plan, const ScanConfig& cfg)
{
  if (plan.replicates < 1)
    throw ArgumentError("plan needs at least one replicate");
  if (plan.sample_sizes.empty())
    throw ArgumentError("plan needs at least one sample size");
  if (cfg.targets.empty())
    throw ArgumentError("scan config needs at least one target");
  if (cfg.xgrid_points == 0)
    throw ArgumentError("xgrid_points must be positive");

  const Scenario& sc = plan.scenario;
  const Kernel kernel = Kernel::from_name(cfg.kernel);
  const auto xgrid = linspace(sc.interval.lo, sc.interval.hi, cfg.xgrid_points);

  StudyResult result;
  result.meta = {
    { "scenario", sc.name },
    { "design", sc.design.description },
    { "regression_function", sc.g_description },
    { "noise", sc.noise.describe() },
    { "moment_regime", to_string(sc.regime) },
    { "interval_I", "[" + fmt(sc.interval.lo) + "," + fmt(sc.interval.hi) + "]" },
    { "eta", fmt(sc.eta) },
    { "kernel", kernel.name() },
    { "centering", to_string(cfg.centering) },
    { "c", fmt(cfg.c) },
    { "h0", fmt(cfg.h0) },
    { "floor_rule", to_string(cfg.floor) },
    { "xgrid_points", std::to_string(cfg.xgrid_points) },
    { "master_seed", std::to_string(plan.master_seed) },
    { "replicates", std::to_string(plan.replicates) },
  };
  if (cfg.upper_scale)
    result.meta.emplace_back("upper_rule", fmt(*cfg.upper_scale) + "*n^-" + fmt(cfg.upper_exponent));
  if (cfg.floor == FloorRule::Power) {
    const double gamma = cfg.gamma.value_or(sc.floor_exponent());
    result.meta.emplace_back("gamma", fmt(gamma));
    std::string convention = "gamma=" + fmt(gamma);
    if (gamma > 1.0)
      convention = "gamma>1 (local polynomial consistency convention)";
    else if (sc.regime == MomentRegime::Moment && std::abs(gamma - sc.floor_exponent()) < 1e-12)
      convention = "gamma=1-2/pbar (moment-regime rate convention)";
    else if (gamma == 1.0)
      convention = "gamma=1 (bounded-regime rate convention)";
    result.meta.emplace_back("gamma_convention", convention);
  }
  if (sc.regime == MomentRegime::Moment && cfg.floor == FloorRule::Log)
    result.meta.emplace_back("flag", "moment_regime_with_bounded_floor");

  // Centers depend on (n, h, target) only, never on the replicate.
  struct PerSize
  {
    BandwidthGrid grid;
    std::vector<CenterTable> centers;
  };
  std::vector<PerSize> per_size;
  for (std::size_t n : plan.sample_sizes) {
    PerSize ps;
    ps.grid = study_grid(cfg, sc, n);
    for (const Target& t : cfg.targets) {
      Centering cen = cfg.centering == CenteringKind::Expectation
                        ? expectation_centering(t, kernel, sc.design.pdf, sc.g)
                        : true_function_centering(t, kernel, sc.design.pdf, sc.g);
      ps.centers.push_back(tabulate_centers(cen, ps.grid.hs, xgrid));
    }
    per_size.push_back(std::move(ps));
  }

  const std::size_t nsizes = plan.sample_sizes.size();
  const std::size_t ntargets = cfg.targets.size();
  const std::size_t tasks = nsizes * static_cast<std::size_t>(plan.replicates);
  std::vector<std::vector<RateReport>> slots(tasks);
  std::vector<std::vector<StudyFailure>> failures(tasks);

  parallel_for(tasks, [&](std::size_t task) {
    const std::size_t si = task / static_cast<std::size_t>(plan.replicates);
    const int rep = static_cast<int>(task % static_cast<std::size_t>(plan.replicates));
    const std::size_t n = plan.sample_sizes[si];
    const std::uint64_t seed = derive_seed(plan.master_seed, { static_cast<std::uint64_t>(rep), n });
    std::optional<PairedSample> sample;
    try {
      sample.emplace(draw_sample(plan, rep, n));
    } catch (const std::exception& e) {
      for (const Target& t : cfg.targets)
        failures[task].push_back({ rep, n, t.label(), e.what() });
      return;
    }
    for (std::size_t ti = 0; ti < ntargets; ++ti) {
      try {
        RateReport r = uib_scan(*sample, kernel, per_size[si].grid, cfg.targets[ti], per_size[si].centers[ti], xgrid);
        r.seed = seed;
        r.replicate = rep;
        slots[task].push_back(std::move(r));
      } catch (const std::exception& e) {
        failures[task].push_back({ rep, n, cfg.targets[ti].label(), e.what() });
      }
    }
  });

  for (std::size_t task = 0; task < tasks; ++task) {
    for (auto& r : slots[task])
      result.reports.push_back(std::move(r));
    for (auto& f : failures[task])
      result.failures.push_back(std::move(f));
  }

  for (std::size_t n : plan.sample_sizes) {
    for (const Target& t : cfg.targets) {
      std::vector<double> stats;
      for (const auto& r : result.reports)
        if (r.n == n && r.target.kind == t.kind && r.target.order == t.order &&
            std::find(r.flags.begin(), r.flags.end(), "all_bandwidths_degenerate") == r.flags.end())
          stats.push_back(r.overall_rate_stat);
      if (stats.empty())
        continue;
      StudySummaryRow row;
      row.n = n;
      row.target = t.label();
      row.count = stats.size();
      double sum = 0.0;
      for (double s : stats)
        sum += s;
      row.mean = sum / static_cast<double>(stats.size());
      row.min = *std::min_element(stats.begin(), stats.end());
      row.max = *std::max_element(stats.begin(), stats.end());
      row.p10 = quantile(stats, 0.10);
      row.median = quantile(stats, 0.5);
      row.p90 = quantile(stats, 0.90);
      row.p99 = quantile(stats, 0.99);
      result.summary.push_back(row);
    }
  }
  return result;
}

namespace {

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback)
{
  if (!j.contains(key) || j.at(key).is_null())
    return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("config field '") + key + "': " + e.what());
  }
}

} // namespace

StudyConfig parse_study_config(const nlohmann::json& j)
{
  if (!j.is_object())
    throw ArgumentError("study config must be a JSON object");
  static const std::vector<std::string> known = { "scenario",     "master_seed", "replicates",     "sample_sizes",
                                                  "c",            "h0",          "gamma",          "p",
                                                  "kernel",       "xgrid_points", "target",        "targets",
                                                  "centering",    "floor",       "upper_scale",    "upper_exponent" };
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw ArgumentError("unknown config field '" + it.key() + "'");

  StudyConfig cfg;
  cfg.plan.scenario = find_scenario(get_or<std::string>(j, "scenario", "S1"));
  cfg.plan.master_seed = get_or<std::uint64_t>(j, "master_seed", 1);
  cfg.plan.replicates = get_or<int>(j, "replicates", 1);
  cfg.plan.sample_sizes = get_or<std::vector<std::size_t>>(j, "sample_sizes", { 1024 });
  if (cfg.plan.replicates < 1)
    throw ArgumentError("replicates must be >= 1");
  if (cfg.plan.sample_sizes.empty())
    throw ArgumentError("sample_sizes must not be empty");

  ScanConfig& s = cfg.scan;
  s.kernel = get_or<std::string>(j, "kernel", "uniform");
  Kernel::from_name(s.kernel);
  s.c = get_or<double>(j, "c", 1.0);
  s.h0 = get_or<double>(j, "h0", 0.25);
  if (j.contains("gamma") && !j.at("gamma").is_null())
    s.gamma = get_or<double>(j, "gamma", 1.0);
  s.xgrid_points = get_or<std::size_t>(j, "xgrid_points", 401);
  s.floor = parse_floor_rule(get_or<std::string>(j, "floor", s.gamma ? "power" : "log"));
  if (j.contains("upper_scale") && !j.at("upper_scale").is_null())
    s.upper_scale = get_or<double>(j, "upper_scale", 4.0);
  s.upper_exponent = get_or<double>(j, "upper_exponent", 0.2);

  s.targets.clear();
  std::vector<std::string> target_names;
  if (j.contains("targets"))
    target_names = get_or<std::vector<std::string>>(j, "targets", {});
  else if (j.contains("target"))
    target_names.push_back(get_or<std::string>(j, "target", "kde"));
  for (const auto& name : target_names)
    s.targets.push_back(Target::parse(name));

  if (s.targets.empty() && j.contains("p")) {
    std::vector<int> ps;
    if (j.at("p").is_array())
      ps = get_or<std::vector<int>>(j, "p", {});
    else
      ps.push_back(get_or<int>(j, "p", 0));
    for (int p : ps) {
      if (p < 0)
        throw ArgumentError("p must be nonnegative");
      s.targets.push_back(Target::regression(p));
    }
  }
  if (s.targets.empty())
    s.targets.push_back(Target::kde());

  const bool any_regression = std::any_of(
    s.targets.begin(), s.targets.end(), [](const Target& t) { return t.kind == TargetKind::Regression; });
  s.centering = parse_centering(
    get_or<std::string>(j, "centering", any_regression ? "truefunction" : "expectation"));
  if (any_regression && s.centering == CenteringKind::Expectation)
    throw ArgumentError("REGRESSION targets support TrueFunction centering only");
  return cfg;
}

} // namespace locpoly
