#include "cli.hpp"

#include "locpoly/emp_process.hpp"
#include "locpoly/error.hpp"
#include "locpoly/estimators.hpp"
#include "locpoly/kernel.hpp"
#include "locpoly/random.hpp"
#include "locpoly/report.hpp"
#include "locpoly/sample.hpp"
#include "locpoly/scenario.hpp"
#include "locpoly/study.hpp"
#include "locpoly/uib_scan.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace locpoly::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

enum class ValueKind
{
  Number,
  Integer,
  Text,
  List
};

struct OptionSpec
{
  std::string flag;
  std::string key;
  ValueKind kind;
  std::string help;
};

//! One subcommand: its flags, the values CLI11 writes into, and the
//! config/override sources.
struct Command
{
  Command(std::string n, std::string d, std::vector<OptionSpec> s)
    : name(std::move(n))
    , description(std::move(d))
    , specs(std::move(s))
  {}

  std::string name;
  std::string description;
  std::vector<OptionSpec> specs;
  CLI::App* app = nullptr;
  std::vector<std::string> values;
  std::vector<CLI::Option*> options;
  std::string config_path;
  std::vector<std::string> overrides;
};

std::string trim(std::string s)
{
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos)
    return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

json scalar_from_text(const std::string& text)
{
  try {
    json v = json::parse(text);
    if (v.is_primitive())
      return v;
  } catch (const json::exception&) {
  }
  return json(text);
}

json convert(const OptionSpec& spec, const json& raw)
{
  if (!raw.is_string())
    return raw;
  const std::string text = trim(raw.get<std::string>());
  switch (spec.kind) {
    case ValueKind::Text:
      return json(text);
    case ValueKind::Number:
    case ValueKind::Integer: {
      json v = scalar_from_text(text);
      if (!v.is_number() || (spec.kind == ValueKind::Integer && !v.is_number_integer()))
        throw ArgumentError("'" + spec.key + "' expects " +
                            (spec.kind == ValueKind::Integer ? "an integer" : "a number") + ", got '" + text + "'");
      return v;
    }
    case ValueKind::List: {
      if (!text.empty() && text.front() == '[') {
        try {
          return json::parse(text);
        } catch (const json::exception&) {
          throw ArgumentError("'" + spec.key + "' is not a valid list: '" + text + "'");
        }
      }
      json arr = json::array();
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ','))
        if (!trim(item).empty())
          arr.push_back(scalar_from_text(trim(item)));
      return arr;
    }
  }
  return raw;
}

const OptionSpec* find_spec(const Command& cmd, const std::string& key)
{
  for (const auto& s : cmd.specs)
    if (s.key == key)
      return &s;
  return nullptr;
}

//! Config file, then --set overrides, then explicit flags.
json merged_config(const Command& cmd)
{
  json cfg = json::object();
  if (!cmd.config_path.empty()) {
    std::ifstream in(cmd.config_path);
    if (!in)
      throw ArgumentError("cannot open config file '" + cmd.config_path + "'");
    try {
      cfg = json::parse(in);
    } catch (const json::exception& e) {
      throw ArgumentError("config file '" + cmd.config_path + "': " + e.what());
    }
    if (!cfg.is_object())
      throw ArgumentError("config file must hold a JSON object");
    for (auto it = cfg.begin(); it != cfg.end(); ++it) {
      const OptionSpec* spec = find_spec(cmd, it.key());
      if (!spec)
        throw ArgumentError("unknown config field '" + it.key() + "' for " + cmd.name);
      it.value() = convert(*spec, it.value());
    }
  }
  for (const auto& kv : cmd.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw ArgumentError("override '" + kv + "' is not of the form key=value");
    const std::string key = trim(kv.substr(0, eq));
    const OptionSpec* spec = find_spec(cmd, key);
    if (!spec)
      throw ArgumentError("unknown override key '" + key + "' for " + cmd.name);
    cfg[key] = convert(*spec, json(kv.substr(eq + 1)));
  }
  for (std::size_t i = 0; i < cmd.specs.size(); ++i)
    if (cmd.options[i]->count() > 0)
      cfg[cmd.specs[i].key] = convert(cmd.specs[i], json(cmd.values[i]));
  return cfg;
}

template <class T>
T get(const json& cfg, const std::string& key, T fallback)
{
  if (!cfg.contains(key) || cfg.at(key).is_null())
    return fallback;
  try {
    return cfg.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ArgumentError("'" + key + "': " + e.what());
  }
}

template <class T>
T require(const json& cfg, const std::string& key)
{
  if (!cfg.contains(key) || cfg.at(key).is_null())
    throw ArgumentError("missing required setting '" + key + "'");
  return get<T>(cfg, key, T{});
}

template <class T>
std::vector<T> get_list(const json& cfg, const std::string& key, std::vector<T> fallback)
{
  if (!cfg.contains(key) || cfg.at(key).is_null())
    return fallback;
  const json& v = cfg.at(key);
  if (!v.is_array())
    return { get<T>(cfg, key, T{}) };
  return get<std::vector<T>>(cfg, key, fallback);
}

fs::path output_dir(const json& cfg)
{
  fs::path dir = get<std::string>(cfg, "output_dir", ".");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw ArgumentError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

std::ofstream open_output(const fs::path& path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw ArgumentError("cannot write '" + path.string() + "'");
  return out;
}

std::string matrix_literal(const Eigen::MatrixXd& m)
{
  std::string s = "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    s += i ? ",[" : "[";
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      // Odd moments vanish; print them as exact zeros.
      const double v = std::abs(m(i, j)) < 1e-15 ? 0.0 : m(i, j);
      s += (j ? "," : "") + format_number(v);
    }
    s += "]";
  }
  return s + "]";
}

int cmd_moments(const json& cfg, std::ostream& out)
{
  const Kernel k = Kernel::from_name(get<std::string>(cfg, "kernel", "uniform"));
  const int p = get<int>(cfg, "p", 1);
  const GramMatrix g = gram_matrix(k, p);

  out << "kernel: " << k.name() << '\n';
  out << "mu:";
  for (int j = 0; j <= 2 * p; ++j) {
    const double m = kernel_moment(k, j);
    out << ' ' << format_number(std::abs(m) < 1e-15 ? 0.0 : m);
  }
  out << '\n';
  out << "gram: " << matrix_literal(g.entries) << '\n';
  out << "min_eigenvalue: " << format_number(g.min_eigenvalue) << '\n';

  if (cfg.contains("output_dir")) {
    auto f = open_output(output_dir(cfg) / "moments.csv");
    f << "j,mu_closed_form,mu_quadrature\n";
    for (int j = 0; j <= 2 * p; ++j) {
      const auto cf = k.closed_form_moment(j);
      f << j << ',' << (cf ? format_number(*cf) : "") << ',' << format_number(quadrature_moment(k, j)) << '\n';
    }
  }
  return kExitOk;
}

std::vector<double> fit_xgrid(const json& cfg, const PairedSample& sample)
{
  const auto spec = get_list<double>(cfg, "xgrid", { 101 });
  const Interval iv = sample.interval();
  auto count_of = [](double v) {
    if (v < 1 || v != std::floor(v))
      throw ArgumentError("xgrid point count must be a positive integer");
    return static_cast<std::size_t>(v);
  };
  if (spec.size() == 1)
    return linspace(iv.lo, iv.hi, count_of(spec[0]));
  if (spec.size() == 3)
    return linspace(spec[0], spec[1], count_of(spec[2]));
  throw ArgumentError("xgrid expects COUNT or LO,HI,COUNT");
}

int cmd_fit(const json& cfg, std::ostream& out)
{
  const std::string input = require<std::string>(cfg, "input");
  std::optional<Interval> interval;
  if (cfg.contains("interval")) {
    const auto iv = get_list<double>(cfg, "interval", {});
    if (iv.size() != 2)
      throw ArgumentError("interval expects LO,HI");
    interval = Interval{ iv[0], iv[1] };
  }
  const PairedSample sample = read_sample_csv(input, interval);
  if (!sample.has_y())
    throw ArgumentError("fit needs an input with x,y columns");
  const Kernel k = Kernel::from_name(get<std::string>(cfg, "kernel", "uniform"));
  const double h = require<double>(cfg, "h");
  const int p = get<int>(cfg, "p", 1);
  if (!(h > 0.0))
    throw ArgumentError("h must be positive");
  if (p < 0)
    throw ArgumentError("p must be nonnegative");
  const auto xgrid = fit_xgrid(cfg, sample);

  const auto curve = regression_curve(sample, k, h, p, xgrid);
  auto f = open_output(output_dir(cfg) / "fit.csv");
  f << "x0,h,p";
  for (int j = 0; j <= p; ++j)
    f << ",beta" << j;
  f << ",cond_A,n_in_window,status\n";
  std::size_t ok = 0;
  for (const auto& pt : curve) {
    f << format_number(pt.x0) << ',' << format_number(h) << ',' << p;
    if (pt.fit) {
      ++ok;
      for (double b : pt.fit->beta)
        f << ',' << format_number(b);
      f << ',' << format_number(pt.fit->cond_A) << ',' << pt.fit->n_in_window;
    } else {
      for (int j = 0; j <= p; ++j)
        f << ",nan";
      f << ",nan,";
      const auto [lo, hi] = sample.window(pt.x0, 0.5 * h);
      f << (hi - lo);
    }
    f << ',' << to_string(pt.status) << '\n';
  }
  out << "fit: " << ok << " of " << curve.size() << " points fitted\n";
  return ok > 0 ? kExitOk : kExitDegenerate;
}

//! Settings shared by scan and study, in parse_study_config form.
json study_fields(const json& cfg)
{
  static const std::array<const char*, 16> keys = { "scenario", "master_seed", "replicates", "sample_sizes",
                                                    "c",        "h0",          "gamma",      "p",
                                                    "kernel",   "xgrid_points", "target",    "targets",
                                                    "centering", "floor",      "upper_scale", "upper_exponent" };
  json j = json::object();
  for (const char* k : keys)
    if (cfg.contains(k))
      j[k] = cfg.at(k);
  return j;
}

void write_reports(const fs::path& dir, const std::string& csv_name, std::span<const RateReport> reports,
                   const std::string& title)
{
  {
    auto f = open_output(dir / csv_name);
    write_rate_csv(f, reports);
  }
  auto svg = open_output(dir / "rate_vs_h.svg");
  write_rate_svg(svg, reports, title);
}

int cmd_scan(const json& cfg, std::ostream& out)
{
  json sj = study_fields(cfg);
  const int replicate = get<int>(cfg, "replicate", 0);
  if (replicate < 0)
    throw ArgumentError("replicate must be nonnegative");
  sj["replicates"] = replicate + 1;
  sj["master_seed"] = get<std::uint64_t>(cfg, "seed", 1);
  std::size_t n = get<std::size_t>(cfg, "n", 1024);
  sj["sample_sizes"] = json::array({ n });
  const StudyConfig sc = parse_study_config(sj);
  const Scenario& scenario = sc.plan.scenario;

  std::optional<PairedSample> sample;
  if (cfg.contains("input")) {
    sample.emplace(read_sample_csv(get<std::string>(cfg, "input", ""), scenario.interval, scenario.eta));
    n = sample->size();
  } else {
    sample.emplace(draw_sample(sc.plan, replicate, n));
  }

  const Kernel k = Kernel::from_name(sc.scan.kernel);
  const auto hs = get_list<double>(cfg, "hs", {});
  const BandwidthGrid grid = hs.empty() ? study_grid(sc.scan, scenario, n) : explicit_grid(hs, n);
  const auto xgrid = linspace(scenario.interval.lo, scenario.interval.hi, sc.scan.xgrid_points);

  std::vector<RateReport> reports;
  bool any_usable = false;
  for (const Target& t : sc.scan.targets) {
    const Centering cen = sc.scan.centering == CenteringKind::Expectation
                            ? expectation_centering(t, k, scenario.design.pdf, scenario.g)
                            : true_function_centering(t, k, scenario.design.pdf, scenario.g);
    RateReport r = uib_scan(*sample, k, grid, t, cen, xgrid);
    r.seed = cfg.contains("input") ? 0 : derive_seed(sc.plan.master_seed, { static_cast<std::uint64_t>(replicate), n });
    r.replicate = replicate;
    if (std::find(r.flags.begin(), r.flags.end(), "all_bandwidths_degenerate") == r.flags.end())
      any_usable = true;
    out << t.label() << ": overall_rate_stat " << format_number(r.overall_rate_stat) << " over " << r.per_h.size()
        << " bandwidths";
    for (const auto& fl : r.flags)
      out << " [" << fl << "]";
    out << '\n';
    reports.push_back(std::move(r));
  }
  write_reports(output_dir(cfg), "rate_report.csv", reports, scenario.name + " scan, n=" + std::to_string(n));
  return any_usable ? kExitOk : kExitDegenerate;
}

int cmd_study(const json& cfg, std::ostream& out)
{
  const StudyConfig sc = parse_study_config(study_fields(cfg));
  const StudyResult result = run_study(sc.plan, sc.scan);
  const fs::path dir = output_dir(cfg);
  write_reports(dir, "study_reports.csv", result.reports, sc.plan.scenario.name + " study");
  {
    auto f = open_output(dir / "study_summary.csv");
    write_summary_csv(f, result.summary);
  }
  {
    auto f = open_output(dir / "study_meta.csv");
    write_meta_csv(f, result);
  }
  for (const auto& row : result.summary)
    out << "n=" << row.n << ' ' << row.target << ": median " << format_number(row.median) << " (min "
        << format_number(row.min) << ", max " << format_number(row.max) << ", " << row.count << " replicates)\n";
  for (const auto& fl : result.failures)
    out << "failure: n=" << fl.n << " replicate=" << fl.replicate << ' ' << fl.target << ": " << fl.message << '\n';
  return result.failures.empty() ? kExitOk : kExitDegenerate;
}

std::vector<std::string> product_factors(const json& cfg)
{
  const auto f = get_list<std::string>(cfg, "factors", { "kernel-translates", "indicator-windows" });
  if (f.size() != 2 || f[0] == "product" || f[1] == "product")
    throw ArgumentError("factors expects two of kernel-translates, indicator-windows");
  return f;
}

FunctionClassSpec build_class(const std::string& name, const json& cfg)
{
  const auto hs = get_list<double>(cfg, "hs", { 0.05, 0.1, 0.2, 0.4 });
  const auto x_points = get<std::size_t>(cfg, "x_points", 41);
  const auto xs = linspace(0.0, 1.0, x_points);
  if (name == "kernel-translates") {
    const Kernel k = Kernel::from_name(get<std::string>(cfg, "kernel", "uniform"));
    return FunctionClassSpec::kernel_translates(k, get<int>(cfg, "order", 0), hs, xs);
  }
  if (name == "indicator-windows")
    return FunctionClassSpec::indicator_windows(hs, xs);
  if (name == "product") {
    const auto f = product_factors(cfg);
    return FunctionClassSpec::product(build_class(f[0], cfg), build_class(f[1], cfg));
  }
  throw ArgumentError("unknown class '" + name + "' (expected kernel-translates, indicator-windows or product)");
}

void write_covering_rows(std::ostream& f, const std::string& label, const CoveringCurve& c)
{
  for (std::size_t i = 0; i < c.eps_grid.size(); ++i)
    f << label << ',' << format_number(c.eps_grid[i]) << ',' << c.counts[i] << ',' << c.members << ','
      << format_number(c.nu_hat) << ',' << format_number(c.nu_stderr) << ',' << format_number(c.c_hat) << ','
      << format_number(c.r_squared) << '\n';
}

int cmd_empproc(const json& cfg, std::ostream& out)
{
  const std::string class_name = get<std::string>(cfg, "class", "kernel-translates");
  const FunctionClassSpec cls = build_class(class_name, cfg);
  const auto n = get<std::size_t>(cfg, "n", 256);
  const auto draws = get<std::size_t>(cfg, "draws", 1024);
  const auto seed = get<std::uint64_t>(cfg, "seed", 1);
  const auto eps = get_list<double>(cfg, "eps", { 0.4, 0.2, 0.1, 0.05 });
  const auto covering_sample = get<std::size_t>(cfg, "covering_sample", 256);
  const auto checks = get_list<std::string>(cfg, "checks", { "covering", "symmetrization" });
  const DensityModel design = DensityModel::uniform(0.0, 1.0);
  const fs::path dir = output_dir(cfg);

  static const std::array<const char*, 5> known = { "covering", "rademacher", "symmetrization", "moment-bound",
                                                    "tail" };
  for (const auto& c : checks)
    if (std::find(known.begin(), known.end(), c) == known.end())
      throw ArgumentError("unknown check '" + c + "'");
  auto wants = [&](const char* c) { return std::find(checks.begin(), checks.end(), c) != checks.end(); };

  out << "class: " << cls.describe() << " (" << cls.size() << " members)\n";

  if (wants("covering")) {
    Rng rng(derive_seed(seed, { 0xC0 }));
    const auto pts = draw_design(design, covering_sample, rng);
    auto f = open_output(dir / "covering.csv");
    f << "class,eps,count,members,nu_hat,nu_stderr,c_hat,r_squared\n";
    const CoveringCurve whole = covering_estimate(cls, pts, eps);
    if (class_name == "product") {
      const auto factors = product_factors(cfg);
      const CoveringCurve a = covering_estimate(build_class(factors[0], cfg), pts, eps);
      const CoveringCurve b = covering_estimate(build_class(factors[1], cfg), pts, eps);
      write_covering_rows(f, "a:" + factors[0], a);
      write_covering_rows(f, "b:" + factors[1], b);
      write_covering_rows(f, "product", whole);
      out << "covering: product nu_hat " << format_number(whole.nu_hat) << ", factor sum "
          << format_number(product_class_covering(a, b)) << '\n';
    } else {
      write_covering_rows(f, class_name, whole);
      out << "covering: nu_hat " << format_number(whole.nu_hat) << ", R^2 " << format_number(whole.r_squared)
          << '\n';
    }
  }

  if (wants("rademacher")) {
    const McEstimate m = rademacher_moment_unconditional(cls, design, n, draws, derive_seed(seed, { 0x4A }));
    auto f = open_output(dir / "rademacher.csv");
    f << "n,draws,mu_hat,std_error\n"
      << n << ',' << m.draws << ',' << format_number(m.mean) << ',' << format_number(m.std_error) << '\n';
    out << "rademacher: mu_hat " << format_number(m.mean) << " +- " << format_number(m.std_error) << '\n';
  }

  bool all_hold = true;
  if (wants("symmetrization")) {
    const SymmetrizationResult s = symmetrization_check(cls, design, n, draws, derive_seed(seed, { 0x5B }));
    auto f = open_output(dir / "symmetrization.csv");
    f << "n,draws,centered_mean,centered_stderr,rademacher_mean,rademacher_stderr,allowance,holds\n"
      << n << ',' << draws << ',' << format_number(s.centered.mean) << ',' << format_number(s.centered.std_error)
      << ',' << format_number(s.rademacher.mean) << ',' << format_number(s.rademacher.std_error) << ','
      << format_number(s.allowance) << ',' << (s.holds ? "true" : "false") << '\n';
    out << "symmetrization: " << format_number(s.centered.mean) << " <= 2*" << format_number(s.rademacher.mean)
        << " + " << format_number(s.allowance) << (s.holds ? " holds" : " FAILS") << '\n';
    all_hold = all_hold && s.holds;
  }

  if (wants("moment-bound")) {
    const auto sizes = get_list<std::size_t>(cfg, "sample_sizes", { 64, 128, 256, 512, 1024, 2048, 4096 });
    double sigma = get<double>(cfg, "sigma", 0.0);
    if (!(sigma > 0.0)) {
      const auto m2 = population_moments(cls, design, 2);
      const double sup2 = *std::max_element(m2.begin(), m2.end());
      sigma = std::min(cls.envelope(), std::sqrt(1.5 * sup2));
    }
    MomentBoundOptions opt;
    opt.draws = get<std::size_t>(cfg, "draws_per_sample", 256);
    opt.eps_grid = eps;
    opt.covering_sample = covering_sample;
    const MomentBoundResult r = moment_bound_check(cls, sizes, sigma, derive_seed(seed, { 0x6C }), opt);
    auto f = open_output(dir / "moment_bound.csv");
    f << "n,mu_hat,mu_stderr,bound,bound_ratio,empirical_sigma2,sup_norm_condition,nu,beta,sigma,sigma_condition\n";
    for (const auto& row : r.rows)
      f << row.n << ',' << format_number(row.mu_hat) << ',' << format_number(row.mu_stderr) << ','
        << format_number(row.bound) << ',' << format_number(row.bound_ratio) << ','
        << format_number(row.empirical_sigma2) << ',' << (row.sup_norm_condition ? "true" : "false") << ','
        << format_number(r.nu) << ',' << format_number(r.beta) << ',' << format_number(r.sigma) << ','
        << (r.sigma_condition ? "true" : "false") << '\n';
    out << "moment-bound: ratio spread " << format_number(r.ratio_spread) << '\n';
  }

  if (wants("tail")) {
    const auto ts = get_list<double>(cfg, "t_grid", { 1.0, 2.0, 4.0, 8.0 });
    const auto reps = get<std::size_t>(cfg, "replicates", 200);
    const TailCheckResult t = talagrand_tail_check(cls, n, ts, reps, derive_seed(seed, { 0x7D }), design);
    auto f = open_output(dir / "tail.csv");
    f << "t,empirical_prob,bound_value,mu_hat,sigma2,envelope,replicates\n";
    for (const auto& row : t.rows)
      f << format_number(row.t) << ',' << format_number(row.empirical_prob) << ',' << format_number(row.bound_value)
        << ',' << format_number(t.mu_hat) << ',' << format_number(t.sigma2) << ',' << format_number(t.envelope)
        << ',' << t.replicates << '\n';
    out << "tail: " << t.rows.size() << " thresholds over " << t.replicates << " replicates\n";
  }
  return all_hold ? kExitOk : kExitDegenerate;
}

std::vector<Command> make_commands()
{
  const OptionSpec out_dir{ "--output-dir", "output_dir", ValueKind::Text, "Directory for output files" };
  const OptionSpec kernel{ "--kernel", "kernel", ValueKind::Text, "Kernel: uniform, epanechnikov or triangular" };

  const std::vector<OptionSpec> study_like = {
    { "--scenario", "scenario", ValueKind::Text, "Built-in scenario (S1, S2, S3)" },
    kernel,
    { "--target", "target", ValueKind::Text, "Target: kde, ftilde:j, rtilde:j or regression:p" },
    { "--targets", "targets", ValueKind::List, "Comma-separated targets" },
    { "--p", "p", ValueKind::List, "Local polynomial degree(s); adds REGRESSION targets" },
    { "--centering", "centering", ValueKind::Text, "Centering: expectation or truefunction" },
    { "--c", "c", ValueKind::Number, "Bandwidth floor constant c" },
    { "--h0", "h0", ValueKind::Number, "Grid ceiling: bandwidths stop at 2*h0" },
    { "--gamma", "gamma", ValueKind::Number, "Exponent for the power floor c*(log n/n)^gamma" },
    { "--floor", "floor", ValueKind::Text, "Floor rule: log, power or log2" },
    { "--upper-scale", "upper_scale", ValueKind::Number, "Upper end b_n = scale * n^-exponent" },
    { "--upper-exponent", "upper_exponent", ValueKind::Number, "Exponent of the upper end b_n" },
    { "--xgrid-points", "xgrid_points", ValueKind::Integer, "Evaluation points across the interval I" },
  };

  std::vector<Command> cmds;

  cmds.push_back({ "moments",
                   "Print kernel moments and the Gram matrix",
                   { kernel, { "--p", "p", ValueKind::Integer, "Polynomial degree of the Gram matrix" }, out_dir } });

  cmds.push_back({ "fit",
                   "Local polynomial fit on an x,y CSV",
                   { { "--input", "input", ValueKind::Text, "Input CSV with header x,y" },
                     kernel,
                     { "--h", "h", ValueKind::Number, "Bandwidth" },
                     { "--p", "p", ValueKind::Integer, "Polynomial degree" },
                     { "--xgrid", "xgrid", ValueKind::List, "COUNT over the data range, or LO,HI,COUNT" },
                     { "--interval", "interval", ValueKind::List, "Interval I as LO,HI (default data range)" },
                     out_dir } });

  Command scan{ "scan", "Uniform-in-bandwidth rate scan on one sample", study_like };
  scan.specs.push_back({ "--input", "input", ValueKind::Text, "Input CSV (default: draw from the scenario)" });
  scan.specs.push_back({ "--n", "n", ValueKind::Integer, "Sample size when drawing from the scenario" });
  scan.specs.push_back({ "--seed", "seed", ValueKind::Integer, "Master seed" });
  scan.specs.push_back({ "--replicate", "replicate", ValueKind::Integer, "Replicate index of the drawn sample" });
  scan.specs.push_back({ "--hs", "hs", ValueKind::List, "Explicit bandwidth list (overrides the grid rule)" });
  scan.specs.push_back(out_dir);
  cmds.push_back(std::move(scan));

  Command study{ "study", "Seeded replication study over sample sizes", study_like };
  study.specs.push_back({ "--master-seed", "master_seed", ValueKind::Integer, "Master seed" });
  study.specs.push_back({ "--replicates", "replicates", ValueKind::Integer, "Replicates per sample size" });
  study.specs.push_back({ "--sample-sizes", "sample_sizes", ValueKind::List, "Comma-separated sample sizes" });
  study.specs.push_back(out_dir);
  cmds.push_back(std::move(study));

  cmds.push_back(
    { "empproc",
      "Empirical-process checks on a function class",
      { { "--class", "class", ValueKind::Text, "Class: kernel-translates, indicator-windows or product" },
        kernel,
        { "--factors", "factors", ValueKind::List, "Factor classes of a product (two names)" },
        { "--order", "order", ValueKind::Integer, "j in H^(j)(u) = (-u)^j K(u) for kernel translates" },
        { "--hs", "hs", ValueKind::List, "Bandwidth parameters of the class" },
        { "--x-points", "x_points", ValueKind::Integer, "Location parameters, evenly spaced on [0,1]" },
        { "--checks", "checks", ValueKind::List, "covering, rademacher, symmetrization, moment-bound, tail" },
        { "--n", "n", ValueKind::Integer, "Sample size" },
        { "--draws", "draws", ValueKind::Integer, "Monte Carlo draws" },
        { "--seed", "seed", ValueKind::Integer, "Master seed" },
        { "--eps", "eps", ValueKind::List, "Covering radii" },
        { "--covering-sample", "covering_sample", ValueKind::Integer, "Design points defining L2(Q_n)" },
        { "--sample-sizes", "sample_sizes", ValueKind::List, "Sample sizes for the moment bound" },
        { "--sigma", "sigma", ValueKind::Number, "sigma in the moment bound (default from the class)" },
        { "--draws-per-sample", "draws_per_sample", ValueKind::Integer, "Sign draws per design sample" },
        { "--t-grid", "t_grid", ValueKind::List, "Thresholds t for the tail check" },
        { "--replicates", "replicates", ValueKind::Integer, "Replicates for the tail check" },
        out_dir } });
  return cmds;
}

int dispatch(const Command& cmd, std::ostream& out)
{
  const json cfg = merged_config(cmd);
  if (cmd.name == "moments")
    return cmd_moments(cfg, out);
  if (cmd.name == "fit")
    return cmd_fit(cfg, out);
  if (cmd.name == "scan")
    return cmd_scan(cfg, out);
  if (cmd.name == "study")
    return cmd_study(cfg, out);
  return cmd_empproc(cfg, out);
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
  CLI::App app{ "Local polynomial estimation with uniform-in-bandwidth diagnostics", "locpoly" };
  app.require_subcommand(1);
  app.fallthrough(false);

  std::vector<Command> cmds = make_commands();
  for (auto& cmd : cmds) {
    cmd.app = app.add_subcommand(cmd.name, cmd.description);
    cmd.app->set_help_flag("--help", "Print this help message and exit");
    cmd.values.resize(cmd.specs.size());
    for (std::size_t i = 0; i < cmd.specs.size(); ++i) {
      const auto& s = cmd.specs[i];
      cmd.options.push_back(cmd.app->add_option(s.flag, cmd.values[i], s.help + " [config: " + s.key + "]"));
    }
    cmd.app->add_option("--config", cmd.config_path, "JSON config file with the keys listed above");
    cmd.app->add_option("--set", cmd.overrides, "Override a config key: --set key=value (repeatable)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  for (const auto& cmd : cmds) {
    if (!cmd.app->parsed())
      continue;
    try {
      return dispatch(cmd, out);
    } catch (const InputError& e) {
      err << cmd.name << ": " << e.what() << '\n';
      return kExitUsage;
    } catch (const ArgumentError& e) {
      err << cmd.name << ": " << e.what() << '\n';
      return kExitUsage;
    } catch (const PreconditionError& e) {
      err << cmd.name << ": " << e.what() << '\n';
      return kExitUsage;
    } catch (const Error& e) {
      err << cmd.name << ": " << e.what() << '\n';
      return kExitDegenerate;
    } catch (const std::exception& e) {
      err << cmd.name << ": " << e.what() << '\n';
      return kExitUsage;
    }
  }
  return kExitUsage;
}

} // namespace locpoly::cli
