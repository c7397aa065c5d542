// Acceptance run: one PASS/FAIL line per criterion, exit status 1 on any FAIL.

#include "cli.hpp"

#include "locpoly/emp_process.hpp"
#include "locpoly/error.hpp"
#include "locpoly/estimators.hpp"
#include "locpoly/kernel.hpp"
#include "locpoly/random.hpp"
#include "locpoly/scenario.hpp"
#include "locpoly/study.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace locpoly;

namespace {

struct Verdict
{
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fixed(double v, int digits = 3)
{
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

const Kernel& kernel_by_index(std::uint64_t i)
{
  static const std::vector<Kernel> all{ Kernel::uniform(), Kernel::epanechnikov(), Kernel::triangular() };
  return all[i % all.size()];
}

PairedSample random_sample(Rng& rng, std::size_t n, const std::function<double(double)>& g)
{
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = rng.uniform();
    ys[i] = g(xs[i]);
  }
  return PairedSample(std::move(xs), std::move(ys), { 0.2, 0.8 }, 0.2);
}

std::size_t random_size(Rng& rng, std::size_t lo, std::size_t hi)
{
  return lo + static_cast<std::size_t>(rng.uniform() * static_cast<double>(hi - lo));
}

Verdict polynomial_reproduction()
{
  const auto t0 = Clock::now();
  Rng rng(derive_seed(101, {}));
  std::size_t checked = 0, skipped = 0, bad = 0;
  double worst = 0.0;
  for (int p = 0; p <= 3; ++p) {
    for (int w = 0; w < 200; ++w) {
      std::vector<double> coef(p + 1);
      for (auto& c : coef)
        c = 4.0 * rng.uniform() - 2.0;
      auto g = [&coef](double x) {
        double v = 0.0;
        for (auto it = coef.rbegin(); it != coef.rend(); ++it)
          v = v * x + *it;
        return v;
      };
      const PairedSample s = random_sample(rng, random_size(rng, 50, 400), g);
      const double x0 = 0.2 + 0.6 * rng.uniform();
      const double h = 0.05 + 0.45 * rng.uniform();
      try {
        const LocalPolyFit f = local_poly_fit(s, kernel_by_index(rng.bits()), h, x0, p);
        if (!(f.cond_A < 1e8)) {
          ++skipped;
          continue;
        }
        const double truth = g(x0);
        const double err = std::abs(f.estimate() - truth) / (1.0 + std::abs(truth));
        worst = std::max(worst, err);
        ++checked;
        if (err > 1e-9)
          ++bad;
      } catch (const SingularDesignError&) {
        ++skipped;
      } catch (const EmptyWindowError&) {
        ++skipped;
      }
    }
  }
  const double secs = seconds_since(t0);
  return { bad == 0 && checked > 0 && secs < 10.0,
           std::to_string(checked) + " windows checked, " + std::to_string(skipped) +
             " ill-conditioned skipped, worst scaled error " + fixed(worst) + ", " + fixed(secs) + " s" };
}

Verdict closed_form_equivalence()
{
  const auto t0 = Clock::now();
  Rng rng(derive_seed(102, {}));
  std::size_t checked = 0, bad = 0, attempts = 0;
  double worst = 0.0;
  while (checked < 1000 && attempts < 100000) {
    ++attempts;
    const int p = static_cast<int>(rng.bits() % 3);
    const double phase = 6.0 * rng.uniform();
    auto g = [phase](double x) { return 3.0 + std::sin(5.0 * x + phase); };
    const PairedSample s = random_sample(rng, random_size(rng, 30, 300), g);
    const double x0 = 0.2 + 0.6 * rng.uniform();
    const double h = 0.05 + 0.45 * rng.uniform();
    const MomentStats st = moment_stats(s, kernel_by_index(rng.bits()), h, x0, p);
    try {
      const LocalPolyFit f = fit_from_stats(st, p);
      if (!(f.cond_A < 1e6))
        continue;
      const double closed = closed_form_fit(st, p);
      const double rel = std::abs(closed - f.estimate()) / std::abs(f.estimate());
      worst = std::max(worst, rel);
      ++checked;
      if (!(rel <= 1e-10))
        ++bad;
    } catch (const Error&) {
      continue;
    }
  }
  const double secs = seconds_since(t0);
  return { bad == 0 && checked == 1000 && secs < 30.0,
           std::to_string(checked) + " triples, worst relative gap " + fixed(worst) + ", " + fixed(secs) + " s" };
}

Verdict determinant_identity()
{
  Rng rng(derive_seed(103, {}));
  std::size_t bad = 0;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int p = i % 4;
    const PairedSample s = random_sample(rng, random_size(rng, 40, 300), [](double) { return 0.0; });
    const double x0 = 0.2 + 0.6 * rng.uniform();
    const double h = 0.1 + 0.4 * rng.uniform();
    const Kernel& k = kernel_by_index(rng.bits());
    const MomentStats st = moment_stats(s, k, h, x0, p);
    const Eigen::MatrixXd a = scaled_design_matrix(st, p);

    // Unscaled weighted design S_jk = (nh)^-1 sum (X_i - x0)^(j+k) K((x0 - X_i)/h).
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(p + 1, p + 1);
    const double nh = static_cast<double>(s.size()) * h;
    for (double x : s.xs()) {
      const double w = k((x0 - x) / h) / nh;
      for (int j = 0; j <= p; ++j)
        for (int l = 0; l <= p; ++l)
          S(j, l) += w * std::pow(x - x0, j + l);
    }
    const double lhs = S.determinant();
    const double rhs = std::pow(h, p * (p + 1)) * a.determinant();
    const double rel = std::abs(lhs - rhs) / std::abs(rhs);
    worst = std::max(worst, rel);
    if (!(rel <= 1e-8))
      ++bad;
  }
  return { bad == 0, "100 instances, worst relative gap " + fixed(worst) };
}

Verdict moment_table()
{
  double worst = 0.0;
  bool ok = true;
  for (const Kernel& k : { Kernel::uniform(), Kernel::epanechnikov() }) {
    for (int j = 0; j <= 6; ++j) {
      const double gap = std::abs(quadrature_moment(k, j) - *k.closed_form_moment(j));
      worst = std::max(worst, gap);
      ok = ok && gap <= 1e-10;
    }
  }
  double min_eig = 1e300;
  for (const Kernel& k : { Kernel::uniform(), Kernel::epanechnikov(), Kernel::triangular() })
    for (int p = 0; p <= 4; ++p)
      min_eig = std::min(min_eig, gram_matrix(k, p).min_eigenvalue);
  ok = ok && min_eig > 1e-6;
  return { ok, "worst moment gap " + fixed(worst) + ", smallest Gram eigenvalue " + fixed(min_eig) };
}

ReplicationPlan s1_plan(std::uint64_t seed)
{
  ReplicationPlan plan;
  plan.master_seed = seed;
  plan.replicates = 20;
  plan.sample_sizes = { 1u << 10, 1u << 12, 1u << 14 };
  plan.scenario = find_scenario("S1");
  return plan;
}

Verdict rate_boundedness()
{
  const auto t0 = Clock::now();
  ScanConfig cfg;
  cfg.kernel = "uniform";
  cfg.targets = { Target::kde() };
  cfg.centering = CenteringKind::Expectation;
  cfg.c = 1.0;
  cfg.h0 = 0.25;
  const StudyResult r = run_study(s1_plan(105), cfg);
  std::map<std::size_t, double> median;
  for (const auto& row : r.summary)
    median[row.n] = row.median;
  double hi = 0.0, lo = 1e300;
  for (const auto& [n, m] : median) {
    hi = std::max(hi, m);
    lo = std::min(lo, m);
  }
  double largest = 0.0;
  for (const auto& rep : r.reports)
    if (rep.n == (1u << 14))
      largest = std::max(largest, rep.overall_rate_stat);
  const double secs = seconds_since(t0);
  const bool ok = r.failures.empty() && median.size() == 3 && hi / lo <= 3.0 &&
                  largest <= 5.0 * median[1u << 10] && secs < 300.0;
  std::ostringstream d;
  d << "medians";
  for (const auto& [n, m] : median)
    d << ' ' << n << ':' << fixed(m);
  d << ", max/min " << fixed(hi / lo) << ", largest at 2^14 " << fixed(largest) << ", " << fixed(secs) << " s";
  return { ok, d.str() };
}

Verdict uniform_consistency()
{
  const auto t0 = Clock::now();
  ScanConfig cfg;
  cfg.kernel = "uniform";
  cfg.targets = { Target::regression(0), Target::regression(1), Target::regression(2) };
  cfg.centering = CenteringKind::TrueFunction;
  cfg.c = 1.0;
  cfg.floor = FloorRule::LogSquared;
  cfg.upper_scale = 4.0;
  cfg.upper_exponent = 0.2;
  const StudyResult r = run_study(s1_plan(106), cfg);
  std::map<std::string, std::map<std::size_t, double>> mean;
  for (const auto& row : r.summary)
    mean[row.target][row.n] = row.mean;
  bool ok = r.failures.empty() && mean.size() == 3;
  std::ostringstream d;
  for (const auto& [target, by_n] : mean) {
    d << target;
    double prev = 1e300;
    for (const auto& [n, m] : by_n) {
      d << ' ' << fixed(m);
      ok = ok && m < prev;
      prev = m;
    }
    d << "; ";
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 600.0;
  d << fixed(secs) << " s";
  return { ok, d.str() };
}

Verdict conditional_ecdf_check()
{
  Rng rng(derive_seed(107, {}));
  std::size_t bad = 0, windows = 0;
  while (windows < 100) {
    const double shift = rng.uniform();
    const PairedSample s = random_sample(rng, random_size(rng, 20, 200),
                                         [shift](double x) { return std::sin(9.0 * x) + shift; });
    const double x0 = 0.2 + 0.6 * rng.uniform();
    const double h = 0.05 + 0.3 * rng.uniform();
    const Kernel& k = kernel_by_index(rng.bits());
    try {
      double prev = conditional_ecdf(s, k, h, x0, -1e300);
      bool ok = prev == 0.0 && conditional_ecdf(s, k, h, x0, 1e300) == 1.0;
      for (int i = 0; i <= 200; ++i) {
        const double v = conditional_ecdf(s, k, h, x0, -1.5 + 3.0 * i / 200.0);
        ok = ok && v >= prev && v >= 0.0 && v <= 1.0;
        prev = v;
      }
      ++windows;
      if (!ok)
        ++bad;
    } catch (const EmptyWindowError&) {
    }
  }
  return { bad == 0, std::to_string(windows) + " windows, " + std::to_string(bad) + " violations" };
}

const std::vector<double> kEmpHs{ 0.05, 0.1, 0.2, 0.4 };

Verdict symmetrization()
{
  const auto t0 = Clock::now();
  const auto xs = linspace(0.0, 1.0, 41);
  const DensityModel unif = DensityModel::uniform(0.0, 1.0);
  const FunctionClassSpec kt = FunctionClassSpec::kernel_translates(Kernel::epanechnikov(), 0, kEmpHs, xs);
  const FunctionClassSpec iw = FunctionClassSpec::indicator_windows(kEmpHs, xs);
  std::ostringstream d;
  bool ok = true;
  for (const auto& [name, cls] : { std::pair{ "kernel translates", &kt }, std::pair{ "indicator windows", &iw } }) {
    const SymmetrizationResult s = symmetrization_check(*cls, unif, 256, 4096, 108);
    ok = ok && s.holds;
    d << name << ' ' << fixed(s.centered.mean) << " <= 2*" << fixed(s.rademacher.mean) << " + " << fixed(s.allowance)
      << "; ";
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 120.0;
  d << fixed(secs) << " s";
  return { ok, d.str() };
}

Verdict moment_bound_stability()
{
  const auto t0 = Clock::now();
  const FunctionClassSpec kt =
    FunctionClassSpec::kernel_translates(Kernel::uniform(), 0, { 0.05, 0.1, 0.25 }, linspace(0.0, 1.0, 41));
  std::vector<std::size_t> sizes;
  for (int e = 6; e <= 12; ++e)
    sizes.push_back(std::size_t{ 1 } << e);
  MomentBoundOptions opt;
  opt.covering_sample = 1000;
  const MomentBoundResult r = moment_bound_check(kt, sizes, std::sqrt(0.4), 109, opt);
  std::ostringstream d;
  d << "ratios";
  for (const auto& row : r.rows)
    d << ' ' << fixed(row.bound_ratio);
  d << ", max/min " << fixed(r.ratio_spread) << ", " << fixed(seconds_since(t0)) << " s";
  return { r.ratio_spread <= 4.0, d.str() };
}

std::vector<double> design(std::uint64_t seed, std::size_t m)
{
  Rng rng(seed);
  auto xs = draw_design(DensityModel::uniform(0.0, 1.0), m, rng);
  std::sort(xs.begin(), xs.end());
  return xs;
}

Verdict covering_polynomiality()
{
  const auto t0 = Clock::now();
  const std::vector<double> eps{ 0.4, 0.2, 0.1, 0.05 };
  const auto pts = design(derive_seed(110, {}), 4000);

  const FunctionClassSpec windows =
    FunctionClassSpec::indicator_windows(linspace(0.05, 0.5, 10), linspace(0.0, 1.0, 1001));
  const CoveringCurve cw = covering_estimate(windows, pts, eps);

  const FunctionClassSpec factor = FunctionClassSpec::indicator_windows(linspace(0.1, 0.5, 5), linspace(0.0, 1.0, 101));
  const CoveringCurve cf = covering_estimate(factor, pts, eps);
  const CoveringCurve cp = covering_estimate(FunctionClassSpec::product(factor, factor), pts, eps);
  const double predicted = product_class_covering(cf, cf);

  const bool ok = cw.r_squared >= 0.9 && cp.nu_hat <= predicted + 3.0 * cp.nu_stderr;
  std::ostringstream d;
  d << "windows nu " << fixed(cw.nu_hat) << " R^2 " << fixed(cw.r_squared) << "; product nu " << fixed(cp.nu_hat)
    << " (stderr " << fixed(cp.nu_stderr) << ") vs factors " << fixed(cf.nu_hat) << " + " << fixed(cf.nu_hat) << "; "
    << fixed(seconds_since(t0)) << " s";
  return { ok, d.str() };
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict determinism()
{
  const fs::path root = fs::temp_directory_path() / "locpoly_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path config = root / "study.json";
  {
    std::ofstream f(config);
    f << R"({"scenario":"S2","master_seed":2024,"replicates":6,"sample_sizes":[512,2048],)"
      << R"("targets":["kde","ftilde:1","rtilde:0"],"xgrid_points":101})";
  }
  const char* previous = std::getenv("LOCPOLY_THREADS");
  const std::string saved = previous ? previous : "";
  std::vector<std::string> thread_counts{ "1", "2", "3", "8" };
  std::vector<fs::path> dirs;
  bool ran = true;
  for (const auto& t : thread_counts) {
    setenv("LOCPOLY_THREADS", t.c_str(), 1);
    const fs::path dir = root / ("threads_" + t);
    const std::string cfg = config.string(), out = dir.string();
    const char* argv[] = { "locpoly", "study", "--config", cfg.c_str(), "--output-dir", out.c_str() };
    std::ostringstream sink;
    ran = ran && cli::run(6, argv, sink, sink) == cli::kExitOk;
    dirs.push_back(dir);
  }
  if (previous)
    setenv("LOCPOLY_THREADS", saved.c_str(), 1);
  else
    unsetenv("LOCPOLY_THREADS");

  bool same = ran;
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(dirs.front())) {
    if (entry.path().extension() != ".csv")
      continue;
    ++files;
    const std::string ref = slurp(entry.path());
    for (std::size_t i = 1; i < dirs.size(); ++i)
      same = same && slurp(dirs[i] / entry.path().filename()) == ref;
  }
  return { same && files >= 3,
           std::to_string(files) + " CSV files compared across LOCPOLY_THREADS=1,2,3,8" +
             (ran ? "" : " (a run failed)") };
}

} // namespace

int main()
{
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
    { "polynomial reproduction", polynomial_reproduction },
    { "closed-form equivalence", closed_form_equivalence },
    { "determinant identity", determinant_identity },
    { "moment table and Gram matrices", moment_table },
    { "rate statistic stays bounded in n", rate_boundedness },
    { "uniform-in-bandwidth consistency", uniform_consistency },
    { "conditional ECDF", conditional_ecdf_check },
    { "symmetrization sandwich", symmetrization },
    { "moment bound stability", moment_bound_stability },
    { "covering polynomiality", covering_polynomiality },
    { "determinism across thread counts", determinism },
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = { false, std::string("threw: ") + e.what() };
    }
    failed += v.pass ? 0 : 1;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  criterion " << (i + 1) << ": " << criteria[i].first << " ("
              << v.detail << ")" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
