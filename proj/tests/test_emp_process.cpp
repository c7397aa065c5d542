#include "locpoly/emp_process.hpp"
#include "locpoly/error.hpp"
#include "locpoly/estimators.hpp"
#include "locpoly/random.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

using namespace locpoly;

namespace {

std::vector<double> design_points(std::uint64_t seed, std::size_t n)
{
  Rng rng(seed);
  auto xs = draw_design(DensityModel::uniform(0.0, 1.0), n, rng);
  std::sort(xs.begin(), xs.end());
  return xs;
}

FunctionClassSpec constant_class(double value, double envelope)
{
  return FunctionClassSpec::explicit_members({ [value](double) { return value; } }, envelope);
}

// Exact E|eps_1 + ... + eps_n| by binomial counting.
double exact_abs_walk(int n)
{
  double total = 0.0;
  double binom = 1.0;
  for (int k = 0; k <= n; ++k) {
    total += binom * std::abs(2 * k - n);
    binom = binom * (n - k) / (k + 1);
  }
  return total / std::ldexp(1.0, n);
}

// Normalized L2(Q_n) distance matrix of a class on a sample.
std::vector<std::vector<double>> distances(const FunctionClassSpec& cls, const std::vector<double>& pts)
{
  const std::size_t m = cls.size();
  std::vector<std::vector<double>> d(m, std::vector<double>(m, 0.0));
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) {
      double s = 0.0;
      for (double t : pts)
        s += std::pow(cls.evaluate(a, t) - cls.evaluate(b, t), 2);
      d[a][b] = std::sqrt(s / static_cast<double>(pts.size())) / cls.envelope();
    }
  return d;
}

// Smallest number of members whose eps-balls cover the class, by exhaustive
// search over subsets.
std::size_t minimal_internal_cover(const std::vector<std::vector<double>>& d, double eps)
{
  const std::size_t m = d.size();
  for (std::size_t k = 1; k <= m; ++k) {
    std::vector<bool> pick(m, false);
    std::fill(pick.begin(), pick.begin() + static_cast<long>(k), true);
    do {
      bool covers = true;
      for (std::size_t a = 0; a < m && covers; ++a) {
        bool hit = false;
        for (std::size_t c = 0; c < m && !hit; ++c)
          hit = pick[c] && d[a][c] <= eps;
        covers = hit;
      }
      if (covers)
        return k;
    } while (std::prev_permutation(pick.begin(), pick.end()));
  }
  return m;
}

// Farthest-point traversal on a full distance matrix, starting at member 0.
std::vector<std::size_t> dense_greedy_counts(const std::vector<std::vector<double>>& d, const std::vector<double>& eps)
{
  std::vector<double> nearest(d.size(), 1e300);
  std::vector<double> radius;
  std::size_t center = 0;
  for (;;) {
    std::size_t far = 0;
    for (std::size_t m = 0; m < d.size(); ++m) {
      nearest[m] = std::min(nearest[m], d[m][center]);
      if (nearest[m] > nearest[far])
        far = m;
    }
    radius.push_back(nearest[far]);
    if (nearest[far] <= eps.back())
      break;
    center = far;
  }
  std::vector<std::size_t> counts;
  for (double e : eps) {
    std::size_t j = 0;
    while (radius[j] > e)
      ++j;
    counts.push_back(j + 1);
  }
  return counts;
}

} // namespace

TEST_CASE("class construction and evaluation")
{
  const auto xs = linspace(0.0, 1.0, 5);
  const FunctionClassSpec w = FunctionClassSpec::indicator_windows({ 0.1, 0.2 }, xs);
  CHECK(w.size() == 10);
  CHECK(w.envelope() == 1.0);
  // m = h_index * |xs| + x_index
  CHECK(w.evaluate(7, 0.5) == 1.0);
  CHECK(w.evaluate(7, 0.61) == 0.0);
  CHECK(w.evaluate(2, 0.56) == 0.0);
  CHECK(w.support(7).lo == doctest::Approx(0.4));

  const FunctionClassSpec k = FunctionClassSpec::kernel_translates(Kernel::epanechnikov(), 1, { 0.2 }, xs);
  CHECK(k.envelope() == doctest::Approx(1.5 * 0.5));
  // H^(1)((x - t)/h) with x = 0.5, t = 0.55: u = -0.25
  CHECK(k.evaluate(2, 0.55) == doctest::Approx(0.25 * 6.0 * (0.25 - 0.0625)));

  const FunctionClassSpec p = FunctionClassSpec::product(w, k);
  CHECK(p.size() == 50);
  CHECK(p.envelope() == doctest::Approx(0.75));
  CHECK(p.evaluate(7 * 5 + 2, 0.55) == doctest::Approx(k.evaluate(2, 0.55)));
  CHECK(p.factor_a().size() == 10);
  CHECK_THROWS_AS(w.factor_a(), ArgumentError);
  CHECK_THROWS_AS(FunctionClassSpec::indicator_windows({}, xs), ArgumentError);
  CHECK_THROWS_AS(FunctionClassSpec::indicator_windows({ -0.1 }, xs), ArgumentError);
}

TEST_CASE("member_sums and population moments")
{
  const auto xs = linspace(0.2, 0.8, 7);
  const FunctionClassSpec k = FunctionClassSpec::kernel_translates(Kernel::triangular(), 2, { 0.1, 0.3 }, xs);
  const auto pts = design_points(4, 300);
  std::vector<double> w(pts.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] = std::sin(static_cast<double>(i));
  const auto sums = member_sums(k, pts, w);
  for (std::size_t m = 0; m < k.size(); ++m) {
    double s = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
      s += w[i] * k.evaluate(m, pts[i]);
    CHECK(sums[m] == doctest::Approx(s).epsilon(1e-12));
  }

  // Interior members: E H^(2)((x - X)/h) = h mu_2 under U[0,1].
  const auto mean = population_moments(k, DensityModel::uniform(0.0, 1.0), 1);
  const double mu2 = kernel_moment(Kernel::triangular(), 2);
  CHECK(mean[3] == doctest::Approx(0.1 * mu2).epsilon(1e-9));
  CHECK(mean[7 + 3] == doctest::Approx(0.3 * mu2).epsilon(1e-9));
  const FunctionClassSpec win = FunctionClassSpec::indicator_windows({ 0.2 }, std::vector<double>{ 0.5, 0.95 });
  const auto wm = population_moments(win, DensityModel::uniform(0.0, 1.0), 2);
  CHECK(wm[0] == doctest::Approx(0.2).epsilon(1e-9));
  CHECK(wm[1] == doctest::Approx(0.15).epsilon(1e-9));
}

TEST_CASE("rademacher moment examples")
{
  const std::vector<double> two{ 0.3, 0.7 };
  const FunctionClassSpec one = constant_class(1.0, 1.0);
  CHECK(rademacher_moment_exact(one, two) == doctest::Approx(1.0));
  const FunctionClassSpec pm = FunctionClassSpec::explicit_members(
    { [](double) { return 1.0; }, [](double) { return -1.0; } }, 1.0);
  CHECK(rademacher_moment_exact(pm, two) == doctest::Approx(1.0));
  for (int n = 1; n <= 12; ++n) {
    const auto pts = design_points(n, static_cast<std::size_t>(n));
    CHECK(rademacher_moment_exact(one, pts) == doctest::Approx(exact_abs_walk(n)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(rademacher_moment(one, two, 0, 1), ArgumentError);
  CHECK_THROWS_AS(rademacher_moment_exact(one, design_points(1, 25)), ArgumentError);
}

TEST_CASE("rademacher moment is invariant under negating members")
{
  const auto pts = design_points(8, 10);
  std::vector<std::function<double(double)>> fs, flipped;
  for (int i = 0; i < 5; ++i) {
    auto f = [i](double t) { return std::sin((i + 1) * 3.0 * t) + 0.2 * i; };
    fs.push_back(f);
    flipped.push_back(i % 2 ? std::function<double(double)>([f](double t) { return -f(t); }) : f);
  }
  const auto a = FunctionClassSpec::explicit_members(fs, 2.0);
  const auto b = FunctionClassSpec::explicit_members(flipped, 2.0);
  CHECK(rademacher_moment_exact(a, pts) == doctest::Approx(rademacher_moment_exact(b, pts)).epsilon(1e-14));
  const McEstimate ma = rademacher_moment(a, pts, 500, 3);
  const McEstimate mb = rademacher_moment(b, pts, 500, 3);
  CHECK(ma.mean == doctest::Approx(mb.mean).epsilon(1e-14));
}

TEST_CASE("Monte Carlo rademacher moment agrees with exact enumeration")
{
  const auto pts = design_points(12, 16);
  const FunctionClassSpec w = FunctionClassSpec::indicator_windows({ 0.2, 0.4 }, linspace(0.0, 1.0, 11));
  const double exact = rademacher_moment_exact(w, pts);
  const McEstimate mc = rademacher_moment(w, pts, 20000, 5);
  CHECK(std::abs(mc.mean - exact) <= 4.0 * mc.std_error);
}

TEST_CASE("Monte Carlo self-consistency for kernel translates")
{
  const FunctionClassSpec k = FunctionClassSpec::kernel_translates(Kernel::uniform(), 0, { 0.25 }, linspace(0.0, 1.0, 401));
  const auto pts = design_points(31, 256);
  const McEstimate a = rademacher_moment(k, pts, 4096, 100);
  const McEstimate b = rademacher_moment(k, pts, 4096, 200);
  CHECK(a.draws == 4096);
  CHECK(std::abs(a.mean - b.mean) <= 3.0 * std::hypot(a.std_error, b.std_error));
  CHECK(a.mean != b.mean);
}

TEST_CASE("covering examples")
{
  const auto pts = design_points(3, 64);
  const FunctionClassSpec same = FunctionClassSpec::explicit_members(
    { [](double) { return 0.5; }, [](double) { return 0.5; }, [](double) { return 0.5; } }, 1.0);
  const CoveringCurve c = covering_estimate(same, pts, { 0.4, 0.2, 0.1 });
  CHECK(c.counts == std::vector<std::size_t>{ 1, 1, 1 });
  CHECK(c.nu_hat == doctest::Approx(0.0));

  // Constants 0 and 0.4 under envelope 1 sit at normalized distance 0.4.
  const FunctionClassSpec pair = FunctionClassSpec::explicit_members(
    { [](double) { return 0.0; }, [](double) { return 0.4; } }, 1.0);
  CHECK(covering_estimate(pair, pts, { 0.6, 0.3 }).counts == std::vector<std::size_t>{ 1, 2 });
  CHECK(covering_estimate(pair, pts, { 0.3, 0.6 }).eps_grid == std::vector<double>{ 0.6, 0.3 });

  const FunctionClassSpec zero = FunctionClassSpec::explicit_members({ [](double) { return 0.0; } }, 0.0);
  CHECK_THROWS_AS(covering_estimate(zero, pts, { 0.5, 0.25 }), DegenerateMetricError);
  CHECK_THROWS_AS(covering_estimate(pair, pts, { 1.5 }), ArgumentError);
}

TEST_CASE("greedy counts are sandwiched by exhaustive minimal covers")
{
  const auto pts = design_points(17, 40);
  const FunctionClassSpec w = FunctionClassSpec::indicator_windows({ 0.2, 0.5 }, linspace(0.0, 1.0, 7));
  const FunctionClassSpec k = FunctionClassSpec::kernel_translates(Kernel::epanechnikov(), 0, { 0.3, 0.6 }, linspace(0.0, 1.0, 7));
  for (const FunctionClassSpec* cls : { &w, &k }) {
    const auto d = distances(*cls, pts);
    const std::vector<double> eps{ 0.6, 0.45, 0.3 };
    const CoveringCurve c = covering_estimate(*cls, pts, eps);
    for (std::size_t i = 0; i < eps.size(); ++i) {
      CAPTURE(eps[i]);
      CHECK(c.counts[i] >= minimal_internal_cover(d, eps[i]));
      CHECK(c.counts[i] <= minimal_internal_cover(d, eps[i] / 2.0));
    }
  }
}

TEST_CASE("sparse covering paths match a dense greedy traversal")
{
  const auto xs = linspace(0.0, 1.0, 61);
  const std::vector<double> hs{ 0.1, 0.25, 0.4 };
  const auto pts = design_points(23, 500);
  const std::vector<double> eps{ 0.4, 0.2, 0.1, 0.05 };
  const FunctionClassSpec w = FunctionClassSpec::indicator_windows(hs, xs);
  const FunctionClassSpec k = FunctionClassSpec::kernel_translates(Kernel::epanechnikov(), 1, hs, xs);
  for (const FunctionClassSpec* cls : { &w, &k }) {
    const CoveringCurve c = covering_estimate(*cls, pts, eps);
    const auto dense = dense_greedy_counts(distances(*cls, pts), eps);
    for (std::size_t i = 0; i < eps.size(); ++i)
      CHECK(c.counts[i] == dense[i]);
  }
}

TEST_CASE("indicator windows: monotone counts and exponent in range")
{
  const auto pts = design_points(29, 2000);
  const FunctionClassSpec w =
    FunctionClassSpec::indicator_windows({ 0.1, 0.2, 0.3, 0.4, 0.5 }, linspace(0.0, 1.0, 401));
  const CoveringCurve c = covering_estimate(w, pts, { 0.4, 0.2, 0.1, 0.05 });
  for (std::size_t i = 1; i < c.counts.size(); ++i)
    CHECK(c.counts[i] >= c.counts[i - 1]);
  CHECK(c.nu_hat >= 0.5);
  CHECK(c.nu_hat <= 3.0);
  CHECK(c.fitted);
}

TEST_CASE("product class covering")
{
  CoveringCurve single = fit_covering_curve({ 0.4, 0.2, 0.1 }, { 1, 1, 1 });
  CoveringCurve b = fit_covering_curve({ 0.4, 0.2, 0.1 }, { 3, 9, 27 });
  CHECK(b.nu_hat == doctest::Approx(std::log(3.0) / std::log(2.0)));
  CHECK(b.r_squared == doctest::Approx(1.0));
  CHECK(product_class_covering(single, b) == doctest::Approx(b.nu_hat));
  CHECK(product_class_covering(b, b) == doctest::Approx(2.0 * b.nu_hat));
  CHECK_THROWS_AS(product_class_covering(CoveringCurve{}, b), ArgumentError);

  const auto pts = design_points(41, 1000);
  const FunctionClassSpec w = FunctionClassSpec::indicator_windows({ 0.1, 0.3, 0.5 }, linspace(0.0, 1.0, 41));
  const std::vector<double> eps{ 0.4, 0.2, 0.1, 0.05 };
  const CoveringCurve cw = covering_estimate(w, pts, eps);
  const CoveringCurve cp = covering_estimate(FunctionClassSpec::product(w, w), pts, eps);
  CHECK(cp.nu_hat <= product_class_covering(cw, cw) + 3.0 * cp.nu_stderr);
}

TEST_CASE("symmetrization sandwich on a small class")
{
  const FunctionClassSpec w = FunctionClassSpec::indicator_windows({ 0.1, 0.3 }, linspace(0.0, 1.0, 21));
  const SymmetrizationResult s = symmetrization_check(w, DensityModel::uniform(0.0, 1.0), 128, 1000, 9);
  CHECK(s.holds);
  CHECK(s.centered.mean <= 2.0 * s.rademacher.mean + s.allowance);
  CHECK(s.allowance == doctest::Approx(4.0 * std::sqrt(std::pow(s.centered.std_error, 2) +
                                                       4.0 * std::pow(s.rademacher.std_error, 2))));
}

TEST_CASE("moment bound for a constant class tracks the exact walk")
{
  // g = 1 with envelope 2 and sigma = 1: bound = sqrt(n log 2) and
  // mu_n = E|eps_1 + ... + eps_n|.
  const FunctionClassSpec one = constant_class(1.0, 2.0);
  const std::vector<std::size_t> sizes{ 4, 8, 16 };
  MomentBoundOptions opt;
  opt.draws = 4000;
  opt.samples_per_n = 2;
  const MomentBoundResult r = moment_bound_check(one, sizes, 1.0, 5, opt);
  CHECK(r.nu == 1.0);
  CHECK(r.beta == 2.0);
  REQUIRE(r.rows.size() == 3);
  for (const auto& row : r.rows) {
    const double n = static_cast<double>(row.n);
    const double oracle = exact_abs_walk(static_cast<int>(row.n)) / std::sqrt(n * std::log(2.0));
    CHECK(row.bound == doctest::Approx(std::sqrt(n * std::log(2.0))));
    CHECK(std::abs(row.bound_ratio - oracle) <= 4.0 * row.mu_stderr / row.bound);
    CHECK(row.empirical_sigma2 == 1.0);
  }
}

TEST_CASE("moment bound preconditions")
{
  const FunctionClassSpec small = constant_class(0.125, 0.125);
  const std::vector<std::size_t> sizes{ 32, 64 };
  MomentBoundOptions opt;
  opt.draws = 200;
  const MomentBoundResult r = moment_bound_check(small, sizes, 0.125, 3, opt);
  CHECK(r.sigma_condition);
  for (const auto& row : r.rows)
    CHECK(std::isfinite(row.bound_ratio));

  CHECK_THROWS_AS(moment_bound_check(small, sizes, 0.1, 3, opt), PreconditionError);
  opt.draws = 0;
  CHECK_THROWS_AS(moment_bound_check(small, sizes, 0.125, 3, opt), ArgumentError);
}

TEST_CASE("tail check")
{
  const FunctionClassSpec w = FunctionClassSpec::indicator_windows({ 0.2 }, linspace(0.0, 1.0, 11));
  const TailCheckResult t = talagrand_tail_check(w, 64, { 0.0, 1.0, 2.0, 4.0, 8.0 }, 200, 7);
  REQUIRE(t.rows.size() == 5);
  CHECK(t.rows[0].bound_value == doctest::Approx(4.0));
  CHECK(t.rows[0].empirical_prob <= 1.0);
  for (std::size_t i = 1; i < t.rows.size(); ++i)
    CHECK(t.rows[i].empirical_prob <= t.rows[i - 1].empirical_prob);
  CHECK(t.sigma2 == doctest::Approx(0.2 * 0.8).epsilon(1e-6));

  const TailCheckResult s = talagrand_tail_check(constant_class(1.0, 1.0), 64, { 5.0, 20.0 }, 1000, 7);
  CHECK(s.rows.back().empirical_prob == 0.0);
  CHECK_THROWS_AS(talagrand_tail_check(w, 64, { 1.0 }, 99, 7), ArgumentError);
}
