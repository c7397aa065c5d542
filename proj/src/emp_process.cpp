#include "locpoly/emp_process.hpp"

#include "locpoly/error.hpp"
#include "locpoly/parallel.hpp"
#include "locpoly/random.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

namespace locpoly {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_grid(const std::vector<double>& hs, const std::vector<double>& xs)
{
  if (hs.empty() || xs.empty())
    throw ArgumentError("function class needs nonempty h and x grids");
  for (double h : hs)
    if (!(h > 0.0) || !std::isfinite(h))
      throw ArgumentError("function class bandwidths must be positive");
  for (double x : xs)
    if (!std::isfinite(x))
      throw ArgumentError("function class translations must be finite");
}

McEstimate summarize(const std::vector<double>& values)
{
  McEstimate e;
  e.draws = values.size();
  if (values.empty())
    return e;
  double sum = 0.0;
  for (double v : values)
    sum += v;
  e.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values)
      ss += (v - e.mean) * (v - e.mean);
    e.std_error = std::sqrt(ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()));
  }
  return e;
}

double sup_abs(const std::vector<double>& v)
{
  double m = 0.0;
  for (double x : v)
    m = std::max(m, std::abs(x));
  return m;
}

} // namespace

FunctionClassSpec FunctionClassSpec::kernel_translates(Kernel k, int j, std::vector<double> hs, std::vector<double> xs)
{
  check_grid(hs, xs);
  FunctionClassSpec s;
  s.kind_ = ClassKind::KernelTranslates;
  s.kernel_.emplace(std::move(k), j);
  s.envelope_ = s.kernel_->sup_bound();
  s.hs_ = std::move(hs);
  s.xs_ = std::move(xs);
  return s;
}

FunctionClassSpec FunctionClassSpec::indicator_windows(std::vector<double> hs, std::vector<double> xs)
{
  check_grid(hs, xs);
  FunctionClassSpec s;
  s.kind_ = ClassKind::IndicatorWindows;
  s.envelope_ = 1.0;
  s.hs_ = std::move(hs);
  s.xs_ = std::move(xs);
  return s;
}

FunctionClassSpec FunctionClassSpec::product(const FunctionClassSpec& a, const FunctionClassSpec& b)
{
  FunctionClassSpec s;
  s.kind_ = ClassKind::Product;
  s.a_ = std::make_shared<const FunctionClassSpec>(a);
  s.b_ = std::make_shared<const FunctionClassSpec>(b);
  s.envelope_ = a.envelope() * b.envelope();
  return s;
}

FunctionClassSpec FunctionClassSpec::explicit_members(std::vector<std::function<double(double)>> members,
                                                      double envelope)
{
  if (members.empty())
    throw ArgumentError("function class must not be empty");
  if (!(envelope >= 0.0) || !std::isfinite(envelope))
    throw ArgumentError("envelope must be finite and nonnegative");
  FunctionClassSpec s;
  s.kind_ = ClassKind::Explicit;
  s.members_ = std::move(members);
  s.envelope_ = envelope;
  return s;
}

std::size_t FunctionClassSpec::size() const
{
  switch (kind_) {
    case ClassKind::KernelTranslates:
    case ClassKind::IndicatorWindows:
      return hs_.size() * xs_.size();
    case ClassKind::Product:
      return a_->size() * b_->size();
    case ClassKind::Explicit:
      return members_.size();
  }
  return 0;
}

double FunctionClassSpec::evaluate(std::size_t m, double t) const
{
  switch (kind_) {
    case ClassKind::KernelTranslates: {
      const double h = hs_[m / xs_.size()];
      const double x = xs_[m % xs_.size()];
      return (*kernel_)((x - t) / h);
    }
    case ClassKind::IndicatorWindows: {
      const double h = hs_[m / xs_.size()];
      const double x = xs_[m % xs_.size()];
      return std::abs(x - t) <= 0.5 * h ? 1.0 : 0.0;
    }
    case ClassKind::Product: {
      const std::size_t nb = b_->size();
      const double va = a_->evaluate(m / nb, t);
      return va == 0.0 ? 0.0 : va * b_->evaluate(m % nb, t);
    }
    case ClassKind::Explicit:
      return members_[m](t);
  }
  return 0.0;
}

Interval FunctionClassSpec::support(std::size_t m) const
{
  switch (kind_) {
    case ClassKind::KernelTranslates: {
      const double h = hs_[m / xs_.size()];
      const double x = xs_[m % xs_.size()];
      const double half = kernel_->base().support_halfwidth() * h;
      return { x - half, x + half };
    }
    case ClassKind::IndicatorWindows: {
      const double h = hs_[m / xs_.size()];
      const double x = xs_[m % xs_.size()];
      return { x - 0.5 * h, x + 0.5 * h };
    }
    case ClassKind::Product: {
      const std::size_t nb = b_->size();
      Interval sa = a_->support(m / nb);
      Interval sb = b_->support(m % nb);
      return { std::max(sa.lo, sb.lo), std::min(sa.hi, sb.hi) };
    }
    case ClassKind::Explicit:
      return { -kInf, kInf };
  }
  return { -kInf, kInf };
}

const FunctionClassSpec& FunctionClassSpec::factor_a() const
{
  if (kind_ != ClassKind::Product)
    throw ArgumentError("factor_a() needs a product class");
  return *a_;
}

const FunctionClassSpec& FunctionClassSpec::factor_b() const
{
  if (kind_ != ClassKind::Product)
    throw ArgumentError("factor_b() needs a product class");
  return *b_;
}

std::string FunctionClassSpec::describe() const
{
  std::ostringstream os;
  switch (kind_) {
    case ClassKind::KernelTranslates:
      os << "KernelTranslates(" << kernel_->base().name() << ", j=" << kernel_->order() << ", " << hs_.size()
         << " h x " << xs_.size() << " x)";
      break;
    case ClassKind::IndicatorWindows:
      os << "IndicatorWindows(" << hs_.size() << " h x " << xs_.size() << " x)";
      break;
    case ClassKind::Product:
      os << "Product(" << a_->describe() << ", " << b_->describe() << ")";
      break;
    case ClassKind::Explicit:
      os << "Explicit(" << members_.size() << " members)";
      break;
  }
  return os.str();
}

std::vector<double> member_sums(const FunctionClassSpec& cls,
                                std::span<const double> points,
                                std::span<const double> weights)
{
  if (points.size() != weights.size())
    throw ArgumentError("points and weights differ in length");
  std::vector<double> out(cls.size(), 0.0);
  for (std::size_t m = 0; m < out.size(); ++m) {
    Interval sup = cls.support(m);
    if (sup.lo > sup.hi)
      continue;
    auto first = std::lower_bound(points.begin(), points.end(), sup.lo);
    auto last = std::upper_bound(first, points.end(), sup.hi);
    double s = 0.0;
    for (auto it = first; it != last; ++it) {
      const auto i = static_cast<std::size_t>(it - points.begin());
      s += weights[i] * cls.evaluate(m, *it);
    }
    out[m] = s;
  }
  return out;
}

std::vector<double> population_moments(const FunctionClassSpec& cls, const DensityModel& design, int power)
{
  if (power < 1)
    throw ArgumentError("moment power must be >= 1");
  std::vector<double> out(cls.size(), 0.0);
  parallel_for(out.size(), [&](std::size_t m) {
    Interval sup = cls.support(m);
    const double lo = std::max(sup.lo, design.support.lo);
    const double hi = std::min(sup.hi, design.support.hi);
    if (!(lo < hi))
      return;
    auto integrand = [&](double t) {
      const double g = cls.evaluate(m, t);
      double v = 1.0;
      for (int p = 0; p < power; ++p)
        v *= g;
      return v * design.pdf(t);
    };
    // Split at the member's center so kinks of the kernel stay on a node.
    const double mid = std::isfinite(sup.lo) && std::isfinite(sup.hi) ? 0.5 * (sup.lo + sup.hi) : 0.5 * (lo + hi);
    if (mid > lo && mid < hi)
      out[m] = integrate(integrand, lo, mid) + integrate(integrand, mid, hi);
    else
      out[m] = integrate(integrand, lo, hi);
  });
  return out;
}

McEstimate rademacher_moment(const FunctionClassSpec& cls,
                             std::span<const double> sample,
                             std::size_t draws,
                             std::uint64_t seed)
{
  if (draws == 0)
    throw ArgumentError("rademacher_moment needs at least one draw");
  if (cls.size() == 0)
    throw ArgumentError("function class is empty");
  if (sample.empty())
    throw ArgumentError("sample must not be empty");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());

  std::vector<double> values(draws);
  parallel_for(draws, [&](std::size_t d) {
    Rng rng(derive_seed(seed, { d }));
    std::vector<double> eps(sorted.size());
    for (auto& e : eps)
      e = rng.sign();
    values[d] = sup_abs(member_sums(cls, sorted, eps));
  });
  return summarize(values);
}

double rademacher_moment_exact(const FunctionClassSpec& cls, std::span<const double> sample)
{
  const std::size_t n = sample.size();
  if (n == 0 || n > 24)
    throw ArgumentError("exact enumeration needs 1 <= n <= 24");
  if (cls.size() == 0)
    throw ArgumentError("function class is empty");
  const std::size_t members = cls.size();
  std::vector<double> g(members * n);
  for (std::size_t m = 0; m < members; ++m)
    for (std::size_t i = 0; i < n; ++i)
      g[m * n + i] = cls.evaluate(m, sample[i]);

  // Gray-code walk: start with all signs -1, flip one sign per step.
  std::vector<double> sums(members, 0.0);
  for (std::size_t m = 0; m < members; ++m)
    for (std::size_t i = 0; i < n; ++i)
      sums[m] -= g[m * n + i];
  std::vector<int> sign(n, -1);
  double total = sup_abs(sums);
  const std::uint64_t patterns = std::uint64_t{ 1 } << n;
  for (std::uint64_t k = 1; k < patterns; ++k) {
    const auto bit = static_cast<std::size_t>(std::countr_zero(k));
    sign[bit] = -sign[bit];
    const double delta = 2.0 * sign[bit];
    for (std::size_t m = 0; m < members; ++m)
      sums[m] += delta * g[m * n + bit];
    total += sup_abs(sums);
  }
  return total / static_cast<double>(patterns);
}

McEstimate rademacher_moment_unconditional(const FunctionClassSpec& cls,
                                           const DensityModel& design,
                                           std::size_t n,
                                           std::size_t draws,
                                           std::uint64_t seed)
{
  if (draws == 0 || n == 0)
    throw ArgumentError("need at least one draw and one observation");
  std::vector<double> values(draws);
  parallel_for(draws, [&](std::size_t d) {
    Rng rng(derive_seed(seed, { d, n, 1 }));
    auto xs = draw_design(design, n, rng);
    std::sort(xs.begin(), xs.end());
    std::vector<double> eps(n);
    for (auto& e : eps)
      e = rng.sign();
    values[d] = sup_abs(member_sums(cls, xs, eps));
  });
  return summarize(values);
}

McEstimate centered_sup_moment(const FunctionClassSpec& cls,
                               const DensityModel& design,
                               std::size_t n,
                               std::size_t draws,
                               std::uint64_t seed)
{
  if (draws == 0 || n == 0)
    throw ArgumentError("need at least one draw and one observation");
  const auto means = population_moments(cls, design, 1);
  const std::vector<double> ones(n, 1.0);
  std::vector<double> values(draws);
  parallel_for(draws, [&](std::size_t d) {
    Rng rng(derive_seed(seed, { d, n, 2 }));
    auto xs = draw_design(design, n, rng);
    std::sort(xs.begin(), xs.end());
    auto sums = member_sums(cls, xs, ones);
    double best = 0.0;
    for (std::size_t m = 0; m < sums.size(); ++m)
      best = std::max(best, std::abs(sums[m] - static_cast<double>(n) * means[m]));
    values[d] = best;
  });
  return summarize(values);
}

SymmetrizationResult symmetrization_check(const FunctionClassSpec& cls,
                                          const DensityModel& design,
                                          std::size_t n,
                                          std::size_t draws,
                                          std::uint64_t seed)
{
  SymmetrizationResult r;
  r.centered = centered_sup_moment(cls, design, n, draws, derive_seed(seed, { 0 }));
  r.rademacher = rademacher_moment_unconditional(cls, design, n, draws, derive_seed(seed, { 1 }));
  r.allowance = 4.0 * std::sqrt(r.centered.std_error * r.centered.std_error +
                                4.0 * r.rademacher.std_error * r.rademacher.std_error);
  r.holds = r.centered.mean <= 2.0 * r.rademacher.mean + r.allowance;
  return r;
}

CoveringCurve fit_covering_curve(std::vector<double> eps_grid, std::vector<std::size_t> counts)
{
  if (eps_grid.size() != counts.size())
    throw ArgumentError("eps grid and counts differ in length");
  CoveringCurve c;
  c.eps_grid = std::move(eps_grid);
  c.counts = std::move(counts);
  const std::size_t k = c.eps_grid.size();
  if (k < 2)
    return c;

  double mx = 0.0, my = 0.0;
  std::vector<double> x(k), y(k);
  for (std::size_t i = 0; i < k; ++i) {
    x[i] = std::log(1.0 / c.eps_grid[i]);
    y[i] = std::log(static_cast<double>(c.counts[i]));
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0)
    throw ArgumentError("eps grid needs at least two distinct values");
  c.nu_hat = sxy / sxx;
  c.c_hat = std::exp(my - c.nu_hat * mx);
  double ssr = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double r = y[i] - (my + c.nu_hat * (x[i] - mx));
    ssr += r * r;
  }
  c.r_squared = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
  c.nu_stderr = k > 2 ? std::sqrt(ssr / static_cast<double>(k - 2) / sxx) : 0.0;
  c.fitted = true;
  return c;
}

namespace {

//! Members are indicators of their (interval) support.
bool is_indicator_class(const FunctionClassSpec& cls)
{
  if (cls.kind() == ClassKind::IndicatorWindows)
    return true;
  if (cls.kind() == ClassKind::Product)
    return is_indicator_class(cls.factor_a()) && is_indicator_class(cls.factor_b());
  return false;
}

} // namespace

CoveringCurve covering_estimate(const FunctionClassSpec& cls,
                                std::span<const double> measure_sample,
                                std::vector<double> eps_grid)
{
  if (measure_sample.empty())
    throw ArgumentError("covering_estimate needs a nonempty measure sample");
  if (eps_grid.empty())
    throw ArgumentError("eps grid must not be empty");
  for (double e : eps_grid)
    if (!(e > 0.0 && e < 1.0))
      throw ArgumentError("eps values must lie in (0, 1)");
  if (cls.size() == 0)
    throw ArgumentError("function class is empty");
  std::sort(eps_grid.begin(), eps_grid.end(), std::greater<>());

  const double env = cls.envelope();
  if (!(env > 0.0))
    throw DegenerateMetricError("envelope has zero L2(Q) norm; the normalized metric is undefined");

  const std::size_t n = measure_sample.size();
  const std::size_t members = cls.size();
  const double inv_norm = 1.0 / (env * env * static_cast<double>(n));

  // Members with interval support are nonzero on a contiguous run of the
  // sorted sample; store only that run. Windows need just the run bounds.
  const bool windows = is_indicator_class(cls);
  const bool banded = cls.kind() != ClassKind::Explicit;
  std::vector<double> sorted(measure_sample.begin(), measure_sample.end());
  if (banded)
    std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> lo_idx(members, 0), hi_idx(members, n), offset(members + 1, 0);
  if (banded) {
    for (std::size_t m = 0; m < members; ++m) {
      const Interval w = cls.support(m);
      lo_idx[m] = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), w.lo) - sorted.begin());
      hi_idx[m] = static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), w.hi) - sorted.begin());
      hi_idx[m] = std::max(hi_idx[m], lo_idx[m]);
      if (windows) {
        // Guard against rounding at the window edges.
        while (lo_idx[m] < hi_idx[m] && cls.evaluate(m, sorted[lo_idx[m]]) == 0.0)
          ++lo_idx[m];
        while (hi_idx[m] > lo_idx[m] && cls.evaluate(m, sorted[hi_idx[m] - 1]) == 0.0)
          --hi_idx[m];
      }
    }
  }
  for (std::size_t m = 0; m < members; ++m)
    offset[m + 1] = offset[m] + (windows ? 0 : hi_idx[m] - lo_idx[m]);

  // Values scaled so plain Euclidean distance equals the normalized metric.
  const double scale = std::sqrt(inv_norm);
  std::vector<double> values(offset[members]);
  std::vector<double> norm2(members, 0.0);
  if (!windows) {
    parallel_for(members, [&](std::size_t m) {
      double acc = 0.0;
      for (std::size_t i = lo_idx[m]; i < hi_idx[m]; ++i) {
        const double v = cls.evaluate(m, sorted[i]) * scale;
        values[offset[m] + i - lo_idx[m]] = v;
        acc += v * v;
      }
      norm2[m] = acc;
    });
  }

  auto dist2 = [&](std::size_t a, std::size_t b) {
    const std::size_t lo = std::max(lo_idx[a], lo_idx[b]);
    const std::size_t hi = std::min(hi_idx[a], hi_idx[b]);
    if (windows) {
      const std::size_t common = hi > lo ? hi - lo : 0;
      return static_cast<double>(hi_idx[a] - lo_idx[a] + hi_idx[b] - lo_idx[b] - 2 * common) * inv_norm;
    }
    if (hi <= lo)
      return norm2[a] + norm2[b];
    // Outside the overlap only one of the two rows is nonzero.
    const double* ra = &values[offset[a] + lo - lo_idx[a]];
    const double* rb = &values[offset[b] + lo - lo_idx[b]];
    double s = norm2[a] + norm2[b];
    for (std::size_t i = 0; i < hi - lo; ++i)
      s += (ra[i] - rb[i]) * (ra[i] - rb[i]) - ra[i] * ra[i] - rb[i] * rb[i];
    return std::max(s, 0.0);
  };

  const double target = eps_grid.back();
  std::vector<double> nearest(members, kInf);
  std::vector<double> radius; // covering radius after k+1 centers
  std::size_t center = 0;
  for (;;) {
    const std::size_t chunk = 256;
    const std::size_t blocks = (members + chunk - 1) / chunk;
    parallel_for(blocks, [&](std::size_t b) {
      const std::size_t end = std::min(members, (b + 1) * chunk);
      for (std::size_t m = b * chunk; m < end; ++m)
        nearest[m] = std::min(nearest[m], dist2(m, center));
    });
    std::size_t far = 0;
    for (std::size_t m = 1; m < members; ++m)
      if (nearest[m] > nearest[far])
        far = m;
    const double r = std::sqrt(nearest[far]);
    radius.push_back(r);
    if (r <= target || nearest[far] == 0.0)
      break;
    center = far;
  }

  std::vector<std::size_t> counts;
  for (double e : eps_grid) {
    std::size_t k = 0;
    while (radius[k] > e)
      ++k;
    counts.push_back(k + 1);
  }
  CoveringCurve curve = fit_covering_curve(eps_grid, counts);
  curve.members = members;
  return curve;
}

double product_class_covering(const CoveringCurve& a, const CoveringCurve& b)
{
  if (!a.fitted || !b.fitted)
    throw ArgumentError("product_class_covering needs two fitted covering curves");
  return a.nu_hat + b.nu_hat;
}

MomentBoundResult moment_bound_check(const FunctionClassSpec& cls,
                                     std::span<const std::size_t> sample_sizes,
                                     double sigma,
                                     std::uint64_t seed,
                                     const MomentBoundOptions& options)
{
  if (sample_sizes.empty())
    throw ArgumentError("moment_bound_check needs at least one sample size");
  if (options.draws == 0)
    throw ArgumentError("moment_bound_check needs at least one sign draw");
  if (options.samples_per_n == 0)
    throw ArgumentError("moment_bound_check needs at least one design sample per n");
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw ArgumentError("sigma must be positive");

  MomentBoundResult res;
  res.sigma = sigma;
  if (options.covering) {
    res.covering = *options.covering;
  } else {
    Rng rng(derive_seed(seed, { 0xC0 }));
    auto pts = draw_design(options.design, options.covering_sample, rng);
    std::sort(pts.begin(), pts.end());
    res.covering = covering_estimate(cls, pts, options.eps_grid);
  }
  if (!res.covering.fitted)
    throw ArgumentError("covering curve could not be fitted");
  res.nu = std::max(res.covering.nu_hat, 1.0);
  res.beta = cls.envelope();
  res.sigma_condition = sigma <= 1.0 / (8.0 * std::max(res.covering.c_hat, 1.0));
  const double log_term = std::log(std::max(res.beta, 1.0 / sigma));

  for (std::size_t n : sample_sizes) {
    if (n == 0)
      throw ArgumentError("sample sizes must be positive");
    MomentBoundRow row;
    row.n = n;
    std::vector<std::vector<double>> samples(options.samples_per_n);
    for (std::size_t s = 0; s < options.samples_per_n; ++s) {
      Rng rng(derive_seed(seed, { n, s }));
      samples[s] = draw_design(options.design, n, rng);
      std::sort(samples[s].begin(), samples[s].end());
    }

    // Second-moment condition on the pooled design points.
    std::vector<double> pooled;
    for (const auto& s : samples)
      pooled.insert(pooled.end(), s.begin(), s.end());
    std::sort(pooled.begin(), pooled.end());
    std::vector<double> sq_sums(cls.size(), 0.0);
    parallel_for(cls.size(), [&](std::size_t m) {
      Interval sup = cls.support(m);
      auto first = std::lower_bound(pooled.begin(), pooled.end(), sup.lo);
      auto last = std::upper_bound(first, pooled.end(), sup.hi);
      double acc = 0.0;
      for (auto it = first; it != last; ++it) {
        const double g = cls.evaluate(m, *it);
        acc += g * g;
      }
      sq_sums[m] = acc;
    });
    row.empirical_sigma2 = *std::max_element(sq_sums.begin(), sq_sums.end()) / static_cast<double>(pooled.size());
    if (row.empirical_sigma2 > sigma * sigma)
      throw PreconditionError("second-moment condition sup E g^2 <= sigma^2 fails at n=" + std::to_string(n) +
                              ": empirical " + std::to_string(row.empirical_sigma2) + " > " +
                              std::to_string(sigma * sigma));

    std::vector<double> values(options.samples_per_n * options.draws);
    parallel_for(values.size(), [&](std::size_t idx) {
      const std::size_t s = idx / options.draws;
      Rng rng(derive_seed(seed, { n, s, idx % options.draws, 7 }));
      std::vector<double> eps(n);
      for (auto& e : eps)
        e = rng.sign();
      values[idx] = sup_abs(member_sums(cls, samples[s], eps));
    });
    McEstimate mu = summarize(values);
    row.mu_hat = mu.mean;
    row.mu_stderr = mu.std_error;
    row.bound = std::sqrt(res.nu * static_cast<double>(n) * sigma * sigma * log_term);
    row.bound_ratio = row.mu_hat / row.bound;
    row.sup_norm_condition = cls.envelope() <= std::sqrt(static_cast<double>(n) * sigma * sigma / log_term) /
                                                 (2.0 * std::sqrt(res.nu + 1.0));
    res.rows.push_back(row);
  }

  double lo = kInf, hi = 0.0;
  for (const auto& r : res.rows) {
    lo = std::min(lo, r.bound_ratio);
    hi = std::max(hi, r.bound_ratio);
  }
  res.ratio_spread = lo > 0.0 ? hi / lo : kInf;
  return res;
}

TailCheckResult talagrand_tail_check(const FunctionClassSpec& cls,
                                     std::size_t n,
                                     std::vector<double> t_grid,
                                     std::size_t replicates,
                                     std::uint64_t seed,
                                     const DensityModel& design,
                                     std::size_t mu_draws)
{
  if (replicates < 100)
    throw ArgumentError("talagrand_tail_check needs at least 100 replicates");
  if (n == 0)
    throw ArgumentError("n must be positive");
  if (t_grid.empty())
    throw ArgumentError("t grid must not be empty");
  for (double t : t_grid)
    if (!(t >= 0.0) || !std::isfinite(t))
      throw ArgumentError("t values must be finite and nonnegative");
  std::sort(t_grid.begin(), t_grid.end());

  TailCheckResult res;
  res.replicates = replicates;
  res.envelope = cls.envelope();
  const auto mean = population_moments(cls, design, 1);
  const auto second = population_moments(cls, design, 2);
  for (std::size_t m = 0; m < mean.size(); ++m)
    res.sigma2 = std::max(res.sigma2, second[m] - mean[m] * mean[m]);
  res.mu_hat = rademacher_moment_unconditional(cls, design, n, mu_draws, derive_seed(seed, { 0 })).mean;

  const std::size_t members = cls.size();
  std::vector<double> maxima(replicates);
  parallel_for(replicates, [&](std::size_t r) {
    Rng rng(derive_seed(seed, { 1, r }));
    auto xs = draw_design(design, n, rng);
    double best = 0.0;
    for (std::size_t m = 0; m < members; ++m) {
      Interval sup = cls.support(m);
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double g = (xs[i] < sup.lo || xs[i] > sup.hi) ? 0.0 : cls.evaluate(m, xs[i]);
        s += g - mean[m];
        best = std::max(best, std::abs(s));
      }
    }
    maxima[r] = best;
  });

  for (double t : t_grid) {
    std::size_t hits = 0;
    for (double v : maxima)
      if (v >= res.mu_hat + t)
        ++hits;
    TailRow row;
    row.t = t;
    row.empirical_prob = static_cast<double>(hits) / static_cast<double>(replicates);
    const double gauss = res.sigma2 > 0.0 ? std::exp(-t * t / (static_cast<double>(n) * res.sigma2)) : (t > 0 ? 0.0 : 1.0);
    const double expo = res.envelope > 0.0 ? std::exp(-t / res.envelope) : (t > 0 ? 0.0 : 1.0);
    row.bound_value = 2.0 * (gauss + expo);
    res.rows.push_back(row);
  }
  return res;
}

} // namespace locpoly
