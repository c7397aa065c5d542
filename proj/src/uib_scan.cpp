#include "locpoly/uib_scan.hpp"

#include "locpoly/error.hpp"
#include "locpoly/parallel.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace locpoly {

namespace {

void check_grid_inputs(double c, std::size_t n, double h0)
{
  if (!(c > 0.0))
    throw ArgumentError("grid constant c must be positive");
  if (n < 3)
    throw ArgumentError("grid requires n >= 3");
  if (!(h0 > 0.0 && h0 < 1.0))
    throw ArgumentError("h0 must lie in (0, 1)");
}

std::vector<double> doubling(double start, double cap)
{
  std::vector<double> hs;
  for (int j = 0;; ++j) {
    double h = std::ldexp(start, j);
    if (h > cap)
      break;
    hs.push_back(h);
  }
  return hs;
}

std::string upper(std::string s)
{
  for (auto& ch : s)
    ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return s;
}

} // namespace

std::string to_string(GridKind k)
{
  switch (k) {
    case GridKind::Dyadic:
      return "dyadic";
    case GridKind::PowerLaw:
      return "powerlaw";
    case GridKind::Explicit:
      return "explicit";
  }
  return "unknown";
}

BandwidthGrid dyadic_grid(double c, std::size_t n, double h0)
{
  check_grid_inputs(c, n, h0);
  const double start = c * std::log(static_cast<double>(n)) / static_cast<double>(n);
  if (start > 2.0 * h0)
    throw ArgumentError("empty dyadic grid: c log(n)/n exceeds 2 h0");
  BandwidthGrid g;
  g.c = c;
  g.n = n;
  g.h0 = h0;
  g.gamma = 1.0;
  g.kind = GridKind::Dyadic;
  g.hs = doubling(start, 2.0 * h0);
  return g;
}

BandwidthGrid power_law_grid(double c, std::size_t n, double h0, double gamma)
{
  check_grid_inputs(c, n, h0);
  if (!(gamma > 0.0))
    throw ArgumentError("gamma must be positive");
  const double ratio = std::log(static_cast<double>(n)) / static_cast<double>(n);
  const double start = c * std::pow(ratio, gamma);
  if (start > 2.0 * h0)
    throw ArgumentError("empty power-law grid: floor exceeds 2 h0");
  BandwidthGrid g;
  g.c = c;
  g.n = n;
  g.h0 = h0;
  g.gamma = gamma;
  g.kind = GridKind::PowerLaw;
  g.hs = doubling(start, 2.0 * h0);
  return g;
}

BandwidthGrid range_grid(double a, double b, std::size_t n)
{
  if (!(a > 0.0) || !(a <= b))
    throw ArgumentError("range grid needs 0 < a <= b");
  BandwidthGrid g;
  g.n = n;
  g.kind = GridKind::Explicit;
  g.hs = doubling(a, b);
  if (g.hs.back() < b)
    g.hs.push_back(b);
  g.h0 = b / 2.0;
  return g;
}

BandwidthGrid explicit_grid(std::vector<double> hs, std::size_t n)
{
  if (hs.empty())
    throw ArgumentError("explicit grid must not be empty");
  for (double h : hs)
    if (!(h > 0.0) || !std::isfinite(h))
      throw ArgumentError("bandwidths must be positive and finite");
  std::sort(hs.begin(), hs.end());
  hs.erase(std::unique(hs.begin(), hs.end()), hs.end());
  BandwidthGrid g;
  g.n = n;
  g.kind = GridKind::Explicit;
  g.h0 = hs.back() / 2.0;
  g.hs = std::move(hs);
  return g;
}

double dyadic_count_asymptotic(double c, std::size_t n, double h0)
{
  const double nd = static_cast<double>(n);
  return std::log(nd * h0 / (c * std::log(nd))) / std::log(2.0);
}

std::string Target::label() const
{
  switch (kind) {
    case TargetKind::KDE:
      return "KDE";
    case TargetKind::FTilde:
      return "FTILDE(" + std::to_string(order) + ")";
    case TargetKind::RTilde:
      return "RTILDE(" + std::to_string(order) + ")";
    case TargetKind::Regression:
      return "REGRESSION(" + std::to_string(order) + ")";
  }
  return "UNKNOWN";
}

Target Target::parse(const std::string& text)
{
  std::string s = upper(text);
  std::string head = s;
  int order = 0;
  auto open = s.find_first_of("(:");
  if (open != std::string::npos) {
    head = s.substr(0, open);
    std::string rest = s.substr(open + 1);
    if (!rest.empty() && rest.back() == ')')
      rest.pop_back();
    try {
      std::size_t used = 0;
      order = std::stoi(rest, &used);
      if (used != rest.size())
        throw std::invalid_argument(rest);
    } catch (const std::exception&) {
      throw ArgumentError("cannot parse target order in '" + text + "'");
    }
    if (order < 0)
      throw ArgumentError("target order must be nonnegative");
  }
  if (head == "KDE")
    return kde();
  if (head == "FTILDE")
    return ftilde(order);
  if (head == "RTILDE")
    return rtilde(order);
  if (head == "REGRESSION")
    return regression(order);
  throw ArgumentError("unknown target '" + text + "'");
}

std::string to_string(CenteringKind k)
{
  switch (k) {
    case CenteringKind::Expectation:
      return "Expectation";
    case CenteringKind::TrueFunction:
      return "TrueFunction";
    case CenteringKind::Supplied:
      return "Supplied";
  }
  return "unknown";
}

CenteringKind parse_centering(const std::string& text)
{
  std::string s = upper(text);
  if (s == "EXPECTATION")
    return CenteringKind::Expectation;
  if (s == "TRUEFUNCTION" || s == "TRUE" || s == "TRUE_FUNCTION")
    return CenteringKind::TrueFunction;
  throw ArgumentError("unknown centering '" + text + "' (expected expectation or truefunction)");
}

Centering expectation_centering(const Target& target,
                                const Kernel& k,
                                std::function<double(double)> density,
                                std::function<double(double)> g)
{
  if (!density)
    throw ArgumentError("expectation centering requires a density model");
  Centering c;
  c.kind = CenteringKind::Expectation;
  switch (target.kind) {
    case TargetKind::KDE:
    case TargetKind::FTilde: {
      TransformedKernel tk(k, target.kind == TargetKind::KDE ? 0 : target.order);
      c.value = [=](double x, double h) { return convolution_expectation(density, tk, h, x); };
      break;
    }
    case TargetKind::RTilde: {
      if (!g)
        throw ArgumentError("RTILDE expectation requires the regression function");
      TransformedKernel tk(k, target.order);
      auto phi = [=](double t) {
        double d = density(t);
        return d == 0.0 ? 0.0 : g(t) * d;
      };
      c.value = [=](double x, double h) { return convolution_expectation(phi, tk, h, x); };
      break;
    }
    case TargetKind::Regression:
      throw ArgumentError("REGRESSION targets support TrueFunction centering only");
  }
  return c;
}

Centering true_function_centering(const Target& target,
                                  const Kernel& k,
                                  std::function<double(double)> density,
                                  std::function<double(double)> g)
{
  Centering c;
  c.kind = CenteringKind::TrueFunction;
  switch (target.kind) {
    case TargetKind::KDE:
      if (!density)
        throw ArgumentError("KDE centering requires a density");
      c.value = [=](double x, double) { return density(x); };
      break;
    case TargetKind::FTilde: {
      if (!density)
        throw ArgumentError("FTILDE centering requires a density");
      const double mu = kernel_moment(k, target.order);
      c.value = [=](double x, double) { return mu * density(x); };
      break;
    }
    case TargetKind::RTilde: {
      if (!density || !g)
        throw ArgumentError("RTILDE centering requires density and regression function");
      const double mu = kernel_moment(k, target.order);
      c.value = [=](double x, double) { return mu * g(x) * density(x); };
      break;
    }
    case TargetKind::Regression:
      if (!g)
        throw ArgumentError("REGRESSION centering requires the regression function");
      c.value = [=](double x, double) { return g(x); };
      break;
  }
  return c;
}

std::vector<std::optional<double>> estimate_curve(const PairedSample& sample,
                                                  const Kernel& k,
                                                  double h,
                                                  const Target& target,
                                                  std::span<const double> xgrid)
{
  std::vector<std::optional<double>> out(xgrid.size());
  for (std::size_t i = 0; i < xgrid.size(); ++i) {
    const double x = xgrid[i];
    switch (target.kind) {
      case TargetKind::KDE:
        out[i] = kde(sample, k, h, x);
        break;
      case TargetKind::FTilde:
        out[i] = moment_stats(sample, k, h, x, (target.order + 1) / 2).ftilde[target.order];
        break;
      case TargetKind::RTilde: {
        auto st = moment_stats(sample, k, h, x, target.order);
        if (st.rtilde.empty())
          throw ArgumentError("RTILDE target requires a sample with responses");
        out[i] = st.rtilde[target.order];
        break;
      }
      case TargetKind::Regression:
        try {
          out[i] = local_poly_fit(sample, k, h, x, target.order).estimate();
        } catch (const EmptyWindowError&) {
        } catch (const SingularDesignError&) {
        }
        break;
    }
  }
  return out;
}

Deviation sup_deviation(std::span<const std::optional<double>> estimates, std::span<const double> centers)
{
  if (estimates.size() != centers.size())
    throw ArgumentError("estimate and center grids differ in length");
  Deviation d;
  bool any = false;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    if (!estimates[i]) {
      ++d.skipped_points;
      continue;
    }
    any = true;
    d.sup_dev = std::max(d.sup_dev, std::abs(*estimates[i] - centers[i]));
  }
  if (!any)
    throw DegenerateScanError("every grid point was skipped (empty window or singular design)");
  return d;
}

Deviation sup_deviation(const PairedSample& sample,
                        const Kernel& k,
                        double h,
                        const Target& target,
                        const Centering& centering,
                        std::span<const double> xgrid)
{
  if (!centering.value)
    throw ArgumentError("centering has no value function");
  auto est = estimate_curve(sample, k, h, target, xgrid);
  std::vector<double> centers(xgrid.size());
  for (std::size_t i = 0; i < xgrid.size(); ++i)
    centers[i] = centering.value(xgrid[i], h);
  return sup_deviation(est, centers);
}

double rate_statistic(double sup_dev, std::size_t n, double h)
{
  if (n < 16)
    throw ArgumentError("rate statistic requires n >= 16");
  if (!(h > 0.0 && h < 1.0))
    throw ArgumentError("rate statistic requires 0 < h < 1");
  if (!(sup_dev >= 0.0))
    throw ArgumentError("sup deviation must be nonnegative");
  const double nd = static_cast<double>(n);
  const double denom = std::max(std::abs(std::log(h)), std::log(std::log(nd)));
  return std::sqrt(nd * h) * sup_dev / std::sqrt(denom);
}

const std::vector<double>& CenterTable::at(double h) const
{
  for (std::size_t i = 0; i < hs.size(); ++i)
    if (hs[i] == h)
      return values[i];
  throw ArgumentError("center table has no entry for h=" + std::to_string(h));
}

CenterTable tabulate_centers(const Centering& centering,
                             std::span<const double> hs,
                             std::span<const double> xgrid)
{
  if (!centering.value)
    throw ArgumentError("centering has no value function");
  CenterTable t;
  t.kind = centering.kind;
  t.hs.assign(hs.begin(), hs.end());
  t.values.assign(hs.size(), std::vector<double>(xgrid.size()));
  parallel_for(hs.size() * xgrid.size(), [&](std::size_t idx) {
    std::size_t r = idx / xgrid.size();
    std::size_t c = idx % xgrid.size();
    t.values[r][c] = centering.value(xgrid[c], hs[r]);
  });
  return t;
}

RateReport uib_scan(const PairedSample& sample,
                    const Kernel& k,
                    const BandwidthGrid& grid,
                    const Target& target,
                    const CenterTable& centers,
                    std::span<const double> xgrid)
{
  if (grid.hs.empty())
    throw ArgumentError("bandwidth grid is empty");
  if (xgrid.empty())
    throw ArgumentError("x grid is empty");
  if (target.kind == TargetKind::Regression && centers.kind == CenteringKind::Expectation)
    throw ArgumentError("REGRESSION targets support TrueFunction centering only");

  RateReport rep;
  rep.n = sample.size();
  rep.target = target;
  rep.centering = centers.kind;
  rep.xgrid_points = xgrid.size();
  rep.unnormalized = target.kind == TargetKind::Regression && centers.kind == CenteringKind::TrueFunction;

  if (!rep.unnormalized) {
    for (double h : grid.hs)
      if (!(h > 0.0 && h < 1.0))
        throw ArgumentError("rate statistics need every bandwidth in (0, 1)");
    if (rep.n < 16)
      throw ArgumentError("rate statistics need n >= 16");
  }
  if (grid.kind != GridKind::Explicit && grid.h0 >= 2.0 * sample.margin())
    rep.flags.push_back("h0_not_below_2eta");
  for (double x : xgrid)
    if (!sample.interval().contains(x)) {
      rep.flags.push_back("xgrid_outside_I");
      break;
    }

  bool any_ok = false;
  for (double h : grid.hs) {
    RateRow row;
    row.h = h;
    auto est = estimate_curve(sample, k, h, target, xgrid);
    try {
      Deviation d = sup_deviation(est, centers.at(h));
      row.sup_dev = d.sup_dev;
      row.skipped_points = d.skipped_points;
      row.rate_stat = rep.unnormalized ? d.sup_dev : rate_statistic(d.sup_dev, rep.n, h);
      rep.overall_rate_stat = std::max(rep.overall_rate_stat, row.rate_stat);
      any_ok = true;
    } catch (const DegenerateScanError&) {
      row.degenerate = true;
      row.skipped_points = xgrid.size();
      row.sup_dev = std::numeric_limits<double>::quiet_NaN();
      row.rate_stat = std::numeric_limits<double>::quiet_NaN();
    }
    rep.per_h.push_back(row);
  }
  if (!any_ok)
    rep.flags.push_back("all_bandwidths_degenerate");
  return rep;
}

RateReport uib_scan(const PairedSample& sample,
                    const Kernel& k,
                    const BandwidthGrid& grid,
                    const Target& target,
                    const Centering& centering,
                    std::span<const double> xgrid)
{
  return uib_scan(sample, k, grid, target, tabulate_centers(centering, grid.hs, xgrid), xgrid);
}

} // namespace locpoly
