#include "locpoly/estimators.hpp"

#include "locpoly/error.hpp"
#include "locpoly/parallel.hpp"

#include <cmath>

namespace locpoly {

namespace {

void check_bandwidth(double h)
{
  if (!(h > 0.0) || !std::isfinite(h))
    throw ArgumentError("bandwidth must be positive and finite");
}

void require_y(const PairedSample& sample, const char* what)
{
  if (!sample.has_y())
    throw ArgumentError(std::string(what) + " requires a sample with responses");
}

} // namespace

double kde(const PairedSample& sample, const Kernel& k, double h, double x)
{
  check_bandwidth(h);
  auto xs = sample.xs();
  auto [first, last] = sample.window(x, k.support_halfwidth() * h);
  double sum = 0.0;
  for (std::size_t i = first; i < last; ++i)
    sum += k((x - xs[i]) / h);
  return sum / (static_cast<double>(sample.size()) * h);
}

double kde(std::span<const double> points, std::size_t dim, const Kernel& k, double h, std::span<const double> x)
{
  check_bandwidth(h);
  if (dim == 0 || points.empty() || points.size() % dim != 0)
    throw ArgumentError("kde: points must be a nonempty row-major n x d array");
  if (x.size() != dim)
    throw ArgumentError("kde: evaluation point has wrong dimension");
  const std::size_t n = points.size() / dim;
  const double scale = std::pow(h, 1.0 / static_cast<double>(dim));
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double w = 1.0;
    for (std::size_t c = 0; c < dim && w != 0.0; ++c)
      w *= k((x[c] - points[i * dim + c]) / scale);
    sum += w;
  }
  return sum / (static_cast<double>(n) * h);
}

double nadaraya_watson(const PairedSample& sample,
                       const Kernel& k,
                       double h,
                       double x0,
                       const std::function<double(double)>& psi)
{
  check_bandwidth(h);
  require_y(sample, "nadaraya_watson");
  auto xs = sample.xs();
  auto ys = sample.ys();
  auto [first, last] = sample.window(x0, k.support_halfwidth() * h);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = first; i < last; ++i) {
    double w = k((x0 - xs[i]) / h);
    if (w == 0.0)
      continue;
    num += psi(ys[i]) * w;
    den += w;
  }
  if (den == 0.0)
    throw EmptyWindowError("no observation with positive weight at x0=" + std::to_string(x0) +
                           ", h=" + std::to_string(h));
  return num / den;
}

double nadaraya_watson(const PairedSample& sample, const Kernel& k, double h, double x0)
{
  return nadaraya_watson(sample, k, h, x0, [](double y) { return y; });
}

double conditional_ecdf(const PairedSample& sample, const Kernel& k, double h, double x0, double t)
{
  if (!k.is_nonneg())
    throw ArgumentError("conditional_ecdf requires a nonnegative kernel");
  return nadaraya_watson(sample, k, h, x0, [t](double y) { return y <= t ? 1.0 : 0.0; });
}

MomentStats moment_stats(const PairedSample& sample, const Kernel& k, double h, double x0, int p)
{
  check_bandwidth(h);
  if (p < 0)
    throw ArgumentError("moment_stats: degree must be nonnegative");

  MomentStats st;
  st.x0 = x0;
  st.h = h;
  st.ftilde.assign(2 * p + 1, 0.0);
  if (sample.has_y())
    st.rtilde.assign(p + 1, 0.0);

  auto xs = sample.xs();
  auto ys = sample.ys();
  auto [first, last] = sample.window(x0, k.support_halfwidth() * h);
  for (std::size_t i = first; i < last; ++i) {
    const double w = k((x0 - xs[i]) / h);
    if (w == 0.0)
      continue;
    ++st.n_in_window;
    const double v = (xs[i] - x0) / h;
    double term = w;
    for (int j = 0; j <= 2 * p; ++j) {
      st.ftilde[j] += term;
      if (j <= p && !st.rtilde.empty())
        st.rtilde[j] += ys[i] * term;
      term *= v;
    }
  }

  const double norm = 1.0 / (static_cast<double>(sample.size()) * h);
  for (auto& f : st.ftilde)
    f *= norm;
  for (auto& r : st.rtilde)
    r *= norm;
  return st;
}

double LocalPolyFit::derivative(int order) const
{
  if (order < 0 || order > p)
    throw ArgumentError("derivative order outside 0..p");
  double fact = 1.0;
  for (int i = 2; i <= order; ++i)
    fact *= i;
  return fact * beta[order];
}

Eigen::MatrixXd scaled_design_matrix(const MomentStats& stats, int p)
{
  if (p < 0 || p > stats.degree())
    throw ArgumentError("degree outside the range covered by the moment stats");
  Eigen::MatrixXd a(p + 1, p + 1);
  for (int r = 0; r <= p; ++r)
    for (int c = 0; c <= p; ++c)
      a(r, c) = stats.ftilde[r + c];
  return a;
}

LocalPolyFit fit_from_stats(const MomentStats& stats, int p)
{
  if (stats.rtilde.empty())
    throw ArgumentError("local polynomial fit requires a sample with responses");
  Eigen::MatrixXd a = scaled_design_matrix(stats, p);
  if (stats.n_in_window == 0)
    throw EmptyWindowError("no observation with positive weight at x0=" + std::to_string(stats.x0) +
                           ", h=" + std::to_string(stats.h));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  const double cond = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(cond <= kMaxConditionNumber))
    throw SingularDesignError("local design at x0=" + std::to_string(stats.x0) + ", h=" +
                              std::to_string(stats.h) + " has cond(A)=" + std::to_string(cond));

  Eigen::VectorXd rhs(p + 1);
  for (int j = 0; j <= p; ++j)
    rhs(j) = stats.rtilde[j];
  Eigen::VectorXd gamma = a.ldlt().solve(rhs);

  LocalPolyFit fit;
  fit.x0 = stats.x0;
  fit.h = stats.h;
  fit.p = p;
  fit.cond_A = cond;
  fit.n_in_window = stats.n_in_window;
  fit.beta.resize(p + 1);
  double hk = 1.0;
  for (int j = 0; j <= p; ++j) {
    fit.beta[j] = gamma(j) / hk;
    hk *= stats.h;
  }
  return fit;
}

LocalPolyFit local_poly_fit(const PairedSample& sample, const Kernel& k, double h, double x0, int p)
{
  if (!k.is_nonneg())
    throw ArgumentError("local_poly_fit requires a nonnegative kernel");
  require_y(sample, "local_poly_fit");
  return fit_from_stats(moment_stats(sample, k, h, x0, p), p);
}

double closed_form_fit(const MomentStats& stats, int p)
{
  if (p < 0 || p > 2)
    throw ArgumentError("closed forms exist for p = 0, 1, 2 only");
  if (p > stats.degree() || stats.rtilde.size() < static_cast<std::size_t>(p + 1))
    throw ArgumentError("moment stats do not cover the requested degree");

  const auto& f = stats.ftilde;
  const auto& r = stats.rtilde;
  double num = 0.0;
  double den = 0.0;
  double scale = 0.0;
  switch (p) {
    case 0:
      num = r[0];
      den = f[0];
      scale = std::abs(f[0]);
      break;
    case 1:
      num = f[2] * r[0] - f[1] * r[1];
      den = f[0] * f[2] - f[1] * f[1];
      scale = std::abs(f[0] * f[2]) + f[1] * f[1];
      break;
    case 2: {
      const double c0 = f[2] * f[4] - f[3] * f[3];
      const double c1 = f[2] * f[3] - f[1] * f[4];
      const double c2 = f[1] * f[3] - f[2] * f[2];
      num = c0 * r[0] + c1 * r[1] + c2 * r[2];
      den = f[0] * f[2] * f[4] - f[0] * f[3] * f[3] - f[1] * f[1] * f[4] + 2.0 * f[1] * f[2] * f[3] -
            f[2] * f[2] * f[2];
      scale = std::abs(f[0] * f[2] * f[4]) + std::abs(f[0] * f[3] * f[3]) + std::abs(f[1] * f[1] * f[4]) +
              2.0 * std::abs(f[1] * f[2] * f[3]) + std::abs(f[2] * f[2] * f[2]);
      break;
    }
  }
  if (!(std::abs(den) >= 1e-14 * scale) || den == 0.0)
    throw SingularDesignError("closed-form denominator vanishes at x0=" + std::to_string(stats.x0));
  return num / den;
}

std::string to_string(FitStatus s)
{
  switch (s) {
    case FitStatus::Ok:
      return "ok";
    case FitStatus::EmptyWindow:
      return "empty_window";
    case FitStatus::Singular:
      return "singular";
  }
  return "unknown";
}

std::vector<CurvePoint> regression_curve(const PairedSample& sample,
                                         const Kernel& k,
                                         double h,
                                         int p,
                                         std::span<const double> xgrid)
{
  std::vector<CurvePoint> out(xgrid.size());
  parallel_for(xgrid.size(), [&](std::size_t i) {
    CurvePoint& pt = out[i];
    pt.x0 = xgrid[i];
    try {
      pt.fit = local_poly_fit(sample, k, h, xgrid[i], p);
    } catch (const EmptyWindowError& e) {
      pt.status = FitStatus::EmptyWindow;
      pt.message = e.what();
    } catch (const SingularDesignError& e) {
      pt.status = FitStatus::Singular;
      pt.message = e.what();
    }
  });
  return out;
}

std::vector<double> linspace(double lo, double hi, std::size_t count)
{
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = 0.5 * (lo + hi);
    return out;
  }
  for (std::size_t i = 0; i < count; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  if (count > 1)
    out.back() = hi;
  return out;
}

} // namespace locpoly
