#include "locpoly/kernel.hpp"

#include "locpoly/error.hpp"

#include <algorithm>
#include <cmath>

namespace locpoly {

namespace {

constexpr int kBaseNodes = 2049;
constexpr double kQuadratureTol = 1e-10;

double checked(double v)
{
  if (!std::isfinite(v))
    throw EvaluationError("integrand evaluated to a non-finite value");
  return v;
}

} // namespace

Kernel Kernel::uniform()
{
  return Kernel(KernelId::Uniform, "uniform", 0.5, 1.0, true);
}

Kernel Kernel::epanechnikov()
{
  return Kernel(KernelId::Epanechnikov01, "epanechnikov", 0.5, 1.5, true);
}

Kernel Kernel::triangular()
{
  return Kernel(KernelId::Triangular, "triangular", 0.5, 2.0, true);
}

Kernel Kernel::custom(std::string name, std::function<double(double)> fn, double support_halfwidth)
{
  if (!fn)
    throw ArgumentError("custom kernel: empty callable");
  if (!(support_halfwidth > 0.0) || support_halfwidth > 0.5)
    throw ArgumentError("custom kernel: support_halfwidth must lie in (0, 1/2]");

  double kappa = 0.0;
  double lowest = 0.0;
  const int probes = 4 * (kBaseNodes - 1) + 1;
  for (int i = 0; i < probes; ++i) {
    double u = -support_halfwidth + 2.0 * support_halfwidth * i / (probes - 1);
    double v = fn(u);
    if (!std::isfinite(v))
      throw EvaluationError("custom kernel '" + name + "' is not finite at u=" + std::to_string(u));
    kappa = std::max(kappa, std::abs(v));
    lowest = std::min(lowest, v);
  }

  Kernel k(KernelId::Custom, std::move(name), support_halfwidth, kappa, lowest >= 0.0);
  k.fn_ = std::move(fn);

  double mass = integrate([&k](double u) { return k(u); }, -support_halfwidth, support_halfwidth);
  if (std::abs(mass - 1.0) > kQuadratureTol)
    throw ArgumentError("custom kernel '" + k.name_ + "' integrates to " + std::to_string(mass) +
                        ", expected 1");
  return k;
}

Kernel Kernel::from_name(std::string_view name)
{
  if (name == "uniform")
    return uniform();
  if (name == "epanechnikov" || name == "epanechnikov01")
    return epanechnikov();
  if (name == "triangular")
    return triangular();
  throw ArgumentError("unknown kernel '" + std::string(name) +
                      "' (expected uniform, epanechnikov or triangular)");
}

std::optional<double> Kernel::closed_form_moment(int j) const
{
  if (j < 0)
    throw ArgumentError("moment order must be nonnegative");
  if (id_ == KernelId::Custom)
    return std::nullopt;
  if (j % 2 == 1)
    return 0.0;
  const double half_pow = std::ldexp(1.0, -j);
  switch (id_) {
    case KernelId::Uniform:
      return half_pow / (j + 1);
    case KernelId::Epanechnikov01:
      return 3.0 * half_pow / ((j + 1.0) * (j + 3.0));
    case KernelId::Triangular:
      return 2.0 * half_pow / ((j + 1.0) * (j + 2.0));
    case KernelId::Custom:
      break;
  }
  return std::nullopt;
}

TransformedKernel::TransformedKernel(Kernel base, int order)
  : base_(std::move(base))
  , order_(order)
{
  if (order < 0)
    throw ArgumentError("transformed kernel order must be nonnegative");
}

double TransformedKernel::sup_bound() const
{
  return base_.sup_norm() * std::pow(base_.support_halfwidth(), order_);
}

double simpson(const std::function<double(double)>& f, double a, double b, int nodes)
{
  if (nodes < 3 || nodes % 2 == 0)
    throw ArgumentError("simpson: node count must be odd and >= 3");
  const int intervals = nodes - 1;
  const double step = (b - a) / intervals;
  double ends = checked(f(a)) + checked(f(b));
  double odd = 0.0;
  double even = 0.0;
  for (int i = 1; i < intervals; ++i) {
    double v = checked(f(a + i * step));
    (i % 2 == 1 ? odd : even) += v;
  }
  return step / 3.0 * (ends + 4.0 * odd + 2.0 * even);
}

double integrate(const std::function<double(double)>& f, double a, double b)
{
  double coarse = simpson(f, a, b, kBaseNodes);
  double fine = simpson(f, a, b, 2 * kBaseNodes - 1);
  if (std::abs(coarse - fine) <= kQuadratureTol)
    return fine;
  return simpson(f, a, b, 4 * kBaseNodes - 3);
}

double quadrature_moment(const Kernel& k, int j)
{
  if (j < 0)
    throw ArgumentError("moment order must be nonnegative");
  TransformedKernel tk(k, j);
  const double s = k.support_halfwidth();
  // Split at 0 so kernels with a kink there (triangular) stay smooth per piece.
  auto f = [&tk](double u) { return tk(u); };
  return integrate(f, -s, 0.0) + integrate(f, 0.0, s);
}

double kernel_moment(const Kernel& k, int j)
{
  if (auto exact = k.closed_form_moment(j))
    return *exact;
  return quadrature_moment(k, j);
}

GramMatrix gram_matrix(const Kernel& k, int p)
{
  if (p < 0)
    throw ArgumentError("gram_matrix: degree must be nonnegative");
  if (!k.is_nonneg())
    throw ArgumentError("gram_matrix: kernel '" + k.name() + "' takes negative values");

  std::vector<double> mu(2 * p + 1);
  for (int j = 0; j <= 2 * p; ++j)
    mu[j] = kernel_moment(k, j);

  GramMatrix g;
  g.degree = p;
  g.entries.resize(p + 1, p + 1);
  for (int r = 0; r <= p; ++r)
    for (int c = 0; c <= p; ++c)
      g.entries(r, c) = mu[r + c];

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g.entries, Eigen::EigenvaluesOnly);
  g.min_eigenvalue = eig.eigenvalues().minCoeff();
  if (!(g.min_eigenvalue > 0.0))
    throw SingularGramError("Gram matrix of kernel '" + k.name() + "' is not positive definite");
  return g;
}

double convolution_expectation(const std::function<double(double)>& density,
                               const TransformedKernel& tk,
                               double h,
                               double x0)
{
  if (!(h > 0.0) || !std::isfinite(h))
    throw ArgumentError("convolution_expectation: bandwidth must be positive");
  // Substituting t = x0 - h u turns h^-1 int H((x0 - t)/h) f(t) dt into
  // int H(u) f(x0 - h u) du over the kernel support.
  auto integrand = [&](double u) {
    double d = density(x0 - h * u);
    if (!std::isfinite(d))
      throw EvaluationError("density is not finite at t=" + std::to_string(x0 - h * u));
    return tk(u) * d;
  };
  const double s = tk.base().support_halfwidth();
  return integrate(integrand, -s, 0.0) + integrate(integrand, 0.0, s);
}

} // namespace locpoly
