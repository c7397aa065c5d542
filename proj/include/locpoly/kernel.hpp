#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace locpoly {

enum class KernelId
{
  Uniform,
  Epanechnikov01,
  Triangular,
  Custom
};

//! Compactly supported smoothing kernel on [-1/2, 1/2].
//!
//! Built-ins are evaluated inline; custom kernels wrap a callable and are
//! validated (support, normalization) at construction.
class Kernel
{
public:
  static Kernel uniform();
  //! K(u) = 6 (1/4 - u^2) on |u| <= 1/2.
  static Kernel epanechnikov();
  //! K(u) = 2 - 4|u| on |u| <= 1/2.
  static Kernel triangular();

  //! Throws ArgumentError if support_halfwidth > 1/2 or the integral is not
  //! 1 within 1e-10, EvaluationError if fn yields NaN/Inf on the support.
  static Kernel custom(std::string name,
                       std::function<double(double)> fn,
                       double support_halfwidth = 0.5);

  //! "uniform", "epanechnikov", "triangular".
  static Kernel from_name(std::string_view name);

  double operator()(double u) const
  {
    if (u < -support_ || u > support_)
      return 0.0;
    switch (id_) {
      case KernelId::Uniform:
        return 1.0;
      case KernelId::Epanechnikov01:
        return 6.0 * (0.25 - u * u);
      case KernelId::Triangular:
        return 2.0 - 4.0 * (u < 0.0 ? -u : u);
      case KernelId::Custom:
        break;
    }
    return fn_(u);
  }

  KernelId id() const { return id_; }
  const std::string& name() const { return name_; }
  double support_halfwidth() const { return support_; }
  //! kappa = sup |K|.
  double sup_norm() const { return sup_norm_; }
  bool is_nonneg() const { return nonneg_; }

  //! Exact mu_j for built-ins, nullopt for custom kernels.
  std::optional<double> closed_form_moment(int j) const;

private:
  Kernel(KernelId id, std::string name, double support, double kappa, bool nonneg)
    : id_(id)
    , name_(std::move(name))
    , support_(support)
    , sup_norm_(kappa)
    , nonneg_(nonneg)
  {}

  KernelId id_;
  std::string name_;
  double support_;
  double sup_norm_;
  bool nonneg_;
  std::function<double(double)> fn_;
};

//! u -> (-u)^j K(u), the order-j transformed kernel H^(j).
class TransformedKernel
{
public:
  TransformedKernel(Kernel base, int order);

  double operator()(double u) const
  {
    double w = base_(u);
    if (w == 0.0)
      return 0.0;
    double m = -u;
    for (int i = 0; i < order_; ++i)
      w *= m;
    return w;
  }

  const Kernel& base() const { return base_; }
  int order() const { return order_; }
  //! kappa * 2^-j bounds |H^(j)| on its support.
  double sup_bound() const;

private:
  Kernel base_;
  int order_;
};

//! Composite Simpson rule with `nodes` (odd, >= 3) equispaced nodes.
double simpson(const std::function<double(double)>& f, double a, double b, int nodes);

//! Simpson on 2049 nodes, checked against 4097 nodes; refined once to 8193
//! nodes if the two disagree by more than 1e-10. NaN/Inf -> EvaluationError.
double integrate(const std::function<double(double)>& f, double a, double b);

//! mu_j = int (-u)^j K(u) du. Closed form for built-ins, quadrature otherwise.
double kernel_moment(const Kernel& k, int j);

//! mu_j by quadrature regardless of kernel kind.
double quadrature_moment(const Kernel& k, int j);

struct GramMatrix
{
  int degree = 0;
  //! (j, k) entry is mu_{j+k}.
  Eigen::MatrixXd entries;
  double min_eigenvalue = 0.0;
};

//! Requires k.is_nonneg() and p >= 0 (ArgumentError); a non-positive-definite
//! result raises SingularGramError.
GramMatrix gram_matrix(const Kernel& k, int p);

//! h^-1 int H^(j)((x0 - t)/h) density(t) dt, i.e. E of the normalized
//! transformed-kernel statistic under `density`. Integrated in u over the
//! kernel support.
double convolution_expectation(const std::function<double(double)>& density,
                               const TransformedKernel& tk,
                               double h,
                               double x0);

} // namespace locpoly
