#pragma once

#include "locpoly/kernel.hpp"
#include "locpoly/sample.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace locpoly {

//! Hard ceiling on cond(A_x0) for local polynomial fits.
inline constexpr double kMaxConditionNumber = 1e8;

//! Kernel density estimate (nh)^-1 sum K((x - X_i)/h) for d = 1.
double kde(const PairedSample& sample, const Kernel& k, double h, double x);

//! d-dimensional KDE with product kernel and argument (x - X_i)/h^{1/d}.
//! `points` is row-major n x d.
double kde(std::span<const double> points, std::size_t dim, const Kernel& k, double h, std::span<const double> x);

//! sum psi(Y_i) K((x0 - X_i)/h) / sum K((x0 - X_i)/h).
//! Throws EmptyWindowError when the denominator vanishes.
double nadaraya_watson(const PairedSample& sample,
                       const Kernel& k,
                       double h,
                       double x0,
                       const std::function<double(double)>& psi);

double nadaraya_watson(const PairedSample& sample, const Kernel& k, double h, double x0);

//! Kernel-weighted conditional distribution function F_n(t | x0).
double conditional_ecdf(const PairedSample& sample, const Kernel& k, double h, double x0, double t);

//! Kernel-weighted moments of (X_i - x0)/h around one evaluation point.
struct MomentStats
{
  double x0 = 0.0;
  double h = 0.0;
  //! ftilde[j] = (nh)^-1 sum ((X_i - x0)/h)^j K((x0 - X_i)/h), j = 0..2p.
  std::vector<double> ftilde;
  //! rtilde[j] = same with an extra factor Y_i, j = 0..p. Empty for x-only samples.
  std::vector<double> rtilde;
  //! Observations with nonzero kernel weight.
  std::size_t n_in_window = 0;

  //! Largest p the stats support.
  int degree() const { return static_cast<int>(ftilde.size() / 2); }
};

MomentStats moment_stats(const PairedSample& sample, const Kernel& k, double h, double x0, int p);

struct LocalPolyFit
{
  double x0 = 0.0;
  double h = 0.0;
  int p = 0;
  //! beta[k] estimates g^(k)(x0) / k!.
  std::vector<double> beta;
  double cond_A = 0.0;
  std::size_t n_in_window = 0;

  double estimate() const { return beta.front(); }
  //! k! * beta[k].
  double derivative(int order) const;
};

//! Degree-p local polynomial fit via the scaled normal equations
//! A gamma = rtilde, beta_k = gamma_k / h^k.
LocalPolyFit local_poly_fit(const PairedSample& sample, const Kernel& k, double h, double x0, int p);

//! Same solve from precomputed stats; `p` may be below stats.degree().
LocalPolyFit fit_from_stats(const MomentStats& stats, int p);

//! The scaled matrix A_x0 with entries ftilde[j + k].
Eigen::MatrixXd scaled_design_matrix(const MomentStats& stats, int p);

//! Explicit ratio formulas for p = 0, 1, 2.
double closed_form_fit(const MomentStats& stats, int p);

enum class FitStatus
{
  Ok,
  EmptyWindow,
  Singular
};

std::string to_string(FitStatus s);

struct CurvePoint
{
  double x0 = 0.0;
  FitStatus status = FitStatus::Ok;
  std::optional<LocalPolyFit> fit;
  std::string message;
};

//! Element-wise local_poly_fit over xgrid; per-point failures are recorded,
//! never thrown. Evaluated in parallel, ordered by grid index.
std::vector<CurvePoint> regression_curve(const PairedSample& sample,
                                         const Kernel& k,
                                         double h,
                                         int p,
                                         std::span<const double> xgrid);

//! `count` equispaced points covering [lo, hi] (count == 1 gives the midpoint).
std::vector<double> linspace(double lo, double hi, std::size_t count);

} // namespace locpoly
