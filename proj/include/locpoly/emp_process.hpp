#pragma once

#include "locpoly/kernel.hpp"
#include "locpoly/sample.hpp"
#include "locpoly/scenario.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace locpoly {

enum class ClassKind
{
  //! t -> H^(j)((x - t)/h) over an (x, h) parameter grid.
  KernelTranslates,
  //! t -> 1{|x - t| <= h/2} over an (x, h) parameter grid.
  IndicatorWindows,
  //! Pointwise products f * g, f in a, g in b.
  Product,
  //! A finite list of callables.
  Explicit
};

//! A function class discretized to a finite member list.
//!
//! Translate/window members are indexed m = h_index * xs.size() + x_index;
//! product members m = a_index * b.size() + b_index.
class FunctionClassSpec
{
public:
  static FunctionClassSpec kernel_translates(Kernel k, int j, std::vector<double> hs, std::vector<double> xs);
  static FunctionClassSpec indicator_windows(std::vector<double> hs, std::vector<double> xs);
  static FunctionClassSpec product(const FunctionClassSpec& a, const FunctionClassSpec& b);
  static FunctionClassSpec explicit_members(std::vector<std::function<double(double)>> members, double envelope);

  ClassKind kind() const { return kind_; }
  std::size_t size() const;
  //! Uniform bound on |g| for every member.
  double envelope() const { return envelope_; }
  double evaluate(std::size_t m, double t) const;
  //! Closed interval outside of which member m vanishes (unbounded for
  //! explicit members).
  Interval support(std::size_t m) const;
  std::string describe() const;

  const std::vector<double>& hs() const { return hs_; }
  const std::vector<double>& xs() const { return xs_; }
  //! Factors of a product class; ArgumentError for other kinds.
  const FunctionClassSpec& factor_a() const;
  const FunctionClassSpec& factor_b() const;

private:
  FunctionClassSpec() = default;

  ClassKind kind_ = ClassKind::Explicit;
  std::optional<TransformedKernel> kernel_;
  std::vector<double> hs_;
  std::vector<double> xs_;
  std::shared_ptr<const FunctionClassSpec> a_;
  std::shared_ptr<const FunctionClassSpec> b_;
  std::vector<std::function<double(double)>> members_;
  double envelope_ = 0.0;
};

//! sum_i w_i g_m(t_i) for every member m; `points` must be sorted ascending.
std::vector<double> member_sums(const FunctionClassSpec& cls,
                                std::span<const double> points,
                                std::span<const double> weights);

//! E g_m(X)^power under the density, by quadrature, for every member.
std::vector<double> population_moments(const FunctionClassSpec& cls, const DensityModel& design, int power);

struct McEstimate
{
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t draws = 0;
};

//! Monte Carlo E_eps sup_g |sum eps_i g(X_i)| for the fixed sample, one
//! independent sign vector per draw (substream (seed, draw)).
McEstimate rademacher_moment(const FunctionClassSpec& cls,
                             std::span<const double> sample,
                             std::size_t draws,
                             std::uint64_t seed);

//! Same expectation by enumerating all 2^n sign patterns (n <= 24).
double rademacher_moment_exact(const FunctionClassSpec& cls, std::span<const double> sample);

//! E sup_g |sum eps_i g(X_i)| with a fresh design sample per draw.
McEstimate rademacher_moment_unconditional(const FunctionClassSpec& cls,
                                           const DensityModel& design,
                                           std::size_t n,
                                           std::size_t draws,
                                           std::uint64_t seed);

//! E sup_g |sum (g(X_i) - E g)| with a fresh design sample per draw.
McEstimate centered_sup_moment(const FunctionClassSpec& cls,
                               const DensityModel& design,
                               std::size_t n,
                               std::size_t draws,
                               std::uint64_t seed);

struct SymmetrizationResult
{
  McEstimate centered;
  McEstimate rademacher;
  //! 4 * sqrt(se_centered^2 + (2 se_rademacher)^2).
  double allowance = 0.0;
  bool holds = false;
};

//! Checks E||sum (g - Eg)|| <= 2 mu_n + allowance at sample size n.
SymmetrizationResult symmetrization_check(const FunctionClassSpec& cls,
                                          const DensityModel& design,
                                          std::size_t n,
                                          std::size_t draws,
                                          std::uint64_t seed);

//! Greedy covering numbers in the envelope-normalized L2(Q_n) metric and
//! the log-log fit log N = log C + nu log(1/eps).
struct CoveringCurve
{
  //! Descending.
  std::vector<double> eps_grid;
  //! Greedy counts; upper bounds on the minimal covering numbers.
  std::vector<std::size_t> counts;
  double nu_hat = 0.0;
  double c_hat = 0.0;
  double nu_stderr = 0.0;
  double r_squared = 0.0;
  std::size_t members = 0;
  bool fitted = false;
};

//! Least-squares fit of log counts on log(1/eps); needs >= 2 points.
CoveringCurve fit_covering_curve(std::vector<double> eps_grid, std::vector<std::size_t> counts);

//! Farthest-point traversal over the class evaluated on measure_sample; the
//! count for eps is the number of centers needed for covering radius <= eps.
CoveringCurve covering_estimate(const FunctionClassSpec& cls,
                                std::span<const double> measure_sample,
                                std::vector<double> eps_grid);

//! Predicted product exponent nu_a + nu_b. ArgumentError if either is unfitted.
double product_class_covering(const CoveringCurve& a, const CoveringCurve& b);

struct MomentBoundOptions
{
  DensityModel design = DensityModel::uniform(0.0, 1.0);
  //! Sign draws per design sample.
  std::size_t draws = 256;
  //! Design samples per n.
  std::size_t samples_per_n = 8;
  std::vector<double> eps_grid{ 0.4, 0.2, 0.1, 0.05 };
  std::size_t covering_sample = 256;
  //! Use this fit instead of estimating one.
  std::optional<CoveringCurve> covering;
};

struct MomentBoundRow
{
  std::size_t n = 0;
  double mu_hat = 0.0;
  double mu_stderr = 0.0;
  //! sqrt(nu n sigma^2 log(beta v 1/sigma)).
  double bound = 0.0;
  double bound_ratio = 0.0;
  //! Empirical sup of second moments over the pooled design points.
  double empirical_sigma2 = 0.0;
  //! Sup-norm condition relating envelope, n and sigma.
  bool sup_norm_condition = false;
};

struct MomentBoundResult
{
  std::vector<MomentBoundRow> rows;
  CoveringCurve covering;
  //! Exponent used in the bound: max(nu_hat, 1).
  double nu = 0.0;
  double beta = 0.0;
  double sigma = 0.0;
  //! sigma <= 1/(8 C_hat).
  bool sigma_condition = false;
  //! max/min of bound_ratio over rows.
  double ratio_spread = 0.0;
};

//! Throws PreconditionError naming the second-moment condition when the
//! empirical sup of E_n g^2 exceeds sigma^2.
MomentBoundResult moment_bound_check(const FunctionClassSpec& cls,
                                     std::span<const std::size_t> sample_sizes,
                                     double sigma,
                                     std::uint64_t seed,
                                     const MomentBoundOptions& options = {});

struct TailRow
{
  double t = 0.0;
  double empirical_prob = 0.0;
  double bound_value = 0.0;
};

struct TailCheckResult
{
  std::vector<TailRow> rows;
  double mu_hat = 0.0;
  //! sup Var g(X) under the design.
  double sigma2 = 0.0;
  double envelope = 0.0;
  std::size_t replicates = 0;
};

//! Exceedance frequency of max_{m<=n} sup_g |sum_{i<=m} (g(X_i) - Eg)| over
//! mu_hat + t, next to 2(exp(-t^2/(n sigma^2)) + exp(-t/M)). Reference
//! constants are 1. Requires replicates >= 100.
TailCheckResult talagrand_tail_check(const FunctionClassSpec& cls,
                                     std::size_t n,
                                     std::vector<double> t_grid,
                                     std::size_t replicates,
                                     std::uint64_t seed,
                                     const DensityModel& design = DensityModel::uniform(0.0, 1.0),
                                     std::size_t mu_draws = 1024);

} // namespace locpoly
