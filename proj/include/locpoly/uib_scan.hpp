#pragma once

#include "locpoly/estimators.hpp"
#include "locpoly/kernel.hpp"
#include "locpoly/sample.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace locpoly {

enum class GridKind
{
  Dyadic,
  PowerLaw,
  Explicit
};

std::string to_string(GridKind k);

//! Ascending bandwidth grid for one sample size.
struct BandwidthGrid
{
  double c = 1.0;
  std::size_t n = 0;
  double h0 = 0.5;
  double gamma = 1.0;
  GridKind kind = GridKind::Dyadic;
  std::vector<double> hs;
};

//! h_j = 2^j c log(n) / n for j = 0..l_n, l_n = max{j : h_j <= 2 h0}.
//! Throws ArgumentError when c log(n)/n > 2 h0 or inputs are out of range.
BandwidthGrid dyadic_grid(double c, std::size_t n, double h0);

//! Doubling grid from c (log n / n)^gamma up to 2 h0.
BandwidthGrid power_law_grid(double c, std::size_t n, double h0, double gamma);

//! Doubling grid from a up to b; b itself is appended when not hit exactly.
BandwidthGrid range_grid(double a, double b, std::size_t n);

//! User-supplied bandwidths (sorted, deduplicated, all > 0).
BandwidthGrid explicit_grid(std::vector<double> hs, std::size_t n);

//! Asymptotic grid length log(n h0 / (c log n)) / log 2.
double dyadic_count_asymptotic(double c, std::size_t n, double h0);

enum class TargetKind
{
  KDE,
  FTilde,
  RTilde,
  Regression
};

struct Target
{
  TargetKind kind = TargetKind::KDE;
  //! j for FTilde/RTilde, p for Regression.
  int order = 0;

  static Target kde() { return { TargetKind::KDE, 0 }; }
  static Target ftilde(int j) { return { TargetKind::FTilde, j }; }
  static Target rtilde(int j) { return { TargetKind::RTilde, j }; }
  static Target regression(int p) { return { TargetKind::Regression, p }; }

  //! "KDE", "FTILDE(j)", "RTILDE(j)", "REGRESSION(p)".
  std::string label() const;
  //! Accepts the labels above (case-insensitive) and "kde", "ftilde:j", ...
  static Target parse(const std::string& text);
};

enum class CenteringKind
{
  Expectation,
  TrueFunction,
  Supplied
};

std::string to_string(CenteringKind k);
CenteringKind parse_centering(const std::string& text);

//! Center value c(x, h) subtracted from the estimate at x for bandwidth h.
struct Centering
{
  CenteringKind kind = CenteringKind::Supplied;
  std::function<double(double x, double h)> value;
};

//! E of the target statistic under the model (KDE, FTILDE, RTILDE only).
//! RTILDE needs g; the conditional mean of Y given X is g.
Centering expectation_centering(const Target& target,
                                const Kernel& k,
                                std::function<double(double)> density,
                                std::function<double(double)> g = {});

//! Population limit: f, mu_j f, mu_j g f, or g for REGRESSION.
Centering true_function_centering(const Target& target,
                                  const Kernel& k,
                                  std::function<double(double)> density,
                                  std::function<double(double)> g);

//! Estimates at every grid point; nullopt where the window is empty or the
//! local design is singular.
std::vector<std::optional<double>> estimate_curve(const PairedSample& sample,
                                                  const Kernel& k,
                                                  double h,
                                                  const Target& target,
                                                  std::span<const double> xgrid);

struct Deviation
{
  double sup_dev = 0.0;
  std::size_t skipped_points = 0;
};

//! max |estimate - center| over non-skipped points; throws
//! DegenerateScanError if every point is skipped.
Deviation sup_deviation(std::span<const std::optional<double>> estimates, std::span<const double> centers);

Deviation sup_deviation(const PairedSample& sample,
                        const Kernel& k,
                        double h,
                        const Target& target,
                        const Centering& centering,
                        std::span<const double> xgrid);

//! sqrt(n h) sup_dev / sqrt(max(|log h|, log log n)). Requires n >= 16 and
//! 0 < h < 1.
double rate_statistic(double sup_dev, std::size_t n, double h);

//! Center values per (bandwidth, grid point), shareable across replicates.
struct CenterTable
{
  CenteringKind kind = CenteringKind::Supplied;
  std::vector<double> hs;
  std::vector<std::vector<double>> values;

  const std::vector<double>& at(double h) const;
};

CenterTable tabulate_centers(const Centering& centering,
                             std::span<const double> hs,
                             std::span<const double> xgrid);

struct RateRow
{
  double h = 0.0;
  double sup_dev = 0.0;
  double rate_stat = 0.0;
  std::size_t skipped_points = 0;
  bool degenerate = false;
};

struct RateReport
{
  std::size_t n = 0;
  Target target;
  CenteringKind centering = CenteringKind::Supplied;
  std::size_t xgrid_points = 0;
  std::uint64_t seed = 0;
  int replicate = 0;
  std::vector<RateRow> per_h;
  //! Max rate_stat over non-degenerate rows.
  double overall_rate_stat = 0.0;
  //! True when rate_stat holds the plain sup deviation (REGRESSION against
  //! the true function).
  bool unnormalized = false;
  std::vector<std::string> flags;
};

RateReport uib_scan(const PairedSample& sample,
                    const Kernel& k,
                    const BandwidthGrid& grid,
                    const Target& target,
                    const Centering& centering,
                    std::span<const double> xgrid);

RateReport uib_scan(const PairedSample& sample,
                    const Kernel& k,
                    const BandwidthGrid& grid,
                    const Target& target,
                    const CenterTable& centers,
                    std::span<const double> xgrid);

} // namespace locpoly
