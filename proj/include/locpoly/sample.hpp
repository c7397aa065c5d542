#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace locpoly {

struct Interval
{
  double lo = 0.0;
  double hi = 1.0;

  double width() const { return hi - lo; }
  bool contains(double x) const { return lo <= x && x <= hi; }
  Interval inflated(double by) const { return { lo - by, hi + by }; }
};

//! i.i.d. observations (X_i, Y_i), d = 1. Y is absent for pure density work.
//!
//! Observations are stored sorted by (x, y) so window lookups are binary
//! searches and every estimator is invariant under input permutation.
class PairedSample
{
public:
  //! Throws ArgumentError on empty/mismatched input, non-finite values, an
  //! empty interval, or a margin outside (0, 1).
  PairedSample(std::vector<double> xs,
               std::optional<std::vector<double>> ys,
               Interval interval,
               double margin);

  std::size_t size() const { return xs_.size(); }
  bool has_y() const { return has_y_; }
  std::span<const double> xs() const { return xs_; }
  //! Empty when has_y() is false.
  std::span<const double> ys() const { return ys_; }
  const Interval& interval() const { return interval_; }
  double margin() const { return margin_; }
  //! J = I inflated by the margin on each side.
  Interval inflated_interval() const { return interval_.inflated(margin_); }

  //! Half-open index range [first, last) of observations with
  //! x0 - halfwidth <= X_i <= x0 + halfwidth (rounding-tolerant superset;
  //! kernels vanish outside their support anyway).
  std::pair<std::size_t, std::size_t> window(double x0, double halfwidth) const;

private:
  std::vector<double> xs_;
  std::vector<double> ys_;
  bool has_y_;
  Interval interval_;
  double margin_;
};

//! Reads `x,y` (or `x`) CSV with a header row. Rows are numbered by file
//! line, header = row 1. NaN/Inf or unparsable rows raise InputError.
//! When `interval` is not given it is set to [min x, max x].
PairedSample read_sample_csv(std::istream& in,
                             std::optional<Interval> interval = std::nullopt,
                             double margin = 0.1);

PairedSample read_sample_csv(const std::string& path,
                             std::optional<Interval> interval = std::nullopt,
                             double margin = 0.1);

} // namespace locpoly
