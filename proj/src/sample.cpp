#include "locpoly/sample.hpp"

#include "locpoly/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace locpoly {

PairedSample::PairedSample(std::vector<double> xs,
                           std::optional<std::vector<double>> ys,
                           Interval interval,
                           double margin)
  : has_y_(ys.has_value())
  , interval_(interval)
  , margin_(margin)
{
  if (xs.empty())
    throw ArgumentError("sample must contain at least one observation");
  if (ys && ys->size() != xs.size())
    throw ArgumentError("xs and ys differ in length (" + std::to_string(xs.size()) + " vs " +
                        std::to_string(ys->size()) + ")");
  if (!(interval.lo < interval.hi))
    throw ArgumentError("interval I must be nonempty");
  if (!(margin > 0.0 && margin < 1.0))
    throw ArgumentError("margin must lie in (0, 1)");

  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || (ys && !std::isfinite((*ys)[i])))
      throw ArgumentError("observation " + std::to_string(i) + " is not finite");
  }

  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{ 0 });
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (xs[a] != xs[b])
      return xs[a] < xs[b];
    return ys ? (*ys)[a] < (*ys)[b] : false;
  });

  xs_.reserve(xs.size());
  for (auto i : order)
    xs_.push_back(xs[i]);
  if (ys) {
    ys_.reserve(xs.size());
    for (auto i : order)
      ys_.push_back((*ys)[i]);
  }
}

std::pair<std::size_t, std::size_t> PairedSample::window(double x0, double halfwidth) const
{
  const double slack = 1e-12 * (std::abs(x0) + halfwidth);
  auto first = std::lower_bound(xs_.begin(), xs_.end(), x0 - halfwidth - slack);
  auto last = std::upper_bound(first, xs_.end(), x0 + halfwidth + slack);
  return { static_cast<std::size_t>(first - xs_.begin()), static_cast<std::size_t>(last - xs_.begin()) };
}

namespace {

std::vector<std::string> split_fields(const std::string& line)
{
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ','))
    out.push_back(field);
  if (!line.empty() && line.back() == ',')
    out.emplace_back();
  return out;
}

std::string trim(std::string s)
{
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

double parse_value(const std::string& raw, std::size_t row, const char* column)
{
  std::string s = trim(raw);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw InputError(row, std::string("cannot parse column '") + column + "' value '" + s + "'");
  if (!std::isfinite(v))
    throw InputError(row, std::string("non-finite value in column '") + column + "'");
  return v;
}

} // namespace

PairedSample read_sample_csv(std::istream& in, std::optional<Interval> interval, double margin)
{
  std::string line;
  std::size_t row = 0;
  bool have_header = false;
  bool with_y = false;
  while (!have_header && std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (row == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0)
      line.erase(0, 3);
    if (trim(line).empty())
      continue;
    auto fields = split_fields(line);
    for (auto& f : fields)
      f = trim(f);
    if (fields.size() == 1 && fields[0] == "x") {
      with_y = false;
    } else if (fields.size() == 2 && fields[0] == "x" && fields[1] == "y") {
      with_y = true;
    } else {
      throw InputError(row, "expected header 'x,y' or 'x'");
    }
    have_header = true;
  }
  if (!have_header)
    throw InputError(row == 0 ? 1 : row, "missing header");

  std::vector<double> xs;
  std::vector<double> ys;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (trim(line).empty())
      continue;
    auto fields = split_fields(line);
    const std::size_t expected = with_y ? 2 : 1;
    if (fields.size() != expected)
      throw InputError(row, "expected " + std::to_string(expected) + " field(s), found " +
                              std::to_string(fields.size()));
    xs.push_back(parse_value(fields[0], row, "x"));
    if (with_y)
      ys.push_back(parse_value(fields[1], row, "y"));
  }
  if (xs.empty())
    throw InputError(row, "no observations");

  Interval iv;
  if (interval) {
    iv = *interval;
  } else {
    auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    iv = { *lo, *hi };
    if (!(iv.lo < iv.hi))
      iv = { iv.lo - 0.5, iv.hi + 0.5 };
  }
  std::optional<std::vector<double>> y_opt;
  if (with_y)
    y_opt = std::move(ys);
  return PairedSample(std::move(xs), std::move(y_opt), iv, margin);
}

PairedSample read_sample_csv(const std::string& path, std::optional<Interval> interval, double margin)
{
  std::ifstream in(path);
  if (!in)
    throw ArgumentError("cannot open '" + path + "'");
  return read_sample_csv(in, interval, margin);
}

} // namespace locpoly
