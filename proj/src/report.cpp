#include "locpoly/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <ostream>
#include <tuple>

namespace locpoly {

std::string format_number(double v)
{
  if (std::isnan(v))
    return "nan";
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_rate_csv(std::ostream& out, std::span<const RateReport> reports)
{
  out << "n,h,target,centering,sup_dev,rate_stat,skipped_points,seed,replicate\n";
  for (const auto& r : reports) {
    for (const auto& row : r.per_h) {
      out << r.n << ',' << format_number(row.h) << ',' << r.target.label() << ',' << to_string(r.centering) << ','
          << format_number(row.sup_dev) << ',' << format_number(row.rate_stat) << ',' << row.skipped_points << ','
          << r.seed << ',' << r.replicate << '\n';
    }
  }
}

void write_summary_csv(std::ostream& out, std::span<const StudySummaryRow> rows)
{
  out << "n,target,count,mean,min,p10,median,p90,p99,max\n";
  for (const auto& s : rows) {
    out << s.n << ',' << s.target << ',' << s.count << ',' << format_number(s.mean) << ','
        << format_number(s.min) << ',' << format_number(s.p10) << ',' << format_number(s.median) << ','
        << format_number(s.p90) << ',' << format_number(s.p99) << ',' << format_number(s.max) << '\n';
  }
}

namespace {

std::string csv_escape(const std::string& s)
{
  if (s.find_first_of(",\"\n") == std::string::npos)
    return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"')
      out += '"';
    out += ch;
  }
  return out + '"';
}

std::string xml_escape(const std::string& s)
{
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      default:
        out += ch;
    }
  }
  return out;
}

std::string fixed(double v, int digits = 2)
{
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, digits);
  return std::string(buf, ptr);
}

} // namespace

void write_meta_csv(std::ostream& out, const StudyResult& result)
{
  out << "key,value\n";
  for (const auto& [k, v] : result.meta)
    out << csv_escape(k) << ',' << csv_escape(v) << '\n';
  out << "reports," << result.reports.size() << '\n';
  out << "failures," << result.failures.size() << '\n';
  for (const auto& f : result.failures)
    out << "failure," << csv_escape("n=" + std::to_string(f.n) + " replicate=" + std::to_string(f.replicate) + " " +
                                    f.target + ": " + f.message)
        << '\n';
}

void write_rate_svg(std::ostream& out, std::span<const RateReport> reports, const std::string& title)
{
  // (n, target label) -> h -> rate stats across replicates
  std::map<std::tuple<std::size_t, std::string>, std::map<double, std::vector<double>>> series;
  for (const auto& r : reports)
    for (const auto& row : r.per_h)
      if (!row.degenerate && row.h > 0.0)
        series[{ r.n, r.target.label() }][row.h].push_back(row.rate_stat);

  const double width = 720.0;
  const double height = 440.0;
  const double left = 70.0;
  const double right = 190.0;
  const double top = 40.0;
  const double bottom = 50.0;

  double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
  bool first = true;
  std::map<std::tuple<std::size_t, std::string>, std::vector<std::pair<double, double>>> lines;
  for (auto& [key, by_h] : series) {
    auto& pts = lines[key];
    for (auto& [h, vals] : by_h) {
      std::sort(vals.begin(), vals.end());
      const std::size_t m = vals.size();
      const double med = m % 2 ? vals[m / 2] : 0.5 * (vals[m / 2 - 1] + vals[m / 2]);
      const double lx = std::log2(h);
      pts.emplace_back(lx, med);
      if (first) {
        xmin = xmax = lx;
        ymax = med;
        first = false;
      }
      xmin = std::min(xmin, lx);
      xmax = std::max(xmax, lx);
      ymax = std::max(ymax, med);
    }
  }
  if (xmax - xmin < 1e-9) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymax <= ymin)
    ymax = ymin + 1.0;
  ymax *= 1.05;

  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (width - left - right); };
  auto py = [&](double y) { return height - bottom - (y - ymin) / (ymax - ymin) * (height - top - bottom); };

  static const char* palette[] = { "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf" };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(width, 0) << "\" height=\""
      << fixed(height, 0) << "\" viewBox=\"0 0 " << fixed(width, 0) << ' ' << fixed(height, 0) << "\">\n";
  out << "<path d=\"M0 0H" << fixed(width, 0) << "V" << fixed(height, 0) << "H0Z\" fill=\"white\"/>\n";
  out << "<text x=\"" << fixed(left) << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\">"
      << xml_escape(title) << "</text>\n";
  out << "<path d=\"M" << fixed(left) << ' ' << fixed(py(ymin)) << "H" << fixed(width - right) << "M" << fixed(left)
      << ' ' << fixed(py(ymin)) << "V" << fixed(top) << "\" stroke=\"black\" fill=\"none\"/>\n";

  for (int i = 0; i <= 4; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 4.0;
    const double yv = ymin + (ymax - ymin) * i / 4.0;
    out << "<path d=\"M" << fixed(px(xv)) << ' ' << fixed(py(ymin)) << "v5\" stroke=\"black\"/>\n";
    out << "<text x=\"" << fixed(px(xv)) << "\" y=\"" << fixed(py(ymin) + 18)
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" << fixed(xv) << "</text>\n";
    out << "<path d=\"M" << fixed(left - 5) << ' ' << fixed(py(yv)) << "h5\" stroke=\"black\"/>\n";
    out << "<text x=\"" << fixed(left - 8) << "\" y=\"" << fixed(py(yv) + 4)
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << fixed(yv) << "</text>\n";
  }
  out << "<text x=\"" << fixed((left + width - right) / 2) << "\" y=\"" << fixed(height - 10)
      << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">log2 h</text>\n";
  out << "<text x=\"16\" y=\"" << fixed((top + height - bottom) / 2)
      << "\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 "
      << fixed((top + height - bottom) / 2) << ")\" text-anchor=\"middle\">rate_stat (median)</text>\n";

  std::size_t idx = 0;
  for (const auto& [key, pts] : lines) {
    const char* color = palette[idx % (sizeof(palette) / sizeof(palette[0]))];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i)
      out << (i ? " " : "") << fixed(px(pts[i].first)) << ',' << fixed(py(pts[i].second));
    out << "\"/>\n";
    const double ly = top + 18.0 * static_cast<double>(idx);
    out << "<path d=\"M" << fixed(width - right + 12) << ' ' << fixed(ly) << "h22\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << fixed(width - right + 40) << "\" y=\"" << fixed(ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"11\">n=" << std::get<0>(key) << ' '
        << xml_escape(std::get<1>(key)) << "</text>\n";
    ++idx;
  }
  out << "</svg>\n";
}

} // namespace locpoly
