#include "locpoly/scenario.hpp"

#include "locpoly/error.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace locpoly {

DensityModel DensityModel::uniform(double lo, double hi)
{
  if (!(lo < hi))
    throw ArgumentError("uniform density needs lo < hi");
  std::ostringstream desc;
  desc << "Uniform[" << lo << "," << hi << "]";
  const double height = 1.0 / (hi - lo);
  return { desc.str(),
           { lo, hi },
           [=](double x) { return (x >= lo && x <= hi) ? height : 0.0; },
           [=](double u) { return lo + (hi - lo) * u; } };
}

DensityModel DensityModel::triangular(double lo, double mode, double hi)
{
  if (!(lo < mode && mode < hi))
    throw ArgumentError("triangular density needs lo < mode < hi");
  std::ostringstream desc;
  desc << "Triangular[" << lo << "," << mode << "," << hi << "]";
  const double width = hi - lo;
  const double split = (mode - lo) / width;
  return { desc.str(),
           { lo, hi },
           [=](double x) {
             if (x < lo || x > hi)
               return 0.0;
             if (x <= mode)
               return 2.0 * (x - lo) / (width * (mode - lo));
             return 2.0 * (hi - x) / (width * (hi - mode));
           },
           [=](double u) {
             if (u <= split)
               return lo + std::sqrt(u * width * (mode - lo));
             return hi - std::sqrt((1.0 - u) * width * (hi - mode));
           } };
}

double NoiseModel::quantile(double u) const
{
  switch (kind) {
    case NoiseKind::None:
      return 0.0;
    case NoiseKind::BoundedUniform:
      return param * (2.0 * u - 1.0);
    case NoiseKind::StudentT: {
      static thread_local double cached_df = -1.0;
      static thread_local boost::math::students_t_distribution<double> dist(1.0);
      if (cached_df != param) {
        dist = boost::math::students_t_distribution<double>(param);
        cached_df = param;
      }
      return boost::math::quantile(dist, u);
    }
  }
  return 0.0;
}

std::string NoiseModel::describe() const
{
  std::ostringstream os;
  switch (kind) {
    case NoiseKind::None:
      os << "none";
      break;
    case NoiseKind::BoundedUniform:
      os << "BoundedUniform(" << param << ")";
      break;
    case NoiseKind::StudentT:
      os << "StudentT(" << param << ")";
      break;
  }
  return os.str();
}

double Scenario::floor_exponent() const
{
  return regime == MomentRegime::Bounded ? 1.0 : 1.0 - 2.0 / pbar;
}

Scenario Scenario::noiseless() const
{
  Scenario s = *this;
  s.name += "-noiseless";
  s.noise = { NoiseKind::None, 0.0 };
  s.regime = MomentRegime::Bounded;
  return s;
}

std::vector<Scenario> builtin_scenarios()
{
  std::vector<Scenario> out;

  Scenario s1;
  s1.name = "S1";
  s1.design = DensityModel::uniform(0.0, 1.0);
  s1.g = [](double x) { return std::sin(2.0 * std::numbers::pi * x); };
  s1.g_description = "sin(2 pi x)";
  s1.noise = { NoiseKind::BoundedUniform, 1.0 };
  s1.interval = { 0.25, 0.75 };
  s1.eta = 0.25;
  s1.regime = MomentRegime::Bounded;
  out.push_back(s1);

  Scenario s2;
  s2.name = "S2";
  s2.design = DensityModel::uniform(0.0, 1.0);
  s2.g = [](double x) { return x * x; };
  s2.g_description = "x^2";
  s2.noise = { NoiseKind::StudentT, 5.0 };
  s2.interval = { 0.25, 0.75 };
  s2.eta = 0.25;
  s2.regime = MomentRegime::Moment;
  s2.pbar = 4.0;
  out.push_back(s2);

  Scenario s3;
  s3.name = "S3";
  s3.design = DensityModel::triangular(0.0, 0.5, 1.0);
  s3.g = [](double x) { return 2.0 * x + 1.0; };
  s3.g_description = "2x + 1";
  s3.noise = { NoiseKind::BoundedUniform, 0.5 };
  s3.interval = { 0.3, 0.7 };
  s3.eta = 0.2;
  s3.regime = MomentRegime::Bounded;
  out.push_back(s3);

  return out;
}

Scenario find_scenario(std::string_view name)
{
  for (auto& s : builtin_scenarios())
    if (s.name == name)
      return s;
  throw ArgumentError("unknown scenario '" + std::string(name) + "' (expected S1, S2 or S3)");
}

std::string to_string(MomentRegime r)
{
  return r == MomentRegime::Bounded ? "MM" : "PP";
}

std::vector<double> draw_design(const DensityModel& density, std::size_t n, Rng& rng)
{
  std::vector<double> xs(n);
  for (auto& x : xs)
    x = density.quantile(rng.uniform());
  return xs;
}

PairedSample draw_sample(const ReplicationPlan& plan, int replicate, std::size_t n)
{
  if (replicate < 0 || replicate >= plan.replicates)
    throw ArgumentError("replicate index outside the plan");
  if (std::find(plan.sample_sizes.begin(), plan.sample_sizes.end(), n) == plan.sample_sizes.end())
    throw ArgumentError("sample size " + std::to_string(n) + " is not part of the plan");

  const Scenario& sc = plan.scenario;
  Rng rng(derive_seed(plan.master_seed, { static_cast<std::uint64_t>(replicate), n }));
  std::vector<double> xs(n);
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ux = rng.uniform();
    const double ue = rng.uniform();
    xs[i] = sc.design.quantile(ux);
    ys[i] = sc.g(xs[i]) + sc.noise.quantile(ue);
  }
  return PairedSample(std::move(xs), std::move(ys), sc.interval, sc.eta);
}

} // namespace locpoly
