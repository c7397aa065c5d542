#pragma once

#include "locpoly/random.hpp"
#include "locpoly/sample.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace locpoly {

//! Design density with its inverse CDF (all sampling is inverse-CDF).
struct DensityModel
{
  std::string description;
  Interval support;
  std::function<double(double)> pdf;
  std::function<double(double)> quantile;

  static DensityModel uniform(double lo, double hi);
  //! Triangular density on [lo, hi] with the given mode.
  static DensityModel triangular(double lo, double mode, double hi);
};

enum class NoiseKind
{
  None,
  BoundedUniform,
  StudentT
};

struct NoiseModel
{
  NoiseKind kind = NoiseKind::None;
  //! Bound M for BoundedUniform, degrees of freedom for StudentT.
  double param = 0.0;

  double quantile(double u) const;
  std::string describe() const;
};

enum class MomentRegime
{
  //! Bounded responses on J.
  Bounded,
  //! Finite conditional moment of order pbar > 2.
  Moment
};

struct Scenario
{
  std::string name;
  DensityModel design;
  std::function<double(double)> g;
  std::string g_description;
  NoiseModel noise;
  Interval interval;
  double eta = 0.25;
  MomentRegime regime = MomentRegime::Bounded;
  //! Moment order for the Moment regime; unused otherwise.
  double pbar = 0.0;

  //! Bandwidth-floor exponent: 1 when bounded, 1 - 2/pbar otherwise.
  double floor_exponent() const;
  //! Copy with the noise removed (Y = g(X)).
  Scenario noiseless() const;
};

//! S1: uniform design, sin(2 pi x), bounded uniform noise.
//! S2: uniform design, x^2, Student-t(5) noise (pbar = 4).
//! S3: triangular design, 2x + 1, bounded noise.
std::vector<Scenario> builtin_scenarios();

//! Throws ArgumentError for unknown names.
Scenario find_scenario(std::string_view name);

std::string to_string(MomentRegime r);

struct ReplicationPlan
{
  std::uint64_t master_seed = 0;
  int replicates = 1;
  std::vector<std::size_t> sample_sizes;
  Scenario scenario;
};

//! n i.i.d. pairs for (replicate, n). Each observation consumes exactly two
//! uniforms from the (master_seed, replicate, n) substream.
PairedSample draw_sample(const ReplicationPlan& plan, int replicate, std::size_t n);

//! n design points drawn by inverse CDF.
std::vector<double> draw_design(const DensityModel& density, std::size_t n, Rng& rng);

} // namespace locpoly
