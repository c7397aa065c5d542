#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace locpoly {

//! splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z)
{
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

//! Seed for a substream identified by a path of integer keys below a master
//! seed, e.g. derive_seed(master, {replicate, n}). Pure function of inputs.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys)
{
  std::uint64_t s = mix64(master);
  for (auto k : keys)
    s = mix64(s ^ mix64(k + 0x632be59bd9b4e019ULL));
  return s;
}

//! Deterministic generator; uniform variates are built from raw bits so the
//! stream does not depend on the standard library's distribution classes.
class Rng
{
public:
  explicit Rng(std::uint64_t seed)
    : engine_(seed)
  {}

  std::uint64_t bits() { return engine_(); }

  //! Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  //! +1 or -1 with probability 1/2 each.
  double sign() { return (engine_() >> 63) ? 1.0 : -1.0; }

private:
  std::mt19937_64 engine_;
};

} // namespace locpoly
