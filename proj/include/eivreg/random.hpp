#pragma once

#include <cstdint>
#include <random>

namespace eivreg {

using Engine = std::mt19937_64;

//! Engine for one named stream of a seeded run. Distinct (seed, stream) pairs
//! give statistically independent sequences.
inline Engine
make_engine(std::uint64_t seed, std::uint64_t stream = 0)
{
  std::seed_seq seq{ static_cast<std::uint32_t>(seed & 0xffffffffu),
                     static_cast<std::uint32_t>(seed >> 32),
                     static_cast<std::uint32_t>(stream & 0xffffffffu),
                     static_cast<std::uint32_t>(stream >> 32) };
  return Engine(seq);
}

//! Uniform draw on the open interval (0, 1), built from the top 53 bits.
inline double
uniform_open01(Engine& eng)
{
  for (;;) {
    const double u = static_cast<double>(eng() >> 11) * 0x1.0p-53;
    if (u > 0.0)
      return u;
  }
}

} // namespace eivreg
