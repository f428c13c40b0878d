#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace cab {

// std::mt19937_64 has a fully specified output sequence, and all
// distributions used on top of it come from Boost.Random, so a given seed
// reproduces bit-identical streams across compilers and standard libraries.
using Rng = std::mt19937_64;

// One SplitMix64 step: advances `state` and returns the mixed output.
std::uint64_t splitmix64(std::uint64_t& state) noexcept;

// Derives an independent 64-bit seed for the substream named `tag`.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) noexcept;

// Generator for the substream (seed, tag).
Rng make_stream(std::uint64_t seed, std::string_view tag);

double standard_normal(Rng& rng);
double uniform01(Rng& rng);

}  // namespace cab
