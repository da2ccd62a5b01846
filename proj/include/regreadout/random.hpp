#pragma once

#include <cstdint>
#include <random>

namespace regreadout {

using Rng = std::mt19937_64;

/// Independent lanes of one trajectory's randomness.
enum class StreamLane : std::uint32_t {
  measurement_noise = 0,
  control = 1,
};

/// Deterministic stream derived from (master seed, trajectory index, lane).
/// Identical arguments give identical streams on every run and thread.
Rng make_stream(std::uint64_t master_seed, std::uint64_t index,
                StreamLane lane = StreamLane::measurement_noise);

}  // namespace regreadout
