#include "regreadout/random.hpp"

namespace regreadout {

Rng make_stream(std::uint64_t master_seed, std::uint64_t index, StreamLane lane) {
  std::seed_seq seq{
      static_cast<std::uint32_t>(master_seed),
      static_cast<std::uint32_t>(master_seed >> 32),
      static_cast<std::uint32_t>(index),
      static_cast<std::uint32_t>(index >> 32),
      static_cast<std::uint32_t>(lane),
  };
  return Rng(seq);
}

}  // namespace regreadout
