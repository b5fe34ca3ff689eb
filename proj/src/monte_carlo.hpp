#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "indscale/parallel.hpp"
#include "indscale/rng.hpp"
#include "indscale/stats.hpp"

namespace indscale::detail {

// Splits `samples` draws into a fixed number of chunks, each with its own
// stream, and merges them in chunk order: the result does not depend on the
// number of threads.
template <class Draw>
stats::MeanAccumulator chunked_mean(std::uint64_t samples, std::uint64_t seed, std::size_t threads,
                                    Draw&& draw) {
  constexpr std::uint64_t kChunks = 64;
  const std::uint64_t chunks = std::clamp<std::uint64_t>(samples / 1024, 1, kChunks);
  std::vector<stats::MeanAccumulator> partial(chunks);
  parallel_for(chunks, threads, [&](std::size_t c) {
    Rng rng = make_stream(seed, 1000 + c);
    const std::uint64_t count = samples / chunks + (c < samples % chunks ? 1 : 0);
    for (std::uint64_t i = 0; i < count; ++i) partial[c].add(draw(rng));
  });
  stats::MeanAccumulator total;
  for (const auto& p : partial) total.merge(p);
  return total;
}

}  // namespace indscale::detail
