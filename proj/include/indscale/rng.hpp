#pragma once

#include <cstdint>
#include <random>

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/student_t_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace indscale {

// mt19937_64 plus boost distributions: both are fully specified, so a seed
// reproduces the same stream on every platform and standard library.
using Rng = std::mt19937_64;

/// Engine for run number `stream` of an experiment seeded with `master_seed`.
/// Distinct (master_seed, stream) pairs give unrelated streams, which is what
/// lets grid points and replicates run on any thread in any order.
inline Rng make_stream(std::uint64_t master_seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32), 0x9e3779b9u};
  return Rng(seq);
}

/// Seed for an independent sub-experiment (grid point, replicate) of a run.
inline std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t stream) {
  Rng rng = make_stream(master_seed, stream);
  return rng();
}

/// Uniform on the open interval (0, 1).
inline double uniform01(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double std_normal(Rng& rng) {
  return boost::random::normal_distribution<double>{}(rng);
}

/// Gamma with shape and *rate* (mean shape / rate).
inline double gamma_rate(Rng& rng, double shape, double rate) {
  return boost::random::gamma_distribution<double>{shape, 1.0 / rate}(rng);
}

inline double student_t(Rng& rng, double nu) {
  return boost::random::student_t_distribution<double>{nu}(rng);
}

/// Uniform integer in [lo, hi].
inline std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {
  return boost::random::uniform_int_distribution<std::size_t>{lo, hi}(rng);
}

}  // namespace indscale
