#pragma once

#include <cstdint>
#include <random>

#include <boost/random/normal_distribution.hpp>

namespace citlab {

/// Purpose tags keep substreams for different stages disjoint.
enum class StreamPurpose : std::uint64_t {
  split = 1,
  tower = 2,
  hrt = 3,
  second_moment = 4,
  sigma = 5,
  dgp = 6,
  nonnull_set = 7,
  replicate = 8,
  folds = 9,
  cv = 10,
  misc = 11,
};

std::uint64_t splitmix64(std::uint64_t x);

/// Counter-based derivation of a substream seed from (seed, purpose, a, b).
/// The result does not depend on the order in which streams are requested.
std::uint64_t derive_seed(std::uint64_t seed, StreamPurpose purpose, std::uint64_t a = 0,
                          std::uint64_t b = 0);

using Engine = std::mt19937_64;

Engine make_stream(std::uint64_t seed, StreamPurpose purpose, std::uint64_t a = 0,
                   std::uint64_t b = 0);

/// Standard normal draws. Boost's ziggurat sampler is used because its output
/// is specified independently of the standard library vendor.
class NormalSource {
 public:
  explicit NormalSource(Engine engine) : engine_(std::move(engine)) {}
  double operator()() { return dist_(engine_); }
  Engine& engine() { return engine_; }

 private:
  Engine engine_;
  boost::random::normal_distribution<double> dist_{0.0, 1.0};
};

/// Uniform integer in [0, bound) with a vendor-independent algorithm.
std::uint64_t uniform_below(Engine& engine, std::uint64_t bound);
double uniform01(Engine& engine);

}  // namespace citlab
