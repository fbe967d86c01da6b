#pragma once

#include <cstdint>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace chainhydro {

// Boost's MT19937-64 generates the same sequence as std::mt19937_64 but is
// markedly faster with libstdc++.
using Rng = boost::random::mt19937_64;

// Standard normal via Boost's ziggurat sampler, which is deterministic for a
// given engine state.
inline double standard_normal(Rng& rng) {
  boost::random::normal_distribution<double> dist;
  return dist(rng);
}

inline double uniform01(Rng& rng) {
  boost::random::uniform_01<double> dist;
  return dist(rng);
}

// splitmix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent per-replica stream seed derived from the run seed.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t replica) {
  return mix64(mix64(seed) ^ mix64(replica + 0x632be59bd9b4e019ULL));
}

} // namespace chainhydro
