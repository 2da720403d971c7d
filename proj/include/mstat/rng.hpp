#pragma once

#include <cstdint>
#include <string_view>

namespace mstat {

// Derives an independent 64-bit key from (seed, tag, index).  Used to give
// every replicate / bootstrap draw / simulation its own random stream so that
// results do not depend on thread scheduling.
std::uint64_t derive_key(std::uint64_t seed, std::string_view tag,
                         std::uint64_t index);

// Counter-based generator (splitmix64 over a Weyl sequence).  Streams created
// from distinct (seed, tag, index) triples are statistically independent;
// within a stream, values are produced sequentially and deterministically.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view tag, std::uint64_t index)
      : state_(derive_key(seed, tag, index)) {}

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on [a, b).
  double uniform(double a, double b);
  // Standard normal via Box-Muller (portable across platforms, unlike the
  // implementation-defined std::normal_distribution).
  double normal();

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mstat
