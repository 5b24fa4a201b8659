#pragma once

#include <cstdint>
#include <random>

namespace hpfa {

// Seeded random stream.  Streams are keyed by (seed, stream_id) plus an
// optional substream key, so independent components (chains, folds, pages)
// can draw from reproducible, non-overlapping sequences.  Two streams built
// from the same key produce identical draws; this is what makes threaded
// sweeps bit-identical to sequential ones.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
      : seed_(seed), stream_id_(stream_id), engine_(make_engine(seed, stream_id, 0, 0, false)) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::mt19937_64& engine() { return engine_; }

  // U[0, 1)
  double uniform() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
  }

  // Fresh stream keyed by (seed, stream_id, a, b); independent of the parent
  // stream's current position.
  RngStream substream(std::uint64_t a, std::uint64_t b) const {
    return RngStream(seed_, stream_id_, a, b);
  }

 private:
  RngStream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t a, std::uint64_t b)
      : seed_(seed), stream_id_(stream_id), engine_(make_engine(seed, stream_id, a, b, true)) {}

  static std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream_id,
                                     std::uint64_t a, std::uint64_t b, bool sub) {
    std::uint32_t words[10] = {
        static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
        static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32),
        static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
        static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
        sub ? 0x9e3779b9u : 0u, 0x7f4a7c15u};
    std::seed_seq seq(words, words + 10);
    return std::mt19937_64(seq);
  }

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

}  // namespace hpfa
