#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace aprox {

using Rng = std::mt19937_64;

// Independent, reproducible stream derived from (seed, stream, substream).
Rng make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0);

inline constexpr std::uint64_t kBatchStream = 1;
inline constexpr std::uint64_t kBlockStream = 2;
inline constexpr std::uint64_t kDelayStream = 3;
inline constexpr std::uint64_t kSubsetStream = 4;
inline constexpr std::uint64_t kSynthStream = 5;

enum class Sampling { with_replacement, without_replacement };

// Draws mini-batches of example indices. With replacement: B i.i.d. uniform draws.
// Without replacement: a partial Fisher-Yates shuffle, returned sorted.
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::size_t batch, Sampling mode);

  std::span<const std::size_t> next(Rng& rng);
  std::size_t batch_size() const noexcept { return batch_; }

 private:
  std::size_t n_;
  std::size_t batch_;
  Sampling mode_;
  std::vector<std::size_t> perm_;
  std::vector<std::size_t> out_;
};

std::size_t uniform_index(Rng& rng, std::size_t n);

}  // namespace aprox
