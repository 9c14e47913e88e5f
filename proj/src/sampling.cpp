#include "aprox/sampling.hpp"

#include <algorithm>
#include <numeric>

#include "aprox/errors.hpp"

namespace aprox {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Rng make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream) {
  std::uint64_t state = seed;
  const std::uint64_t a = splitmix64(state) ^ (stream * 0xd1342543de82ef95ULL);
  state = a;
  const std::uint64_t b = splitmix64(state) ^ (substream * 0xa0761d6478bd642fULL);
  state = b;
  std::seed_seq seq{static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(splitmix64(state)),
                    static_cast<std::uint32_t>(splitmix64(state))};
  return Rng(seq);
}

std::size_t uniform_index(Rng& rng, std::size_t n) {
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(rng);
}

BatchSampler::BatchSampler(std::size_t n, std::size_t batch, Sampling mode)
    : n_(n), batch_(batch), mode_(mode), out_(batch) {
  require(n >= 1, "BatchSampler: empty dataset");
  require(batch >= 1 && batch <= n, "BatchSampler: batch size must be in [1, n]");
  if (mode_ == Sampling::without_replacement) {
    perm_.resize(n);
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});
  }
}

std::span<const std::size_t> BatchSampler::next(Rng& rng) {
  if (mode_ == Sampling::with_replacement) {
    std::uniform_int_distribution<std::size_t> dist(0, n_ - 1);
    for (std::size_t& i : out_) i = dist(rng);
    return out_;
  }
  for (std::size_t t = 0; t < batch_; ++t) {
    std::uniform_int_distribution<std::size_t> dist(t, n_ - 1);
    std::swap(perm_[t], perm_[dist(rng)]);
  }
  std::copy(perm_.begin(), perm_.begin() + static_cast<std::ptrdiff_t>(batch_), out_.begin());
  std::sort(out_.begin(), out_.end());
  return out_;
}

}  // namespace aprox
