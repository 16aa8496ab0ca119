#pragma once

// Counter-based random numbers.
//
// Every random decision in a simulation is a pure function of
// (master seed, simulation index, purpose lane, timestep, user). Draws can
// therefore be evaluated in any order, on any worker, and give the same value.

#include <array>
#include <cstdint>

namespace fairrec {

// Philox4x32-10 (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3").
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter generate(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
             static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
             static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

// Purpose lanes keep unrelated draws of one simulation disjoint.
enum class Lane : std::uint32_t {
  kStep = 0,          // recommendation (low word) + follow decision (high word)
  kGroupShuffle = 1,  // pairwise group assignment
  kSampler = 2,       // state samplers used by validators
  kAuxiliary = 3,
};

// Two independent 64-bit words produced for one (lane, t, user) cell.
struct RandomPair {
  std::uint64_t first;
  std::uint64_t second;
};

// Uniform double in [0, 1) from the top 53 bits.
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

__extension__ using uint128 = unsigned __int128;

// Uniform integer in [0, bound) by 64x64->128 multiply-high.
// Bias is at most bound / 2^64.
constexpr std::uint64_t to_bounded(std::uint64_t bits, std::uint64_t bound) noexcept {
  return static_cast<std::uint64_t>((static_cast<uint128>(bits) * bound) >> 64);
}

class CounterRng {
 public:
  constexpr CounterRng() = default;
  constexpr CounterRng(std::uint64_t master_seed, std::uint32_t simulation) noexcept
      : key_{static_cast<std::uint32_t>(master_seed),
             static_cast<std::uint32_t>(master_seed >> 32)},
        simulation_(simulation) {}

  constexpr RandomPair draw(Lane lane, std::uint32_t t, std::uint32_t user) const noexcept {
    const auto out = Philox4x32::generate(
        {user, t, static_cast<std::uint32_t>(lane), simulation_}, key_);
    return {(std::uint64_t{out[1]} << 32) | out[0], (std::uint64_t{out[3]} << 32) | out[2]};
  }

  constexpr std::uint64_t master_seed() const noexcept {
    return (std::uint64_t{key_[1]} << 32) | key_[0];
  }
  constexpr std::uint32_t simulation() const noexcept { return simulation_; }

 private:
  Philox4x32::Key key_{0, 0};
  std::uint32_t simulation_ = 0;
};

// Per-user step draws: the low word of draw(kStep, t, user) drives the
// recommendation, the high word the follow decision.
constexpr std::uint64_t recommendation_bits(const CounterRng& rng, std::uint32_t t,
                                            std::uint32_t user) noexcept {
  return rng.draw(Lane::kStep, t, user).first;
}

constexpr std::uint64_t follow_bits(const CounterRng& rng, std::uint32_t t,
                                    std::uint32_t user) noexcept {
  return rng.draw(Lane::kStep, t, user).second;
}

// Sequential generator over one lane of a CounterRng, for code that needs a
// stream of draws (shuffles, rejection samplers). Position `row` selects an
// independent sub-stream.
class LaneStream {
 public:
  LaneStream(const CounterRng& rng, Lane lane, std::uint32_t row) noexcept
      : rng_(rng), lane_(lane), row_(row) {}

  std::uint64_t next() noexcept {
    if (!have_spare_) {
      const RandomPair pair = rng_.draw(lane_, row_, counter_++);
      spare_ = pair.second;
      have_spare_ = true;
      return pair.first;
    }
    have_spare_ = false;
    return spare_;
  }

  std::uint64_t below(std::uint64_t bound) noexcept { return to_bounded(next(), bound); }
  double unit() noexcept { return to_unit(next()); }

 private:
  CounterRng rng_;
  Lane lane_;
  std::uint32_t row_;
  std::uint32_t counter_ = 0;
  std::uint64_t spare_ = 0;
  bool have_spare_ = false;
};

}  // namespace fairrec
