#pragma once

// Platform state and one-step follow dynamics.
//
// Creators are identified by their quality rank: rank 1 is the best creator.
// Users are 0-based indices. Each user keeps the set of creators they follow
// as a bitset over ranks, so `n` is expected to stay in the low thousands.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fairrec/rng.hpp"

namespace fairrec {

using Rank = std::uint32_t;
using UserId = std::uint32_t;

// Strict total order over external creator ids, best first.
class QualityRanking {
 public:
  QualityRanking() = default;
  // Throws InputError on duplicate ids.
  explicit QualityRanking(std::vector<std::int64_t> ids_best_first);

  // The identity ranking over n creators: creator id i has rank i.
  static QualityRanking identity(std::size_t n);

  std::size_t size() const noexcept { return by_rank_.size(); }
  std::optional<Rank> rank_of(std::int64_t id) const;
  std::int64_t id_at(Rank rank) const { return by_rank_.at(rank - 1); }
  const std::vector<std::int64_t>& ids_best_first() const noexcept { return by_rank_; }

 private:
  std::vector<std::int64_t> by_rank_;
  std::unordered_map<std::int64_t, Rank> rank_of_;
};

struct NoiseParams {
  double p = 1.0;  // probability of acting consistently with quality

  // Throws ContractError outside [0, 1].
  static NoiseParams checked(double p);
};

struct FollowEdge {
  UserId user;
  Rank rank;

  friend bool operator==(const FollowEdge&, const FollowEdge&) = default;
};

struct StepDelta {
  std::vector<FollowEdge> new_follows;
  std::vector<std::int64_t> gains;  // indexed by rank - 1
};

class PlatformState {
 public:
  PlatformState() = default;
  PlatformState(std::size_t creators, std::size_t users);

  std::size_t creators() const noexcept { return creators_; }
  std::size_t users() const noexcept { return users_; }
  std::uint32_t timestep() const noexcept { return t_; }

  // Follower count per creator, indexed by rank - 1.
  std::span<const std::int64_t> followers() const noexcept { return followers_; }
  std::int64_t followers_of(Rank rank) const { return followers_.at(rank - 1); }

  std::optional<Rank> best_rank(UserId user) const {
    const Rank r = best_.at(user);
    return r == 0 ? std::nullopt : std::optional<Rank>(r);
  }
  // Raw best rank, 0 when the user follows nobody.
  Rank best_or_zero(UserId user) const noexcept { return best_[user]; }

  bool follows(UserId user, Rank rank) const noexcept {
    const std::size_t bit = rank - 1;
    return (bits_[user * words_ + bit / 64] >> (bit % 64)) & 1u;
  }
  std::vector<Rank> followed_by(UserId user) const;
  std::size_t followed_count(UserId user) const;

  // Sum of best ranks over users that follow someone, and how many do.
  std::uint64_t best_rank_sum() const noexcept { return best_sum_; }
  std::size_t users_following() const noexcept { return users_following_; }

  // Records that `user` follows `rank`. Returns false if it already did.
  // Follower counts are updated immediately.
  bool add_follow(UserId user, Rank rank);

  void advance_clock() noexcept { ++t_; }

  friend bool operator==(const PlatformState&, const PlatformState&) = default;

 private:
  std::size_t creators_ = 0;
  std::size_t users_ = 0;
  std::size_t words_ = 0;
  std::uint32_t t_ = 0;
  std::vector<std::int64_t> followers_;
  std::vector<std::uint64_t> bits_;
  std::vector<Rank> best_;
  std::uint64_t best_sum_ = 0;
  std::size_t users_following_ = 0;
};

// Builds a platform with n creators and m users. Snapshot edges, if any, are
// applied as pre-existing follows; t stays 0. Duplicate edges are ignored.
// Throws ContractError if n or m is zero, InputError on out-of-range edges.
PlatformState new_platform(std::size_t creators, std::size_t users,
                           std::span<const FollowEdge> snapshot = {});

// Maximizer follow rule with signal p. `unit` is a uniform draw in [0, 1).
// A user never re-follows a creator they already follow.
constexpr bool follow_decision(std::optional<Rank> best, Rank recommended,
                               bool already_followed, double p, double unit) noexcept {
  if (already_followed) return false;
  const bool better = !best || recommended < *best;
  return unit < (better ? p : 1.0 - p);
}

// Uniform draw for the follow decision of `user` at step `t`.
inline double follow_unit(const CounterRng& rng, std::uint32_t t, UserId user) noexcept {
  return to_unit(follow_bits(rng, t, user));
}

// Applies one simultaneous step: every user decides against the pre-step
// state, then the clock advances. `recommendations` holds one rank per user.
StepDelta apply_step(PlatformState& state, std::span<const Rank> recommendations,
                     double p, const CounterRng& rng);

// True when no policy can produce another follow under p = 1.
bool is_absorbing_noiseless(const PlatformState& state);

}  // namespace fairrec
