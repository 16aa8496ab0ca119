#include "fairrec/model.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "fairrec/errors.hpp"

namespace fairrec {

QualityRanking::QualityRanking(std::vector<std::int64_t> ids_best_first)
    : by_rank_(std::move(ids_best_first)) {
  rank_of_.reserve(by_rank_.size());
  for (std::size_t i = 0; i < by_rank_.size(); ++i) {
    if (!rank_of_.emplace(by_rank_[i], static_cast<Rank>(i + 1)).second) {
      throw InputError("quality ranking lists creator " + std::to_string(by_rank_[i]) +
                       " twice");
    }
  }
}

QualityRanking QualityRanking::identity(std::size_t n) {
  std::vector<std::int64_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<std::int64_t>(i + 1);
  return QualityRanking(std::move(ids));
}

std::optional<Rank> QualityRanking::rank_of(std::int64_t id) const {
  const auto it = rank_of_.find(id);
  if (it == rank_of_.end()) return std::nullopt;
  return it->second;
}

NoiseParams NoiseParams::checked(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ContractError("signal p must lie in [0, 1], got " + std::to_string(p));
  }
  return NoiseParams{p};
}

PlatformState::PlatformState(std::size_t creators, std::size_t users)
    : creators_(creators),
      users_(users),
      words_((creators + 63) / 64),
      followers_(creators, 0),
      bits_(users * ((creators + 63) / 64), 0),
      best_(users, 0) {}

std::vector<Rank> PlatformState::followed_by(UserId user) const {
  std::vector<Rank> out;
  for (std::size_t w = 0; w < words_; ++w) {
    std::uint64_t word = bits_[user * words_ + w];
    while (word != 0) {
      const int bit = std::countr_zero(word);
      out.push_back(static_cast<Rank>(w * 64 + bit + 1));
      word &= word - 1;
    }
  }
  return out;
}

std::size_t PlatformState::followed_count(UserId user) const {
  std::size_t count = 0;
  for (std::size_t w = 0; w < words_; ++w) count += std::popcount(bits_[user * words_ + w]);
  return count;
}

bool PlatformState::add_follow(UserId user, Rank rank) {
  const std::size_t bit = rank - 1;
  std::uint64_t& word = bits_[user * words_ + bit / 64];
  const std::uint64_t mask = std::uint64_t{1} << (bit % 64);
  if (word & mask) return false;
  word |= mask;
  ++followers_[bit];
  Rank& best = best_[user];
  if (best == 0) {
    best = rank;
    best_sum_ += rank;
    ++users_following_;
  } else if (rank < best) {
    best_sum_ -= best - rank;
    best = rank;
  }
  return true;
}

PlatformState new_platform(std::size_t creators, std::size_t users,
                           std::span<const FollowEdge> snapshot) {
  if (creators == 0 || users == 0) {
    throw ContractError("a platform needs at least one creator and one user");
  }
  PlatformState state(creators, users);
  for (const FollowEdge& edge : snapshot) {
    if (edge.user >= users || edge.rank < 1 || edge.rank > creators) {
      throw InputError("snapshot edge (user " + std::to_string(edge.user + 1) + ", rank " +
                       std::to_string(edge.rank) + ") is outside " +
                       std::to_string(users) + " users x " + std::to_string(creators) +
                       " creators");
    }
    state.add_follow(edge.user, edge.rank);
  }
  return state;
}

StepDelta apply_step(PlatformState& state, std::span<const Rank> recommendations, double p,
                     const CounterRng& rng) {
  if (recommendations.size() != state.users()) {
    throw ContractError("apply_step needs one recommendation per user");
  }
  const std::uint32_t t = state.timestep() + 1;
  StepDelta delta;
  delta.gains.assign(state.creators(), 0);
  // Decisions only read the deciding user's own row, so updating rows in place
  // is equivalent to evaluating every user against the pre-step state.
  for (UserId u = 0; u < state.users(); ++u) {
    const Rank rec = recommendations[u];
    if (rec < 1 || rec > state.creators()) {
      throw ContractError("recommended rank " + std::to_string(rec) + " out of range");
    }
    if (follow_decision(state.best_rank(u), rec, state.follows(u, rec), p,
                        follow_unit(rng, t, u))) {
      state.add_follow(u, rec);
      delta.new_follows.push_back({u, rec});
      ++delta.gains[rec - 1];
    }
  }
  state.advance_clock();
  return delta;
}

bool is_absorbing_noiseless(const PlatformState& state) {
  for (UserId u = 0; u < state.users(); ++u) {
    if (state.best_or_zero(u) != 1) return false;
  }
  return true;
}

}  // namespace fairrec
