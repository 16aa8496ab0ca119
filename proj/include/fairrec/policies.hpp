#pragma once

// Recommendation policies. Each produces one creator rank per user per step.
//
// All randomness comes from the step lane of a CounterRng keyed by
// (t, user), so a user's recommendation does not depend on evaluation order.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fairrec/model.hpp"
#include "fairrec/rng.hpp"

namespace fairrec {

enum class PolicyKind { kRandom, kPopularity, kPermutation, kPairwise };
enum class BasePolicy { kRandom, kPopularity };

struct PolicySpec {
  PolicyKind kind = PolicyKind::kPopularity;
  BasePolicy base = BasePolicy::kPopularity;  // used after pairwise exploration

  // Accepts "random", "popularity", "permutation", "pairwise+random",
  // "pairwise+popularity". Throws ConfigError otherwise.
  static PolicySpec parse(std::string_view name);
  std::string name() const;

  friend bool operator==(const PolicySpec&, const PolicySpec&) = default;
};

// Users dealt into the n(n-1) ordered creator pairs.
struct GroupAssignment {
  std::vector<std::pair<Rank, Rank>> pairs;  // (shown first, shown second)
  std::vector<std::uint32_t> group_of;       // per user, index into pairs
  std::size_t group_size = 0;                // k = m / (n(n-1))
  bool balanced = true;                      // false when lenient mode left a remainder

  std::size_t groups() const noexcept { return pairs.size(); }
  std::vector<UserId> members(std::size_t group) const;
};

// Ordered pairs (i, j), i != j, in lexicographic order.
std::vector<std::pair<Rank, Rank>> ordered_pairs(std::size_t creators);

// Shuffles users uniformly and deals them round-robin into the ordered pairs.
// Strict mode requires n(n-1) | m. Throws ConfigError.
GroupAssignment make_pairwise_schedule(std::size_t creators, std::size_t users,
                                       const CounterRng& rng, bool strict = true);

// P_i = (1 + a_i) / sum_j (1 + a_j).
std::vector<double> popularity_distribution(std::span<const std::int64_t> followers);

// Cumulative integer weights (1 + a_i) for exact categorical draws.
class PopularityTable {
 public:
  PopularityTable() = default;
  explicit PopularityTable(std::span<const std::int64_t> followers) { rebuild(followers); }

  void rebuild(std::span<const std::int64_t> followers);

  // Inverse-CDF draw: the first rank whose cumulative weight exceeds
  // x = floor(bits * total / 2^64). The top bits of `bits` pick a guide
  // bucket that already holds the smallest possible answer, so the scan is
  // short; the result equals a binary search over the cumulative table.
  Rank draw(std::uint64_t bits) const noexcept {
    const std::uint64_t x = to_bounded(bits, total_);
    std::uint32_t i = guide_[bits >> guide_shift_];
    while (cumulative_[i] <= x) ++i;
    return static_cast<Rank>(i) + 1;
  }

  std::uint64_t total() const noexcept { return total_; }

 private:
  std::vector<std::uint64_t> cumulative_;
  std::vector<std::uint32_t> guide_;
  unsigned guide_shift_ = 63;
  std::uint64_t total_ = 0;
};

inline Rank uniform_rank(std::uint64_t bits, std::size_t creators) noexcept {
  return static_cast<Rank>(to_bounded(bits, creators)) + 1;
}

// The (index)-th permutation of 1..n in lexicographic order.
std::vector<Rank> nth_permutation(std::size_t creators, std::uint64_t index);

std::uint64_t factorial(std::size_t n);

// Each function below recommends for step t = state.timestep() + 1.
std::vector<Rank> recommend_random(const PlatformState& state, const CounterRng& rng);
std::vector<Rank> recommend_popularity(const PlatformState& state, const CounterRng& rng);

// User u belongs to permutation block u / k and receives that permutation's
// t-th entry. Requires m = k * n! and 1 <= t <= n; throws ConfigError.
std::vector<Rank> recommend_permutation(std::size_t creators, std::size_t users,
                                        std::uint32_t t);

// Group (i, j) sees i at t = 1 and j at t = 2. Throws ContractError for other t.
std::vector<Rank> recommend_pairwise(const GroupAssignment& assignment, std::uint32_t t);

// Policy bound to one simulation. Holds the pairwise schedule and the
// per-step popularity table.
class Recommender {
 public:
  Recommender(PolicySpec spec, std::size_t creators, std::size_t users, const CounterRng& rng,
              bool strict_groups = true);

  const PolicySpec& spec() const noexcept { return spec_; }
  const GroupAssignment* schedule() const noexcept {
    return schedule_.pairs.empty() ? nullptr : &schedule_;
  }

  // Must be called once before each step with the pre-step state.
  void prepare(const PlatformState& state);

  // Recommendation for one user in the prepared step; `bits` is
  // recommendation_bits(rng, step, user).
  Rank recommend_one(UserId user, std::uint64_t bits) const;

  // recommend_one over a batch, dispatching on the policy once.
  void recommend_many(const UserId* users, const std::uint64_t* bits, std::size_t count,
                      Rank* out) const;

  std::uint32_t step() const noexcept { return step_; }

 private:
  enum class Mode { kRandom, kPopularity, kPermutation, kPairwise };

  PolicySpec spec_;
  std::size_t creators_;
  std::size_t users_;
  std::size_t permutation_block_ = 0;
  GroupAssignment schedule_;
  PopularityTable table_;
  Mode mode_ = Mode::kRandom;
  std::uint32_t step_ = 0;
  std::vector<Rank> permutation_column_;  // per block, entry for the current step
};

// Dispatches on the policy for step state.timestep() + 1.
std::vector<Rank> recommend(Recommender& policy, const PlatformState& state,
                            const CounterRng& rng);

}  // namespace fairrec
