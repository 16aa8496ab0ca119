#include "fairrec/policies.hpp"

#include <numeric>

#include "fairrec/errors.hpp"

namespace fairrec {

PolicySpec PolicySpec::parse(std::string_view name) {
  if (name == "random") return {PolicyKind::kRandom, BasePolicy::kRandom};
  if (name == "popularity") return {PolicyKind::kPopularity, BasePolicy::kPopularity};
  if (name == "permutation") return {PolicyKind::kPermutation, BasePolicy::kRandom};
  if (name == "pairwise+random") return {PolicyKind::kPairwise, BasePolicy::kRandom};
  if (name == "pairwise+popularity") return {PolicyKind::kPairwise, BasePolicy::kPopularity};
  throw ConfigError("unknown policy '" + std::string(name) +
                    "' (expected random, popularity, permutation, pairwise+random or "
                    "pairwise+popularity)");
}

std::string PolicySpec::name() const {
  switch (kind) {
    case PolicyKind::kRandom:
      return "random";
    case PolicyKind::kPopularity:
      return "popularity";
    case PolicyKind::kPermutation:
      return "permutation";
    case PolicyKind::kPairwise:
      return base == BasePolicy::kRandom ? "pairwise+random" : "pairwise+popularity";
  }
  return "unknown";
}

std::vector<UserId> GroupAssignment::members(std::size_t group) const {
  std::vector<UserId> out;
  for (UserId u = 0; u < group_of.size(); ++u) {
    if (group_of[u] == group) out.push_back(u);
  }
  return out;
}

std::vector<std::pair<Rank, Rank>> ordered_pairs(std::size_t creators) {
  std::vector<std::pair<Rank, Rank>> pairs;
  pairs.reserve(creators * (creators > 0 ? creators - 1 : 0));
  for (Rank i = 1; i <= creators; ++i) {
    for (Rank j = 1; j <= creators; ++j) {
      if (i != j) pairs.emplace_back(i, j);
    }
  }
  return pairs;
}

GroupAssignment make_pairwise_schedule(std::size_t creators, std::size_t users,
                                       const CounterRng& rng, bool strict) {
  if (creators < 2) throw ConfigError("pairwise exploration needs at least two creators");
  GroupAssignment out;
  out.pairs = ordered_pairs(creators);
  const std::size_t groups = out.pairs.size();
  if (users < groups) {
    throw ConfigError("pairwise exploration needs at least n(n-1) = " + std::to_string(groups) +
                      " users, got " + std::to_string(users));
  }
  if (strict && users % groups != 0) {
    throw ConfigError("user count " + std::to_string(users) + " is not divisible by n(n-1) = " +
                      std::to_string(groups));
  }
  out.group_size = users / groups;
  out.balanced = users % groups == 0;

  // Fisher-Yates, written out so the order is identical on every platform.
  std::vector<UserId> order(users);
  std::iota(order.begin(), order.end(), UserId{0});
  LaneStream stream(rng, Lane::kGroupShuffle, 0);
  for (std::size_t i = users; i > 1; --i) {
    const std::size_t j = stream.below(i);
    std::swap(order[i - 1], order[j]);
  }
  out.group_of.assign(users, 0);
  for (std::size_t pos = 0; pos < users; ++pos) {
    out.group_of[order[pos]] = static_cast<std::uint32_t>(pos % groups);
  }
  return out;
}

std::vector<double> popularity_distribution(std::span<const std::int64_t> followers) {
  long double total = 0;
  for (const std::int64_t a : followers) total += 1.0L + static_cast<long double>(a);
  std::vector<double> out(followers.size());
  for (std::size_t i = 0; i < followers.size(); ++i) {
    out[i] = static_cast<double>((1.0L + static_cast<long double>(followers[i])) / total);
  }
  return out;
}

void PopularityTable::rebuild(std::span<const std::int64_t> followers) {
  cumulative_.resize(followers.size());
  std::uint64_t running = 0;
  for (std::size_t i = 0; i < followers.size(); ++i) {
    running += 1 + static_cast<std::uint64_t>(followers[i]);
    cumulative_[i] = running;
  }
  total_ = running;

  // 2^b buckets with 2^b >= 16n, so most draws scan at most one entry.
  // Bucket j covers bits in [j << shift,
  // (j + 1) << shift); its smallest x is floor((j << shift) * total / 2^64).
  unsigned log_buckets = 1;
  while ((std::size_t{1} << log_buckets) < 16 * followers.size()) ++log_buckets;
  guide_shift_ = 64 - log_buckets;
  guide_.resize(std::size_t{1} << log_buckets);
  std::uint32_t i = 0;
  for (std::size_t j = 0; j < guide_.size(); ++j) {
    const std::uint64_t lowest = to_bounded(std::uint64_t{j} << guide_shift_, total_);
    while (cumulative_[i] <= lowest) ++i;
    guide_[j] = i;
  }
}

std::uint64_t factorial(std::size_t n) {
  std::uint64_t out = 1;
  for (std::size_t i = 2; i <= n; ++i) out *= i;
  return out;
}

std::vector<Rank> nth_permutation(std::size_t creators, std::uint64_t index) {
  std::vector<Rank> pool(creators);
  std::iota(pool.begin(), pool.end(), Rank{1});
  std::vector<Rank> out;
  out.reserve(creators);
  for (std::size_t remaining = creators; remaining > 0; --remaining) {
    const std::uint64_t block = factorial(remaining - 1);
    const std::size_t pick = static_cast<std::size_t>(index / block);
    index %= block;
    out.push_back(pool[pick]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return out;
}

namespace {

constexpr std::size_t kMaxPermutationCreators = 12;

std::size_t permutation_block_size(std::size_t creators, std::size_t users) {
  if (creators > kMaxPermutationCreators) {
    throw ConfigError("the permutation policy supports at most 12 creators");
  }
  const std::uint64_t perms = factorial(creators);
  if (users == 0 || users % perms != 0) {
    throw ConfigError("the permutation policy needs k * n! users; " + std::to_string(users) +
                      " is not a multiple of " + std::to_string(perms));
  }
  return static_cast<std::size_t>(users / perms);
}

void check_permutation_step(std::size_t creators, std::uint32_t t) {
  if (t < 1 || t > creators) {
    throw ConfigError("the permutation policy is defined for steps 1.." +
                      std::to_string(creators) + ", got step " + std::to_string(t));
  }
}

}  // namespace

std::vector<Rank> recommend_random(const PlatformState& state, const CounterRng& rng) {
  const std::uint32_t t = state.timestep() + 1;
  std::vector<Rank> out(state.users());
  for (UserId u = 0; u < state.users(); ++u) {
    out[u] = uniform_rank(recommendation_bits(rng, t, u), state.creators());
  }
  return out;
}

std::vector<Rank> recommend_popularity(const PlatformState& state, const CounterRng& rng) {
  const std::uint32_t t = state.timestep() + 1;
  const PopularityTable table(state.followers());
  std::vector<Rank> out(state.users());
  for (UserId u = 0; u < state.users(); ++u) {
    out[u] = table.draw(recommendation_bits(rng, t, u));
  }
  return out;
}

std::vector<Rank> recommend_permutation(std::size_t creators, std::size_t users,
                                        std::uint32_t t) {
  const std::size_t k = permutation_block_size(creators, users);
  check_permutation_step(creators, t);
  std::vector<Rank> out(users);
  for (std::size_t block = 0; block * k < users; ++block) {
    const Rank shown = nth_permutation(creators, block)[t - 1];
    std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(block * k), k, shown);
  }
  return out;
}

std::vector<Rank> recommend_pairwise(const GroupAssignment& assignment, std::uint32_t t) {
  if (t != 1 && t != 2) {
    throw ContractError("pairwise exploration covers steps 1 and 2 only, got " +
                        std::to_string(t));
  }
  std::vector<Rank> out(assignment.group_of.size());
  for (UserId u = 0; u < out.size(); ++u) {
    const auto& [first, second] = assignment.pairs[assignment.group_of[u]];
    out[u] = t == 1 ? first : second;
  }
  return out;
}

Recommender::Recommender(PolicySpec spec, std::size_t creators, std::size_t users,
                         const CounterRng& rng, bool strict_groups)
    : spec_(spec), creators_(creators), users_(users) {
  if (spec_.kind == PolicyKind::kPermutation) {
    permutation_block_ = permutation_block_size(creators, users);
  } else if (spec_.kind == PolicyKind::kPairwise) {
    schedule_ = make_pairwise_schedule(creators, users, rng, strict_groups);
  }
}

void Recommender::prepare(const PlatformState& state) {
  step_ = state.timestep() + 1;
  PolicyKind kind = spec_.kind;
  if (kind == PolicyKind::kPairwise && step_ > 2) {
    kind = spec_.base == BasePolicy::kRandom ? PolicyKind::kRandom : PolicyKind::kPopularity;
  }
  switch (kind) {
    case PolicyKind::kRandom:
      mode_ = Mode::kRandom;
      break;
    case PolicyKind::kPopularity:
      mode_ = Mode::kPopularity;
      table_.rebuild(state.followers());
      break;
    case PolicyKind::kPermutation: {
      mode_ = Mode::kPermutation;
      check_permutation_step(creators_, step_);
      const std::size_t blocks = users_ / permutation_block_;
      permutation_column_.resize(blocks);
      for (std::size_t b = 0; b < blocks; ++b) {
        permutation_column_[b] = nth_permutation(creators_, b)[step_ - 1];
      }
      break;
    }
    case PolicyKind::kPairwise:
      mode_ = Mode::kPairwise;
      break;
  }
}

Rank Recommender::recommend_one(UserId user, std::uint64_t bits) const {
  switch (mode_) {
    case Mode::kRandom:
      return uniform_rank(bits, creators_);
    case Mode::kPopularity:
      return table_.draw(bits);
    case Mode::kPermutation:
      return permutation_column_[user / permutation_block_];
    case Mode::kPairwise: {
      const auto& [first, second] = schedule_.pairs[schedule_.group_of[user]];
      return step_ == 1 ? first : second;
    }
  }
  return 1;
}

void Recommender::recommend_many(const UserId* users, const std::uint64_t* bits, std::size_t count,
                                 Rank* out) const {
  switch (mode_) {
    case Mode::kRandom:
      for (std::size_t j = 0; j < count; ++j) out[j] = uniform_rank(bits[j], creators_);
      return;
    case Mode::kPopularity:
      for (std::size_t j = 0; j < count; ++j) out[j] = table_.draw(bits[j]);
      return;
    default:
      for (std::size_t j = 0; j < count; ++j) out[j] = recommend_one(users[j], bits[j]);
  }
}

std::vector<Rank> recommend(Recommender& policy, const PlatformState& state,
                            const CounterRng& rng) {
  policy.prepare(state);
  const std::uint32_t t = policy.step();
  std::vector<Rank> out(state.users());
  for (UserId u = 0; u < state.users(); ++u) {
    out[u] = policy.recommend_one(u, recommendation_bits(rng, t, u));
  }
  return out;
}

}  // namespace fairrec
