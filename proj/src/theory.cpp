#include "fairrec/theory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fairrec/errors.hpp"
#include "fairrec/policies.hpp"
#include "parallel.hpp"

namespace fairrec {

double group_size_bound(double p) {
  return 20.0 * (1.0 - p) * (3.0 + 4.0 * p * p) / (p * (2.0 * p - 1.0) * (2.0 * p - 1.0));
}

std::uint64_t min_group_size(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ContractError("signal p must lie in [0, 1], got " + std::to_string(p));
  }
  if (p <= 0.5) {
    throw InvalidSignal("the group-size bound needs p > 0.5 so that the better creator gains in "
                        "expectation, got p = " + std::to_string(p));
  }
  const double raw = group_size_bound(p);
  // Absorb rounding error when the bound lands on an integer.
  const double k = std::ceil(raw * (1.0 - 1e-12));
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(k));
}

std::vector<std::int64_t> expected_pairwise_counts(std::size_t creators, std::uint64_t group_size) {
  if (creators < 2 || group_size < 1) {
    throw ContractError("pairwise counts need n >= 2 and k >= 1");
  }
  std::vector<std::int64_t> out(creators);
  const auto k = static_cast<std::int64_t>(group_size);
  const auto n = static_cast<std::int64_t>(creators);
  for (std::int64_t i = 1; i <= n; ++i) out[i - 1] = k * (2 * n - i - 1);
  return out;
}

std::vector<std::int64_t> expected_permutation_counts(std::size_t creators,
                                                      std::uint64_t group_size) {
  if (creators < 1 || group_size < 1) {
    throw ContractError("permutation counts need n >= 1 and k >= 1");
  }
  if (creators > 12) {
    throw ConfigError("permutation counts are only computed for n <= 12, got n = " +
                      std::to_string(creators));
  }
  const auto total = static_cast<std::int64_t>(factorial(creators) * group_size);
  std::vector<std::int64_t> out(creators);
  for (std::size_t i = 1; i <= creators; ++i) out[i - 1] = total / static_cast<std::int64_t>(i);
  return out;
}

double pairwise_gap_mean(double p, std::uint64_t group_size) {
  return static_cast<double>(group_size) * p * (2.0 * p - 1.0);
}

double pairwise_gap_variance(double p, std::uint64_t group_size) {
  return static_cast<double>(group_size) * p * (1.0 - p) * (3.0 + 4.0 * p * p);
}

nlohmann::json PairwiseNoiseReport::to_json() const {
  return {
      {"p", p},
      {"k", group_size},
      {"trials", trials},
      {"win_probability", win_probability.mean},
      {"win_ci_lo", win_probability.ci ? win_probability.ci->lo : win_probability.mean},
      {"win_ci_hi", win_probability.ci ? win_probability.ci->hi : win_probability.mean},
      {"gap_mean", gap_mean},
      {"gap_mean_stderr", gap_mean_stderr},
      {"gap_variance", gap_variance},
      {"expected_gap_mean", expected_mean},
      {"expected_gap_variance", expected_variance},
  };
}

PairwiseNoiseReport validate_pairwise_noise(double p, std::uint64_t group_size, std::size_t trials,
                                            std::uint64_t seed, unsigned workers) {
  NoiseParams::checked(p);
  if (trials < 1) throw ContractError("at least one trial is required");
  if (group_size < 1) throw ContractError("group size must be at least 1");

  const std::size_t k = group_size;
  // Users [0, k) form group A and see (1, 2); users [k, 2k) form group B and see (2, 1).
  std::vector<Rank> first(2 * k, 1), second(2 * k, 2);
  std::fill(first.begin() + static_cast<std::ptrdiff_t>(k), first.end(), 2);
  std::fill(second.begin() + static_cast<std::ptrdiff_t>(k), second.end(), 1);

  std::vector<std::int64_t> gaps(trials);
  detail::parallel_for(trials, workers, [&](std::size_t trial) {
    const CounterRng rng(seed, static_cast<std::uint32_t>(trial));
    PlatformState state = new_platform(2, 2 * k);
    apply_step(state, first, p, rng);
    apply_step(state, second, p, rng);
    gaps[trial] = state.followers_of(1) - state.followers_of(2);
  });

  PairwiseNoiseReport report;
  report.p = p;
  report.group_size = group_size;
  report.trials = trials;
  RunningMoments moments;
  std::size_t wins = 0;
  for (const std::int64_t s : gaps) {
    moments.add(static_cast<double>(s));
    wins += s > 0;
  }
  report.win_probability = trials >= 2 ? proportion_ci(wins, trials)
                                       : Estimate{static_cast<double>(wins), 1, std::nullopt};
  report.gap_mean = moments.mean();
  report.gap_variance = moments.sample_variance();
  report.gap_mean_stderr = std::sqrt(report.gap_variance / static_cast<double>(trials));
  report.expected_mean = pairwise_gap_mean(p, group_size);
  report.expected_variance = pairwise_gap_variance(p, group_size);
  return report;
}

FairStateSampler sorted_fair_state_sampler(std::size_t creators, std::size_t users) {
  if (creators < 1 || users < creators * (creators - 1) / 2) {
    throw ConfigError("a strictly decreasing follower vector over " + std::to_string(creators) +
                      " creators needs at least n(n-1)/2 users");
  }
  return [creators, users](const CounterRng& rng, std::size_t trial) {
    // Rejection sampling: entries uniform in [0, 2m/n], kept when distinct
    // and summing to at most m.
    const std::uint64_t ceiling = std::max<std::uint64_t>(2 * users / creators, creators - 1);
    LaneStream stream(rng, Lane::kSampler, static_cast<std::uint32_t>(trial));
    std::vector<std::int64_t> counts(creators);
    for (int attempt = 0; attempt < 1'000'000; ++attempt) {
      for (auto& c : counts) c = static_cast<std::int64_t>(stream.below(ceiling + 1));
      std::sort(counts.begin(), counts.end(), std::greater<>());
      const bool distinct = std::adjacent_find(counts.begin(), counts.end()) == counts.end();
      std::int64_t sum = 0;
      for (const auto c : counts) sum += c;
      if (!distinct || sum > static_cast<std::int64_t>(users)) continue;

      std::vector<FollowEdge> edges;
      edges.reserve(static_cast<std::size_t>(sum));
      UserId next = 0;
      for (std::size_t i = 0; i < creators; ++i) {
        for (std::int64_t j = 0; j < counts[i]; ++j) edges.push_back({next++, static_cast<Rank>(i + 1)});
      }
      return new_platform(creators, users, edges);
    }
    throw ContractError("could not sample a strictly decreasing follower vector");
  };
}

nlohmann::json MaintenanceReport::to_json() const {
  return {
      {"n", creators},
      {"m", users},
      {"trials", trials},
      {"fair_probability", fair_probability.mean},
      {"ci_lo", fair_probability.ci ? fair_probability.ci->lo : fair_probability.mean},
      {"ci_hi", fair_probability.ci ? fair_probability.ci->hi : fair_probability.mean},
  };
}

MaintenanceReport validate_fair_maintenance(std::size_t creators, std::size_t users,
                                            const FairStateSampler& sampler, std::size_t trials,
                                            std::uint64_t seed, unsigned workers) {
  if (trials < 1) throw ContractError("at least one trial is required");
  std::vector<char> stayed_fair(trials, 0);
  detail::parallel_for(trials, workers, [&](std::size_t trial) {
    const CounterRng rng(seed, static_cast<std::uint32_t>(trial));
    PlatformState state = sampler(rng, trial);
    if (state.creators() != creators || state.users() != users) {
      throw ContractError("sampler returned a platform of the wrong size");
    }
    if (!fairness_vector(state.followers()).all) {
      throw ContractError("sampler returned a state that is not fair for every creator");
    }
    const std::vector<Rank> recs = recommend_popularity(state, rng);
    apply_step(state, recs, 1.0, rng);
    stayed_fair[trial] = fairness_vector(state.followers()).all;
  });

  MaintenanceReport report{creators, users, trials, {}};
  std::size_t fair = 0;
  for (const char f : stayed_fair) fair += f != 0;
  report.fair_probability = trials >= 2 ? proportion_ci(fair, trials)
                                        : Estimate{static_cast<double>(fair), 1, std::nullopt};
  return report;
}

}  // namespace fairrec
