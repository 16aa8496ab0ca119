#pragma once

// Closed-form follower counts for the two exploration schedules, the
// group-size bound for noisy pairwise comparison, and Monte Carlo validators
// that check the bounds against the simulated dynamics.

#include <cstdint>
#include <functional>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairrec/metrics.hpp"
#include "fairrec/model.hpp"
#include "fairrec/rng.hpp"

namespace fairrec {

// Raw Chebyshev group-size bound 20(1-p)(3+4p^2) / (p(2p-1)^2).
double group_size_bound(double p);

// Smallest integer k satisfying the bound, never below 1.
// Throws InvalidSignal (a ConfigError) for p <= 0.5 and ContractError for p
// outside [0, 1].
std::uint64_t min_group_size(double p);

// Followers after pairwise exploration from an empty platform:
// a_i = k(2n - i - 1). Throws ContractError for n < 2 or k < 1.
std::vector<std::int64_t> expected_pairwise_counts(std::size_t creators, std::uint64_t group_size);

// Followers after the permutation schedule: a_i = k n! / i. Exact for n <= 12;
// larger n throws ConfigError.
std::vector<std::int64_t> expected_permutation_counts(std::size_t creators,
                                                      std::uint64_t group_size);

// E[S] = kp(2p-1) and Var[S] = kp(1-p)(3+4p^2) for S = X_i - X_j after one
// ordered comparison of a better creator i against a worse creator j.
double pairwise_gap_mean(double p, std::uint64_t group_size);
double pairwise_gap_variance(double p, std::uint64_t group_size);

struct PairwiseNoiseReport {
  double p = 1.0;
  std::uint64_t group_size = 1;
  std::size_t trials = 0;
  Estimate win_probability;  // empirical P(S > 0)
  double gap_mean = 0.0;
  double gap_variance = 0.0;  // unbiased sample variance
  double gap_mean_stderr = 0.0;
  double expected_mean = 0.0;
  double expected_variance = 0.0;

  nlohmann::json to_json() const;
};

// Simulates the two-group comparison on a two-creator platform with the
// model's step dynamics: group A sees (better, worse), group B sees
// (worse, better). Trials are independent rng streams; `workers` = 0 uses
// hardware concurrency. Results do not depend on the worker count.
PairwiseNoiseReport validate_pairwise_noise(double p, std::uint64_t group_size, std::size_t trials,
                                            std::uint64_t seed, unsigned workers = 0);

// Produces a fair platform state for trial `trial`.
using FairStateSampler = std::function<PlatformState(const CounterRng& rng, std::size_t trial)>;

// Draws strictly decreasing follower counts a_1 > ... > a_n >= 0 with
// sum <= m, then gives each of the first a_1 + ... + a_n users exactly one
// followed creator. Throws ConfigError if m < n(n-1)/2.
FairStateSampler sorted_fair_state_sampler(std::size_t creators, std::size_t users);

struct MaintenanceReport {
  std::size_t creators = 0;
  std::size_t users = 0;
  std::size_t trials = 0;
  Estimate fair_probability;

  nlohmann::json to_json() const;
};

// One noiseless popularity step from each sampled fair state; reports how
// often the successor is still fair for every creator. Throws ContractError
// if the sampler returns an unfair state.
MaintenanceReport validate_fair_maintenance(std::size_t creators, std::size_t users,
                                            const FairStateSampler& sampler, std::size_t trials,
                                            std::uint64_t seed, unsigned workers = 0);

}  // namespace fairrec
