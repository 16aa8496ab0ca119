#include "fairrec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "fairrec/errors.hpp"

namespace fairrec {

bool is_cc_fair(std::span<const std::int64_t> followers, Rank rank) {
  if (rank < 1 || rank > followers.size()) {
    throw ContractError("creator rank " + std::to_string(rank) + " outside 1.." +
                        std::to_string(followers.size()));
  }
  const std::int64_t own = followers[rank - 1];
  const auto at_least = std::count_if(followers.begin(), followers.end(),
                                      [own](std::int64_t a) { return a >= own; });
  return static_cast<std::size_t>(at_least) <= rank;
}

std::size_t FairnessVector::fair_count() const {
  return static_cast<std::size_t>(std::count(per_creator.begin(), per_creator.end(), true));
}

FairnessVector fairness_vector(std::span<const std::int64_t> followers) {
  std::vector<std::int64_t> sorted(followers.begin(), followers.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  FairnessVector out;
  out.per_creator.resize(followers.size());
  for (std::size_t i = 0; i < followers.size(); ++i) {
    // Elements >= a_i form a prefix of the descending order.
    const auto end = std::upper_bound(sorted.begin(), sorted.end(), followers[i],
                                      std::greater<>());
    const bool fair = static_cast<std::size_t>(end - sorted.begin()) <= i + 1;
    out.per_creator[i] = fair;
    out.all = out.all && fair;
  }
  return out;
}

Dissatisfaction dissatisfaction(const PlatformState& state) {
  Dissatisfaction out;
  const std::size_t following = state.users_following();
  out.fraction_no_follow =
      1.0 - static_cast<double>(following) / static_cast<double>(state.users());
  if (following > 0) {
    out.mean_best_rank =
        static_cast<double>(state.best_rank_sum()) / static_cast<double>(following);
  }
  return out;
}

MetricsRecord measure(const PlatformState& state) {
  MetricsRecord record;
  record.t = state.timestep();
  record.fairness = fairness_vector(state.followers());
  record.satisfaction = dissatisfaction(state);
  record.followers.assign(state.followers().begin(), state.followers().end());
  return record;
}

Estimate mean_ci(std::span<const double> samples) {
  if (samples.size() < 2) {
    throw AggregationError("a confidence interval needs at least two samples, got " +
                           std::to_string(samples.size()));
  }
  RunningMoments moments;
  for (const double x : samples) moments.add(x);
  return *moments.estimate();
}

Estimate proportion_ci(std::size_t successes, std::size_t trials) {
  if (trials < 2) {
    throw AggregationError("a proportion interval needs at least two trials, got " +
                           std::to_string(trials));
  }
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double half = kZ95 * std::sqrt(p * (1.0 - p) / n);
  return Estimate{p, trials, Interval{std::max(0.0, p - half), std::min(1.0, p + half)}};
}

double RunningMoments::sample_variance() const noexcept {
  if (count_ < 2) return 0.0;
  return m2_ / static_cast<double>(count_ - 1);
}

std::optional<Estimate> RunningMoments::estimate() const {
  if (count_ == 0) return std::nullopt;
  Estimate out{mean(), count_, std::nullopt};
  if (count_ >= 2) {
    const double half = kZ95 * std::sqrt(sample_variance() / static_cast<double>(count_));
    out.ci = Interval{out.mean - half, out.mean + half};
  }
  return out;
}

}  // namespace fairrec
