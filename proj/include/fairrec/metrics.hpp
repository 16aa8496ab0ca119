#pragma once

// Individual fairness for creators, user dissatisfaction, and 95% normal
// confidence intervals.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fairrec/model.hpp"

namespace fairrec {

// Creator `rank` is fair when at most `rank` creators (itself included) have
// at least as many followers: |{j : a_j >= a_rank}| <= rank.
// Throws ContractError when rank is outside 1..n.
bool is_cc_fair(std::span<const std::int64_t> followers, Rank rank);

struct FairnessVector {
  std::vector<bool> per_creator;  // indexed by rank - 1
  bool all = true;

  std::size_t fair_count() const;
};

FairnessVector fairness_vector(std::span<const std::int64_t> followers);

struct Dissatisfaction {
  std::optional<double> mean_best_rank;  // absent when nobody follows anyone
  double fraction_no_follow = 1.0;
};

Dissatisfaction dissatisfaction(const PlatformState& state);

struct MetricsRecord {
  std::uint32_t t = 0;
  FairnessVector fairness;
  Dissatisfaction satisfaction;
  std::vector<std::int64_t> followers;
};

MetricsRecord measure(const PlatformState& state);

inline constexpr double kZ95 = 1.96;

struct Interval {
  double lo;
  double hi;
};

struct Estimate {
  double mean = 0.0;
  std::size_t samples = 0;
  std::optional<Interval> ci;  // absent when a sample-variance CI is undefined

  double half_width() const { return ci ? (ci->hi - ci->lo) / 2.0 : 0.0; }
};

// mean +- 1.96 * s / sqrt(N) with the unbiased sample deviation.
// Throws AggregationError for fewer than two samples.
Estimate mean_ci(std::span<const double> samples);

// p +- 1.96 * sqrt(p(1-p)/N), clipped to [0, 1]. Throws AggregationError for
// fewer than two trials.
Estimate proportion_ci(std::size_t successes, std::size_t trials);

// Order-sensitive running sums; feed samples in a fixed order to get
// bit-identical results.
class RunningMoments {
 public:
  // Welford update.
  void add(double x) noexcept {
    ++count_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_);
  }
  std::size_t count() const noexcept { return count_; }
  double mean() const noexcept { return mean_; }
  double sample_variance() const noexcept;

  // Like mean_ci, but returns an estimate without CI for a single sample and
  // nullopt when empty.
  std::optional<Estimate> estimate() const;

 private:
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace fairrec
