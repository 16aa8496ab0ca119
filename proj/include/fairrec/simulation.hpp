#pragma once

// Single-simulation engine: configuration, record schedule, and the fused
// recommend-and-follow step loop.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairrec/metrics.hpp"
#include "fairrec/model.hpp"
#include "fairrec/policies.hpp"
#include "fairrec/rng.hpp"

namespace fairrec {

// Which timesteps get a MetricsRecord: t = 0, every step up to `dense_until`,
// then every `stride` steps, and always the horizon.
struct RecordSchedule {
  std::uint32_t dense_until = 100;
  std::uint32_t stride = 10;

  bool records(std::uint32_t t, std::uint32_t horizon) const noexcept {
    return t <= dense_until || (t - dense_until) % stride == 0 || t == horizon;
  }
  std::vector<std::uint32_t> times(std::uint32_t horizon) const;
};

struct SimulationConfig {
  std::size_t creators = 0;  // n
  std::size_t users = 0;     // m
  PolicySpec policy;
  double p = 1.0;
  std::uint32_t steps = 1000;  // horizon T
  std::vector<std::uint32_t> seeds;
  std::uint64_t master_seed = 0;
  RecordSchedule record;
  bool early_stop = false;
  bool strict_groups = true;
  std::optional<std::string> init_snapshot;
  unsigned workers = 0;  // 0 = hardware concurrency

  // Throws ConfigError. Checks everything that can be checked without
  // reading the snapshot file.
  void validate() const;

  // Schema: n, m, policy, p, steps, seeds (count or list), master_seed,
  // record_every, record_dense_until, early_stop, strict_groups,
  // init_snapshot, workers. Unknown keys are rejected.
  static SimulationConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

  // Hex SHA-256 of the canonical JSON form, excluding `workers`.
  std::string hash() const;
};

// Fused step loop for one simulation. Users that can no longer follow anyone
// are dropped from the active list: under p = 1 that is best rank 1, under
// noise it is having followed every creator.
class Simulation {
 public:
  Simulation(const SimulationConfig& config, std::uint32_t simulation_index,
             PlatformState initial);

  // Returns how many users were evaluated.
  std::size_t step();

  const PlatformState& state() const noexcept { return state_; }
  const Recommender& policy() const noexcept { return policy_; }
  std::size_t active_users() const noexcept { return active_.size(); }
  bool absorbed() const noexcept { return p_ == 1.0 && active_.empty(); }

 private:
  PlatformState state_;
  CounterRng rng_;
  Recommender policy_;
  double p_;
  std::vector<UserId> active_;
};

// Initial platform for a config: empty, or loaded from its snapshot file.
PlatformState initial_state(const SimulationConfig& config);

// Runs t = 1..T and returns records on the config's schedule (t = 0
// included). With early_stop and p = 1 the series ends at the first absorbing
// step, whose record is always emitted. Throws ConfigError before computing.
std::vector<MetricsRecord> run_simulation(const SimulationConfig& config,
                                          std::uint32_t simulation_index);
std::vector<MetricsRecord> run_simulation(const SimulationConfig& config,
                                          std::uint32_t simulation_index,
                                          const PlatformState& initial);

}  // namespace fairrec
