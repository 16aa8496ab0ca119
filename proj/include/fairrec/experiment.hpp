#pragma once

// Multi-seed experiments, aggregation, ratio sweeps and quality terciles.
//
// Seeds are simulated on a worker pool but always folded into the aggregate
// and written to CSV in seed-list order, so the output does not depend on the
// number of workers or on completion order.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairrec/metrics.hpp"
#include "fairrec/simulation.hpp"

namespace fairrec {

struct TimePoint {
  std::uint32_t t = 0;
  Estimate fair_indicator_mean;  // mean over creators and seeds of the CC_i-fair flag
  Estimate fair_all_mean;        // fraction of seeds that are fair for every creator
  std::optional<Estimate> dissatisfaction;
  Estimate fraction_no_follow;
  std::vector<Estimate> creator_fair;  // per creator, indexed by rank - 1
};

struct AggregateReport {
  std::string policy;
  std::size_t creators = 0;
  std::size_t users = 0;
  std::string config_hash;
  std::string version;
  double wall_seconds = 0.0;
  std::vector<std::uint32_t> seeds;
  std::vector<std::uint32_t> failed_seeds;
  std::vector<std::string> failures;
  bool valid = true;
  std::vector<TimePoint> timeline;  // one entry per scheduled record time

  const TimePoint& final_point() const { return timeline.back(); }
  nlohmann::json to_json() const;
};

struct ExperimentOutput {
  AggregateReport report;
  // Per-creator fairness at the horizon, one entry per successful seed.
  std::vector<FairnessVector> final_fairness;
};

struct ExperimentSinks {
  std::ostream* runs_csv = nullptr;      // seed,t,dissatisfaction,fraction_no_follow,fair_all
  std::ostream* creators_csv = nullptr;  // seed,t,creator_rank,followers,cc_fair
};

// Throws ConfigError before any simulation runs. A seed that throws is
// recorded in failed_seeds and marks the report invalid.
ExperimentOutput run_experiment(const SimulationConfig& config, const ExperimentSinks& sinks = {});
ExperimentOutput run_experiment(const SimulationConfig& config, const PlatformState& initial,
                                const ExperimentSinks& sinks = {});

// CSV writers. Doubles use the shortest round-trip representation; absent
// values are empty fields.
void write_runs_header(std::ostream& out);
void write_creators_header(std::ostream& out);
void write_run_rows(std::ostream& out, std::uint32_t seed, const std::vector<MetricsRecord>& records);
void write_creator_rows(std::ostream& out, std::uint32_t seed,
                        const std::vector<MetricsRecord>& records);
void write_aggregate_csv(std::ostream& out, const AggregateReport& report);
void write_creator_aggregate_csv(std::ostream& out, const AggregateReport& report);

std::string format_number(double value);

struct SweepPoint {
  double ratio;
  std::filesystem::path snapshot;
};

struct SweepRow {
  double ratio;
  std::string policy;
  Estimate fair;  // fair_indicator_mean at the horizon
  bool valid = true;
};

// One experiment per (ratio, policy), seeded from the ratio's snapshot.
// Throws ConfigError for an empty policy list and InputError naming the ratio
// when a snapshot is missing.
std::vector<SweepRow> sweep_ratios(const SimulationConfig& base, const std::vector<SweepPoint>& points,
                                   const std::vector<PolicySpec>& policies);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

struct TercileRow {
  std::string group;  // "top", "middle", "bottom"
  Rank first_rank;
  Rank last_rank;
  Estimate fair;
};

// Equal thirds by quality rank, remainder in the bottom group. The estimate
// is taken over seeds of the per-seed mean CC_i-fair flag within the group.
// Throws ConfigError for fewer than three creators or no seeds.
std::vector<TercileRow> tercile_report(const std::vector<FairnessVector>& final_fairness);
void write_tercile_csv(std::ostream& out, const std::vector<TercileRow>& rows);

}  // namespace fairrec
