#include "fairrec/experiment.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <condition_variable>
#include <mutex>
#include <ostream>
#include <thread>

#include "fairrec/errors.hpp"

#ifndef FAIRREC_VERSION
#define FAIRREC_VERSION "0.0.0"
#endif

namespace fairrec {

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

namespace {

Estimate proportion_estimate(std::size_t successes, std::size_t trials) {
  if (trials >= 2) return proportion_ci(successes, trials);
  const double p = trials ? static_cast<double>(successes) / static_cast<double>(trials) : 0.0;
  return Estimate{p, trials, std::nullopt};
}

struct SeedResult {
  std::vector<MetricsRecord> records;
  std::optional<std::string> error;
};

// Per-time accumulators, fed one seed at a time in seed order.
class Aggregator {
 public:
  Aggregator(std::vector<std::uint32_t> times, std::size_t creators)
      : times_(std::move(times)), creators_(creators), slots_(times_.size()) {
    for (Slot& s : slots_) s.creator_fair.assign(creators, 0);
  }

  // Returns the fairness vector at the horizon.
  FairnessVector add(const std::vector<MetricsRecord>& records) {
    std::size_t r = 0;
    for (std::size_t j = 0; j < times_.size(); ++j) {
      while (r + 1 < records.size() && records[r + 1].t <= times_[j]) ++r;
      const MetricsRecord& rec = records[r];
      Slot& slot = slots_[j];
      const std::size_t fair = rec.fairness.fair_count();
      for (std::size_t i = 0; i < creators_; ++i) slot.creator_fair[i] += rec.fairness.per_creator[i];
      slot.fair_all += rec.fairness.all;
      slot.indicator.add(static_cast<double>(fair) / static_cast<double>(creators_));
      if (rec.satisfaction.mean_best_rank) slot.dissatisfaction.add(*rec.satisfaction.mean_best_rank);
      slot.no_follow.add(rec.satisfaction.fraction_no_follow);
    }
    ++seeds_;
    return records[r].fairness;
  }

  std::vector<TimePoint> timeline() const {
    std::vector<TimePoint> out;
    out.reserve(times_.size());
    for (std::size_t j = 0; j < times_.size(); ++j) {
      const Slot& slot = slots_[j];
      TimePoint point;
      point.t = times_[j];
      point.fair_indicator_mean = slot.indicator.estimate().value_or(Estimate{});
      point.fair_all_mean = proportion_estimate(slot.fair_all, seeds_);
      point.dissatisfaction = slot.dissatisfaction.estimate();
      point.fraction_no_follow = slot.no_follow.estimate().value_or(Estimate{});
      point.creator_fair.reserve(creators_);
      for (std::size_t i = 0; i < creators_; ++i) {
        point.creator_fair.push_back(proportion_estimate(slot.creator_fair[i], seeds_));
      }
      out.push_back(std::move(point));
    }
    return out;
  }

 private:
  struct Slot {
    std::vector<std::size_t> creator_fair;
    std::size_t fair_all = 0;
    RunningMoments indicator;
    RunningMoments dissatisfaction;
    RunningMoments no_follow;
  };
  std::vector<std::uint32_t> times_;
  std::size_t creators_;
  std::vector<Slot> slots_;
  std::size_t seeds_ = 0;
};

nlohmann::json estimate_json(const Estimate& e) {
  nlohmann::json out = {{"mean", e.mean}, {"samples", e.samples}};
  if (e.ci) {
    out["ci_lo"] = e.ci->lo;
    out["ci_hi"] = e.ci->hi;
  } else {
    out["ci_lo"] = nullptr;
    out["ci_hi"] = nullptr;
  }
  return out;
}

void write_estimate_fields(std::ostream& out, const std::optional<Estimate>& e) {
  if (!e) {
    out << ",,";
    return;
  }
  out << format_number(e->mean) << ',';
  if (e->ci) out << format_number(e->ci->lo) << ',' << format_number(e->ci->hi);
  else out << ',';
}

}  // namespace

nlohmann::json AggregateReport::to_json() const {
  nlohmann::json timeline_json = nlohmann::json::array();
  for (const TimePoint& point : timeline) {
    nlohmann::json creators_json = nlohmann::json::array();
    for (const Estimate& e : point.creator_fair) creators_json.push_back(estimate_json(e));
    timeline_json.push_back({
        {"t", point.t},
        {"fair_indicator_mean", estimate_json(point.fair_indicator_mean)},
        {"fair_all_mean", estimate_json(point.fair_all_mean)},
        {"dissatisfaction",
         point.dissatisfaction ? estimate_json(*point.dissatisfaction) : nlohmann::json()},
        {"fraction_no_follow", estimate_json(point.fraction_no_follow)},
        {"creator_fair", std::move(creators_json)},
    });
  }
  return {
      {"policy", policy},
      {"n", creators},
      {"m", users},
      {"config_hash", config_hash},
      {"version", version},
      {"wall_seconds", wall_seconds},
      {"seeds", seeds.size()},
      {"failed_seeds", failed_seeds},
      {"failures", failures},
      {"valid", valid},
      {"timeline", std::move(timeline_json)},
  };
}

ExperimentOutput run_experiment(const SimulationConfig& config, const ExperimentSinks& sinks) {
  config.validate();
  return run_experiment(config, initial_state(config), sinks);
}

ExperimentOutput run_experiment(const SimulationConfig& config, const PlatformState& initial,
                                const ExperimentSinks& sinks) {
  SimulationConfig sized = config;
  sized.creators = initial.creators();
  sized.users = initial.users();
  sized.init_snapshot.reset();
  sized.validate();

  const auto started = std::chrono::steady_clock::now();
  const std::size_t total = sized.seeds.size();
  unsigned workers = sized.workers ? sized.workers : std::thread::hardware_concurrency();
  workers = static_cast<unsigned>(std::clamp<std::size_t>(workers, 1, total));

  std::vector<std::optional<SeedResult>> slots(total);
  std::mutex mutex;
  std::condition_variable ready;
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= total) return;
      SeedResult result;
      try {
        result.records = run_simulation(sized, sized.seeds[idx], initial);
      } catch (const std::exception& e) {
        result.error = e.what();
      }
      {
        const std::lock_guard lock(mutex);
        slots[idx] = std::move(result);
      }
      ready.notify_all();
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);

  ExperimentOutput output;
  AggregateReport& report = output.report;
  report.policy = sized.policy.name();
  report.creators = sized.creators;
  report.users = sized.users;
  report.config_hash = config.hash();
  report.version = FAIRREC_VERSION;
  report.seeds = sized.seeds;

  Aggregator aggregator(sized.record.times(sized.steps), sized.creators);
  if (sinks.runs_csv) write_runs_header(*sinks.runs_csv);
  if (sinks.creators_csv) write_creators_header(*sinks.creators_csv);

  for (std::size_t idx = 0; idx < total; ++idx) {
    SeedResult result;
    {
      std::unique_lock lock(mutex);
      ready.wait(lock, [&] { return slots[idx].has_value(); });
      result = std::move(*slots[idx]);
      slots[idx].reset();
    }
    const std::uint32_t seed = sized.seeds[idx];
    if (result.error) {
      report.valid = false;
      report.failed_seeds.push_back(seed);
      report.failures.push_back("seed " + std::to_string(seed) + ": " + *result.error);
      continue;
    }
    output.final_fairness.push_back(aggregator.add(result.records));
    if (sinks.runs_csv) write_run_rows(*sinks.runs_csv, seed, result.records);
    if (sinks.creators_csv) write_creator_rows(*sinks.creators_csv, seed, result.records);
  }
  pool.clear();

  report.timeline = aggregator.timeline();
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return output;
}

void write_runs_header(std::ostream& out) {
  out << "seed,t,dissatisfaction,fraction_no_follow,fair_all\n";
}

void write_creators_header(std::ostream& out) {
  out << "seed,t,creator_rank,followers,cc_fair\n";
}

void write_run_rows(std::ostream& out, std::uint32_t seed, const std::vector<MetricsRecord>& records) {
  for (const MetricsRecord& r : records) {
    out << seed << ',' << r.t << ',';
    if (r.satisfaction.mean_best_rank) out << format_number(*r.satisfaction.mean_best_rank);
    out << ',' << format_number(r.satisfaction.fraction_no_follow) << ','
        << (r.fairness.all ? 1 : 0) << '\n';
  }
}

void write_creator_rows(std::ostream& out, std::uint32_t seed,
                        const std::vector<MetricsRecord>& records) {
  for (const MetricsRecord& r : records) {
    for (std::size_t i = 0; i < r.followers.size(); ++i) {
      out << seed << ',' << r.t << ',' << (i + 1) << ',' << r.followers[i] << ','
          << (r.fairness.per_creator[i] ? 1 : 0) << '\n';
    }
  }
}

void write_aggregate_csv(std::ostream& out, const AggregateReport& report) {
  out << "t,seeds,fair_indicator_mean,fair_indicator_ci_lo,fair_indicator_ci_hi,"
         "fair_all_mean,fair_all_ci_lo,fair_all_ci_hi,"
         "dissatisfaction,dissatisfaction_ci_lo,dissatisfaction_ci_hi,fraction_no_follow\n";
  for (const TimePoint& point : report.timeline) {
    out << point.t << ',' << point.fair_all_mean.samples << ',';
    write_estimate_fields(out, point.fair_indicator_mean);
    out << ',';
    write_estimate_fields(out, point.fair_all_mean);
    out << ',';
    write_estimate_fields(out, point.dissatisfaction);
    out << ',' << format_number(point.fraction_no_follow.mean) << '\n';
  }
}

void write_creator_aggregate_csv(std::ostream& out, const AggregateReport& report) {
  out << "t,creator_rank,fair_mean,ci_lo,ci_hi\n";
  for (const TimePoint& point : report.timeline) {
    for (std::size_t i = 0; i < point.creator_fair.size(); ++i) {
      out << point.t << ',' << (i + 1) << ',';
      write_estimate_fields(out, point.creator_fair[i]);
      out << '\n';
    }
  }
}

std::vector<SweepRow> sweep_ratios(const SimulationConfig& base, const std::vector<SweepPoint>& points,
                                   const std::vector<PolicySpec>& policies) {
  if (policies.empty()) throw ConfigError("a sweep needs at least one policy");
  if (points.empty()) throw ConfigError("a sweep needs at least one ratio");
  for (const SweepPoint& point : points) {
    if (!std::filesystem::exists(point.snapshot)) {
      throw InputError("snapshot for ratio " + format_number(point.ratio) + " not found: " +
                       point.snapshot.string());
    }
  }
  std::vector<SweepRow> rows;
  for (const SweepPoint& point : points) {
    SimulationConfig config = base;
    config.init_snapshot = point.snapshot.string();
    const PlatformState initial = initial_state(config);
    for (const PolicySpec& policy : policies) {
      config.policy = policy;
      const ExperimentOutput result = run_experiment(config, initial);
      rows.push_back({point.ratio, policy.name(), result.report.final_point().fair_indicator_mean,
                      result.report.valid});
    }
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "ratio,policy,fair_mean,ci_lo,ci_hi\n";
  for (const SweepRow& row : rows) {
    out << format_number(row.ratio) << ',' << row.policy << ',';
    write_estimate_fields(out, row.fair);
    out << '\n';
  }
}

std::vector<TercileRow> tercile_report(const std::vector<FairnessVector>& final_fairness) {
  if (final_fairness.empty()) throw ConfigError("tercile report needs at least one run");
  const std::size_t n = final_fairness.front().per_creator.size();
  if (n < 3) throw ConfigError("tercile report needs at least three creators");
  const std::size_t third = n / 3;
  const std::size_t bounds[4] = {0, third, 2 * third, n};
  const char* const names[3] = {"top", "middle", "bottom"};

  std::vector<TercileRow> rows;
  for (std::size_t g = 0; g < 3; ++g) {
    RunningMoments moments;
    for (const FairnessVector& run : final_fairness) {
      std::size_t fair = 0;
      for (std::size_t i = bounds[g]; i < bounds[g + 1]; ++i) fair += run.per_creator.at(i);
      moments.add(static_cast<double>(fair) / static_cast<double>(bounds[g + 1] - bounds[g]));
    }
    rows.push_back({names[g], static_cast<Rank>(bounds[g] + 1), static_cast<Rank>(bounds[g + 1]),
                    *moments.estimate()});
  }
  return rows;
}

void write_tercile_csv(std::ostream& out, const std::vector<TercileRow>& rows) {
  out << "group,first_rank,last_rank,fair_mean,ci_lo,ci_hi\n";
  for (const TercileRow& row : rows) {
    out << row.group << ',' << row.first_rank << ',' << row.last_rank << ',';
    write_estimate_fields(out, row.fair);
    out << '\n';
  }
}

}  // namespace fairrec
