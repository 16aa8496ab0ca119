#include "fairrec/simulation.hpp"

#include <algorithm>

#include "fairrec/digest.hpp"
#include "fairrec/errors.hpp"
#include "fairrec/snapshot_io.hpp"

namespace fairrec {

std::vector<std::uint32_t> RecordSchedule::times(std::uint32_t horizon) const {
  std::vector<std::uint32_t> out;
  for (std::uint32_t t = 0; t <= horizon; ++t) {
    if (records(t, horizon)) out.push_back(t);
  }
  return out;
}

void SimulationConfig::validate() const {
  if (!init_snapshot) {
    if (creators < 1) throw ConfigError("n must be at least 1");
    if (users < 1) throw ConfigError("m must be at least 1");
  }
  if (steps < 1) throw ConfigError("steps must be at least 1");
  if (record.stride < 1) throw ConfigError("record_every must be at least 1");
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("p must lie in [0, 1]");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (policy.kind == PolicyKind::kPairwise && steps < 2) {
    throw ConfigError("pairwise policies need at least two steps");
  }
  if (init_snapshot) return;  // sizes are checked once the snapshot is read
  if (policy.kind == PolicyKind::kPermutation) {
    if (steps > creators) {
      throw ConfigError("the permutation policy runs for at most n = " +
                        std::to_string(creators) + " steps");
    }
    if (creators > 12) throw ConfigError("the permutation policy supports at most 12 creators");
    if (users % factorial(creators) != 0) {
      throw ConfigError("the permutation policy needs m to be a multiple of n!");
    }
  }
  if (policy.kind == PolicyKind::kPairwise) {
    const std::size_t groups = creators * (creators - 1);
    if (creators < 2 || users < groups) {
      throw ConfigError("pairwise policies need n >= 2 and m >= n(n-1)");
    }
    if (strict_groups && users % groups != 0) {
      throw ConfigError("m = " + std::to_string(users) + " is not divisible by n(n-1) = " +
                        std::to_string(groups) + " (set strict_groups to false to allow it)");
    }
  }
}

namespace {

const char* const kKnownKeys[] = {"n",           "m",           "policy",
                                  "p",           "steps",       "seeds",
                                  "master_seed", "record_every", "record_dense_until",
                                  "early_stop",  "strict_groups", "init_snapshot",
                                  "workers"};

std::vector<std::uint32_t> seed_range(std::uint32_t count) {
  std::vector<std::uint32_t> out(count);
  for (std::uint32_t i = 0; i < count; ++i) out[i] = i;
  return out;
}

}  // namespace

SimulationConfig SimulationConfig::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (std::find(std::begin(kKnownKeys), std::end(kKnownKeys), key) == std::end(kKnownKeys)) {
      throw ConfigError("unknown configuration key '" + key + "'");
    }
  }
  SimulationConfig c;
  try {
    c.creators = doc.value("n", std::size_t{0});
    c.users = doc.value("m", std::size_t{0});
    c.policy = PolicySpec::parse(doc.value("policy", std::string("popularity")));
    c.p = doc.value("p", 1.0);
    c.steps = doc.value("steps", std::uint32_t{1000});
    if (doc.contains("seeds")) {
      const auto& seeds = doc.at("seeds");
      if (seeds.is_array()) {
        c.seeds = seeds.get<std::vector<std::uint32_t>>();
      } else {
        c.seeds = seed_range(seeds.get<std::uint32_t>());
      }
    } else {
      c.seeds = seed_range(1);
    }
    c.master_seed = doc.value("master_seed", std::uint64_t{0});
    c.record.stride = doc.value("record_every", std::uint32_t{10});
    c.record.dense_until = doc.value("record_dense_until", std::uint32_t{100});
    c.early_stop = doc.value("early_stop", false);
    c.strict_groups = doc.value("strict_groups", true);
    if (doc.contains("init_snapshot") && !doc.at("init_snapshot").is_null()) {
      c.init_snapshot = doc.at("init_snapshot").get<std::string>();
    }
    c.workers = doc.value("workers", 0u);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad configuration value: ") + e.what());
  }
  return c;
}

nlohmann::json SimulationConfig::to_json() const {
  nlohmann::json doc = {
      {"n", creators},
      {"m", users},
      {"policy", policy.name()},
      {"p", p},
      {"steps", steps},
      {"seeds", seeds},
      {"master_seed", master_seed},
      {"record_every", record.stride},
      {"record_dense_until", record.dense_until},
      {"early_stop", early_stop},
      {"strict_groups", strict_groups},
      {"init_snapshot", init_snapshot ? nlohmann::json(*init_snapshot) : nlohmann::json()},
      {"workers", workers},
  };
  return doc;
}

std::string SimulationConfig::hash() const {
  nlohmann::json doc = to_json();
  doc.erase("workers");
  return sha256_hex(doc.dump());
}

Simulation::Simulation(const SimulationConfig& config, std::uint32_t simulation_index,
                       PlatformState initial)
    : state_(std::move(initial)),
      rng_(config.master_seed, simulation_index),
      policy_(config.policy, state_.creators(), state_.users(), rng_, config.strict_groups),
      p_(config.p) {
  active_.reserve(state_.users());
  for (UserId u = 0; u < state_.users(); ++u) {
    const bool done = p_ == 1.0 ? state_.best_or_zero(u) == 1
                                : state_.followed_count(u) == state_.creators();
    if (!done) active_.push_back(u);
  }
}

std::size_t Simulation::step() {
  policy_.prepare(state_);
  const std::uint32_t t = policy_.step();
  const std::size_t evaluated = active_.size();
  std::size_t kept = 0;
  if (p_ == 1.0) {
    // Noiseless: following happens exactly when the recommendation beats the
    // current best, which also rules out re-follows. Draws and
    // recommendations for a chunk are computed before any follow is applied;
    // both depend only on the pre-step state, so this is the same step.
    constexpr std::size_t kChunk = 256;
    std::uint64_t bits[kChunk];
    Rank recs[kChunk];
    for (std::size_t start = 0; start < evaluated; start += kChunk) {
      const std::size_t len = std::min(kChunk, evaluated - start);
      const UserId* users = active_.data() + start;
      for (std::size_t j = 0; j < len; ++j) bits[j] = recommendation_bits(rng_, t, users[j]);
      policy_.recommend_many(users, bits, len, recs);
      for (std::size_t j = 0; j < len; ++j) {
        const UserId u = users[j];
        const Rank best = state_.best_or_zero(u);
        if (best == 0 || recs[j] < best) state_.add_follow(u, recs[j]);
        // kept <= start + j, so compaction never overwrites an unread entry.
        active_[kept] = u;
        kept += state_.best_or_zero(u) != 1;
      }
    }
  } else {
    const std::size_t n = state_.creators();
    for (const UserId u : active_) {
      const RandomPair bits = rng_.draw(Lane::kStep, t, u);
      const Rank rec = policy_.recommend_one(u, bits.first);
      if (follow_decision(state_.best_rank(u), rec, state_.follows(u, rec), p_,
                          to_unit(bits.second))) {
        state_.add_follow(u, rec);
      }
      if (state_.followed_count(u) != n) active_[kept++] = u;
    }
  }
  active_.resize(kept);
  state_.advance_clock();
  return evaluated;
}

PlatformState initial_state(const SimulationConfig& config) {
  if (!config.init_snapshot) return new_platform(config.creators, config.users);
  const SnapshotFile snapshot = read_snapshot_file(*config.init_snapshot);
  if ((config.creators != 0 && config.creators != snapshot.creators) ||
      (config.users != 0 && config.users != snapshot.users)) {
    throw ConfigError("snapshot " + *config.init_snapshot + " declares " +
                      std::to_string(snapshot.creators) + " creators and " +
                      std::to_string(snapshot.users) + " users, config says n = " +
                      std::to_string(config.creators) + ", m = " + std::to_string(config.users));
  }
  return new_platform(snapshot.creators, snapshot.users, snapshot.edges);
}

std::vector<MetricsRecord> run_simulation(const SimulationConfig& config,
                                          std::uint32_t simulation_index) {
  config.validate();
  return run_simulation(config, simulation_index, initial_state(config));
}

std::vector<MetricsRecord> run_simulation(const SimulationConfig& config,
                                          std::uint32_t simulation_index,
                                          const PlatformState& initial) {
  SimulationConfig sized = config;
  sized.creators = initial.creators();
  sized.users = initial.users();
  sized.init_snapshot.reset();
  sized.validate();

  Simulation sim(sized, simulation_index, initial);
  std::vector<MetricsRecord> records;
  const std::uint32_t horizon = config.steps;
  if (config.record.records(0, horizon)) {
    records.push_back(measure(sim.state()));
    records.back().t = 0;
  }
  for (std::uint32_t t = 1; t <= horizon; ++t) {
    sim.step();
    const bool stop = config.early_stop && sim.absorbed();
    if (config.record.records(t, horizon) || stop) {
      records.push_back(measure(sim.state()));
      records.back().t = t;
    }
    if (stop) break;
  }
  return records;
}

}  // namespace fairrec
