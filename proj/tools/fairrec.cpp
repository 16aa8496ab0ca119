// fairrec command-line front end.
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration error,
// 3 input or data error.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairrec/errors.hpp"
#include "fairrec/experiment.hpp"
#include "fairrec/movielens.hpp"
#include "fairrec/simulation.hpp"
#include "fairrec/theory.hpp"

namespace fs = std::filesystem;
using namespace fairrec;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitInput = 3;

struct SimulationFlags {
  std::string config;
  std::optional<std::string> policy;
  std::optional<std::size_t> n, m;
  std::optional<double> p;
  std::optional<std::uint32_t> steps, seeds;
  std::optional<std::uint64_t> master_seed;
  std::optional<unsigned> workers;
  std::optional<std::string> init_snapshot;
  bool early_stop = false;
  std::string out;

  void attach(CLI::App& cmd) {
    cmd.add_option("--config", config, "JSON config file");
    cmd.add_option("--policy", policy, "random | popularity | permutation | pairwise+random | pairwise+popularity");
    cmd.add_option("--n", n, "number of creators");
    cmd.add_option("--m", m, "number of users");
    cmd.add_option("--p", p, "follow-decision accuracy in [0, 1]");
    cmd.add_option("--steps", steps, "horizon T");
    cmd.add_option("--seeds", seeds, "number of seeds (0..count-1)");
    cmd.add_option("--master-seed", master_seed, "master RNG seed");
    cmd.add_option("--workers", workers, "worker threads, 0 = all cores");
    cmd.add_option("--init-snapshot", init_snapshot, "snapshot file for the initial platform");
    cmd.add_flag("--early-stop", early_stop, "stop a run at the first absorbing state (p = 1 only)");
    cmd.add_option("--out", out, "output directory");
  }

  SimulationConfig build() const {
    nlohmann::json doc = nlohmann::json::object();
    if (!config.empty()) {
      std::ifstream in(config);
      if (!in) throw ConfigError("cannot open config file " + config);
      try {
        doc = nlohmann::json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(config + ": " + e.what());
      }
    }
    if (!doc.is_object()) throw ConfigError(config + ": top level must be an object");
    if (policy) doc["policy"] = *policy;
    if (n) doc["n"] = *n;
    if (m) doc["m"] = *m;
    if (p) doc["p"] = *p;
    if (steps) doc["steps"] = *steps;
    if (seeds) doc["seeds"] = *seeds;
    if (master_seed) doc["master_seed"] = *master_seed;
    if (workers) doc["workers"] = *workers;
    if (init_snapshot) doc["init_snapshot"] = *init_snapshot;
    if (early_stop) doc["early_stop"] = true;
    return SimulationConfig::from_json(doc);
  }
};

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory " + dir + ": " + ec.message());
}

void emit_json(const nlohmann::json& doc, const std::string& out_dir, const char* name) {
  if (out_dir.empty()) {
    std::cout << doc.dump(2) << '\n';
    return;
  }
  ensure_dir(out_dir);
  open_output(fs::path(out_dir) / name) << doc.dump(2) << '\n';
}

int cmd_simulate(const SimulationFlags& flags, std::uint32_t seed_index) {
  auto config = flags.build();
  if (config.seeds.empty()) config.seeds = {0};
  if (seed_index >= config.seeds.size()) throw ConfigError("--seed-index is past the seed list");
  const auto seed = config.seeds[seed_index];
  const auto records = run_simulation(config, seed);
  if (flags.out.empty()) {
    write_runs_header(std::cout);
    write_run_rows(std::cout, seed, records);
    return 0;
  }
  ensure_dir(flags.out);
  auto runs = open_output(fs::path(flags.out) / "runs.csv");
  write_runs_header(runs);
  write_run_rows(runs, seed, records);
  auto creators = open_output(fs::path(flags.out) / "creators.csv");
  write_creators_header(creators);
  write_creator_rows(creators, seed, records);
  return 0;
}

int cmd_experiment(const SimulationFlags& flags) {
  const auto config = flags.build();
  if (flags.out.empty()) {
    const auto out = run_experiment(config);
    std::cout << out.report.to_json().dump(2) << '\n';
    return out.report.valid ? 0 : 1;
  }
  ensure_dir(flags.out);
  const fs::path dir(flags.out);
  auto runs = open_output(dir / "runs.csv");
  auto creators = open_output(dir / "creators.csv");
  const auto out = run_experiment(config, {&runs, &creators});
  auto aggregate = open_output(dir / "aggregate.csv");
  write_aggregate_csv(aggregate, out.report);
  auto per_creator = open_output(dir / "creator_aggregate.csv");
  write_creator_aggregate_csv(per_creator, out.report);
  if (!out.final_fairness.empty() && out.report.creators >= 3) {
    auto terciles = open_output(dir / "terciles.csv");
    write_tercile_csv(terciles, tercile_report(out.final_fairness));
  }
  open_output(dir / "report.json") << out.report.to_json().dump(2) << '\n';
  if (!out.report.valid) {
    std::cerr << "experiment finished with " << out.report.failed_seeds.size() << " failed seed(s)\n";
    return 1;
  }
  return 0;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int cmd_sweep(const SimulationFlags& flags, const std::string& manifest, const std::string& policies) {
  auto base = flags.build();
  std::vector<PolicySpec> specs;
  for (const auto& name : split_list(policies)) specs.push_back(PolicySpec::parse(name));
  std::vector<SweepPoint> points;
  for (const auto& [ratio, path] : movielens::read_snapshot_manifest(manifest)) {
    points.push_back({ratio, path});
  }
  const auto rows = sweep_ratios(base, points, specs);
  if (flags.out.empty()) {
    write_sweep_csv(std::cout, rows);
  } else {
    ensure_dir(flags.out);
    auto out = open_output(fs::path(flags.out) / "sweep.csv");
    write_sweep_csv(out, rows);
  }
  for (const auto& row : rows) {
    if (!row.valid) return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Creator-fairness simulator for recommender feedback loops"};
  app.set_version_flag("--version", FAIRREC_VERSION);
  app.require_subcommand(1);

  SimulationFlags sim_flags;
  std::uint32_t seed_index = 0;
  auto* simulate = app.add_subcommand("simulate", "Run one seeded simulation and write its CSV");
  sim_flags.attach(*simulate);
  simulate->add_option("--seed-index", seed_index, "which entry of the seed list to run");

  SimulationFlags exp_flags;
  auto* experiment = app.add_subcommand("experiment", "Run all seeds and aggregate");
  exp_flags.attach(*experiment);

  SimulationFlags sweep_flags;
  std::string manifest;
  std::string sweep_policies = "random,popularity,pairwise+random,pairwise+popularity";
  auto* sweep = app.add_subcommand("sweep", "Ratio x policy grid from prepared snapshots");
  sweep_flags.attach(*sweep);
  sweep->add_option("--manifest", manifest, "snapshots.json written by prep")->required();
  sweep->add_option("--policies", sweep_policies, "comma-separated policy list");

  movielens::PrepOptions prep_opts;
  std::string prep_ratios;
  auto* prep = app.add_subcommand("prep", "Build the MovieLens corpus and snapshots");
  prep->add_option("--ratings", prep_opts.ratings, "ratings.csv")->required();
  prep->add_option("--movies", prep_opts.movies, "movies.csv")->required();
  prep->add_option("--links", prep_opts.links, "links.csv")->required();
  prep->add_option("--imdb", prep_opts.imdb, "title.ratings.tsv")->required();
  prep->add_option("--out", prep_opts.out_dir, "output directory")->required();
  prep->add_option("--genre", prep_opts.corpus.genre, "genre filter");
  prep->add_option("--corpus-movies", prep_opts.corpus.movies, "number of movies (creators)");
  prep->add_option("--target-users", prep_opts.corpus.target_users, "users to sample");
  prep->add_option("--seed", prep_opts.corpus.seed, "user sampling seed");
  prep->add_option("--ratios", prep_ratios, "comma-separated ratio grid");
  prep->add_option("--imdb-min-votes", prep_opts.corpus.imdb.min_votes, "override m (default: 25th percentile)");
  prep->add_option("--imdb-prior-mean", prep_opts.corpus.imdb.prior_mean, "override C (default: mean rating)");

  auto* theory = app.add_subcommand("theory", "Closed-form bounds and Monte Carlo validators");
  theory->require_subcommand(1);
  std::string theory_out;
  double th_p = 0.8;
  std::uint64_t th_k = 0, th_seed = 0;
  std::size_t th_trials = 100000, th_n = 3, th_m = 30;
  unsigned th_workers = 0;
  auto* validate = theory->add_subcommand("validate", "Monte Carlo validators");
  validate->require_subcommand(1);
  auto* v_pair = validate->add_subcommand("pairwise", "Noisy pairwise comparison of two creators");
  v_pair->add_option("--p", th_p, "follow-decision accuracy")->required();
  v_pair->add_option("--k", th_k, "group size (default: min_group_size(p))");
  v_pair->add_option("--trials", th_trials, "trials");
  auto* v_maint = validate->add_subcommand("maintenance", "Fairness kept by one popularity step");
  v_maint->add_option("--n", th_n, "creators");
  v_maint->add_option("--m", th_m, "users");
  v_maint->add_option("--trials", th_trials, "trials");
  for (auto* cmd : {v_pair, v_maint}) {
    cmd->add_option("--seed", th_seed, "master seed");
    cmd->add_option("--workers", th_workers, "worker threads, 0 = all cores");
    cmd->add_option("--out", theory_out, "output directory");
  }
  auto* bound = theory->add_subcommand("bound", "Group size needed for a given accuracy");
  bound->add_option("--p", th_p, "follow-decision accuracy")->required();
  bound->add_option("--out", theory_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*simulate) return cmd_simulate(sim_flags, seed_index);
    if (*experiment) return cmd_experiment(exp_flags);
    if (*sweep) return cmd_sweep(sweep_flags, manifest, sweep_policies);
    if (*prep) {
      if (!prep_ratios.empty()) {
        for (const auto& item : split_list(prep_ratios)) {
          try {
            prep_opts.ratios.push_back(std::stod(item));
          } catch (const std::exception&) {
            throw ConfigError("bad ratio '" + item + "'");
          }
        }
      }
      const auto result = movielens::prepare(prep_opts);
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
      std::cout << "wrote corpus of " << result.corpus.movies.size() << " movies and "
                << result.corpus.users.size() << " users, " << result.snapshots.size()
                << " snapshots to " << prep_opts.out_dir.string() << '\n';
      return 0;
    }
    if (*v_pair) {
      const std::uint64_t k = th_k > 0 ? th_k : min_group_size(th_p);
      emit_json(validate_pairwise_noise(th_p, k, th_trials, th_seed, th_workers).to_json(), theory_out,
                "pairwise.json");
      return 0;
    }
    if (*v_maint) {
      const auto sampler = sorted_fair_state_sampler(th_n, th_m);
      emit_json(validate_fair_maintenance(th_n, th_m, sampler, th_trials, th_seed, th_workers).to_json(),
                theory_out, "maintenance.json");
      return 0;
    }
    if (*bound) {
      nlohmann::json doc{{"p", th_p}, {"raw_bound", group_size_bound(th_p)},
                         {"min_group_size", min_group_size(th_p)}};
      emit_json(doc, theory_out, "bound.json");
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ContractError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
