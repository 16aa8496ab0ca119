// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any check fails.
//
//   acceptance                 criteria 1-5, 7, 9-11
//   acceptance --full-scale    additionally the n = 100, m = 49,500 spot check (6)
//   acceptance --only 3,10     run a subset

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fairrec/experiment.hpp"
#include "fairrec/metrics.hpp"
#include "fairrec/movielens.hpp"
#include "fairrec/simulation.hpp"
#include "fairrec/theory.hpp"

using namespace fairrec;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, auto... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof buffer, format, args...);
  return buffer;
}

SimulationConfig make_config(const char* policy, std::size_t n, std::size_t m, std::uint32_t steps,
                             std::uint32_t seeds, double p = 1.0) {
  SimulationConfig c;
  c.creators = n;
  c.users = m;
  c.policy = PolicySpec::parse(policy);
  c.p = p;
  c.steps = steps;
  for (std::uint32_t s = 0; s < seeds; ++s) c.seeds.push_back(s);
  c.master_seed = 20240601;
  return c;
}

std::uint64_t factorial(std::size_t n) {
  std::uint64_t f = 1;
  for (std::size_t i = 2; i <= n; ++i) f *= i;
  return f;
}

// 1: pairwise exploration leaves a_i = k(2n - i - 1) followers at t = 2.
void criterion_pairwise_counts() {
  const auto start = Clock::now();
  bool ok = true;
  int cases = 0;
  for (std::size_t n = 2; n <= 30 && ok; ++n) {
    for (std::uint64_t k = 1; k <= 5 && ok; ++k) {
      for (const char* policy : {"pairwise+popularity", "pairwise+random"}) {
        const auto records = run_simulation(make_config(policy, n, k * n * (n - 1), 2, 1), 0);
        const auto& last = records.back();
        for (std::size_t i = 1; i <= n; ++i) {
          ok &= last.followers[i - 1] == static_cast<std::int64_t>(k * (2 * n - i - 1));
        }
        ok &= last.t == 2 && last.fairness.all;
        ++cases;
      }
    }
  }
  const double elapsed = seconds_since(start);
  report(1, ok && elapsed < 5.0,
         fmt("pairwise exploration, n 2..30, k 1..5, both bases (%d runs): followers at t=2 equal "
             "k(2n-i-1) and all creators fair; %.2f s (limit 5 s)",
             cases, elapsed));
}

// 2: the permutation schedule leaves a_i = k n!/i followers at t = n.
void criterion_permutation_counts() {
  const auto start = Clock::now();
  bool ok = true;
  for (std::size_t n = 2; n <= 6 && ok; ++n) {
    for (std::uint64_t k = 1; k <= 2 && ok; ++k) {
      const std::uint64_t m = k * factorial(n);
      const auto config = make_config("permutation", n, m, static_cast<std::uint32_t>(n), 1);
      Simulation sim(config, 0, new_platform(n, m));
      for (std::size_t t = 0; t < n; ++t) sim.step();
      const auto followers = sim.state().followers();
      for (std::size_t i = 1; i <= n; ++i) {
        ok &= followers[i - 1] == static_cast<std::int64_t>(k * factorial(n) / i);
      }
      ok &= is_absorbing_noiseless(sim.state());
      // Absorbing: further noiseless steps of any policy leave the counts alone.
      const PlatformState frozen = sim.state();
      for (const char* policy : {"random", "popularity"}) {
        const auto after = run_simulation(make_config(policy, n, m, 200, 1), 0, frozen);
        ok &= after.back().followers == std::vector<std::int64_t>(followers.begin(), followers.end());
      }
    }
  }
  const double elapsed = seconds_since(start);
  report(2, ok && elapsed < 5.0,
         fmt("permutation schedule, n 2..6, k 1..2: followers at t=n equal k*n!/i, state absorbing "
             "and unchanged by 200 further random/popularity steps; %.2f s (limit 5 s)",
             elapsed));
}

// 3: moments of the pairwise gap S and the group-size bound.
void criterion_pairwise_noise() {
  bool ok = true;
  std::ostringstream detail;
  for (const double p : {0.6, 0.8, 0.95}) {
    const auto r = validate_pairwise_noise(p, 100, 100000, 3);
    const double mean = 100 * p * (2 * p - 1);
    const double var = 100 * p * (1 - p) * (3 + 4 * p * p);
    const double z = std::abs(r.gap_mean - mean) / r.gap_mean_stderr;
    const double rel = std::abs(r.gap_variance - var) / var;
    const std::uint64_t k = min_group_size(p);
    const auto at_bound = validate_pairwise_noise(p, k, 100000, 4);
    const bool pass = z <= 4.0 && rel <= 0.05 && at_bound.win_probability.mean >= 0.95;
    ok &= pass;
    detail << fmt(" p=%.2f: |mean-E|=%.2f stderr (<=4), var rel err %.3f (<=0.05), P(S>0) at k=%llu is %.4f (>=0.95);",
                  p, z, rel, static_cast<unsigned long long>(k), at_bound.win_probability.mean);
  }
  report(3, ok, "noisy pairwise gap, k=100, 1e5 trials." + detail.str());
}

// 4: one popularity step keeps a strictly sorted fair state fair.
void criterion_maintenance() {
  const auto r = validate_fair_maintenance(3, 30, sorted_fair_state_sampler(3, 30), 10000, 5);
  const double lo = r.fair_probability.ci ? r.fair_probability.ci->lo : r.fair_probability.mean;
  report(4, lo > 0.5,
         fmt("fairness maintenance, n=3, m=30, 1e4 trials: P(still fair) = %.4f, 95%% CI lower bound %.4f (> 0.5)",
             r.fair_probability.mean, lo));
}

struct PolicyRun {
  std::string name;
  AggregateReport report;
};

double min_creator_fairness(const AggregateReport& report) {
  double lo = 1.0;
  for (const auto& e : report.final_point().creator_fair) lo = std::min(lo, e.mean);
  return lo;
}

const TimePoint* point_at(const AggregateReport& report, std::uint32_t t) {
  for (const auto& point : report.timeline) {
    if (point.t == t) return &point;
  }
  return nullptr;
}

// 5: desk-scale synthetic replication.
void criterion_desk_scale() {
  const auto start = Clock::now();
  std::vector<PolicyRun> runs;
  for (const char* policy : {"random", "popularity", "pairwise+random", "pairwise+popularity"}) {
    runs.push_back({policy, run_experiment(make_config(policy, 20, 1900, 300, 2000)).report});
  }
  const auto& random = runs[0].report;
  const auto& popularity = runs[1].report;
  const double baseline = std::max(min_creator_fairness(random), min_creator_fairness(popularity));

  bool a = true, b = true, c = true;
  std::ostringstream detail;
  detail << fmt("(a) min per-creator fairness at T=300: random %.4f, popularity %.4f", min_creator_fairness(random),
                min_creator_fairness(popularity));
  for (std::size_t i = 2; i < 4; ++i) {
    const double lo = min_creator_fairness(runs[i].report);
    a &= lo > baseline;
    detail << fmt(", %s %.4f", runs[i].name.c_str(), lo);
    const auto* t2 = point_at(runs[i].report, 2);
    const auto* t5 = point_at(runs[i].report, 5);
    b &= t2 && t5 && t2->fair_indicator_mean.mean == 1.0 && t5->fair_indicator_mean.mean >= 0.75;
    if (t2 && t5) {
      detail << fmt(" [(b) t=2 indicator %.4f (=1), t=5 %.4f (>=0.75)]", t2->fair_indicator_mean.mean,
                    t5->fair_indicator_mean.mean);
    }
  }
  detail << " (pairwise must exceed both baselines);";

  double worst = 0.0;
  std::uint32_t worst_t = 0;
  const auto& pp = runs[3].report;
  for (const auto& point : pp.timeline) {
    if (point.t <= 10) continue;
    const auto* base = point_at(popularity, point.t);
    if (!base || !base->dissatisfaction || !point.dissatisfaction) {
      c = false;
      continue;
    }
    const double rel = std::abs(point.dissatisfaction->mean - base->dissatisfaction->mean) / base->dissatisfaction->mean;
    if (rel > worst) {
      worst = rel;
      worst_t = point.t;
    }
  }
  c &= worst <= 0.10;
  detail << fmt(" (c) pairwise+popularity vs popularity dissatisfaction for t>10: max relative gap %.4f at t=%u (<=0.10);",
                worst, worst_t);
  const double elapsed = seconds_since(start);
  detail << fmt(" n=20, m=1900, 2000 seeds, p=1; %.1f s", elapsed);
  report(5, a && b && c, detail.str());
}

// 6: optional full-scale spot check.
void criterion_full_scale() {
  const auto start = Clock::now();
  bool ok = true;
  std::ostringstream detail;
  detail << "n=100, m=49500, 1000 seeds, T=1000:";
  for (const char* policy : {"random", "popularity", "pairwise+random", "pairwise+popularity"}) {
    const auto r = run_experiment(make_config(policy, 100, 49500, 1000, 1000)).report;
    const double lo = min_creator_fairness(r);
    const bool pairwise = std::strncmp(policy, "pairwise", 8) == 0;
    ok &= pairwise ? lo >= 0.75 : (lo >= 0.52 && lo <= 0.63);
    detail << fmt(" %s min fairness %.4f (%s);", policy, lo, pairwise ? ">=0.75" : "in [0.52, 0.63]");
  }
  detail << fmt(" %.0f s", seconds_since(start));
  report(6, ok, detail.str());
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

// 7: golden files on the committed 3-movie, 10-user fixture.
void criterion_golden() {
  namespace ml = movielens;
  const std::filesystem::path dir = std::filesystem::path(FAIRREC_FIXTURES) / "movielens_tiny";
  bool binarize_ok = true, prefix_ok = true, quality_ok = true;
  try {
    const auto data = ml::load_ratings(dir / "ratings.csv", dir / "links.csv", dir / "movies.csv");
    const auto imdb = ml::load_imdb_ratings(dir / "title.ratings.tsv");

    ml::InteractionLog corpus_log;
    for (ml::Rating r : data.ratings) {
      if (r.movie == 10 || r.movie == 20 || r.movie == 30) {
        r.user -= 1;
        corpus_log.push_back(r);
      }
    }
    const auto positives = ml::snapshot(ml::binarize(corpus_log), 1.0).positives;
    const auto want = read_csv(dir / "expected_positives.csv");
    binarize_ok = positives.size() == want.size();
    for (std::size_t i = 0; binarize_ok && i < want.size(); ++i) {
      binarize_ok = positives[i].user + 1 == std::stoll(want[i][0]) && positives[i].movie == std::stoll(want[i][1]) &&
                    positives[i].timestamp == std::stoll(want[i][2]);
    }

    const std::size_t expected_sizes[] = {0, 2, 4, 7, 9};
    const double ratios[] = {0.0, 0.3, 0.5, 0.8, 1.0};
    for (std::size_t i = 0; i < 5; ++i) {
      const auto snap = ml::snapshot(ml::binarize(corpus_log), ratios[i]).positives;
      prefix_ok &= snap.size() == expected_sizes[i] && std::equal(snap.begin(), snap.end(), positives.begin());
    }
    const QualityRanking quality({10, 30, 20});
    const auto state = ml::init_state_from_snapshot(ml::snapshot(ml::binarize(corpus_log), 1.0), quality, 10);
    prefix_ok &= std::vector<std::int64_t>(state.followers().begin(), state.followers().end()) ==
                 std::vector<std::int64_t>{3, 2, 4};

    std::vector<ml::WeightedInput> inputs;
    for (const std::int64_t movie : {10, 20, 30}) {
      const auto& entry = imdb.at(data.movies.at(movie).imdb);
      inputs.push_back({movie, entry.rating, entry.votes});
    }
    const auto q = ml::quality_from_imdb(inputs);
    const auto want_q = read_csv(dir / "expected_quality.csv");
    quality_ok = want_q.size() == 3;
    for (std::size_t i = 0; quality_ok && i < 3; ++i) {
      quality_ok = q.ranking.id_at(static_cast<Rank>(std::stoi(want_q[i][0]))) == std::stoll(want_q[i][1]) &&
                   std::abs(q.weighted[i] - std::stod(want_q[i][2])) <= 1e-12;
    }
  } catch (const std::exception& e) {
    report(7, false, std::string("golden fixture failed to load: ") + e.what());
    return;
  }
  report(7, binarize_ok && prefix_ok && quality_ok,
         fmt("golden fixture: binarized positives %s, snapshot prefixes and follower counts %s, IMDb weighted "
             "ranking %s (tolerance 1e-12)",
             binarize_ok ? "match" : "differ", prefix_ok ? "match" : "differ", quality_ok ? "matches" : "differs"));
}

// 9: everyone following CC1 and CC3 is CC2-unfair and can never change.
void criterion_irreversible() {
  std::vector<FollowEdge> edges;
  for (UserId u = 0; u < 12; ++u) {
    edges.push_back({u, 1});
    edges.push_back({u, 3});
  }
  const auto start = new_platform(3, 12, edges);
  bool ok = !is_cc_fair(start.followers(), 2);
  const std::vector<std::int64_t> frozen{12, 0, 12};
  for (const char* policy : {"random", "popularity", "pairwise+random", "pairwise+popularity"}) {
    ok &= run_simulation(make_config(policy, 3, 12, 1000, 1), 0, start).back().followers == frozen;
  }
  ok &= run_simulation(make_config("permutation", 3, 12, 3, 1), 0, start).back().followers == frozen;
  report(9, ok,
         "all users follow {CC1, CC3}: CC2-unfair at t=0 and follower counts unchanged after 1000 steps of random, "
         "popularity and both pairwise policies, and after the full 3-step permutation schedule");
}

// 10: identical CSV output with 1 and 8 workers.
void criterion_determinism() {
  auto run = [](unsigned workers) {
    auto config = make_config("pairwise+popularity", 10, 450, 200, 64, 0.9);
    config.workers = workers;
    std::ostringstream runs, creators, aggregate, per_creator;
    const auto out = run_experiment(config, {&runs, &creators});
    write_aggregate_csv(aggregate, out.report);
    write_creator_aggregate_csv(per_creator, out.report);
    return runs.str() + creators.str() + aggregate.str() + per_creator.str();
  };
  const std::string one = run(1);
  const std::string eight = run(8);
  report(10, one == eight,
         fmt("experiment CSVs (runs, creators, aggregate, per-creator aggregate; %zu bytes) byte-identical with 1 and "
             "8 workers",
             one.size()));
}

// 11: single-threaded throughput of the popularity step at n = 100. Shared
// machines are noisy, so the rate is the median over nine timed windows.
void criterion_throughput() {
  const std::size_t n = 100, m = 49500;
  const auto config = make_config("popularity", n, m, 1000, 1);
  std::vector<double> rates;
  std::uint32_t sim_index = 0;
  for (int window = 0; window < 9; ++window) {
    std::size_t evaluated = 0;
    double elapsed = 0.0;
    // Fresh runs cover the early phase, where nearly every user is active.
    while (elapsed < 0.3) {
      Simulation sim(config, sim_index++, new_platform(n, m));
      const auto start = Clock::now();
      for (int t = 0; t < 50; ++t) evaluated += sim.step();
      elapsed += seconds_since(start);
    }
    rates.push_back(static_cast<double>(evaluated) / elapsed);
  }
  std::ranges::sort(rates);
  const double median = rates[rates.size() / 2];

  // Host context: bare generator calls per second on this core.
  const CounterRng rng(1, 0);
  std::uint64_t sink = 0;
  const auto start = Clock::now();
  constexpr std::uint32_t kDraws = 20000000;
  for (std::uint32_t i = 0; i < kDraws; ++i) sink += rng.draw(Lane::kAuxiliary, 0, i).first;
  const double draws = kDraws / seconds_since(start);

  report(11, median >= 5e7,
         fmt("popularity policy, n=100, m=49500, p=1, one thread: median %.3g evaluated user-steps/s over 9 windows "
             "(>= 5e7; slowest %.3g, fastest %.3g); host runs %.3g bare Philox draws/s%s",
             median, rates.front(), rates.back(), draws, sink == 42 ? " " : ""));
}

}  // namespace

int main(int argc, char** argv) {
  bool full_scale = false;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--full-scale") == 0) {
      full_scale = true;
    } else if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      std::istringstream in(argv[++i]);
      for (std::string item; std::getline(in, item, ',');) only.insert(std::stoi(item));
    } else {
      std::cerr << "usage: acceptance [--full-scale] [--only 1,2,...]\n";
      return 2;
    }
  }

  const std::vector<std::pair<int, std::function<void()>>> criteria{
      {1, criterion_pairwise_counts}, {2, criterion_permutation_counts},
      {3, criterion_pairwise_noise},  {4, criterion_maintenance},
      {5, criterion_desk_scale},      {6, criterion_full_scale},
      {7, criterion_golden},          {9, criterion_irreversible},
      {10, criterion_determinism},    {11, criterion_throughput},
  };
  for (const auto& [id, run] : criteria) {
    const bool selected = id == 6 ? full_scale || only.contains(6) : only.empty() || only.contains(id);
    if (!selected) continue;
    try {
      run();
    } catch (const std::exception& e) {
      report(id, false, std::string("threw: ") + e.what());
    }
  }
  if (only.empty()) {
    if (!full_scale) std::printf("SKIP criterion 6: full-scale spot check is opt-in (--full-scale)\n");
    std::printf("SKIP criterion 8: real-data trend runs in the real_data_trend test\n");
  }
  return failures == 0 ? 0 : 1;
}
