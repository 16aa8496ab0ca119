#include <doctest.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "temp_dir.hpp"

namespace {

struct Result {
  int code = -1;
  std::string out;
};

// Runs the CLI with stderr discarded.
Result run_cli(const std::string& args) {
  const std::string command = std::string("'") + FAIRREC_CLI + "' " + args + " 2>/dev/null";
  Result result;
  FILE* pipe = ::popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buffer{};
  std::size_t got = 0;
  while ((got = std::fread(buffer.data(), 1, buffer.size(), pipe)) > 0) result.out.append(buffer.data(), got);
  const int status = ::pclose(pipe);
  result.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string kFixture = std::string(FAIRREC_FIXTURES) + "/movielens_tiny";

}  // namespace

TEST_CASE("cli exit codes") {
  CHECK(run_cli("").code == 2);
  CHECK(run_cli("bogus").code == 2);
  CHECK(run_cli("--version").code == 0);
  CHECK(run_cli("simulate --policy nope --n 3 --m 5 --steps 2").code == 2);
  CHECK(run_cli("experiment --policy popularity --n 3 --m 5 --steps 2 --seeds 0").code == 2);
  CHECK(run_cli("experiment --policy pairwise+random --n 3 --m 13 --steps 5 --seeds 1").code == 2);
  CHECK(run_cli("theory bound --p 0.5").code == 2);
  CHECK(run_cli("simulate --policy random --steps 2 --init-snapshot /nonexistent/s.csv").code == 3);
  CHECK(run_cli("prep --ratings /nonexistent/r.csv --movies /x --links /y --imdb /z --out /tmp/x").code == 3);

  fairrec::testing::TempDir dir;
  std::ofstream(dir.path() / "bad.json") << R"({"n": 3, "bogus": true})";
  CHECK(run_cli("experiment --config '" + (dir.path() / "bad.json").string() + "'").code == 2);
  std::ofstream(dir.path() / "broken.json") << "{";
  CHECK(run_cli("experiment --config '" + (dir.path() / "broken.json").string() + "'").code == 2);
  CHECK(run_cli("experiment --config '" + (dir.path() / "missing.json").string() + "'").code == 2);
}

TEST_CASE("cli simulate") {
  const auto a = run_cli("simulate --policy pairwise+popularity --n 3 --m 12 --steps 2");
  REQUIRE(a.code == 0);
  std::istringstream in(a.out);
  std::string line, last;
  std::getline(in, line);
  CHECK(line == "seed,t,dissatisfaction,fraction_no_follow,fair_all");
  while (std::getline(in, line)) last = line;
  CHECK(last.rfind("0,2,", 0) == 0);
  CHECK(last.substr(last.size() - 2) == ",1");
  CHECK(run_cli("simulate --policy pairwise+popularity --n 3 --m 12 --steps 2").out == a.out);

  fairrec::testing::TempDir dir;
  const auto out = (dir.path() / "sim").string();
  REQUIRE(run_cli("simulate --policy random --n 4 --m 20 --steps 30 --p 0.9 --out '" + out + "'").code == 0);
  CHECK(slurp(dir.path() / "sim" / "creators.csv").rfind("seed,t,creator_rank,followers,cc_fair\n", 0) == 0);
}

TEST_CASE("cli experiment with config file and overrides") {
  fairrec::testing::TempDir dir;
  const auto config = dir.path() / "config.json";
  std::ofstream(config) << R"({"n": 5, "m": 40, "policy": "popularity", "p": 0.9, "steps": 40,
                               "seeds": 12, "master_seed": 3})";
  const std::string base = "experiment --config '" + config.string() + "' --policy pairwise+popularity";
  REQUIRE(run_cli(base + " --workers 1 --out '" + (dir.path() / "w1").string() + "'").code == 0);
  REQUIRE(run_cli(base + " --workers 8 --out '" + (dir.path() / "w8").string() + "'").code == 0);
  for (const char* file : {"runs.csv", "creators.csv", "aggregate.csv", "creator_aggregate.csv", "terciles.csv"}) {
    CAPTURE(file);
    const auto one = slurp(dir.path() / "w1" / file);
    CHECK_FALSE(one.empty());
    CHECK(one == slurp(dir.path() / "w8" / file));
  }
  const auto report = nlohmann::json::parse(slurp(dir.path() / "w1" / "report.json"));
  CHECK(report["policy"] == "pairwise+popularity");
  CHECK(report["n"] == 5);
  CHECK(report["seeds"] == 12);
  CHECK(report["valid"] == true);

  const auto stdout_report = run_cli(base + " --seeds 2");
  REQUIRE(stdout_report.code == 0);
  CHECK(nlohmann::json::parse(stdout_report.out)["seeds"] == 2);
}

TEST_CASE("cli theory") {
  const auto bound = run_cli("theory bound --p 0.8");
  REQUIRE(bound.code == 0);
  CHECK(nlohmann::json::parse(bound.out)["min_group_size"] == 78);

  const auto pair = run_cli("theory validate pairwise --p 1 --k 1 --trials 200");
  REQUIRE(pair.code == 0);
  CHECK(nlohmann::json::parse(pair.out)["win_probability"] == 1.0);

  const auto maint = run_cli("theory validate maintenance --n 3 --m 30 --trials 200");
  REQUIRE(maint.code == 0);
  const auto doc = nlohmann::json::parse(maint.out);
  CHECK(doc["trials"] == 200);
  CHECK(run_cli("theory validate maintenance --n 5 --m 3 --trials 10").code == 2);
  CHECK(run_cli("theory validate").code == 2);
}

TEST_CASE("cli prep then sweep") {
  fairrec::testing::TempDir dir;
  const auto prep_dir = (dir.path() / "prep").string();
  const auto prep = run_cli("prep --ratings '" + kFixture + "/ratings.csv' --movies '" + kFixture +
                            "/movies.csv' --links '" + kFixture + "/links.csv' --imdb '" + kFixture +
                            "/title.ratings.tsv' --corpus-movies 3 --ratios 0,0.5,1 --out '" + prep_dir + "'");
  REQUIRE(prep.code == 0);
  CHECK(std::filesystem::exists(dir.path() / "prep" / "corpus.json"));

  const auto ok = run_cli("sweep --manifest '" + prep_dir + "/snapshots.json' --steps 20 --seeds 10 "
                          "--policies popularity,pairwise+popularity");
  REQUIRE(ok.code == 0);
  std::istringstream in(ok.out);
  std::string line;
  std::getline(in, line);
  CHECK(line == "ratio,policy,fair_mean,ci_lo,ci_hi");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 6);

  CHECK(run_cli("sweep --manifest '" + prep_dir + "/missing.json' --steps 20 --seeds 10").code == 3);

  CHECK(run_cli("prep --ratings '" + kFixture + "/ratings.csv' --movies '" + kFixture + "/movies.csv' --links '" +
                kFixture + "/links.csv' --imdb '" + kFixture + "/title.ratings.tsv' --genre NoSuchGenre --out '" +
                prep_dir + "2'")
            .code == 3);
}
