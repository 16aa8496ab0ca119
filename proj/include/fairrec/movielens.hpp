#pragma once

// MovieLens + IMDb preprocessing: load ratings, pick a genre corpus, binarize
// by per-user mean, cut timestamp-ordered snapshots, and rank movies by the
// IMDb weighted rating.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairrec/model.hpp"
#include "fairrec/snapshot_io.hpp"

namespace fairrec::movielens {

struct Rating {
  std::int64_t user;
  std::int64_t movie;
  double rating;
  std::int64_t timestamp;

  friend bool operator==(const Rating&, const Rating&) = default;
};

using InteractionLog = std::vector<Rating>;

struct MovieInfo {
  std::int64_t movie = 0;
  std::int64_t imdb = 0;  // numeric part of the IMDb tconst
  std::string title;
  std::vector<std::string> genres;
};

struct Dataset {
  InteractionLog ratings;                  // only movies with a link
  std::map<std::int64_t, MovieInfo> movies;  // only movies with a link
  std::vector<std::string> warnings;
};

// Stream parsers; `source` names the input in error messages.
// Throws InputError with the line number on malformed rows.
InteractionLog parse_ratings(std::istream& in, const std::string& source,
                             std::vector<std::string>* warnings = nullptr);
std::map<std::int64_t, std::vector<std::string>> parse_movie_genres(
    std::istream& in, const std::string& source, std::map<std::int64_t, std::string>* titles = nullptr);
std::map<std::int64_t, std::int64_t> parse_links(std::istream& in, const std::string& source);

// Reads ratings.csv, links.csv and movies.csv. Ratings of movies without a
// link are dropped with a warning.
Dataset load_ratings(const std::filesystem::path& ratings, const std::filesystem::path& links,
                     const std::filesystem::path& movies);

struct ImdbEntry {
  double rating = 0.0;
  std::int64_t votes = 0;
};
using ImdbTable = std::unordered_map<std::int64_t, ImdbEntry>;

// title.ratings.tsv: tconst, averageRating, numVotes.
ImdbTable parse_imdb_ratings(std::istream& in, const std::string& source);
ImdbTable load_imdb_ratings(const std::filesystem::path& path);

struct WeightedInput {
  std::int64_t id;  // movie id
  double rating;    // R in [0, 10]
  std::int64_t votes;
};

struct ImdbParams {
  std::optional<double> min_votes;   // m; default: 25th percentile of corpus votes
  std::optional<double> prior_mean;  // C; default: mean corpus rating
};

// WR = v/(v+m) R + m/(v+m) C.
double weighted_rating(double rating, double votes, double min_votes, double prior_mean);

struct QualityResult {
  QualityRanking ranking;             // movie ids, best first
  std::vector<double> weighted;       // WR by rank - 1
  double min_votes = 0.0;
  double prior_mean = 0.0;
};

// Ranks by WR descending, then votes descending, then id ascending.
// Throws InputError for an empty input or ratings outside [0, 10].
QualityResult quality_from_imdb(std::span<const WeightedInput> movies, const ImdbParams& params = {});

struct CorpusOptions {
  std::string genre = "Film-Noir";
  std::size_t movies = 100;
  std::size_t target_users = 49500;
  std::uint64_t seed = 0;
  ImdbParams imdb;
};

struct CorpusMovie {
  std::int64_t movie;
  std::int64_t imdb;
  double imdb_rating;
  std::int64_t votes;
  std::size_t rating_count;  // MovieLens ratings before user down-sampling
  double weighted_rating;
  Rank rank;
};

struct Corpus {
  std::vector<CorpusMovie> movies;        // ordered by rank
  std::vector<std::int64_t> users;        // MovieLens user ids; position = user index
  InteractionLog ratings;                 // user field holds the user index
  QualityRanking quality;                 // over movie ids
  double min_votes = 0.0;
  double prior_mean = 0.0;
};

// The `movies` most-rated movies of the genre (ties by movie id), and a
// seeded uniform sample of their raters whose size is the largest multiple
// of n(n-1) not above target_users. Throws InputError if the genre has fewer
// movies, no n(n-1) raters, or a movie lacks an IMDb entry (all offenders
// are listed).
Corpus select_corpus(const Dataset& data, const ImdbTable& imdb, const CorpusOptions& options);

// Ratings strictly above the user's mean over the given log.
InteractionLog binarize(std::span<const Rating> log);

struct InteractionSnapshot {
  double ratio = 0.0;
  InteractionLog positives;  // prefix in (timestamp, user, movie) order
};

// The first floor(ratio * P) positives in (timestamp, user, movie) order.
// Throws ContractError for ratio outside [0, 1].
InteractionSnapshot snapshot(std::span<const Rating> positives, double ratio);

// Follow edges with users as given and movies mapped to quality ranks.
// Throws InputError for a movie missing from the ranking or a user >= users.
std::vector<FollowEdge> snapshot_edges(const InteractionSnapshot& snap, const QualityRanking& quality,
                                       std::size_t users);
PlatformState init_state_from_snapshot(const InteractionSnapshot& snap, const QualityRanking& quality,
                                       std::size_t users);

struct PrepOptions {
  std::filesystem::path ratings;
  std::filesystem::path movies;
  std::filesystem::path links;
  std::filesystem::path imdb;
  std::filesystem::path out_dir;
  CorpusOptions corpus;
  std::vector<double> ratios;
};

// Default ratio grid; includes 0.0532, 0.0892 and 0.12.
std::vector<double> default_ratio_grid();

struct PrepResult {
  Corpus corpus;
  std::vector<std::pair<double, std::filesystem::path>> snapshots;
  std::vector<std::string> warnings;
};

// Writes corpus.json, one snapshot file per ratio, and snapshots.json
// (ratio -> file) into out_dir.
PrepResult prepare(const PrepOptions& options);

// Reads a snapshots.json manifest written by prepare().
std::vector<std::pair<double, std::filesystem::path>> read_snapshot_manifest(
    const std::filesystem::path& manifest);

}  // namespace fairrec::movielens
