#include "fairrec/movielens.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <set>
#include <sstream>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

#include "fairrec/digest.hpp"
#include "fairrec/errors.hpp"
#include "fairrec/rng.hpp"

namespace fairrec::movielens {
namespace {

[[noreturn]] void malformed(const std::string& source, std::size_t line, const std::string& what) {
  throw InputError(source + ":" + std::to_string(line) + ": " + what);
}

std::string_view trim_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

template <typename T>
std::optional<T> parse_number(std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) return std::nullopt;
  return value;
}

template <typename T>
T field(std::string_view text, const char* name, const std::string& source, std::size_t line) {
  const auto value = parse_number<T>(text);
  if (!value) malformed(source, line, std::string("bad ") + name + " '" + std::string(text) + "'");
  return *value;
}

// Reads the header line; returns false for an empty stream.
bool expect_header(std::istream& in, const std::string& source, std::string_view expected,
                   std::size_t columns, char sep) {
  std::string line;
  if (!std::getline(in, line)) return false;
  const auto cols = split(trim_cr(line), sep);
  const auto want = split(expected, sep);
  if (cols.size() < columns || !std::equal(want.begin(), want.begin() + static_cast<std::ptrdiff_t>(columns), cols.begin())) {
    malformed(source, 1, "expected header '" + std::string(expected) + "'");
  }
  return true;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

std::string format_ratio(double ratio) {
  std::ostringstream out;
  out << std::setprecision(6) << std::fixed << ratio;
  std::string s = out.str();
  while (s.size() > 1 && s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  return s;
}

}  // namespace

InteractionLog parse_ratings(std::istream& in, const std::string& source,
                             std::vector<std::string>* warnings) {
  InteractionLog log;
  if (!expect_header(in, source, "userId,movieId,rating,timestamp", 4, ',')) {
    if (warnings) warnings->push_back(source + ": empty ratings file");
    return log;
  }
  std::set<std::pair<std::int64_t, std::int64_t>> seen;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim_cr(line);
    if (row.empty()) continue;
    const auto cols = split(row, ',');
    if (cols.size() != 4) malformed(source, line_no, "expected 4 columns");
    Rating r{};
    r.user = field<std::int64_t>(cols[0], "userId", source, line_no);
    r.movie = field<std::int64_t>(cols[1], "movieId", source, line_no);
    r.rating = field<double>(cols[2], "rating", source, line_no);
    r.timestamp = field<std::int64_t>(cols[3], "timestamp", source, line_no);
    if (!(r.rating >= 0.5 && r.rating <= 5.0)) malformed(source, line_no, "rating outside [0.5, 5]");
    if (r.timestamp < 0) malformed(source, line_no, "negative timestamp");
    if (!seen.emplace(r.user, r.movie).second) {
      malformed(source, line_no, "duplicate (userId, movieId) pair");
    }
    log.push_back(r);
  }
  if (log.empty() && warnings) warnings->push_back(source + ": no ratings");
  return log;
}

std::map<std::int64_t, std::vector<std::string>> parse_movie_genres(
    std::istream& in, const std::string& source, std::map<std::int64_t, std::string>* titles) {
  std::map<std::int64_t, std::vector<std::string>> out;
  if (!expect_header(in, source, "movieId,title,genres", 3, ',')) return out;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim_cr(line);
    if (row.empty()) continue;
    // Titles may contain commas; the id precedes the first comma and the
    // genres follow the last one.
    const std::size_t first = row.find(',');
    const std::size_t last = row.rfind(',');
    if (first == std::string_view::npos || first == last) malformed(source, line_no, "expected 3 columns");
    const auto id = field<std::int64_t>(row.substr(0, first), "movieId", source, line_no);
    std::vector<std::string> genres;
    for (const auto g : split(row.substr(last + 1), '|')) genres.emplace_back(g);
    out[id] = std::move(genres);
    if (titles) {
      std::string_view title = row.substr(first + 1, last - first - 1);
      if (title.size() >= 2 && title.front() == '"' && title.back() == '"') {
        title = title.substr(1, title.size() - 2);
      }
      (*titles)[id] = std::string(title);
    }
  }
  return out;
}

std::map<std::int64_t, std::int64_t> parse_links(std::istream& in, const std::string& source) {
  std::map<std::int64_t, std::int64_t> out;
  if (!expect_header(in, source, "movieId,imdbId,tmdbId", 2, ',')) return out;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim_cr(line);
    if (row.empty()) continue;
    const auto cols = split(row, ',');
    if (cols.size() < 2) malformed(source, line_no, "expected at least 2 columns");
    const auto movie = field<std::int64_t>(cols[0], "movieId", source, line_no);
    if (cols[1].empty()) continue;
    out[movie] = field<std::int64_t>(cols[1], "imdbId", source, line_no);
  }
  return out;
}

Dataset load_ratings(const std::filesystem::path& ratings, const std::filesystem::path& links,
                     const std::filesystem::path& movies) {
  Dataset data;
  std::ifstream ratings_in = open_input(ratings);
  InteractionLog log = parse_ratings(ratings_in, ratings.string(), &data.warnings);
  std::ifstream links_in = open_input(links);
  const auto link_map = parse_links(links_in, links.string());
  std::ifstream movies_in = open_input(movies);
  std::map<std::int64_t, std::string> titles;
  auto genres = parse_movie_genres(movies_in, movies.string(), &titles);

  for (const auto& [movie, imdb] : link_map) {
    MovieInfo info;
    info.movie = movie;
    info.imdb = imdb;
    if (auto it = titles.find(movie); it != titles.end()) info.title = it->second;
    if (auto it = genres.find(movie); it != genres.end()) info.genres = std::move(it->second);
    data.movies.emplace(movie, std::move(info));
  }

  std::set<std::int64_t> unlinked;
  data.ratings.reserve(log.size());
  for (const Rating& r : log) {
    if (data.movies.contains(r.movie)) {
      data.ratings.push_back(r);
    } else {
      unlinked.insert(r.movie);
    }
  }
  if (!unlinked.empty()) {
    std::string msg = "dropped ratings of " + std::to_string(unlinked.size()) +
                      " movie(s) without an IMDb link:";
    std::size_t shown = 0;
    for (const auto id : unlinked) {
      if (shown++ == 10) {
        msg += " ...";
        break;
      }
      msg += " " + std::to_string(id);
    }
    data.warnings.push_back(msg);
  }
  return data;
}

ImdbTable parse_imdb_ratings(std::istream& in, const std::string& source) {
  ImdbTable table;
  if (!expect_header(in, source, "tconst\taverageRating\tnumVotes", 3, '\t')) return table;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim_cr(line);
    if (row.empty()) continue;
    const auto cols = split(row, '\t');
    if (cols.size() != 3) malformed(source, line_no, "expected 3 columns");
    std::string_view tconst = cols[0];
    if (tconst.starts_with("tt")) tconst.remove_prefix(2);
    const auto id = field<std::int64_t>(tconst, "tconst", source, line_no);
    ImdbEntry entry;
    entry.rating = field<double>(cols[1], "averageRating", source, line_no);
    entry.votes = field<std::int64_t>(cols[2], "numVotes", source, line_no);
    table[id] = entry;
  }
  return table;
}

ImdbTable load_imdb_ratings(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  return parse_imdb_ratings(in, path.string());
}

double weighted_rating(double rating, double votes, double min_votes, double prior_mean) {
  const double total = votes + min_votes;
  if (total <= 0.0) return prior_mean;
  return votes / total * rating + min_votes / total * prior_mean;
}

QualityResult quality_from_imdb(std::span<const WeightedInput> movies, const ImdbParams& params) {
  if (movies.empty()) throw InputError("no movies to rank");
  for (const auto& m : movies) {
    if (!(m.rating >= 0.0 && m.rating <= 10.0)) {
      throw InputError("IMDb rating outside [0, 10] for movie " + std::to_string(m.id));
    }
    if (m.votes < 0) throw InputError("negative vote count for movie " + std::to_string(m.id));
  }

  QualityResult result;
  if (params.min_votes) {
    result.min_votes = *params.min_votes;
  } else {
    std::vector<double> votes;
    votes.reserve(movies.size());
    for (const auto& m : movies) votes.push_back(static_cast<double>(m.votes));
    std::sort(votes.begin(), votes.end());
    const double pos = 0.25 * static_cast<double>(votes.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, votes.size() - 1);
    result.min_votes = votes[lo] + (pos - static_cast<double>(lo)) * (votes[hi] - votes[lo]);
  }
  if (params.prior_mean) {
    result.prior_mean = *params.prior_mean;
  } else {
    double sum = 0.0;
    for (const auto& m : movies) sum += m.rating;
    result.prior_mean = sum / static_cast<double>(movies.size());
  }

  struct Scored {
    double wr;
    std::int64_t votes;
    std::int64_t id;
  };
  std::vector<Scored> scored;
  scored.reserve(movies.size());
  for (const auto& m : movies) {
    scored.push_back({weighted_rating(m.rating, static_cast<double>(m.votes), result.min_votes,
                                      result.prior_mean),
                      m.votes, m.id});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.wr != b.wr) return a.wr > b.wr;
    if (a.votes != b.votes) return a.votes > b.votes;
    return a.id < b.id;
  });

  std::vector<std::int64_t> ids;
  ids.reserve(scored.size());
  for (const auto& s : scored) {
    ids.push_back(s.id);
    result.weighted.push_back(s.wr);
  }
  result.ranking = QualityRanking(std::move(ids));
  return result;
}

Corpus select_corpus(const Dataset& data, const ImdbTable& imdb, const CorpusOptions& options) {
  const std::size_t n = options.movies;
  if (n < 2) throw ConfigError("the corpus needs at least 2 movies");

  std::unordered_map<std::int64_t, std::size_t> counts;
  for (const Rating& r : data.ratings) ++counts[r.movie];

  std::vector<std::pair<std::size_t, std::int64_t>> candidates;  // (count, movie)
  bool genre_seen = false;
  for (const auto& [id, info] : data.movies) {
    if (std::find(info.genres.begin(), info.genres.end(), options.genre) == info.genres.end()) continue;
    genre_seen = true;
    const auto it = counts.find(id);
    if (it != counts.end()) candidates.emplace_back(it->second, id);
  }
  if (!genre_seen) throw InputError("genre '" + options.genre + "' not present in movie metadata");
  if (candidates.size() < n) {
    throw InputError("genre '" + options.genre + "' has " + std::to_string(candidates.size()) +
                     " rated movies, fewer than the requested " + std::to_string(n));
  }
  std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  candidates.resize(n);

  std::vector<WeightedInput> inputs;
  std::vector<std::int64_t> missing;
  for (const auto& [count, movie] : candidates) {
    const std::int64_t imdb_id = data.movies.at(movie).imdb;
    const auto it = imdb.find(imdb_id);
    if (it == imdb.end()) {
      missing.push_back(movie);
      continue;
    }
    inputs.push_back({movie, it->second.rating, it->second.votes});
  }
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    std::string msg = "no IMDb rating for corpus movie(s):";
    for (const auto id : missing) {
      char tconst[16];
      std::snprintf(tconst, sizeof tconst, "tt%07lld", static_cast<long long>(data.movies.at(id).imdb));
      msg += " " + std::to_string(id) + " (" + tconst + ")";
    }
    throw InputError(msg);
  }
  QualityResult quality = quality_from_imdb(inputs, options.imdb);

  std::unordered_set<std::int64_t> selected;
  for (const auto& c : candidates) selected.insert(c.second);
  std::set<std::int64_t> rater_set;
  for (const Rating& r : data.ratings) {
    if (selected.contains(r.movie)) rater_set.insert(r.user);
  }
  std::vector<std::int64_t> raters(rater_set.begin(), rater_set.end());

  const std::size_t block = n * (n - 1);
  const std::size_t keep = std::min(options.target_users, raters.size()) / block * block;
  if (keep == 0) {
    throw InputError("only " + std::to_string(raters.size()) + " users rated the corpus; at least " +
                     std::to_string(block) + " are needed");
  }
  // Partial Fisher-Yates: the first `keep` slots become a uniform sample.
  LaneStream stream(CounterRng(options.seed, 0), Lane::kAuxiliary, 0);
  for (std::size_t i = 0; i < keep; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(stream.below(raters.size() - i));
    std::swap(raters[i], raters[j]);
  }
  raters.resize(keep);
  std::sort(raters.begin(), raters.end());

  Corpus corpus;
  corpus.users = raters;
  std::unordered_map<std::int64_t, std::int64_t> user_index;
  for (std::size_t i = 0; i < raters.size(); ++i) user_index.emplace(raters[i], static_cast<std::int64_t>(i));
  for (const Rating& r : data.ratings) {
    if (!selected.contains(r.movie)) continue;
    const auto it = user_index.find(r.user);
    if (it == user_index.end()) continue;
    Rating mapped = r;
    mapped.user = it->second;
    corpus.ratings.push_back(mapped);
  }

  std::unordered_map<std::int64_t, const WeightedInput*> by_id;
  for (const auto& in : inputs) by_id.emplace(in.id, &in);
  for (Rank rank = 1; rank <= n; ++rank) {
    const std::int64_t movie = quality.ranking.id_at(rank);
    const WeightedInput& in = *by_id.at(movie);
    corpus.movies.push_back({movie, data.movies.at(movie).imdb, in.rating, in.votes, counts.at(movie),
                             quality.weighted[rank - 1], rank});
  }
  corpus.quality = std::move(quality.ranking);
  corpus.min_votes = quality.min_votes;
  corpus.prior_mean = quality.prior_mean;
  return corpus;
}

InteractionLog binarize(std::span<const Rating> log) {
  std::unordered_map<std::int64_t, std::pair<double, std::size_t>> sums;
  for (const Rating& r : log) {
    auto& [sum, count] = sums[r.user];
    sum += r.rating;
    ++count;
  }
  InteractionLog positives;
  for (const Rating& r : log) {
    const auto& [sum, count] = sums.at(r.user);
    // r > sum/count, compared without division.
    if (r.rating * static_cast<double>(count) > sum) positives.push_back(r);
  }
  return positives;
}

InteractionSnapshot snapshot(std::span<const Rating> positives, double ratio) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw ContractError("snapshot ratio must lie in [0, 1], got " + std::to_string(ratio));
  }
  InteractionSnapshot snap;
  snap.ratio = ratio;
  snap.positives.assign(positives.begin(), positives.end());
  std::sort(snap.positives.begin(), snap.positives.end(), [](const Rating& a, const Rating& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    if (a.user != b.user) return a.user < b.user;
    return a.movie < b.movie;
  });
  const double exact = ratio * static_cast<double>(snap.positives.size());
  // Guard floor() against products like 0.3 * 10 = 2.9999999999999996.
  const auto keep = static_cast<std::size_t>(std::floor(exact + 1e-9 * std::max(1.0, exact)));
  snap.positives.resize(std::min(keep, snap.positives.size()));
  return snap;
}

std::vector<FollowEdge> snapshot_edges(const InteractionSnapshot& snap, const QualityRanking& quality,
                                       std::size_t users) {
  std::vector<FollowEdge> edges;
  edges.reserve(snap.positives.size());
  std::set<std::int64_t> uncovered;
  for (const Rating& r : snap.positives) {
    if (r.user < 0 || static_cast<std::size_t>(r.user) >= users) {
      throw InputError("snapshot user " + std::to_string(r.user) + " outside [0, " +
                       std::to_string(users) + ")");
    }
    const auto rank = quality.rank_of(r.movie);
    if (!rank) {
      uncovered.insert(r.movie);
      continue;
    }
    edges.push_back({static_cast<UserId>(r.user), *rank});
  }
  if (!uncovered.empty()) {
    std::string msg = "snapshot movie(s) missing from the quality ranking:";
    for (const auto id : uncovered) msg += " " + std::to_string(id);
    throw InputError(msg);
  }
  return edges;
}

PlatformState init_state_from_snapshot(const InteractionSnapshot& snap, const QualityRanking& quality,
                                       std::size_t users) {
  const auto edges = snapshot_edges(snap, quality, users);
  return new_platform(quality.size(), users, edges);
}

std::vector<double> default_ratio_grid() {
  return {0.0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.0532, 0.06, 0.07, 0.08,
          0.0892, 0.1, 0.11, 0.12, 0.14, 0.16, 0.18, 0.2};
}

PrepResult prepare(const PrepOptions& options) {
  Dataset data = load_ratings(options.ratings, options.links, options.movies);
  const ImdbTable imdb = load_imdb_ratings(options.imdb);

  PrepResult result;
  result.warnings = data.warnings;
  result.corpus = select_corpus(data, imdb, options.corpus);
  const Corpus& corpus = result.corpus;

  nlohmann::json provenance = {
      {"inputs",
       {{"ratings", {{"path", options.ratings.string()}, {"sha256", sha256_file(options.ratings)}}},
        {"movies", {{"path", options.movies.string()}, {"sha256", sha256_file(options.movies)}}},
        {"links", {{"path", options.links.string()}, {"sha256", sha256_file(options.links)}}},
        {"imdb", {{"path", options.imdb.string()}, {"sha256", sha256_file(options.imdb)}}}}},
      {"genre", options.corpus.genre},
      {"seed", options.corpus.seed},
      {"target_users", options.corpus.target_users},
      {"imdb_min_votes", corpus.min_votes},
      {"imdb_prior_mean", corpus.prior_mean},
  };

  std::filesystem::create_directories(options.out_dir);

  nlohmann::json corpus_json = provenance;
  corpus_json["creators"] = corpus.movies.size();
  corpus_json["users"] = corpus.users.size();
  corpus_json["movies"] = nlohmann::json::array();
  for (const auto& m : corpus.movies) {
    corpus_json["movies"].push_back({{"rank", m.rank},
                                     {"movie_id", m.movie},
                                     {"imdb_id", m.imdb},
                                     {"imdb_rating", m.imdb_rating},
                                     {"votes", m.votes},
                                     {"rating_count", m.rating_count},
                                     {"weighted_rating", m.weighted_rating}});
  }
  corpus_json["user_ids"] = corpus.users;
  {
    std::ofstream out(options.out_dir / "corpus.json");
    out << corpus_json.dump(2) << '\n';
    if (!out) throw InputError("cannot write " + (options.out_dir / "corpus.json").string());
  }

  const InteractionLog positives = binarize(corpus.ratings);
  const std::vector<double> ratios = options.ratios.empty() ? default_ratio_grid() : options.ratios;
  nlohmann::json manifest = {{"corpus", "corpus.json"},
                             {"positives", positives.size()},
                             {"snapshots", nlohmann::json::array()}};
  for (const double ratio : ratios) {
    const InteractionSnapshot snap = snapshot(positives, ratio);
    SnapshotFile file;
    file.creators = corpus.movies.size();
    file.users = corpus.users.size();
    file.edges = snapshot_edges(snap, corpus.quality, file.users);
    file.header = provenance;
    file.header["ratio"] = ratio;
    file.header["positives_kept"] = snap.positives.size();
    file.header["positives_total"] = positives.size();
    const std::string name = "snapshot_" + format_ratio(ratio) + ".csv";
    write_snapshot_file(options.out_dir / name, file);
    manifest["snapshots"].push_back({{"ratio", ratio}, {"file", name}});
    result.snapshots.emplace_back(ratio, options.out_dir / name);
  }
  {
    std::ofstream out(options.out_dir / "snapshots.json");
    out << manifest.dump(2) << '\n';
    if (!out) throw InputError("cannot write " + (options.out_dir / "snapshots.json").string());
  }
  return result;
}

std::vector<std::pair<double, std::filesystem::path>> read_snapshot_manifest(
    const std::filesystem::path& manifest) {
  std::ifstream in = open_input(manifest);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(manifest.string() + ": " + e.what());
  }
  std::vector<std::pair<double, std::filesystem::path>> out;
  if (!doc.contains("snapshots") || !doc["snapshots"].is_array()) {
    throw InputError(manifest.string() + ": missing 'snapshots' array");
  }
  for (const auto& entry : doc["snapshots"]) {
    if (!entry.contains("ratio") || !entry.contains("file")) {
      throw InputError(manifest.string() + ": snapshot entry needs 'ratio' and 'file'");
    }
    out.emplace_back(entry["ratio"].get<double>(),
                     manifest.parent_path() / entry["file"].get<std::string>());
  }
  return out;
}

}  // namespace fairrec::movielens
