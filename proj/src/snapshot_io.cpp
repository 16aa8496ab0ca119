#include "fairrec/snapshot_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <string>

#include "fairrec/errors.hpp"

namespace fairrec {
namespace {

constexpr const char* kFormat = "fairrec-snapshot";
constexpr int kVersion = 1;

template <class Int>
bool parse_int(std::string_view text, Int& out) {
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

}  // namespace

SnapshotFile read_snapshot_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open snapshot " + path.string());
  const std::string where = path.string();

  std::string line;
  if (!std::getline(in, line) || line.empty() || line[0] != '#') {
    throw InputError(where + ":1: missing '#' JSON header line");
  }
  SnapshotFile out;
  try {
    out.header = nlohmann::json::parse(line.substr(1));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(where + ":1: bad JSON header: " + e.what());
  }
  if (!out.header.is_object() || out.header.value("format", "") != kFormat ||
      out.header.value("version", 0) != kVersion) {
    throw InputError(where + ":1: not a version 1 fairrec-snapshot header");
  }
  try {
    out.creators = out.header.at("creators").get<std::size_t>();
    out.users = out.header.at("users").get<std::size_t>();
  } catch (const nlohmann::json::exception&) {
    throw InputError(where + ":1: header needs integer 'creators' and 'users'");
  }

  if (!std::getline(in, line) || line != "user,rank") {
    throw InputError(where + ":2: expected column header 'user,rank'");
  }
  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    std::uint64_t user = 0;
    Rank rank = 0;
    if (comma == std::string::npos ||
        !parse_int(std::string_view(line).substr(0, comma), user) ||
        !parse_int(std::string_view(line).substr(comma + 1), rank)) {
      throw InputError(where + ":" + std::to_string(line_no) + ": malformed row '" + line + "'");
    }
    if (user < 1 || user > out.users || rank < 1 || rank > out.creators) {
      throw InputError(where + ":" + std::to_string(line_no) + ": row '" + line +
                       "' outside declared " + std::to_string(out.users) + " users x " +
                       std::to_string(out.creators) + " creators");
    }
    out.edges.push_back({static_cast<UserId>(user - 1), rank});
  }
  return out;
}

void write_snapshot_file(const std::filesystem::path& path, const SnapshotFile& snapshot) {
  nlohmann::json header = snapshot.header.is_object() ? snapshot.header : nlohmann::json::object();
  header["format"] = kFormat;
  header["version"] = kVersion;
  header["creators"] = snapshot.creators;
  header["users"] = snapshot.users;

  std::vector<FollowEdge> edges = snapshot.edges;
  std::sort(edges.begin(), edges.end(), [](const FollowEdge& a, const FollowEdge& b) {
    return a.user != b.user ? a.user < b.user : a.rank < b.rank;
  });
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  std::ofstream out(path);
  if (!out) throw InputError("cannot write snapshot " + path.string());
  out << '#' << header.dump() << '\n' << "user,rank\n";
  for (const FollowEdge& e : edges) out << (e.user + 1) << ',' << e.rank << '\n';
}

}  // namespace fairrec
