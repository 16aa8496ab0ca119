#pragma once

// Snapshot files: the binarized follow matrix used to seed a platform.
//
//   line 1   '#' followed by a one-line JSON header. Required keys:
//            "format": "fairrec-snapshot", "version": 1,
//            "creators": n, "users": m. Anything else is provenance.
//   line 2   the column header "user,rank"
//   rest     one "user,rank" row per follow; users are 1..m, ranks 1..n
//            (rank 1 = best quality). Rows are sorted by (user, rank).

#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairrec/model.hpp"

namespace fairrec {

struct SnapshotFile {
  std::size_t creators = 0;
  std::size_t users = 0;
  nlohmann::json header = nlohmann::json::object();
  std::vector<FollowEdge> edges;  // 0-based users in memory
};

// Throws InputError naming the file and line.
SnapshotFile read_snapshot_file(const std::filesystem::path& path);
void write_snapshot_file(const std::filesystem::path& path, const SnapshotFile& snapshot);

}  // namespace fairrec
