// Copyright 2026 The Rundir Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>

#include "rundir/fsview.hpp"

namespace rundir::test {

namespace fs = std::filesystem;

/// Self-cleaning scratch directory for filesystem-backed tests.
class TempDir {
 public:
  TempDir() {
    static std::atomic<std::uint64_t> counter{0};
    path_ = fs::temp_directory_path() /
            ("rundir-test-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter.fetch_add(1)));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    // Links tests drop write bits; restore them so cleanup succeeds.
    for (auto it = fs::recursive_directory_iterator(
             path_, fs::directory_options::skip_permission_denied, ec);
         !ec && it != fs::recursive_directory_iterator(); it.increment(ec)) {
      std::error_code perm_ec;
      fs::permissions(it->path(), fs::perms::owner_write, fs::perm_options::add, perm_ec);
    }
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

inline void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

inline std::string marker_yaml(const std::string& dir_id, const std::string& image,
                               const std::string& extra = "") {
  std::string text = "dir_id: " + dir_id + "\nimage_name: " + image + "\n";
  return text + extra;
}

inline std::string changelog_yaml(const std::string& version = "1.2.0") {
  return "- version: " + version + "\n  date: 2026-01-15\n  note: current\n";
}

/// The three-directory layout from the architecture example: root A with
/// nested subdirectory B and submodule-style subdirectory C.
inline fs::path make_fig1_repo(const fs::path& base) {
  fs::path root = base / "A";
  write_file(root / "runnable_dir.yaml", marker_yaml("a", "app-a"));
  write_file(root / "devops" / "Dockerfile", "FROM scratch\n");
  write_file(root / "devops" / "changelog.yaml", changelog_yaml("1.0.0"));
  write_file(root / "docs" / "readme.md", "docs\n");

  write_file(root / "B" / "runnable_dir.yaml", marker_yaml("b", "app-b"));
  write_file(root / "B" / "devops" / "Dockerfile", "FROM scratch\n");
  write_file(root / "B" / "devops" / "changelog.yaml", changelog_yaml("2.1.0"));
  write_file(root / "B" / "src" / "x.py", "print('b')\n");

  write_file(root / "C" / "runnable_dir.yaml", marker_yaml("c", "app-c"));
  write_file(root / "C" / ".git", "gitdir: ../.git/modules/C\n");  // submodule-style
  write_file(root / "C" / "devops" / "Dockerfile", "FROM scratch\n");
  write_file(root / "C" / "devops" / "changelog.yaml", changelog_yaml("0.9.0"));
  return root;
}

/// In-memory twin of the same layout for discovery tests.
inline MemFs make_fig1_memfs(const std::string& root = "/repo/A") {
  MemFs mem;
  mem.add_file(root + "/runnable_dir.yaml", marker_yaml("a", "app-a"));
  mem.add_file(root + "/devops/Dockerfile", "FROM scratch\n");
  mem.add_file(root + "/devops/changelog.yaml", changelog_yaml("1.0.0"));
  mem.add_file(root + "/docs/readme.md", "docs\n");
  mem.add_file(root + "/C/runnable_dir.yaml", marker_yaml("c", "app-c"));
  mem.add_file(root + "/C/devops/Dockerfile", "FROM scratch\n");
  mem.add_file(root + "/C/devops/changelog.yaml", changelog_yaml("0.9.0"));
  mem.add_file(root + "/B/runnable_dir.yaml", marker_yaml("b", "app-b"));
  mem.add_file(root + "/B/devops/Dockerfile", "FROM scratch\n");
  mem.add_file(root + "/B/devops/changelog.yaml", changelog_yaml("2.1.0"));
  mem.add_file(root + "/B/src/x.py", "print('b')\n");
  return mem;
}

}  // namespace rundir::test
