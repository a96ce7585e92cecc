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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rundir/errors.hpp"

namespace rundir {

namespace fs = std::filesystem;

namespace detail {

/// Lexical containment test; expects both paths normalized.
inline bool path_in(const fs::path& base, const fs::path& p) {
  auto pi = p.begin();
  for (const fs::path& part : base) {
    if (part == ".") continue;
    if (pi == p.end() || *pi != part) return false;
    ++pi;
  }
  return true;
}

}  // namespace detail

/// Read-only view of a directory tree. Discovery and the fake container
/// backend go through this interface so tests can run against in-memory
/// fixtures instead of the disk.
class FsView {
 public:
  virtual ~FsView() = default;

  virtual bool exists(const fs::path& p) const = 0;
  virtual bool is_directory(const fs::path& p) const = 0;
  virtual bool is_symlink(const fs::path& p) const = 0;
  /// Immediate children of a directory, in no particular order.
  virtual std::vector<fs::path> list_dir(const fs::path& p) const = 0;
  virtual std::string read_file(const fs::path& p) const = 0;
  /// True when paths refer to the real filesystem (lock files apply).
  virtual bool physical() const = 0;
};

class RealFs final : public FsView {
 public:
  bool exists(const fs::path& p) const override {
    std::error_code ec;
    return fs::exists(p, ec);
  }
  bool is_directory(const fs::path& p) const override {
    std::error_code ec;
    return fs::is_directory(p, ec);
  }
  bool is_symlink(const fs::path& p) const override {
    std::error_code ec;
    return fs::is_symlink(p, ec);
  }
  std::vector<fs::path> list_dir(const fs::path& p) const override {
    std::vector<fs::path> out;
    std::error_code ec;
    for (fs::directory_iterator it(p, ec); !ec && it != fs::directory_iterator(); it.increment(ec)) {
      out.push_back(it->path());
    }
    return out;
  }
  std::string read_file(const fs::path& p) const override {
    std::ifstream in(p, std::ios::binary);
    if (!in) {
      fail(Errc::invalid_value, "cannot read file: " + p.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  }
  bool physical() const override { return true; }
};

/// In-memory fixture filesystem. Paths are normalized to generic form, so
/// "/repo/a/../b" and "/repo/b" name the same entry. Directory listings
/// come back in insertion order, which lets tests check that callers do
/// not depend on enumeration order.
class MemFs final : public FsView {
 public:
  void add_dir(const fs::path& p) {
    fs::path cur;
    for (const auto& part : normalize(p)) {
      fs::path parent = cur;
      cur /= part;
      dirs_.insert(key(cur));
      note_child(parent, cur);
    }
  }

  void add_file(const fs::path& p, std::string content) {
    fs::path norm = normalize(p);
    add_dir(norm.parent_path());
    files_[key(norm)] = std::move(content);
    note_child(norm.parent_path(), norm);
  }

  void add_symlink_dir(const fs::path& p) {
    add_dir(p);
    symlinks_.insert(key(normalize(p)));
  }

  bool exists(const fs::path& p) const override {
    std::string k = key(normalize(p));
    return files_.count(k) > 0 || dirs_.count(k) > 0;
  }
  bool is_directory(const fs::path& p) const override {
    return dirs_.count(key(normalize(p))) > 0;
  }
  bool is_symlink(const fs::path& p) const override {
    return symlinks_.count(key(normalize(p))) > 0;
  }
  std::vector<fs::path> list_dir(const fs::path& p) const override {
    auto it = children_.find(key(normalize(p)));
    if (it == children_.end()) {
      return {};
    }
    std::vector<fs::path> out;
    for (const auto& child : it->second) {
      out.emplace_back(child);
    }
    return out;
  }
  std::string read_file(const fs::path& p) const override {
    auto it = files_.find(key(normalize(p)));
    if (it == files_.end()) {
      fail(Errc::invalid_value, "cannot read file: " + p.string());
    }
    return it->second;
  }
  bool physical() const override { return false; }

 private:
  static fs::path normalize(const fs::path& p) { return p.lexically_normal(); }
  static std::string key(const fs::path& p) { return p.generic_string(); }

  void note_child(const fs::path& parent, const fs::path& child) {
    std::string pk = key(parent);
    std::string ck = key(child);
    if (ck.empty() || ck == pk) {
      return;
    }
    auto& list = children_[pk];
    if (std::find(list.begin(), list.end(), ck) == list.end()) {
      list.push_back(ck);
    }
  }

  std::set<std::string> dirs_;
  std::set<std::string> symlinks_;
  std::map<std::string, std::string> files_;
  std::map<std::string, std::vector<std::string>> children_;
};

/// All regular files under `base`, as sorted base-relative generic paths.
inline std::vector<std::string> walk_files(const FsView& view, const fs::path& base) {
  std::vector<std::string> out;
  std::vector<fs::path> stack = {base};
  while (!stack.empty()) {
    fs::path dir = stack.back();
    stack.pop_back();
    for (const fs::path& entry : view.list_dir(dir)) {
      if (view.is_directory(entry)) {
        stack.push_back(entry);
      } else {
        out.push_back(entry.lexically_relative(base).generic_string());
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace rundir
