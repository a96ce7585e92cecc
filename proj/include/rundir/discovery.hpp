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
#include <map>
#include <string>
#include <vector>

#include "rundir/config.hpp"
#include "rundir/fsview.hpp"

namespace rundir {

/// One runnable directory. `path` is root-relative in generic form; the
/// tree root has the empty path. Children are the *nearest* runnable
/// descendants, ordered lexicographically by path.
struct DirNode {
  std::string path;
  RunnableDirConfig config;
  std::vector<DirNode> children;
};

struct DirTree {
  fs::path root_path;  // the directory discover() was pointed at
  DirNode root;
  std::map<std::string, std::string> index;  // dir_id -> root-relative path

  /// Absolute location of a node on the underlying filesystem.
  fs::path abs_path(const DirNode& node) const {
    return node.path.empty() ? root_path : root_path / node.path;
  }
};

namespace detail {

inline bool hidden_name(const fs::path& p) {
  std::string name = p.filename().string();
  return !name.empty() && name.front() == '.';
}

inline DirNode load_node(const FsView& view, const fs::path& abs_dir,
                         const std::string& rel);

/// Collects the nearest runnable descendants of `abs_dir`. A directory with
/// a marker becomes a child node and is not descended into here; anything
/// in between is ordinary filesystem structure and is traversed. Hidden
/// entries and symlinked directories are skipped.
inline void collect_children(const FsView& view, const fs::path& abs_dir,
                             const std::string& rel_prefix,
                             std::vector<DirNode>& out) {
  std::vector<fs::path> entries = view.list_dir(abs_dir);
  std::sort(entries.begin(), entries.end());
  for (const fs::path& entry : entries) {
    if (!view.is_directory(entry) || detail::hidden_name(entry) || view.is_symlink(entry)) {
      continue;
    }
    std::string rel = rel_prefix.empty()
                          ? entry.filename().generic_string()
                          : rel_prefix + "/" + entry.filename().generic_string();
    if (view.exists(entry / kMarkerFile)) {
      out.push_back(load_node(view, entry, rel));
    } else {
      collect_children(view, entry, rel, out);
    }
  }
}

inline DirNode load_node(const FsView& view, const fs::path& abs_dir,
                         const std::string& rel) {
  DirNode node;
  node.path = rel;
  try {
    node.config = parse_runnable_config(view.read_file(abs_dir / kMarkerFile));
  } catch (const Error& err) {
    // Re-throw with the offending path so the caller can tell which of
    // potentially many configs is broken.
    throw Error(err.code(), (rel.empty() ? std::string(".") : rel) + ": " + err.what());
  }
  collect_children(view, abs_dir, rel, node.children);
  std::sort(node.children.begin(), node.children.end(),
            [](const DirNode& a, const DirNode& b) { return a.path < b.path; });
  return node;
}

inline void index_tree(const DirNode& node, std::map<std::string, std::string>& index) {
  auto [it, inserted] = index.emplace(node.config.dir_id, node.path);
  if (!inserted) {
    fail(Errc::duplicate_dir_id, "dir_id '" + node.config.dir_id + "' used by both '" +
                                     (it->second.empty() ? "." : it->second) + "' and '" +
                                     (node.path.empty() ? "." : node.path) + "'");
  }
  for (const DirNode& child : node.children) {
    index_tree(child, index);
  }
}

/// Component-wise prefix test on root-relative generic paths.
inline bool path_prefix(const std::string& prefix, const std::string& path) {
  if (prefix.empty()) return true;
  if (path.size() < prefix.size()) return false;
  if (path.compare(0, prefix.size(), prefix) != 0) return false;
  return path.size() == prefix.size() || path[prefix.size()] == '/';
}

}  // namespace detail

/// Scans the tree under `root_path` and assembles the nesting structure of
/// every directory holding a marker file. The root itself must be runnable.
inline DirTree discover(const fs::path& root_path, const FsView& view) {
  if (!view.exists(root_path / kMarkerFile)) {
    fail(Errc::root_not_runnable, root_path.string() + " has no " + kMarkerFile);
  }
  DirTree tree;
  tree.root_path = root_path;
  tree.root = detail::load_node(view, root_path, "");
  detail::index_tree(tree.root, tree.index);
  return tree;
}

inline const DirNode* find_node(const DirTree& tree, const std::string& dir_id) {
  auto it = tree.index.find(dir_id);
  if (it == tree.index.end()) {
    return nullptr;
  }
  const DirNode* node = &tree.root;
  if (it->second.empty()) {
    return node;
  }
  // Walk down along the recorded path.
  for (;;) {
    const DirNode* next = nullptr;
    for (const DirNode& child : node->children) {
      if (detail::path_prefix(child.path, it->second)) {
        next = &child;
        break;
      }
    }
    if (next == nullptr) {
      return nullptr;
    }
    if (next->path == it->second) {
      return next;
    }
    node = next;
  }
}

/// The runnable directory responsible for `p`: the deepest node whose path
/// is a prefix of it. Accepts absolute paths under the tree root or
/// root-relative ones.
inline const DirNode& container_for(const DirTree& tree, const fs::path& p) {
  fs::path rel = p.is_absolute()
                     ? p.lexically_normal().lexically_relative(tree.root_path.lexically_normal())
                     : p;
  rel = rel.lexically_normal();
  std::string rel_str = rel.generic_string();
  if (rel_str == ".") {
    rel_str.clear();
  }
  if (rel.is_absolute() || rel_str == ".." || rel_str.rfind("../", 0) == 0) {
    fail(Errc::path_outside_tree, p.string() + " is not under " + tree.root_path.string());
  }

  const DirNode* best = &tree.root;
  for (;;) {
    const DirNode* deeper = nullptr;
    for (const DirNode& child : best->children) {
      if (detail::path_prefix(child.path, rel_str)) {
        deeper = &child;
        break;
      }
    }
    if (deeper == nullptr) {
      return *best;
    }
    best = deeper;
  }
}

}  // namespace rundir
