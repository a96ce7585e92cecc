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

#include <deque>
#include <map>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "rundir/config.hpp"
#include "rundir/discovery.hpp"
#include "rundir/errors.hpp"
#include "rundir/fsview.hpp"

namespace rundir {

/// One reference-extraction rule: a regex with a single capture group plus
/// resolver templates turning the capture into candidate repo-relative
/// paths. `{}` inserts the capture verbatim, `{path}` inserts it with dots
/// rewritten to slashes (module-style references).
struct ScanRule {
  std::string pattern;
  std::vector<std::string> resolvers;
};

/// Extraction rules keyed by file extension (with the leading dot).
struct ScannerProfile {
  std::map<std::string, std::vector<ScanRule>> rules;
};

/// Transitive file set reachable from a set of entrypoints.
struct FileClosure {
  std::set<std::string> files;  // repo-root-relative generic paths
  std::set<std::string> roots;
  std::vector<std::string> warnings;  // unresolved references, never fatal
};

inline ScannerProfile default_scanner_profile() {
  ScannerProfile profile;
  profile.rules[".py"] = {
      {R"(^\s*import\s+([A-Za-z0-9_\.]+))", {"{path}.py", "{path}/__init__.py"}},
      {R"(^\s*from\s+([A-Za-z0-9_\.]+)\s+import)", {"{path}.py", "{path}/__init__.py"}},
  };
  profile.rules[".sh"] = {
      {R"((?:source|\.)\s+([A-Za-z0-9_\-\./]+))", {"{}"}},
  };
  return profile;
}

/// Profile file format:
///   rules:
///     .py:
///       - pattern: "..."
///         resolvers: ["{path}.py"]
inline ScannerProfile parse_scanner_profile(const std::string& text) {
  YAML::Node doc = detail::load_yaml(text);
  if (!doc.IsMap() || !doc["rules"]) {
    fail(Errc::malformed_yaml, "scanner profile must be a mapping with a 'rules' key");
  }
  ScannerProfile profile;
  for (const auto& item : doc["rules"]) {
    std::string ext = item.first.as<std::string>();
    if (!item.second.IsSequence()) {
      fail(Errc::malformed_yaml, "rules for '" + ext + "' must be a list");
    }
    for (const YAML::Node& rule_node : item.second) {
      ScanRule rule;
      rule.pattern = detail::scalar_field(rule_node, "pattern");
      if (!rule_node["resolvers"] || !rule_node["resolvers"].IsSequence()) {
        fail(Errc::missing_field, "resolvers");
      }
      rule.resolvers = rule_node["resolvers"].as<std::vector<std::string>>();
      profile.rules[ext].push_back(std::move(rule));
    }
  }
  return profile;
}

namespace detail {

inline std::string apply_resolver(const std::string& tmpl, const std::string& capture) {
  std::string dotted = capture;
  std::string slashed = capture;
  for (char& c : slashed) {
    if (c == '.') c = '/';
  }
  std::string out;
  for (std::size_t i = 0; i < tmpl.size();) {
    if (tmpl.compare(i, 6, "{path}") == 0) {
      out += slashed;
      i += 6;
    } else if (tmpl.compare(i, 2, "{}") == 0) {
      out += dotted;
      i += 2;
    } else {
      out += tmpl[i++];
    }
  }
  return out;
}

/// Root-relative paths of nested runnable directories (marker present,
/// strictly below the root). Their files ship in their own images and are
/// excluded from a parent closure unless explicitly used as entrypoints.
inline std::vector<std::string> nested_runnable_dirs(const FsView& view, const fs::path& root) {
  std::vector<std::string> out;
  std::vector<fs::path> stack = {root};
  while (!stack.empty()) {
    fs::path dir = stack.back();
    stack.pop_back();
    for (const fs::path& entry : view.list_dir(dir)) {
      if (!view.is_directory(entry) || hidden_name(entry) || view.is_symlink(entry)) {
        continue;
      }
      if (view.exists(entry / kMarkerFile)) {
        out.push_back(entry.lexically_relative(root).generic_string());
      } else {
        stack.push_back(entry);
      }
    }
  }
  return out;
}

inline bool under_any(const std::string& rel, const std::vector<std::string>& prefixes) {
  for (const std::string& prefix : prefixes) {
    if (path_prefix(prefix, rel)) {
      return true;
    }
  }
  return false;
}

}  // namespace detail

/// Least fixed point of the reference relation: starting from the
/// entrypoints, every file referenced (per profile rules) by an included
/// file is included, transitively. References that resolve to nothing are
/// warnings; cycles terminate because the set only grows.
inline FileClosure compute_file_closure(const fs::path& repo_root,
                                        const std::vector<std::string>& entrypoints,
                                        const ScannerProfile& profile,
                                        const FsView& view = RealFs()) {
  if (entrypoints.empty()) {
    fail(Errc::no_entrypoints, "at least one entrypoint is required");
  }
  fs::path root = repo_root.lexically_normal();

  std::map<std::string, std::vector<std::pair<std::regex, const ScanRule*>>> compiled;
  for (const auto& [ext, rules] : profile.rules) {
    for (const ScanRule& rule : rules) {
      try {
        compiled[ext].emplace_back(std::regex(rule.pattern), &rule);
      } catch (const std::regex_error& ex) {
        fail(Errc::invalid_value, "scanner pattern '" + rule.pattern + "': " + ex.what());
      }
    }
  }

  std::vector<std::string> nested = detail::nested_runnable_dirs(view, root);

  FileClosure closure;
  std::deque<std::string> queue;
  for (const std::string& entry : entrypoints) {
    std::string rel = fs::path(entry).lexically_normal().generic_string();
    if (!view.exists(root / rel) || view.is_directory(root / rel)) {
      fail(Errc::entrypoint_missing, entry);
    }
    closure.roots.insert(rel);
    if (closure.files.insert(rel).second) {
      queue.push_back(rel);
    }
  }

  while (!queue.empty()) {
    std::string rel = queue.front();
    queue.pop_front();
    std::string ext = fs::path(rel).extension().generic_string();
    auto rules = compiled.find(ext);
    if (rules == compiled.end()) {
      continue;
    }
    std::string content = view.read_file(root / rel);
    for (const auto& [re, rule] : rules->second) {
      for (std::sregex_iterator it(content.begin(), content.end(), re), end; it != end; ++it) {
        if (it->size() < 2) continue;
        std::string capture = (*it)[1].str();
        bool resolved = false;
        for (const std::string& tmpl : rule->resolvers) {
          std::string candidate =
              fs::path(detail::apply_resolver(tmpl, capture)).lexically_normal().generic_string();
          if (candidate.empty() || candidate == ".." || candidate.rfind("../", 0) == 0 ||
              candidate.front() == '/') {
            continue;  // outside the repo, never follow
          }
          if (detail::under_any(candidate, nested)) {
            resolved = true;  // nested directories ship their own image
            break;
          }
          if (view.exists(root / candidate) && !view.is_directory(root / candidate)) {
            resolved = true;
            if (closure.files.insert(candidate).second) {
              queue.push_back(candidate);
            }
            break;
          }
        }
        if (!resolved) {
          closure.warnings.push_back(rel + ": unresolved reference '" + capture + "'");
        }
      }
    }
  }
  return closure;
}

/// Emits the keep-only ignore document: exclude everything, then
/// re-include exactly the closure plus the always-keep set. Output is
/// byte-deterministic for identical inputs.
inline std::string emit_dockerignore(const FileClosure& closure,
                                     const std::set<std::string>& always_keep = {}) {
  std::set<std::string> keep = closure.files;
  keep.insert(always_keep.begin(), always_keep.end());
  std::string out = "*\n";
  for (const std::string& path : keep) {
    out += "!" + path + "\n";
  }
  return out;
}

}  // namespace rundir
