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

#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "rundir/config.hpp"
#include "rundir/errors.hpp"
#include "rundir/fsview.hpp"

namespace rundir {

/// Manifest file inside the helpers directory naming every farmed link.
inline constexpr const char* kLinkManifestFile = "links.yaml";

struct LinkEntry {
  std::string source;  // path inside the helpers directory
  std::string target;  // repo-root-relative path of the link
};

struct LinkManifest {
  std::vector<LinkEntry> links;
};

struct LinkConflict {
  std::string target;
  std::string reason;
};

struct LinkReport {
  int created = 0;
  int repaired = 0;
  int unchanged = 0;
  std::vector<LinkConflict> conflicts;
};

/// Parses links.yaml: `links: [{source: ..., target: ...}, ...]`.
inline LinkManifest parse_link_manifest(const std::string& text) {
  YAML::Node doc = detail::load_yaml(text);
  if (!doc.IsMap() || !doc["links"]) {
    fail(Errc::malformed_yaml, "link manifest must be a mapping with a 'links' list");
  }
  const YAML::Node list = doc["links"];
  if (!list.IsSequence()) {
    fail(Errc::malformed_yaml, "'links' must be a list");
  }
  LinkManifest manifest;
  for (const YAML::Node& item : list) {
    LinkEntry entry;
    entry.source = detail::scalar_field(item, "source");
    entry.target = detail::scalar_field(item, "target");
    manifest.links.push_back(std::move(entry));
  }
  return manifest;
}

namespace detail {

inline bool escapes_root(const std::string& rel) {
  fs::path norm = fs::path(rel).lexically_normal();
  if (norm.is_absolute()) return true;
  std::string s = norm.generic_string();
  return s == ".." || s.rfind("../", 0) == 0;
}

inline void clear_write_bits(const fs::path& p) {
  std::error_code ec;
  fs::permissions(p,
                  fs::perms::owner_write | fs::perms::group_write | fs::perms::others_write,
                  fs::perm_options::remove, ec);
  // Unsupported on some filesystems; the link itself is still correct.
}

}  // namespace detail

/// Materializes the read-only symlink farm: every manifest target becomes
/// a symlink to its canonical file under helpers. Running it again on an
/// untouched repo reports everything unchanged.
inline LinkReport sync_links(const fs::path& helpers_root, const fs::path& repo_root,
                             const LinkManifest& manifest, bool repair = false) {
  fs::path helpers_abs = fs::absolute(helpers_root).lexically_normal();
  fs::path repo_abs = fs::absolute(repo_root).lexically_normal();
  if (!fs::is_directory(helpers_abs)) {
    fail(Errc::source_missing, "helpers root does not exist: " + helpers_root.string());
  }
  if (!detail::path_in(repo_abs, helpers_abs)) {
    fail(Errc::invalid_value, "helpers root must live under the repo root");
  }

  // Validate the whole manifest before touching anything.
  for (const LinkEntry& entry : manifest.links) {
    if (!fs::exists(helpers_abs / entry.source)) {
      fail(Errc::source_missing, entry.source);
    }
    if (detail::escapes_root(entry.target)) {
      fail(Errc::target_escapes_repo, entry.target);
    }
  }

  LinkReport report;
  for (const LinkEntry& entry : manifest.links) {
    fs::path source = helpers_abs / entry.source;
    fs::path target = (repo_abs / entry.target).lexically_normal();
    fs::path link_value = source.lexically_relative(target.parent_path());

    detail::clear_write_bits(source);

    std::error_code ec;
    fs::file_status status = fs::symlink_status(target, ec);
    if (fs::exists(status)) {
      if (fs::is_symlink(status)) {
        fs::path current = fs::read_symlink(target, ec);
        fs::path resolved = (target.parent_path() / current).lexically_normal();
        if (!ec && (current == link_value || resolved == source)) {
          ++report.unchanged;
          continue;
        }
        if (!repair) {
          report.conflicts.push_back({entry.target, "symlink points elsewhere"});
          continue;
        }
        fs::remove(target);
        fs::create_symlink(link_value, target);
        ++report.repaired;
      } else {
        if (!repair) {
          report.conflicts.push_back({entry.target, "existing file is not a symlink"});
          continue;
        }
        fs::remove_all(target);
        fs::create_symlink(link_value, target);
        ++report.repaired;
      }
    } else {
      fs::create_directories(target.parent_path());
      fs::create_symlink(link_value, target);
      ++report.created;
    }
  }
  return report;
}

}  // namespace rundir
