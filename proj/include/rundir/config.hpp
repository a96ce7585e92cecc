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

#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "rundir/errors.hpp"
#include "rundir/semver.hpp"

namespace rundir {

/// Marker file that makes a directory runnable. Its presence is the sole
/// discovery predicate; its content is the directory's configuration.
inline constexpr const char* kMarkerFile = "runnable_dir.yaml";

/// Changelog file expected inside a directory's build context.
inline constexpr const char* kChangelogFile = "changelog.yaml";

/// Build recipe file expected inside a directory's build context.
inline constexpr const char* kRecipeFile = "Dockerfile";

enum class ContainerMode { child, sibling };

inline std::string container_mode_name(ContainerMode mode) {
  return mode == ContainerMode::child ? "child" : "sibling";
}

inline ContainerMode parse_container_mode(const std::string& text) {
  if (text == "child") return ContainerMode::child;
  if (text == "sibling") return ContainerMode::sibling;
  fail(Errc::invalid_value, "container_mode must be 'child' or 'sibling', got '" + text + "'");
}

enum class Stage { local, dev, prod };

inline std::string stage_name(Stage stage) {
  switch (stage) {
    case Stage::local: return "local";
    case Stage::dev: return "dev";
    case Stage::prod: return "prod";
  }
  return "dev";
}

inline Stage parse_stage(const std::string& text) {
  if (text == "local") return Stage::local;
  if (text == "dev") return Stage::dev;
  if (text == "prod") return Stage::prod;
  fail(Errc::invalid_value, "stage must be local, dev or prod, got '" + text + "'");
}

/// Remote storage coordinates. Parsed and validated only; nothing in this
/// artifact ever contacts the bucket.
struct StorageRef {
  std::string bucket;
  std::string prefix;

  bool operator==(const StorageRef&) const = default;
};

struct RunnableDirConfig {
  std::string dir_id;
  std::string image_name;
  std::optional<std::string> registry;
  std::string test_command = "pytest";
  ContainerMode container_mode = ContainerMode::sibling;
  std::optional<StorageRef> storage;
  std::string build_context = "devops";
  /// Unknown keys, preserved as their YAML dump so a render round-trips.
  std::map<std::string, std::string> extras;

  bool operator==(const RunnableDirConfig&) const = default;
};

struct ChangelogEntry {
  SemVer version;
  std::string date;  // ISO-8601 calendar date
  std::string note;

  bool operator==(const ChangelogEntry&) const = default;
};

/// Version history of one directory's image, newest entry first.
struct Changelog {
  std::vector<ChangelogEntry> entries;

  const SemVer& latest() const { return entries.front().version; }

  bool operator==(const Changelog&) const = default;
};

/// Fully resolved image identity. `tag()` renders the canonical tag text.
struct ImageRef {
  std::string name;
  Stage stage = Stage::dev;
  SemVer version;
  std::optional<std::string> user;   // present iff stage == local
  std::optional<std::string> registry;

  bool operator==(const ImageRef&) const = default;

  /// local:    <name>:local-<user>-<version>       (never registry-qualified)
  /// dev/prod: [<registry>/]<name>:<stage>-<version>
  std::string tag() const {
    if (stage == Stage::local) {
      return name + ":local-" + user.value_or("") + "-" + version.str();
    }
    std::string prefix = registry ? *registry + "/" : "";
    return prefix + name + ":" + stage_name(stage) + "-" + version.str();
  }
};

namespace detail {

inline bool valid_identifier(const std::string& text) {
  if (text.empty()) return false;
  for (char c : text) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

inline bool valid_iso_date(const std::string& text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) return false;
  }
  return true;
}

/// Relative, and no component may climb out of the directory.
inline bool valid_build_context(const std::string& text) {
  if (text.empty() || text.front() == '/') return false;
  std::string part;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == '/') {
      if (part == "..") return false;
      part.clear();
    } else {
      part += text[i];
    }
  }
  return true;
}

inline std::string scalar_field(const YAML::Node& node, const std::string& key) {
  const YAML::Node value = node[key];
  if (!value || value.IsNull()) {
    fail(Errc::missing_field, key);
  }
  if (!value.IsScalar()) {
    fail(Errc::invalid_value, key + " must be a scalar");
  }
  return value.as<std::string>();
}

inline YAML::Node load_yaml(const std::string& text) {
  try {
    return YAML::Load(text);
  } catch (const YAML::Exception& ex) {
    fail(Errc::malformed_yaml, ex.what());
  }
}

}  // namespace detail

/// Parses a runnable_dir.yaml document. Absent optional fields take their
/// defaults; unknown fields are kept verbatim in `extras`.
inline RunnableDirConfig parse_runnable_config(const std::string& text) {
  YAML::Node doc = detail::load_yaml(text);
  if (!doc.IsMap()) {
    fail(Errc::malformed_yaml, "runnable directory config must be a YAML mapping");
  }

  RunnableDirConfig config;
  config.dir_id = detail::scalar_field(doc, "dir_id");
  if (!detail::valid_identifier(config.dir_id)) {
    fail(Errc::invalid_value, "dir_id must match [a-z0-9_-]+, got '" + config.dir_id + "'");
  }
  config.image_name = detail::scalar_field(doc, "image_name");

  for (const auto& item : doc) {
    const std::string key = item.first.as<std::string>();
    const YAML::Node value = item.second;
    if (key == "dir_id" || key == "image_name") {
      continue;
    } else if (key == "registry") {
      if (!value.IsScalar()) fail(Errc::invalid_value, "registry must be a scalar");
      config.registry = value.as<std::string>();
    } else if (key == "test_command") {
      if (!value.IsScalar()) fail(Errc::invalid_value, "test_command must be a scalar");
      config.test_command = value.as<std::string>();
      if (config.test_command.empty()) {
        fail(Errc::invalid_value, "test_command must not be empty");
      }
    } else if (key == "container_mode") {
      if (!value.IsScalar()) fail(Errc::invalid_value, "container_mode must be a scalar");
      config.container_mode = parse_container_mode(value.as<std::string>());
    } else if (key == "storage") {
      if (!value.IsMap()) fail(Errc::invalid_value, "storage must be a mapping");
      StorageRef storage;
      storage.bucket = detail::scalar_field(value, "bucket");
      if (storage.bucket.empty()) fail(Errc::invalid_value, "storage.bucket must not be empty");
      storage.prefix = detail::scalar_field(value, "prefix");
      config.storage = storage;
    } else if (key == "build_context") {
      if (!value.IsScalar()) fail(Errc::invalid_value, "build_context must be a scalar");
      config.build_context = value.as<std::string>();
      if (!detail::valid_build_context(config.build_context)) {
        fail(Errc::invalid_value,
             "build_context must be a relative path without '..' segments, got '" +
                 config.build_context + "'");
      }
    } else {
      // Accepted and preserved, not interpreted.
      config.extras[key] = YAML::Dump(value);
    }
  }
  return config;
}

/// Renders a config back to YAML. parse_runnable_config(render(c)) == c.
inline std::string render_runnable_config(const RunnableDirConfig& config) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "dir_id" << YAML::Value << config.dir_id;
  out << YAML::Key << "image_name" << YAML::Value << config.image_name;
  if (config.registry) {
    out << YAML::Key << "registry" << YAML::Value << *config.registry;
  }
  out << YAML::Key << "test_command" << YAML::Value << config.test_command;
  out << YAML::Key << "container_mode" << YAML::Value
      << container_mode_name(config.container_mode);
  if (config.storage) {
    out << YAML::Key << "storage" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "bucket" << YAML::Value << config.storage->bucket;
    out << YAML::Key << "prefix" << YAML::Value << config.storage->prefix;
    out << YAML::EndMap;
  }
  out << YAML::Key << "build_context" << YAML::Value << config.build_context;
  for (const auto& [key, dump] : config.extras) {
    out << YAML::Key << key << YAML::Value << YAML::Load(dump);
  }
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

/// Parses a changelog document: a YAML list of {version, date, note},
/// newest first, versions strictly decreasing.
inline Changelog parse_changelog(const std::string& text) {
  YAML::Node doc = detail::load_yaml(text);
  if (!doc || doc.IsNull() || (doc.IsSequence() && doc.size() == 0)) {
    fail(Errc::empty_changelog, "changelog has no entries");
  }
  if (!doc.IsSequence()) {
    fail(Errc::malformed_yaml, "changelog must be a YAML list");
  }

  Changelog log;
  for (const YAML::Node& item : doc) {
    if (!item.IsMap()) {
      fail(Errc::malformed_yaml, "changelog entry must be a mapping");
    }
    ChangelogEntry entry;
    entry.version = parse_semver(detail::scalar_field(item, "version"));
    entry.date = detail::scalar_field(item, "date");
    if (!detail::valid_iso_date(entry.date)) {
      fail(Errc::invalid_value, "changelog date must be YYYY-MM-DD, got '" + entry.date + "'");
    }
    if (item["note"]) {
      entry.note = item["note"].as<std::string>();
    }
    log.entries.push_back(std::move(entry));
  }
  for (std::size_t i = 1; i < log.entries.size(); ++i) {
    if (!(log.entries[i].version < log.entries[i - 1].version)) {
      fail(Errc::non_monotonic_versions,
           log.entries[i].version.str() + " does not decrease after " +
               log.entries[i - 1].version.str());
    }
  }
  return log;
}

inline std::string render_changelog(const Changelog& log) {
  YAML::Emitter out;
  out << YAML::BeginSeq;
  for (const ChangelogEntry& entry : log.entries) {
    out << YAML::BeginMap;
    out << YAML::Key << "version" << YAML::Value << entry.version.str();
    out << YAML::Key << "date" << YAML::Value << entry.date;
    out << YAML::Key << "note" << YAML::Value << entry.note;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  return std::string(out.c_str()) + "\n";
}

/// Resolves the image identity for one directory at one stage. The version
/// is always the changelog head; local images carry the building user.
inline ImageRef resolve_image_tag(const RunnableDirConfig& config,
                                  const Changelog& changelog, Stage stage,
                                  const std::optional<std::string>& user = std::nullopt) {
  if (stage == Stage::local && !user) {
    fail(Errc::stage_user_mismatch, "local stage requires a user");
  }
  if (stage != Stage::local && user) {
    fail(Errc::stage_user_mismatch, "user is only valid for the local stage");
  }
  if (user) {
    for (char c : *user) {
      bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
      if (!ok) {
        fail(Errc::invalid_value, "user '" + *user + "' is not tag-safe");
      }
    }
    if (user->empty()) {
      fail(Errc::invalid_value, "user must not be empty");
    }
  }

  ImageRef ref;
  ref.name = config.image_name;
  ref.stage = stage;
  ref.version = changelog.latest();
  ref.user = user;
  ref.registry = config.registry;
  return ref;
}

}  // namespace rundir
