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

#include <cstdlib>
#include <ctime>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <unistd.h>

#include <yaml-cpp/yaml.h>

#include "rundir/errors.hpp"
#include "rundir/exec_backend.hpp"
#include "rundir/fsview.hpp"
#include "rundir/lifecycle.hpp"

namespace rundir {

/// Environment variable overriding the thin-environment location.
inline constexpr const char* kEnvPathEnv = "RUNDIR_ENV_PATH";

inline constexpr const char* kEnvManifestFile = "manifest.yaml";

struct Dependency {
  std::string name;
  std::string constraint;

  bool operator==(const Dependency&) const = default;
};

/// State of the shared thin environment: when it was created, the minimal
/// bootstrap dependency set, and every repository using it.
struct EnvManifest {
  std::string env_path;
  std::string created_at;  // ISO-8601 UTC
  std::vector<Dependency> dependencies;
  std::vector<std::string> consumers;

  bool operator==(const EnvManifest&) const = default;
};

/// Default thin-environment location: $RUNDIR_ENV_PATH, else ~/.rundir-env.
inline fs::path default_env_path() {
  if (const char* override_path = std::getenv(kEnvPathEnv); override_path && *override_path) {
    return override_path;
  }
  if (const char* home = std::getenv("HOME"); home && *home) {
    return fs::path(home) / ".rundir-env";
  }
  return fs::path(".rundir-env");
}

namespace detail {

inline std::string iso8601_utc_now() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline EnvManifest parse_env_manifest(const std::string& text) {
  YAML::Node doc = load_yaml(text);
  if (!doc.IsMap()) {
    fail(Errc::malformed_yaml, "environment manifest must be a mapping");
  }
  EnvManifest manifest;
  manifest.env_path = scalar_field(doc, "env_path");
  manifest.created_at = scalar_field(doc, "created_at");
  for (const YAML::Node& item : doc["dependencies"]) {
    manifest.dependencies.push_back(
        {scalar_field(item, "name"), scalar_field(item, "constraint")});
  }
  if (doc["consumers"]) {
    for (const YAML::Node& item : doc["consumers"]) {
      manifest.consumers.push_back(item.as<std::string>());
    }
  }
  return manifest;
}

inline std::string render_env_manifest(const EnvManifest& manifest) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "env_path" << YAML::Value << manifest.env_path;
  out << YAML::Key << "created_at" << YAML::Value << manifest.created_at;
  out << YAML::Key << "dependencies" << YAML::Value << YAML::BeginSeq;
  for (const Dependency& dep : manifest.dependencies) {
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << dep.name;
    out << YAML::Key << "constraint" << YAML::Value << dep.constraint;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "consumers" << YAML::Value << YAML::BeginSeq;
  for (const std::string& consumer : manifest.consumers) {
    out << consumer;
  }
  out << YAML::EndSeq;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

inline bool on_path(const std::string& binary) {
  const char* path = std::getenv("PATH");
  if (!path) return false;
  std::string remaining = path;
  std::size_t start = 0;
  while (start <= remaining.size()) {
    std::size_t end = remaining.find(':', start);
    std::string dir = remaining.substr(start, end == std::string::npos ? end : end - start);
    if (!dir.empty() && ::access((fs::path(dir) / binary).c_str(), X_OK) == 0) {
      return true;
    }
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return false;
}

/// Hook directory of a repository; understands both a .git directory and
/// a submodule-style `gitdir:` pointer file.
inline fs::path git_hook_dir(const fs::path& repo_root) {
  fs::path git = repo_root / ".git";
  if (fs::is_directory(git)) {
    return git / "hooks";
  }
  if (fs::is_regular_file(git)) {
    std::ifstream in(git);
    std::string line;
    std::getline(in, line);
    const std::string prefix = "gitdir:";
    if (line.rfind(prefix, 0) == 0) {
      std::string rest = line.substr(prefix.size());
      while (!rest.empty() && rest.front() == ' ') rest.erase(rest.begin());
      fs::path gitdir = rest;
      if (gitdir.is_relative()) {
        gitdir = repo_root / gitdir;
      }
      return gitdir.lexically_normal() / "hooks";
    }
  }
  fail(Errc::not_a_git_repo, repo_root.string() + " has no VCS metadata directory");
}

}  // namespace detail

/// Shell stub written as the pre-commit hook; delegates every policy
/// decision back to the CLI so hook logic ships with the tool.
inline constexpr const char* kHookScriptMarker = "# installed by rundir bootstrap";

inline std::string hook_script_text() {
  return std::string("#!/bin/sh\n") + kHookScriptMarker + "\nexec rundir hooks run \"$@\"\n";
}

/// Creates (or joins) the shared thin environment. Idempotent: a second
/// call for the same repo leaves the manifest unchanged; a call from a new
/// repo only appends a consumer. Git hooks are installed on every call.
inline EnvManifest bootstrap_thin_env(const fs::path& env_path, const fs::path& repo_root,
                                      std::ostream* diag = nullptr) {
  std::error_code ec;
  fs::create_directories(env_path, ec);
  if (ec || ::access(env_path.c_str(), W_OK) != 0) {
    fail(Errc::env_path_not_writable, env_path.string());
  }
  fs::path repo_abs = fs::absolute(repo_root).lexically_normal();
  fs::path hook_dir = detail::git_hook_dir(repo_abs);  // throws NotAGitRepo

  NodeLock lock(env_path / ".lock");

  EnvManifest manifest;
  fs::path manifest_path = env_path / kEnvManifestFile;
  if (fs::exists(manifest_path)) {
    manifest = detail::parse_env_manifest(RealFs().read_file(manifest_path));
  } else {
    manifest.env_path = fs::absolute(env_path).lexically_normal().string();
    manifest.created_at = detail::iso8601_utc_now();
    manifest.dependencies = {{container_cli_name(), "*"}, {"rundir", "*"}};
  }

  if (diag && !detail::on_path(container_cli_name())) {
    *diag << "warning: container CLI '" << container_cli_name()
          << "' not found on PATH; builds and runs will fail until it is installed\n";
  }

  std::string consumer = repo_abs.string();
  if (std::find(manifest.consumers.begin(), manifest.consumers.end(), consumer) ==
      manifest.consumers.end()) {
    manifest.consumers.push_back(consumer);
  }

  std::ofstream out(manifest_path, std::ios::trunc);
  out << detail::render_env_manifest(manifest);
  out.close();

  // Install the pre-commit hook, leaving foreign hook scripts alone.
  fs::create_directories(hook_dir);
  fs::path hook_path = hook_dir / "pre-commit";
  bool write_hook = true;
  if (fs::exists(hook_path)) {
    std::string current = RealFs().read_file(hook_path);
    if (current == hook_script_text()) {
      write_hook = false;
    } else if (current.find(kHookScriptMarker) == std::string::npos) {
      write_hook = false;
      if (diag) {
        *diag << "warning: " << hook_path.string()
              << " exists and was not installed by rundir; leaving it in place\n";
      }
    }
  }
  if (write_hook) {
    std::ofstream hook(hook_path, std::ios::trunc);
    hook << hook_script_text();
    hook.close();
    fs::permissions(hook_path,
                    fs::perms::owner_all | fs::perms::group_read | fs::perms::group_exec |
                        fs::perms::others_read | fs::perms::others_exec,
                    fs::perm_options::replace);
  }

  return manifest;
}

}  // namespace rundir
