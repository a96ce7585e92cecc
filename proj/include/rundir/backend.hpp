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

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "rundir/config.hpp"
#include "rundir/errors.hpp"
#include "rundir/fsview.hpp"

namespace rundir {

struct MountSpec {
  std::string host_path;       // absolute
  std::string container_path;
  bool read_only = false;
};

/// One container invocation request. `image` is the rendered tag; the
/// backend does not care how it was derived.
struct ContainerSpec {
  std::string image;
  std::vector<std::string> command;
  std::vector<MountSpec> mounts;
  std::map<std::string, std::string> env;
  std::string workdir;
  ContainerMode mode = ContainerMode::sibling;
  bool remove_after_exit = false;
};

struct RunResult {
  int exit_code = 0;
  std::string stdout_text;
  std::string stderr_text;
  std::int64_t duration_ms = 0;
};

struct BuildRequest {
  std::string context;   // build context directory
  std::string recipe;    // recipe file, must live inside the context
  std::string tag;
  /// Requested target architecture. Recorded as metadata; no backend
  /// performs cross-architecture emulation.
  std::optional<std::string> arch;
};

enum class EventKind { build, run, retag, remove };

inline std::string event_kind_name(EventKind kind) {
  switch (kind) {
    case EventKind::build: return "build";
    case EventKind::run: return "run";
    case EventKind::retag: return "retag";
    case EventKind::remove: return "remove";
  }
  return "unknown";
}

/// Observation record emitted by the fake backend: the request as issued
/// plus a per-backend monotone sequence number.
struct BackendEvent {
  EventKind kind;
  nlohmann::json payload;
  std::uint64_t sequence = 0;
};

inline void validate_container_spec(const ContainerSpec& spec) {
  if (spec.command.empty()) {
    fail(Errc::invalid_value, "container command must not be empty");
  }
  for (const MountSpec& mount : spec.mounts) {
    if (mount.host_path.empty() || mount.host_path.front() != '/') {
      fail(Errc::invalid_value, "mount host path must be absolute: " + mount.host_path);
    }
  }
}

/// Everything the rest of the system needs from a container runtime.
/// Implementations must tolerate concurrent calls.
class ContainerBackend {
 public:
  virtual ~ContainerBackend() = default;

  /// Builds `request.tag` from the given context and recipe; returns the
  /// image digest.
  virtual std::string build_image(const BuildRequest& request) = 0;

  virtual RunResult run_container(const ContainerSpec& spec) = 0;

  /// Makes `dst` an alias of `src`. Never builds anything.
  virtual void retag(const std::string& src, const std::string& dst) = 0;

  virtual void remove_container(const std::string& name) = 0;

  virtual bool image_exists(const std::string& tag) const = 0;
};

namespace detail {

inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL) {
  std::uint64_t hash = seed;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

inline std::string hex64(std::uint64_t value) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[value & 0xf];
    value >>= 4;
  }
  return out;
}

/// Splits a configured command string into an argument vector. Quotes
/// group words; backslash escapes the next character outside single
/// quotes. No variable expansion or redirection.
inline std::vector<std::string> split_command(const std::string& text) {
  std::vector<std::string> out;
  std::string current;
  bool in_word = false;
  char quote = '\0';
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quote == '\'') {
      if (c == '\'') {
        quote = '\0';
      } else {
        current += c;
      }
    } else if (c == '\\' && i + 1 < text.size()) {
      current += text[++i];
      in_word = true;
    } else if (quote == '"') {
      if (c == '"') {
        quote = '\0';
      } else {
        current += c;
      }
    } else if (c == '\'' || c == '"') {
      quote = c;
      in_word = true;
    } else if (c == ' ' || c == '\t') {
      if (in_word || !current.empty()) {
        out.push_back(current);
        current.clear();
        in_word = false;
      }
    } else {
      current += c;
    }
  }
  if (in_word || !current.empty()) {
    out.push_back(current);
  }
  return out;
}

inline nlohmann::json spec_payload(const ContainerSpec& spec) {
  nlohmann::json mounts = nlohmann::json::array();
  for (const MountSpec& m : spec.mounts) {
    mounts.push_back({{"host", m.host_path}, {"container", m.container_path}, {"read_only", m.read_only}});
  }
  nlohmann::json payload = {
      {"image", spec.image},
      {"command", spec.command},
      {"mounts", mounts},
      {"env", spec.env},
      {"workdir", spec.workdir},
      {"mode", container_mode_name(spec.mode)},
      {"remove_after_exit", spec.remove_after_exit},
  };
  if (spec.mode == ContainerMode::sibling) {
    payload["shares_host_socket"] = true;
  } else {
    payload["nested_daemon"] = true;
  }
  return payload;
}

}  // namespace detail

/// Deterministic in-memory runtime. Records every accepted request as a
/// BackendEvent; digests derive from the context file listing, the recipe
/// text and the tag, so identical builds yield identical digests. Tests
/// script failures and run outcomes per tag.
class FakeBackend final : public ContainerBackend {
 public:
  /// Build contexts are listed through `view`; defaults to the real disk.
  explicit FakeBackend(const FsView* view = nullptr) : view_(view) {}

  // --- scripting seams -----------------------------------------------

  void register_image(const std::string& tag, const std::string& digest = "") {
    std::lock_guard lock(mu_);
    images_[tag] = digest.empty() ? "fake:" + detail::hex64(detail::fnv1a64(tag)) : digest;
  }

  void fail_build(const std::string& tag, const std::string& message) {
    std::lock_guard lock(mu_);
    build_failures_[tag] = message;
  }

  void script_run(const std::string& tag, RunResult result) {
    if (result.exit_code < 0 || result.exit_code > 255) {
      fail(Errc::invalid_value, "scripted exit code out of range");
    }
    std::lock_guard lock(mu_);
    scripted_runs_[tag] = std::move(result);
  }

  void set_unavailable(bool value) {
    std::lock_guard lock(mu_);
    unavailable_ = value;
  }

  // --- inspection seams ----------------------------------------------

  std::vector<BackendEvent> events() const {
    std::lock_guard lock(mu_);
    return events_;
  }

  std::size_t count_events(EventKind kind) const {
    std::lock_guard lock(mu_);
    std::size_t n = 0;
    for (const BackendEvent& event : events_) {
      if (event.kind == kind) ++n;
    }
    return n;
  }

  std::vector<std::string> live_containers() const {
    std::lock_guard lock(mu_);
    return {live_.begin(), live_.end()};
  }

  std::string digest_of(const std::string& tag) const {
    std::lock_guard lock(mu_);
    auto it = images_.find(tag);
    if (it == images_.end()) {
      fail(Errc::image_missing, tag);
    }
    return it->second;
  }

  // --- ContainerBackend ----------------------------------------------

  std::string build_image(const BuildRequest& request) override {
    const FsView& view = this->view();
    if (!view.is_directory(request.context)) {
      fail(Errc::context_missing, "build context does not exist: " + request.context);
    }
    fs::path recipe = fs::path(request.recipe).lexically_normal();
    fs::path context = fs::path(request.context).lexically_normal();
    if (!detail::path_in(context, recipe) || !view.exists(recipe)) {
      fail(Errc::context_missing, "recipe " + request.recipe + " is not inside " + request.context);
    }

    std::string listing;
    for (const std::string& file : walk_files(view, context)) {
      listing += file;
      listing += '\n';
    }
    std::string recipe_text = view.read_file(recipe);

    std::lock_guard lock(mu_);
    check_available();
    nlohmann::json payload = {{"context", request.context},
                              {"recipe", request.recipe},
                              {"tag", request.tag}};
    if (request.arch) {
      payload["arch"] = *request.arch;
    }
    append_event(EventKind::build, payload);
    auto failure = build_failures_.find(request.tag);
    if (failure != build_failures_.end()) {
      fail(Errc::build_failed, failure->second);
    }

    std::uint64_t hash = detail::fnv1a64(listing);
    hash = detail::fnv1a64("\x1f", hash);
    hash = detail::fnv1a64(recipe_text, hash);
    hash = detail::fnv1a64("\x1f", hash);
    hash = detail::fnv1a64(request.tag, hash);
    std::string digest = "fake:" + detail::hex64(hash);
    images_[request.tag] = digest;
    return digest;
  }

  RunResult run_container(const ContainerSpec& spec) override {
    validate_container_spec(spec);
    std::lock_guard lock(mu_);
    check_available();
    if (images_.find(spec.image) == images_.end()) {
      fail(Errc::image_missing, spec.image);
    }
    nlohmann::json payload = detail::spec_payload(spec);
    std::string name = "fake-" + std::to_string(next_container_++);
    payload["container"] = name;
    append_event(EventKind::run, payload);
    if (!spec.remove_after_exit) {
      live_.insert(name);
    }
    auto scripted = scripted_runs_.find(spec.image);
    if (scripted != scripted_runs_.end()) {
      return scripted->second;
    }
    return RunResult{};
  }

  void retag(const std::string& src, const std::string& dst) override {
    std::lock_guard lock(mu_);
    check_available();
    auto it = images_.find(src);
    if (it == images_.end()) {
      fail(Errc::image_missing, src);
    }
    append_event(EventKind::retag, {{"src", src}, {"dst", dst}});
    images_[dst] = it->second;
  }

  void remove_container(const std::string& name) override {
    std::lock_guard lock(mu_);
    check_available();
    append_event(EventKind::remove, {{"container", name}});
    live_.erase(name);
  }

  bool image_exists(const std::string& tag) const override {
    std::lock_guard lock(mu_);
    return images_.find(tag) != images_.end();
  }

 private:
  const FsView& view() const { return view_ ? *view_ : default_view_; }

  void check_available() const {
    if (unavailable_) {
      fail(Errc::runtime_unavailable, "container runtime is unavailable");
    }
  }

  void append_event(EventKind kind, nlohmann::json payload) {
    events_.push_back(BackendEvent{kind, std::move(payload), next_sequence_++});
  }

  const FsView* view_;
  RealFs default_view_;
  mutable std::mutex mu_;
  std::vector<BackendEvent> events_;
  std::map<std::string, std::string> images_;
  std::set<std::string> live_;
  std::map<std::string, std::string> build_failures_;
  std::map<std::string, RunResult> scripted_runs_;
  bool unavailable_ = false;
  std::uint64_t next_sequence_ = 1;
  std::uint64_t next_container_ = 1;
};

}  // namespace rundir
