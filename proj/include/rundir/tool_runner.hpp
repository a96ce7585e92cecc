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

#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "rundir/backend.hpp"
#include "rundir/config.hpp"
#include "rundir/errors.hpp"
#include "rundir/semver.hpp"

namespace rundir {

/// An occasional tool packaged in a slim versioned image instead of being
/// installed into every development container.
struct ToolSpec {
  std::string tool_name;
  SemVer version;
  fs::path recipe;  // build recipe; the context is its parent directory
  std::vector<std::string> default_command;

  std::string image_tag() const {
    return "tool-" + tool_name + ":" + version.str();
  }
};

/// Builds tool images on first use and runs them in short-lived
/// containers with the repository mounted. The cache key is
/// (tool_name, version): bumping the version rebuilds, editing the
/// context without a bump does not.
class ToolRunner {
 public:
  explicit ToolRunner(ContainerBackend& backend) : backend_(backend) {}

  RunResult run(const ToolSpec& spec, const std::vector<std::string>& argv,
                const fs::path& repo_root,
                ContainerMode mode = ContainerMode::sibling) {
    if (!detail::valid_identifier(spec.tool_name)) {
      fail(Errc::invalid_value, "tool name must match [a-z0-9_-]+, got '" + spec.tool_name + "'");
    }
    const std::string tag = spec.image_tag();
    ensure_image(spec, tag);

    ContainerSpec container;
    container.image = tag;
    container.command = argv.empty() ? spec.default_command : argv;
    if (container.command.empty()) {
      container.command = {spec.tool_name};
    }
    container.mounts.push_back({fs::absolute(repo_root).string(), "/workspace", false});
    container.workdir = "/workspace";
    container.mode = mode;
    container.remove_after_exit = true;
    return backend_.run_container(container);
  }

 private:
  /// Builds at most once per (name, version), even under concurrent calls.
  void ensure_image(const ToolSpec& spec, const std::string& tag) {
    std::shared_ptr<std::mutex> tool_mu;
    {
      std::lock_guard lock(mu_);
      auto& slot = tool_locks_[tag];
      if (!slot) {
        slot = std::make_shared<std::mutex>();
      }
      tool_mu = slot;
    }
    std::lock_guard tool_lock(*tool_mu);
    {
      std::lock_guard lock(mu_);
      if (built_.count(tag) > 0) {
        return;
      }
    }
    if (!backend_.image_exists(tag)) {
      BuildRequest request;
      request.context = spec.recipe.parent_path().string();
      request.recipe = spec.recipe.string();
      request.tag = tag;
      backend_.build_image(request);
    }
    std::lock_guard lock(mu_);
    built_.insert(tag);
  }

  ContainerBackend& backend_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<std::mutex>> tool_locks_;
  std::set<std::string> built_;
};

}  // namespace rundir
