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
#include <string>
#include <vector>

#include "rundir/backend.hpp"
#include "rundir/subprocess.hpp"

namespace rundir {

/// Environment variable overriding the container CLI binary.
inline constexpr const char* kContainerCliEnv = "RUNDIR_CONTAINER_CLI";

inline std::string container_cli_name() {
  const char* override_name = std::getenv(kContainerCliEnv);
  return override_name && *override_name ? override_name : "docker";
}

/// Backend that shells out to an OCI-compatible CLI (docker by default,
/// overridable via RUNDIR_CONTAINER_CLI). No daemon API client is
/// embedded; anything that speaks the docker CLI surface works.
class ExecBackend final : public ContainerBackend {
 public:
  explicit ExecBackend(std::string cli = container_cli_name()) : cli_(std::move(cli)) {}

  std::string build_image(const BuildRequest& request) override {
    fs::path recipe = fs::path(request.recipe).lexically_normal();
    fs::path context = fs::path(request.context).lexically_normal();
    std::error_code ec;
    if (!fs::is_directory(context, ec)) {
      fail(Errc::context_missing, "build context does not exist: " + request.context);
    }
    if (!detail::path_in(context, recipe) || !fs::exists(recipe, ec)) {
      fail(Errc::context_missing, "recipe " + request.recipe + " is not inside " + request.context);
    }
    std::vector<std::string> argv = {cli_,          "build", "-q",
                                     "-f",          recipe.string(), "-t",
                                     request.tag,   context.string()};
    RunResult result = exec_capture(argv);
    if (result.exit_code != 0) {
      fail(Errc::build_failed, result.stderr_text);
    }
    std::string digest = result.stdout_text;
    while (!digest.empty() && (digest.back() == '\n' || digest.back() == '\r')) {
      digest.pop_back();
    }
    return digest;
  }

  RunResult run_container(const ContainerSpec& spec) override {
    validate_container_spec(spec);
    std::vector<std::string> argv = {cli_, "run"};
    if (spec.remove_after_exit) {
      argv.push_back("--rm");
    }
    if (!spec.workdir.empty()) {
      argv.push_back("-w");
      argv.push_back(spec.workdir);
    }
    for (const auto& [key, value] : spec.env) {
      argv.push_back("-e");
      argv.push_back(key + "=" + value);
    }
    for (const MountSpec& mount : spec.mounts) {
      argv.push_back("-v");
      argv.push_back(mount.host_path + ":" + mount.container_path +
                     (mount.read_only ? ":ro" : ""));
    }
    if (spec.mode == ContainerMode::sibling) {
      // Side-by-side containers share the host control socket.
      argv.push_back("-v");
      argv.push_back("/var/run/docker.sock:/var/run/docker.sock");
    } else {
      // Nested daemon needs elevated privileges; best effort.
      argv.push_back("--privileged");
    }
    argv.push_back(spec.image);
    argv.insert(argv.end(), spec.command.begin(), spec.command.end());
    return exec_capture(argv);
  }

  void retag(const std::string& src, const std::string& dst) override {
    RunResult result = exec_capture({cli_, "tag", src, dst});
    if (result.exit_code != 0) {
      fail(Errc::image_missing, src + ": " + result.stderr_text);
    }
  }

  void remove_container(const std::string& name) override {
    exec_capture({cli_, "rm", "-f", name});
  }

  bool image_exists(const std::string& tag) const override {
    try {
      return exec_capture({cli_, "image", "inspect", tag}).exit_code == 0;
    } catch (const Error&) {
      return false;
    }
  }

 private:
  std::string cli_;
};

}  // namespace rundir
