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

#include <stdexcept>
#include <string>
#include <string_view>

namespace rundir {

/// Every failure the library reports carries one of these codes so callers
/// can branch on the kind without parsing message text.
enum class Errc {
  // config parsing
  malformed_yaml,
  missing_field,
  invalid_value,
  empty_changelog,
  non_monotonic_versions,
  malformed_version,
  stage_user_mismatch,
  // discovery
  root_not_runnable,
  duplicate_dir_id,
  path_outside_tree,
  // container backend
  build_failed,
  context_missing,
  image_missing,
  runtime_unavailable,
  // lifecycle
  illegal_transition,
  // orchestration
  unknown_selector,
  // workspace
  env_path_not_writable,
  not_a_git_repo,
  source_missing,
  target_escapes_repo,
  // hooks
  checker_unavailable,
  // ignore generation
  no_entrypoints,
  entrypoint_missing,
};

inline std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::malformed_yaml: return "MalformedYaml";
    case Errc::missing_field: return "MissingField";
    case Errc::invalid_value: return "InvalidValue";
    case Errc::empty_changelog: return "EmptyChangelog";
    case Errc::non_monotonic_versions: return "NonMonotonicVersions";
    case Errc::malformed_version: return "MalformedVersion";
    case Errc::stage_user_mismatch: return "StageUserMismatch";
    case Errc::root_not_runnable: return "RootNotRunnable";
    case Errc::duplicate_dir_id: return "DuplicateDirId";
    case Errc::path_outside_tree: return "PathOutsideTree";
    case Errc::build_failed: return "BuildFailed";
    case Errc::context_missing: return "ContextMissing";
    case Errc::image_missing: return "ImageMissing";
    case Errc::runtime_unavailable: return "RuntimeUnavailable";
    case Errc::illegal_transition: return "IllegalTransition";
    case Errc::unknown_selector: return "UnknownSelector";
    case Errc::env_path_not_writable: return "EnvPathNotWritable";
    case Errc::not_a_git_repo: return "NotAGitRepo";
    case Errc::source_missing: return "SourceMissing";
    case Errc::target_escapes_repo: return "TargetEscapesRepo";
    case Errc::checker_unavailable: return "CheckerUnavailable";
    case Errc::no_entrypoints: return "NoEntrypoints";
    case Errc::entrypoint_missing: return "EntrypointMissing";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace rundir
