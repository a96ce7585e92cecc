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

#include <optional>
#include <string>

#include <sys/file.h>
#include <fcntl.h>
#include <unistd.h>

#include "rundir/backend.hpp"
#include "rundir/config.hpp"
#include "rundir/discovery.hpp"
#include "rundir/errors.hpp"

namespace rundir {

/// A recorded stage promotion of one directory's image.
struct StageTransition {
  std::string node_id;
  Stage from = Stage::local;
  Stage to = Stage::dev;
  SemVer version;
  std::string actor;
};

/// Images move local -> dev -> prod, one step at a time.
inline bool legal_transition(Stage from, Stage to) {
  return (from == Stage::local && to == Stage::dev) ||
         (from == Stage::dev && to == Stage::prod);
}

/// Advisory per-node lock held while building or promoting. Serializes
/// transitions for one node across processes; no-op for non-physical
/// filesystem views.
class NodeLock {
 public:
  explicit NodeLock(const fs::path& path) {
    fd_ = ::open(path.c_str(), O_CREAT | O_RDWR, 0644);
    if (fd_ >= 0) {
      ::flock(fd_, LOCK_EX);
    }
  }
  NodeLock() = default;
  NodeLock(const NodeLock&) = delete;
  NodeLock& operator=(const NodeLock&) = delete;
  ~NodeLock() {
    if (fd_ >= 0) {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
    }
  }

 private:
  int fd_ = -1;
};

inline constexpr const char* kNodeLockFile = ".rundir.lock";

namespace detail {

inline Changelog node_changelog(const FsView& view, const fs::path& node_dir,
                                const RunnableDirConfig& config) {
  fs::path path = node_dir / config.build_context / kChangelogFile;
  if (!view.exists(path)) {
    fail(Errc::empty_changelog, config.dir_id + ": no changelog at " + path.string());
  }
  return parse_changelog(view.read_file(path));
}

}  // namespace detail

/// Builds the local-stage image for one directory: version from the
/// changelog head, tag bound to the building user.
inline ImageRef build_stage(const fs::path& root_abs, const DirNode& node,
                            const std::string& user, ContainerBackend& backend,
                            const FsView& view,
                            const std::optional<std::string>& arch = std::nullopt) {
  fs::path node_dir = node.path.empty() ? root_abs : root_abs / node.path;
  Changelog changelog = detail::node_changelog(view, node_dir, node.config);
  ImageRef ref = resolve_image_tag(node.config, changelog, Stage::local, user);

  std::optional<NodeLock> lock;
  if (view.physical()) {
    lock.emplace(node_dir / kNodeLockFile);
  }

  BuildRequest request;
  request.context = node_dir.string();
  request.recipe = (node_dir / node.config.build_context / kRecipeFile).string();
  request.tag = ref.tag();
  request.arch = arch;
  backend.build_image(request);
  return ref;
}

struct PromoteOutcome {
  ImageRef image;
  StageTransition transition;
};

/// Promotes one directory's image to the next stage by retagging the
/// source digest. Never rebuilds.
inline PromoteOutcome promote(const fs::path& root_abs, const DirNode& node,
                              Stage from, Stage to,
                              const std::optional<std::string>& user,
                              ContainerBackend& backend, const FsView& view) {
  if (!legal_transition(from, to)) {
    fail(Errc::illegal_transition,
         stage_name(from) + " -> " + stage_name(to) + " is not a legal stage transition");
  }
  fs::path node_dir = node.path.empty() ? root_abs : root_abs / node.path;
  Changelog changelog = detail::node_changelog(view, node_dir, node.config);

  ImageRef src = resolve_image_tag(node.config, changelog, from,
                                   from == Stage::local ? user : std::nullopt);
  ImageRef dst = resolve_image_tag(node.config, changelog, to);

  std::optional<NodeLock> lock;
  if (view.physical()) {
    lock.emplace(node_dir / kNodeLockFile);
  }
  backend.retag(src.tag(), dst.tag());

  PromoteOutcome outcome;
  outcome.image = dst;
  outcome.transition = StageTransition{node.config.dir_id, from, to, changelog.latest(),
                                       user.value_or("")};
  return outcome;
}

}  // namespace rundir
