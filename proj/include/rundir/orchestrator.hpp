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

#include <atomic>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "rundir/backend.hpp"
#include "rundir/discovery.hpp"
#include "rundir/lifecycle.hpp"

namespace rundir {

/// Container path every node directory is mounted at while its tests run.
inline constexpr const char* kWorkspaceMount = "/workspace";

struct TestEntry {
  std::string node_id;
  std::string path;
  std::string image;
  int exit_code = 0;
  std::int64_t duration_ms = 0;
  std::string output_excerpt;

  bool operator==(const TestEntry&) const = default;
};

/// Aggregated outcome of one recursive test run. Entries are ordered by
/// node path no matter in which order the containers finished.
struct TestReport {
  std::vector<TestEntry> entries;
  bool pass = true;

  bool operator==(const TestReport&) const = default;
};

struct RunTestsOptions {
  std::optional<std::set<std::string>> selector;  // dir_ids; absent = all nodes
  Stage stage = Stage::dev;
  int parallelism = 1;
  bool fail_fast = false;
};

namespace detail {

inline void flatten(const DirNode& node, std::vector<const DirNode*>& out) {
  out.push_back(&node);
  for (const DirNode& child : node.children) {
    flatten(child, out);
  }
}

inline std::string excerpt(const RunResult& result, std::size_t limit = 400) {
  std::string text = result.stdout_text;
  if (!result.stderr_text.empty()) {
    if (!text.empty()) text += '\n';
    text += result.stderr_text;
  }
  if (text.size() > limit) {
    text.resize(limit);
  }
  return text;
}

}  // namespace detail

/// Runs every selected directory's test command inside that directory's
/// own container image. Recursion is flat over tree nodes: parents never
/// re-run child suites, so a child may depend on packages its parent
/// cannot load.
inline TestReport run_tests(const DirTree& tree, const RunTestsOptions& options,
                            ContainerBackend& backend, const FsView& view) {
  if (options.parallelism < 1) {
    fail(Errc::invalid_value, "parallelism must be positive");
  }

  std::vector<const DirNode*> all;
  detail::flatten(tree.root, all);
  std::sort(all.begin(), all.end(),
            [](const DirNode* a, const DirNode* b) { return a->path < b->path; });

  if (options.selector) {
    for (const std::string& id : *options.selector) {
      if (tree.index.find(id) == tree.index.end()) {
        fail(Errc::unknown_selector, "no runnable directory with dir_id '" + id + "'");
      }
    }
  }

  struct Job {
    const DirNode* node;
    ContainerSpec spec;
    std::string tag;
  };
  std::vector<Job> jobs;
  for (const DirNode* node : all) {
    if (options.selector && options.selector->count(node->config.dir_id) == 0) {
      continue;
    }
    fs::path node_dir = tree.abs_path(*node);
    Changelog changelog = detail::node_changelog(view, node_dir, node->config);
    ImageRef ref = resolve_image_tag(node->config, changelog, options.stage);

    Job job;
    job.node = node;
    job.tag = ref.tag();
    job.spec.image = job.tag;
    job.spec.command = detail::split_command(node->config.test_command);
    if (job.spec.command.empty()) {
      fail(Errc::invalid_value, node->config.dir_id + ": empty test command");
    }
    job.spec.mounts.push_back({node_dir.string(), kWorkspaceMount, false});
    job.spec.workdir = kWorkspaceMount;
    job.spec.mode = node->config.container_mode;
    job.spec.remove_after_exit = true;
    jobs.push_back(std::move(job));
  }

  std::vector<std::optional<TestEntry>> slots(jobs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first_error;
  std::mutex error_mu;

  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= jobs.size() || stop.load()) {
        return;
      }
      const Job& job = jobs[i];
      try {
        RunResult result = backend.run_container(job.spec);
        TestEntry entry;
        entry.node_id = job.node->config.dir_id;
        entry.path = job.node->path.empty() ? "." : job.node->path;
        entry.image = job.tag;
        entry.exit_code = result.exit_code;
        entry.duration_ms = result.duration_ms;
        entry.output_excerpt = detail::excerpt(result);
        if (options.fail_fast && entry.exit_code != 0) {
          stop.store(true);
        }
        slots[i] = std::move(entry);
      } catch (const Error& err) {
        std::lock_guard lock(error_mu);
        if (!first_error) {
          first_error = std::make_exception_ptr(
              Error(err.code(), job.node->config.dir_id + ": " + err.what()));
        }
        stop.store(true);
        return;
      }
    }
  };

  int threads = std::min<int>(options.parallelism, static_cast<int>(jobs.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int i = 0; i < threads; ++i) {
      pool.emplace_back(worker);
    }
    for (std::thread& t : pool) {
      t.join();
    }
  }
  if (first_error) {
    std::rethrow_exception(first_error);
  }

  TestReport report;
  for (std::optional<TestEntry>& slot : slots) {
    if (slot) {
      report.pass = report.pass && slot->exit_code == 0;
      report.entries.push_back(std::move(*slot));
    }
  }
  return report;
}

// --- JSON round trip --------------------------------------------------

inline void to_json(nlohmann::json& j, const TestEntry& entry) {
  j = {{"node_id", entry.node_id},       {"path", entry.path},
       {"image", entry.image},           {"exit_code", entry.exit_code},
       {"duration_ms", entry.duration_ms}, {"output_excerpt", entry.output_excerpt}};
}

inline void from_json(const nlohmann::json& j, TestEntry& entry) {
  j.at("node_id").get_to(entry.node_id);
  j.at("path").get_to(entry.path);
  j.at("image").get_to(entry.image);
  j.at("exit_code").get_to(entry.exit_code);
  j.at("duration_ms").get_to(entry.duration_ms);
  j.at("output_excerpt").get_to(entry.output_excerpt);
}

inline void to_json(nlohmann::json& j, const TestReport& report) {
  j = {{"aggregate", report.pass ? "pass" : "fail"}, {"entries", report.entries}};
}

inline void from_json(const nlohmann::json& j, TestReport& report) {
  report.pass = j.at("aggregate").get<std::string>() == "pass";
  report.entries = j.at("entries").get<std::vector<TestEntry>>();
}

}  // namespace rundir
