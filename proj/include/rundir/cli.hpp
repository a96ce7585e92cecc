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

#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rundir/backend.hpp"
#include "rundir/bootstrap.hpp"
#include "rundir/discovery.hpp"
#include "rundir/exec_backend.hpp"
#include "rundir/hooks.hpp"
#include "rundir/ignore.hpp"
#include "rundir/lifecycle.hpp"
#include "rundir/links.hpp"
#include "rundir/orchestrator.hpp"
#include "rundir/tool_runner.hpp"

namespace rundir {

inline constexpr const char* kCliVersion = "0.1.0";

/// Injection points for tests: a scripted backend, an in-memory
/// filesystem, captured streams, a fixed working directory. Defaults give
/// the production wiring.
struct CliDeps {
  std::shared_ptr<ContainerBackend> backend;
  const FsView* fs = nullptr;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;
  std::optional<fs::path> cwd;
};

// --- JSON for the listing -----------------------------------------------

inline void to_json(nlohmann::json& j, const RunnableDirConfig& config) {
  j = {{"dir_id", config.dir_id},
       {"image_name", config.image_name},
       {"test_command", config.test_command},
       {"container_mode", container_mode_name(config.container_mode)},
       {"build_context", config.build_context},
       {"extras", config.extras}};
  if (config.registry) {
    j["registry"] = *config.registry;
  }
  if (config.storage) {
    j["storage"] = {{"bucket", config.storage->bucket}, {"prefix", config.storage->prefix}};
  }
}

inline void from_json(const nlohmann::json& j, RunnableDirConfig& config) {
  j.at("dir_id").get_to(config.dir_id);
  j.at("image_name").get_to(config.image_name);
  j.at("test_command").get_to(config.test_command);
  config.container_mode = parse_container_mode(j.at("container_mode").get<std::string>());
  j.at("build_context").get_to(config.build_context);
  config.extras = j.value("extras", std::map<std::string, std::string>());
  if (j.contains("registry")) {
    config.registry = j.at("registry").get<std::string>();
  }
  if (j.contains("storage")) {
    config.storage = StorageRef{j.at("storage").at("bucket").get<std::string>(),
                                j.at("storage").at("prefix").get<std::string>()};
  }
}

inline void to_json(nlohmann::json& j, const DirNode& node) {
  j = {{"path", node.path.empty() ? "." : node.path},
       {"config", node.config},
       {"children", node.children}};
}

inline void from_json(const nlohmann::json& j, DirNode& node) {
  node.path = j.at("path").get<std::string>();
  if (node.path == ".") {
    node.path.clear();
  }
  j.at("config").get_to(node.config);
  node.children = j.value("children", std::vector<DirNode>());
}

inline void to_json(nlohmann::json& j, const LinkReport& report) {
  nlohmann::json conflicts = nlohmann::json::array();
  for (const LinkConflict& conflict : report.conflicts) {
    conflicts.push_back({{"target", conflict.target}, {"reason", conflict.reason}});
  }
  j = {{"created", report.created},
       {"repaired", report.repaired},
       {"unchanged", report.unchanged},
       {"conflicts", conflicts}};
}

namespace detail {

struct CliContext {
  std::shared_ptr<ContainerBackend> backend;
  RealFs real_fs;
  const FsView* fs = nullptr;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;
  fs::path cwd;

  ContainerBackend& get_backend() {
    if (!backend) {
      backend = std::make_shared<ExecBackend>();
    }
    return *backend;
  }
  const FsView& view() const { return fs ? *fs : real_fs; }
};

/// The nearest ancestor of `cwd` holding a marker file, unless an explicit
/// root was given.
inline fs::path resolve_root(const std::optional<std::string>& root_flag,
                             const CliContext& ctx) {
  if (root_flag) {
    fs::path root = fs::path(*root_flag);
    if (root.is_relative()) {
      root = ctx.cwd / root;
    }
    return root.lexically_normal();
  }
  fs::path p = ctx.cwd.lexically_normal();
  for (;;) {
    if (ctx.view().exists(p / kMarkerFile)) {
      return p;
    }
    fs::path parent = p.parent_path();
    if (parent == p || parent.empty()) {
      break;
    }
    p = parent;
  }
  fail(Errc::root_not_runnable,
       "no " + std::string(kMarkerFile) + " found at or above " + ctx.cwd.string());
}

inline const DirNode& pick_node(const DirTree& tree, const std::string& dir_id) {
  if (dir_id.empty()) {
    return tree.root;
  }
  const DirNode* node = find_node(tree, dir_id);
  if (node == nullptr) {
    fail(Errc::unknown_selector, "no runnable directory with dir_id '" + dir_id + "'");
  }
  return *node;
}

inline void render_tree(std::ostream& out, const DirNode& node, int depth) {
  out << std::string(static_cast<std::size_t>(depth) * 2, ' ') << node.config.dir_id << "  "
      << (node.path.empty() ? "." : node.path) << "  [" << node.config.image_name << "]\n";
  for (const DirNode& child : node.children) {
    render_tree(out, child, depth + 1);
  }
}

inline std::set<std::string> split_selector(const std::vector<std::string>& raw) {
  std::set<std::string> out;
  for (const std::string& item : raw) {
    std::size_t start = 0;
    while (start <= item.size()) {
      std::size_t end = item.find(',', start);
      std::string id = item.substr(start, end == std::string::npos ? end : end - start);
      if (!id.empty()) {
        out.insert(id);
      }
      if (end == std::string::npos) break;
      start = end + 1;
    }
  }
  return out;
}

/// Optional per-tool metadata next to the recipe: `version:` and
/// `command:` defaults for `rundir exec`.
struct ToolMeta {
  std::optional<SemVer> version;
  std::vector<std::string> command;
};

inline ToolMeta read_tool_meta(const FsView& view, const fs::path& tool_dir) {
  ToolMeta meta;
  fs::path meta_path = tool_dir / "tool.yaml";
  if (!view.exists(meta_path)) {
    return meta;
  }
  YAML::Node doc = load_yaml(view.read_file(meta_path));
  if (!doc.IsMap()) {
    fail(Errc::malformed_yaml, meta_path.string() + " must be a mapping");
  }
  if (doc["version"]) {
    meta.version = parse_semver(doc["version"].as<std::string>());
  }
  if (doc["command"]) {
    meta.command = doc["command"].as<std::vector<std::string>>();
  }
  return meta;
}

}  // namespace detail

/// Parses and executes one CLI invocation. `args` excludes the program
/// name. Returns the process exit code: 0 success, 1 domain failure,
/// 2 usage error.
inline int run_cli(const std::vector<std::string>& args, const CliDeps& deps = {}) {
  detail::CliContext ctx;
  ctx.backend = deps.backend;
  ctx.fs = deps.fs;
  ctx.out = deps.out ? deps.out : &std::cout;
  ctx.err = deps.err ? deps.err : &std::cerr;
  ctx.cwd = deps.cwd ? *deps.cwd : fs::current_path();
  std::ostream& out = *ctx.out;
  std::ostream& err = *ctx.err;

  // Everything after a bare "--" goes to the tool, not to the parser.
  std::vector<std::string> head = args;
  std::vector<std::string> tail;
  if (auto split = std::find(head.begin(), head.end(), "--"); split != head.end()) {
    tail.assign(split + 1, head.end());
    head.erase(split, head.end());
  }

  CLI::App app{"Workflow tool for runnable directories"};
  app.set_version_flag("--version", kCliVersion);
  app.require_subcommand(0, 1);

  std::optional<std::string> root_flag;

  auto* list_cmd = app.add_subcommand("list", "Print the discovered directory tree");
  bool list_json = false;
  list_cmd->add_option("--root", root_flag, "Tree root (default: nearest runnable ancestor)");
  list_cmd->add_flag("--json", list_json, "Emit the tree as JSON");

  auto* build_cmd = app.add_subcommand("build", "Build a directory's local-stage image");
  std::string build_id;
  std::string build_user;
  std::optional<std::string> build_arch;
  build_cmd->add_option("dir_id", build_id, "Directory to build (default: the root)");
  build_cmd->add_option("--user", build_user, "Developer the local image belongs to")->required();
  build_cmd->add_option("--arch", build_arch, "Requested architecture (recorded only)");
  build_cmd->add_option("--root", root_flag, "Tree root");

  auto* promote_cmd = app.add_subcommand("promote", "Promote an image to the next stage");
  std::string promote_id;
  std::string promote_from;
  std::string promote_to;
  std::optional<std::string> promote_user;
  bool promote_json = false;
  promote_cmd->add_option("dir_id", promote_id, "Directory to promote (default: the root)");
  promote_cmd->add_option("--from", promote_from, "Source stage")->required();
  promote_cmd->add_option("--to", promote_to, "Destination stage")->required();
  promote_cmd->add_option("--user", promote_user, "User owning the local source image");
  promote_cmd->add_option("--root", root_flag, "Tree root");
  promote_cmd->add_flag("--json", promote_json, "Emit the transition as JSON");

  auto* test_cmd = app.add_subcommand("test", "Run every directory's tests in its own container");
  std::vector<std::string> select_raw;
  std::string test_stage = "dev";
  int parallelism = 1;
  bool fail_fast = false;
  bool test_json = false;
  std::optional<std::string> report_out;
  test_cmd->add_option("--select", select_raw, "Only these dir_ids (comma separated)");
  test_cmd->add_option("--stage", test_stage, "Image stage to test against (default dev)");
  test_cmd->add_option("-j,--parallelism", parallelism, "Concurrent test containers");
  test_cmd->add_flag("--fail-fast", fail_fast, "Stop scheduling after the first failure");
  test_cmd->add_flag("--json", test_json, "Emit the report as JSON");
  test_cmd->add_option("--report-out", report_out, "Write the JSON report to this file");
  test_cmd->add_option("--root", root_flag, "Tree root");

  auto* exec_cmd = app.add_subcommand("exec", "Run a dockerized executable");
  std::string tool_name;
  std::optional<std::string> tool_version;
  std::string exec_mode = "sibling";
  exec_cmd->add_option("tool", tool_name, "Tool name under helpers/dockerized/")->required();
  exec_cmd->add_option("--tool-version", tool_version, "Tool image version");
  exec_cmd->add_option("--mode", exec_mode, "child or sibling (default sibling)");
  exec_cmd->add_option("--root", root_flag, "Tree root");

  auto* bootstrap_cmd = app.add_subcommand("bootstrap", "Create or join the shared thin environment");
  std::optional<std::string> env_flag;
  bootstrap_cmd->add_option("--env", env_flag, "Thin environment path (default $RUNDIR_ENV_PATH or ~/.rundir-env)");
  bootstrap_cmd->add_option("--root", root_flag, "Repository root");

  auto* links_cmd = app.add_subcommand("links", "Symlink farm maintenance");
  auto* links_sync_cmd = links_cmd->add_subcommand("sync", "Create or verify the helpers symlinks");
  bool links_repair = false;
  bool links_json = false;
  std::optional<std::string> helpers_flag;
  std::optional<std::string> manifest_flag;
  links_sync_cmd->add_flag("--repair", links_repair, "Replace conflicting targets");
  links_sync_cmd->add_flag("--json", links_json, "Emit the report as JSON");
  links_sync_cmd->add_option("--helpers", helpers_flag, "Helpers directory (default <root>/helpers)");
  links_sync_cmd->add_option("--manifest", manifest_flag, "Manifest file (default <helpers>/links.yaml)");
  links_sync_cmd->add_option("--root", root_flag, "Repository root");
  links_cmd->require_subcommand(1);

  auto* hooks_cmd = app.add_subcommand("hooks", "Pre-commit policy checks");
  auto* hooks_run_cmd = hooks_cmd->add_subcommand("run", "Evaluate the policy checks");
  std::optional<std::string> changeset_flag;
  std::optional<std::string> policy_flag;
  bool hooks_json = false;
  hooks_run_cmd->add_option("--changeset", changeset_flag, "JSON change-set file (default: staged git state)");
  hooks_run_cmd->add_option("--policy", policy_flag, "Policy file (default <root>/helpers/hook_policy.yaml)");
  hooks_run_cmd->add_flag("--json", hooks_json, "Emit the report as JSON");
  hooks_run_cmd->add_option("--root", root_flag, "Repository root");
  hooks_cmd->require_subcommand(1);

  auto* ignore_cmd = app.add_subcommand("ignore", "Keep-only ignore file generation");
  auto* ignore_gen_cmd = ignore_cmd->add_subcommand("gen", "Generate a .dockerignore from the file closure");
  std::vector<std::string> entry_flags;
  std::optional<std::string> profile_flag;
  std::string ignore_out;
  ignore_gen_cmd->add_option("--entry", entry_flags, "Entrypoint file (repeatable)")->required();
  ignore_gen_cmd->add_option("--profile", profile_flag, "Scanner profile YAML");
  ignore_gen_cmd->add_option("--out", ignore_out, "Output file")->required();
  ignore_gen_cmd->add_option("--root", root_flag, "Tree root");
  ignore_cmd->require_subcommand(1);

  try {
    std::vector<std::string> reversed(head.rbegin(), head.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kCliVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    err << app.help();
    return 2;
  }
  if (app.get_subcommands().empty()) {
    err << app.help();
    return 2;
  }

  try {
    if (list_cmd->parsed()) {
      DirTree tree = discover(detail::resolve_root(root_flag, ctx), ctx.view());
      if (list_json) {
        out << nlohmann::json(tree.root).dump(2) << "\n";
      } else {
        detail::render_tree(out, tree.root, 0);
      }
      return 0;
    }

    if (build_cmd->parsed()) {
      DirTree tree = discover(detail::resolve_root(root_flag, ctx), ctx.view());
      const DirNode& node = detail::pick_node(tree, build_id);
      ImageRef ref = build_stage(tree.root_path, node, build_user, ctx.get_backend(),
                                 ctx.view(), build_arch);
      out << ref.tag() << "\n";
      return 0;
    }

    if (promote_cmd->parsed()) {
      DirTree tree = discover(detail::resolve_root(root_flag, ctx), ctx.view());
      const DirNode& node = detail::pick_node(tree, promote_id);
      PromoteOutcome outcome =
          promote(tree.root_path, node, parse_stage(promote_from), parse_stage(promote_to),
                  promote_user, ctx.get_backend(), ctx.view());
      if (promote_json) {
        out << nlohmann::json({{"node_id", outcome.transition.node_id},
                               {"from", stage_name(outcome.transition.from)},
                               {"to", stage_name(outcome.transition.to)},
                               {"version", outcome.transition.version.str()},
                               {"actor", outcome.transition.actor},
                               {"tag", outcome.image.tag()}})
                   .dump(2)
            << "\n";
      } else {
        out << outcome.image.tag() << "\n";
      }
      return 0;
    }

    if (test_cmd->parsed()) {
      DirTree tree = discover(detail::resolve_root(root_flag, ctx), ctx.view());
      RunTestsOptions options;
      if (!select_raw.empty()) {
        options.selector = detail::split_selector(select_raw);
      }
      options.stage = parse_stage(test_stage);
      options.parallelism = parallelism;
      options.fail_fast = fail_fast;
      TestReport report = run_tests(tree, options, ctx.get_backend(), ctx.view());
      nlohmann::json report_json = report;
      if (report_out) {
        std::ofstream file(*report_out, std::ios::trunc);
        file << report_json.dump(2) << "\n";
      }
      if (test_json) {
        out << report_json.dump(2) << "\n";
      } else {
        for (const TestEntry& entry : report.entries) {
          out << (entry.exit_code == 0 ? "PASS" : "FAIL") << "  " << entry.node_id << "  "
              << entry.image << "  (" << entry.duration_ms << " ms)\n";
        }
        out << (report.pass ? "all tests passed" : "test failures") << "\n";
      }
      return report.pass ? 0 : 1;
    }

    if (exec_cmd->parsed()) {
      fs::path root = detail::resolve_root(root_flag, ctx);
      fs::path tool_dir = root / "helpers" / "dockerized" / tool_name;
      detail::ToolMeta meta = detail::read_tool_meta(ctx.view(), tool_dir);
      ToolSpec spec;
      spec.tool_name = tool_name;
      if (tool_version) {
        spec.version = parse_semver(*tool_version);
      } else if (meta.version) {
        spec.version = *meta.version;
      } else {
        fail(Errc::invalid_value,
             "no --tool-version given and " + (tool_dir / "tool.yaml").string() +
                 " declares none");
      }
      spec.recipe = tool_dir / kRecipeFile;
      spec.default_command = meta.command;
      ToolRunner runner(ctx.get_backend());
      RunResult result = runner.run(spec, tail, root, parse_container_mode(exec_mode));
      out << result.stdout_text;
      err << result.stderr_text;
      return result.exit_code == 0 ? 0 : 1;
    }

    if (bootstrap_cmd->parsed()) {
      fs::path env_path = env_flag ? fs::path(*env_flag) : default_env_path();
      fs::path root = detail::resolve_root(root_flag, ctx);
      EnvManifest manifest = bootstrap_thin_env(env_path, root, &err);
      out << "thin environment at " << manifest.env_path << " ("
          << manifest.consumers.size() << " consumer"
          << (manifest.consumers.size() == 1 ? "" : "s") << ")\n";
      return 0;
    }

    if (links_sync_cmd->parsed()) {
      fs::path root = detail::resolve_root(root_flag, ctx);
      fs::path helpers = helpers_flag ? fs::path(*helpers_flag) : root / "helpers";
      fs::path manifest_path = manifest_flag ? fs::path(*manifest_flag) : helpers / kLinkManifestFile;
      LinkManifest manifest = parse_link_manifest(RealFs().read_file(manifest_path));
      LinkReport report = sync_links(helpers, root, manifest, links_repair);
      if (links_json) {
        out << nlohmann::json(report).dump(2) << "\n";
      } else {
        out << "created=" << report.created << " repaired=" << report.repaired
            << " unchanged=" << report.unchanged << " conflicts=" << report.conflicts.size()
            << "\n";
        for (const LinkConflict& conflict : report.conflicts) {
          err << "conflict: " << conflict.target << " (" << conflict.reason << ")\n";
        }
      }
      return report.conflicts.empty() ? 0 : 1;
    }

    if (hooks_run_cmd->parsed()) {
      fs::path root = detail::resolve_root(root_flag, ctx);
      HookPolicy policy;
      fs::path policy_path = policy_flag ? fs::path(*policy_flag)
                                         : root / "helpers" / kHookPolicyFile;
      if (ctx.view().exists(policy_path)) {
        policy = parse_hook_policy(ctx.view().read_file(policy_path));
      } else if (policy_flag) {
        fail(Errc::invalid_value, "policy file not found: " + policy_path.string());
      }
      ChangeSet change;
      if (changeset_flag) {
        change = nlohmann::json::parse(RealFs().read_file(*changeset_flag)).get<ChangeSet>();
      } else {
        change = collect_changeset_from_git(root);
      }
      ToolRunner runner(ctx.get_backend());
      HookReport report =
          run_checks(change, policy, dockerized_compile_checker(runner, root / "helpers"));
      if (hooks_json) {
        out << nlohmann::json(report).dump(2) << "\n";
      } else {
        for (const CheckResult& result : report.results) {
          out << (result.pass ? "PASS" : "FAIL") << "  " << result.check << "\n";
          for (const std::string& item : result.offending) {
            out << "      " << item << "\n";
          }
        }
      }
      return report.overall ? 0 : 1;
    }

    if (ignore_gen_cmd->parsed()) {
      fs::path root = detail::resolve_root(root_flag, ctx);
      ScannerProfile profile = profile_flag
                                   ? parse_scanner_profile(RealFs().read_file(*profile_flag))
                                   : default_scanner_profile();
      FileClosure closure = compute_file_closure(root, entry_flags, profile, ctx.view());
      RunnableDirConfig config = parse_runnable_config(ctx.view().read_file(root / kMarkerFile));
      std::set<std::string> always_keep = {kMarkerFile, config.build_context};
      std::string document = emit_dockerignore(closure, always_keep);
      fs::path out_path = fs::path(ignore_out).is_relative() ? ctx.cwd / ignore_out : fs::path(ignore_out);
      std::ofstream file(out_path, std::ios::trunc | std::ios::binary);
      file << document;
      file.close();
      for (const std::string& warning : closure.warnings) {
        err << "warning: " << warning << "\n";
      }
      out << "wrote " << out_path.string() << " (" << closure.files.size() << " files kept)\n";
      return 0;
    }
  } catch (const Error& error) {
    err << "error: " << error.what() << "\n";
    return 1;
  } catch (const std::exception& error) {
    err << "error: " << error.what() << "\n";
    return 1;
  }

  err << app.help();
  return 2;
}

}  // namespace rundir
