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
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "rundir/backend.hpp"
#include "rundir/errors.hpp"
#include "rundir/subprocess.hpp"
#include "rundir/tool_runner.hpp"

namespace rundir {

/// Policy file looked up under the helpers directory.
inline constexpr const char* kHookPolicyFile = "hook_policy.yaml";

/// Tunable knobs for the pre-commit checks. Defaults are usable as-is;
/// a policy file only overrides what it names.
struct HookPolicy {
  std::vector<std::string> protected_branches = {"master", "main"};
  std::string author_name_pattern = R"(\S.*)";
  std::string author_email_pattern = R"([^@\s]+@[^@\s]+\.[^@\s]+)";
  std::uint64_t max_file_bytes = 512 * 1024;
  std::vector<std::string> forbidden_words;
  std::map<std::string, std::string> compile_check_extensions = {
      {".py", "python -m py_compile"},
  };
  std::vector<std::string> secret_patterns = {
      R"(AKIA[0-9A-Z]{16})",                                   // cloud access key id
      R"(-----BEGIN [A-Z ]*PRIVATE KEY-----)",                 // private key header
      R"([Ss][Ee][Cc][Rr][Ee][Tt]_?[Kk][Ee][Yy]\s*[:=]\s*['"][^'"]{8,}['"])",
  };
};

struct ChangedFile {
  std::string path;
  std::uint64_t size_bytes = 0;
  std::string content;
};

/// Everything a commit is about to introduce, gathered either from git or
/// from a JSON fixture.
struct ChangeSet {
  std::string branch;
  std::string author_name;
  std::string author_email;
  std::vector<ChangedFile> files;
};

struct CheckResult {
  std::string check;
  bool pass = true;
  std::vector<std::string> offending;

  bool operator==(const CheckResult&) const = default;
};

/// One result per enabled check, present whether or not the check passed.
struct HookReport {
  std::vector<CheckResult> results;
  bool overall = true;

  bool operator==(const HookReport&) const = default;
};

/// Runs one configured syntax/compile checker against one file; returns
/// the checker's outcome. The production wiring executes this inside a
/// dockerized executable.
using CompileChecker =
    std::function<RunResult(const std::string& extension, const std::string& checker_command,
                            const ChangedFile& file)>;

inline const std::vector<std::string>& hook_check_names() {
  static const std::vector<std::string> names = {
      "branch", "author", "file_size", "forbidden_words", "compile", "secrets"};
  return names;
}

namespace detail {

inline std::regex compile_pattern(const std::string& pattern, const std::string& what) {
  try {
    return std::regex(pattern);
  } catch (const std::regex_error& ex) {
    fail(Errc::invalid_value, what + " pattern '" + pattern + "' does not compile: " + ex.what());
  }
}

inline std::string file_extension(const std::string& path) {
  std::size_t slash = path.find_last_of('/');
  std::size_t dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
    return "";
  }
  return path.substr(dot);
}

}  // namespace detail

/// Evaluates the six policy checks against a change set. Every check runs
/// no matter what the others find, so one report always carries one
/// result per check.
inline HookReport run_checks(const ChangeSet& change, const HookPolicy& policy,
                             const CompileChecker& compile_checker = {}) {
  if (policy.max_file_bytes == 0) {
    fail(Errc::invalid_value, "max_file_bytes must be positive");
  }
  {
    std::set<std::string> seen;
    for (const ChangedFile& file : change.files) {
      if (!seen.insert(file.path).second) {
        fail(Errc::invalid_value, "duplicate path in change set: " + file.path);
      }
    }
  }

  std::regex name_re = detail::compile_pattern(policy.author_name_pattern, "author name");
  std::regex email_re = detail::compile_pattern(policy.author_email_pattern, "author email");
  std::vector<std::regex> secret_res;
  for (const std::string& pattern : policy.secret_patterns) {
    secret_res.push_back(detail::compile_pattern(pattern, "secret"));
  }

  HookReport report;

  {
    CheckResult result{"branch", true, {}};
    for (const std::string& branch : policy.protected_branches) {
      if (change.branch == branch) {
        result.pass = false;
        result.offending.push_back("commit targets protected branch '" + branch + "'");
      }
    }
    report.results.push_back(std::move(result));
  }

  {
    CheckResult result{"author", true, {}};
    if (!std::regex_match(change.author_name, name_re)) {
      result.pass = false;
      result.offending.push_back("name: '" + change.author_name + "'");
    }
    if (!std::regex_match(change.author_email, email_re)) {
      result.pass = false;
      result.offending.push_back("email: '" + change.author_email + "'");
    }
    report.results.push_back(std::move(result));
  }

  {
    CheckResult result{"file_size", true, {}};
    for (const ChangedFile& file : change.files) {
      if (file.size_bytes > policy.max_file_bytes) {
        result.pass = false;
        result.offending.push_back(file.path + " (" + std::to_string(file.size_bytes) +
                                   " bytes > " + std::to_string(policy.max_file_bytes) + ")");
      }
    }
    report.results.push_back(std::move(result));
  }

  {
    CheckResult result{"forbidden_words", true, {}};
    for (const ChangedFile& file : change.files) {
      for (const std::string& word : policy.forbidden_words) {
        if (!word.empty() && file.content.find(word) != std::string::npos) {
          result.pass = false;
          result.offending.push_back(file.path + ": '" + word + "'");
        }
      }
    }
    report.results.push_back(std::move(result));
  }

  {
    CheckResult result{"compile", true, {}};
    for (const ChangedFile& file : change.files) {
      std::string ext = detail::file_extension(file.path);
      auto checker = policy.compile_check_extensions.find(ext);
      if (checker == policy.compile_check_extensions.end()) {
        continue;
      }
      if (!compile_checker) {
        fail(Errc::checker_unavailable, ext + " (no checker runner configured)");
      }
      RunResult outcome;
      try {
        outcome = compile_checker(ext, checker->second, file);
      } catch (const Error& err) {
        fail(Errc::checker_unavailable, ext + " (" + err.what() + ")");
      }
      if (outcome.exit_code != 0) {
        result.pass = false;
        result.offending.push_back(file.path);
      }
    }
    report.results.push_back(std::move(result));
  }

  {
    CheckResult result{"secrets", true, {}};
    for (const ChangedFile& file : change.files) {
      for (std::size_t i = 0; i < secret_res.size(); ++i) {
        if (std::regex_search(file.content, secret_res[i])) {
          result.pass = false;
          result.offending.push_back(file.path + " matches pattern #" + std::to_string(i));
        }
      }
    }
    report.results.push_back(std::move(result));
  }

  for (const CheckResult& result : report.results) {
    report.overall = report.overall && result.pass;
  }
  return report;
}

/// Policy file parser; unknown keys are rejected to catch typos.
inline HookPolicy parse_hook_policy(const std::string& text) {
  YAML::Node doc = detail::load_yaml(text);
  if (!doc.IsMap()) {
    fail(Errc::malformed_yaml, "hook policy must be a YAML mapping");
  }
  HookPolicy policy;
  for (const auto& item : doc) {
    const std::string key = item.first.as<std::string>();
    const YAML::Node value = item.second;
    if (key == "protected_branches") {
      policy.protected_branches = value.as<std::vector<std::string>>();
    } else if (key == "author_name_pattern") {
      policy.author_name_pattern = value.as<std::string>();
    } else if (key == "author_email_pattern") {
      policy.author_email_pattern = value.as<std::string>();
    } else if (key == "max_file_bytes") {
      policy.max_file_bytes = value.as<std::uint64_t>();
      if (policy.max_file_bytes == 0) {
        fail(Errc::invalid_value, "max_file_bytes must be positive");
      }
    } else if (key == "forbidden_words") {
      policy.forbidden_words = value.as<std::vector<std::string>>();
    } else if (key == "compile_check_extensions") {
      policy.compile_check_extensions.clear();
      for (const auto& pair : value) {
        policy.compile_check_extensions[pair.first.as<std::string>()] =
            pair.second.as<std::string>();
      }
    } else if (key == "secret_patterns") {
      policy.secret_patterns = value.as<std::vector<std::string>>();
    } else {
      fail(Errc::invalid_value, "unknown hook policy key '" + key + "'");
    }
  }
  // Surface bad regexes at load time, not mid-commit.
  detail::compile_pattern(policy.author_name_pattern, "author name");
  detail::compile_pattern(policy.author_email_pattern, "author email");
  for (const std::string& pattern : policy.secret_patterns) {
    detail::compile_pattern(pattern, "secret");
  }
  return policy;
}

/// Production compile-check wiring: stages the changed file into a scratch
/// directory and runs the configured checker command on it inside a
/// `check-<lang>` dockerized executable, so nothing beyond the container
/// CLI is needed on the host.
inline CompileChecker dockerized_compile_checker(ToolRunner& tools, fs::path helpers_root) {
  return [&tools, helpers_root = std::move(helpers_root)](
             const std::string& extension, const std::string& checker_command,
             const ChangedFile& file) -> RunResult {
    std::string lang = extension.empty() ? "any" : extension.substr(1);
    ToolSpec spec;
    spec.tool_name = "check-" + lang;
    spec.version = SemVer{1, 0, 0};
    spec.recipe = helpers_root / "dockerized" / spec.tool_name / kRecipeFile;

    static std::atomic<std::uint64_t> scratch_counter{0};
    fs::path scratch = fs::temp_directory_path() /
                       ("rundir-check-" + std::to_string(::getpid()) + "-" +
                        std::to_string(scratch_counter.fetch_add(1)));
    fs::path staged = scratch / fs::path(file.path).lexically_normal().relative_path();
    fs::create_directories(staged.parent_path());
    {
      std::ofstream out(staged, std::ios::binary | std::ios::trunc);
      out << file.content;
    }

    std::vector<std::string> argv = detail::split_command(checker_command);
    argv.push_back("/workspace/" +
                   staged.lexically_relative(scratch).generic_string());
    try {
      RunResult result = tools.run(spec, argv, scratch);
      fs::remove_all(scratch);
      return result;
    } catch (...) {
      std::error_code ec;
      fs::remove_all(scratch, ec);
      throw;
    }
  };
}

namespace detail {

inline std::string chomp(std::string text) {
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) {
    text.pop_back();
  }
  return text;
}

}  // namespace detail

/// Builds a ChangeSet from the staged state of a git repository: current
/// branch, configured author, and every staged file with its index
/// content. This is what the installed pre-commit hook feeds the checks.
inline ChangeSet collect_changeset_from_git(const fs::path& repo_root) {
  auto git = [&](std::initializer_list<std::string> args) {
    std::vector<std::string> argv = {"git", "-C", repo_root.string()};
    argv.insert(argv.end(), args.begin(), args.end());
    return exec_capture(argv);
  };

  ChangeSet change;
  RunResult branch = git({"symbolic-ref", "--short", "HEAD"});
  change.branch = branch.exit_code == 0 ? detail::chomp(branch.stdout_text) : "HEAD";
  change.author_name = detail::chomp(git({"config", "user.name"}).stdout_text);
  change.author_email = detail::chomp(git({"config", "user.email"}).stdout_text);

  RunResult staged = git({"diff", "--cached", "--name-only", "--diff-filter=ACM"});
  if (staged.exit_code != 0) {
    fail(Errc::not_a_git_repo, repo_root.string() + ": " + staged.stderr_text);
  }
  std::size_t start = 0;
  const std::string& listing = staged.stdout_text;
  while (start < listing.size()) {
    std::size_t end = listing.find('\n', start);
    if (end == std::string::npos) end = listing.size();
    std::string path = listing.substr(start, end - start);
    start = end + 1;
    if (path.empty()) continue;
    ChangedFile file;
    file.path = path;
    file.content = git({"show", ":0:" + path}).stdout_text;
    file.size_bytes = file.content.size();
    change.files.push_back(std::move(file));
  }
  return change;
}

// --- JSON round trip --------------------------------------------------

inline void to_json(nlohmann::json& j, const ChangedFile& file) {
  j = {{"path", file.path}, {"size_bytes", file.size_bytes}, {"content", file.content}};
}

inline void from_json(const nlohmann::json& j, ChangedFile& file) {
  j.at("path").get_to(file.path);
  file.size_bytes = j.value("size_bytes", static_cast<std::uint64_t>(0));
  file.content = j.value("content", std::string());
  if (!j.contains("size_bytes")) {
    file.size_bytes = file.content.size();
  }
}

inline void to_json(nlohmann::json& j, const ChangeSet& change) {
  j = {{"branch", change.branch},
       {"author", {{"name", change.author_name}, {"email", change.author_email}}},
       {"files", change.files}};
}

inline void from_json(const nlohmann::json& j, ChangeSet& change) {
  j.at("branch").get_to(change.branch);
  change.author_name = j.at("author").at("name").get<std::string>();
  change.author_email = j.at("author").at("email").get<std::string>();
  change.files = j.value("files", std::vector<ChangedFile>());
}

inline void to_json(nlohmann::json& j, const CheckResult& result) {
  j = {{"check", result.check}, {"pass", result.pass}, {"offending", result.offending}};
}

inline void from_json(const nlohmann::json& j, CheckResult& result) {
  j.at("check").get_to(result.check);
  j.at("pass").get_to(result.pass);
  j.at("offending").get_to(result.offending);
}

inline void to_json(nlohmann::json& j, const HookReport& report) {
  j = {{"overall", report.overall ? "pass" : "fail"}, {"results", report.results}};
}

inline void from_json(const nlohmann::json& j, HookReport& report) {
  report.overall = j.at("overall").get<std::string>() == "pass";
  report.results = j.at("results").get<std::vector<CheckResult>>();
}

}  // namespace rundir
