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

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "rundir/config.hpp"

using namespace rundir;

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& err) {
    return err.code();
  }
  FAIL("expected an Error");
  throw;  // unreachable
}

}  // namespace

TEST_CASE("semver parses and orders") {
  CHECK(parse_semver("1.2.0") == SemVer{1, 2, 0});
  CHECK(parse_semver("0.0.0") == SemVer{0, 0, 0});
  CHECK(parse_semver("10.20.30").str() == "10.20.30");
  CHECK(SemVer{1, 2, 0} < SemVer{1, 10, 0});
  CHECK(SemVer{2, 0, 0} > SemVer{1, 99, 99});

  for (const char* bad : {"", "1", "1.2", "1.2.3.4", "v1.2.3", "1.2.x", "1..3", "1.2.3 "}) {
    CHECK(code_of([&] { parse_semver(bad); }) == Errc::malformed_version);
  }
}

TEST_CASE("minimal config gets defaults") {
  RunnableDirConfig config = parse_runnable_config("{dir_id: helpers, image_name: helpers}");
  CHECK(config.dir_id == "helpers");
  CHECK(config.image_name == "helpers");
  CHECK(config.container_mode == ContainerMode::sibling);
  CHECK(config.test_command == "pytest");
  CHECK(config.build_context == "devops");
  CHECK_FALSE(config.registry.has_value());
  CHECK_FALSE(config.storage.has_value());
}

TEST_CASE("missing required fields") {
  CHECK(code_of([] { parse_runnable_config("{image_name: x}"); }) == Errc::missing_field);
  CHECK(code_of([] { parse_runnable_config("{dir_id: x}"); }) == Errc::missing_field);
}

TEST_CASE("malformed and invalid configs") {
  CHECK(code_of([] { parse_runnable_config("{dir_id: [a"); }) == Errc::malformed_yaml);
  CHECK(code_of([] { parse_runnable_config("- just\n- a\n- list\n"); }) == Errc::malformed_yaml);
  // identifier charset is lowercase only
  CHECK(code_of([] { parse_runnable_config("{dir_id: Bad, image_name: x}"); }) ==
        Errc::invalid_value);
  CHECK(code_of([] { parse_runnable_config("{dir_id: 'a b', image_name: x}"); }) ==
        Errc::invalid_value);
  CHECK(code_of([] {
          parse_runnable_config("{dir_id: a, image_name: x, build_context: /abs}");
        }) == Errc::invalid_value);
  CHECK(code_of([] {
          parse_runnable_config("{dir_id: a, image_name: x, build_context: ../up}");
        }) == Errc::invalid_value);
  CHECK(code_of([] {
          parse_runnable_config("{dir_id: a, image_name: x, container_mode: buddy}");
        }) == Errc::invalid_value);
}

TEST_CASE("storage block is echoed untouched") {
  RunnableDirConfig config = parse_runnable_config(
      "{dir_id: app, image_name: app, storage: {bucket: b, prefix: p}}");
  REQUIRE(config.storage.has_value());
  CHECK(config.storage->bucket == "b");
  CHECK(config.storage->prefix == "p");
}

TEST_CASE("unknown fields are preserved through a render round trip") {
  RunnableDirConfig config = parse_runnable_config(
      "dir_id: app\nimage_name: app\nowner: data-team\nports: [80, 443]\n");
  CHECK(config.extras.count("owner") == 1);
  CHECK(config.extras.count("ports") == 1);
  RunnableDirConfig reparsed = parse_runnable_config(render_runnable_config(config));
  CHECK(reparsed == config);
}

TEST_CASE("render round trip over generated configs") {
  std::mt19937 rng(20260809);
  const std::string ids[] = {"app", "data-loader", "svc_x", "a1"};
  const std::string registries[] = {"", "registry.example.com", "r"};
  for (int i = 0; i < 200; ++i) {
    RunnableDirConfig config;
    config.dir_id = ids[rng() % 4];
    config.image_name = "img-" + std::to_string(rng() % 50);
    if (rng() % 2) config.registry = registries[rng() % 3];
    config.test_command = (rng() % 3) ? "pytest -q" : "ctest --output-on-failure";
    config.container_mode = (rng() % 2) ? ContainerMode::child : ContainerMode::sibling;
    if (rng() % 2) config.storage = StorageRef{"bucket-" + std::to_string(rng() % 9), "pre/fix"};
    config.build_context = (rng() % 2) ? "devops" : "ci/build";
    if (rng() % 2) config.extras["note"] = "free text";
    RunnableDirConfig reparsed = parse_runnable_config(render_runnable_config(config));
    REQUIRE(reparsed == config);
  }
}

TEST_CASE("changelog parses newest first") {
  Changelog log = parse_changelog(
      "- version: 1.1.0\n  date: 2026-02-01\n  note: better\n"
      "- version: 1.0.0\n  date: 2026-01-01\n  note: first\n");
  REQUIRE(log.entries.size() == 2);
  CHECK(log.latest() == SemVer{1, 1, 0});
  CHECK(log.entries[1].note == "first");
}

TEST_CASE("changelog rejects bad documents") {
  CHECK(code_of([] { parse_changelog(""); }) == Errc::empty_changelog);
  CHECK(code_of([] { parse_changelog("[]"); }) == Errc::empty_changelog);
  CHECK(code_of([] {
          parse_changelog("- version: 1.0.0\n  date: 2026-01-01\n"
                          "- version: 1.1.0\n  date: 2026-02-01\n");
        }) == Errc::non_monotonic_versions);
  CHECK(code_of([] {
          parse_changelog("- version: 1.0.0\n  date: 2026-01-01\n"
                          "- version: 1.0.0\n  date: 2026-01-01\n");
        }) == Errc::non_monotonic_versions);
  CHECK(code_of([] { parse_changelog("- version: one\n  date: 2026-01-01\n"); }) ==
        Errc::malformed_version);
  CHECK(code_of([] { parse_changelog("- version: 1.0.0\n  date: Jan 1\n"); }) ==
        Errc::invalid_value);
}

TEST_CASE("changelog head is the maximum entry") {
  // Decreasing order makes head == max; check against an explicit scan.
  Changelog log = parse_changelog(
      "- {version: 3.2.1, date: 2026-03-01, note: c}\n"
      "- {version: 3.0.4, date: 2026-02-01, note: b}\n"
      "- {version: 0.9.9, date: 2026-01-01, note: a}\n");
  SemVer max = log.entries.front().version;
  for (const ChangelogEntry& entry : log.entries) {
    if (max < entry.version) max = entry.version;
  }
  CHECK(log.latest() == max);
  Changelog reparsed = parse_changelog(render_changelog(log));
  CHECK(reparsed == log);
}

TEST_CASE("image tags render per stage") {
  RunnableDirConfig config = parse_runnable_config("{dir_id: app, image_name: app, registry: r}");
  Changelog log = parse_changelog("- {version: 1.2.0, date: 2026-01-01, note: n}\n");

  CHECK(resolve_image_tag(config, log, Stage::dev).tag() == "r/app:dev-1.2.0");
  CHECK(resolve_image_tag(config, log, Stage::prod).tag() == "r/app:prod-1.2.0");
  // local tags are developer-private and never registry-qualified
  CHECK(resolve_image_tag(config, log, Stage::local, "ann").tag() == "app:local-ann-1.2.0");

  config.registry.reset();
  CHECK(resolve_image_tag(config, log, Stage::dev).tag() == "app:dev-1.2.0");
}

TEST_CASE("stage and user must agree") {
  RunnableDirConfig config = parse_runnable_config("{dir_id: app, image_name: app}");
  Changelog log = parse_changelog("- {version: 1.2.0, date: 2026-01-01, note: n}\n");
  CHECK(code_of([&] { resolve_image_tag(config, log, Stage::local); }) ==
        Errc::stage_user_mismatch);
  CHECK(code_of([&] { resolve_image_tag(config, log, Stage::dev, "ann"); }) ==
        Errc::stage_user_mismatch);
  CHECK(code_of([&] { resolve_image_tag(config, log, Stage::local, "a/b"); }) ==
        Errc::invalid_value);
}

TEST_CASE("tag resolution is pure") {
  RunnableDirConfig config = parse_runnable_config("{dir_id: app, image_name: app}");
  Changelog log = parse_changelog("- {version: 1.2.0, date: 2026-01-01, note: n}\n");
  std::string first = resolve_image_tag(config, log, Stage::dev).tag();
  for (int i = 0; i < 5; ++i) {
    CHECK(resolve_image_tag(config, log, Stage::dev).tag() == first);
  }
}
