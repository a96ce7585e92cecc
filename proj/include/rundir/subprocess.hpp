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

#include <cerrno>
#include <chrono>
#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include "rundir/backend.hpp"
#include "rundir/errors.hpp"

namespace rundir {

/// Runs a child process and captures both output streams. Throws
/// RuntimeUnavailable when the binary cannot be spawned at all.
inline RunResult exec_capture(const std::vector<std::string>& argv,
                              const std::optional<std::string>& cwd = std::nullopt) {
  if (argv.empty()) {
    fail(Errc::invalid_value, "empty argument vector");
  }

  int out_pipe[2];
  int err_pipe[2];
  int status_pipe[2];  // reports exec failure back to the parent
  if (pipe(out_pipe) != 0 || pipe(err_pipe) != 0 || pipe(status_pipe) != 0) {
    fail(Errc::runtime_unavailable, std::string("pipe: ") + std::strerror(errno));
  }
  fcntl(status_pipe[1], F_SETFD, FD_CLOEXEC);

  auto start = std::chrono::steady_clock::now();
  pid_t pid = fork();
  if (pid < 0) {
    fail(Errc::runtime_unavailable, std::string("fork: ") + std::strerror(errno));
  }

  if (pid == 0) {
    if (cwd && chdir(cwd->c_str()) != 0) {
      int err = errno;
      (void)!write(status_pipe[1], &err, sizeof(err));
      _exit(127);
    }
    dup2(out_pipe[1], STDOUT_FILENO);
    dup2(err_pipe[1], STDERR_FILENO);
    close(out_pipe[0]);
    close(out_pipe[1]);
    close(err_pipe[0]);
    close(err_pipe[1]);
    close(status_pipe[0]);

    std::vector<char*> c_argv;
    c_argv.reserve(argv.size() + 1);
    for (const std::string& arg : argv) {
      c_argv.push_back(const_cast<char*>(arg.c_str()));
    }
    c_argv.push_back(nullptr);
    execvp(c_argv[0], c_argv.data());
    int err = errno;
    (void)!write(status_pipe[1], &err, sizeof(err));
    _exit(127);
  }

  close(out_pipe[1]);
  close(err_pipe[1]);
  close(status_pipe[1]);

  RunResult result;
  struct Stream {
    int fd;
    std::string* sink;
    bool open = true;
  };
  int spawn_errno = 0;
  std::string status_buf;
  Stream streams[3] = {{out_pipe[0], &result.stdout_text},
                       {err_pipe[0], &result.stderr_text},
                       {status_pipe[0], &status_buf}};

  char buf[4096];
  while (streams[0].open || streams[1].open || streams[2].open) {
    pollfd fds[3];
    nfds_t n = 0;
    for (Stream& s : streams) {
      if (s.open) {
        fds[n].fd = s.fd;
        fds[n].events = POLLIN;
        ++n;
      }
    }
    if (poll(fds, n, -1) < 0) {
      if (errno == EINTR) continue;
      break;
    }
    for (nfds_t i = 0; i < n; ++i) {
      if (!(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      for (Stream& s : streams) {
        if (s.open && s.fd == fds[i].fd) {
          ssize_t got = read(s.fd, buf, sizeof(buf));
          if (got > 0) {
            s.sink->append(buf, static_cast<std::size_t>(got));
          } else {
            close(s.fd);
            s.open = false;
          }
        }
      }
    }
  }
  if (status_buf.size() >= sizeof(int)) {
    std::memcpy(&spawn_errno, status_buf.data(), sizeof(int));
  }

  int wstatus = 0;
  waitpid(pid, &wstatus, 0);
  auto elapsed = std::chrono::steady_clock::now() - start;
  result.duration_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();

  if (spawn_errno != 0) {
    fail(Errc::runtime_unavailable,
         argv[0] + ": " + std::strerror(spawn_errno));
  }
  if (WIFEXITED(wstatus)) {
    result.exit_code = WEXITSTATUS(wstatus);
  } else if (WIFSIGNALED(wstatus)) {
    result.exit_code = 128 + WTERMSIG(wstatus);
    if (result.exit_code > 255) result.exit_code = 255;
  }
  return result;
}

}  // namespace rundir
