// Copyright 2026 The Poise Authors.
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
//
// Subprocess proposer transport: spawns a command once and speaks
// line-delimited JSON over its standard streams.

#ifndef POISE_PROPOSER_TRANSPORT_HPP_
#define POISE_PROPOSER_TRANSPORT_HPP_

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstring>
#include <string>

#include "poise/proposal.hpp"

namespace poise {

class SubprocessProposer : public ProposerTransport {
 public:
  explicit SubprocessProposer(const std::string& command) : command_(command) {}

  ~SubprocessProposer() override { shutdown(); }

  SubprocessProposer(const SubprocessProposer&) = delete;
  SubprocessProposer& operator=(const SubprocessProposer&) = delete;

  std::string exchange(const std::string& request_line) override {
    if (pid_ < 0) spawn();
    const std::string line = request_line + "\n";
    ssize_t written = ::write(to_child_, line.data(), line.size());
    if (written != static_cast<ssize_t>(line.size())) {
      throw PoiseError("proposer subprocess: write failed");
    }
    std::string response;
    char c = 0;
    while (true) {
      const ssize_t n = ::read(from_child_, &c, 1);
      if (n <= 0) throw PoiseError("proposer subprocess: stream closed before response");
      if (c == '\n') break;
      response.push_back(c);
    }
    return response;
  }

 private:
  void spawn() {
    int in_pipe[2];   // parent -> child
    int out_pipe[2];  // child -> parent
    require(::pipe(in_pipe) == 0 && ::pipe(out_pipe) == 0,
            "proposer subprocess: pipe failed");
    pid_ = ::fork();
    require(pid_ >= 0, "proposer subprocess: fork failed");
    if (pid_ == 0) {
      ::dup2(in_pipe[0], STDIN_FILENO);
      ::dup2(out_pipe[1], STDOUT_FILENO);
      ::close(in_pipe[0]);
      ::close(in_pipe[1]);
      ::close(out_pipe[0]);
      ::close(out_pipe[1]);
      ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
      std::_Exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
  }

  void shutdown() {
    if (to_child_ >= 0) ::close(to_child_);
    if (from_child_ >= 0) ::close(from_child_);
    if (pid_ > 0) {
      int status = 0;
      ::waitpid(pid_, &status, 0);
    }
    pid_ = -1;
    to_child_ = from_child_ = -1;
  }

  std::string command_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
};

}  // namespace poise

#endif  // POISE_PROPOSER_TRANSPORT_HPP_
