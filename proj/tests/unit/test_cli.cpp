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
// End-to-end CLI checks against the built binary.

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <string>

#include <doctest.h>
#include <json.hpp>

#include "poise/archive.hpp"
#include "test_util.hpp"

namespace {

struct CommandResult {
  int exit_code = -1;
  std::string output;  // stdout only
};

CommandResult run_cli(const std::string& args, const std::string& stdin_text = "") {
  const std::string cmd_base = std::string(POISE_CLI_PATH) + " " + args;
  std::string cmd;
  if (!stdin_text.empty()) {
    const std::string in_path = "/tmp/poise_cli_stdin.json";
    std::ofstream f(in_path);
    f << stdin_text;
    f.close();
    cmd = cmd_base + " < " + in_path + " 2>/dev/null";
  } else {
    cmd = cmd_base + " 2>/dev/null";
  }
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CommandResult result;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) {
    result.output.append(buf.data(), n);
  }
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string fixtures_arg(const std::string& name) {
  return std::string(POISE_SOURCE_DIR) + "/fixtures/" + name;
}

std::string small_config_path() {
  static std::string path;
  if (path.empty()) {
    std::ifstream in(std::string(POISE_SOURCE_DIR) + "/configs/default_run.json");
    nlohmann::json j;
    in >> j;
    j["generations"] = 1;
    j["parents_per_round"] = 1;
    j["population_size"] = 1;
    j["trainer"]["steps"] = 4;
    path = "/tmp/poise_cli_config.json";
    std::ofstream out(path);
    out << j.dump();
  }
  return path;
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("estimate: grpo on the canonical group") {
  const std::string group = R"({
    "prompt_id": "p",
    "samples": [
      {"reward_correct": 1, "reward_format": 0, "valid": true, "length": 100, "token_entropy": 0.5},
      {"reward_correct": 0, "reward_format": 0, "valid": true, "length": 100, "token_entropy": 0.5},
      {"reward_correct": 0, "reward_format": 0, "valid": true, "length": 100, "token_entropy": 0.5},
      {"reward_correct": 0, "reward_format": 0, "valid": true, "length": 100, "token_entropy": 0.5}
    ],
    "config": {"epsilon": 0.0}
  })";
  const CommandResult r = run_cli("estimate --estimator grpo", group);
  CHECK(r.exit_code == 0);
  const nlohmann::json out = nlohmann::json::parse(r.output);
  CHECK(out.at("values")[0].get<double>() == doctest::Approx(1.7321).epsilon(1e-4));
  CHECK(out.at("values")[1].get<double>() == doctest::Approx(-0.5774).epsilon(1e-4));
}

TEST_CASE("estimate: fa all-fail constants through the CLI") {
  const std::string group = R"({
    "prompt_id": "p",
    "samples": [
      {"reward_correct": 0, "valid": false, "length": 80, "token_entropy": 0.2},
      {"reward_correct": 0, "valid": true, "length": 90, "token_entropy": 0.4},
      {"reward_correct": 0, "valid": true, "length": 70, "token_entropy": 0.1}
    ]
  })";
  const CommandResult r = run_cli("estimate --estimator fa", group);
  CHECK(r.exit_code == 0);
  const nlohmann::json out = nlohmann::json::parse(r.output);
  CHECK(out.at("values")[0].get<double>() == -2.0);
  CHECK(out.at("values")[1].get<double>() == -0.5);
  CHECK(out.at("values")[2].get<double>() == -0.5);
}

TEST_CASE("estimate: batch input routes through the batch estimator") {
  const std::string batch = R"({
    "groups": [
      {"prompt_id": "a", "samples": [
        {"reward_correct": 1, "valid": true, "length": 100, "token_entropy": 0.5},
        {"reward_correct": 0, "valid": true, "length": 100, "token_entropy": 0.5}]},
      {"prompt_id": "b", "samples": [
        {"reward_correct": 0, "valid": true, "length": 100, "token_entropy": 0.5},
        {"reward_correct": 0, "valid": true, "length": 100, "token_entropy": 0.5}]}
    ],
    "config": {"epsilon": 0.0}
  })";
  const CommandResult r = run_cli("estimate --estimator bn", batch);
  CHECK(r.exit_code == 0);
  const nlohmann::json out = nlohmann::json::parse(r.output);
  REQUIRE(out.is_array());
  CHECK(out[0].at("values")[0].get<double>() == doctest::Approx(1.4142).epsilon(1e-4));
  CHECK(out[1].at("values")[0].get<double>() == 0.0);
}

TEST_CASE("estimate: unknown estimator name exits nonzero") {
  const CommandResult r = run_cli("estimate --estimator nope", "{}");
  CHECK(r.exit_code != 0);
}

TEST_CASE("estimate: malformed JSON exits nonzero") {
  const CommandResult r = run_cli("estimate --estimator grpo", "{broken");
  CHECK(r.exit_code != 0);
}

TEST_CASE("unknown verb is rejected with usage") {
  const CommandResult r = run_cli("frobnicate");
  CHECK(r.exit_code != 0);
}

TEST_CASE("fixtures: loads the reference table and reports 64 rows") {
  const CommandResult r = run_cli("fixtures --file " + fixtures_arg("paper_results.json"));
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("64 rows loaded") != std::string::npos);
}

TEST_CASE("report frontier on the fixture contains the reference endpoints") {
  const CommandResult r = run_cli("report --fixture " + fixtures_arg("paper_results.json") +
                                  " --kind frontier --format csv");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("0,47.8") != std::string::npos);
  CHECK(r.output.find("4,52.5") != std::string::npos);
}

TEST_CASE("report retention on the fixture contains the BN row") {
  const CommandResult r = run_cli("report --fixture " + fixtures_arg("paper_results.json") +
                                  " --kind retention --format csv");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("BN-GRPO,44.2,VM-AV-GRPO,52.5,+8.3") != std::string::npos);
}

TEST_CASE("report tradeoff on the compression fixture contains the DACE row") {
  const CommandResult r =
      run_cli("report --fixture " + fixtures_arg("compression_results.json") +
              " --kind tradeoff --format csv");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("DACE-GRPO,51.7,335.7,0.709") != std::string::npos);
}

TEST_CASE("report output is byte-identical across invocations") {
  const std::string args = "report --fixture " + fixtures_arg("paper_results.json") +
                           " --kind retention --format json";
  const CommandResult a = run_cli(args);
  const CommandResult b = run_cli(args);
  CHECK(a.exit_code == 0);
  CHECK(a.output == b.output);
}

TEST_CASE("export dot on the fixture contains stated edges") {
  const CommandResult r =
      run_cli("export --fixture " + fixtures_arg("paper_results.json"));
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("\"GRPO\" -> \"RF-GRPO\";") != std::string::npos);
  CHECK(r.output.find("\"BN-GRPO\" -> \"AV-GRPO\";") != std::string::npos);
}

TEST_CASE("run: missing config exits nonzero naming the path") {
  const CommandResult r = run_cli("run --config /tmp/definitely_missing_poise.json");
  CHECK(r.exit_code != 0);
}

TEST_CASE("run: writes an archive and prints a summary; same seed, same bytes") {
  const std::string cfg = small_config_path();
  const CommandResult r1 = run_cli("run --config " + cfg + " --seed 5 --archive /tmp/poise_a1.jsonl");
  CHECK(r1.exit_code == 0);
  CHECK(r1.output.find("best ") != std::string::npos);
  const CommandResult r2 = run_cli("run --config " + cfg + " --seed 5 --archive /tmp/poise_a2.jsonl");
  CHECK(r2.exit_code == 0);

  std::ifstream a1("/tmp/poise_a1.jsonl"), a2("/tmp/poise_a2.jsonl");
  const std::string s1((std::istreambuf_iterator<char>(a1)), std::istreambuf_iterator<char>());
  const std::string s2((std::istreambuf_iterator<char>(a2)), std::istreambuf_iterator<char>());
  CHECK(!s1.empty());
  CHECK(s1 == s2);

  // the archive loads back and the score command works against it
  const poise::LineageTree tree = poise::load_archive("/tmp/poise_a1.jsonl");
  CHECK(tree.size() >= 1);
  const CommandResult score = run_cli("score --archive /tmp/poise_a1.jsonl --node " +
                                      tree.entries().front().node_id);
  CHECK(score.exit_code == 0);
  const nlohmann::json sj = nlohmann::json::parse(score.output);
  CHECK(sj.contains("u_pareto"));
  CHECK(sj.contains("score"));
  std::remove("/tmp/poise_a1.jsonl");
  std::remove("/tmp/poise_a2.jsonl");
}

TEST_CASE("run: --steps and --group-size override the trainer config") {
  const std::string cfg = small_config_path();
  const CommandResult r = run_cli("run --config " + cfg +
                                  " --steps 3 --group-size 4 --archive /tmp/poise_a3.jsonl");
  CHECK(r.exit_code == 0);
  const poise::LineageTree tree = poise::load_archive("/tmp/poise_a3.jsonl");
  for (const auto& e : tree.entries()) CHECK(e.trajectory.steps() == 3);
  std::remove("/tmp/poise_a3.jsonl");
}

TEST_SUITE_END();
