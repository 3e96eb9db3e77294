#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>

#include "dtpo/tree.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int status = 0;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Scratch directory per test case, removed afterwards.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name)
      : dir(fs::temp_directory_path() / ("dtpo_cli_" + name + "_" + std::to_string(::getpid()))) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
};

Result run(const Scratch& s, const std::string& args) {
  const fs::path out = s.dir / "stdout.txt", err = s.dir / "stderr.txt";
  const std::string cmd = std::string("\"") + DTPO_CLI_PATH + "\" " + args + " > \"" +
                          out.string() + "\" 2> \"" + err.string() + "\"";
  const int raw = std::system(cmd.c_str());
  Result r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

int count_lines(const std::string& text) {
  return static_cast<int>(std::count(text.begin(), text.end(), '\n'));
}

int count_dot_nodes(const std::string& dot) {
  const std::regex node(R"(^\s*n\d+ \[)");
  int n = 0;
  std::istringstream in(dot);
  for (std::string line; std::getline(in, line);) n += std::regex_search(line, node);
  return n;
}

const char* kQuick = "--iterations 3 --timesteps 500 --rollouts 20 --eval-rollouts 3 --quiet";

}  // namespace

TEST_CASE("train writes metrics, policy and dot files that parse") {
  Scratch s("train");
  const Result r = run(s, std::string("train --env xor --seed 0 ") + kQuick + " --out \"" +
                              s.dir.string() + "\"");
  REQUIRE_MESSAGE(r.status == 0, r.err);
  const std::string metrics = slurp(s.dir / "metrics_0.csv");
  CHECK(metrics.rfind("iteration,env_steps,", 0) == 0);
  CHECK(count_lines(metrics) == 4);
  const dtpo::PolicyDocument doc = dtpo::deserialize(slurp(s.dir / "policy_0.json"));
  CHECK(doc.feature_names.size() == 2);
  CHECK(doc.action_names == std::vector<std::string>{"zero", "one"});
  CHECK(dtpo::is_one_hot(doc.tree));
  CHECK(slurp(s.dir / "policy_0.dot").rfind("digraph policy {", 0) == 0);
  CHECK(r.out.find("xor seed 0:") != std::string::npos);

  // Re-evaluating under the same seed and rollout count reproduces the report.
  const Result e = run(s, "evaluate --env xor --seed 0 --rollouts 20 --policy \"" +
                              (s.dir / "policy_0.json").string() + "\"");
  REQUIRE_MESSAGE(e.status == 0, e.err);
  const std::regex summary(R"(: (-?[0-9.]+ ± [0-9.]+) over 20 rollouts)");
  std::smatch a, b;
  REQUIRE(std::regex_search(r.out, a, summary));
  REQUIRE(std::regex_search(e.out, b, summary));
  CHECK(a[1] == b[1]);
}

TEST_CASE("unknown environments are rejected with a message naming them") {
  Scratch s("nosuch");
  const Result r = run(s, "train --env nosuch --out \"" + s.dir.string() + "\"");
  CHECK(r.status != 0);
  CHECK(r.err.find("nosuch") != std::string::npos);
  CHECK(count_lines(r.err) == 1);
  CHECK_FALSE(fs::exists(s.dir / "metrics_0.csv"));
}

TEST_CASE("evaluate rejects policies for another environment and malformed files") {
  Scratch s("mismatch");
  const Result t = run(s, std::string("train --env xor ") + kQuick + " --out \"" +
                              s.dir.string() + "\"");
  REQUIRE(t.status == 0);
  const Result r = run(s, "evaluate --env cartpole --policy \"" +
                              (s.dir / "policy_0.json").string() + "\"");
  CHECK(r.status != 0);
  CHECK(r.err.find("features") != std::string::npos);

  std::ofstream(s.dir / "broken.json") << "{\"nodes\": [{\"type\": \"split\"}]}";
  const Result m = run(s, "evaluate --env xor --policy \"" + (s.dir / "broken.json").string() + "\"");
  CHECK(m.status != 0);
  CHECK(m.err.find("malformed") != std::string::npos);
}

TEST_CASE("sweep writes one row per budget and seed, budgets ascending") {
  Scratch s("sweep");
  const Result r = run(s, std::string("sweep --env cartpole --leaves 4,2 --seeds 0,1 ") + kQuick +
                              " --out \"" + s.dir.string() + "\"");
  REQUIRE_MESSAGE(r.status == 0, r.err);
  std::istringstream table(slurp(s.dir / "sweep.csv"));
  std::string line;
  std::getline(table, line);
  CHECK(line == "env,leaves,seed,return");
  std::vector<std::string> prefixes;
  while (std::getline(table, line)) prefixes.push_back(line.substr(0, line.rfind(',')));
  CHECK(prefixes == std::vector<std::string>{"cartpole,2,0", "cartpole,2,1", "cartpole,4,0",
                                             "cartpole,4,1"});
}

TEST_CASE("export-dot merges redundant splits and keeps thresholds verbatim") {
  Scratch s("dot");
  const fs::path policy = s.dir / "policy.json";
  std::ofstream(policy) << R"({
    "feature_names": ["pole angle"], "action_names": ["left", "right"],
    "nodes": [
      {"type": "split", "feature": 0, "threshold": 0.30000000000000004, "left": 1, "right": 2},
      {"type": "split", "feature": 0, "threshold": -0.1, "left": 3, "right": 4},
      {"type": "leaf", "output": [0, 1]},
      {"type": "leaf", "output": [1, 0]},
      {"type": "leaf", "output": [1, 0]}]})";
  const Result r = run(s, "export-dot --policy \"" + policy.string() + "\"");
  REQUIRE_MESSAGE(r.status == 0, r.err);
  CHECK(count_dot_nodes(r.out) == 3);
  CHECK(r.out.find("pole angle ≤ 0.30000000000000004") != std::string::npos);
  CHECK(r.out.find("-0.1") == std::string::npos);

  const Result single = run(s, "export-dot --policy \"" + policy.string() + "\" --out \"" +
                                   (s.dir / "p.dot").string() + "\"");
  REQUIRE(single.status == 0);
  CHECK(slurp(s.dir / "p.dot") == r.out);
}

TEST_CASE("config file values sit between defaults and flags") {
  Scratch s("config");
  const fs::path cfg = s.dir / "run.cfg";
  std::ofstream(cfg) << "# quick run\nenv = xor\niterations = 2\ntimesteps = 300\n"
                        "rollouts = 5\neval-rollouts = 2\nquiet = true\n";
  const Result a = run(s, "train --config \"" + cfg.string() + "\" --out \"" +
                              (s.dir / "a").string() + "\"");
  REQUIRE_MESSAGE(a.status == 0, a.err);
  CHECK(count_lines(slurp(s.dir / "a" / "metrics_0.csv")) == 3);
  CHECK(slurp(s.dir / "a" / "metrics_0.csv").find(",300,") != std::string::npos);

  const Result b = run(s, "train --config \"" + cfg.string() + "\" --iterations 4 --out \"" +
                              (s.dir / "b").string() + "\"");
  REQUIRE_MESSAGE(b.status == 0, b.err);
  CHECK(count_lines(slurp(s.dir / "b" / "metrics_0.csv")) == 5);

  std::ofstream(s.dir / "bad.cfg") << "colour = blue\n";
  const Result c = run(s, "train --env xor --config \"" + (s.dir / "bad.cfg").string() + "\"");
  CHECK(c.status != 0);
  CHECK(c.err.find("colour") != std::string::npos);
}

TEST_CASE("bad flag values fail with a one-line message") {
  Scratch s("flags");
  const Result r = run(s, "train --env xor --leaves 0 --out \"" + s.dir.string() + "\"");
  CHECK(r.status != 0);
  CHECK(r.err.find("leaves") != std::string::npos);
  const Result g = run(s, "train --env xor --gamma 2 --out \"" + s.dir.string() + "\"");
  CHECK(g.status != 0);
  CHECK(g.err.find("gamma") != std::string::npos);
  const Result none = run(s, "");
  CHECK(none.status != 0);
}
