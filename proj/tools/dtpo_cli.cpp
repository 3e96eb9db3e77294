// dtpo: train, evaluate, sweep and export decision-tree policies.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dtpo/env.hpp"
#include "dtpo/error.hpp"
#include "dtpo/evaluate.hpp"
#include "dtpo/trainer.hpp"
#include "dtpo/tree.hpp"

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string env;
  std::string seed = "0";
  std::string seeds;
  std::string leaves;
  std::string out = ".";
  std::string policy;
  int threads = 1;
  bool quiet = false;
  bool no_timing = false;
};

/// Flags forwarded verbatim to dtpo::set_option.
const std::vector<std::pair<std::string, std::string>> kTrainFlags = {
    {"iterations", "number of training iterations N"},
    {"timesteps", "environment steps per iteration T"},
    {"eta", "step size on the policy logits"},
    {"gamma", "discount factor"},
    {"lambda", "GAE trace decay"},
    {"rollouts", "episodes in the final evaluation (default 1000)"},
    {"epochs", "critic epochs per iteration"},
    {"minibatch", "critic minibatch size"},
    {"clip", "critic value-loss clip"},
    {"eval-every", "iterations between deterministic evaluations"},
    {"eval-rollouts", "episodes per in-training evaluation"},
    {"critic-lr", "critic Adam learning rate"},
};

std::vector<long long> parse_list(const std::string& text, const std::string& what) {
  std::vector<long long> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      values.push_back(v);
    } catch (const std::exception&) {
      throw dtpo::Error(dtpo::ErrorCode::InvalidArgument,
                        "--" + what + " expects integers separated by commas, got '" + text + "'");
    }
  }
  if (values.empty()) {
    throw dtpo::Error(dtpo::ErrorCode::InvalidArgument, "--" + what + " is empty");
  }
  return values;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw dtpo::Error(dtpo::ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) {
    throw dtpo::Error(dtpo::ErrorCode::Io, "cannot write " + path.string());
  }
}

fs::path prepare_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw dtpo::Error(dtpo::ErrorCode::Io, "cannot create output directory " + dir);
  }
  return fs::path(dir);
}

/// A policy document turned into a greedy policy; stochastic leaves are
/// determinized.
dtpo::PolicyTree load_policy(const std::string& path, dtpo::PolicyDocument* doc_out = nullptr) {
  if (path.empty()) throw dtpo::Error(dtpo::ErrorCode::InvalidArgument, "--policy is required");
  dtpo::PolicyDocument doc = dtpo::deserialize(read_file(path));
  dtpo::PolicyTree policy{doc.tree, dtpo::is_one_hot(doc.tree) ? dtpo::PolicyMode::Deterministic
                                                               : dtpo::PolicyMode::Stochastic};
  if (doc_out) *doc_out = std::move(doc);
  return policy;
}

struct RunOutcome {
  dtpo::TrainResult result;
  dtpo::EvalReport report;
};

/// Trains one seed, streaming the metrics CSV and writing the policy files
/// under `prefix`.
RunOutcome run_training(const dtpo::Environment& prototype, const dtpo::TrainConfig& config,
                        const fs::path& dir, const std::string& prefix, const Options& opt) {
  auto env = prototype.clone();
  const dtpo::EnvSpec& spec = env->spec();
  const fs::path metrics_path = dir / (prefix + "metrics_" + std::to_string(config.seed) + ".csv");
  std::ofstream metrics(metrics_path);
  if (!metrics) throw dtpo::Error(dtpo::ErrorCode::Io, "cannot write " + metrics_path.string());
  metrics << dtpo::metrics_csv_header() << '\n';

  RunOutcome run;
  run.result = dtpo::train(*env, config, [&](const dtpo::IterationMetrics& m) {
    metrics << dtpo::metrics_csv_row(m) << '\n' << std::flush;
    if (!opt.quiet && !std::isnan(m.det_eval_return)) {
      std::fprintf(stderr, "[%s seed %llu] iteration %d: eval %.2f, best %.2f, %d leaves\n",
                   spec.name.c_str(), static_cast<unsigned long long>(config.seed), m.iteration,
                   m.det_eval_return, m.best_return, m.leaves);
    }
  });
  if (!metrics) throw dtpo::Error(dtpo::ErrorCode::Io, "cannot write " + metrics_path.string());

  const std::string tag = std::to_string(config.seed);
  write_file(dir / (prefix + "policy_" + tag + ".json"),
             dtpo::serialize(run.result.best_policy.tree, spec.feature_names, spec.action_names));
  write_file(dir / (prefix + "policy_" + tag + ".dot"),
             dtpo::to_dot(run.result.best_policy, spec.feature_names, spec.action_names));
  run.report = dtpo::evaluate(*env, run.result.best_policy, config.final_rollouts, config.seed,
                              opt.threads);
  return run;
}

std::vector<std::uint64_t> seed_list(const Options& opt) {
  std::vector<std::uint64_t> seeds;
  for (long long s : parse_list(opt.seeds.empty() ? opt.seed : opt.seeds, "seeds")) {
    if (s < 0) throw dtpo::Error(dtpo::ErrorCode::InvalidArgument, "seeds must be >= 0");
    seeds.push_back(static_cast<std::uint64_t>(s));
  }
  return seeds;
}

int cmd_train(const Options& opt, dtpo::TrainConfig config) {
  const auto env = dtpo::make_environment(opt.env);
  if (!opt.leaves.empty()) dtpo::set_option(config, "leaves", opt.leaves);
  const std::vector<std::uint64_t> seeds = seed_list(opt);
  config.validate();
  const fs::path dir = prepare_out_dir(opt.out);
  for (std::uint64_t seed : seeds) {
    config.seed = seed;
    const RunOutcome run = run_training(*env, config, dir, "", opt);
    std::printf("%s seed %llu: %s over %d rollouts (%d leaves)\n", env->spec().name.c_str(),
                static_cast<unsigned long long>(seed), run.report.summary().c_str(),
                run.report.count, run.result.best_policy.tree.leaf_count());
    std::fflush(stdout);
  }
  return 0;
}

int cmd_evaluate(const Options& opt, const dtpo::TrainConfig& config) {
  const auto env = dtpo::make_environment(opt.env);
  dtpo::PolicyTree policy = load_policy(opt.policy);
  if (policy.mode == dtpo::PolicyMode::Stochastic) policy = dtpo::determinize(policy);
  const std::uint64_t seed = seed_list(opt).front();
  const dtpo::EvalReport report =
      dtpo::evaluate(*env, policy, config.final_rollouts, seed, opt.threads);
  std::printf("%s seed %llu: %s over %d rollouts\n", env->spec().name.c_str(),
              static_cast<unsigned long long>(seed), report.summary().c_str(), report.count);
  if (opt.out != ".") {
    const fs::path path(opt.out);
    if (path.has_parent_path()) prepare_out_dir(path.parent_path().string());
    write_file(path, dtpo::EvalReport::csv_header() + "\n" + report.csv_row(env->spec().name) + "\n");
  }
  return 0;
}

int cmd_sweep(const Options& opt, dtpo::TrainConfig config) {
  const auto env = dtpo::make_environment(opt.env);
  if (opt.leaves.empty()) {
    throw dtpo::Error(dtpo::ErrorCode::InvalidArgument, "sweep needs --leaves, e.g. 2,4,16");
  }
  std::vector<long long> budgets = parse_list(opt.leaves, "leaves");
  std::sort(budgets.begin(), budgets.end());
  budgets.erase(std::unique(budgets.begin(), budgets.end()), budgets.end());
  const std::vector<std::uint64_t> seeds = seed_list(opt);
  for (long long b : budgets) {
    config.leaf_budget = static_cast<int>(b);
    config.validate();
  }
  const fs::path dir = prepare_out_dir(opt.out);
  const fs::path table_path = dir / "sweep.csv";
  std::ofstream table(table_path);
  if (!table) throw dtpo::Error(dtpo::ErrorCode::Io, "cannot write " + table_path.string());
  table << "env,leaves,seed,return\n";
  for (long long budget : budgets) {
    config.leaf_budget = static_cast<int>(budget);
    for (std::uint64_t seed : seeds) {
      config.seed = seed;
      const std::string prefix = "leaves" + std::to_string(budget) + "_";
      const RunOutcome run = run_training(*env, config, dir, prefix, opt);
      table << env->spec().name << ',' << budget << ',' << seed << ','
            << dtpo::format_number(run.report.mean) << '\n'
            << std::flush;
      std::printf("%s leaves %lld seed %llu: %s\n", env->spec().name.c_str(), budget,
                  static_cast<unsigned long long>(seed), run.report.summary().c_str());
      std::fflush(stdout);
    }
  }
  if (!table) throw dtpo::Error(dtpo::ErrorCode::Io, "cannot write " + table_path.string());
  return 0;
}

int cmd_export_dot(const Options& opt) {
  dtpo::PolicyDocument doc;
  const dtpo::PolicyTree policy = dtpo::merge_redundant(load_policy(opt.policy, &doc));
  const std::string dot = dtpo::to_dot(policy, doc.feature_names, doc.action_names);
  if (opt.out == "." || opt.out == "-") {
    std::cout << dot;
  } else {
    const fs::path path(opt.out);
    if (path.has_parent_path()) prepare_out_dir(path.parent_path().string());
    write_file(path, dot);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decision tree policy optimization"};
  app.require_subcommand(1);
  app.set_config("--config", "", "flat key = value file using the flag names as keys");
  app.allow_config_extras(CLI::config_extras_mode::error);

  Options opt;
  std::vector<std::string> envs = dtpo::environment_names();
  std::string env_help = "environment:";
  for (const auto& e : envs) env_help += " " + e;
  app.add_option("--env", opt.env, env_help);
  app.add_option("--seed", opt.seed, "random seed (default 0)");
  app.add_option("--seeds", opt.seeds, "comma-separated seeds, overrides --seed");
  app.add_option("--leaves", opt.leaves, "leaf budget (a comma-separated list for sweep)");
  app.add_option("--out", opt.out,
                 "output directory (train, sweep) or file (evaluate, export-dot)");
  app.add_option("--policy", opt.policy, "policy JSON (evaluate, export-dot)");
  app.add_option("--threads", opt.threads, "threads for evaluation rollouts")
      ->check(CLI::PositiveNumber);
  app.add_flag("--quiet", opt.quiet, "no progress lines on stderr");
  app.add_flag("--no-timing", opt.no_timing, "write 0 in the seconds column of the metrics");

  std::vector<std::pair<std::string, CLI::Option*>> forwarded;
  std::vector<std::string> forwarded_values(kTrainFlags.size());
  for (std::size_t i = 0; i < kTrainFlags.size(); ++i) {
    forwarded.emplace_back(kTrainFlags[i].first,
                           app.add_option("--" + kTrainFlags[i].first, forwarded_values[i],
                                          kTrainFlags[i].second));
  }

  auto* train = app.add_subcommand("train", "train one policy per seed");
  auto* evaluate = app.add_subcommand("evaluate", "evaluate a saved policy");
  auto* sweep = app.add_subcommand("sweep", "train across leaf budgets and seeds");
  auto* export_dot = app.add_subcommand("export-dot", "write a saved policy as Graphviz DOT");
  for (auto* sub : {train, evaluate, sweep, export_dot}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    dtpo::TrainConfig config;
    config.record_time = !opt.no_timing;
    for (std::size_t i = 0; i < forwarded.size(); ++i) {
      if (forwarded[i].second->count() > 0) {
        dtpo::set_option(config, forwarded[i].first, forwarded_values[i]);
      }
    }
    if (!export_dot->parsed() && opt.env.empty()) {
      throw dtpo::Error(dtpo::ErrorCode::InvalidArgument, "--env is required");
    }
    if (train->parsed()) return cmd_train(opt, config);
    if (evaluate->parsed()) return cmd_evaluate(opt, config);
    if (sweep->parsed()) return cmd_sweep(opt, config);
    return cmd_export_dot(opt);
  } catch (const dtpo::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
