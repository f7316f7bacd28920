// Command line front end for the unranking experiments.
//
//   unrank [--config FILE] [--set key=value]... [--seed N] <command>
//
// Commands: generate, train, unlearn --method M, evaluate [--method M],
// sweep --axis {k,gamma,fraction,method}, report.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "unrank/error.h"
#include "unrank/harness.h"

int main(int argc, char** argv) {
  CLI::App app{"Corrective unranking for neural rankers"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "experiment config (JSON)")
      ->check(CLI::ExistingFile);
  app.add_option("--set", overrides, "override a config field, key=value")
      ->take_all();
  app.add_option("--seed", seed, "replace every seed in the config");

  auto* generate = app.add_subcommand("generate", "build corpus and forget set");
  auto* train = app.add_subcommand("train", "train the initial ranker");
  std::string method;
  auto* unlearn = app.add_subcommand("unlearn", "run an unlearning method");
  unlearn->add_option("--method", method, "curd|retrain|cf|amnesiac|neggrad|badt")
      ->required();
  std::string target = "teacher";
  auto* evaluate = app.add_subcommand("evaluate", "compute metrics");
  evaluate->add_option("--method", target, "method name or 'teacher'");
  std::string axis;
  auto* sweep = app.add_subcommand("sweep", "parameter sweep");
  sweep->add_option("--axis", axis, "k|gamma|fraction|method")->required();
  auto* report = app.add_subcommand("report", "collect metrics into report.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? unrank::kExitOk : unrank::kExitUsage;
  }

  unrank::ExperimentConfig cfg;
  try {
    std::optional<std::filesystem::path> path;
    if (!config_path.empty()) path = config_path;
    cfg = unrank::LoadConfig(path, overrides, seed);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return unrank::kExitUsage;
  }

  try {
    if (generate->parsed()) return unrank::CmdGenerate(cfg);
    if (train->parsed()) return unrank::CmdTrain(cfg);
    if (unlearn->parsed()) return unrank::CmdUnlearn(cfg, method);
    if (evaluate->parsed()) return unrank::CmdEvaluate(cfg, target);
    if (sweep->parsed()) return unrank::CmdSweep(cfg, axis);
    if (report->parsed()) return unrank::CmdReport(cfg);
  } catch (const unrank::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return unrank::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return unrank::kExitRuntime;
  }
  return unrank::kExitUsage;
}
