// SPDX-License-Identifier: Apache-2.0
//
// Experiment driver: pretrain on a source task, prune the network depth-wise,
// and fine-tune under auto-tuned per-block learning rates or a baseline
// schedule. Each subcommand reads the same JSON config.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "alr/experiment.hpp"
#include "alr/util.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool deterministic = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required) {
  auto* opt = cmd->add_option("--config", args.config_path, "JSON config path");
  if (config_required) opt->required();
  cmd->add_option("--out", args.out_dir, "output directory (overrides run.out)");
  cmd->add_option("--seed", args.seed, "run a single seed (overrides run.seeds)")
      ->each([&](const std::string&) { args.seed_set = true; });
  cmd->add_flag("--deterministic", args.deterministic, "force the determinism flag on");
}

alr::ExperimentConfig load_config(const CommonArgs& args) {
  alr::ExperimentConfig cfg = alr::ExperimentConfig::from_file(args.config_path);
  if (!args.out_dir.empty()) cfg.run.out_dir = args.out_dir;
  if (args.seed_set) cfg.run.seeds = {args.seed};
  if (args.deterministic) cfg.run.deterministic = true;
  return cfg;
}

void print_seed_lines(const alr::ExperimentSummary& summary) {
  for (const auto& ss : summary.seeds) {
    std::cout << "seed " << ss.seed << ": policy=" << ss.policy;
    if (ss.policy == "autolr")
      std::cout << " accepted=" << ss.accepted_epochs << "/" << ss.epochs
                << " median_trials_after_5=" << ss.median_trials_after_epoch5;
    if (ss.policy == "pretrain" || ss.pretrain_test_accuracy > 0.0)
      std::cout << " pretrain_acc=" << ss.pretrain_test_accuracy;
    if (ss.prune.has_value())
      std::cout << " pruned_depth=" << ss.prune->selected_depth
                << " best_score=" << ss.prune->best_score;
    if (ss.policy != "pretrain" && ss.policy != "prune")
      std::cout << " test_acc=" << ss.final_test_accuracy << " recall@1=" << ss.final_recall_at_1;
    std::cout << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layer-wise LR auto-tuning and pruning lab"};
  app.require_subcommand(1);

  CommonArgs pretrain_args, prune_args, finetune_args, compare_args, report_args;
  auto* cmd_pretrain = app.add_subcommand("pretrain", "train on the source task, write pretrained.alrs");
  add_common(cmd_pretrain, pretrain_args, true);
  auto* cmd_prune = app.add_subcommand("prune", "depth search on the target task");
  add_common(cmd_prune, prune_args, true);
  auto* cmd_finetune = app.add_subcommand("finetune", "fine-tune under the configured LR policy");
  add_common(cmd_finetune, finetune_args, true);
  auto* cmd_compare =
      app.add_subcommand("compare-schedulers", "run every compare entry from one pruned snapshot");
  add_common(cmd_compare, compare_args, true);
  auto* cmd_report = app.add_subcommand("report", "rebuild charts from an existing trace.csv");
  add_common(cmd_report, report_args, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_pretrain->parsed()) {
      print_seed_lines(alr::run_pretrain(load_config(pretrain_args)));
    } else if (cmd_prune->parsed()) {
      print_seed_lines(alr::run_prune(load_config(prune_args)));
    } else if (cmd_finetune->parsed()) {
      print_seed_lines(alr::run_experiment(load_config(finetune_args)));
    } else if (cmd_compare->parsed()) {
      const alr::CompareSummary summary = alr::run_compare(load_config(compare_args));
      for (const auto& e : summary.entries)
        std::cout << e.name << " seed " << e.seed << ": test_acc=" << e.final_test_accuracy
                  << " recall@1=" << e.final_recall_at_1 << " start_hash=" << e.start_hash << "\n";
    } else if (cmd_report->parsed()) {
      if (report_args.out_dir.empty())
        throw alr::config_error("report requires --out <dir containing trace.csv>");
      std::cout << alr::regenerate_report(report_args.out_dir) << "\n";
    }
  } catch (const alr::invariant_violation& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
