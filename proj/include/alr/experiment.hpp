// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "alr/autolr.hpp"
#include "alr/dataset.hpp"
#include "alr/network.hpp"
#include "alr/optimizer.hpp"
#include "alr/pruning.hpp"
#include "alr/schedules.hpp"

namespace alr {

inline constexpr double kAccGradSpreadWarnThreshold = 0.25;

struct DataSourceConfig {
  enum class Kind { kSynthetic, kCsv };
  Kind kind = Kind::kSynthetic;
  SyntheticSpec synthetic;
  std::string csv_path;

  Dataset load() const;
};

struct DatasetConfig {
  std::optional<DataSourceConfig> source;  // required unless a snapshot is supplied
  DataSourceConfig target;
};

struct PruningConfig {
  bool enabled = false;
  int budget_epochs = 30;
  std::string score = "accuracy";  // or "recall1"
};

struct RunConfig {
  int epochs = 30;
  int pretrain_epochs = 20;
  int batch_size = 40;
  double initial_lr = 1e-3;
  std::vector<std::uint64_t> seeds = {1};
  bool deterministic = false;
  std::string out_dir = "runs/out";
  std::string snapshot_path;  // optional pretrained/pruned starting snapshot
  bool acc_grad_stability_check = true;
};

// One LR policy: exactly one of the two is set.
struct PolicyConfig {
  std::string name;
  std::optional<AutoLrConfig> autolr;
  std::optional<BaselineScheduleConfig> schedule;
};

struct ExperimentConfig {
  NetworkSpec network;
  OptimizerConfig optimizer;
  std::optional<AutoLrConfig> autolr;
  std::optional<BaselineScheduleConfig> schedule;
  std::vector<PolicyConfig> compare;  // used by compare-schedulers only
  PruningConfig pruning;
  DatasetConfig dataset;
  RunConfig run;

  static ExperimentConfig from_file(const std::string& path);
  static ExperimentConfig from_json_text(const std::string& text);
  void validate() const;  // enforces the exactly-one-policy rule
};

struct TraceRow {
  int epoch = 0;
  int trial = 0;
  int block = 0;  // 1-based
  double v = 0.0;
  double v_bar = 0.0;
  double lr = 0.0;
  double quality = 0.0;
  int accepted = 0;
};

// Header (bit-exact): epoch,trial,block,v,v_bar,lr,quality,accepted
// Rows must be in (epoch, trial) lexicographic order, blocks ascending within.
void write_trace_csv(const std::vector<TraceRow>& rows, const std::string& path);
std::vector<TraceRow> trace_rows(const RunReport& report);
std::vector<TraceRow> read_trace_csv(const std::string& path);

struct SeedSummary {
  std::uint64_t seed = 0;
  std::string policy;
  int epochs = 0;
  int accepted_epochs = 0;
  double acceptance_rate = 0.0;
  std::vector<int> trials_per_epoch;
  double median_trials_after_epoch5 = 0.0;
  std::vector<double> final_lrs;
  double pretrain_test_accuracy = 0.0;
  double final_test_accuracy = 0.0;
  double final_recall_at_1 = 0.0;
  bool identity_exact = false;
  double identity_max_rel_err = 0.0;
  std::vector<double> acc_grad_spread_per_block;
  double acc_grad_max_spread = 0.0;
  bool acc_grad_spread_warned = false;
  std::optional<PruneReport> prune;
  double wall_time_s = 0.0;
  std::string trace_path;
};

struct ExperimentSummary {
  std::string policy;
  std::vector<SeedSummary> seeds;
};

// pretrain -> (optional pruning) -> fine-tune under the configured policy,
// once per seed; writes trace CSV, summary JSON, and SVG charts under
// run.out_dir, and returns the collected summary.
ExperimentSummary run_experiment(const ExperimentConfig& config);

// Pretrains on the source task and writes <out>/seed_<s>/pretrained.alrs.
ExperimentSummary run_pretrain(const ExperimentConfig& config);

// Runs the depth search per seed; writes prune_report.{csv,json} and the
// selected pruned starting snapshot.
ExperimentSummary run_prune(const ExperimentConfig& config);

struct CompareEntryResult {
  std::string name;
  std::uint64_t seed = 0;
  std::uint64_t start_hash = 0;
  double final_test_accuracy = 0.0;
  double final_recall_at_1 = 0.0;
};

struct CompareSummary {
  std::vector<CompareEntryResult> entries;
};

// Runs every compare entry from one identical starting snapshot per seed
// (hash-checked) and writes compare.csv plus per-entry traces.
CompareSummary run_compare(const ExperimentConfig& config);

// Rebuilds the SVG charts from an existing trace.csv and returns a digest.
std::string regenerate_report(const std::string& run_dir);

}  // namespace alr
