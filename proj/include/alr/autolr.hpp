// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <vector>

namespace alr {

struct AutoLrConfig {
  double alpha = 2.0;  // lower target bound factor: alpha * min(v)
  double beta = 0.4;   // upper target bound factor: beta * max(v)
  double tau_s = 0.94;
  int max_trials_per_epoch = 10;
  double d_floor = 1e-12;
  // Use min(v) instead of alpha*min(v) as the base of the initial targets.
  bool literal_initial_base = false;
  // Order the classifier head as block K+1 instead of pinning it to the base LR.
  bool include_head_in_ordering = false;

  void validate() const;
  // 1-based center index: ceil(K / 2).
  static std::size_t center_index(std::size_t k_blocks) { return (k_blocks + 1) / 2; }
};

struct TargetSchedule {
  std::vector<double> targets;  // nondecreasing target variations per block
  double spacing = 0.0;         // gap d used between adjacent targets
};

// Ascending rank of each entry (values 1..K), ties broken by index so that
// nondecreasing input gets the identity ranking. Throws on NaN.
std::vector<int> rank_ascending(const std::vector<double>& v);

// 1 - (2/K^2) * sum_k |k - rank(v_k)|, in [0, 1]; 1 iff v is nondecreasing.
double sorting_quality(const std::vector<double>& v);

// Evenly spaced targets between alpha*min(v) and beta*max(v); the gap is
// clamped below at d_floor. Throws std::domain_error when v is all zero.
TargetSchedule initial_targets(const std::vector<double>& v, const AutoLrConfig& cfg);

// Repairs an unsorted v into a nondecreasing target vector, walking from the
// center block outward and nudging violations by `spacing`. Anchored at
// targets[center-1] == v[center-1]; clamped below at zero.
TargetSchedule center_out_targets(const std::vector<double>& v, double spacing, std::size_t center);

// Per-block lr * target / measured, clamped to [kLrFloor, kLrCeiling];
// blocks with zero measured variation keep their current lr.
std::vector<double> renew_lr(const std::vector<double>& lr, const std::vector<double>& v,
                             const std::vector<double>& targets);

// One epoch of fine-tuning at given per-block learning rates, with state
// save/restore for trial rollback. Implemented by the harness trainer and by
// test stubs.
class EpochTrainer {
 public:
  struct State {
    virtual ~State() = default;
  };

  virtual ~EpochTrainer() = default;
  virtual std::size_t block_count() const = 0;
  virtual std::unique_ptr<State> save_state() const = 0;
  virtual void load_state(const State& state) = 0;
  // Runs one epoch and returns the measured weight variation per block.
  virtual std::vector<double> train_one_epoch(const std::vector<double>& block_lrs) = 0;
};

struct TrialRecord {
  int epoch = 0;
  int trial = 0;  // 1-based within the epoch
  std::vector<double> variation;
  // Targets this trial's measurement was renewed toward (next trial's goal);
  // equals `variation` when no renewal was computed.
  std::vector<double> target;
  std::vector<double> lrs;
  double quality = 0.0;
  bool accepted = false;
};

struct EpochReport {
  int epoch = 0;
  std::vector<TrialRecord> trials;
  bool accepted = false;        // sorting quality exceeded tau_s within the trial limit
  bool fallback = false;        // limit hit; best trial committed instead
  int committed_trial = 0;      // 1-based
  double committed_quality = 0.0;
  std::vector<double> committed_lrs;
  std::vector<double> committed_variation;

  int trial_count() const { return static_cast<int>(trials.size()); }
};

struct RunReport {
  std::vector<EpochReport> epochs;
  std::vector<double> final_lrs;
};

// The per-epoch trial/rollback loop: train a trial epoch, measure variations,
// accept when sorting quality exceeds tau_s, otherwise roll the network back,
// renew targets and learning rates, and try again.
class AutoLrController {
 public:
  AutoLrController(AutoLrConfig cfg, std::vector<double> initial_lrs);

  EpochReport run_epoch(EpochTrainer& trainer, int epoch);  // epoch is 1-based
  RunReport run(EpochTrainer& trainer, int epochs);

  const std::vector<double>& lrs() const { return lrs_; }
  const AutoLrConfig& config() const { return cfg_; }

 private:
  AutoLrConfig cfg_;
  std::vector<double> lrs_;
};

}  // namespace alr
