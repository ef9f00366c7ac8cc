// SPDX-License-Identifier: Apache-2.0
#include "alr/autolr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "alr/optimizer.hpp"
#include "alr/util.hpp"

namespace alr {

void AutoLrConfig::validate() const {
  if (alpha <= 0.0) throw std::invalid_argument("alpha must be positive");
  if (beta <= 0.0) throw std::invalid_argument("beta must be positive");
  if (!(tau_s > 0.0 && tau_s <= 1.0)) throw std::invalid_argument("tau_s must be in (0, 1]");
  if (max_trials_per_epoch < 1) throw std::invalid_argument("max_trials_per_epoch must be >= 1");
  if (d_floor <= 0.0) throw std::invalid_argument("d_floor must be positive");
}

std::vector<int> rank_ascending(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("rank_ascending: empty vector");
  for (double x : v)
    if (std::isnan(x)) throw std::invalid_argument("rank_ascending: NaN entry");
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<int> rank(v.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos)
    rank[order[pos]] = static_cast<int>(pos) + 1;
  return rank;
}

double sorting_quality(const std::vector<double>& v) {
  const std::vector<int> rank = rank_ascending(v);
  const double k = static_cast<double>(v.size());
  double displacement = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    displacement += std::abs(static_cast<double>(i) + 1.0 - rank[i]);
  return 1.0 - (2.0 / (k * k)) * displacement;
}

TargetSchedule initial_targets(const std::vector<double>& v, const AutoLrConfig& cfg) {
  if (v.size() < 2) throw std::invalid_argument("initial_targets: need at least 2 blocks");
  for (double x : v)
    if (!(x >= 0.0)) throw std::invalid_argument("initial_targets: variations must be nonnegative");
  const double vmin = *std::min_element(v.begin(), v.end());
  const double vmax = *std::max_element(v.begin(), v.end());
  if (vmax == 0.0) throw std::domain_error("initial_targets: all variations are zero");
  const double k1 = static_cast<double>(v.size()) - 1.0;
  TargetSchedule out;
  out.spacing = std::max((cfg.beta * vmax - cfg.alpha * vmin) / k1, cfg.d_floor);
  const double base = cfg.literal_initial_base ? vmin : cfg.alpha * vmin;
  out.targets.resize(v.size());
  for (std::size_t k = 0; k < v.size(); ++k)
    out.targets[k] = base + static_cast<double>(k) * out.spacing;
  return out;
}

TargetSchedule center_out_targets(const std::vector<double>& v, double spacing, std::size_t center) {
  if (v.size() < 2) throw std::invalid_argument("center_out_targets: need at least 2 blocks");
  if (!(spacing > 0.0)) throw std::invalid_argument("center_out_targets: spacing must be positive");
  if (center < 1 || center > v.size())
    throw std::invalid_argument("center_out_targets: center out of range");
  TargetSchedule out;
  out.spacing = spacing;
  out.targets.resize(v.size());
  const std::size_t c = center - 1;
  out.targets[c] = v[c];
  for (std::size_t k = c + 1; k < v.size(); ++k)
    out.targets[k] = (out.targets[k - 1] <= v[k]) ? v[k] : out.targets[k - 1] + spacing;
  for (std::size_t k = c; k-- > 0;)
    out.targets[k] = (out.targets[k + 1] >= v[k]) ? v[k] : out.targets[k + 1] - spacing;
  for (double& t : out.targets) t = std::max(t, 0.0);
  return out;
}

std::vector<double> renew_lr(const std::vector<double>& lr, const std::vector<double>& v,
                             const std::vector<double>& targets) {
  if (lr.size() != v.size() || lr.size() != targets.size())
    throw std::invalid_argument("renew_lr: length mismatch");
  std::vector<double> out(lr.size());
  for (std::size_t k = 0; k < lr.size(); ++k) {
    const double renewed = (v[k] == 0.0) ? lr[k] : lr[k] * targets[k] / v[k];
    out[k] = std::clamp(renewed, kLrFloor, kLrCeiling);
  }
  return out;
}

AutoLrController::AutoLrController(AutoLrConfig cfg, std::vector<double> initial_lrs)
    : cfg_(cfg), lrs_(std::move(initial_lrs)) {
  cfg_.validate();
  if (lrs_.empty()) throw std::invalid_argument("initial learning rates must be non-empty");
  for (double lr : lrs_)
    if (!(lr >= kLrFloor && lr <= kLrCeiling))
      throw std::invalid_argument("initial learning rate outside bounds");
}

EpochReport AutoLrController::run_epoch(EpochTrainer& trainer, int epoch) {
  const std::size_t k_blocks = trainer.block_count();
  if (lrs_.size() != k_blocks)
    throw std::invalid_argument("controller lr count does not match trainer block count");

  EpochReport report;
  report.epoch = epoch;
  const auto epoch_start = trainer.save_state();

  double best_quality = -1.0;
  int best_trial = 0;
  std::vector<double> best_lrs, best_variation;
  std::unique_ptr<EpochTrainer::State> best_state;

  for (int trial = 1; trial <= cfg_.max_trials_per_epoch; ++trial) {
    if (trial > 1) trainer.load_state(*epoch_start);  // every trial restarts from the epoch start
    std::vector<double> variation = trainer.train_one_epoch(lrs_);
    if (variation.size() != k_blocks)
      throw std::logic_error("trainer returned wrong variation count");
    const double quality = sorting_quality(variation);

    TrialRecord rec;
    rec.epoch = epoch;
    rec.trial = trial;
    rec.variation = variation;
    rec.target = variation;
    rec.lrs = lrs_;
    rec.quality = quality;
    rec.accepted = quality > cfg_.tau_s;

    if (quality > best_quality) {
      best_quality = quality;
      best_trial = trial;
      best_lrs = lrs_;
      best_variation = variation;
      best_state = trainer.save_state();
    }

    if (rec.accepted) {
      report.trials.push_back(std::move(rec));
      report.accepted = true;
      report.committed_trial = trial;
      report.committed_quality = quality;
      report.committed_lrs = lrs_;
      report.committed_variation = variation;
      return report;
    }

    if (trial < cfg_.max_trials_per_epoch && k_blocks >= 2) {
      try {
        const TargetSchedule schedule =
            (epoch == 1) ? initial_targets(variation, cfg_)
                         : center_out_targets(variation, initial_targets(variation, cfg_).spacing,
                                              AutoLrConfig::center_index(k_blocks));
        rec.target = schedule.targets;
        lrs_ = renew_lr(lrs_, variation, schedule.targets);
      } catch (const std::domain_error&) {
        // Degenerate all-zero variation: keep the current learning rates.
      }
    }
    report.trials.push_back(std::move(rec));
  }

  // Trial limit hit: commit the best-quality trial seen this epoch.
  trainer.load_state(*best_state);
  lrs_ = best_lrs;
  report.accepted = false;
  report.fallback = true;
  report.committed_trial = best_trial;
  report.committed_quality = best_quality;
  report.committed_lrs = best_lrs;
  report.committed_variation = best_variation;
  return report;
}

RunReport AutoLrController::run(EpochTrainer& trainer, int epochs) {
  if (epochs < 0) throw std::invalid_argument("epoch count must be >= 0");
  RunReport report;
  for (int t = 1; t <= epochs; ++t) {
    EpochReport er = run_epoch(trainer, t);
    if (er.accepted && !(er.committed_quality > cfg_.tau_s))
      throw invariant_violation("accepted epoch with quality <= tau_s");
    report.epochs.push_back(std::move(er));
  }
  report.final_lrs = lrs_;
  return report;
}

}  // namespace alr
