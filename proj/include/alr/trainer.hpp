// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <vector>

#include "alr/autolr.hpp"
#include "alr/network.hpp"
#include "alr/optimizer.hpp"

namespace alr {

// Couples a network, a per-block SGD optimizer, and a training split into the
// one-epoch fine-tune unit the LR controller drives. Batch order is drawn
// from the network RNG, so a snapshot restore also replays the batch order.
class Trainer : public EpochTrainer {
 public:
  struct Options {
    int batch_size = 40;
    double head_lr = 1e-3;  // used while the head is excluded from ordering
    bool include_head_in_ordering = false;
    // Verify ||dw|| == lr * ||acc_grad|| after each epoch when the optimizer
    // config makes the identity exact; violations throw invariant_violation.
    bool check_delta_identity = true;
    double identity_tolerance = 1e-9;
  };

  Trainer(Network net, OptimizerConfig opt_cfg, Matrix train_x, std::vector<int> train_y,
          Options options);

  std::size_t block_count() const override;
  std::unique_ptr<State> save_state() const override;
  void load_state(const State& state) override;
  std::vector<double> train_one_epoch(const std::vector<double>& block_lrs) override;

  // Same epoch loop with one LR shared by every block and the head.
  std::vector<double> train_one_epoch_single_lr(double lr);

  Network& network() { return net_; }
  const Network& network() const { return net_; }
  BlockSgd& optimizer() { return opt_; }
  const Options& options() const { return options_; }

  const EpochDelta& last_epoch_delta() const { return last_delta_; }
  double last_epoch_loss() const { return last_loss_; }
  double max_identity_rel_err() const { return max_identity_err_; }
  bool identity_exact_mode() const { return opt_.config().delta_identity_exact(); }

  // Full state: parameters, momentum, learning rates, RNG.
  NetSnapshot capture() const;
  void restore_snapshot(const NetSnapshot& snap);

 private:
  std::vector<double> run_epoch(const LrVector& lrs);

  Network net_;
  BlockSgd opt_;
  Matrix train_x_;
  std::vector<int> train_y_;
  Options options_;
  EpochDelta last_delta_;
  double last_loss_ = 0.0;
  double max_identity_err_ = 0.0;
};

// Relative spread of the accumulated-gradient norm per block when the same
// epoch is retrained from the same state at rescaled learning rates.
struct AccGradSpread {
  std::vector<double> scales;
  std::vector<double> per_block;  // (max - min) / mean over scales, per ordered block
  double max_spread = 0.0;
};

AccGradSpread measure_acc_grad_spread(Trainer& trainer, const std::vector<double>& base_lrs,
                                      const std::vector<double>& scales);

}  // namespace alr
