// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "alr/network.hpp"

namespace alr {

inline constexpr double kLrFloor = 1e-8;
inline constexpr double kLrCeiling = 1.0;

struct OptimizerConfig {
  double momentum = 0.9;  // rho
  double weight_decay = 0.0;
  bool nesterov = false;
  bool reset_momentum_each_epoch = true;

  void validate() const;
  // The delta-norm identity ||dw|| == lr * ||acc_grad|| is exact only for
  // plain momentum with zero weight decay and per-epoch momentum reset.
  bool delta_identity_exact() const {
    return !nesterov && weight_decay == 0.0 && reset_momentum_each_epoch;
  }
};

// Per-block learning rates, blocks 1..K then the head at index K.
using LrVector = std::vector<double>;

struct BlockDelta {
  std::vector<double> delta;    // end-of-epoch minus start-of-epoch, weights then biases
  double delta_norm = 0.0;      // ||delta||_2
  double variation = 0.0;       // ||delta||_2 / param_count
  double acc_grad_norm = 0.0;   // ||accumulated gradient||_2
  std::size_t param_count = 0;
};

// Per-epoch measurement: one entry per block 1..K plus the head last.
struct EpochDelta {
  std::vector<BlockDelta> blocks;
};

// Delta-form momentum update on one block:
//   delta <- rho * delta - lr * g,  g = grad (+ weight_decay * w)
//   w     <- w + delta              (nesterov: w += rho * delta - lr * g)
// Throws numeric_error on non-finite gradient entries.
void sgd_momentum_step(BlockTensors& params, const BlockTensors& grad, double lr,
                       const OptimizerConfig& cfg, BlockTensors& delta);

// Momentum SGD over all blocks with one learning rate per block, instrumented
// to measure per-epoch weight variations and the accumulated gradient norm.
class BlockSgd {
 public:
  BlockSgd(const Network& net, OptimizerConfig cfg);

  const OptimizerConfig& config() const { return cfg_; }

  // K+1 entries (blocks then head), each within [kLrFloor, kLrCeiling].
  // Learning rates are per-epoch constants; mutation mid-epoch is rejected.
  void set_lrs(LrVector lrs);
  const LrVector& lrs() const { return lrs_; }

  // Anchors the epoch: records the start parameters, zeroes the gradient
  // accumulator, and zeroes momentum when reset_momentum_each_epoch is set.
  void begin_epoch(const Network& net);

  // Momentum-weighted gradient accumulation: m <- rho*m + g, acc <- acc + m.
  // Call once per iteration, before or after step() with the same gradients.
  void accumulate_grad_norm(const Gradients& g);

  // One update step over every block and the head.
  void step(Network& net, const Gradients& g);

  EpochDelta end_epoch(const Network& net);

  bool in_epoch() const { return in_epoch_; }

  // Trial rollback support: momentum buffers + learning rates.
  void capture(NetSnapshot& snap) const;
  void restore_from(const NetSnapshot& snap);

 private:
  OptimizerConfig cfg_;
  LrVector lrs_;
  std::vector<BlockTensors> delta_;    // K+1 momentum buffers
  std::vector<BlockTensors> start_;    // epoch-start parameters
  std::vector<BlockTensors> acc_m_;    // running momentum-weighted gradient
  std::vector<BlockTensors> acc_sum_;  // sum of acc_m_ over iterations
  bool in_epoch_ = false;
};

}  // namespace alr
