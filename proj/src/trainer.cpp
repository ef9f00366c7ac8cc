// SPDX-License-Identifier: Apache-2.0
#include "alr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "alr/util.hpp"

namespace alr {

namespace {

struct TrainerState final : EpochTrainer::State {
  NetSnapshot snap;
};

}  // namespace

Trainer::Trainer(Network net, OptimizerConfig opt_cfg, Matrix train_x, std::vector<int> train_y,
                 Options options)
    : net_(std::move(net)),
      opt_(net_, opt_cfg),
      train_x_(std::move(train_x)),
      train_y_(std::move(train_y)),
      options_(options) {
  if (train_x_.rows() != train_y_.size())
    throw std::invalid_argument("training features/labels row mismatch");
  if (train_x_.rows() == 0) throw std::invalid_argument("empty training split");
  if (train_x_.cols() != static_cast<std::size_t>(net_.spec().input_dim))
    throw std::invalid_argument("training features do not match network input_dim");
  if (options_.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
}

std::size_t Trainer::block_count() const {
  return net_.block_count() + (options_.include_head_in_ordering ? 1 : 0);
}

NetSnapshot Trainer::capture() const {
  NetSnapshot snap = net_.snapshot();
  opt_.capture(snap);
  return snap;
}

void Trainer::restore_snapshot(const NetSnapshot& snap) {
  net_.restore(snap);
  opt_.restore_from(snap);
}

std::unique_ptr<EpochTrainer::State> Trainer::save_state() const {
  auto s = std::make_unique<TrainerState>();
  s->snap = capture();
  return s;
}

void Trainer::load_state(const State& state) {
  const auto* s = dynamic_cast<const TrainerState*>(&state);
  if (s == nullptr) throw std::invalid_argument("foreign trainer state");
  restore_snapshot(s->snap);
}

std::vector<double> Trainer::train_one_epoch(const std::vector<double>& block_lrs) {
  if (block_lrs.size() != block_count())
    throw std::invalid_argument("expected one learning rate per ordered block");
  LrVector lrs(block_lrs.begin(), block_lrs.end());
  if (!options_.include_head_in_ordering) lrs.push_back(options_.head_lr);
  std::vector<double> v = run_epoch(lrs);
  v.resize(block_count());  // drop the head entry unless it is ordered
  return v;
}

std::vector<double> Trainer::train_one_epoch_single_lr(double lr) {
  LrVector lrs(net_.block_count() + 1, lr);
  std::vector<double> v = run_epoch(lrs);
  v.resize(block_count());
  return v;
}

std::vector<double> Trainer::run_epoch(const LrVector& lrs) {
  opt_.set_lrs(lrs);
  opt_.begin_epoch(net_);

  std::vector<std::size_t> order(train_x_.rows());
  std::iota(order.begin(), order.end(), 0);
  shuffle_indices(order, net_.rng());

  const std::size_t batch = static_cast<std::size_t>(options_.batch_size);
  double loss_sum = 0.0;
  std::size_t batches = 0;
  for (std::size_t at = 0; at < order.size(); at += batch) {
    const std::size_t n = std::min(batch, order.size() - at);
    Matrix x(n, train_x_.cols());
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t row = order[at + i];
      for (std::size_t d = 0; d < train_x_.cols(); ++d) x(i, d) = train_x_(row, d);
      y[i] = train_y_[row];
    }
    const ForwardCache cache = forward(net_, x);
    const double loss = cross_entropy(cache.logits, y);
    if (!std::isfinite(loss)) throw numeric_error("non-finite loss; epoch aborted");
    const Gradients grads = backward(net_, cache, y);
    opt_.accumulate_grad_norm(grads);
    opt_.step(net_, grads);
    loss_sum += loss;
    ++batches;
  }
  last_loss_ = loss_sum / static_cast<double>(batches);
  last_delta_ = opt_.end_epoch(net_);

  if (options_.check_delta_identity && identity_exact_mode()) {
    for (std::size_t k = 0; k < last_delta_.blocks.size(); ++k) {
      const BlockDelta& d = last_delta_.blocks[k];
      const double lhs = d.delta_norm;
      const double rhs = lrs[k] * d.acc_grad_norm;
      const double scale = std::max(lhs, rhs);
      const double rel = scale > 0.0 ? std::abs(lhs - rhs) / scale : 0.0;
      max_identity_err_ = std::max(max_identity_err_, rel);
      if (rel > options_.identity_tolerance)
        throw invariant_violation("delta-norm identity violated in block " + std::to_string(k + 1) +
                                  ": rel err " + std::to_string(rel));
    }
  }

  std::vector<double> v;
  v.reserve(last_delta_.blocks.size());
  for (const auto& d : last_delta_.blocks) v.push_back(d.variation);
  return v;
}

AccGradSpread measure_acc_grad_spread(Trainer& trainer, const std::vector<double>& base_lrs,
                                      const std::vector<double>& scales) {
  if (scales.size() < 2) throw std::invalid_argument("need at least two scales");
  const NetSnapshot start = trainer.capture();
  const std::size_t k_blocks = trainer.block_count();

  std::vector<std::vector<double>> norms(k_blocks);
  for (double s : scales) {
    trainer.restore_snapshot(start);
    std::vector<double> lrs = base_lrs;
    for (double& lr : lrs) lr = std::clamp(lr * s, kLrFloor, kLrCeiling);
    trainer.train_one_epoch(lrs);
    const EpochDelta& delta = trainer.last_epoch_delta();
    for (std::size_t k = 0; k < k_blocks; ++k) norms[k].push_back(delta.blocks[k].acc_grad_norm);
  }
  trainer.restore_snapshot(start);

  AccGradSpread out;
  out.scales = scales;
  for (std::size_t k = 0; k < k_blocks; ++k) {
    const double lo = *std::min_element(norms[k].begin(), norms[k].end());
    const double hi = *std::max_element(norms[k].begin(), norms[k].end());
    const double mean = std::accumulate(norms[k].begin(), norms[k].end(), 0.0) /
                        static_cast<double>(norms[k].size());
    const double spread = mean > 0.0 ? (hi - lo) / mean : 0.0;
    out.per_block.push_back(spread);
    out.max_spread = std::max(out.max_spread, spread);
  }
  return out;
}

}  // namespace alr
