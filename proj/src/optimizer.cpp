// SPDX-License-Identifier: Apache-2.0
#include "alr/optimizer.hpp"

#include <cmath>
#include <string>

#include "alr/util.hpp"

namespace alr {

void OptimizerConfig::validate() const {
  if (momentum < 0.0 || momentum >= 1.0)
    throw std::invalid_argument("momentum must be in [0, 1)");
  if (weight_decay < 0.0) throw std::invalid_argument("weight_decay must be >= 0");
}

namespace {

void check_grad_finite(const BlockTensors& g, const std::string& where) {
  if (!g.all_finite()) throw numeric_error("non-finite gradient in " + where);
}

// delta <- rho*delta - lr*g elementwise; returns the applied update.
void step_tensor(std::vector<double>& w, const std::vector<double>& g, double lr,
                 const OptimizerConfig& cfg, std::vector<double>& delta) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    double grad = g[i];
    if (cfg.weight_decay != 0.0) grad += cfg.weight_decay * w[i];
    delta[i] = cfg.momentum * delta[i] - lr * grad;
    w[i] += cfg.nesterov ? (cfg.momentum * delta[i] - lr * grad) : delta[i];
  }
}

BlockTensors zeros_like(const BlockTensors& t) {
  BlockTensors z;
  z.weights = Matrix(t.weights.rows(), t.weights.cols());
  z.biases.assign(t.biases.size(), 0.0);
  return z;
}

void axpy_accumulate(BlockTensors& m, BlockTensors& acc, const BlockTensors& g, double rho) {
  for (std::size_t i = 0; i < m.weights.size(); ++i) {
    m.weights.data()[i] = rho * m.weights.data()[i] + g.weights.data()[i];
    acc.weights.data()[i] += m.weights.data()[i];
  }
  for (std::size_t i = 0; i < m.biases.size(); ++i) {
    m.biases[i] = rho * m.biases[i] + g.biases[i];
    acc.biases[i] += m.biases[i];
  }
}

double norm2(const BlockTensors& a) {
  double s = 0.0;
  for (double x : a.weights.data()) s += x * x;
  for (double x : a.biases) s += x * x;
  return std::sqrt(s);
}

}  // namespace

void sgd_momentum_step(BlockTensors& params, const BlockTensors& grad, double lr,
                       const OptimizerConfig& cfg, BlockTensors& delta) {
  if (grad.weights.rows() != params.weights.rows() || grad.weights.cols() != params.weights.cols() ||
      grad.biases.size() != params.biases.size())
    throw std::invalid_argument("gradient shape does not match block");
  check_grad_finite(grad, "sgd_momentum_step");
  step_tensor(params.weights.data(), grad.weights.data(), lr, cfg, delta.weights.data());
  step_tensor(params.biases, grad.biases, lr, cfg, delta.biases);
}

BlockSgd::BlockSgd(const Network& net, OptimizerConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  for (std::size_t k = 0; k < net.block_count(); ++k) delta_.push_back(zeros_like(net.block(k)));
  delta_.push_back(zeros_like(net.head()));
  lrs_.assign(delta_.size(), kLrFloor);
}

void BlockSgd::set_lrs(LrVector lrs) {
  if (lrs.size() != delta_.size())
    throw std::invalid_argument("learning-rate vector must have one entry per block plus the head");
  if (in_epoch_)
    throw std::logic_error("learning rates are per-epoch constants; set them before begin_epoch");
  for (double lr : lrs) {
    if (!(lr >= kLrFloor && lr <= kLrCeiling))
      throw std::invalid_argument("learning rate outside [" + std::to_string(kLrFloor) + ", " +
                                  std::to_string(kLrCeiling) + "]");
  }
  lrs_ = std::move(lrs);
}

void BlockSgd::begin_epoch(const Network& net) {
  start_.clear();
  acc_m_.clear();
  acc_sum_.clear();
  for (std::size_t k = 0; k < net.block_count(); ++k) start_.push_back(net.block(k));
  start_.push_back(net.head());
  for (const auto& t : start_) {
    acc_m_.push_back(zeros_like(t));
    acc_sum_.push_back(zeros_like(t));
  }
  if (cfg_.reset_momentum_each_epoch)
    for (auto& d : delta_) d = zeros_like(d);
  in_epoch_ = true;
}

void BlockSgd::accumulate_grad_norm(const Gradients& g) {
  if (!in_epoch_) throw std::logic_error("accumulate_grad_norm called outside an epoch");
  for (std::size_t k = 0; k < g.blocks.size(); ++k)
    axpy_accumulate(acc_m_[k], acc_sum_[k], g.blocks[k], cfg_.momentum);
  axpy_accumulate(acc_m_.back(), acc_sum_.back(), g.head, cfg_.momentum);
}

void BlockSgd::step(Network& net, const Gradients& g) {
  if (g.blocks.size() != net.block_count())
    throw std::invalid_argument("gradients do not match network block count");
  for (std::size_t k = 0; k < net.block_count(); ++k)
    sgd_momentum_step(net.block(k), g.blocks[k], lrs_[k], cfg_, delta_[k]);
  sgd_momentum_step(net.head(), g.head, lrs_.back(), cfg_, delta_.back());
  net.touch();
}

EpochDelta BlockSgd::end_epoch(const Network& net) {
  if (!in_epoch_) throw std::logic_error("end_epoch without begin_epoch");
  EpochDelta out;
  for (std::size_t k = 0; k <= net.block_count(); ++k) {
    const BlockTensors& now = (k < net.block_count()) ? net.block(k) : net.head();
    if (!now.all_finite()) throw numeric_error("non-finite parameters in block " + std::to_string(k + 1));
    BlockDelta d;
    d.param_count = now.param_count();
    d.delta.reserve(d.param_count);
    for (std::size_t i = 0; i < now.weights.size(); ++i)
      d.delta.push_back(now.weights.data()[i] - start_[k].weights.data()[i]);
    for (std::size_t i = 0; i < now.biases.size(); ++i)
      d.delta.push_back(now.biases[i] - start_[k].biases[i]);
    double s = 0.0;
    for (double x : d.delta) s += x * x;
    d.delta_norm = std::sqrt(s);
    d.variation = d.delta_norm / static_cast<double>(d.param_count);
    d.acc_grad_norm = norm2(acc_sum_[k]);
    out.blocks.push_back(std::move(d));
  }
  in_epoch_ = false;
  return out;
}

void BlockSgd::capture(NetSnapshot& snap) const {
  snap.momentum = delta_;
  snap.lrs = lrs_;
}

void BlockSgd::restore_from(const NetSnapshot& snap) {
  if (!snap.has_optimizer_state())
    throw std::invalid_argument("snapshot carries no optimizer state");
  if (snap.momentum.size() != delta_.size() || snap.lrs.size() != lrs_.size())
    throw std::invalid_argument("snapshot/optimizer shape mismatch");
  delta_ = snap.momentum;
  lrs_ = snap.lrs;
  in_epoch_ = false;
}

}  // namespace alr
