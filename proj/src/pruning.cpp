// SPDX-License-Identifier: Apache-2.0
#include "alr/pruning.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <limits>

#include "alr/metrics.hpp"
#include "alr/trainer.hpp"
#include "alr/util.hpp"

namespace alr {

ScoreFn accuracy_score() {
  return [](const Network& net, const Dataset& task) {
    const Matrix logits = forward_logits(net, task.test_x);
    std::vector<int> pred(logits.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
      std::size_t best = 0;
      for (std::size_t j = 1; j < logits.cols(); ++j)
        if (logits(i, j) > logits(i, best)) best = j;
      pred[i] = static_cast<int>(best);
    }
    return accuracy(pred, task.test_y);
  };
}

ScoreFn recall1_score() {
  return [](const Network& net, const Dataset& task) {
    const Matrix emb = forward_embeddings(net, task.test_x);
    return recall_at_k(emb, task.test_y, 1);
  };
}

PruneReport run_pruning(const NetSnapshot& pretrained, const NetworkSpec& spec, const Dataset& task,
                        const OptimizerConfig& opt_cfg, const PruneOptions& options) {
  spec.validate();
  if (options.budget_epochs < 1) throw std::invalid_argument("pruning budget_epochs must be >= 1");
  const ScoreFn score_fn = options.score_fn ? options.score_fn : accuracy_score();
  const std::size_t k_blocks = spec.blocks.size();

  PruneReport report;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t depth = 0; depth < k_blocks; ++depth) {
    const auto t0 = std::chrono::steady_clock::now();

    NetworkSpec attempt_spec = spec;
    attempt_spec.seed = spec.seed ^ static_cast<std::uint64_t>(depth);
    Network net = build_pruned(attempt_spec, pretrained, depth);
    const std::uint64_t backbone = hash_blocks(net, net.block_count());

    Trainer::Options topt;
    topt.batch_size = options.batch_size;
    topt.head_lr = options.lr;
    Trainer trainer(std::move(net), opt_cfg, task.train_x, task.train_y, topt);
    for (int e = 0; e < options.budget_epochs; ++e) trainer.train_one_epoch_single_lr(options.lr);
    const double score = score_fn(trainer.network(), task);

    PruneAttempt attempt;
    attempt.blocks_removed = static_cast<int>(depth);
    attempt.score = score;
    attempt.fine_tune_epochs = options.budget_epochs;
    attempt.backbone_hash = backbone;
    attempt.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.attempts.push_back(attempt);

    if (score >= best) {
      best = score;
      report.selected_depth = static_cast<int>(depth);  // ties prefer the deeper prune
    } else {
      break;
    }
  }
  report.best_score = best;
  return report;
}

void write_prune_csv(const PruneReport& report, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "depth,score,epochs,wall_time_s\n";
  char buf[64];
  for (const auto& a : report.attempts) {
    std::snprintf(buf, sizeof buf, "%.17g", a.score);
    os << a.blocks_removed << "," << buf << "," << a.fine_tune_epochs << ",";
    std::snprintf(buf, sizeof buf, "%.3f", a.wall_time_s);
    os << buf << "\n";
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace alr
