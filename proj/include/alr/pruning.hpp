// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "alr/dataset.hpp"
#include "alr/network.hpp"
#include "alr/optimizer.hpp"

namespace alr {

struct PruneAttempt {
  int blocks_removed = 0;
  double score = 0.0;
  int fine_tune_epochs = 0;
  double wall_time_s = 0.0;
  std::uint64_t backbone_hash = 0;  // retained pretrained blocks at fine-tune start
};

struct PruneReport {
  std::vector<PruneAttempt> attempts;
  int selected_depth = 0;
  double best_score = 0.0;
};

// Scores a fine-tuned network on the held-out split; higher is better.
using ScoreFn = std::function<double(const Network& net, const Dataset& task)>;

ScoreFn accuracy_score();   // held-out classification accuracy
ScoreFn recall1_score();    // Recall@1 on held-out top-block embeddings

struct PruneOptions {
  int budget_epochs = 30;
  int batch_size = 40;
  double lr = 1e-3;  // single LR for all layers during each attempt
  ScoreFn score_fn;  // defaults to accuracy_score()
};

// Depth search: fine-tune the full pretrained network, then repeatedly reload
// the pretrained weights, remove one more top block, fine-tune, and score.
// Continues while score >= best score (ties move the selection deeper) and
// stops either at the first drop or when one block remains. Every attempt's
// fresh head is seeded with spec.seed XOR depth.
PruneReport run_pruning(const NetSnapshot& pretrained, const NetworkSpec& spec, const Dataset& task,
                        const OptimizerConfig& opt_cfg, const PruneOptions& options);

// CSV schema: depth,score,epochs,wall_time_s
void write_prune_csv(const PruneReport& report, const std::string& path);

}  // namespace alr
