// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "alr/matrix.hpp"

namespace alr {

enum class Activation { kRelu, kTanh, kIdentity };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);

struct BlockSpec {
  int output_dim = 0;
  Activation activation = Activation::kRelu;
  bool operator==(const BlockSpec&) const = default;
};

struct HeadSpec {
  int num_classes = 0;
  bool operator==(const HeadSpec&) const = default;
};

// Architecture description. Blocks run 1..K in forward order with block 1
// closest to the input; the classifier head sits above block K.
struct NetworkSpec {
  int input_dim = 0;
  std::vector<BlockSpec> blocks;
  HeadSpec head;
  std::uint64_t seed = 0;

  std::size_t block_count() const { return blocks.size(); }
  void validate() const;  // throws std::invalid_argument
  bool operator==(const NetworkSpec&) const = default;
};

// Weight/bias pair shaped like one parameter block. The same shape carries
// parameters, gradients, and momentum buffers.
struct BlockTensors {
  Matrix weights;                // input_dim x output_dim
  std::vector<double> biases;    // output_dim

  std::size_t param_count() const { return weights.size() + biases.size(); }
  std::vector<double> flat() const;
  bool all_finite() const;
  bool operator==(const BlockTensors&) const = default;
};

struct Gradients {
  std::vector<BlockTensors> blocks;  // K entries
  BlockTensors head;
};

// Full value copy of the trainable state plus what a trial rollback needs:
// momentum buffers, per-block learning rates, and the RNG driving batch order.
struct NetSnapshot {
  NetworkSpec spec;
  std::vector<BlockTensors> blocks;    // K entries
  BlockTensors head;
  std::vector<BlockTensors> momentum;  // K+1 entries (blocks then head); empty if absent
  std::vector<double> lrs;             // K+1 entries; empty if absent
  std::mt19937_64 rng;

  bool has_optimizer_state() const { return !momentum.empty(); }
  bool operator==(const NetSnapshot&) const = default;
};

class Network {
 public:
  // Deterministic initialization from spec.seed: He-uniform weights for relu
  // blocks, Xavier-uniform otherwise (head counts as a non-relu layer),
  // biases zero. Draw order is block 1..K then head, weights row-major.
  explicit Network(const NetworkSpec& spec);

  const NetworkSpec& spec() const { return spec_; }
  std::size_t block_count() const { return blocks_.size(); }

  BlockTensors& block(std::size_t k) { return blocks_[k]; }  // 0-based
  const BlockTensors& block(std::size_t k) const { return blocks_[k]; }
  BlockTensors& head() { return head_; }
  const BlockTensors& head() const { return head_; }
  Activation block_activation(std::size_t k) const { return spec_.blocks[k].activation; }

  std::size_t param_count() const;  // all blocks + head

  std::mt19937_64& rng() { return rng_; }
  const std::mt19937_64& rng() const { return rng_; }

  // Bumped whenever parameters change; used to detect stale forward caches.
  std::uint64_t revision() const { return revision_; }
  void touch() { ++revision_; }

  NetSnapshot snapshot() const;              // parameters + RNG state
  void restore(const NetSnapshot& snap);     // validates architecture match

 private:
  NetworkSpec spec_;
  std::vector<BlockTensors> blocks_;
  BlockTensors head_;
  std::mt19937_64 rng_;
  std::uint64_t revision_ = 0;
};

struct ForwardCache {
  Matrix input;
  std::vector<Matrix> pre;   // K pre-activations
  std::vector<Matrix> post;  // K post-activations
  Matrix logits;
  std::uint64_t revision = 0;
};

ForwardCache forward(const Network& net, const Matrix& batch);
Matrix forward_logits(const Network& net, const Matrix& batch);
// Output of the top block (the representation under the classifier head).
Matrix forward_embeddings(const Network& net, const Matrix& batch);

// Mean over the batch of -log softmax(logits)[label].
double cross_entropy(const Matrix& logits, const std::vector<int>& labels);

// Loss gradients for every block and the head. The cache must come from a
// forward pass on the current parameters.
Gradients backward(const Network& net, const ForwardCache& cache, const std::vector<int>& labels);

// Rebuilds a network from pretrained values with the top `depth` blocks
// removed and a freshly initialized head (seeded from spec.seed) sized to the
// new top block. depth == 0 keeps the whole backbone and only replaces the head.
Network build_pruned(const NetworkSpec& spec, const NetSnapshot& pretrained, std::size_t depth);

// Removes exactly the top block; requires K >= 2.
std::pair<NetworkSpec, Network> prune_top_block(const NetworkSpec& spec, const NetSnapshot& pretrained);

// Flat binary snapshot file: magic "ALRS", version u32, architecture header,
// then per-block little-endian f64 arrays in declaration order.
void save_snapshot(const NetSnapshot& snap, const std::string& path);
NetSnapshot load_snapshot(const std::string& path);

// FNV-1a over the raw bytes of the first `n_blocks` blocks' parameters.
std::uint64_t hash_blocks(const Network& net, std::size_t n_blocks);
std::uint64_t hash_blocks(const NetSnapshot& snap, std::size_t n_blocks);

// FNV-1a over every parameter (all blocks plus the head).
std::uint64_t hash_params(const Network& net);
std::uint64_t hash_params(const NetSnapshot& snap);

}  // namespace alr
