// SPDX-License-Identifier: Apache-2.0
#include "alr/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "alr/util.hpp"

namespace alr {

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  if (s == "identity") return Activation::kIdentity;
  throw std::invalid_argument("unknown activation: " + s);
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kIdentity: return "identity";
  }
  return "?";
}

void NetworkSpec::validate() const {
  if (input_dim < 1) throw std::invalid_argument("input_dim must be >= 1");
  if (blocks.empty()) throw std::invalid_argument("at least one block is required");
  for (const auto& b : blocks) {
    if (b.output_dim < 1) throw std::invalid_argument("block output_dim must be >= 1");
  }
  if (head.num_classes < 1) throw std::invalid_argument("head num_classes must be >= 1");
}

std::vector<double> BlockTensors::flat() const {
  std::vector<double> out;
  out.reserve(param_count());
  out.insert(out.end(), weights.data().begin(), weights.data().end());
  out.insert(out.end(), biases.begin(), biases.end());
  return out;
}

bool BlockTensors::all_finite() const {
  auto fin = [](double x) { return std::isfinite(x); };
  return std::all_of(weights.data().begin(), weights.data().end(), fin) &&
         std::all_of(biases.begin(), biases.end(), fin);
}

namespace {

BlockTensors init_dense(std::size_t fan_in, std::size_t fan_out, Activation act, std::mt19937_64& g) {
  BlockTensors t;
  t.weights = Matrix(fan_in, fan_out);
  t.biases.assign(fan_out, 0.0);
  const double limit = (act == Activation::kRelu)
                           ? std::sqrt(6.0 / static_cast<double>(fan_in))
                           : std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& w : t.weights.data()) w = uniform_in(g, -limit, limit);
  return t;
}

double apply_act(Activation a, double x) {
  switch (a) {
    case Activation::kRelu: return x > 0.0 ? x : 0.0;
    case Activation::kTanh: return std::tanh(x);
    case Activation::kIdentity: return x;
  }
  return x;
}

// Derivative as a function of the pre-activation value.
double act_grad(Activation a, double x) {
  switch (a) {
    case Activation::kRelu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::kTanh: {
      const double th = std::tanh(x);
      return 1.0 - th * th;
    }
    case Activation::kIdentity: return 1.0;
  }
  return 1.0;
}

Matrix dense_forward(const Matrix& x, const BlockTensors& p) {
  Matrix z = matmul(x, p.weights);
  for (std::size_t i = 0; i < z.rows(); ++i)
    for (std::size_t j = 0; j < z.cols(); ++j) z(i, j) += p.biases[j];
  return z;
}

std::vector<double> col_sums(const Matrix& m) {
  std::vector<double> s(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) s[j] += m(i, j);
  return s;
}

}  // namespace

Network::Network(const NetworkSpec& spec) : spec_(spec) {
  spec_.validate();
  rng_.seed(spec_.seed);
  std::size_t in = static_cast<std::size_t>(spec_.input_dim);
  for (const auto& b : spec_.blocks) {
    blocks_.push_back(init_dense(in, static_cast<std::size_t>(b.output_dim), b.activation, rng_));
    in = static_cast<std::size_t>(b.output_dim);
  }
  head_ = init_dense(in, static_cast<std::size_t>(spec_.head.num_classes), Activation::kIdentity, rng_);
}

std::size_t Network::param_count() const {
  std::size_t n = head_.param_count();
  for (const auto& b : blocks_) n += b.param_count();
  return n;
}

NetSnapshot Network::snapshot() const {
  NetSnapshot s;
  s.spec = spec_;
  s.blocks = blocks_;
  s.head = head_;
  s.rng = rng_;
  return s;
}

void Network::restore(const NetSnapshot& snap) {
  if (snap.blocks.size() != blocks_.size())
    throw std::invalid_argument("snapshot/architecture mismatch: block count");
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    if (snap.blocks[k].weights.rows() != blocks_[k].weights.rows() ||
        snap.blocks[k].weights.cols() != blocks_[k].weights.cols())
      throw std::invalid_argument("snapshot/architecture mismatch: block " + std::to_string(k + 1));
  }
  if (snap.head.weights.rows() != head_.weights.rows() ||
      snap.head.weights.cols() != head_.weights.cols())
    throw std::invalid_argument("snapshot/architecture mismatch: head");
  blocks_ = snap.blocks;
  head_ = snap.head;
  rng_ = snap.rng;
  touch();
}

ForwardCache forward(const Network& net, const Matrix& batch) {
  if (batch.cols() != static_cast<std::size_t>(net.spec().input_dim))
    throw std::invalid_argument("batch feature count does not match input_dim");
  ForwardCache c;
  c.input = batch;
  c.revision = net.revision();
  Matrix h = batch;
  for (std::size_t k = 0; k < net.block_count(); ++k) {
    Matrix z = dense_forward(h, net.block(k));
    Matrix a(z.rows(), z.cols());
    const Activation act = net.block_activation(k);
    for (std::size_t i = 0; i < z.size(); ++i) a.data()[i] = apply_act(act, z.data()[i]);
    c.pre.push_back(std::move(z));
    c.post.push_back(a);
    h = std::move(a);
  }
  c.logits = dense_forward(h, net.head());
  return c;
}

Matrix forward_logits(const Network& net, const Matrix& batch) {
  return forward(net, batch).logits;
}

Matrix forward_embeddings(const Network& net, const Matrix& batch) {
  ForwardCache c = forward(net, batch);
  return c.post.back();
}

double cross_entropy(const Matrix& logits, const std::vector<int>& labels) {
  if (labels.size() != logits.rows())
    throw std::invalid_argument("labels/logits row count mismatch");
  const std::size_t n = logits.rows();
  const std::size_t classes = logits.cols();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= classes)
      throw std::invalid_argument("label out of range at row " + std::to_string(i));
    double m = logits(i, 0);
    for (std::size_t j = 1; j < classes; ++j) m = std::max(m, logits(i, j));
    double sum = 0.0;
    for (std::size_t j = 0; j < classes; ++j) sum += std::exp(logits(i, j) - m);
    total += m + std::log(sum) - logits(i, static_cast<std::size_t>(y));
  }
  return total / static_cast<double>(n);
}

Gradients backward(const Network& net, const ForwardCache& cache, const std::vector<int>& labels) {
  if (cache.pre.size() != net.block_count() || cache.logits.rows() == 0)
    throw std::invalid_argument("forward cache missing");
  if (cache.revision != net.revision())
    throw std::invalid_argument("forward cache is stale: parameters changed since forward()");
  const std::size_t n = cache.logits.rows();
  if (labels.size() != n) throw std::invalid_argument("labels/batch row count mismatch");
  const std::size_t classes = cache.logits.cols();

  // d loss / d logits = (softmax - onehot) / n
  Matrix dlogits(n, classes);
  for (std::size_t i = 0; i < n; ++i) {
    double m = cache.logits(i, 0);
    for (std::size_t j = 1; j < classes; ++j) m = std::max(m, cache.logits(i, j));
    double sum = 0.0;
    for (std::size_t j = 0; j < classes; ++j) sum += std::exp(cache.logits(i, j) - m);
    for (std::size_t j = 0; j < classes; ++j)
      dlogits(i, j) = std::exp(cache.logits(i, j) - m) / sum;
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= classes)
      throw std::invalid_argument("label out of range at row " + std::to_string(i));
    dlogits(i, static_cast<std::size_t>(y)) -= 1.0;
  }
  for (double& v : dlogits.data()) v /= static_cast<double>(n);

  Gradients g;
  g.blocks.resize(net.block_count());
  const Matrix& top = cache.post.back();
  g.head.weights = matmul_at_b(top, dlogits);
  g.head.biases = col_sums(dlogits);
  Matrix dh = matmul_a_bt(dlogits, net.head().weights);

  for (std::size_t k = net.block_count(); k-- > 0;) {
    const Activation act = net.block_activation(k);
    Matrix dz = dh;
    for (std::size_t i = 0; i < dz.size(); ++i)
      dz.data()[i] *= act_grad(act, cache.pre[k].data()[i]);
    const Matrix& below = (k == 0) ? cache.input : cache.post[k - 1];
    g.blocks[k].weights = matmul_at_b(below, dz);
    g.blocks[k].biases = col_sums(dz);
    if (k > 0) dh = matmul_a_bt(dz, net.block(k).weights);
  }
  return g;
}

Network build_pruned(const NetworkSpec& spec, const NetSnapshot& pretrained, std::size_t depth) {
  spec.validate();
  if (depth >= spec.blocks.size())
    throw std::invalid_argument("cannot prune below one block");
  if (pretrained.blocks.size() != spec.blocks.size())
    throw std::invalid_argument("pretrained snapshot does not match spec block count");
  NetworkSpec pruned = spec;
  pruned.blocks.resize(spec.blocks.size() - depth);
  Network net(pruned);  // fresh head comes from this initialization
  for (std::size_t k = 0; k < pruned.blocks.size(); ++k) {
    if (pretrained.blocks[k].weights.rows() != net.block(k).weights.rows() ||
        pretrained.blocks[k].weights.cols() != net.block(k).weights.cols())
      throw std::invalid_argument("pretrained snapshot does not match spec at block " + std::to_string(k + 1));
    net.block(k) = pretrained.blocks[k];
  }
  net.touch();
  return net;
}

std::pair<NetworkSpec, Network> prune_top_block(const NetworkSpec& spec, const NetSnapshot& pretrained) {
  if (spec.blocks.size() < 2) throw std::invalid_argument("cannot prune below one block");
  Network net = build_pruned(spec, pretrained, 1);
  return {net.spec(), std::move(net)};
}

namespace {

constexpr char kMagic[4] = {'A', 'L', 'R', 'S'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  put_u32(os, static_cast<std::uint32_t>(v));
  put_u32(os, static_cast<std::uint32_t>(v >> 32));
}

void put_f64(std::ostream& os, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, sizeof v);
  put_u64(os, v);
}

void put_tensors(std::ostream& os, const BlockTensors& t) {
  for (double d : t.weights.data()) put_f64(os, d);
  for (double d : t.biases) put_f64(os, d);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw parse_error("snapshot file truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint64_t get_u64(std::istream& is) {
  const std::uint64_t lo = get_u32(is);
  const std::uint64_t hi = get_u32(is);
  return lo | (hi << 32);
}

double get_f64(std::istream& is) {
  const std::uint64_t v = get_u64(is);
  double d;
  std::memcpy(&d, &v, sizeof d);
  return d;
}

void get_tensors(std::istream& is, BlockTensors& t) {
  for (double& d : t.weights.data()) d = get_f64(is);
  for (double& d : t.biases) d = get_f64(is);
}

}  // namespace

void save_snapshot(const NetSnapshot& snap, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os.write(kMagic, 4);
  put_u32(os, kVersion);
  put_u32(os, static_cast<std::uint32_t>(snap.spec.input_dim));
  put_u32(os, static_cast<std::uint32_t>(snap.spec.blocks.size()));
  for (const auto& b : snap.spec.blocks) {
    put_u32(os, static_cast<std::uint32_t>(b.output_dim));
    os.put(static_cast<char>(b.activation));
  }
  put_u32(os, static_cast<std::uint32_t>(snap.spec.head.num_classes));
  put_u64(os, snap.spec.seed);
  os.put(snap.has_optimizer_state() ? '\1' : '\0');
  for (const auto& b : snap.blocks) put_tensors(os, b);
  put_tensors(os, snap.head);
  if (snap.has_optimizer_state()) {
    for (const auto& m : snap.momentum) put_tensors(os, m);
    put_u32(os, static_cast<std::uint32_t>(snap.lrs.size()));
    for (double lr : snap.lrs) put_f64(os, lr);
  }
  std::ostringstream rs;
  rs << snap.rng;
  const std::string rng_text = rs.str();
  put_u32(os, static_cast<std::uint32_t>(rng_text.size()));
  os.write(rng_text.data(), static_cast<std::streamsize>(rng_text.size()));
  if (!os) throw std::runtime_error("write failed: " + path);
}

NetSnapshot load_snapshot(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw parse_error("not a snapshot file (bad magic): " + path);
  const std::uint32_t version = get_u32(is);
  if (version != kVersion)
    throw parse_error("unsupported snapshot version " + std::to_string(version));

  NetSnapshot snap;
  snap.spec.input_dim = static_cast<int>(get_u32(is));
  const std::uint32_t k_blocks = get_u32(is);
  std::size_t in = static_cast<std::size_t>(snap.spec.input_dim);
  for (std::uint32_t k = 0; k < k_blocks; ++k) {
    BlockSpec bs;
    bs.output_dim = static_cast<int>(get_u32(is));
    const int act = is.get();
    if (act < 0 || act > 2) throw parse_error("snapshot has invalid activation code");
    bs.activation = static_cast<Activation>(act);
    snap.spec.blocks.push_back(bs);
  }
  snap.spec.head.num_classes = static_cast<int>(get_u32(is));
  snap.spec.seed = get_u64(is);
  snap.spec.validate();
  const int has_opt = is.get();

  for (std::uint32_t k = 0; k < k_blocks; ++k) {
    const std::size_t out = static_cast<std::size_t>(snap.spec.blocks[k].output_dim);
    BlockTensors t;
    t.weights = Matrix(in, out);
    t.biases.assign(out, 0.0);
    get_tensors(is, t);
    snap.blocks.push_back(std::move(t));
    in = out;
  }
  snap.head.weights = Matrix(in, static_cast<std::size_t>(snap.spec.head.num_classes));
  snap.head.biases.assign(static_cast<std::size_t>(snap.spec.head.num_classes), 0.0);
  get_tensors(is, snap.head);

  if (has_opt == 1) {
    for (std::uint32_t k = 0; k < k_blocks; ++k) {
      BlockTensors m;
      m.weights = Matrix(snap.blocks[k].weights.rows(), snap.blocks[k].weights.cols());
      m.biases.assign(snap.blocks[k].biases.size(), 0.0);
      get_tensors(is, m);
      snap.momentum.push_back(std::move(m));
    }
    BlockTensors mh;
    mh.weights = Matrix(snap.head.weights.rows(), snap.head.weights.cols());
    mh.biases.assign(snap.head.biases.size(), 0.0);
    get_tensors(is, mh);
    snap.momentum.push_back(std::move(mh));
    const std::uint32_t n_lr = get_u32(is);
    for (std::uint32_t i = 0; i < n_lr; ++i) snap.lrs.push_back(get_f64(is));
  }

  const std::uint32_t rng_len = get_u32(is);
  std::string rng_text(rng_len, '\0');
  is.read(rng_text.data(), rng_len);
  if (!is) throw parse_error("snapshot file truncated (rng state)");
  std::istringstream rs(rng_text);
  rs >> snap.rng;
  if (rs.fail()) throw parse_error("snapshot rng state unreadable");
  return snap;
}

namespace {
std::uint64_t hash_tensors(const BlockTensors& t, std::uint64_t h) {
  h = fnv1a64(t.weights.data().data(), t.weights.size() * sizeof(double), h);
  if (!t.biases.empty()) h = fnv1a64(t.biases.data(), t.biases.size() * sizeof(double), h);
  return h;
}
}  // namespace

std::uint64_t hash_blocks(const Network& net, std::size_t n_blocks) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t k = 0; k < n_blocks && k < net.block_count(); ++k) h = hash_tensors(net.block(k), h);
  return h;
}

std::uint64_t hash_blocks(const NetSnapshot& snap, std::size_t n_blocks) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t k = 0; k < n_blocks && k < snap.blocks.size(); ++k) h = hash_tensors(snap.blocks[k], h);
  return h;
}

std::uint64_t hash_params(const Network& net) {
  return hash_tensors(net.head(), hash_blocks(net, net.block_count()));
}

std::uint64_t hash_params(const NetSnapshot& snap) {
  return hash_tensors(snap.head, hash_blocks(snap, snap.blocks.size()));
}

}  // namespace alr
