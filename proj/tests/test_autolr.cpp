// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "alr/autolr.hpp"
#include "alr/optimizer.hpp"
#include "alr/util.hpp"

using namespace alr;

namespace {

// Brute-force ranking: rank = 1 + #{smaller} + #{equal at lower index}.
double quality_brute_force(const std::vector<double>& v) {
  const double k = static_cast<double>(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    int rank = 1;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] < v[i] || (v[j] == v[i] && j < i)) ++rank;
    }
    sum += std::abs(static_cast<double>(i) + 1.0 - rank);
  }
  return 1.0 - (2.0 / (k * k)) * sum;
}

// Trainer stub with variation as a fixed linear response to the LR.
class LinearStub final : public EpochTrainer {
 public:
  explicit LinearStub(std::vector<double> gains) : gains_(std::move(gains)) {}

  std::size_t block_count() const override { return gains_.size(); }
  std::unique_ptr<State> save_state() const override { return std::make_unique<State>(); }
  void load_state(const State&) override {}
  std::vector<double> train_one_epoch(const std::vector<double>& block_lrs) override {
    ++epochs_run_;
    std::vector<double> v(gains_.size());
    for (std::size_t k = 0; k < gains_.size(); ++k) v[k] = gains_[k] * block_lrs[k];
    return v;
  }

  int epochs_run() const { return epochs_run_; }

 private:
  std::vector<double> gains_;
  int epochs_run_ = 0;
};

// Variations fixed regardless of the LR; never sortable when unsorted.
class StuckStub final : public EpochTrainer {
 public:
  explicit StuckStub(std::vector<double> v) : v_(std::move(v)) {}
  std::size_t block_count() const override { return v_.size(); }
  std::unique_ptr<State> save_state() const override { return std::make_unique<State>(); }
  void load_state(const State&) override {}
  std::vector<double> train_one_epoch(const std::vector<double>&) override { return v_; }

 private:
  std::vector<double> v_;
};

}  // namespace

TEST_CASE("rank_ascending basics") {
  CHECK(rank_ascending({1.0, 2.0, 3.0}) == std::vector<int>{1, 2, 3});
  CHECK(rank_ascending({2.0, 1.0, 3.0}) == std::vector<int>{2, 1, 3});
  CHECK(rank_ascending({5.0, 5.0, 1.0}) == std::vector<int>{2, 3, 1});  // tie by index
  CHECK(rank_ascending({4.0}) == std::vector<int>{1});
  CHECK_THROWS_AS(rank_ascending({1.0, std::nan("")}), std::invalid_argument);
  CHECK_THROWS_AS(rank_ascending({}), std::invalid_argument);
}

TEST_CASE("rank_ascending returns a permutation of 1..K") {
  std::mt19937_64 g(5);
  for (int iter = 0; iter < 200; ++iter) {
    const std::size_t k = 1 + g() % 8;
    std::vector<double> v(k);
    for (double& x : v) x = uniform_in(g, -10.0, 10.0);
    if (iter % 3 == 0) v[g() % k] = v[0];  // inject ties
    std::vector<int> rank = rank_ascending(v);
    std::sort(rank.begin(), rank.end());
    for (std::size_t i = 0; i < k; ++i) CHECK(rank[i] == static_cast<int>(i) + 1);
  }
}

TEST_CASE("sorting quality hand values") {
  CHECK(sorting_quality({1.0, 2.0, 3.0}) == 1.0);
  CHECK(sorting_quality({0.0, 0.0, 0.0}) == 1.0);  // ties resolve to identity
  CHECK(sorting_quality({4.0, 3.0, 2.0, 1.0}) == 0.0);
  CHECK(sorting_quality({2.0, 1.0, 3.0}) == doctest::Approx(5.0 / 9.0).epsilon(1e-15));
}

TEST_CASE("sorting quality matches brute force over all permutations, K <= 6") {
  for (std::size_t k = 1; k <= 6; ++k) {
    std::vector<double> values(k);
    std::iota(values.begin(), values.end(), 1.0);  // distinct
    std::vector<double> v = values;
    std::sort(v.begin(), v.end());
    do {
      const double q = sorting_quality(v);
      CHECK(q == quality_brute_force(v));
      CHECK(q >= 0.0);
      CHECK(q <= 1.0);
      CHECK((q == 1.0) == std::is_sorted(v.begin(), v.end()));
    } while (std::next_permutation(v.begin(), v.end()));
  }
}

TEST_CASE("sorting quality is rank-only: invariant under increasing transforms") {
  std::mt19937_64 g(11);
  for (int iter = 0; iter < 200; ++iter) {
    const std::size_t k = 2 + g() % 6;
    std::vector<double> v(k);
    for (double& x : v) x = uniform_in(g, 0.0, 5.0);
    std::vector<double> exp_v(k), affine_v(k);
    for (std::size_t i = 0; i < k; ++i) {
      exp_v[i] = std::exp(v[i]);
      affine_v[i] = 3.0 * v[i] + 7.0;
    }
    const double q = sorting_quality(v);
    CHECK(sorting_quality(exp_v) == q);
    CHECK(sorting_quality(affine_v) == q);
  }
}

TEST_CASE("initial targets reproduce the hand example at double precision") {
  // Hand decimals: lower 2*0.01=0.02, upper 0.4*0.1=0.04, d=0.01,
  // targets [0.02, 0.03, 0.04]. The doubles 0.4 and 0.1 multiply to one ulp
  // above double(0.04), so the match is exact up to final-digit rounding.
  AutoLrConfig cfg;  // alpha=2, beta=0.4
  const TargetSchedule t = initial_targets({0.01, 0.05, 0.1}, cfg);
  CHECK(t.spacing == doctest::Approx(0.01).epsilon(5e-16));
  CHECK(t.targets[0] == 0.02);
  CHECK(t.targets[1] == doctest::Approx(0.03).epsilon(5e-16));
  CHECK(t.targets[2] == doctest::Approx(0.04).epsilon(5e-16));
}

TEST_CASE("initial targets with touching bounds are a fixed point") {
  AutoLrConfig cfg;
  cfg.alpha = 1.0;
  cfg.beta = 1.0;
  const TargetSchedule t = initial_targets({1.0, 2.0, 3.0}, cfg);
  CHECK(t.targets == std::vector<double>{1.0, 2.0, 3.0});
}

TEST_CASE("initial targets clamp the gap when the bounds cross") {
  AutoLrConfig cfg;
  const TargetSchedule t = initial_targets({1.0, 1.1}, cfg);
  CHECK(t.spacing == cfg.d_floor);
  CHECK(t.targets[0] == 2.0);
  CHECK(t.targets[1] == 2.0 + 1e-12);
}

TEST_CASE("initial targets reject degenerate input") {
  AutoLrConfig cfg;
  CHECK_THROWS_AS(initial_targets({0.0, 0.0, 0.0}, cfg), std::domain_error);
  CHECK_THROWS_AS(initial_targets({0.1}, cfg), std::invalid_argument);
}

TEST_CASE("initial targets are strictly increasing with constant gap") {
  AutoLrConfig cfg;
  std::mt19937_64 g(7);
  for (int iter = 0; iter < 200; ++iter) {
    std::vector<double> v(2 + g() % 6);
    for (double& x : v) x = uniform_in(g, 0.0, 1.0);
    if (*std::max_element(v.begin(), v.end()) == 0.0) continue;
    const TargetSchedule t = initial_targets(v, cfg);
    for (std::size_t k = 1; k < t.targets.size(); ++k)
      CHECK(t.targets[k] - t.targets[k - 1] == doctest::Approx(t.spacing).epsilon(1e-9));
  }
}

TEST_CASE("literal base variant starts at min(v)") {
  AutoLrConfig cfg;
  cfg.literal_initial_base = true;
  const TargetSchedule t = initial_targets({0.01, 0.05, 0.1}, cfg);
  CHECK(t.targets[0] == 0.01);
  CHECK(t.spacing == doctest::Approx(0.01).epsilon(5e-16));
}

TEST_CASE("center-out targets keep a sorted vector unchanged") {
  const std::vector<double> v = {0.1, 0.2, 0.2, 0.9};
  const TargetSchedule t = center_out_targets(v, 0.05, AutoLrConfig::center_index(v.size()));
  CHECK(t.targets == v);
}

TEST_CASE("center-out targets match the hand trace") {
  // K=3, center=2, d=0.5, v=[5,2,1] -> [1.5, 2, 2.5]
  const TargetSchedule t = center_out_targets({5.0, 2.0, 1.0}, 0.5, 2);
  CHECK(t.targets == std::vector<double>{1.5, 2.0, 2.5});
}

TEST_CASE("center-out targets are nondecreasing and anchored at the center") {
  std::mt19937_64 g(13);
  for (int iter = 0; iter < 1000; ++iter) {
    const std::size_t k = 2 + g() % 7;
    std::vector<double> v(k);
    for (double& x : v) x = uniform_in(g, 0.0, 1.0);
    const double d = uniform_in(g, 1e-6, 0.5);
    const std::size_t center = AutoLrConfig::center_index(k);
    const TargetSchedule t = center_out_targets(v, d, center);
    CHECK(t.targets[center - 1] == v[center - 1]);
    for (std::size_t i = 1; i < k; ++i) CHECK(t.targets[i] >= t.targets[i - 1]);
    for (double x : t.targets) CHECK(x >= 0.0);
    // Idempotent once sorted.
    const TargetSchedule t2 = center_out_targets(t.targets, d, center);
    CHECK(t2.targets == t.targets);
  }
}

TEST_CASE("renew_lr fixed point and direct arithmetic") {
  CHECK(renew_lr({1e-3, 2e-3}, {0.5, 0.7}, {0.5, 0.7}) == std::vector<double>{1e-3, 2e-3});
  const std::vector<double> out = renew_lr({0.001}, {0.002}, {0.004});
  CHECK(out[0] == doctest::Approx(0.002).epsilon(1e-15));
}

TEST_CASE("renew_lr skips zero-variation blocks and clamps to bounds") {
  const std::vector<double> out = renew_lr({1e-3, 1e-3, 1e-3}, {0.0, 1.0, 1e-9}, {0.5, 1e-9, 1.0});
  CHECK(out[0] == 1e-3);        // skip rule
  CHECK(out[1] == kLrFloor);    // clamped down
  CHECK(out[2] == kLrCeiling);  // clamped up
}

TEST_CASE("renew_lr is positively homogeneous in the targets before clamping") {
  std::mt19937_64 g(29);
  for (int iter = 0; iter < 200; ++iter) {
    const std::size_t k = 2 + g() % 5;
    std::vector<double> lr(k), v(k), t(k);
    for (std::size_t i = 0; i < k; ++i) {
      lr[i] = uniform_in(g, 1e-4, 1e-2);
      v[i] = uniform_in(g, 1e-4, 1.0);
      t[i] = uniform_in(g, 1e-4, 1.0);
    }
    const double c = uniform_in(g, 0.5, 2.0);
    std::vector<double> ct(k);
    for (std::size_t i = 0; i < k; ++i) ct[i] = c * t[i];
    const std::vector<double> a = renew_lr(lr, v, t);
    const std::vector<double> b = renew_lr(lr, v, ct);
    for (std::size_t i = 0; i < k; ++i) {
      if (a[i] > kLrFloor && a[i] < kLrCeiling && b[i] > kLrFloor && b[i] < kLrCeiling)
        CHECK(b[i] / a[i] == doctest::Approx(c).epsilon(1e-12));
    }
  }
}

TEST_CASE("an already-sorted trainer is accepted on the first trial") {
  LinearStub stub({1.0, 2.0, 3.0});  // uniform lr -> sorted v
  AutoLrController ctl(AutoLrConfig{}, {1e-3, 1e-3, 1e-3});
  const EpochReport er = ctl.run_epoch(stub, 1);
  CHECK(er.accepted);
  CHECK(er.trial_count() == 1);
  CHECK(er.committed_lrs == std::vector<double>{1e-3, 1e-3, 1e-3});
  CHECK(ctl.lrs() == std::vector<double>{1e-3, 1e-3, 1e-3});
}

TEST_CASE("controller reaches the analytic solution on the linear stub") {
  // v_k = c_k * lr_k with c = [10, 1, 4]: unsorted on trial 1 under a uniform lr.
  const std::vector<double> gains = {10.0, 1.0, 4.0};
  LinearStub stub(gains);
  AutoLrConfig cfg;
  AutoLrController ctl(cfg, {1e-3, 1e-3, 1e-3});
  const EpochReport er = ctl.run_epoch(stub, 1);
  CHECK(er.accepted);
  CHECK(er.trial_count() <= 3);
  // Hand solution: v1=[1e-2,1e-3,4e-3], bounds [2e-3, 4e-3], d=1e-3,
  // targets [2e-3,3e-3,4e-3], committed lr_k = target_k / c_k.
  const std::vector<double> expected = {2e-4, 3e-3, 1e-3};
  REQUIRE(er.committed_lrs.size() == expected.size());
  for (std::size_t k = 0; k < expected.size(); ++k)
    CHECK(std::abs(er.committed_lrs[k] - expected[k]) <= 1e-9);
}

TEST_CASE("a zero-variation block never changes its learning rate") {
  // Block 2 is dead: v = 0 regardless of lr; others respond linearly.
  class ZeroBlockStub final : public EpochTrainer {
   public:
    std::size_t block_count() const override { return 3; }
    std::unique_ptr<State> save_state() const override { return std::make_unique<State>(); }
    void load_state(const State&) override {}
    std::vector<double> train_one_epoch(const std::vector<double>& lrs) override {
      return {5.0 * lrs[0], 0.0, 1.0 * lrs[2]};
    }
  };
  ZeroBlockStub stub;
  AutoLrConfig cfg;
  cfg.max_trials_per_epoch = 4;
  AutoLrController ctl(cfg, {1e-3, 1e-3, 1e-3});
  const EpochReport er = ctl.run_epoch(stub, 1);
  for (const auto& trial : er.trials) CHECK(trial.lrs[1] == 1e-3);
}

TEST_CASE("trial limit commits the best trial with a fallback mark") {
  StuckStub stub({3.0, 2.0, 1.0});  // reversed, never improves
  AutoLrConfig cfg;
  cfg.max_trials_per_epoch = 5;
  AutoLrController ctl(cfg, {1e-3, 1e-3, 1e-3});
  const EpochReport er = ctl.run_epoch(stub, 1);
  CHECK_FALSE(er.accepted);
  CHECK(er.fallback);
  CHECK(er.trial_count() == 5);
  CHECK(er.committed_quality == doctest::Approx(sorting_quality({3.0, 2.0, 1.0})));
}

TEST_CASE("run over T epochs") {
  SUBCASE("T=0 gives an empty report") {
    LinearStub stub({1.0, 2.0});
    AutoLrController ctl(AutoLrConfig{}, {1e-3, 1e-3});
    const RunReport rr = ctl.run(stub, 0);
    CHECK(rr.epochs.empty());
    CHECK(rr.final_lrs == std::vector<double>{1e-3, 1e-3});
  }
  SUBCASE("T=2 with an always-sorted stub runs one trial per epoch") {
    LinearStub stub({1.0, 2.0});
    AutoLrController ctl(AutoLrConfig{}, {1e-3, 1e-3});
    const RunReport rr = ctl.run(stub, 2);
    REQUIRE(rr.epochs.size() == 2);
    for (const auto& er : rr.epochs) {
      CHECK(er.accepted);
      CHECK(er.trial_count() == 1);
    }
    CHECK(stub.epochs_run() == 2);
  }
}

TEST_CASE("controller is deterministic") {
  const std::vector<double> gains = {7.0, 2.0, 9.0, 1.0};
  auto run_once = [&] {
    LinearStub stub(gains);
    AutoLrController ctl(AutoLrConfig{}, std::vector<double>(4, 1e-3));
    return ctl.run(stub, 6);
  };
  const RunReport a = run_once();
  const RunReport b = run_once();
  REQUIRE(a.epochs.size() == b.epochs.size());
  CHECK(a.final_lrs == b.final_lrs);
  for (std::size_t i = 0; i < a.epochs.size(); ++i) {
    CHECK(a.epochs[i].trial_count() == b.epochs[i].trial_count());
    CHECK(a.epochs[i].committed_lrs == b.epochs[i].committed_lrs);
  }
}

TEST_CASE("accepted trials always satisfy the strict quality threshold") {
  std::mt19937_64 g(41);
  for (int iter = 0; iter < 50; ++iter) {
    std::vector<double> gains(4);
    for (double& c : gains) c = uniform_in(g, 0.5, 20.0);
    LinearStub stub(gains);
    AutoLrConfig cfg;
    AutoLrController ctl(cfg, std::vector<double>(4, 1e-3));
    const RunReport rr = ctl.run(stub, 3);
    for (const auto& er : rr.epochs)
      if (er.accepted) CHECK(er.committed_quality > cfg.tau_s);
  }
}

TEST_CASE("config validation") {
  AutoLrConfig cfg;
  cfg.alpha = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = AutoLrConfig{};
  cfg.tau_s = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = AutoLrConfig{};
  cfg.max_trials_per_epoch = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK(AutoLrConfig::center_index(4) == 2);
  CHECK(AutoLrConfig::center_index(5) == 3);
}
