// SPDX-License-Identifier: Apache-2.0
#include "alr/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "alr/metrics.hpp"
#include "alr/svg.hpp"
#include "alr/trainer.hpp"
#include "alr/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace alr {

namespace {

std::string fmt_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const json& need(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw config_error("missing key '" + std::string(key) + "' in " + where);
  return *it;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  return it->get<T>();
}

NetworkSpec parse_network(const json& j) {
  NetworkSpec spec;
  spec.input_dim = need(j, "input_dim", "network").get<int>();
  for (const auto& b : need(j, "blocks", "network")) {
    BlockSpec bs;
    bs.output_dim = need(b, "dim", "network.blocks").get<int>();
    bs.activation = activation_from_string(get_or<std::string>(b, "activation", "relu"));
    spec.blocks.push_back(bs);
  }
  spec.head.num_classes = need(j, "classes", "network").get<int>();
  spec.seed = get_or<std::uint64_t>(j, "seed", 0);
  spec.validate();
  return spec;
}

json network_json(const NetworkSpec& spec) {
  json blocks = json::array();
  for (const auto& b : spec.blocks)
    blocks.push_back({{"dim", b.output_dim}, {"activation", to_string(b.activation)}});
  return {{"input_dim", spec.input_dim},
          {"blocks", blocks},
          {"classes", spec.head.num_classes},
          {"seed", spec.seed}};
}

OptimizerConfig parse_optimizer(const json& j) {
  OptimizerConfig cfg;
  cfg.momentum = get_or(j, "momentum", cfg.momentum);
  cfg.weight_decay = get_or(j, "weight_decay", cfg.weight_decay);
  cfg.nesterov = get_or(j, "nesterov", cfg.nesterov);
  cfg.reset_momentum_each_epoch = get_or(j, "reset_momentum_each_epoch", cfg.reset_momentum_each_epoch);
  cfg.validate();
  return cfg;
}

AutoLrConfig parse_autolr(const json& j) {
  AutoLrConfig cfg;
  cfg.alpha = get_or(j, "alpha", cfg.alpha);
  cfg.beta = get_or(j, "beta", cfg.beta);
  cfg.tau_s = get_or(j, "tau_s", cfg.tau_s);
  cfg.max_trials_per_epoch = get_or(j, "max_trials_per_epoch", cfg.max_trials_per_epoch);
  cfg.d_floor = get_or(j, "d_floor", cfg.d_floor);
  cfg.literal_initial_base = get_or(j, "literal_initial_base", cfg.literal_initial_base);
  cfg.include_head_in_ordering = get_or(j, "include_head", cfg.include_head_in_ordering);
  cfg.validate();
  return cfg;
}

BaselineScheduleConfig parse_schedule(const json& j, int total_epochs) {
  BaselineScheduleConfig cfg;
  cfg.kind = schedule_kind_from_string(need(j, "kind", "schedule").get<std::string>());
  cfg.l_max = get_or(j, "l_max", cfg.l_max);
  cfg.l_min = get_or(j, "l_min", cfg.l_min);
  cfg.t_d = get_or(j, "t_d", cfg.t_d);
  cfg.gamma = get_or(j, "gamma", cfg.gamma);
  cfg.cycles = get_or(j, "cycles", cfg.cycles);
  cfg.n_reset = get_or(j, "n_reset", cfg.n_reset);
  cfg.total_epochs = total_epochs;
  cfg.validate();
  return cfg;
}

DataSourceConfig parse_data_source(const json& j, const std::string& where) {
  DataSourceConfig cfg;
  const std::string type = need(j, "type", where).get<std::string>();
  if (type == "synthetic") {
    cfg.kind = DataSourceConfig::Kind::kSynthetic;
    cfg.synthetic.seed = need(j, "seed", where).get<std::uint64_t>();
    cfg.synthetic.classes = need(j, "classes", where).get<int>();
    cfg.synthetic.dim = need(j, "dim", where).get<int>();
    cfg.synthetic.per_class = need(j, "per_class", where).get<int>();
    cfg.synthetic.separation = need(j, "separation", where).get<double>();
  } else if (type == "csv") {
    cfg.kind = DataSourceConfig::Kind::kCsv;
    cfg.csv_path = need(j, "path", where).get<std::string>();
  } else {
    throw config_error(where + ": unknown dataset type '" + type + "'");
  }
  return cfg;
}

double median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

struct SeedContext {
  std::uint64_t seed = 0;
  fs::path dir;
  Dataset target;
  NetworkSpec target_spec;
  NetSnapshot pretrained;
  double pretrain_test_accuracy = 0.0;
};

SeedContext prepare_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  SeedContext ctx;
  ctx.seed = seed;
  ctx.dir = fs::path(cfg.run.out_dir) / ("seed_" + std::to_string(seed));
  fs::create_directories(ctx.dir);
  ctx.target = cfg.dataset.target.load();

  if (!cfg.run.snapshot_path.empty()) {
    ctx.pretrained = load_snapshot(cfg.run.snapshot_path);
    ctx.target_spec = ctx.pretrained.spec;
  } else {
    if (!cfg.dataset.source.has_value())
      throw config_error("dataset.source is required when run.snapshot is not set");
    const Dataset source = cfg.dataset.source->load();
    NetworkSpec src_spec = cfg.network;
    src_spec.seed = seed;
    src_spec.head.num_classes = source.num_classes;
    Trainer::Options topt;
    topt.batch_size = cfg.run.batch_size;
    topt.head_lr = cfg.run.initial_lr;
    Trainer trainer(Network(src_spec), cfg.optimizer, source.train_x, source.train_y, topt);
    for (int e = 0; e < cfg.run.pretrain_epochs; ++e)
      trainer.train_one_epoch_single_lr(cfg.run.initial_lr);
    ctx.pretrain_test_accuracy = accuracy_score()(trainer.network(), source);
    ctx.pretrained = trainer.capture();
    ctx.target_spec = src_spec;
    save_snapshot(ctx.pretrained, (ctx.dir / "pretrained.alrs").string());
  }
  ctx.target_spec.seed = seed;
  ctx.target_spec.head.num_classes = ctx.target.num_classes;
  return ctx;
}

Network start_network(const SeedContext& ctx, std::size_t depth) {
  NetworkSpec spec = ctx.target_spec;
  spec.seed = ctx.target_spec.seed ^ static_cast<std::uint64_t>(depth);
  return build_pruned(spec, ctx.pretrained, depth);
}

ScoreFn score_by_name(const std::string& name) {
  if (name == "accuracy") return accuracy_score();
  if (name == "recall1") return recall1_score();
  throw config_error("pruning.score must be 'accuracy' or 'recall1'");
}

void emit_run_charts(const std::vector<TraceRow>& rows, std::size_t k_blocks, const fs::path& dir) {
  // Committed values per epoch: the accepted trial if any, else the best-quality trial.
  std::map<int, std::map<int, std::vector<const TraceRow*>>> by_epoch_trial;
  for (const auto& r : rows) by_epoch_trial[r.epoch][r.trial].push_back(&r);

  std::vector<SvgSeries> v_series(k_blocks), lr_series(k_blocks);
  for (std::size_t k = 0; k < k_blocks; ++k) {
    v_series[k].name = "block " + std::to_string(k + 1);
    lr_series[k].name = v_series[k].name;
  }
  for (const auto& [epoch, trials] : by_epoch_trial) {
    const std::vector<const TraceRow*>* committed = nullptr;
    double best_q = -1.0;
    for (const auto& [trial, block_rows] : trials) {
      const double q = block_rows.front()->quality;
      if (block_rows.front()->accepted) {
        committed = &block_rows;
        break;
      }
      if (q > best_q) {
        best_q = q;
        committed = &block_rows;
      }
    }
    for (const TraceRow* r : *committed) {
      const std::size_t k = static_cast<std::size_t>(r->block - 1);
      if (k >= k_blocks) continue;
      v_series[k].x.push_back(epoch);
      v_series[k].y.push_back(r->v);
      lr_series[k].x.push_back(epoch);
      lr_series[k].y.push_back(r->lr);
    }
  }
  SvgOptions vo;
  vo.title = "Per-block weight variation";
  vo.x_label = "epoch";
  vo.y_label = "variation";
  vo.log_y = true;
  emit_svg_lines(v_series, (dir / "variations.svg").string(), vo);
  SvgOptions lo;
  lo.title = "Per-block learning rate";
  lo.x_label = "epoch";
  lo.y_label = "lr";
  lo.log_y = true;
  emit_svg_lines(lr_series, (dir / "lrs.svg").string(), lo);
}

SeedSummary finetune_autolr(const ExperimentConfig& cfg, const AutoLrConfig& acfg,
                            const SeedContext& ctx, std::size_t depth, const fs::path& dir) {
  Trainer::Options topt;
  topt.batch_size = cfg.run.batch_size;
  topt.head_lr = cfg.run.initial_lr;
  topt.include_head_in_ordering = acfg.include_head_in_ordering;
  Trainer trainer(start_network(ctx, depth), cfg.optimizer, ctx.target.train_x, ctx.target.train_y,
                  topt);

  SeedSummary ss;
  ss.policy = "autolr";
  ss.seed = ctx.seed;
  ss.epochs = cfg.run.epochs;
  ss.identity_exact = trainer.identity_exact_mode();

  const std::vector<double> base_lrs(trainer.block_count(), cfg.run.initial_lr);
  if (cfg.run.acc_grad_stability_check) {
    const AccGradSpread spread = measure_acc_grad_spread(trainer, base_lrs, {0.5, 1.0, 2.0});
    ss.acc_grad_spread_per_block = spread.per_block;
    ss.acc_grad_max_spread = spread.max_spread;
    ss.acc_grad_spread_warned = spread.max_spread > kAccGradSpreadWarnThreshold;
    if (ss.acc_grad_spread_warned)
      std::cerr << "warning: accumulated-gradient norm moved " << spread.max_spread * 100.0
                << "% across lr rescalings (threshold "
                << kAccGradSpreadWarnThreshold * 100.0 << "%)\n";
  }

  AutoLrController controller(acfg, base_lrs);
  const RunReport report = controller.run(trainer, cfg.run.epochs);

  std::vector<double> trials_after_5, trials_all;
  for (const auto& er : report.epochs) {
    ss.trials_per_epoch.push_back(er.trial_count());
    trials_all.push_back(er.trial_count());
    if (er.accepted) ++ss.accepted_epochs;
    if (er.epoch > 5) trials_after_5.push_back(er.trial_count());
    if (er.fallback)
      std::cerr << "warning: epoch " << er.epoch << " hit the trial limit; committed trial "
                << er.committed_trial << " (quality " << er.committed_quality << ")\n";
  }
  ss.acceptance_rate =
      cfg.run.epochs > 0 ? static_cast<double>(ss.accepted_epochs) / cfg.run.epochs : 1.0;
  ss.median_trials_after_epoch5 = median(trials_after_5.empty() ? trials_all : trials_after_5);
  ss.final_lrs = report.final_lrs;

  const std::vector<TraceRow> rows = trace_rows(report);
  write_trace_csv(rows, (dir / "trace.csv").string());
  ss.trace_path = (dir / "trace.csv").string();
  if (!rows.empty()) emit_run_charts(rows, trainer.block_count(), dir);

  ss.final_test_accuracy = accuracy_score()(trainer.network(), ctx.target);
  ss.final_recall_at_1 = recall1_score()(trainer.network(), ctx.target);
  ss.identity_max_rel_err = trainer.max_identity_rel_err();
  ss.pretrain_test_accuracy = ctx.pretrain_test_accuracy;
  return ss;
}

SeedSummary finetune_schedule(const ExperimentConfig& cfg, const BaselineScheduleConfig& scfg,
                              const SeedContext& ctx, std::size_t depth, const fs::path& dir) {
  Trainer::Options topt;
  topt.batch_size = cfg.run.batch_size;
  topt.head_lr = cfg.run.initial_lr;
  Trainer trainer(start_network(ctx, depth), cfg.optimizer, ctx.target.train_x, ctx.target.train_y,
                  topt);

  SeedSummary ss;
  ss.policy = to_string(scfg.kind);
  ss.seed = ctx.seed;
  ss.epochs = cfg.run.epochs;
  ss.identity_exact = trainer.identity_exact_mode();

  std::vector<TraceRow> rows;
  for (int e = 0; e < cfg.run.epochs; ++e) {
    const double lr = lr_at(scfg, e);
    const std::vector<double> v = trainer.train_one_epoch_single_lr(lr);
    const double q = sorting_quality(v);
    for (std::size_t k = 0; k < v.size(); ++k) {
      TraceRow r;
      r.epoch = e + 1;
      r.trial = 0;
      r.block = static_cast<int>(k) + 1;
      r.v = v[k];
      r.v_bar = v[k];
      r.lr = lr;
      r.quality = q;
      r.accepted = 0;
      rows.push_back(r);
    }
    ss.trials_per_epoch.push_back(1);
  }
  write_trace_csv(rows, (dir / "trace.csv").string());
  ss.trace_path = (dir / "trace.csv").string();
  if (!rows.empty()) emit_run_charts(rows, trainer.block_count(), dir);

  ss.final_test_accuracy = accuracy_score()(trainer.network(), ctx.target);
  ss.final_recall_at_1 = recall1_score()(trainer.network(), ctx.target);
  ss.identity_max_rel_err = trainer.max_identity_rel_err();
  ss.pretrain_test_accuracy = ctx.pretrain_test_accuracy;
  return ss;
}

json prune_json(const PruneReport& report) {
  json attempts = json::array();
  for (const auto& a : report.attempts) {
    attempts.push_back({{"blocks_removed", a.blocks_removed},
                        {"score", a.score},
                        {"fine_tune_epochs", a.fine_tune_epochs},
                        {"wall_time_s", a.wall_time_s},
                        {"backbone_hash", a.backbone_hash}});
  }
  return {{"attempts", attempts},
          {"selected_depth", report.selected_depth},
          {"best_score", report.best_score}};
}

json seed_summary_json(const SeedSummary& ss) {
  json j{{"seed", ss.seed},
         {"policy", ss.policy},
         {"epochs", ss.epochs},
         {"accepted_epochs", ss.accepted_epochs},
         {"acceptance_rate", ss.acceptance_rate},
         {"trials_per_epoch", ss.trials_per_epoch},
         {"median_trials_after_epoch5", ss.median_trials_after_epoch5},
         {"final_lrs", ss.final_lrs},
         {"pretrain_test_accuracy", ss.pretrain_test_accuracy},
         {"final_test_accuracy", ss.final_test_accuracy},
         {"final_recall_at_1", ss.final_recall_at_1},
         {"delta_identity", {{"exact", ss.identity_exact}, {"max_rel_err", ss.identity_max_rel_err}}},
         {"wall_time_s", ss.wall_time_s},
         {"trace", ss.trace_path}};
  j["acc_grad_spread"] = {{"per_block", ss.acc_grad_spread_per_block},
                          {"max", ss.acc_grad_max_spread},
                          {"warned", ss.acc_grad_spread_warned}};
  if (ss.prune.has_value()) j["prune"] = prune_json(*ss.prune);
  return j;
}

void write_summary_json(const ExperimentConfig& cfg, const ExperimentSummary& summary) {
  json per_seed = json::array();
  double acc_sum = 0.0, rate_sum = 0.0;
  for (const auto& ss : summary.seeds) {
    per_seed.push_back(seed_summary_json(ss));
    acc_sum += ss.final_test_accuracy;
    rate_sum += ss.acceptance_rate;
  }
  const double n = summary.seeds.empty() ? 1.0 : static_cast<double>(summary.seeds.size());
  json j{{"policy", summary.policy},
         {"deterministic", cfg.run.deterministic},
         {"network", network_json(cfg.network)},
         {"per_seed", per_seed},
         {"aggregate",
          {{"mean_final_test_accuracy", acc_sum / n}, {"mean_acceptance_rate", rate_sum / n}}}};
  std::ofstream os(fs::path(cfg.run.out_dir) / "summary.json", std::ios::binary);
  if (!os) throw std::runtime_error("cannot write summary.json");
  os << j.dump(2) << "\n";
}

}  // namespace

Dataset DataSourceConfig::load() const {
  return kind == Kind::kSynthetic ? gen_synthetic(synthetic) : load_csv(csv_path);
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw config_error("cannot open config: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  try {
    return from_json_text(ss.str());
  } catch (const config_error&) {
    throw;
  } catch (const std::exception& e) {
    throw config_error(path + ": " + e.what());
  }
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j = json::parse(text);
  ExperimentConfig cfg;
  cfg.network = parse_network(need(j, "network", "config"));
  if (j.contains("optimizer")) cfg.optimizer = parse_optimizer(j["optimizer"]);

  if (j.contains("run")) {
    const json& r = j["run"];
    cfg.run.epochs = get_or(r, "epochs", cfg.run.epochs);
    cfg.run.pretrain_epochs = get_or(r, "pretrain_epochs", cfg.run.pretrain_epochs);
    cfg.run.batch_size = get_or(r, "batch_size", cfg.run.batch_size);
    cfg.run.initial_lr = get_or(r, "initial_lr", cfg.run.initial_lr);
    cfg.run.seeds = get_or(r, "seeds", cfg.run.seeds);
    cfg.run.deterministic = get_or(r, "deterministic", cfg.run.deterministic);
    cfg.run.out_dir = get_or(r, "out", cfg.run.out_dir);
    cfg.run.snapshot_path = get_or(r, "snapshot", cfg.run.snapshot_path);
    cfg.run.acc_grad_stability_check =
        get_or(r, "acc_grad_stability_check", cfg.run.acc_grad_stability_check);
    if (cfg.run.epochs < 0) throw config_error("run.epochs must be >= 0");
    if (cfg.run.batch_size < 1) throw config_error("run.batch_size must be >= 1");
    if (cfg.run.seeds.empty()) throw config_error("run.seeds must be non-empty");
  }

  if (j.contains("autolr")) cfg.autolr = parse_autolr(j["autolr"]);
  if (j.contains("schedule")) cfg.schedule = parse_schedule(j["schedule"], cfg.run.epochs);

  if (j.contains("compare")) {
    int index = 0;
    for (const auto& entry : j["compare"]) {
      PolicyConfig p;
      if (entry.contains("autolr") == entry.contains("schedule"))
        throw config_error("compare entry " + std::to_string(index) +
                           ": exactly one of 'autolr'/'schedule' is required");
      if (entry.contains("autolr")) {
        p.autolr = parse_autolr(entry["autolr"]);
        p.name = get_or<std::string>(entry, "name", "autolr");
      } else {
        p.schedule = parse_schedule(entry["schedule"], cfg.run.epochs);
        p.name = get_or<std::string>(entry, "name",
                                     to_string(p.schedule->kind) + "_" + std::to_string(index));
      }
      cfg.compare.push_back(std::move(p));
      ++index;
    }
  }

  if (j.contains("pruning")) {
    const json& p = j["pruning"];
    cfg.pruning.enabled = get_or(p, "enabled", cfg.pruning.enabled);
    cfg.pruning.budget_epochs = get_or(p, "budget_epochs", cfg.pruning.budget_epochs);
    cfg.pruning.score = get_or(p, "score", cfg.pruning.score);
    score_by_name(cfg.pruning.score);  // validates
  }

  const json& d = need(j, "dataset", "config");
  if (d.contains("source")) cfg.dataset.source = parse_data_source(d["source"], "dataset.source");
  cfg.dataset.target = parse_data_source(need(d, "target", "dataset"), "dataset.target");

  cfg.validate();
  return cfg;
}

void ExperimentConfig::validate() const {
  if (autolr.has_value() && schedule.has_value())
    throw config_error("exactly one of 'autolr' and 'schedule' may be set");
  if (run.snapshot_path.empty() && !dataset.source.has_value())
    throw config_error("dataset.source is required when run.snapshot is not set");
  if (!run.snapshot_path.empty() && !fs::exists(run.snapshot_path))
    throw config_error("run.snapshot does not exist: " + run.snapshot_path);
  if (dataset.target.kind == DataSourceConfig::Kind::kCsv && !fs::exists(dataset.target.csv_path))
    throw config_error("dataset.target path does not exist: " + dataset.target.csv_path);
  if (dataset.source.has_value() && dataset.source->kind == DataSourceConfig::Kind::kCsv &&
      !fs::exists(dataset.source->csv_path))
    throw config_error("dataset.source path does not exist: " + dataset.source->csv_path);
}

void write_trace_csv(const std::vector<TraceRow>& rows, const std::string& path) {
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const TraceRow& a = rows[i - 1];
    const TraceRow& b = rows[i];
    const bool ordered = (a.epoch < b.epoch) || (a.epoch == b.epoch && a.trial < b.trial) ||
                         (a.epoch == b.epoch && a.trial == b.trial && a.block < b.block);
    if (!ordered) throw invariant_violation("trace rows out of (epoch, trial) order");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "epoch,trial,block,v,v_bar,lr,quality,accepted\n";
  for (const auto& r : rows) {
    os << r.epoch << "," << r.trial << "," << r.block << "," << fmt_g17(r.v) << ","
       << fmt_g17(r.v_bar) << "," << fmt_g17(r.lr) << "," << fmt_g17(r.quality) << ","
       << r.accepted << "\n";
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

std::vector<TraceRow> trace_rows(const RunReport& report) {
  std::vector<TraceRow> rows;
  for (const auto& er : report.epochs) {
    for (const auto& trial : er.trials) {
      for (std::size_t k = 0; k < trial.variation.size(); ++k) {
        TraceRow r;
        r.epoch = trial.epoch;
        r.trial = trial.trial;
        r.block = static_cast<int>(k) + 1;
        r.v = trial.variation[k];
        r.v_bar = trial.target[k];
        r.lr = trial.lrs[k];
        r.quality = trial.quality;
        r.accepted = trial.accepted ? 1 : 0;
        rows.push_back(r);
      }
    }
  }
  return rows;
}

std::vector<TraceRow> read_trace_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(is, line)) throw parse_error("empty trace: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "epoch,trial,block,v,v_bar,lr,quality,accepted")
    throw parse_error("unexpected trace header: " + line);
  std::vector<TraceRow> rows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    TraceRow r;
    char c;
    std::istringstream ss(line);
    ss >> r.epoch >> c >> r.trial >> c >> r.block >> c >> r.v >> c >> r.v_bar >> c >> r.lr >> c >>
        r.quality >> c >> r.accepted;
    if (ss.fail()) throw parse_error("trace line " + std::to_string(line_no) + " unparseable");
    rows.push_back(r);
  }
  return rows;
}

ExperimentSummary run_experiment(const ExperimentConfig& config) {
  config.validate();
  if (!config.autolr.has_value() && !config.schedule.has_value())
    throw config_error("one of 'autolr' or 'schedule' is required");
  fs::create_directories(config.run.out_dir);

  ExperimentSummary summary;
  summary.policy = config.autolr.has_value() ? "autolr" : to_string(config.schedule->kind);
  for (const std::uint64_t seed : config.run.seeds) {
    const auto t0 = std::chrono::steady_clock::now();
    SeedContext ctx = prepare_seed(config, seed);

    std::size_t depth = 0;
    std::optional<PruneReport> prune;
    if (config.pruning.enabled) {
      PruneOptions popt;
      popt.budget_epochs = config.pruning.budget_epochs;
      popt.batch_size = config.run.batch_size;
      popt.lr = config.run.initial_lr;
      popt.score_fn = score_by_name(config.pruning.score);
      prune = run_pruning(ctx.pretrained, ctx.target_spec, ctx.target, config.optimizer, popt);
      depth = static_cast<std::size_t>(prune->selected_depth);
      write_prune_csv(*prune, (ctx.dir / "prune_report.csv").string());
      save_snapshot(start_network(ctx, depth).snapshot(), (ctx.dir / "pruned.alrs").string());
    }

    SeedSummary ss = config.autolr.has_value()
                         ? finetune_autolr(config, *config.autolr, ctx, depth, ctx.dir)
                         : finetune_schedule(config, *config.schedule, ctx, depth, ctx.dir);
    ss.prune = std::move(prune);
    ss.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    summary.seeds.push_back(std::move(ss));
  }
  write_summary_json(config, summary);
  return summary;
}

ExperimentSummary run_pretrain(const ExperimentConfig& config) {
  config.validate();
  if (!config.dataset.source.has_value())
    throw config_error("pretrain requires dataset.source");
  fs::create_directories(config.run.out_dir);
  ExperimentSummary summary;
  summary.policy = "pretrain";
  for (const std::uint64_t seed : config.run.seeds) {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig local = config;
    local.run.snapshot_path.clear();  // always train from scratch
    SeedContext ctx = prepare_seed(local, seed);
    SeedSummary ss;
    ss.seed = seed;
    ss.policy = "pretrain";
    ss.epochs = config.run.pretrain_epochs;
    ss.pretrain_test_accuracy = ctx.pretrain_test_accuracy;
    ss.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    summary.seeds.push_back(std::move(ss));
  }
  write_summary_json(config, summary);
  return summary;
}

ExperimentSummary run_prune(const ExperimentConfig& config) {
  config.validate();
  fs::create_directories(config.run.out_dir);
  ExperimentSummary summary;
  summary.policy = "prune";
  for (const std::uint64_t seed : config.run.seeds) {
    const auto t0 = std::chrono::steady_clock::now();
    SeedContext ctx = prepare_seed(config, seed);
    PruneOptions popt;
    popt.budget_epochs = config.pruning.budget_epochs;
    popt.batch_size = config.run.batch_size;
    popt.lr = config.run.initial_lr;
    popt.score_fn = score_by_name(config.pruning.score);
    PruneReport report =
        run_pruning(ctx.pretrained, ctx.target_spec, ctx.target, config.optimizer, popt);
    write_prune_csv(report, (ctx.dir / "prune_report.csv").string());
    {
      std::ofstream os(ctx.dir / "prune_report.json", std::ios::binary);
      os << prune_json(report).dump(2) << "\n";
    }
    save_snapshot(start_network(ctx, static_cast<std::size_t>(report.selected_depth)).snapshot(),
                  (ctx.dir / "pruned.alrs").string());
    SeedSummary ss;
    ss.seed = seed;
    ss.policy = "prune";
    ss.pretrain_test_accuracy = ctx.pretrain_test_accuracy;
    ss.prune = std::move(report);
    ss.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    summary.seeds.push_back(std::move(ss));
  }
  write_summary_json(config, summary);
  return summary;
}

CompareSummary run_compare(const ExperimentConfig& config) {
  config.validate();
  if (config.compare.empty()) throw config_error("compare-schedulers requires a 'compare' list");
  fs::create_directories(config.run.out_dir);

  CompareSummary summary;
  for (const std::uint64_t seed : config.run.seeds) {
    SeedContext ctx = prepare_seed(config, seed);
    std::size_t depth = 0;
    if (config.pruning.enabled) {
      PruneOptions popt;
      popt.budget_epochs = config.pruning.budget_epochs;
      popt.batch_size = config.run.batch_size;
      popt.lr = config.run.initial_lr;
      popt.score_fn = score_by_name(config.pruning.score);
      const PruneReport report =
          run_pruning(ctx.pretrained, ctx.target_spec, ctx.target, config.optimizer, popt);
      depth = static_cast<std::size_t>(report.selected_depth);
      write_prune_csv(report, (ctx.dir / "prune_report.csv").string());
    }
    // Table-style fairness: every entry fine-tunes the same starting snapshot.
    const NetSnapshot start = start_network(ctx, depth).snapshot();
    const std::uint64_t start_hash = hash_params(start);
    save_snapshot(start, (ctx.dir / "pruned.alrs").string());

    for (const auto& entry : config.compare) {
      ExperimentConfig local = config;
      local.run.out_dir = (fs::path(config.run.out_dir) / entry.name).string();
      local.run.seeds = {seed};
      SeedContext entry_ctx = ctx;
      entry_ctx.dir = fs::path(local.run.out_dir) / ("seed_" + std::to_string(seed));
      fs::create_directories(entry_ctx.dir);

      {
        const std::uint64_t h = hash_params(start_network(entry_ctx, depth).snapshot());
        if (h != start_hash)
          throw invariant_violation("compare entries diverged from the shared starting snapshot");
      }

      SeedSummary ss = entry.autolr.has_value()
                           ? finetune_autolr(local, *entry.autolr, entry_ctx, depth, entry_ctx.dir)
                           : finetune_schedule(local, *entry.schedule, entry_ctx, depth, entry_ctx.dir);
      CompareEntryResult res;
      res.name = entry.name;
      res.seed = seed;
      res.start_hash = start_hash;
      res.final_test_accuracy = ss.final_test_accuracy;
      res.final_recall_at_1 = ss.final_recall_at_1;
      summary.entries.push_back(res);
    }
  }

  std::ofstream os(fs::path(config.run.out_dir) / "compare.csv", std::ios::binary);
  if (!os) throw std::runtime_error("cannot write compare.csv");
  os << "kind,seed,final_test_accuracy,final_recall_at_1,start_hash\n";
  for (const auto& e : summary.entries)
    os << e.name << "," << e.seed << "," << fmt_g17(e.final_test_accuracy) << ","
       << fmt_g17(e.final_recall_at_1) << "," << e.start_hash << "\n";

  json j = json::array();
  for (const auto& e : summary.entries)
    j.push_back({{"kind", e.name},
                 {"seed", e.seed},
                 {"final_test_accuracy", e.final_test_accuracy},
                 {"final_recall_at_1", e.final_recall_at_1},
                 {"start_hash", e.start_hash}});
  std::ofstream js(fs::path(config.run.out_dir) / "compare_summary.json", std::ios::binary);
  js << json{{"entries", j}}.dump(2) << "\n";
  return summary;
}

std::string regenerate_report(const std::string& run_dir) {
  const fs::path dir(run_dir);
  const std::vector<TraceRow> rows = read_trace_csv((dir / "trace.csv").string());
  if (rows.empty()) throw parse_error("trace.csv has no rows");
  std::size_t k_blocks = 0;
  for (const auto& r : rows) k_blocks = std::max(k_blocks, static_cast<std::size_t>(r.block));
  emit_run_charts(rows, k_blocks, dir);

  int epochs = 0, accepted = 0, trials = 0;
  std::map<int, std::pair<int, bool>> per_epoch;  // epoch -> (max trial, any accepted)
  for (const auto& r : rows) {
    auto& [max_trial, any] = per_epoch[r.epoch];
    max_trial = std::max(max_trial, r.trial);
    any = any || r.accepted != 0;
  }
  for (const auto& [epoch, info] : per_epoch) {
    ++epochs;
    trials += std::max(1, info.first);
    if (info.second) ++accepted;
  }
  std::ostringstream out;
  out << "epochs: " << epochs << ", accepted: " << accepted << ", mean trials/epoch: "
      << (epochs > 0 ? static_cast<double>(trials) / epochs : 0.0) << "\ncharts: "
      << (dir / "variations.svg").string() << ", " << (dir / "lrs.svg").string();
  return out.str();
}

}  // namespace alr
