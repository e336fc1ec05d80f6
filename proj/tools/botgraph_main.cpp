// botgraph command-line pipeline: synth -> extract -> train -> eval/predict.
//
// Exit codes: 0 success, 2 input/format error, 3 configuration error,
// 4 numeric divergence/convergence failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "botgraph/errors.hpp"
#include "botgraph/evaluate.hpp"
#include "botgraph/event_io.hpp"
#include "botgraph/extract.hpp"
#include "botgraph/feature_cache.hpp"
#include "botgraph/lstm.hpp"
#include "botgraph/synth.hpp"
#include "botgraph/timeseries.hpp"
#include "botgraph/util.hpp"

namespace bg = botgraph;
namespace fs = std::filesystem;

namespace {

std::string file_stem(const std::string& path) {
  return fs::path(path).stem().string();
}

bg::EventFormat parse_format(const std::string& s) {
  if (s == "auto") return bg::EventFormat::auto_detect;
  if (s == "csv") return bg::EventFormat::csv;
  if (s == "pcap") return bg::EventFormat::pcap;
  throw bg::ConfigError("unknown input format '" + s + "' (expected auto|csv|pcap)");
}

struct CommonExtractFlags {
  double window_s = 300.0;
  double step_s = 150.0;
  std::string graph_mode = "weighted";
  double epsilon = 1e-6;
  int max_iters = 10000;
  double damping = 0.85;
  int workers = 1;

  void attach(CLI::App* cmd) {
    cmd->add_option("--window-s", window_s, "Interval length in seconds");
    cmd->add_option("--step-s", step_s, "Interval step in seconds");
    cmd->add_option("--graph-mode", graph_mode, "Graph construction: multi|weighted");
    cmd->add_option("--epsilon", epsilon, "Convergence tolerance for iterative centralities");
    cmd->add_option("--max-iters", max_iters, "Iteration cap for iterative centralities");
    cmd->add_option("--damping", damping, "PageRank damping factor");
    cmd->add_option("--workers", workers, "Parallel interval workers");
  }

  bg::ExtractConfig to_config() const {
    bg::ExtractConfig cfg;
    cfg.window = {window_s, step_s};
    cfg.mode = bg::parse_graph_mode(graph_mode);
    cfg.conv = {epsilon, max_iters, damping};
    cfg.workers = workers;
    return cfg;
  }
};

struct TrainFlags {
  int epochs = 200;
  double lr = 1e-3;
  double rmsprop_decay = 0.9;
  double rmsprop_epsilon = 1e-8;
  double malicious_weight = 6.0;
  int batch_size = 32;
  uint64_t seed = 0;
  int neg_pos_ratio = 10;
  int slice_len = 5;
  int slice_overlap = 2;
  bool no_undersample = false;
  double train_fraction = 0.7;
  double threshold = 0.5;

  void attach(CLI::App* cmd) {
    cmd->add_option("--epochs", epochs, "Training epochs");
    cmd->add_option("--lr", lr, "Learning rate");
    cmd->add_option("--rmsprop-decay", rmsprop_decay, "RMSProp accumulator decay");
    cmd->add_option("--rmsprop-epsilon", rmsprop_epsilon, "RMSProp stability epsilon");
    cmd->add_option("--malicious-weight", malicious_weight, "Loss weight on malicious samples");
    cmd->add_option("--batch-size", batch_size, "Mini-batch size");
    cmd->add_option("--seed", seed, "Master RNG seed");
    cmd->add_option("--neg-pos-ratio", neg_pos_ratio, "Benign hosts kept per malicious host");
    cmd->add_option("--slice-len", slice_len, "Intervals per training window");
    cmd->add_option("--slice-overlap", slice_overlap, "Interval overlap between windows");
    cmd->add_flag("--no-undersample", no_undersample, "Skip benign-host undersampling");
    cmd->add_option("--train-fraction", train_fraction, "Per-class train split fraction");
    cmd->add_option("--threshold", threshold, "Classification threshold");
  }

  bg::SamplingConfig sampling() const {
    return {neg_pos_ratio, slice_len, slice_overlap, seed};
  }
  bg::TrainConfig train_config() const {
    return {epochs, lr, rmsprop_decay, rmsprop_epsilon, malicious_weight, batch_size, seed};
  }
  bg::SplitConfig split_config() const { return {train_fraction, seed}; }
};

bg::GroundTruth load_truth_or_warn(const std::string& truth_path) {
  if (truth_path.empty()) {
    std::cerr << "warning: no ground truth given; all hosts labeled benign\n";
    return {};
  }
  if (!fs::exists(truth_path)) {
    std::cerr << "warning: ground truth file '" << truth_path
              << "' not found; all hosts labeled benign\n";
    return {};
  }
  return bg::read_ground_truth(truth_path);
}

// Caches feeding one model must agree on windowing, or the feature
// semantics silently drift between datasets.
void check_cache_compat(const std::vector<bg::FeatureCache>& caches,
                        const std::vector<std::string>& names) {
  for (size_t i = 1; i < caches.size(); ++i) {
    const auto& a = caches[0].header;
    const auto& b = caches[i].header;
    if (a.window.window_s != b.window.window_s || a.window.step_s != b.window.step_s)
      throw bg::ConfigError(bg::strfmt("caches '%s' and '%s' disagree on window/step",
                                       names[0].c_str(), names[i].c_str()));
    if (a.mode != b.mode)
      std::cerr << "warning: caches mix graph modes (values agree within 1e-9)\n";
  }
}

int cmd_synth(const std::string& spec_path, bg::ScenarioSpec spec,
              const std::string& events_out, const std::string& truth_out) {
  if (!spec_path.empty()) spec = bg::read_scenario_spec(spec_path);
  spec.validate();

  bg::SynthResult result = bg::generate(spec);
  auto comments = bg::scenario_comments(spec);
  bg::write_events_csv(events_out, result.events, comments);
  bg::write_ground_truth(truth_out, result.truth, comments);

  std::printf("synth: %zu events, %d benign hosts, %d bots, %.0f s -> %s, %s\n",
              result.events.size(), spec.benign_hosts, spec.bot_hosts, spec.duration_s,
              events_out.c_str(), truth_out.c_str());
  return 0;
}

int cmd_extract(const std::string& input, const std::string& format,
                const std::string& truth_path, const std::string& out,
                std::string timing_out, const CommonExtractFlags& flags,
                std::optional<double> duration_override) {
  bg::ExtractConfig cfg = flags.to_config();
  cfg.duration_s = duration_override;

  bg::GroundTruth truth = load_truth_or_warn(truth_path);
  auto source = bg::open_event_source(input, parse_format(format));
  if (timing_out.empty()) timing_out = out + ".timing.csv";

  bg::ExtractStats stats =
      bg::extract_to_cache(*source, truth, cfg, out, timing_out, input);

  std::printf("extract: %llu events, %lld intervals, %llu hosts, %llu non-ipv4 skipped\n",
              static_cast<unsigned long long>(stats.meta.event_count),
              static_cast<long long>(stats.interval_count),
              static_cast<unsigned long long>(stats.meta.host_count),
              static_cast<unsigned long long>(stats.meta.skipped_non_ipv4));
  std::printf(
      "extract: wall %.3f s (%.0f events/s); stage ms: build=%.1f degree=%.1f "
      "pagerank=%.1f betweenness=%.1f eig_hits=%.1f clustering=%.1f normalize=%.1f\n",
      stats.wall_s, static_cast<double>(stats.meta.event_count) / std::max(stats.wall_s, 1e-9),
      stats.stage_totals.build, stats.stage_totals.degree, stats.stage_totals.pagerank,
      stats.stage_totals.betweenness, stats.stage_totals.eig_hits,
      stats.stage_totals.clustering, stats.stage_totals.normalize);
  if (stats.degenerate_intervals > 0)
    std::printf("extract: %lld interval(s) had degenerate eigenvector/HITS support\n",
                static_cast<long long>(stats.degenerate_intervals));
  std::printf("extract: cache -> %s, timing -> %s\n", out.c_str(), timing_out.c_str());
  return 0;
}

int cmd_train(const std::vector<std::string>& cache_paths, const std::string& model_out,
              std::string loss_out, std::string split_out, const std::string& dump_windows,
              const TrainFlags& flags) {
  std::vector<bg::FeatureCache> caches;
  std::vector<std::string> names;
  for (const auto& path : cache_paths) {
    caches.push_back(bg::read_feature_cache(path));
    names.push_back(file_stem(path));
  }
  check_cache_compat(caches, names);

  std::vector<bg::NodeTimeSeries> pool;
  for (size_t i = 0; i < caches.size(); ++i) {
    auto series = bg::assemble(caches[i]);
    for (auto& s : series) {
      if (caches.size() > 1) s.host = names[i] + ":" + s.host;
      pool.push_back(std::move(s));
    }
  }

  bg::SamplingConfig sampling = flags.sampling();
  std::vector<bg::NodeTimeSeries> selected =
      flags.no_undersample ? pool : bg::undersample(pool, sampling);
  std::vector<bg::WindowSample> samples = bg::slice_windows(selected, sampling);

  if (!dump_windows.empty())
    bg::write_window_samples_csv(dump_windows, samples,
                                 {"botgraph window samples",
                                  bg::strfmt("slice_len=%d slice_overlap=%d seed=%llu",
                                             sampling.slice_len, sampling.slice_overlap,
                                             static_cast<unsigned long long>(sampling.seed))});

  bg::SplitResult parts = bg::split(samples, flags.split_config());
  bg::TrainResult trained = bg::train(parts.train, flags.train_config());

  bg::PipelineMeta meta;
  meta.window = caches[0].header.window;
  meta.mode = caches[0].header.mode;
  meta.conv = caches[0].header.conv;
  meta.slice_len = sampling.slice_len;
  meta.slice_overlap = sampling.slice_overlap;
  bg::save_model(trained.params, flags.train_config(), meta, model_out);

  if (loss_out.empty()) loss_out = model_out + ".loss.csv";
  {
    std::ofstream out(loss_out);
    if (!out) throw bg::InputError("cannot open for writing: " + loss_out);
    out << "# botgraph loss history seed=" << flags.seed << " epochs=" << flags.epochs
        << " lr=" << bg::format_double(flags.lr) << "\n";
    out << "epoch,loss\n";
    for (size_t e = 0; e < trained.loss_history.size(); ++e)
      out << (e + 1) << ',' << bg::format_double(trained.loss_history[e]) << '\n';
  }

  if (split_out.empty()) split_out = model_out + ".split.csv";
  {
    std::ofstream out(split_out);
    if (!out) throw bg::InputError("cannot open for writing: " + split_out);
    out << "# botgraph split manifest seed=" << flags.seed
        << " train_fraction=" << bg::format_double(flags.train_fraction) << "\n";
    out << "host,class,side\n";
    for (const auto& h : parts.manifest)
      out << h.host << ',' << (h.malicious ? "malicious" : "benign") << ','
          << (h.to_train ? "train" : "test") << '\n';
  }

  // Training-side accuracy at the configured threshold, for a quick sanity
  // read; real evaluation belongs to `eval`.
  size_t correct = 0;
  for (const auto& s : parts.train) {
    const double score = bg::forward(trained.params, s.rows).score;
    if ((score >= flags.threshold) == s.label) ++correct;
  }
  std::printf("train: %zu train windows, %zu test windows held out\n", parts.train.size(),
              parts.test.size());
  std::printf("train: final loss %.6g, train accuracy %.4f @%.2f\n",
              trained.loss_history.back(),
              static_cast<double>(correct) / static_cast<double>(parts.train.size()),
              flags.threshold);
  std::printf("train: model -> %s, loss -> %s, split -> %s\n", model_out.c_str(),
              loss_out.c_str(), split_out.c_str());
  return 0;
}

int cmd_eval(const std::string& mode_str, const std::vector<std::string>& cache_paths,
             const std::string& out_dir, const std::string& model_path,
             const TrainFlags& flags) {
  std::vector<bg::FeatureCache> caches;
  std::vector<std::string> names;
  for (const auto& path : cache_paths) {
    caches.push_back(bg::read_feature_cache(path));
    names.push_back(file_stem(path));
  }
  check_cache_compat(caches, names);

  std::vector<bg::Dataset> datasets;
  for (size_t i = 0; i < caches.size(); ++i)
    datasets.push_back({names[i], bg::assemble(caches[i])});

  bg::EvalConfig cfg;
  cfg.sampling = flags.sampling();
  cfg.split_cfg = flags.split_config();
  cfg.train = flags.train_config();
  cfg.threshold = flags.threshold;
  cfg.apply_undersample = !flags.no_undersample;

  bg::ModeReport report;
  if (!model_path.empty()) {
    bg::LoadedModel model = bg::load_model(model_path);
    if (model.params.input_dim != bg::kFeatureCount)
      throw bg::ConfigError("model input dimension does not match the feature set");
    report = bg::evaluate_pretrained(model.params, datasets, cfg);
  } else {
    report = bg::evaluate_modes(datasets, bg::parse_eval_mode(mode_str), cfg);
  }

  bg::write_mode_report(report, cfg, out_dir);
  for (const auto& e : report.entries)
    std::printf("eval: train=%s test=%s auroc=%.4f%s\n", e.train_name.c_str(),
                e.test_name.c_str(), e.curve.auroc, e.leakage ? " (leakage)" : "");
  std::printf("eval: reports -> %s\n", out_dir.c_str());
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& input,
                const std::string& format, const std::string& out, double threshold,
                CLI::App* cmd, CommonExtractFlags& flags) {
  bg::LoadedModel model = bg::load_model(model_path);
  if (model.params.input_dim != bg::kFeatureCount)
    throw bg::ConfigError("model input dimension does not match the feature set");

  // Feature settings default to whatever the model was trained with;
  // explicit flags override.
  if (!cmd->count("--window-s")) flags.window_s = model.pipeline.window.window_s;
  if (!cmd->count("--step-s")) flags.step_s = model.pipeline.window.step_s;
  if (!cmd->count("--graph-mode")) flags.graph_mode = bg::graph_mode_name(model.pipeline.mode);
  if (!cmd->count("--epsilon")) flags.epsilon = model.pipeline.conv.epsilon;
  if (!cmd->count("--max-iters")) flags.max_iters = model.pipeline.conv.max_iters;
  if (!cmd->count("--damping")) flags.damping = model.pipeline.conv.damping;

  bg::ExtractConfig cfg = flags.to_config();
  const std::string cache_path = out + ".features.csv";
  auto source = bg::open_event_source(input, parse_format(format));
  bg::extract_to_cache(*source, bg::GroundTruth{}, cfg, cache_path, "", input);

  bg::FeatureCache cache = bg::read_feature_cache(cache_path);
  std::vector<bg::NodeTimeSeries> series = bg::assemble(cache);

  bg::SamplingConfig sampling;
  sampling.slice_len = model.pipeline.slice_len;
  sampling.slice_overlap = model.pipeline.slice_overlap;
  std::vector<bg::WindowSample> samples = bg::slice_windows(series, sampling);

  struct Agg {
    size_t windows = 0;
    double max_score = 0.0, sum_score = 0.0;
  };
  std::map<std::string, Agg> agg;
  for (const auto& s : samples) {
    const double score = bg::forward(model.params, s.rows).score;
    auto& a = agg[s.host];
    a.max_score = a.windows == 0 ? score : std::max(a.max_score, score);
    a.sum_score += score;
    ++a.windows;
  }

  std::ofstream vf(out);
  if (!vf) throw bg::InputError("cannot open for writing: " + out);
  vf << "# botgraph predict model=" << model_path
     << " threshold=" << bg::format_double(threshold) << "\n";
  vf << "host,windows,max_score,mean_score,verdict\n";
  size_t flagged = 0;
  for (const auto& s : series) {
    auto it = agg.find(s.host);
    if (it == agg.end()) {
      vf << s.host << ",0,,,insufficient_data\n";
      continue;
    }
    const bool is_bot = it->second.max_score >= threshold;
    if (is_bot) ++flagged;
    vf << s.host << ',' << it->second.windows << ','
       << bg::format_sig9(it->second.max_score) << ','
       << bg::format_sig9(it->second.sum_score / static_cast<double>(it->second.windows))
       << ',' << (is_bot ? "botnet" : "normal") << '\n';
  }
  std::printf("predict: %zu hosts, %zu flagged botnet @%.3g -> %s (features: %s)\n",
              series.size(), flagged, threshold, out.c_str(), cache_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"botnet host detection over time-windowed communication graph features"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic capture");
  std::string synth_spec, synth_events_out, synth_truth_out;
  bg::ScenarioSpec spec;
  std::string synth_pattern = "p2p";
  synth->add_option("--spec", synth_spec, "Scenario spec file (key = value)");
  synth->add_option("--events-out", synth_events_out, "Event CSV output path")->required();
  synth->add_option("--truth-out", synth_truth_out, "Ground truth CSV output path")->required();
  synth->add_option("--name", spec.name, "Scenario name");
  synth->add_option("--pattern", synth_pattern, "Bot pattern: p2p|cnc|ddos");
  synth->add_option("--duration-s", spec.duration_s, "Capture duration");
  synth->add_option("--benign-hosts", spec.benign_hosts, "Benign host count");
  synth->add_option("--bot-hosts", spec.bot_hosts, "Bot host count");
  synth->add_option("--period-s", spec.period_s, "Bot dormancy/activity cycle length");
  synth->add_option("--dormancy-duty", spec.dormancy_duty, "Dormant fraction of each cycle");
  synth->add_option("--noise-rate", spec.noise_rate, "Benign background events per second");
  synth->add_option("--seed", spec.seed, "RNG seed");
  synth->add_option("--infection-time-s", spec.infection_time_s, "Bot infection time");
  synth->callback([&] {
    spec.pattern = bg::parse_bot_pattern(synth_pattern);
    cmd_synth(synth_spec, spec, synth_events_out, synth_truth_out);
  });

  // extract
  auto* extract = app.add_subcommand("extract", "Extract per-interval graph features");
  std::string ex_input, ex_format = "auto", ex_truth, ex_out, ex_timing;
  CommonExtractFlags ex_flags;
  double ex_duration = -1.0;
  extract->add_option("--input", ex_input, "Event CSV or pcap")->required();
  extract->add_option("--format", ex_format, "Input format: auto|csv|pcap");
  extract->add_option("--truth", ex_truth, "Ground truth CSV");
  extract->add_option("--out", ex_out, "Feature cache output path")->required();
  extract->add_option("--timing-out", ex_timing, "Timing CSV path (default <out>.timing.csv)");
  extract->add_option("--duration-s", ex_duration,
                      "Capture duration override (default: last event)");
  ex_flags.attach(extract);
  extract->callback([&] {
    std::optional<double> dur;
    if (extract->count("--duration-s")) dur = ex_duration;
    cmd_extract(ex_input, ex_format, ex_truth, ex_out, ex_timing, ex_flags, dur);
  });

  // train
  auto* train = app.add_subcommand("train", "Train the classifier from feature caches");
  std::vector<std::string> tr_caches;
  std::string tr_model_out, tr_loss_out, tr_split_out, tr_dump;
  TrainFlags tr_flags;
  train->add_option("--cache", tr_caches, "Feature cache path (repeatable)")->required();
  train->add_option("--model-out", tr_model_out, "Model output path")->required();
  train->add_option("--loss-out", tr_loss_out, "Loss history CSV (default <model>.loss.csv)");
  train->add_option("--split-out", tr_split_out, "Split manifest CSV (default <model>.split.csv)");
  train->add_option("--dump-windows", tr_dump, "Window-sample debug dump CSV");
  tr_flags.attach(train);
  train->callback([&] {
    cmd_train(tr_caches, tr_model_out, tr_loss_out, tr_split_out, tr_dump, tr_flags);
  });

  // eval
  auto* eval = app.add_subcommand("eval", "Train/evaluate in within/cross/combined modes");
  std::vector<std::string> ev_caches;
  std::string ev_mode = "within", ev_out_dir, ev_model;
  TrainFlags ev_flags;
  eval->add_option("--mode", ev_mode, "within|cross|combined");
  eval->add_option("--cache", ev_caches, "Feature cache path (repeatable)")->required();
  eval->add_option("--out-dir", ev_out_dir, "Report output directory")->required();
  eval->add_option("--model", ev_model, "Apply a pre-trained model instead of training");
  ev_flags.attach(eval);
  eval->callback([&] { cmd_eval(ev_mode, ev_caches, ev_out_dir, ev_model, ev_flags); });

  // predict
  auto* predict = app.add_subcommand("predict", "Score hosts in an unlabeled capture");
  std::string pr_model, pr_input, pr_format = "auto", pr_out;
  double pr_threshold = 0.5;
  CommonExtractFlags pr_flags;
  predict->add_option("--model", pr_model, "Trained model file")->required();
  predict->add_option("--input", pr_input, "Event CSV or pcap")->required();
  predict->add_option("--format", pr_format, "Input format: auto|csv|pcap");
  predict->add_option("--out", pr_out, "Verdict CSV output path")->required();
  predict->add_option("--threshold", pr_threshold, "Classification threshold");
  pr_flags.attach(predict);
  predict->callback([&] {
    cmd_predict(pr_model, pr_input, pr_format, pr_out, pr_threshold, predict, pr_flags);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(bg::ExitCode::config_error);
  } catch (const bg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
