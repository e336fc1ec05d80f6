#include "botgraph/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <thread>

#include <json.hpp>

#include "botgraph/errors.hpp"
#include "botgraph/rng.hpp"
#include "botgraph/util.hpp"

namespace botgraph {

void SplitConfig::validate() const {
  if (!(train_fraction > 0.0) || !(train_fraction < 1.0))
    throw ConfigError("train_fraction must lie in (0,1)");
}

EvalMode parse_eval_mode(const std::string& s) {
  if (s == "within") return EvalMode::within;
  if (s == "cross") return EvalMode::cross;
  if (s == "combined") return EvalMode::combined;
  throw ConfigError("unknown eval mode '" + s + "' (expected within|cross|combined)");
}

const char* eval_mode_name(EvalMode mode) {
  switch (mode) {
    case EvalMode::within: return "within";
    case EvalMode::cross: return "cross";
    default: return "combined";
  }
}

SplitResult split(const std::vector<WindowSample>& samples, const SplitConfig& cfg) {
  cfg.validate();

  // Host class = malicious iff any of its windows is labeled positive.
  std::map<std::string, bool> host_class;
  for (const auto& s : samples) host_class[s.host] = host_class[s.host] || s.label;

  std::vector<std::string> pos_hosts, neg_hosts;
  for (const auto& [host, malicious] : host_class)
    (malicious ? pos_hosts : neg_hosts).push_back(host);

  if (pos_hosts.size() < 2)
    throw ConfigError(strfmt("cannot split: malicious class has %zu host(s), need at least 2",
                             pos_hosts.size()));
  if (neg_hosts.size() < 2)
    throw ConfigError(strfmt("cannot split: benign class has %zu host(s), need at least 2",
                             neg_hosts.size()));

  SplitResult result;
  std::map<std::string, bool> to_train;
  auto assign = [&](std::vector<std::string>& hosts, bool malicious, uint64_t salt) {
    DetRng rng(cfg.seed ^ salt);
    rng.shuffle(hosts);
    const size_t n_train =
        static_cast<size_t>(std::floor(cfg.train_fraction * static_cast<double>(hosts.size())));
    for (size_t i = 0; i < hosts.size(); ++i) {
      to_train[hosts[i]] = i < n_train;
      result.manifest.push_back({hosts[i], malicious, i < n_train});
    }
  };
  assign(pos_hosts, true, 0x706f73ull);   // independent shuffles per class
  assign(neg_hosts, false, 0x6e6567ull);

  std::sort(result.manifest.begin(), result.manifest.end(),
            [](const auto& a, const auto& b) { return a.host < b.host; });

  for (const auto& s : samples)
    (to_train[s.host] ? result.train : result.test).push_back(s);
  return result;
}

namespace {

std::vector<WindowSample> prepare_samples(const std::vector<NodeTimeSeries>& series,
                                          SamplingConfig scfg, bool apply_undersample) {
  if (apply_undersample) return slice_windows(undersample(series, scfg), scfg);
  return slice_windows(series, scfg);
}

struct ScoredSet {
  std::vector<std::pair<double, bool>> scored;  // parallel to samples
};

ScoredSet score_samples(const LstmParams& params, const std::vector<WindowSample>& samples) {
  ScoredSet out;
  out.scored.reserve(samples.size());
  for (const auto& s : samples)
    out.scored.emplace_back(forward(params, s.rows).score, s.label);
  return out;
}

void count_hosts(const std::vector<WindowSample>& samples, size_t& pos, size_t& neg) {
  std::map<std::string, bool> cls;
  for (const auto& s : samples) cls[s.host] = cls[s.host] || s.label;
  pos = neg = 0;
  for (const auto& [host, malicious] : cls) (malicious ? pos : neg)++;
}

EvalEntry make_entry(const std::string& train_name, const std::string& test_name,
                     const LstmParams& params, const std::vector<WindowSample>& train_samples,
                     const std::vector<WindowSample>& test_samples, double final_loss,
                     double threshold) {
  EvalEntry e;
  e.train_name = train_name;
  e.test_name = test_name;
  e.final_train_loss = final_loss;
  count_hosts(train_samples, e.train_hosts_pos, e.train_hosts_neg);
  count_hosts(test_samples, e.test_hosts_pos, e.test_hosts_neg);
  e.train_windows = train_samples.size();
  e.test_windows = test_samples.size();
  for (const auto& s : test_samples)
    if (s.label) ++e.test_windows_pos;

  ScoredSet scores = score_samples(params, test_samples);
  e.curve = roc(scores.scored);
  const size_t yi = youden_index(e.curve);
  e.youden_threshold = e.curve.points[yi].threshold;
  e.at_threshold = metrics(confusion_at(scores.scored, threshold));
  e.at_youden = metrics(confusion_at(scores.scored, e.youden_threshold));

  // Host-level verdicts over the test windows.
  std::map<std::string, HostVerdict> verdicts;
  for (size_t k = 0; k < test_samples.size(); ++k) {
    auto& v = verdicts[test_samples[k].host];
    if (v.windows == 0) {
      v.host = test_samples[k].host;
      v.max_score = scores.scored[k].first;
    } else {
      v.max_score = std::max(v.max_score, scores.scored[k].first);
    }
    v.mean_score += scores.scored[k].first;
    v.truth_bot = v.truth_bot || test_samples[k].label;
    ++v.windows;
  }
  for (auto& [host, v] : verdicts) {
    v.mean_score /= static_cast<double>(v.windows);
    v.flagged_default = v.max_score >= threshold;
    v.flagged_youden = v.max_score >= e.youden_threshold;
    e.verdicts.push_back(v);
  }
  return e;
}

SamplingConfig derived_sampling(const SamplingConfig& base, const std::string& name) {
  SamplingConfig out = base;
  out.seed = base.seed ^ fnv1a(name);
  return out;
}

TrainConfig derived_train(const TrainConfig& base, const std::string& name) {
  TrainConfig out = base;
  out.seed = base.seed ^ fnv1a(name);
  return out;
}

std::vector<NodeTimeSeries> pooled_series(const std::vector<Dataset>& datasets) {
  std::vector<NodeTimeSeries> pool;
  for (const auto& ds : datasets)
    for (const auto& s : ds.series) {
      pool.push_back(s);
      if (datasets.size() > 1) pool.back().host = ds.name + ":" + s.host;
    }
  return pool;
}

}  // namespace

ModeReport evaluate_modes(const std::vector<Dataset>& datasets, EvalMode mode,
                          const EvalConfig& cfg) {
  if (datasets.empty()) throw ConfigError("no datasets given");
  if (mode == EvalMode::cross && datasets.size() < 2)
    throw ConfigError("cross mode needs at least 2 datasets");

  ModeReport report;
  report.mode = mode;

  if (mode == EvalMode::within) {
    for (const auto& ds : datasets) {
      auto samples = prepare_samples(ds.series, derived_sampling(cfg.sampling, ds.name),
                                     cfg.apply_undersample);
      SplitConfig scfg = cfg.split_cfg;
      scfg.seed = cfg.split_cfg.seed ^ fnv1a(ds.name);
      SplitResult parts = split(samples, scfg);
      TrainResult trained = train(parts.train, derived_train(cfg.train, ds.name));
      report.entries.push_back(make_entry(ds.name, ds.name, trained.params, parts.train,
                                          parts.test, trained.loss_history.back(),
                                          cfg.threshold));
    }
    return report;
  }

  if (mode == EvalMode::cross) {
    std::vector<std::vector<WindowSample>> per_ds;
    per_ds.reserve(datasets.size());
    for (const auto& ds : datasets)
      per_ds.push_back(prepare_samples(ds.series, derived_sampling(cfg.sampling, ds.name),
                                       cfg.apply_undersample));

    AurocMatrix matrix;
    for (const auto& ds : datasets) matrix.names.push_back(ds.name);
    const size_t k = datasets.size();
    matrix.values.assign(k, std::vector<double>(k, 0.0));

    // One model per training scenario; scenario pairs evaluate in
    // parallel. Every train/entry computation is seeded and independent,
    // so the report is identical to the sequential order.
    std::vector<std::vector<EvalEntry>> rows(k);
    std::vector<std::exception_ptr> errors(k);
    std::vector<std::thread> pool;
    pool.reserve(k);
    for (size_t a = 0; a < k; ++a) {
      pool.emplace_back([&, a] {
        try {
          TrainResult trained = train(per_ds[a], derived_train(cfg.train, datasets[a].name));
          for (size_t b = 0; b < k; ++b) {
            EvalEntry e = make_entry(datasets[a].name, datasets[b].name, trained.params,
                                     per_ds[a], per_ds[b], trained.loss_history.back(),
                                     cfg.threshold);
            e.leakage = (a == b);
            rows[a].push_back(std::move(e));
          }
        } catch (...) {
          errors[a] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& err : errors)
      if (err) std::rethrow_exception(err);

    for (size_t a = 0; a < k; ++a)
      for (size_t b = 0; b < k; ++b) {
        matrix.values[b][a] = rows[a][b].curve.auroc;
        report.entries.push_back(std::move(rows[a][b]));
      }

    matrix.test_avg.assign(k, 0.0);
    for (size_t b = 0; b < k; ++b) {
      double sum = 0.0;
      for (size_t a = 0; a < k; ++a) sum += matrix.values[b][a];
      matrix.test_avg[b] = sum / static_cast<double>(k);
    }
    report.matrix = std::move(matrix);
    return report;
  }

  // combined
  auto samples = prepare_samples(pooled_series(datasets), cfg.sampling, cfg.apply_undersample);
  SplitResult parts = split(samples, cfg.split_cfg);
  TrainResult trained = train(parts.train, cfg.train);
  report.entries.push_back(make_entry("combined", "combined", trained.params, parts.train,
                                      parts.test, trained.loss_history.back(), cfg.threshold));
  return report;
}

ModeReport evaluate_pretrained(const LstmParams& params,
                               const std::vector<Dataset>& datasets,
                               const EvalConfig& cfg) {
  if (datasets.empty()) throw ConfigError("no datasets given");
  ModeReport report;
  report.mode = EvalMode::cross;
  for (const auto& ds : datasets) {
    auto samples = prepare_samples(ds.series, derived_sampling(cfg.sampling, ds.name),
                                   cfg.apply_undersample);
    report.entries.push_back(
        make_entry("pretrained", ds.name, params, {}, samples, 0.0, cfg.threshold));
  }
  return report;
}

namespace {

using nlohmann::json;

json opt_to_json(const std::optional<double>& v) {
  if (!v) return nullptr;
  return *v;
}

std::string opt_to_text(const std::optional<double>& v) {
  if (!v) return "n/a";
  return strfmt("%.4f", *v);
}

std::string threshold_text(double t) {
  if (std::isinf(t)) return "inf";
  return strfmt("%.6g", t);
}

void print_metric_line(std::ofstream& out, const char* label, const MetricSet& m) {
  out << "  " << label << ": acc=" << opt_to_text(m.accuracy)
      << " tpr=" << opt_to_text(m.tpr) << " tnr=" << opt_to_text(m.tnr)
      << " fpr=" << opt_to_text(m.fpr) << " fnr=" << opt_to_text(m.fnr)
      << " precision=" << opt_to_text(m.precision) << " recall=" << opt_to_text(m.recall)
      << " f=" << opt_to_text(m.f_measure) << " [tp=" << m.counts.tp
      << " tn=" << m.counts.tn << " fp=" << m.counts.fp << " fn=" << m.counts.fn << "]\n";
}

std::string entry_stem(const EvalEntry& e) {
  std::string stem = e.train_name == e.test_name ? e.train_name
                                                 : e.train_name + "__" + e.test_name;
  for (char& c : stem)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') c = '_';
  return stem;
}

json metric_to_json(const MetricSet& m) {
  return {
      {"tp", m.counts.tp},         {"tn", m.counts.tn},
      {"fp", m.counts.fp},         {"fn", m.counts.fn},
      {"accuracy", opt_to_json(m.accuracy)},
      {"tpr", opt_to_json(m.tpr)}, {"tnr", opt_to_json(m.tnr)},
      {"fpr", opt_to_json(m.fpr)}, {"fnr", opt_to_json(m.fnr)},
      {"precision", opt_to_json(m.precision)},
      {"recall", opt_to_json(m.recall)},
      {"f_measure", opt_to_json(m.f_measure)},
  };
}

}  // namespace

void write_roc_csv(const RocCurve& curve, const std::string& path,
                   const std::vector<std::string>& header_comments) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open for writing: " + path);
  for (const auto& c : header_comments) out << "# " << c << "\n";
  out << "fpr,tpr,threshold\n";
  for (const auto& p : curve.points)
    out << format_double(p.fpr) << ',' << format_double(p.tpr) << ','
        << threshold_text(p.threshold) << '\n';
}

void write_roc_svg(const RocCurve& curve, const std::string& title,
                   const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open for writing: " + path);

  const int size = 440, margin = 40, plot = size - 2 * margin;
  auto px = [&](double fpr) { return margin + fpr * plot; };
  auto py = [&](double tpr) { return size - margin - tpr * plot; };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\""
      << size << "\" viewBox=\"0 0 " << size << " " << size << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << strfmt("<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"none\" "
                "stroke=\"black\"/>\n", margin, margin, plot, plot);
  out << strfmt("<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#999\" "
                "stroke-dasharray=\"4,4\"/>\n", px(0.0), py(0.0), px(1.0), py(1.0));
  out << "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.5\" points=\"";
  for (const auto& p : curve.points) out << strfmt("%.2f,%.2f ", px(p.fpr), py(p.tpr));
  out << "\"/>\n";
  out << strfmt("<text x=\"%d\" y=\"%d\" font-family=\"monospace\" font-size=\"13\">%s "
                "(AUROC %.4f)</text>\n", margin, margin - 12, title.c_str(), curve.auroc);
  out << strfmt("<text x=\"%d\" y=\"%d\" font-family=\"monospace\" font-size=\"11\">FPR"
                "</text>\n", size / 2 - 10, size - 10);
  out << strfmt("<text x=\"12\" y=\"%d\" font-family=\"monospace\" font-size=\"11\" "
                "transform=\"rotate(-90 12 %d)\">TPR</text>\n", size / 2, size / 2);
  out << "</svg>\n";
}

void write_mode_report(const ModeReport& report, const EvalConfig& cfg,
                       const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const std::string base = out_dir + "/";

  std::ofstream txt(base + "report.txt");
  if (!txt) throw InputError("cannot open for writing: " + base + "report.txt");
  std::ofstream jsonl(base + "report.jsonl");
  if (!jsonl) throw InputError("cannot open for writing: " + base + "report.jsonl");

  txt << "mode=" << eval_mode_name(report.mode)
      << " threshold=" << format_double(cfg.threshold)
      << " undersample=" << (cfg.apply_undersample ? "on" : "off")
      << " neg_pos_ratio=" << cfg.sampling.neg_pos_ratio
      << " slice_len=" << cfg.sampling.slice_len
      << " slice_overlap=" << cfg.sampling.slice_overlap
      << " train_fraction=" << format_double(cfg.split_cfg.train_fraction)
      << " epochs=" << cfg.train.epochs << " lr=" << format_double(cfg.train.learning_rate)
      << " seed=" << cfg.train.seed << "\n\n";

  for (const auto& e : report.entries) {
    txt << "[train=" << e.train_name << " test=" << e.test_name << "]\n";
    if (e.leakage)
      txt << "  WARNING: train and test are the same full collection (leakage)\n";
    txt << strfmt("  hosts: train %zu bot / %zu benign; test %zu bot / %zu benign\n",
                  e.train_hosts_pos, e.train_hosts_neg, e.test_hosts_pos, e.test_hosts_neg);
    txt << strfmt("  windows: train %zu; test %zu (%zu positive)\n", e.train_windows,
                  e.test_windows, e.test_windows_pos);
    txt << strfmt("  final_train_loss=%.6g\n", e.final_train_loss);
    txt << strfmt("  auroc=%.6f\n", e.curve.auroc);
    print_metric_line(txt, ("threshold " + format_double(cfg.threshold)).c_str(),
                      e.at_threshold);
    print_metric_line(txt, ("youden " + threshold_text(e.youden_threshold)).c_str(),
                      e.at_youden);
    size_t bots = 0, flagged = 0;
    for (const auto& v : e.verdicts)
      if (v.truth_bot) {
        ++bots;
        if (v.flagged_youden) ++flagged;
      }
    txt << strfmt("  test bot hosts flagged @youden: %zu/%zu\n\n", flagged, bots);

    json je;
    je["train"] = e.train_name;
    je["test"] = e.test_name;
    je["leakage"] = e.leakage;
    je["train_hosts_pos"] = e.train_hosts_pos;
    je["train_hosts_neg"] = e.train_hosts_neg;
    je["test_hosts_pos"] = e.test_hosts_pos;
    je["test_hosts_neg"] = e.test_hosts_neg;
    je["train_windows"] = e.train_windows;
    je["test_windows"] = e.test_windows;
    je["test_windows_pos"] = e.test_windows_pos;
    je["auroc"] = e.curve.auroc;
    je["youden_threshold"] =
        std::isfinite(e.youden_threshold) ? json(e.youden_threshold) : json("inf");
    je["at_threshold"] = metric_to_json(e.at_threshold);
    je["at_youden"] = metric_to_json(e.at_youden);
    jsonl << je.dump() << "\n";

    const std::string stem = entry_stem(e);
    write_roc_csv(e.curve, base + "roc_" + stem + ".csv",
                  {"train=" + e.train_name + " test=" + e.test_name});
    write_roc_svg(e.curve, e.train_name + " -> " + e.test_name, base + "roc_" + stem + ".svg");

    std::ofstream hv(base + "hosts_" + stem + ".csv");
    if (!hv) throw InputError("cannot open for writing: " + base + "hosts_" + stem + ".csv");
    hv << "# train=" << e.train_name << " test=" << e.test_name
       << " threshold=" << format_double(cfg.threshold)
       << " youden=" << threshold_text(e.youden_threshold) << "\n";
    hv << "host,windows,max_score,mean_score,truth_bot,flagged_default,flagged_youden\n";
    for (const auto& v : e.verdicts)
      hv << v.host << ',' << v.windows << ',' << format_sig9(v.max_score) << ','
         << format_sig9(v.mean_score) << ',' << (v.truth_bot ? 1 : 0) << ','
         << (v.flagged_default ? 1 : 0) << ',' << (v.flagged_youden ? 1 : 0) << '\n';
  }

  if (report.matrix) {
    const auto& m = *report.matrix;
    std::ofstream mat(base + "auroc_matrix.csv");
    if (!mat) throw InputError("cannot open for writing: " + base + "auroc_matrix.csv");
    mat << "# AUROC of models trained on <column> evaluated on <row>\n";
    mat << "test\\train";
    for (const auto& name : m.names) mat << ',' << name;
    mat << ",avg\n";
    for (size_t b = 0; b < m.names.size(); ++b) {
      mat << m.names[b];
      for (size_t a = 0; a < m.names.size(); ++a)
        mat << ',' << strfmt("%.4f", m.values[b][a]);
      mat << ',' << strfmt("%.4f", m.test_avg[b]) << '\n';
    }

    txt << "auroc matrix (rows = test, cols = train):\n";
    txt << "  " << strfmt("%-12s", "test\\train");
    for (const auto& name : m.names) txt << strfmt(" %-10s", name.c_str());
    txt << " avg\n";
    for (size_t b = 0; b < m.names.size(); ++b) {
      txt << "  " << strfmt("%-12s", m.names[b].c_str());
      for (size_t a = 0; a < m.names.size(); ++a)
        txt << strfmt(" %-10.4f", m.values[b][a]);
      txt << strfmt(" %.4f\n", m.test_avg[b]);
    }
  }
}

}  // namespace botgraph
