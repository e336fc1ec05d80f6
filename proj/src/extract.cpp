#include "botgraph/extract.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <thread>

#include "botgraph/errors.hpp"
#include "botgraph/util.hpp"

namespace botgraph {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct TimedResult {
  IntervalFeatures features;
  StageTotalsMs t;
  uint64_t events = 0;
  size_t nodes = 0, unique_edges = 0;
};

// Same composition as extract_interval(), with a stopwatch around each
// stage.
TimedResult compute_interval(const Interval& iv, GraphMode mode,
                             const ConvergenceConfig& conv) {
  TimedResult r;
  r.features.interval_index = iv.index;
  r.events = iv.events.size();
  if (iv.events.empty()) return r;

  try {
    auto t0 = Clock::now();
    IntervalGraph g = build_graph(iv, mode);
    r.t.build = ms_since(t0);
    r.nodes = g.node_count();
    r.unique_edges = g.unique_edge_count();

    const size_t n = g.node_count();
    RawFeatures raw;
    raw.values.assign(n, FeatureVector{});

    t0 = Clock::now();
    DegreeFeatures deg = degree_features(g);
    r.t.degree = ms_since(t0);

    t0 = Clock::now();
    std::vector<double> pr = pagerank(g, conv);
    r.t.pagerank = ms_since(t0);

    t0 = Clock::now();
    std::vector<double> bc = betweenness(g);
    r.t.betweenness = ms_since(t0);

    t0 = Clock::now();
    EigHits eh = eigenvector_hits(g, conv);
    r.t.eig_hits = ms_since(t0);

    t0 = Clock::now();
    std::vector<double> cc = clustering_coeff(g);
    r.t.clustering = ms_since(t0);

    for (size_t v = 0; v < n; ++v)
      raw.values[v] = {deg.out_degree[v],   deg.in_degree[v], deg.out_neighbors[v],
                       deg.in_neighbors[v], pr[v],            bc[v],
                       eh.eigenvector[v],   eh.authority[v],  eh.hub[v],
                       cc[v]};

    t0 = Clock::now();
    r.features.hosts = g.nodes;
    r.features.normalized = normalize_features(raw);
    r.features.eigenvector_degenerate = eh.eigenvector_degenerate;
    r.features.hits_degenerate = eh.hits_degenerate;
    r.t.normalize = ms_since(t0);
  } catch (const NumericError& e) {
    throw NumericError(strfmt("interval %lld: %s",
                              static_cast<long long>(iv.index), e.what()));
  }
  return r;
}

class TimingWriter {
 public:
  TimingWriter(const std::string& path, const std::string& config_line) {
    if (path.empty()) return;
    out_.open(path);
    if (!out_) throw InputError("cannot open for writing: " + path);
    out_ << "# botgraph extraction timing " << config_line << "\n";
    out_ << "interval_index,events,nodes,unique_edges,build_ms,degree_ms,pagerank_ms,"
            "betweenness_ms,eig_hits_ms,clustering_ms,normalize_ms,total_ms\n";
  }

  void row(const TimedResult& r) {
    if (!out_.is_open()) return;
    out_ << r.features.interval_index << ',' << r.events << ',' << r.nodes << ','
         << r.unique_edges << ',' << format_sig9(r.t.build) << ','
         << format_sig9(r.t.degree) << ',' << format_sig9(r.t.pagerank) << ','
         << format_sig9(r.t.betweenness) << ',' << format_sig9(r.t.eig_hits) << ','
         << format_sig9(r.t.clustering) << ',' << format_sig9(r.t.normalize) << ','
         << format_sig9(r.t.sum()) << '\n';
  }

  void totals(const StageTotalsMs& t, double wall_s) {
    if (!out_.is_open()) return;
    out_ << "# totals_ms build=" << format_sig9(t.build) << " degree=" << format_sig9(t.degree)
         << " pagerank=" << format_sig9(t.pagerank)
         << " betweenness=" << format_sig9(t.betweenness)
         << " eig_hits=" << format_sig9(t.eig_hits)
         << " clustering=" << format_sig9(t.clustering)
         << " normalize=" << format_sig9(t.normalize) << "\n";
    out_ << "# wall_s=" << format_sig9(wall_s) << "\n";
  }

 private:
  std::ofstream out_;
};

// Fixed-capacity task queue with shutdown/abort.
class IntervalQueue {
 public:
  explicit IntervalQueue(size_t capacity) : capacity_(capacity) {}

  void push(Interval&& iv) {
    std::unique_lock lk(m_);
    cv_space_.wait(lk, [&] { return q_.size() < capacity_ || aborted_; });
    if (aborted_) return;
    q_.push_back(std::move(iv));
    cv_item_.notify_one();
  }

  bool pop(Interval& out) {
    std::unique_lock lk(m_);
    cv_item_.wait(lk, [&] { return !q_.empty() || closed_ || aborted_; });
    if (aborted_ || q_.empty()) return false;
    out = std::move(q_.front());
    q_.pop_front();
    cv_space_.notify_one();
    return true;
  }

  void close() {
    std::lock_guard lk(m_);
    closed_ = true;
    cv_item_.notify_all();
  }

  void abort() {
    std::lock_guard lk(m_);
    aborted_ = true;
    cv_item_.notify_all();
    cv_space_.notify_all();
  }

 private:
  std::mutex m_;
  std::condition_variable cv_item_, cv_space_;
  std::deque<Interval> q_;
  size_t capacity_;
  bool closed_ = false, aborted_ = false;
};

// Re-serializes worker results into interval-index order before they touch
// the output files.
class OrderedSink {
 public:
  OrderedSink(FeatureCacheWriter& cache, TimingWriter& timing)
      : cache_(cache), timing_(timing) {}

  void submit(TimedResult&& r) {
    std::lock_guard lk(m_);
    pending_.emplace(r.features.interval_index, std::move(r));
    while (!pending_.empty() && pending_.begin()->first == next_) {
      const TimedResult& head = pending_.begin()->second;
      cache_.append(head.features);
      timing_.row(head);
      totals_.build += head.t.build;
      totals_.degree += head.t.degree;
      totals_.pagerank += head.t.pagerank;
      totals_.betweenness += head.t.betweenness;
      totals_.eig_hits += head.t.eig_hits;
      totals_.clustering += head.t.clustering;
      totals_.normalize += head.t.normalize;
      if (head.features.eigenvector_degenerate || head.features.hits_degenerate)
        ++degenerate_;
      pending_.erase(pending_.begin());
      ++next_;
    }
  }

  const StageTotalsMs& totals() const { return totals_; }
  int64_t degenerate() const { return degenerate_; }

 private:
  std::mutex m_;
  std::map<int64_t, TimedResult> pending_;
  int64_t next_ = 0;
  FeatureCacheWriter& cache_;
  TimingWriter& timing_;
  StageTotalsMs totals_;
  int64_t degenerate_ = 0;
};

}  // namespace

ExtractStats extract_to_cache(EventSource& source, const GroundTruth& truth,
                              const ExtractConfig& cfg, const std::string& out_path,
                              const std::string& timing_path,
                              const std::string& source_label) {
  cfg.window.validate();
  cfg.conv.validate();
  if (cfg.workers < 1) throw ConfigError("workers must be >= 1");

  FeatureCacheHeader header;
  header.window = cfg.window;
  header.mode = cfg.mode;
  header.conv = cfg.conv;
  header.source = source_label;
  for (const auto& [host, when] : truth.infected) header.truth.emplace_back(host, when);

  FeatureCacheWriter cache(out_path, header);
  TimingWriter timing(timing_path,
                      strfmt("window_s=%g step_s=%g graph_mode=%s epsilon=%g workers=%d",
                             cfg.window.window_s, cfg.window.step_s,
                             graph_mode_name(cfg.mode), cfg.conv.epsilon, cfg.workers));
  OrderedSink sink(cache, timing);

  const auto wall0 = Clock::now();
  int64_t interval_count = 0;

  if (cfg.workers == 1) {
    IntervalSlicer slicer(cfg.window, [&](Interval&& iv) {
      sink.submit(compute_interval(iv, cfg.mode, cfg.conv));
    });
    while (auto ev = source.next()) slicer.push(*ev);
    double duration = cfg.duration_s.value_or(source.meta().duration_s);
    interval_count = slicer.finish(duration);
  } else {
    IntervalQueue queue(static_cast<size_t>(cfg.workers) * 2);
    std::mutex err_m;
    std::exception_ptr first_error;

    auto record_error = [&](std::exception_ptr e) {
      std::lock_guard lk(err_m);
      if (!first_error) first_error = e;
      queue.abort();
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(cfg.workers));
    for (int w = 0; w < cfg.workers; ++w) {
      pool.emplace_back([&] {
        Interval iv;
        while (queue.pop(iv)) {
          try {
            sink.submit(compute_interval(iv, cfg.mode, cfg.conv));
          } catch (...) {
            record_error(std::current_exception());
            return;
          }
        }
      });
    }

    try {
      IntervalSlicer slicer(cfg.window, [&](Interval&& iv) { queue.push(std::move(iv)); });
      while (auto ev = source.next()) slicer.push(*ev);
      double duration = cfg.duration_s.value_or(source.meta().duration_s);
      interval_count = slicer.finish(duration);
    } catch (...) {
      record_error(std::current_exception());
    }
    queue.close();
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  ExtractStats stats;
  stats.interval_count = interval_count;
  stats.meta = source.meta();
  stats.duration_s = cfg.duration_s.value_or(stats.meta.duration_s);
  stats.wall_s = std::chrono::duration<double>(Clock::now() - wall0).count();
  stats.stage_totals = sink.totals();
  stats.degenerate_intervals = sink.degenerate();

  timing.totals(stats.stage_totals, stats.wall_s);
  cache.close(interval_count, stats.duration_s, stats.meta);
  return stats;
}

}  // namespace botgraph
