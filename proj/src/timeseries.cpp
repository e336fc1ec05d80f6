#include "botgraph/timeseries.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "botgraph/errors.hpp"
#include "botgraph/rng.hpp"
#include "botgraph/util.hpp"

namespace botgraph {

void SamplingConfig::validate() const {
  if (neg_pos_ratio < 1) throw ConfigError("neg_pos_ratio must be positive");
  if (slice_len < 1) throw ConfigError("slice_len must be positive");
  if (slice_overlap < 0 || slice_overlap >= slice_len)
    throw ConfigError("slice_overlap must lie in [0, slice_len)");
}

std::vector<NodeTimeSeries> assemble(const FeatureCache& cache) {
  return assemble(cache.rows, cache.header.interval_count, cache.header.window.step_s,
                  cache.ground_truth());
}

std::vector<NodeTimeSeries> assemble(const std::vector<FeatureCache::Row>& rows,
                                     int64_t interval_count, double step_s,
                                     const GroundTruth& truth) {
  if (interval_count < 0) throw ConfigError("negative interval count");
  const size_t T = static_cast<size_t>(interval_count);

  // Hosts in sorted order so output order is canonical.
  std::map<uint32_t, size_t> host_index;
  for (const auto& row : rows) host_index.emplace(row.host, 0);
  size_t i = 0;
  for (auto& [host, idx] : host_index) idx = i++;

  std::vector<NodeTimeSeries> series(host_index.size());
  for (const auto& [host, idx] : host_index) {
    auto& s = series[idx];
    s.host = format_ipv4(host);
    s.seq.assign(T, FeatureVector{});  // zero padding
    s.present.assign(T, 0);
    s.label.assign(T, 0);
    for (size_t t = 0; t < T; ++t)
      s.label[t] = truth.malicious_at(host, static_cast<double>(t) * step_s) ? 1 : 0;
  }

  for (const auto& row : rows) {
    if (row.interval < 0 || row.interval >= interval_count)
      throw InputError(strfmt("cache row interval %lld outside [0, %lld)",
                              static_cast<long long>(row.interval),
                              static_cast<long long>(interval_count)));
    auto& s = series[host_index[row.host]];
    s.seq[static_cast<size_t>(row.interval)] = row.f;
    s.present[static_cast<size_t>(row.interval)] = 1;
  }
  return series;
}

std::vector<NodeTimeSeries> undersample(const std::vector<NodeTimeSeries>& series,
                                        const SamplingConfig& cfg) {
  cfg.validate();

  std::vector<size_t> malicious, benign;
  for (size_t i = 0; i < series.size(); ++i)
    (series[i].ever_malicious() ? malicious : benign).push_back(i);

  if (malicious.empty())
    throw ConfigError(
        "undersampling requires at least one malicious host; "
        "pass --no-undersample for unlabeled or all-benign data");

  const size_t want = malicious.size() * static_cast<size_t>(cfg.neg_pos_ratio);
  std::vector<size_t> kept_benign = benign;
  if (kept_benign.size() > want) {
    DetRng rng(cfg.seed);
    rng.shuffle(kept_benign);
    kept_benign.resize(want);
    std::sort(kept_benign.begin(), kept_benign.end());
  }

  std::vector<uint8_t> keep(series.size(), 0);
  for (size_t i : malicious) keep[i] = 1;
  for (size_t i : kept_benign) keep[i] = 1;

  std::vector<NodeTimeSeries> out;
  out.reserve(malicious.size() + kept_benign.size());
  for (size_t i = 0; i < series.size(); ++i)
    if (keep[i]) out.push_back(series[i]);
  return out;
}

std::vector<WindowSample> slice_windows(const std::vector<NodeTimeSeries>& series,
                                        const SamplingConfig& cfg) {
  cfg.validate();
  const size_t len = static_cast<size_t>(cfg.slice_len);
  const size_t stride = static_cast<size_t>(cfg.stride());

  std::vector<WindowSample> out;
  for (const auto& s : series) {
    if (s.seq.size() < len) continue;
    for (size_t start = 0; start + len <= s.seq.size(); start += stride) {
      WindowSample w;
      w.host = s.host;
      w.start_interval = static_cast<int64_t>(start);
      w.rows.assign(s.seq.begin() + static_cast<ptrdiff_t>(start),
                    s.seq.begin() + static_cast<ptrdiff_t>(start + len));
      w.label = false;
      for (size_t t = start; t < start + len; ++t)
        if (s.label[t]) w.label = true;
      out.push_back(std::move(w));
    }
  }
  return out;
}

void write_window_samples_csv(const std::string& path,
                              const std::vector<WindowSample>& samples,
                              const std::vector<std::string>& header_comments) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open for writing: " + path);
  for (const auto& c : header_comments) out << "# " << c << "\n";

  const size_t cells = samples.empty() ? 0 : samples[0].rows.size() * kFeatureCount;
  out << "host,start_interval,label";
  for (size_t i = 0; i < cells; ++i) out << ",m" << i;
  out << "\n";
  for (const auto& w : samples) {
    out << w.host << ',' << w.start_interval << ',' << (w.label ? 1 : 0);
    for (const auto& row : w.rows)
      for (double v : row) out << ',' << format_sig9(v);
    out << '\n';
  }
  if (!out) throw InputError("write failed: " + path);
}

}  // namespace botgraph
