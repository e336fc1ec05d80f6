#include "botgraph/feature_cache.hpp"

#include <algorithm>

#include "botgraph/errors.hpp"
#include "botgraph/util.hpp"

namespace botgraph {

GroundTruth FeatureCache::ground_truth() const {
  GroundTruth t;
  for (const auto& [host, when] : header.truth) t.infected[host] = when;
  return t;
}

FeatureCacheWriter::FeatureCacheWriter(const std::string& path,
                                       const FeatureCacheHeader& header)
    : path_(path), out_(path) {
  if (!out_) throw InputError("cannot open for writing: " + path);
  out_ << "# botgraph-feature-cache v1\n";
  out_ << "# window_s=" << format_double(header.window.window_s) << "\n";
  out_ << "# step_s=" << format_double(header.window.step_s) << "\n";
  out_ << "# graph_mode=" << graph_mode_name(header.mode) << "\n";
  out_ << "# epsilon=" << format_double(header.conv.epsilon) << "\n";
  out_ << "# max_iters=" << header.conv.max_iters << "\n";
  out_ << "# damping=" << format_double(header.conv.damping) << "\n";
  if (!header.source.empty()) out_ << "# source=" << header.source << "\n";
  for (const auto& [host, when] : header.truth)
    out_ << "# truth=" << format_ipv4(host) << ":" << format_double(when) << "\n";
  out_ << "interval_index,node";
  for (const char* name : kFeatureNames) out_ << ',' << name;
  out_ << "\n";
}

void FeatureCacheWriter::append(const IntervalFeatures& iv) {
  if (iv.eigenvector_degenerate || iv.hits_degenerate)
    degenerate_.push_back(iv.interval_index);
  for (size_t i = 0; i < iv.hosts.size(); ++i) {
    out_ << iv.interval_index << ',' << format_ipv4(iv.hosts[i]);
    for (double v : iv.normalized[i]) out_ << ',' << format_sig9(v);
    out_ << '\n';
  }
}

void FeatureCacheWriter::close(int64_t interval_count, double duration_s,
                               const CaptureMeta& meta) {
  if (closed_) return;
  closed_ = true;
  out_ << "# interval_count=" << interval_count << "\n";
  out_ << "# duration_s=" << format_double(duration_s) << "\n";
  out_ << "# event_count=" << meta.event_count << "\n";
  out_ << "# host_count=" << meta.host_count << "\n";
  out_ << "# skipped_non_ipv4=" << meta.skipped_non_ipv4 << "\n";
  if (!degenerate_.empty()) {
    out_ << "# degenerate_intervals=";
    for (size_t i = 0; i < degenerate_.size(); ++i)
      out_ << (i ? "," : "") << degenerate_[i];
    out_ << "\n";
  }
  out_.flush();
  if (!out_) throw InputError("write failed: " + path_);
  out_.close();
}

FeatureCache read_feature_cache(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open feature cache: " + path);

  FeatureCache cache;
  auto& h = cache.header;
  bool saw_interval_count = false;

  std::string line;
  uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim_view(line);
    if (sv.empty()) continue;

    if (sv.front() == '#') {
      sv.remove_prefix(1);
      sv = trim_view(sv);
      size_t eq = sv.find('=');
      if (eq == std::string_view::npos) continue;  // freeform comment
      std::string_view key = sv.substr(0, eq), val = sv.substr(eq + 1);
      if (key == "window_s") parse_double(val, h.window.window_s);
      else if (key == "step_s") parse_double(val, h.window.step_s);
      else if (key == "graph_mode") h.mode = parse_graph_mode(std::string(val));
      else if (key == "epsilon") parse_double(val, h.conv.epsilon);
      else if (key == "max_iters") { int64_t v; if (parse_i64(val, v)) h.conv.max_iters = static_cast<int>(v); }
      else if (key == "damping") parse_double(val, h.conv.damping);
      else if (key == "source") h.source = std::string(val);
      else if (key == "interval_count") { saw_interval_count = parse_i64(val, h.interval_count); }
      else if (key == "duration_s") parse_double(val, h.duration_s);
      else if (key == "event_count") parse_u64(val, h.event_count);
      else if (key == "host_count") parse_u64(val, h.host_count);
      else if (key == "skipped_non_ipv4") parse_u64(val, h.skipped_non_ipv4);
      else if (key == "truth") {
        size_t colon = val.rfind(':');
        if (colon == std::string_view::npos)
          throw InputError(strfmt("%s:%llu: bad truth entry", path.c_str(),
                                  static_cast<unsigned long long>(line_no)));
        auto host = parse_ipv4(val.substr(0, colon));
        double when;
        if (!host || !parse_double(val.substr(colon + 1), when))
          throw InputError(strfmt("%s:%llu: bad truth entry", path.c_str(),
                                  static_cast<unsigned long long>(line_no)));
        h.truth.emplace_back(*host, when);
      } else if (key == "degenerate_intervals") {
        for (auto part : split_view(val, ',')) {
          int64_t idx;
          if (parse_i64(part, idx)) h.degenerate_intervals.push_back(idx);
        }
      }
      continue;
    }

    if (sv.substr(0, 14) == "interval_index") continue;  // column header

    auto fields = split_view(sv, ',');
    if (fields.size() != 2 + kFeatureCount)
      throw InputError(strfmt("%s:%llu: expected %d fields", path.c_str(),
                              static_cast<unsigned long long>(line_no), 2 + kFeatureCount));
    FeatureCache::Row row;
    if (!parse_i64(fields[0], row.interval))
      throw InputError(strfmt("%s:%llu: bad interval index", path.c_str(),
                              static_cast<unsigned long long>(line_no)));
    auto host = parse_ipv4(fields[1]);
    if (!host)
      throw InputError(strfmt("%s:%llu: bad node address", path.c_str(),
                              static_cast<unsigned long long>(line_no)));
    row.host = *host;
    for (int f = 0; f < kFeatureCount; ++f)
      if (!parse_double(fields[2 + f], row.f[f]))
        throw InputError(strfmt("%s:%llu: bad feature value", path.c_str(),
                                static_cast<unsigned long long>(line_no)));
    cache.rows.push_back(row);
  }
  if (in.bad()) throw InputError("I/O error reading " + path);
  if (!saw_interval_count)
    throw InputError(path + ": missing interval_count trailer (truncated cache?)");
  std::sort(h.truth.begin(), h.truth.end());
  return cache;
}

}  // namespace botgraph
