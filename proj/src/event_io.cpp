#include "botgraph/event_io.hpp"

#include <algorithm>
#include <cstdio>

#include "botgraph/errors.hpp"
#include "botgraph/pcap.hpp"
#include "botgraph/util.hpp"

namespace botgraph {

std::optional<uint32_t> parse_ipv4(std::string_view s) {
  uint32_t ip = 0;
  int octets = 0;
  size_t pos = 0;
  while (octets < 4) {
    size_t dot = s.find('.', pos);
    std::string_view part = (dot == std::string_view::npos)
                                ? s.substr(pos)
                                : s.substr(pos, dot - pos);
    if (part.empty() || part.size() > 3) return std::nullopt;
    uint32_t v = 0;
    for (char c : part) {
      if (c < '0' || c > '9') return std::nullopt;
      v = v * 10 + static_cast<uint32_t>(c - '0');
    }
    if (v > 255) return std::nullopt;
    ip = (ip << 8) | v;
    ++octets;
    if (dot == std::string_view::npos) {
      pos = s.size();
      break;
    }
    pos = dot + 1;
  }
  if (octets != 4 || pos != s.size()) return std::nullopt;
  return ip;
}

std::string format_ipv4(uint32_t ip) {
  return strfmt("%u.%u.%u.%u", (ip >> 24) & 0xff, (ip >> 16) & 0xff,
                (ip >> 8) & 0xff, ip & 0xff);
}

EventCsvReader::EventCsvReader(const std::string& path) : path_(path), in_(path) {
  if (!in_) throw InputError("cannot open event CSV: " + path);
}

std::optional<PacketEvent> EventCsvReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    std::string_view sv = trim_view(line);
    if (sv.empty() || sv.front() == '#') continue;

    auto fields = split_view(sv, ',');
    if (fields.size() != 4)
      throw InputError(strfmt("%s:%llu: expected 4 fields, got %zu", path_.c_str(),
                              static_cast<unsigned long long>(line_no_), fields.size()));

    double t;
    if (!parse_double(trim_view(fields[0]), t)) {
      // A single leading non-numeric line is treated as the optional header.
      if (first_data_line_) {
        first_data_line_ = false;
        continue;
      }
      throw InputError(strfmt("%s:%llu: bad timestamp '%.*s'", path_.c_str(),
                              static_cast<unsigned long long>(line_no_),
                              static_cast<int>(fields[0].size()), fields[0].data()));
    }
    first_data_line_ = false;

    if (t < 0.0)
      throw InputError(strfmt("%s:%llu: negative timestamp", path_.c_str(),
                              static_cast<unsigned long long>(line_no_)));
    if (t < last_t_)
      throw InputError(strfmt("%s:%llu: timestamp regression (%g after %g); input must be sorted",
                              path_.c_str(), static_cast<unsigned long long>(line_no_), t, last_t_));

    auto src = parse_ipv4(trim_view(fields[1]));
    if (!src)
      throw InputError(strfmt("%s:%llu: src is not an IPv4 address: '%.*s'", path_.c_str(),
                              static_cast<unsigned long long>(line_no_),
                              static_cast<int>(fields[1].size()), fields[1].data()));
    auto dst = parse_ipv4(trim_view(fields[2]));
    if (!dst)
      throw InputError(strfmt("%s:%llu: dst is not an IPv4 address: '%.*s'", path_.c_str(),
                              static_cast<unsigned long long>(line_no_),
                              static_cast<int>(fields[2].size()), fields[2].data()));

    uint64_t size = 0;
    if (!parse_u64(trim_view(fields[3]), size) || size > UINT32_MAX)
      throw InputError(strfmt("%s:%llu: bad size_bytes", path_.c_str(),
                              static_cast<unsigned long long>(line_no_)));

    last_t_ = t;
    PacketEvent ev{t, *src, *dst, static_cast<uint32_t>(size)};
    ++meta_.event_count;
    meta_.duration_s = std::max(meta_.duration_s, t);
    hosts_.insert(ev.src);
    hosts_.insert(ev.dst);
    meta_.host_count = hosts_.size();
    return ev;
  }
  if (in_.bad()) throw InputError("I/O error reading " + path_);
  return std::nullopt;
}

std::unique_ptr<EventSource> open_event_source(const std::string& path, EventFormat format) {
  if (format == EventFormat::auto_detect) {
    format = EventFormat::csv;
    if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".pcap") == 0)
      format = EventFormat::pcap;
  }
  if (format == EventFormat::pcap) return std::make_unique<PcapReader>(path);
  return std::make_unique<EventCsvReader>(path);
}

std::vector<PacketEvent> read_events_csv(const std::string& path, CaptureMeta* meta) {
  EventCsvReader reader(path);
  std::vector<PacketEvent> events;
  while (auto ev = reader.next()) events.push_back(*ev);
  if (meta) *meta = reader.meta();
  return events;
}

void write_events_csv(const std::string& path, std::span<const PacketEvent> events,
                      const std::vector<std::string>& header_comments) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open for writing: " + path);
  for (const auto& c : header_comments) out << "# " << c << "\n";
  out << "timestamp,src,dst,size_bytes\n";
  for (const auto& ev : events) {
    out << format_double(ev.t) << ',' << format_ipv4(ev.src) << ','
        << format_ipv4(ev.dst) << ',' << ev.size_bytes << '\n';
  }
  if (!out) throw InputError("write failed: " + path);
}

GroundTruth read_ground_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open ground truth: " + path);
  GroundTruth truth;
  std::string line;
  uint64_t line_no = 0;
  bool first_data_line = true;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim_view(line);
    if (sv.empty() || sv.front() == '#') continue;

    auto fields = split_view(sv, ',');
    if (fields.size() != 2)
      throw InputError(strfmt("%s:%llu: expected `host,infection_time_s`", path.c_str(),
                              static_cast<unsigned long long>(line_no)));

    auto host = parse_ipv4(trim_view(fields[0]));
    if (!host) {
      if (first_data_line) {  // optional header
        first_data_line = false;
        continue;
      }
      throw InputError(strfmt("%s:%llu: host is not an IPv4 address", path.c_str(),
                              static_cast<unsigned long long>(line_no)));
    }
    first_data_line = false;

    double t;
    if (!parse_double(trim_view(fields[1]), t) || t < 0.0)
      throw InputError(strfmt("%s:%llu: bad infection time", path.c_str(),
                              static_cast<unsigned long long>(line_no)));

    if (!truth.infected.emplace(*host, t).second)
      throw InputError(strfmt("%s:%llu: host %s listed twice", path.c_str(),
                              static_cast<unsigned long long>(line_no),
                              format_ipv4(*host).c_str()));
  }
  if (in.bad()) throw InputError("I/O error reading " + path);
  return truth;
}

void write_ground_truth(const std::string& path, const GroundTruth& truth,
                        const std::vector<std::string>& header_comments) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open for writing: " + path);
  for (const auto& c : header_comments) out << "# " << c << "\n";
  out << "host,infection_time_s\n";
  for (const auto& [host, t] : truth.infected)
    out << format_ipv4(host) << ',' << format_double(t) << '\n';
  if (!out) throw InputError("write failed: " + path);
}

}  // namespace botgraph
