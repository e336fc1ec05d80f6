#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace botgraph {

// One timestamped directed communication between two IPv4 hosts. The
// atomic ingestion record; ports, protocol, and payload are deliberately
// absent. size_bytes is informational and unused by feature extraction.
struct PacketEvent {
  double t = 0.0;  // seconds since capture start, non-negative
  uint32_t src = 0;  // IPv4 in host byte order
  uint32_t dst = 0;
  uint32_t size_bytes = 0;

  friend bool operator==(const PacketEvent&, const PacketEvent&) = default;
};

struct CaptureMeta {
  double duration_s = 0.0;  // >= max event timestamp
  uint64_t event_count = 0;
  uint64_t host_count = 0;
  uint64_t skipped_non_ipv4 = 0;  // pcap reader only
};

// host -> infection time in seconds since capture start (0 = infected from
// the beginning). Hosts absent from the map are benign. A host is labeled
// malicious in an interval iff infection_time <= interval start.
struct GroundTruth {
  std::map<uint32_t, double> infected;

  bool malicious_at(uint32_t host, double interval_start_s) const {
    auto it = infected.find(host);
    return it != infected.end() && it->second <= interval_start_s;
  }
  bool empty() const { return infected.empty(); }
};

std::optional<uint32_t> parse_ipv4(std::string_view s);
std::string format_ipv4(uint32_t ip);

}  // namespace botgraph
