#pragma once

#include <fstream>
#include <optional>
#include <set>
#include <string>

#include "botgraph/event_io.hpp"

namespace botgraph {

// Classic pcap reader (magic 0xa1b2c3d4 / 0xa1b23c4d, either endianness),
// Ethernet link layer. One PacketEvent per IPv4 packet; timestamps are
// rebased so the first record in the capture is t=0. Non-IPv4 frames are
// counted in meta().skipped_non_ipv4 and skipped. pcap-ng is rejected.
class PcapReader final : public EventSource {
 public:
  explicit PcapReader(const std::string& path);
  std::optional<PacketEvent> next() override;
  const CaptureMeta& meta() const override { return meta_; }

 private:
  std::string path_;
  std::ifstream in_;
  CaptureMeta meta_;
  std::set<uint32_t> hosts_;
  bool swap_ = false;
  double ts_scale_ = 1e-6;  // microsecond or nanosecond captures
  bool have_base_ = false;
  double base_ts_ = 0.0;
  double last_t_ = -1.0;
  uint64_t offset_ = 0;  // byte offset, for truncation diagnostics

  uint32_t load_u32(const unsigned char* p) const;
  uint16_t load_u16be(const unsigned char* p) const;
};

}  // namespace botgraph
