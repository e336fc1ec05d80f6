#pragma once

#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "botgraph/event.hpp"

namespace botgraph {

// Pull-based, single-consumer event stream. meta() carries running counts
// and is complete once next() has returned nullopt.
class EventSource {
 public:
  virtual ~EventSource() = default;
  virtual std::optional<PacketEvent> next() = 0;
  virtual const CaptureMeta& meta() const = 0;
};

// Canonical interchange format: UTF-8, `timestamp,src,dst,size_bytes`, `.`
// decimal separator, LF line endings. An optional header line and `#`
// comment lines are skipped. Input must already be sorted by timestamp;
// a regression is an ordering error, not a silent re-sort.
class EventCsvReader final : public EventSource {
 public:
  explicit EventCsvReader(const std::string& path);
  std::optional<PacketEvent> next() override;
  const CaptureMeta& meta() const override { return meta_; }

 private:
  std::string path_;
  std::ifstream in_;
  CaptureMeta meta_;
  std::set<uint32_t> hosts_;
  uint64_t line_no_ = 0;
  double last_t_ = -1.0;
  bool first_data_line_ = true;
};

enum class EventFormat { auto_detect, csv, pcap };

std::unique_ptr<EventSource> open_event_source(const std::string& path,
                                               EventFormat format = EventFormat::auto_detect);

std::vector<PacketEvent> read_events_csv(const std::string& path,
                                         CaptureMeta* meta = nullptr);

void write_events_csv(const std::string& path, std::span<const PacketEvent> events,
                      const std::vector<std::string>& header_comments = {});

// Ground truth CSV: `host,infection_time_s`. Duplicate hosts are an error;
// an empty file means every host is benign.
GroundTruth read_ground_truth(const std::string& path);

void write_ground_truth(const std::string& path, const GroundTruth& truth,
                        const std::vector<std::string>& header_comments = {});

}  // namespace botgraph
