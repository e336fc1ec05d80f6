#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "botgraph/event.hpp"

namespace botgraph {

struct WindowConfig {
  double window_s = 300.0;
  double step_s = 150.0;

  void validate() const;
  double overlap_s() const { return window_s - step_s; }
};

// One fixed-duration slice of the capture: [start_s, end_s) with
// end_s - start_s = window_s and start_s = index * step_s.
struct Interval {
  int64_t index = 0;
  double start_s = 0.0;
  double end_s = 0.0;
  std::vector<PacketEvent> events;

  bool contains(double t) const { return start_s <= t && t < end_s; }
};

// Final interval index for a capture of the given duration: the smallest
// index whose window extends strictly past the duration, so the capture
// tail (including an event exactly at t = duration) is never dropped.
// duration < window yields a single interval 0.
int64_t final_interval_index(const WindowConfig& cfg, double duration_s);

// Single streaming pass over an ordered event stream. An event is buffered
// in at most ceil(window/step)+1 open intervals, so memory is independent
// of capture length. Completed intervals are handed to the sink in index
// order; emitted Intervals are immutable and safely shareable across
// threads.
class IntervalSlicer {
 public:
  using Sink = std::function<void(Interval&&)>;

  IntervalSlicer(WindowConfig cfg, Sink sink);

  void push(const PacketEvent& ev);

  // Flushes remaining intervals (including empty trailing ones) up to the
  // final index and returns the total interval count. duration_s must be
  // >= the last pushed timestamp.
  int64_t finish(double duration_s);

  size_t open_count() const { return open_.size(); }

 private:
  void open_through(int64_t index);

  WindowConfig cfg_;
  Sink sink_;
  std::deque<Interval> open_;
  int64_t next_to_open_ = 0;  // index of the next interval to create
  double last_t_ = -1.0;
  bool finished_ = false;
};

// Convenience for tests and small inputs.
std::vector<Interval> slice_all(std::span<const PacketEvent> events,
                                const WindowConfig& cfg, double duration_s);

}  // namespace botgraph
