#include "botgraph/windowing.hpp"

#include <cmath>

#include "botgraph/errors.hpp"
#include "botgraph/util.hpp"

namespace botgraph {

void WindowConfig::validate() const {
  if (!(window_s > 0.0) || !(step_s > 0.0))
    throw ConfigError("window_s and step_s must be positive");
  if (step_s > window_s)
    throw ConfigError(strfmt("step_s (%g) must not exceed window_s (%g)", step_s, window_s));
}

int64_t final_interval_index(const WindowConfig& cfg, double duration_s) {
  if (duration_s < cfg.window_s) return 0;
  return static_cast<int64_t>(std::floor((duration_s - cfg.window_s) / cfg.step_s)) + 1;
}

IntervalSlicer::IntervalSlicer(WindowConfig cfg, Sink sink)
    : cfg_(cfg), sink_(std::move(sink)) {
  cfg_.validate();
  open_through(0);
}

void IntervalSlicer::open_through(int64_t index) {
  while (next_to_open_ <= index) {
    Interval iv;
    iv.index = next_to_open_;
    iv.start_s = static_cast<double>(next_to_open_) * cfg_.step_s;
    iv.end_s = iv.start_s + cfg_.window_s;
    open_.push_back(std::move(iv));
    ++next_to_open_;
  }
}

void IntervalSlicer::push(const PacketEvent& ev) {
  if (finished_) throw ConfigError("push after finish");
  if (ev.t < last_t_)
    throw InputError(strfmt("unordered event stream: t=%g after t=%g", ev.t, last_t_));
  if (ev.t < 0.0) throw InputError("negative event timestamp");
  last_t_ = ev.t;

  // Close intervals the stream has moved past; input order guarantees no
  // later event can fall into them.
  while (!open_.empty() && open_.front().end_s <= ev.t) {
    sink_(std::move(open_.front()));
    open_.pop_front();
  }

  // Candidate range by index arithmetic; membership decided by explicit
  // half-open comparison so boundary behavior is exact.
  open_through(static_cast<int64_t>(std::floor(ev.t / cfg_.step_s)) + 1);
  for (auto& iv : open_)
    if (iv.contains(ev.t)) iv.events.push_back(ev);
}

int64_t IntervalSlicer::finish(double duration_s) {
  if (finished_) throw ConfigError("finish called twice");
  finished_ = true;
  if (duration_s < last_t_)
    throw ConfigError(strfmt("duration_s (%g) is before the last event (%g)", duration_s, last_t_));

  int64_t last_index = final_interval_index(cfg_, duration_s);
  open_through(last_index);
  while (!open_.empty()) {
    if (open_.front().index > last_index) break;  // speculatively opened tail
    sink_(std::move(open_.front()));
    open_.pop_front();
  }
  open_.clear();
  return last_index + 1;
}

std::vector<Interval> slice_all(std::span<const PacketEvent> events,
                                const WindowConfig& cfg, double duration_s) {
  std::vector<Interval> out;
  IntervalSlicer slicer(cfg, [&out](Interval&& iv) { out.push_back(std::move(iv)); });
  for (const auto& ev : events) slicer.push(ev);
  slicer.finish(duration_s);
  return out;
}

}  // namespace botgraph
