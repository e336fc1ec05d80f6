#include <doctest.h>

#include <cmath>
#include <map>

#include "botgraph/errors.hpp"
#include "botgraph/rng.hpp"
#include "botgraph/windowing.hpp"

using namespace botgraph;

namespace {

PacketEvent ev(double t) { return {t, 0x0a000001u, 0x0a000002u, 60}; }

}  // namespace

TEST_CASE("slice: worked example, window 300 step 150 duration 400") {
  std::vector<PacketEvent> events{ev(10), ev(200), ev(310)};
  auto intervals = slice_all(events, {300, 150}, 400);
  REQUIRE(intervals.size() == 2);

  CHECK(intervals[0].index == 0);
  CHECK(intervals[0].start_s == 0.0);
  CHECK(intervals[0].end_s == 300.0);
  REQUIRE(intervals[0].events.size() == 2);
  CHECK(intervals[0].events[0].t == 10);
  CHECK(intervals[0].events[1].t == 200);

  CHECK(intervals[1].index == 1);
  CHECK(intervals[1].start_s == 150.0);
  CHECK(intervals[1].end_s == 450.0);
  REQUIRE(intervals[1].events.size() == 2);
  CHECK(intervals[1].events[0].t == 200);
  CHECK(intervals[1].events[1].t == 310);
}

TEST_CASE("slice: empty stream, duration 0 gives a single empty interval") {
  auto intervals = slice_all({}, {300, 150}, 0.0);
  REQUIRE(intervals.size() == 1);
  CHECK(intervals[0].index == 0);
  CHECK(intervals[0].start_s == 0.0);
  CHECK(intervals[0].end_s == 300.0);
  CHECK(intervals[0].events.empty());
}

TEST_CASE("slice: event at exactly t=300 obeys half-open membership") {
  std::vector<PacketEvent> events{ev(0.0), ev(300.0)};
  auto intervals = slice_all(events, {300, 150}, 300.0);
  REQUIRE(intervals.size() == 2);
  REQUIRE(intervals[0].events.size() == 1);
  CHECK(intervals[0].events[0].t == 0.0);
  REQUIRE(intervals[1].events.size() == 1);
  CHECK(intervals[1].events[0].t == 300.0);
}

TEST_CASE("slice: the capture tail is never dropped") {
  // duration - window an exact multiple of step: the naive index formula
  // would end at [150,450) and lose an event at t=450.
  std::vector<PacketEvent> events{ev(448.0), ev(450.0)};
  auto intervals = slice_all(events, {300, 150}, 450.0);
  REQUIRE(intervals.size() == 3);
  CHECK(intervals[2].start_s == 300.0);
  REQUIRE(intervals[2].events.size() == 2);

  size_t total = 0;
  for (const auto& iv : intervals) total += iv.events.size();
  CHECK(total == 3);  // 448 in [150,450) and [300,600); 450 in [300,600)
}

TEST_CASE("slice: unordered input is an error") {
  IntervalSlicer slicer({300, 150}, [](Interval&&) {});
  slicer.push(ev(100));
  CHECK_THROWS_AS(slicer.push(ev(99)), InputError);
}

TEST_CASE("slice: duration before last event is an error") {
  IntervalSlicer slicer({300, 150}, [](Interval&&) {});
  slicer.push(ev(500));
  CHECK_THROWS_AS(slicer.finish(400), ConfigError);
}

TEST_CASE("window config validation") {
  CHECK_THROWS_AS(WindowConfig({0, 150}).validate(), ConfigError);
  CHECK_THROWS_AS(WindowConfig({300, 0}).validate(), ConfigError);
  CHECK_THROWS_AS(WindowConfig({300, 301}).validate(), ConfigError);
  CHECK_NOTHROW(WindowConfig({300, 300}).validate());
}

TEST_CASE("final_interval_index coverage rule") {
  WindowConfig cfg{300, 150};
  CHECK(final_interval_index(cfg, 0) == 0);
  CHECK(final_interval_index(cfg, 299.9) == 0);
  CHECK(final_interval_index(cfg, 300) == 1);
  CHECK(final_interval_index(cfg, 400) == 1);
  CHECK(final_interval_index(cfg, 450) == 2);
  CHECK(final_interval_index(cfg, 7200) == 47);
  // The final window always extends strictly past the duration.
  for (double d : {0.0, 1.0, 299.0, 300.0, 450.0, 451.0, 7200.0}) {
    const int64_t f = final_interval_index(cfg, d);
    CHECK(static_cast<double>(f) * cfg.step_s + cfg.window_s > d);
  }
}

TEST_CASE("slice properties on random streams") {
  DetRng rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    WindowConfig cfg;
    cfg.step_s = 50.0 + rng.uniform(0.0, 200.0);
    cfg.window_s = 2.0 * cfg.step_s;  // paper-shaped overlap
    const double duration = rng.uniform(0.0, 3000.0);

    std::vector<PacketEvent> events;
    double t = 0.0;
    while (true) {
      t += rng.exponential(0.05);
      if (t > duration) break;
      events.push_back(ev(t));
    }
    auto intervals = slice_all(events, cfg, duration);
    REQUIRE(!intervals.empty());

    // Half-open membership for every emitted (event, interval) pair.
    std::map<double, int> containment;
    for (const auto& iv : intervals) {
      CHECK(iv.start_s == doctest::Approx(iv.index * cfg.step_s));
      CHECK(iv.end_s - iv.start_s == doctest::Approx(cfg.window_s));
      for (const auto& e : iv.events) {
        CHECK(iv.start_s <= e.t);
        CHECK(e.t < iv.end_s);
        containment[e.t]++;
      }
    }

    // With window = 2*step an event lands in exactly two intervals when
    // both of its candidate windows exist; only events in the trailing
    // partial region (past the final window's start) land in one.
    const int64_t final_idx = final_interval_index(cfg, duration);
    for (const auto& e : events) {
      REQUIRE(containment.count(e.t));
      const bool both_windows_exist =
          e.t >= cfg.step_s &&
          static_cast<int64_t>(std::floor(e.t / cfg.step_s)) <= final_idx;
      if (both_windows_exist)
        CHECK(containment[e.t] >= 2);
      else
        CHECK(containment[e.t] >= 1);
    }
  }
}

TEST_CASE("slicer buffers a bounded number of open intervals") {
  WindowConfig cfg{300, 150};
  const size_t bound = static_cast<size_t>(std::ceil(cfg.window_s / cfg.step_s)) + 1;
  size_t max_open = 0;
  IntervalSlicer slicer(cfg, [](Interval&&) {});
  DetRng rng(5);
  double t = 0.0;
  for (int i = 0; i < 20000; ++i) {
    t += rng.exponential(0.5);
    slicer.push(ev(t));
    max_open = std::max(max_open, slicer.open_count());
  }
  CHECK(max_open <= bound + 1);  // +1 for the speculative tail window
  slicer.finish(t);
}
