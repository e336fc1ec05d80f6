#pragma once

#include <string>
#include <vector>

#include "botgraph/event.hpp"

namespace botgraph {

// Communication shapes, not protocol emulation: p2p bots gossip among
// themselves in bursts, cnc bots beacon a controller host, ddos bots fan
// out onto a single victim. All three alternate activity with dormancy.
enum class BotPattern { p2p, cnc, ddos };

BotPattern parse_bot_pattern(const std::string& s);
const char* bot_pattern_name(BotPattern p);

struct ScenarioSpec {
  std::string name = "synth";
  double duration_s = 7200.0;
  int benign_hosts = 46;
  int bot_hosts = 4;
  BotPattern pattern = BotPattern::p2p;
  double period_s = 600.0;       // one dormancy+activity cycle
  double dormancy_duty = 0.5;    // fraction of each period spent dormant
  double noise_rate = 1.5;       // benign background events per second
  uint64_t seed = 1;
  double infection_time_s = 0.0; // bots are silent before this

  void validate() const;
};

struct SynthResult {
  std::vector<PacketEvent> events;  // sorted by timestamp
  GroundTruth truth;                // bots -> infection time
  std::vector<uint32_t> bots;
  double duration_s = 0.0;
};

// Deterministic per seed: same spec twice gives byte-identical streams.
SynthResult generate(const ScenarioSpec& spec);

// Flat key=value file, `#` comments; unknown keys are an error.
ScenarioSpec read_scenario_spec(const std::string& path);

// Config echo embedded as comments into generated CSV outputs.
std::vector<std::string> scenario_comments(const ScenarioSpec& spec);

}  // namespace botgraph
