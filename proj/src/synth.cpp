#include "botgraph/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "botgraph/errors.hpp"
#include "botgraph/rng.hpp"
#include "botgraph/util.hpp"

namespace botgraph {

namespace {

constexpr double kBurstStepS = 30.0;  // bot burst spacing inside an active phase

// Address plan: benign hosts under 10.0/16, bots under 10.66/24; the C&C
// controller and the DDoS victim are dedicated unlabeled infrastructure.
uint32_t benign_ip(int i) {
  return (10u << 24) | (0u << 16) | (static_cast<uint32_t>(i / 250) << 8) |
         static_cast<uint32_t>(i % 250 + 1);
}
uint32_t bot_ip(int k) { return (10u << 24) | (66u << 16) | static_cast<uint32_t>(k + 1); }
constexpr uint32_t kControllerIp = (10u << 24) | (99u << 16) | 1u;
constexpr uint32_t kVictimIp = (10u << 24) | (77u << 16) | 1u;

uint32_t packet_size(DetRng& rng) { return 60 + static_cast<uint32_t>(rng.below(1441)); }

}  // namespace

BotPattern parse_bot_pattern(const std::string& s) {
  if (s == "p2p") return BotPattern::p2p;
  if (s == "cnc") return BotPattern::cnc;
  if (s == "ddos") return BotPattern::ddos;
  throw ConfigError("unknown pattern '" + s + "' (expected p2p|cnc|ddos)");
}

const char* bot_pattern_name(BotPattern p) {
  switch (p) {
    case BotPattern::p2p: return "p2p";
    case BotPattern::cnc: return "cnc";
    default: return "ddos";
  }
}

void ScenarioSpec::validate() const {
  if (!(duration_s > 0.0)) throw ConfigError("duration_s must be positive");
  if (benign_hosts < 1) throw ConfigError("benign_hosts must be positive");
  if (bot_hosts < 0) throw ConfigError("bot_hosts must be non-negative");
  if (benign_hosts > 60000) throw ConfigError("benign_hosts too large for the address plan");
  if (bot_hosts > 250) throw ConfigError("bot_hosts too large for the address plan");
  if (!(period_s > 0.0)) throw ConfigError("period_s must be positive");
  if (!(dormancy_duty >= 0.0) || !(dormancy_duty <= 1.0))
    throw ConfigError("dormancy_duty must lie in [0,1]");
  if (!(noise_rate >= 0.0)) throw ConfigError("noise_rate must be non-negative");
  if (!(infection_time_s >= 0.0)) throw ConfigError("infection_time_s must be non-negative");
}

SynthResult generate(const ScenarioSpec& spec) {
  spec.validate();
  DetRng rng(spec.seed);
  SynthResult result;
  result.duration_s = spec.duration_s;

  const int nb = spec.benign_hosts;

  // Benign background: each host talks mostly to a few habitual peers, so
  // per-interval out-neighbor counts stay small and stable.
  std::vector<std::vector<int>> peers(nb);
  for (int i = 0; i < nb; ++i) {
    const int k = nb > 1 ? 2 + static_cast<int>(rng.below(3)) : 0;
    for (int p = 0; p < k; ++p) {
      int j = static_cast<int>(rng.below(static_cast<uint64_t>(nb)));
      if (j == i) j = (j + 1) % nb;
      peers[i].push_back(j);
    }
  }

  const uint64_t noise_events =
      static_cast<uint64_t>(std::llround(spec.noise_rate * spec.duration_s));
  for (uint64_t e = 0; e < noise_events && nb > 1; ++e) {
    const double t = rng.uniform(0.0, spec.duration_s);
    const int src = static_cast<int>(rng.below(static_cast<uint64_t>(nb)));
    int dst;
    if (!peers[src].empty() && rng.next_unit() < 0.8) {
      dst = peers[src][rng.below(peers[src].size())];
    } else {
      dst = static_cast<int>(rng.below(static_cast<uint64_t>(nb)));
      if (dst == src) dst = (dst + 1) % nb;
    }
    result.events.push_back({t, benign_ip(src), benign_ip(dst), packet_size(rng)});
  }

  // Bot overlay: bursts every kBurstStepS within each active phase of the
  // dormancy/activity cycle, starting at the infection time.
  const double active_len = spec.period_s * (1.0 - spec.dormancy_duty);
  for (int k = 0; k < spec.bot_hosts; ++k) {
    result.bots.push_back(bot_ip(k));
    result.truth.infected[bot_ip(k)] = spec.infection_time_s;
  }

  auto emit = [&](double t, uint32_t src, uint32_t dst) {
    if (t >= spec.duration_s || t < 0.0) return;
    result.events.push_back({t, src, dst, packet_size(rng)});
  };

  for (int k = 0; k < spec.bot_hosts; ++k) {
    const uint32_t self = bot_ip(k);
    for (double ps = spec.infection_time_s; ps < spec.duration_s; ps += spec.period_s) {
      for (double bt = ps; bt < std::min(ps + active_len, spec.duration_s);
           bt += kBurstStepS) {
        const double t0 = bt + rng.uniform(0.0, 2.0);
        switch (spec.pattern) {
          case BotPattern::p2p:
            for (int other = 0; other < spec.bot_hosts; ++other)
              if (other != k) emit(t0 + 0.01 * other, self, bot_ip(other));
            for (int gossip = 0; gossip < 6 && nb > 0; ++gossip)
              emit(t0 + 0.5 + 0.1 * gossip, self,
                   benign_ip(static_cast<int>(rng.below(static_cast<uint64_t>(nb)))));
            break;
          case BotPattern::cnc:
            for (int beacon = 0; beacon < 4; ++beacon)
              emit(t0 + beacon * (kBurstStepS / 8.0), self, kControllerIp);
            for (int probe = 0; probe < 5 && nb > 0; ++probe)
              emit(t0 + 1.0 + 0.2 * probe, self,
                   benign_ip(static_cast<int>(rng.below(static_cast<uint64_t>(nb)))));
            break;
          case BotPattern::ddos:
            for (int flood = 0; flood < 40; ++flood)
              emit(t0 + 0.05 * flood, self, kVictimIp);
            emit(t0 + 0.3, self, kControllerIp);
            emit(t0 + 2.3, self, kControllerIp);
            for (int probe = 0; probe < 3 && nb > 0; ++probe)
              emit(t0 + 1.1 + 0.2 * probe, self,
                   benign_ip(static_cast<int>(rng.below(static_cast<uint64_t>(nb)))));
            break;
        }
      }
    }
  }

  std::sort(result.events.begin(), result.events.end(),
            [](const PacketEvent& a, const PacketEvent& b) {
              if (a.t != b.t) return a.t < b.t;
              if (a.src != b.src) return a.src < b.src;
              if (a.dst != b.dst) return a.dst < b.dst;
              return a.size_bytes < b.size_bytes;
            });
  return result;
}

ScenarioSpec read_scenario_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open scenario spec: " + path);

  ScenarioSpec spec;
  std::string line;
  uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim_view(line);
    if (sv.empty() || sv.front() == '#') continue;

    const size_t eq = sv.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(strfmt("%s:%llu: expected key = value", path.c_str(),
                               static_cast<unsigned long long>(line_no)));
    const std::string key(trim_view(sv.substr(0, eq)));
    const std::string_view val = trim_view(sv.substr(eq + 1));

    auto want_double = [&](double& out) {
      if (!parse_double(val, out))
        throw ConfigError(strfmt("%s:%llu: bad numeric value for %s", path.c_str(),
                                 static_cast<unsigned long long>(line_no), key.c_str()));
    };
    auto want_int = [&](int& out) {
      int64_t v;
      if (!parse_i64(val, v) || v < INT32_MIN || v > INT32_MAX)
        throw ConfigError(strfmt("%s:%llu: bad integer value for %s", path.c_str(),
                                 static_cast<unsigned long long>(line_no), key.c_str()));
      out = static_cast<int>(v);
    };

    if (key == "name") spec.name = std::string(val);
    else if (key == "duration_s") want_double(spec.duration_s);
    else if (key == "benign_hosts") want_int(spec.benign_hosts);
    else if (key == "bot_hosts") want_int(spec.bot_hosts);
    else if (key == "pattern") spec.pattern = parse_bot_pattern(std::string(val));
    else if (key == "period_s") want_double(spec.period_s);
    else if (key == "dormancy_duty") want_double(spec.dormancy_duty);
    else if (key == "noise_rate") want_double(spec.noise_rate);
    else if (key == "seed") {
      uint64_t v;
      if (!parse_u64(val, v))
        throw ConfigError(strfmt("%s:%llu: bad seed", path.c_str(),
                                 static_cast<unsigned long long>(line_no)));
      spec.seed = v;
    } else if (key == "infection_time_s") want_double(spec.infection_time_s);
    else
      throw ConfigError(strfmt("%s:%llu: unknown key '%s'", path.c_str(),
                               static_cast<unsigned long long>(line_no), key.c_str()));
  }
  spec.validate();
  return spec;
}

std::vector<std::string> scenario_comments(const ScenarioSpec& spec) {
  return {
      "botgraph synth scenario",
      "name=" + spec.name,
      "pattern=" + std::string(bot_pattern_name(spec.pattern)),
      "duration_s=" + format_double(spec.duration_s),
      strfmt("benign_hosts=%d bot_hosts=%d", spec.benign_hosts, spec.bot_hosts),
      "period_s=" + format_double(spec.period_s),
      "dormancy_duty=" + format_double(spec.dormancy_duty),
      "noise_rate=" + format_double(spec.noise_rate),
      strfmt("seed=%llu", static_cast<unsigned long long>(spec.seed)),
      "infection_time_s=" + format_double(spec.infection_time_s),
  };
}

}  // namespace botgraph
