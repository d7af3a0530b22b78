#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numeric>
#include <queue>
#include <string>
#include <vector>

#include "fogsound/errors.hpp"
#include "fogsound/placement.hpp"
#include "fogsound/power.hpp"
#include "fogsound/wire.hpp"

namespace fogsound::sim {

/// Server service seconds per message kind.
struct ServerService {
  double classify_from_audio_s = 1.2;
  double classify_from_features_s = 0.15;
  double store_s = 0.001;

  double for_payload(const placement::PlacementConfig& cfg) const {
    if (cfg.tier_of(placement::Stage::Classify) == placement::Tier::Device)
      return store_s;
    if (cfg.tier_of(placement::Stage::Extract) == placement::Tier::Device)
      return classify_from_features_s;
    return classify_from_audio_s;
  }
};

// Link defaults for the latency experiment. The sensing interval is set so
// the admission queue stays under 70% utilization for config2 at 4 and 8
// nodes and saturates (utilization >= 1) at 12; see server_utilization().
inline constexpr double kLatencyBandwidthBps = 16'000'000.0;
inline constexpr double kLatencyRoundIntervalS = 14.44;
inline constexpr double kDefaultBaseDelayMs = 2.0;

struct SimConfig {
  int n_nodes = 1;
  std::string placement = "config1";
  int rounds = 1;
  std::uint64_t seed = 0;
  double bandwidth_Bps = power::kDefaultUplinkBytesPerSec;
  double base_delay_ms = kDefaultBaseDelayMs;
  double fog_hop_ms = 0.0;
  double clip_seconds = 4.0;
  power::StageDurations stage_durations{};
  ServerService server_service{};
  // > 0: rounds fire on a fixed schedule with nodes phase-staggered across
  // the interval; 0: free-running back-to-back rounds.
  double round_interval_s = 0.0;
  bool trace = false;
};

struct MetricsRow {
  std::string experiment;
  std::string config;
  int n_nodes = 0;
  int iteration = 0;
  double avg_latency_ms = 0.0;
  double avg_power_mw = 0.0;
  double energy_mj = 0.0;
  double duration_s = 0.0;
};

struct MetricsReport {
  std::vector<MetricsRow> rows;
  std::map<std::uint32_t, int> grant_counts;
  std::size_t total_server_bytes = 0;
  std::vector<std::string> trace;

  double mean_latency_ms() const {
    double acc = 0.0;
    for (const auto& r : rows) acc += r.avg_latency_ms;
    return rows.empty() ? 0.0 : acc / static_cast<double>(rows.size());
  }
  double mean_power_mw() const {
    double acc = 0.0;
    for (const auto& r : rows) acc += r.avg_power_mw;
    return rows.empty() ? 0.0 : acc / static_cast<double>(rows.size());
  }
  double mean_duration_s() const {
    double acc = 0.0;
    for (const auto& r : rows) acc += r.duration_s;
    return rows.empty() ? 0.0 : acc / static_cast<double>(rows.size());
  }
};

/// Offered-load ratio of the admission queue: n * (transfer + service) per
/// sensing interval. Checkable by hand from the defaults.
inline double server_utilization(const SimConfig& cfg) {
  const auto pc = placement::preset(cfg.placement);
  const double msg_bytes = static_cast<double>(
      wire::kHeaderBytes + placement::uplink_payload(pc, cfg.clip_seconds));
  const double x = msg_bytes / cfg.bandwidth_Bps + cfg.server_service.for_payload(pc);
  const double period =
      cfg.round_interval_s > 0.0
          ? cfg.round_interval_s
          : cfg.stage_durations.record_s + msg_bytes / cfg.bandwidth_Bps;
  return cfg.n_nodes * x / period;
}

namespace detail {

inline std::int64_t to_us(double seconds) {
  return static_cast<std::int64_t>(std::llround(seconds * 1e6));
}

struct Event {
  std::int64_t time_us = 0;
  int node = -1;  // -1: server-free event
  std::int64_t seq = 0;
  int round = 0;

  // min-heap order: (time, node address index, sequence)
  bool operator>(const Event& o) const {
    if (time_us != o.time_us) return time_us > o.time_us;
    if (node != o.node) return node > o.node;
    return seq > o.seq;
  }
};

}  // namespace detail

/// Deterministic event loop over an n-node star: each round a node records,
/// runs its device-placed stages, then transmits one message which the
/// server admits in strict round-robin address order, one at a time.
inline MetricsReport run(const SimConfig& cfg) {
  if (cfg.n_nodes < 1 || cfg.rounds < 1)
    fail(errc::invalid_config, "need n_nodes >= 1 and rounds >= 1");
  if (cfg.bandwidth_Bps <= 0.0 || cfg.base_delay_ms < 0.0 ||
      cfg.fog_hop_ms < 0.0 || cfg.round_interval_s < 0.0)
    fail(errc::invalid_config, "negative link constant");
  const auto pc = placement::preset(cfg.placement);

  const std::size_t payload =
      placement::uplink_payload(pc, cfg.clip_seconds);
  const std::size_t msg_bytes = wire::kHeaderBytes + payload;
  const double tx_s = static_cast<double>(msg_bytes) / cfg.bandwidth_Bps;
  const double svc_s = cfg.server_service.for_payload(pc);
  const double prop_s = (cfg.base_delay_ms + cfg.fog_hop_ms) / 1000.0;

  // Device-side work before the uplink.
  double pre_tx_s = cfg.stage_durations.record_s;
  const auto device_stages = placement::device_stage_set(pc);
  for (placement::Stage s : device_stages) {
    if (s == placement::Stage::Extract) pre_tx_s += cfg.stage_durations.extract_s;
    if (s == placement::Stage::Classify) pre_tx_s += cfg.stage_durations.classify_s;
  }

  // Per-round device power, identical across nodes and rounds.
  const auto params = power::calibrate_defaults();
  const auto timeline = power::timeline_for_round(pc, cfg.stage_durations, tx_s);
  const auto round_energy = power::energy(timeline, params);

  const std::int64_t tx_us = detail::to_us(tx_s);
  const std::int64_t svc_us = detail::to_us(svc_s);
  const std::int64_t prop_us = detail::to_us(prop_s);
  const std::int64_t pre_tx_us = detail::to_us(pre_tx_s);
  const std::int64_t interval_us = detail::to_us(cfg.round_interval_s);

  std::priority_queue<detail::Event, std::vector<detail::Event>,
                      std::greater<detail::Event>>
      events;
  std::int64_t seq = 0;

  if (interval_us > 0) {
    // Schedule-driven: phase-staggered across the interval.
    for (int k = 0; k < cfg.n_nodes; ++k) {
      const std::int64_t phase = interval_us * k / cfg.n_nodes;
      for (int r = 0; r < cfg.rounds; ++r)
        events.push({phase + interval_us * r + pre_tx_us, k, seq++, r});
    }
  } else {
    for (int k = 0; k < cfg.n_nodes; ++k)
      events.push({pre_tx_us, k, seq++, 0});
  }

  MetricsReport report;
  std::vector<std::int64_t> pending_since(static_cast<std::size_t>(cfg.n_nodes), -1);
  std::vector<int> pending_round(static_cast<std::size_t>(cfg.n_nodes), 0);
  std::vector<std::vector<double>> latency_by_round(
      static_cast<std::size_t>(cfg.rounds));
  bool server_busy = false;
  int turn = 0;  // index into node order (nodes indexed by address order)
  std::int64_t now = -1;
  int served = 0;
  const int total = cfg.n_nodes * cfg.rounds;

  auto trace_line = [&report, &cfg](std::int64_t t, const std::string& what) {
    if (!cfg.trace) return;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%12lld us  ", static_cast<long long>(t));
    report.trace.push_back(buf + what);
  };

  auto start_service = [&](std::int64_t t, int node) {
    const std::int64_t wait_us = t - pending_since[static_cast<std::size_t>(node)];
    const int r = pending_round[static_cast<std::size_t>(node)];
    pending_since[static_cast<std::size_t>(node)] = -1;
    const double latency_ms =
        static_cast<double>(wait_us + prop_us + tx_us) / 1000.0;
    latency_by_round[static_cast<std::size_t>(r)].push_back(latency_ms);
    ++report.grant_counts[static_cast<std::uint32_t>(node)];
    report.total_server_bytes += msg_bytes;
    server_busy = true;
    turn = (node + 1) % cfg.n_nodes;
    ++served;
    const std::int64_t free_at = t + tx_us + svc_us;
    events.push({free_at, -1, seq++, r});
    trace_line(t, "grant node " + std::to_string(node) + " round " +
                      std::to_string(r));
    if (interval_us == 0 && r + 1 < cfg.rounds) {
      // Free-running: the next round starts once the reply returns.
      const std::int64_t reply_at = t + tx_us + svc_us + 2 * prop_us;
      events.push({reply_at + pre_tx_us, node, seq++, r + 1});
    }
  };

  while (!events.empty() && served < total) {
    const detail::Event ev = events.top();
    events.pop();
    if (ev.time_us < now)
      fail(errc::invalid_config, "event processed out of order");
    now = ev.time_us;
    if (ev.node < 0) {
      server_busy = false;
      trace_line(now, "server free");
    } else {
      pending_since[static_cast<std::size_t>(ev.node)] = now;
      pending_round[static_cast<std::size_t>(ev.node)] = ev.round;
      trace_line(now, "node " + std::to_string(ev.node) + " ready round " +
                          std::to_string(ev.round));
    }
    // Strict cyclic admission: serve only the node whose turn it is.
    if (!server_busy && pending_since[static_cast<std::size_t>(turn)] >= 0)
      start_service(now, turn);
  }

  for (int r = 0; r < cfg.rounds; ++r) {
    const auto& lat = latency_by_round[static_cast<std::size_t>(r)];
    MetricsRow row;
    row.experiment = "run";
    row.config = cfg.placement;
    row.n_nodes = cfg.n_nodes;
    row.iteration = r;
    row.avg_latency_ms = lat.empty()
                             ? 0.0
                             : std::accumulate(lat.begin(), lat.end(), 0.0) /
                                   static_cast<double>(lat.size());
    row.avg_power_mw = round_energy.avg_power_mw;
    row.energy_mj = round_energy.energy_mj * cfg.n_nodes;
    row.duration_s = round_energy.duration_s;
    report.rows.push_back(std::move(row));
  }
  return report;
}

/// Single-node power regression: 20 free-running rounds per configuration.
inline std::map<std::string, MetricsReport> experiment_power(int iterations = 20) {
  std::map<std::string, MetricsReport> out;
  for (const auto& name : placement::preset_names()) {
    SimConfig cfg;
    cfg.placement = name;
    cfg.n_nodes = 1;
    cfg.rounds = iterations;
    auto report = run(cfg);
    for (auto& row : report.rows) row.experiment = "power";
    out[name] = std::move(report);
  }
  return out;
}

/// Average-power difference between a recorder round with an uplink of one
/// recorded clip and a recorder round with the radio off throughout.
inline double experiment_recorder_delta(int iterations = 20) {
  const auto params = power::calibrate_defaults();
  const power::StageDurations dur;
  const double wav_framed_bytes = static_cast<double>(
      wire::kHeaderBytes + placement::wav_bytes(4.0));
  const double tx_s = wav_framed_bytes / power::kDefaultUplinkBytesPerSec;

  power::StateTimeline with_send;
  with_send.intervals.push_back(
      {0.0, dur.record_s,
       {.radio_on = false, .mic_on = true, .cpu = power::CpuMode::Idle}});
  with_send.intervals.push_back(
      {dur.record_s, dur.record_s + tx_s,
       {.radio_on = true, .mic_on = false, .cpu = power::CpuMode::Busy}});
  power::StateTimeline without_send;
  without_send.intervals.push_back(
      {0.0, dur.record_s,
       {.radio_on = false, .mic_on = true, .cpu = power::CpuMode::Idle}});

  // Rounds are deterministic; iterations average to the single-round value.
  (void)iterations;
  return power::energy(with_send, params).avg_power_mw -
         power::energy(without_send, params).avg_power_mw;
}

struct LatencyCell {
  std::string config;
  int n_nodes = 0;
  MetricsReport report;
};

/// Scheduled-interval latency sweep over node counts per configuration.
inline std::vector<LatencyCell> experiment_latency(
    const std::vector<int>& node_counts = {4, 8, 12}, int iterations = 10) {
  std::vector<LatencyCell> cells;
  for (const auto& name : placement::preset_names()) {
    for (int n : node_counts) {
      SimConfig cfg;
      cfg.placement = name;
      cfg.n_nodes = n;
      cfg.rounds = iterations;
      cfg.bandwidth_Bps = kLatencyBandwidthBps;
      cfg.round_interval_s = kLatencyRoundIntervalS;
      auto report = run(cfg);
      for (auto& row : report.rows) row.experiment = "latency";
      cells.push_back({name, n, std::move(report)});
    }
  }
  return cells;
}

inline const char* kCsvHeader =
    "experiment,config,n_nodes,iteration,avg_latency_ms,avg_power_mw,"
    "energy_mj,duration_s";

inline std::string to_csv_row(const MetricsRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%s,%d,%d,%.6f,%.6f,%.6f,%.6f",
                r.experiment.c_str(), r.config.c_str(), r.n_nodes, r.iteration,
                r.avg_latency_ms, r.avg_power_mw, r.energy_mj, r.duration_s);
  return buf;
}

}  // namespace fogsound::sim
