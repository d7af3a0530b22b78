#include <catch2/catch_amalgamated.hpp>

#include "fogsound/sim.hpp"

using namespace fogsound;

namespace {

std::vector<std::string> csv_rows(const sim::MetricsReport& r) {
  std::vector<std::string> out;
  for (const auto& row : r.rows) out.push_back(sim::to_csv_row(row));
  return out;
}

}  // namespace

TEST_CASE("run is deterministic") {
  sim::SimConfig cfg;
  cfg.placement = "config2";
  cfg.n_nodes = 5;
  cfg.rounds = 4;
  cfg.bandwidth_Bps = sim::kLatencyBandwidthBps;
  cfg.round_interval_s = sim::kLatencyRoundIntervalS;
  const auto a = sim::run(cfg);
  const auto b = sim::run(cfg);
  CHECK(csv_rows(a) == csv_rows(b));
  CHECK(a.grant_counts == b.grant_counts);
  CHECK(a.total_server_bytes == b.total_server_bytes);
}

TEST_CASE("byte conservation and grant counts") {
  sim::SimConfig cfg;
  cfg.placement = "proposed";
  cfg.n_nodes = 3;
  cfg.rounds = 7;
  cfg.bandwidth_Bps = sim::kLatencyBandwidthBps;
  cfg.round_interval_s = sim::kLatencyRoundIntervalS;
  const auto r = sim::run(cfg);
  // each round every node ships one 1544-byte feature payload in a 9-byte frame
  CHECK(r.total_server_bytes == 3u * 7u * 1553u);
  REQUIRE(r.grant_counts.size() == 3);
  for (const auto& [node, count] : r.grant_counts) CHECK(count == 7);
  CHECK(r.rows.size() == 7);
}

TEST_CASE("single free-running node sees no queueing") {
  sim::SimConfig cfg;
  cfg.placement = "proposed";
  cfg.n_nodes = 1;
  cfg.rounds = 3;
  const auto r = sim::run(cfg);
  // latency = 2 ms propagation + 1553 B / 20 kB/s transfer
  const double expect = 2.0 + 1000.0 * 1553.0 / 20000.0;
  for (const auto& row : r.rows)
    CHECK(row.avg_latency_ms == Catch::Approx(expect).margin(0.01));
  CHECK(r.total_server_bytes == 3u * 1553u);
}

TEST_CASE("run rejects invalid configs") {
  sim::SimConfig cfg;
  cfg.n_nodes = 0;
  try {
    sim::run(cfg);
    FAIL("expected InvalidConfig");
  } catch (const Error& e) {
    CHECK(e.code() == errc::invalid_config);
  }
  cfg.n_nodes = 1;
  cfg.bandwidth_Bps = 0.0;
  try {
    sim::run(cfg);
    FAIL("expected InvalidConfig");
  } catch (const Error& e) {
    CHECK(e.code() == errc::invalid_config);
  }
  cfg.bandwidth_Bps = 1000.0;
  cfg.placement = "bogus";
  try {
    sim::run(cfg);
    FAIL("expected UnknownPreset");
  } catch (const Error& e) {
    CHECK(e.code() == errc::unknown_preset);
  }
}

TEST_CASE("server utilization oracle") {
  sim::SimConfig cfg;
  cfg.placement = "config2";
  cfg.bandwidth_Bps = sim::kLatencyBandwidthBps;
  cfg.round_interval_s = sim::kLatencyRoundIntervalS;
  // hand oracle: per message x = 128,053 B / 16 MB/s + 1.2 s service,
  // interval 14.44 s
  const double x = 128053.0 / 16'000'000.0 + 1.2;
  cfg.n_nodes = 4;
  CHECK(sim::server_utilization(cfg) ==
        Catch::Approx(4.0 * x / 14.44).margin(1e-12));
  CHECK(sim::server_utilization(cfg) < 0.7);
  cfg.n_nodes = 8;
  CHECK(sim::server_utilization(cfg) < 0.7);
  cfg.n_nodes = 12;
  CHECK(sim::server_utilization(cfg) >= 1.0);
}

TEST_CASE("power experiment reproduces the reference round measurements") {
  const auto by_config = sim::experiment_power(20);
  REQUIRE(by_config.size() == 3);
  for (const auto& [name, report] : by_config) {
    CHECK(report.rows.size() == 20);
    for (const auto& row : report.rows) CHECK(row.experiment == "power");
  }
  CHECK(by_config.at("config1").mean_power_mw() ==
        Catch::Approx(1852.00).epsilon(0.01));
  CHECK(by_config.at("config2").mean_power_mw() ==
        Catch::Approx(1830.54).epsilon(0.01));
  CHECK(by_config.at("proposed").mean_power_mw() ==
        Catch::Approx(1786.86).epsilon(0.01));
  CHECK(by_config.at("config1").mean_duration_s() ==
        Catch::Approx(57.77).epsilon(0.01));
  CHECK(by_config.at("config2").mean_duration_s() ==
        Catch::Approx(16.42).epsilon(0.01));
  CHECK(by_config.at("proposed").mean_power_mw() <
        by_config.at("config2").mean_power_mw());
}

TEST_CASE("recorder send/no-send delta") {
  CHECK(sim::experiment_recorder_delta() == Catch::Approx(127.54).epsilon(0.01));
}

TEST_CASE("latency sweep shape and saturation behavior") {
  const auto cells = sim::experiment_latency({4, 8, 12}, 10);
  REQUIRE(cells.size() == 9);
  std::map<std::string, std::map<int, double>> mean;
  for (const auto& c : cells) {
    CHECK(c.report.rows.size() == 10);
    mean[c.config][c.n_nodes] = c.report.mean_latency_ms();
  }
  // raw-audio uplink degrades as the fleet grows; at 12 nodes the queue
  // saturates near the reference 300 ms
  CHECK(mean["config2"][8] >= mean["config2"][4]);
  CHECK(mean["config2"][12] > mean["config2"][8]);
  CHECK(mean["config2"][12] >= 5.0 * mean["config2"][4]);
  CHECK(mean["config2"][12] > 240.0);
  CHECK(mean["config2"][12] < 360.0);
  // no queueing at 4 nodes: propagation + transfer only
  CHECK(mean["config2"][4] ==
        Catch::Approx(2.0 + 1000.0 * 128053.0 / 16'000'000.0).margin(0.01));
  // local and split pipelines ship tiny payloads and stay flat
  for (const std::string name : {"config1", "proposed"}) {
    const double spread =
        std::abs(mean[name][12] - mean[name][4]);
    CHECK(spread < 0.1 * std::max(mean[name][4], 1.0));
    CHECK(mean[name][12] < mean["config2"][12]);
  }
}

TEST_CASE("csv serialization") {
  CHECK(std::string(sim::kCsvHeader) ==
        "experiment,config,n_nodes,iteration,avg_latency_ms,avg_power_mw,"
        "energy_mj,duration_s");
  sim::MetricsRow row;
  row.experiment = "latency";
  row.config = "config2";
  row.n_nodes = 8;
  row.iteration = 2;
  row.avg_latency_ms = 12.5;
  row.avg_power_mw = 1830.54;
  row.energy_mj = 30037.1;
  row.duration_s = 16.42;
  CHECK(sim::to_csv_row(row) ==
        "latency,config2,8,2,12.500000,1830.540000,30037.100000,16.420000");
}
