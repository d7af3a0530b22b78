#include <catch2/catch_amalgamated.hpp>

#include "fogsound/power.hpp"

using namespace fogsound;
using power::CpuMode;
using power::PowerState;

namespace {

constexpr std::size_t kFramingBytes = 9;

power::StateTimeline round_timeline(const std::string& preset_name) {
  const auto cfg = placement::preset(preset_name);
  const auto dur = power::default_stage_durations();
  const double tx_s =
      static_cast<double>(placement::uplink_payload(cfg) + kFramingBytes) /
      power::kDefaultUplinkBytesPerSec;
  return power::timeline_for_round(cfg, dur, tx_s);
}

}  // namespace

TEST_CASE("power_of is additive in the active components") {
  const auto p = power::calibrate_defaults();
  CHECK(power::power_of({}, p) == p.p_idle_mw);
  CHECK(power::power_of({.mic_on = true}, p) == p.p_idle_mw + p.p_mic_mw);
  CHECK(power::power_of({.cpu = CpuMode::Busy}, p) ==
        p.p_idle_mw + p.p_cpu_busy_mw);
  const PowerState all{.radio_on = true, .mic_on = true, .cpu = CpuMode::Busy};
  CHECK(power::power_of(all, p) ==
        p.p_idle_mw + p.p_mic_mw + p.p_cpu_busy_mw + p.p_radio_tx_mw);
  // turning the radio on adds exactly the radio term, whatever else is active
  for (bool mic : {false, true})
    for (CpuMode cpu : {CpuMode::Idle, CpuMode::Busy}) {
      PowerState off{.radio_on = false, .mic_on = mic, .cpu = cpu};
      PowerState on{.radio_on = true, .mic_on = mic, .cpu = cpu};
      CHECK(power::power_of(on, p) - power::power_of(off, p) ==
            Catch::Approx(p.p_radio_tx_mw).margin(1e-12));
    }
}

TEST_CASE("energy integrates power over time") {
  power::PowerParams p{.p_idle_mw = 1852.0};
  power::StateTimeline tl;
  tl.intervals.push_back({0.0, 10.0, {}});
  const auto r = power::energy(tl, p);
  CHECK(r.energy_mj == Catch::Approx(18520.0).margin(1e-9));
  CHECK(r.avg_power_mw == Catch::Approx(1852.0).margin(1e-9));
  CHECK(r.duration_s == Catch::Approx(10.0).margin(1e-12));
}

TEST_CASE("splitting an interval does not change the energy") {
  const auto p = power::calibrate_defaults();
  power::StateTimeline one, two;
  const PowerState st{.mic_on = true, .cpu = CpuMode::Busy};
  one.intervals.push_back({0.0, 7.5, st});
  two.intervals.push_back({0.0, 3.25, st});
  two.intervals.push_back({3.25, 7.5, st});
  CHECK(power::energy(one, p).energy_mj ==
        Catch::Approx(power::energy(two, p).energy_mj).margin(1e-9));
}

TEST_CASE("malformed timelines are rejected") {
  const auto p = power::calibrate_defaults();
  power::StateTimeline tl;
  auto expect_malformed = [&] {
    try {
      power::energy(tl, p);
      FAIL("expected MalformedTimeline");
    } catch (const Error& e) {
      CHECK(e.code() == errc::malformed_timeline);
    }
  };
  SECTION("empty") { expect_malformed(); }
  SECTION("gap") {
    tl.intervals.push_back({0.0, 1.0, {}});
    tl.intervals.push_back({1.5, 2.0, {}});
    expect_malformed();
  }
  SECTION("overlap") {
    tl.intervals.push_back({0.0, 1.0, {}});
    tl.intervals.push_back({0.5, 2.0, {}});
    expect_malformed();
  }
  SECTION("non-positive interval") {
    tl.intervals.push_back({1.0, 1.0, {}});
    expect_malformed();
  }
}

TEST_CASE("round timelines follow the component rules") {
  for (const auto& name : placement::preset_names()) {
    const auto tl = round_timeline(name);
    REQUIRE(!tl.intervals.empty());
    // mic is on exactly during the first (record) interval
    CHECK(tl.intervals.front().state.mic_on);
    CHECK(tl.intervals.front().end_s - tl.intervals.front().start_s ==
          Catch::Approx(10.0));
    for (std::size_t i = 1; i < tl.intervals.size(); ++i)
      CHECK(!tl.intervals[i].state.mic_on);
    // the radio is on only during the final (tx) interval, where it burns
    // exactly framed_bytes / bandwidth seconds
    const auto cfg = placement::preset(name);
    const double expect_tx =
        static_cast<double>(placement::uplink_payload(cfg) + 9) / 20000.0;
    double radio_s = 0.0;
    for (const auto& iv : tl.intervals)
      if (iv.state.radio_on) radio_s += iv.end_s - iv.start_s;
    CHECK(radio_s == Catch::Approx(expect_tx).margin(1e-9));
    CHECK(tl.intervals.back().state.radio_on);
  }
}

TEST_CASE("timeline_for_round input validation") {
  auto cfg = placement::preset("config1");
  try {
    power::timeline_for_round(cfg, {.record_s = -1.0}, 0.1);
    FAIL("expected InvalidConfig");
  } catch (const Error& e) {
    CHECK(e.code() == errc::invalid_config);
  }
  cfg.assignment[placement::Stage::Store] = placement::Tier::Fog;
  try {
    power::timeline_for_round(cfg, {}, 0.1);
    FAIL("expected InvalidConfig");
  } catch (const Error& e) {
    CHECK(e.code() == errc::invalid_config);
  }
}

TEST_CASE("calibrated parameters reproduce the reference measurements") {
  const auto p = power::calibrate_defaults();
  CHECK(p.p_idle_mw >= 0.0);
  CHECK(p.p_mic_mw >= 0.0);
  CHECK(p.p_cpu_busy_mw >= 0.0);
  CHECK(p.p_radio_tx_mw >= 0.0);

  const auto r1 = power::energy(round_timeline("config1"), p);
  const auto r2 = power::energy(round_timeline("config2"), p);
  const auto r3 = power::energy(round_timeline("proposed"), p);

  CHECK(r1.avg_power_mw == Catch::Approx(1852.00).epsilon(0.01));
  CHECK(r2.avg_power_mw == Catch::Approx(1830.54).epsilon(0.01));
  CHECK(r3.avg_power_mw == Catch::Approx(1786.86).epsilon(0.01));
  CHECK(r1.duration_s == Catch::Approx(57.77).epsilon(0.01));
  CHECK(r2.duration_s == Catch::Approx(16.42).epsilon(0.01));

  // orderings: always-on local pipeline burns the most, the split allocation
  // the least
  CHECK(r1.avg_power_mw > r2.avg_power_mw);
  CHECK(r2.avg_power_mw > r3.avg_power_mw);

  // recorder send/no-send delta: same 10 s recording, with and without the
  // WAV uplink afterwards
  const auto c2 = placement::preset("config2");
  const auto dur = power::default_stage_durations();
  const double tx_s = 128053.0 / 20000.0;
  const auto with_send = power::energy(power::timeline_for_round(c2, dur, tx_s), p);
  const auto no_send = power::energy(power::timeline_for_round(c2, dur, 0.0), p);
  CHECK(with_send.avg_power_mw - no_send.avg_power_mw ==
        Catch::Approx(127.54).epsilon(0.01));
}
