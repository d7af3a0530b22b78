#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fogsound/audio.hpp"
#include "fogsound/errors.hpp"
#include "fogsound/features.hpp"

namespace fogsound::placement {

/// Pipeline stages in execution order.
enum class Stage { Record, Extract, Classify, Store };

/// Tiers ordered by capability.
enum class Tier { Device = 0, Fog = 1, Cloud = 2 };

inline constexpr Stage kPipelineOrder[] = {Stage::Record, Stage::Extract,
                                           Stage::Classify, Stage::Store};

inline const char* stage_name(Stage s) {
  switch (s) {
    case Stage::Record: return "record";
    case Stage::Extract: return "extract";
    case Stage::Classify: return "classify";
    case Stage::Store: return "store";
  }
  return "?";
}

inline const char* tier_name(Tier t) {
  switch (t) {
    case Tier::Device: return "device";
    case Tier::Fog: return "fog";
    case Tier::Cloud: return "cloud";
  }
  return "?";
}

struct PlacementConfig {
  std::string name;
  std::map<Stage, Tier> assignment;

  Tier tier_of(Stage s) const { return assignment.at(s); }
};

/// Structural rules: recording is device-bound, storage is cloud-bound, and
/// features never travel back down the hierarchy.
inline std::vector<std::string> validate(const PlacementConfig& cfg) {
  std::vector<std::string> violations;
  for (Stage s : kPipelineOrder)
    if (!cfg.assignment.contains(s)) {
      violations.push_back(std::string("missing assignment for ") + stage_name(s));
      return violations;
    }
  if (cfg.tier_of(Stage::Record) != Tier::Device)
    violations.push_back("Record must be on Device");
  if (cfg.tier_of(Stage::Store) != Tier::Cloud)
    violations.push_back("Store must be on Cloud");
  if (static_cast<int>(cfg.tier_of(Stage::Extract)) >
      static_cast<int>(cfg.tier_of(Stage::Classify)))
    violations.push_back("Extract tier must not exceed Classify tier");
  return violations;
}

/// The three named process allocations.
inline PlacementConfig preset(const std::string& name) {
  PlacementConfig cfg;
  cfg.name = name;
  cfg.assignment[Stage::Record] = Tier::Device;
  cfg.assignment[Stage::Store] = Tier::Cloud;
  if (name == "config1") {
    cfg.assignment[Stage::Extract] = Tier::Device;
    cfg.assignment[Stage::Classify] = Tier::Device;
  } else if (name == "config2") {
    cfg.assignment[Stage::Extract] = Tier::Cloud;
    cfg.assignment[Stage::Classify] = Tier::Cloud;
  } else if (name == "proposed") {
    cfg.assignment[Stage::Extract] = Tier::Device;
    cfg.assignment[Stage::Classify] = Tier::Cloud;
  } else {
    fail(errc::unknown_preset, "unknown preset: " + name);
  }
  return cfg;
}

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"config1", "config2", "proposed"};
  return names;
}

inline constexpr std::size_t kResultPayloadBytes = 4;  // one LE int32 class id

inline std::size_t wav_bytes(double clip_seconds,
                             int rate = audio::kDefaultRateHz) {
  return 44 + static_cast<std::size_t>(std::llround(2.0 * rate * clip_seconds));
}

/// Bytes leaving the device per clip under this allocation.
inline std::size_t uplink_payload(const PlacementConfig& cfg,
                                  double clip_seconds = 4.0) {
  if (!validate(cfg).empty())
    fail(errc::invalid_config, "invalid placement: " + cfg.name);
  if (cfg.tier_of(Stage::Classify) == Tier::Device)
    return kResultPayloadBytes;
  if (cfg.tier_of(Stage::Extract) == Tier::Device)
    return features::kFeatureBytes;
  return wav_bytes(clip_seconds);
}

/// Stages executed on the device, in pipeline order.
inline std::vector<Stage> device_stage_set(const PlacementConfig& cfg) {
  if (!validate(cfg).empty())
    fail(errc::invalid_config, "invalid placement: " + cfg.name);
  std::vector<Stage> out;
  for (Stage s : kPipelineOrder)
    if (cfg.tier_of(s) == Tier::Device) out.push_back(s);
  return out;
}

}  // namespace fogsound::placement
