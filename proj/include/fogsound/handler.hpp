#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include "fogsound/audio.hpp"
#include "fogsound/classifier.hpp"
#include "fogsound/errors.hpp"
#include "fogsound/features.hpp"
#include "fogsound/wire.hpp"

namespace fogsound::handler {

struct ResultRow {
  std::int64_t timestamp_ms = 0;
  std::uint32_t node_id = 0;
  int class_id = 0;
};

/// Server-side dispatch: RAW_AUDIO runs extract + classify, FEATURES runs
/// classify, RESULT is stored as-is. Every successful message appends one
/// row to the results log. Safe for concurrent handle() calls.
class ClassifierHandler {
 public:
  explicit ClassifierHandler(classifier::MlpModel model,
                             std::string results_csv_path = "")
      : model_(std::move(model)), csv_path_(std::move(results_csv_path)) {}

  wire::ServerReply handle(const wire::WireMessage& msg) {
    try {
      int class_id = 0;
      switch (msg.kind) {
        case wire::MsgKind::RawAudio: {
          const audio::AudioClip clip = audio::decode_wav(msg.payload);
          class_id = classifier::classify(model_, features::extract_features(clip));
          break;
        }
        case wire::MsgKind::Features: {
          class_id = classifier::classify(
              model_, features::deserialize_features(msg.payload));
          break;
        }
        case wire::MsgKind::Result: {
          // little-endian int32 computed on the device
          class_id = static_cast<int>(
              std::uint32_t(msg.payload[0]) | std::uint32_t(msg.payload[1]) << 8 |
              std::uint32_t(msg.payload[2]) << 16 |
              std::uint32_t(msg.payload[3]) << 24);
          if (class_id < 0 || class_id > 9)
            fail(errc::invalid_class, "result class out of range");
          break;
        }
      }
      store(msg.node_id, class_id);
      return {wire::ReplyStatus::Ok, static_cast<std::uint32_t>(class_id)};
    } catch (const Error&) {
      return {wire::ReplyStatus::Err, 0};
    }
  }

  std::vector<ResultRow> results() const {
    std::lock_guard lock(mu_);
    return results_;
  }

 private:
  void store(std::uint32_t node_id, int class_id) {
    const auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
    std::lock_guard lock(mu_);
    results_.push_back({now, node_id, class_id});
    if (!csv_path_.empty()) {
      std::ofstream out(csv_path_, std::ios::app);
      out << now << ',' << node_id << ',' << class_id << '\n';
    }
  }

  classifier::MlpModel model_;
  std::string csv_path_;
  mutable std::mutex mu_;
  std::vector<ResultRow> results_;
};

}  // namespace fogsound::handler
