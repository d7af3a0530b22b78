#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "fogsound/errors.hpp"

namespace fogsound::wire {

enum class MsgKind : std::uint8_t {
  RawAudio = 0x01,
  Features = 0x02,
  Result = 0x03,
};

inline constexpr std::size_t kHeaderBytes = 9;
inline constexpr std::size_t kMaxPayloadBytes = 16ull * 1024 * 1024;
inline constexpr std::size_t kFeaturesPayloadBytes = 1544;
inline constexpr std::size_t kResultPayloadBytes = 4;

struct WireMessage {
  MsgKind kind = MsgKind::RawAudio;
  std::uint32_t node_id = 0;
  std::vector<std::uint8_t> payload;

  std::size_t encoded_size() const { return kHeaderBytes + payload.size(); }
  bool operator==(const WireMessage&) const = default;
};

enum class ReplyStatus : std::uint8_t { Ok = 0x00, Err = 0x01 };

struct ServerReply {
  ReplyStatus status = ReplyStatus::Ok;
  std::uint32_t class_id = 0;

  bool operator==(const ServerReply&) const = default;
};

inline constexpr std::size_t kReplyBytes = 5;

namespace detail {

inline void wr_u32be(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back((v >> 24) & 0xff);
  out.push_back((v >> 16) & 0xff);
  out.push_back((v >> 8) & 0xff);
  out.push_back(v & 0xff);
}
inline std::uint32_t rd_u32be(const std::uint8_t* p) {
  return std::uint32_t(p[0]) << 24 | std::uint32_t(p[1]) << 16 |
         std::uint32_t(p[2]) << 8 | std::uint32_t(p[3]);
}

inline void check_kind_payload(MsgKind kind, std::size_t len) {
  if (len == 0) fail(errc::length_mismatch, "empty payload");
  if (len > kMaxPayloadBytes)
    fail(errc::length_mismatch, "payload exceeds 16 MiB cap");
  if (kind == MsgKind::Features && len != kFeaturesPayloadBytes)
    fail(errc::length_mismatch, "FEATURES payload must be 1544 bytes, got " +
                                    std::to_string(len));
  if (kind == MsgKind::Result && len != kResultPayloadBytes)
    fail(errc::length_mismatch, "RESULT payload must be 4 bytes, got " +
                                    std::to_string(len));
}

}  // namespace detail

/// [1B kind][4B node_id BE][4B payload length BE][payload]
inline std::vector<std::uint8_t> encode(const WireMessage& msg) {
  detail::check_kind_payload(msg.kind, msg.payload.size());
  std::vector<std::uint8_t> out;
  out.reserve(msg.encoded_size());
  out.push_back(static_cast<std::uint8_t>(msg.kind));
  detail::wr_u32be(out, msg.node_id);
  detail::wr_u32be(out, static_cast<std::uint32_t>(msg.payload.size()));
  out.insert(out.end(), msg.payload.begin(), msg.payload.end());
  return out;
}

inline WireMessage decode(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kHeaderBytes)
    fail(errc::truncated, "message shorter than the 9-byte header");
  const std::uint8_t kind_byte = bytes[0];
  if (kind_byte < 0x01 || kind_byte > 0x03)
    fail(errc::unknown_kind, "unknown message kind " + std::to_string(kind_byte));
  WireMessage msg;
  msg.kind = static_cast<MsgKind>(kind_byte);
  msg.node_id = detail::rd_u32be(&bytes[1]);
  const std::uint32_t len = detail::rd_u32be(&bytes[5]);
  if (len > kMaxPayloadBytes)
    fail(errc::length_mismatch, "declared payload exceeds 16 MiB cap");
  if (bytes.size() < kHeaderBytes + len)
    fail(errc::truncated, "payload shorter than declared length");
  if (bytes.size() > kHeaderBytes + len)
    fail(errc::length_mismatch, "trailing bytes after payload");
  detail::check_kind_payload(msg.kind, len);
  msg.payload.assign(bytes.begin() + kHeaderBytes, bytes.end());
  return msg;
}

inline std::vector<std::uint8_t> encode_reply(const ServerReply& r) {
  std::vector<std::uint8_t> out;
  out.push_back(static_cast<std::uint8_t>(r.status));
  detail::wr_u32be(out, r.class_id);
  return out;
}

inline ServerReply decode_reply(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() != kReplyBytes) fail(errc::truncated, "bad reply size");
  if (bytes[0] > 0x01) fail(errc::unknown_kind, "unknown reply status");
  ServerReply r;
  r.status = static_cast<ReplyStatus>(bytes[0]);
  r.class_id = detail::rd_u32be(&bytes[1]);
  return r;
}

/// Registered nodes, sorted ascending by address; node ids unique.
class NodeRegistry {
 public:
  struct Entry {
    std::uint32_t node_id = 0;
    std::string address;
  };

  void add(std::uint32_t node_id, const std::string& address) {
    for (const auto& e : entries_) {
      if (e.node_id == node_id)
        fail(errc::invalid_config, "duplicate node id " + std::to_string(node_id));
      if (e.address == address)
        fail(errc::invalid_config, "duplicate address " + address);
    }
    entries_.push_back({node_id, address});
    std::sort(entries_.begin(), entries_.end(),
              [](const Entry& a, const Entry& b) { return a.address < b.address; });
  }

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  std::size_t index_of(std::uint32_t node_id) const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
      if (entries_[i].node_id == node_id) return i;
    fail(errc::not_found, "unregistered node " + std::to_string(node_id));
  }

 private:
  std::vector<Entry> entries_;
};

/// Strict cyclic admission over the registry: one grant at a time, in
/// address order.
class RoundRobinScheduler {
 public:
  explicit RoundRobinScheduler(const NodeRegistry& registry)
      : registry_(&registry) {
    if (registry.empty()) fail(errc::invalid_config, "empty registry");
  }

  /// Node id holding the next grant; advances the cycle.
  std::uint32_t next_grant() {
    const std::uint32_t id = registry_->entries()[cursor_].node_id;
    cursor_ = (cursor_ + 1) % registry_->size();
    return id;
  }

  /// Node id whose turn it currently is, without advancing.
  std::uint32_t current_turn() const {
    return registry_->entries()[cursor_].node_id;
  }

 private:
  const NodeRegistry* registry_;
  std::size_t cursor_ = 0;
};

/// Deterministic link model: delivery takes base_delay + bytes/bandwidth
/// plus optional seeded jitter (zero by default).
class SimTransport {
 public:
  SimTransport(double bandwidth_bytes_per_s, double base_delay_ms,
               std::uint64_t seed = 0, double jitter_ms = 0.0)
      : bandwidth_(bandwidth_bytes_per_s),
        base_delay_ms_(base_delay_ms),
        jitter_ms_(jitter_ms),
        rng_(seed) {
    if (!(bandwidth_ > 0.0)) fail(errc::invalid_config, "bandwidth must be > 0");
  }

  /// Milliseconds from first transmitted byte to last byte received.
  double delivery_ms(std::size_t bytes) {
    double ms = base_delay_ms_ +
                1000.0 * static_cast<double>(bytes) / bandwidth_;
    if (jitter_ms_ > 0.0)
      ms += jitter_ms_ * ((rng_() >> 11) * 0x1.0p-53);
    return ms;
  }

  double bandwidth_bytes_per_s() const { return bandwidth_; }
  double base_delay_ms() const { return base_delay_ms_; }

 private:
  double bandwidth_;
  double base_delay_ms_;
  double jitter_ms_;
  std::mt19937_64 rng_;
};

/// Server-side latency of one encoded message on this link.
inline double measure_latency_ms(SimTransport& transport,
                                 const WireMessage& msg) {
  return transport.delivery_ms(msg.encoded_size());
}

}  // namespace fogsound::wire
