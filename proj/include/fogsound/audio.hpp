#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fogsound/errors.hpp"

namespace fogsound::audio {

inline constexpr int kDefaultRateHz = 16000;
inline constexpr std::size_t kDefaultFrameBytes = 4096;
inline constexpr int kClassCount = 10;
inline constexpr double kDefaultSegmentSeconds = 4.0;

/// Mono 16-bit PCM clip; the unit of sensing.
struct AudioClip {
  std::vector<std::int16_t> samples;
  int sample_rate_hz = kDefaultRateHz;
  int channels = 1;

  std::size_t byte_size() const { return samples.size() * 2; }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
  bool operator==(const AudioClip&) const = default;
};

struct Frame {
  std::vector<std::uint8_t> bytes;  // exactly frame_size long
  std::size_t index = 0;
};

struct LabeledClip {
  AudioClip clip;
  int class_id = 0;
};

namespace detail {

inline std::uint32_t rd_u32le(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 |
         std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}
inline std::uint16_t rd_u16le(const std::uint8_t* p) {
  return std::uint16_t(p[0] | p[1] << 8);
}
inline void wr_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(v & 0xff);
  out.push_back((v >> 8) & 0xff);
  out.push_back((v >> 16) & 0xff);
  out.push_back((v >> 24) & 0xff);
}
inline void wr_u16le(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(v & 0xff);
  out.push_back((v >> 8) & 0xff);
}

}  // namespace detail

/// Parses RIFF/WAVE bytes. Accepts PCM(1), mono, 16-bit only; tolerates
/// extra chunks (LIST, fact, ...) before the data chunk.
inline AudioClip decode_wav(const std::vector<std::uint8_t>& buf,
                            const std::string& origin = "<memory>") {
  const std::string& path_str = origin;
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
    fail(errc::malformed_header, "not a RIFF/WAVE file: " + path_str);

  bool have_fmt = false;
  std::uint16_t format = 0, ch = 0, bits = 0;
  std::uint32_t rate = 0;
  const std::uint8_t* data = nullptr;
  std::uint32_t data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const char* id = reinterpret_cast<const char*>(&buf[pos]);
    std::uint32_t len = detail::rd_u32le(&buf[pos + 4]);
    std::size_t body = pos + 8;
    if (body + len > buf.size())
      fail(errc::malformed_header, "chunk overruns file: " + path_str);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (len < 16) fail(errc::malformed_header, "short fmt chunk");
      format = detail::rd_u16le(&buf[body]);
      ch = detail::rd_u16le(&buf[body + 2]);
      rate = detail::rd_u32le(&buf[body + 4]);
      bits = detail::rd_u16le(&buf[body + 14]);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data = &buf[body];
      data_len = len;
      pos = body + len + (len & 1);
      break;
    }
    pos = body + len + (len & 1);  // chunks are word-aligned
  }
  if (!have_fmt || (data == nullptr && data_len != 0))
    fail(errc::malformed_header, "missing fmt/data chunk: " + path_str);
  if (format != 1) fail(errc::unsupported_format, "non-PCM format code");
  if (ch != 1) fail(errc::unsupported_format, "expected mono, got " +
                                                  std::to_string(ch) + " channels");
  if (bits != 16) fail(errc::unsupported_format, "expected 16-bit samples");
  if (rate == 0) fail(errc::malformed_header, "zero sample rate");

  AudioClip clip;
  clip.sample_rate_hz = static_cast<int>(rate);
  clip.samples.resize(data_len / 2);
  for (std::size_t i = 0; i < clip.samples.size(); ++i)
    clip.samples[i] = static_cast<std::int16_t>(
        std::uint16_t(data[2 * i] | data[2 * i + 1] << 8));
  return clip;
}

inline AudioClip load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::not_found, "cannot open " + path.string());
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
  return decode_wav(buf, path.string());
}

/// Canonical 44-byte-header WAV bytes.
inline std::vector<std::uint8_t> encode_wav(const AudioClip& clip) {
  std::vector<std::uint8_t> out;
  out.reserve(44 + clip.byte_size());
  auto push = [&out](const char* s) { out.insert(out.end(), s, s + 4); };
  const std::uint32_t data_len = static_cast<std::uint32_t>(clip.byte_size());
  const std::uint32_t rate = static_cast<std::uint32_t>(clip.sample_rate_hz);
  push("RIFF");
  detail::wr_u32le(out, 36 + data_len);
  push("WAVE");
  push("fmt ");
  detail::wr_u32le(out, 16);
  detail::wr_u16le(out, 1);   // PCM
  detail::wr_u16le(out, 1);   // mono
  detail::wr_u32le(out, rate);
  detail::wr_u32le(out, rate * 2);  // byte rate
  detail::wr_u16le(out, 2);         // block align
  detail::wr_u16le(out, 16);        // bits per sample
  push("data");
  detail::wr_u32le(out, data_len);
  for (std::int16_t s : clip.samples) {
    out.push_back(static_cast<std::uint8_t>(std::uint16_t(s) & 0xff));
    out.push_back(static_cast<std::uint8_t>(std::uint16_t(s) >> 8));
  }
  return out;
}

/// Writes a canonical 44-byte-header WAV. Returns the file size in bytes.
inline std::size_t write_wav(const AudioClip& clip,
                             const std::filesystem::path& path) {
  const std::vector<std::uint8_t> out = encode_wav(clip);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(errc::io_failure, "cannot open for write: " + path.string());
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  if (!f) fail(errc::io_failure, "write failed: " + path.string());
  return out.size();
}

/// Splits clip bytes into fixed-size frames; the final frame is zero-padded.
inline std::vector<Frame> frame_stream(const AudioClip& clip,
                                       std::size_t frame_size = kDefaultFrameBytes) {
  if (frame_size == 0) fail(errc::invalid_frame_size, "frame_size must be > 0");
  std::vector<std::uint8_t> bytes;
  bytes.reserve(clip.byte_size());
  for (std::int16_t s : clip.samples) {
    bytes.push_back(static_cast<std::uint8_t>(std::uint16_t(s) & 0xff));
    bytes.push_back(static_cast<std::uint8_t>(std::uint16_t(s) >> 8));
  }
  const std::size_t n_frames = (bytes.size() + frame_size - 1) / frame_size;
  std::vector<Frame> frames;
  frames.reserve(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    Frame fr;
    fr.index = i;
    fr.bytes.assign(frame_size, 0);
    const std::size_t off = i * frame_size;
    const std::size_t n = std::min(frame_size, bytes.size() - off);
    std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(off), n,
                fr.bytes.begin());
    frames.push_back(std::move(fr));
  }
  return frames;
}

/// Consecutive non-overlapping segments; a trailing remainder shorter than
/// seg_seconds is dropped.
inline std::vector<AudioClip> segment(const AudioClip& clip,
                                      double seg_seconds = kDefaultSegmentSeconds) {
  const std::size_t seg_samples = static_cast<std::size_t>(
      std::llround(seg_seconds * clip.sample_rate_hz));
  std::vector<AudioClip> out;
  if (seg_samples == 0) return out;
  for (std::size_t off = 0; off + seg_samples <= clip.samples.size();
       off += seg_samples) {
    AudioClip seg;
    seg.sample_rate_hz = clip.sample_rate_hz;
    seg.samples.assign(clip.samples.begin() + static_cast<std::ptrdiff_t>(off),
                       clip.samples.begin() +
                           static_cast<std::ptrdiff_t>(off + seg_samples));
    out.push_back(std::move(seg));
  }
  return out;
}

namespace detail {

// Hand-rolled Box-Muller over mt19937_64 so sample streams are identical
// across standard-library implementations.
class Gaussian {
 public:
  explicit Gaussian(std::uint64_t seed) : rng_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 1e-300) u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  double uniform01() {
    return (rng_() >> 11) * 0x1.0p-53;  // 53-bit mantissa
  }
  std::mt19937_64 rng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace detail

inline double class_fundamental_hz(int class_id) {
  return 200.0 + 150.0 * class_id;
}

/// Deterministic synthetic clip: a fundamental tone per class plus seeded
/// white noise at 20 dB SNR. Pure function of (class_id, duration_s, seed).
inline LabeledClip synth_clip(int class_id, double duration_s,
                              std::uint64_t seed) {
  if (class_id < 0 || class_id >= kClassCount)
    fail(errc::invalid_class, "class_id out of [0,9]: " + std::to_string(class_id));
  const double f = class_fundamental_hz(class_id);
  const double amp = 0.5 * 32767.0;
  const double snr_db = 20.0;
  const double noise_sigma = (amp / std::numbers::sqrt2) /
                             std::pow(10.0, snr_db / 20.0);
  const std::size_t n = static_cast<std::size_t>(
      std::llround(duration_s * kDefaultRateHz));
  detail::Gaussian noise(seed ^ (std::uint64_t(class_id) << 32));
  LabeledClip lc;
  lc.class_id = class_id;
  lc.clip.sample_rate_hz = kDefaultRateHz;
  lc.clip.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kDefaultRateHz;
    double v = amp * std::sin(2.0 * std::numbers::pi * f * t) +
               noise_sigma * noise.next();
    v = std::clamp(v, -32768.0, 32767.0);
    lc.clip.samples[i] = static_cast<std::int16_t>(std::lrint(v));
  }
  return lc;
}

struct DatasetLoadResult {
  std::vector<LabeledClip> clips;
  std::size_t skipped = 0;
};

/// Loads a fold-layout dataset directory: <root>/index.csv with columns
/// file_name,fold,class_id and files under <root>/fold<N>/. Unreadable or
/// unsupported files are skipped and counted.
inline DatasetLoadResult load_dataset_dir(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root))
    fail(errc::not_found, "no such directory: " + root.string());
  const fs::path index = root / "index.csv";
  if (!fs::exists(index))
    fail(errc::empty_dataset, "no index.csv in " + root.string());

  std::ifstream in(index);
  if (!in) fail(errc::io_failure, "cannot read " + index.string());
  DatasetLoadResult result;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {  // header row
      first = false;
      continue;
    }
    std::stringstream ss(line);
    std::string file_name, fold, cls;
    if (!std::getline(ss, file_name, ',') || !std::getline(ss, fold, ',') ||
        !std::getline(ss, cls, ','))
      fail(errc::malformed_header, "bad index row: " + line);
    const int class_id = std::stoi(cls);
    if (class_id < 0 || class_id >= kClassCount)
      fail(errc::invalid_class, "index class_id out of range: " + cls);
    try {
      LabeledClip lc;
      lc.clip = load_wav(root / ("fold" + fold) / file_name);
      lc.class_id = class_id;
      result.clips.push_back(std::move(lc));
    } catch (const Error&) {
      ++result.skipped;
    }
  }
  if (result.clips.empty())
    fail(errc::empty_dataset, "no loadable clips under " + root.string());
  return result;
}

}  // namespace fogsound::audio
