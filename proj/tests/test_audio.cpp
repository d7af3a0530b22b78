#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>

#include "fogsound/audio.hpp"
#include "fogsound/features.hpp"

using namespace fogsound;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path p = fs::temp_directory_path() / "fogsound_audio_tests";
  fs::create_directories(p);
  return p;
}

// Independent reference writer: builds the 44-byte header by hand, byte by
// byte, without going through audio::encode_wav.
std::vector<std::uint8_t> reference_wav_bytes(const std::vector<std::int16_t>& samples,
                                              std::uint32_t rate,
                                              std::uint16_t channels = 1) {
  std::vector<std::uint8_t> b;
  auto le32 = [&b](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back((v >> (8 * i)) & 0xff);
  };
  auto le16 = [&b](std::uint16_t v) {
    b.push_back(v & 0xff);
    b.push_back(v >> 8);
  };
  const std::uint32_t data_len = static_cast<std::uint32_t>(samples.size() * 2);
  const char* head = "RIFF";
  b.insert(b.end(), head, head + 4);
  le32(36 + data_len);
  const char* wave = "WAVEfmt ";
  b.insert(b.end(), wave, wave + 8);
  le32(16);
  le16(1);
  le16(channels);
  le32(rate);
  le32(rate * 2 * channels);
  le16(static_cast<std::uint16_t>(2 * channels));
  le16(16);
  const char* data = "data";
  b.insert(b.end(), data, data + 4);
  le32(data_len);
  for (std::int16_t s : samples) {
    b.push_back(static_cast<std::uint8_t>(std::uint16_t(s) & 0xff));
    b.push_back(static_cast<std::uint8_t>(std::uint16_t(s) >> 8));
  }
  return b;
}

void dump(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
}

audio::AudioClip random_clip(std::mt19937_64& rng, std::size_t n) {
  audio::AudioClip c;
  c.samples.resize(n);
  for (auto& s : c.samples)
    s = static_cast<std::int16_t>(rng() & 0xffff);
  return c;
}

}  // namespace

TEST_CASE("load_wav decodes a reference 4-second file") {
  std::vector<std::int16_t> samples(64000);
  for (std::size_t i = 0; i < samples.size(); ++i)
    samples[i] = static_cast<std::int16_t>((i * 37) % 1000 - 500);
  const auto bytes = reference_wav_bytes(samples, 16000);
  REQUIRE(bytes.size() == 128044);
  const fs::path p = temp_dir() / "ref4s.wav";
  dump(p, bytes);
  const auto clip = audio::load_wav(p);
  CHECK(clip.samples.size() == 64000);
  CHECK(clip.sample_rate_hz == 16000);
  CHECK(clip.samples == samples);
}

TEST_CASE("load_wav edge cases") {
  SECTION("zero-length data chunk") {
    const fs::path p = temp_dir() / "empty.wav";
    dump(p, reference_wav_bytes({}, 16000));
    CHECK(audio::load_wav(p).samples.empty());
  }
  SECTION("stereo rejected") {
    const fs::path p = temp_dir() / "stereo.wav";
    dump(p, reference_wav_bytes({1, 2, 3, 4}, 16000, 2));
    try {
      audio::load_wav(p);
      FAIL("expected UnsupportedFormat");
    } catch (const Error& e) {
      CHECK(e.code() == errc::unsupported_format);
    }
  }
  SECTION("missing file") {
    try {
      audio::load_wav(temp_dir() / "nope.wav");
      FAIL("expected NotFound");
    } catch (const Error& e) {
      CHECK(e.code() == errc::not_found);
    }
  }
  SECTION("garbage header") {
    const fs::path p = temp_dir() / "garbage.wav";
    dump(p, {'n', 'o', 't', 'a', 'w', 'a', 'v'});
    try {
      audio::load_wav(p);
      FAIL("expected MalformedHeader");
    } catch (const Error& e) {
      CHECK(e.code() == errc::malformed_header);
    }
  }
  SECTION("extra chunk before data is tolerated") {
    auto bytes = reference_wav_bytes({10, -10, 20, -20}, 16000);
    // splice a LIST chunk between fmt and data
    std::vector<std::uint8_t> extra = {'L', 'I', 'S', 'T', 4, 0, 0, 0, 'x', 'y', 'z', 'w'};
    bytes.insert(bytes.begin() + 36, extra.begin(), extra.end());
    // fix RIFF size
    const std::uint32_t riff = 36 + 8 + 12 + 4;
    for (int i = 0; i < 4; ++i) bytes[4 + i] = (riff >> (8 * i)) & 0xff;
    const fs::path p = temp_dir() / "extra_chunk.wav";
    dump(p, bytes);
    CHECK(audio::load_wav(p).samples.size() == 4);
  }
}

TEST_CASE("write_wav sizes and round trip") {
  audio::AudioClip clip;
  clip.samples.assign(64000, 123);
  const fs::path p = temp_dir() / "w.wav";
  CHECK(audio::write_wav(clip, p) == 128044);
  clip.samples.clear();
  CHECK(audio::write_wav(clip, temp_dir() / "w0.wav") == 44);

  std::mt19937_64 rng(99);
  for (int i = 0; i < 20; ++i) {
    const auto c = random_clip(rng, rng() % 5000);
    const fs::path rp = temp_dir() / "rt.wav";
    audio::write_wav(c, rp);
    CHECK(audio::load_wav(rp) == c);
  }
}

TEST_CASE("frame_stream") {
  audio::AudioClip clip;
  clip.samples.assign(64000, 0x1234);
  auto frames = audio::frame_stream(clip);
  REQUIRE(frames.size() == 32);
  for (const auto& f : frames) CHECK(f.bytes.size() == 4096);
  // last frame: 1024 zero pad bytes
  for (std::size_t i = 4096 - 1024; i < 4096; ++i)
    CHECK(frames.back().bytes[i] == 0);

  clip.samples.assign(2048, 7);
  CHECK(audio::frame_stream(clip).size() == 1);

  clip.samples.assign(160000, 7);  // 10 s, 320,000 B
  CHECK(audio::frame_stream(clip).size() == 79);

  try {
    audio::frame_stream(clip, 0);
    FAIL("expected InvalidFrameSize");
  } catch (const Error& e) {
    CHECK(e.code() == errc::invalid_frame_size);
  }
}

TEST_CASE("frame_stream de-padded concatenation reproduces the clip") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    const auto clip = random_clip(rng, 1 + rng() % 9000);
    const std::size_t fsz = 1 + rng() % 700;
    const auto frames = audio::frame_stream(clip, fsz);
    std::vector<std::uint8_t> concat;
    for (const auto& f : frames) {
      REQUIRE(f.bytes.size() == fsz);
      concat.insert(concat.end(), f.bytes.begin(), f.bytes.end());
    }
    CHECK(concat.size() == fsz * frames.size());
    concat.resize(clip.byte_size());
    std::vector<std::uint8_t> orig;
    for (std::int16_t s : clip.samples) {
      orig.push_back(static_cast<std::uint8_t>(std::uint16_t(s) & 0xff));
      orig.push_back(static_cast<std::uint8_t>(std::uint16_t(s) >> 8));
    }
    CHECK(concat == orig);
  }
}

TEST_CASE("segment") {
  audio::AudioClip clip;
  clip.samples.assign(160000, 5);  // 10 s
  auto segs = audio::segment(clip);
  REQUIRE(segs.size() == 2);
  CHECK(segs[0].samples.size() == 64000);
  CHECK(segs[1].samples.size() == 64000);

  clip.samples.assign(64000, 5);
  segs = audio::segment(clip);
  REQUIRE(segs.size() == 1);
  CHECK(segs[0] == clip);

  clip.samples.assign(48000, 5);  // 3 s
  CHECK(audio::segment(clip).empty());
}

TEST_CASE("synth_clip determinism and fundamentals") {
  const auto a = audio::synth_clip(3, 1.0, 42);
  const auto b = audio::synth_clip(3, 1.0, 42);
  CHECK(a.clip.samples == b.clip.samples);
  CHECK(a.class_id == 3);
  const auto c = audio::synth_clip(3, 1.0, 43);
  CHECK(a.clip.samples != c.clip.samples);

  CHECK(audio::class_fundamental_hz(9) == 1550.0);

  // dominant STFT bin of class 0 maps to the bin nearest 200 Hz
  const auto lc = audio::synth_clip(0, 4.0, 42);
  const auto spec = features::stft(lc.clip);
  const auto& mid = spec.magnitudes[spec.frame_count() / 2];
  const std::size_t argmax =
      static_cast<std::size_t>(std::max_element(mid.begin(), mid.end()) - mid.begin());
  const std::size_t expect = static_cast<std::size_t>(
      std::lround(200.0 * 2048 / 16000.0));
  CHECK(argmax == expect);

  try {
    audio::synth_clip(10, 1.0, 0);
    FAIL("expected InvalidClass");
  } catch (const Error& e) {
    CHECK(e.code() == errc::invalid_class);
  }
}

TEST_CASE("load_dataset_dir skips bad files and labels the rest") {
  const fs::path root = temp_dir() / "ds1";
  fs::remove_all(root);
  fs::create_directories(root / "fold1");
  std::ofstream index(root / "index.csv");
  index << "file_name,fold,class_id\n";
  for (int i = 0; i < 3; ++i) {
    const auto lc = audio::synth_clip(i, 0.25, 7);
    audio::write_wav(lc.clip, root / "fold1" / ("c" + std::to_string(i) + ".wav"));
    index << "c" << i << ".wav,1," << i << "\n";
  }
  dump(root / "fold1" / "stereo.wav", reference_wav_bytes({1, 2}, 16000, 2));
  index << "stereo.wav,1,5\n";
  index.close();

  const auto result = audio::load_dataset_dir(root);
  CHECK(result.clips.size() == 3);
  CHECK(result.skipped == 1);
  CHECK(result.clips[2].class_id == 2);
}

TEST_CASE("load_dataset_dir error cases") {
  const fs::path root = temp_dir() / "ds_empty";
  fs::remove_all(root);
  fs::create_directories(root);
  try {
    audio::load_dataset_dir(root);
    FAIL("expected EmptyDataset");
  } catch (const Error& e) {
    CHECK(e.code() == errc::empty_dataset);
  }
  try {
    audio::load_dataset_dir(temp_dir() / "no_such_dir");
    FAIL("expected NotFound");
  } catch (const Error& e) {
    CHECK(e.code() == errc::not_found);
  }
}
