#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "fogsound/audio.hpp"
#include "fogsound/errors.hpp"

namespace fogsound::features {

inline constexpr std::size_t kMfccCount = 40;
inline constexpr std::size_t kChromaCount = 12;
inline constexpr std::size_t kMelCount = 128;
inline constexpr std::size_t kContrastCount = 7;
inline constexpr std::size_t kTonnetzCount = 6;
inline constexpr std::size_t kFeatureDim =
    kMfccCount + kChromaCount + kMelCount + kContrastCount + kTonnetzCount;
static_assert(kFeatureDim == 193);

inline constexpr std::size_t kFeatureBytes = kFeatureDim * 8;  // 1544
inline constexpr std::size_t kDefaultNFft = 2048;
inline constexpr std::size_t kDefaultHop = 512;
inline constexpr double kLogFloor = 1e-10;

/// Fixed-layout feature vector: [mfcc(40) | chroma(12) | mel(128) |
/// contrast(7) | tonnetz(6)].
struct FeatureVector {
  std::vector<double> values;  // dimension kFeatureDim

  bool operator==(const FeatureVector&) const = default;
};

struct Spectrogram {
  std::vector<std::vector<double>> magnitudes;  // [frame][bin]
  std::size_t n_fft = kDefaultNFft;
  std::size_t hop = kDefaultHop;
  int sample_rate_hz = audio::kDefaultRateHz;

  std::size_t frame_count() const { return magnitudes.size(); }
  std::size_t bin_count() const { return n_fft / 2 + 1; }
  double bin_hz(std::size_t bin) const {
    return static_cast<double>(bin) * sample_rate_hz / static_cast<double>(n_fft);
  }
};

namespace detail {

// Iterative radix-2 FFT, in place. n must be a power of two.
inline void fft(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const auto u = a[i + k];
        const auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace detail

/// Hann-windowed magnitude STFT with centered reflect padding.
/// Frame count is 1 + floor(len / hop).
inline Spectrogram stft(const audio::AudioClip& clip,
                        std::size_t n_fft = kDefaultNFft,
                        std::size_t hop = kDefaultHop) {
  if (clip.samples.empty()) fail(errc::empty_clip, "stft of empty clip");
  if (!detail::is_pow2(n_fft))
    fail(errc::invalid_range, "n_fft must be a power of two");
  if (hop == 0 || hop > n_fft)
    fail(errc::invalid_range, "hop must be in (0, n_fft]");

  const std::size_t len = clip.samples.size();
  const std::size_t pad = n_fft / 2;
  // Reflect-padded signal, normalized to [-1, 1).
  std::vector<double> x(len + 2 * pad);
  auto sample = [&clip, len](std::ptrdiff_t i) {
    // reflect without repeating the edge sample
    while (i < 0 || i >= static_cast<std::ptrdiff_t>(len)) {
      if (i < 0) i = -i;
      if (i >= static_cast<std::ptrdiff_t>(len))
        i = 2 * static_cast<std::ptrdiff_t>(len) - 2 - i;
      if (len == 1) return clip.samples[0] / 32768.0;
    }
    return clip.samples[static_cast<std::size_t>(i)] / 32768.0;
  };
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] = sample(static_cast<std::ptrdiff_t>(i) -
                  static_cast<std::ptrdiff_t>(pad));

  std::vector<double> window(n_fft);
  for (std::size_t i = 0; i < n_fft; ++i)
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i /
                                     static_cast<double>(n_fft));

  Spectrogram spec;
  spec.n_fft = n_fft;
  spec.hop = hop;
  spec.sample_rate_hz = clip.sample_rate_hz;
  const std::size_t n_frames = 1 + len / hop;
  const std::size_t n_bins = n_fft / 2 + 1;
  spec.magnitudes.assign(n_frames, std::vector<double>(n_bins, 0.0));

  std::vector<std::complex<double>> buf(n_fft);
  for (std::size_t fr = 0; fr < n_frames; ++fr) {
    const std::size_t off = fr * hop;
    for (std::size_t i = 0; i < n_fft; ++i)
      buf[i] = {x[off + i] * window[i], 0.0};
    detail::fft(buf);
    for (std::size_t b = 0; b < n_bins; ++b)
      spec.magnitudes[fr][b] = std::abs(buf[b]);
  }
  return spec;
}

inline double hz_to_mel(double hz) {
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}
inline double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

/// Triangular mel filterbank, rows = filters, columns = FFT bins.
inline std::vector<std::vector<double>> mel_filterbank(
    std::size_t n_mels = kMelCount, double f_min = 0.0, double f_max = 8000.0,
    std::size_t n_fft = kDefaultNFft, int rate = audio::kDefaultRateHz) {
  if (!(f_min < f_max) || f_max > rate / 2.0)
    fail(errc::invalid_range, "need f_min < f_max <= rate/2");
  const std::size_t n_bins = n_fft / 2 + 1;
  const double mel_min = hz_to_mel(f_min);
  const double mel_max = hz_to_mel(f_max);
  // n_mels + 2 edge frequencies, evenly spaced on the mel scale
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_min + (mel_max - mel_min) * i / (n_mels + 1.0));

  std::vector<std::vector<double>> fb(n_mels, std::vector<double>(n_bins, 0.0));
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (std::size_t b = 0; b < n_bins; ++b) {
      const double f = static_cast<double>(b) * rate / static_cast<double>(n_fft);
      double w = 0.0;
      if (f > lo && f < hi)
        w = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
      fb[m][b] = w;
    }
    // Degenerate triangles (very narrow at low bins) get their center bin.
    if (std::all_of(fb[m].begin(), fb[m].end(),
                    [](double v) { return v == 0.0; })) {
      const std::size_t center = static_cast<std::size_t>(
          std::lround(mid * n_fft / rate));
      fb[m][std::min(center, n_bins - 1)] = 1.0;
    }
  }
  return fb;
}

inline std::vector<double> filter_center_hz(std::size_t n_mels = kMelCount,
                                            double f_min = 0.0,
                                            double f_max = 8000.0) {
  const double mel_min = hz_to_mel(f_min);
  const double mel_max = hz_to_mel(f_max);
  std::vector<double> centers(n_mels);
  for (std::size_t m = 0; m < n_mels; ++m)
    centers[m] = mel_to_hz(mel_min + (mel_max - mel_min) * (m + 1) / (n_mels + 1.0));
  return centers;
}

/// Orthonormal DCT-II, first n_out coefficients.
inline std::vector<double> dct_ii(const std::vector<double>& input,
                                  std::size_t n_out) {
  const std::size_t n = input.size();
  if (n == 0 || n_out > n)
    fail(errc::invalid_length, "need 0 < n_out <= input length");
  std::vector<double> out(n_out, 0.0);
  const double norm0 = std::sqrt(1.0 / n);
  const double norm = std::sqrt(2.0 / n);
  for (std::size_t k = 0; k < n_out; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += input[i] *
             std::cos(std::numbers::pi * (i + 0.5) * k / static_cast<double>(n));
    out[k] = acc * (k == 0 ? norm0 : norm);
  }
  return out;
}

/// Inverse of the orthonormal DCT-II (full-length).
inline std::vector<double> dct_iii(const std::vector<double>& input) {
  const std::size_t n = input.size();
  if (n == 0) fail(errc::invalid_length, "empty input");
  std::vector<double> out(n, 0.0);
  const double norm0 = std::sqrt(1.0 / n);
  const double norm = std::sqrt(2.0 / n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = input[0] * norm0;
    for (std::size_t k = 1; k < n; ++k)
      acc += input[k] * norm *
             std::cos(std::numbers::pi * (i + 0.5) * k / static_cast<double>(n));
    out[i] = acc;
  }
  return out;
}

namespace detail {

inline double log_floored(double v) { return std::log(std::max(v, kLogFloor)); }

// Tonal-centroid transform of an L1-normalized chroma vector: three circles
// (fifths, minor thirds, major thirds) with radii 1, 1, 0.5.
inline std::array<double, kTonnetzCount> tonnetz_of(
    const std::array<double, kChromaCount>& chroma) {
  const double l1 = std::accumulate(chroma.begin(), chroma.end(), 0.0);
  std::array<double, kTonnetzCount> t{};
  if (l1 <= 0.0) return t;
  constexpr std::array<double, 3> mult = {7.0, 9.0, 4.0};
  constexpr std::array<double, 3> radius = {1.0, 1.0, 0.5};
  for (std::size_t p = 0; p < kChromaCount; ++p) {
    const double c = chroma[p] / l1;
    for (std::size_t d = 0; d < 3; ++d) {
      const double ang = std::numbers::pi * mult[d] * p / 6.0;
      t[2 * d] += radius[d] * std::sin(ang) * c;
      t[2 * d + 1] += radius[d] * std::cos(ang) * c;
    }
  }
  return t;
}

}  // namespace detail

/// Full 193-dim extraction: per-frame family values, averaged across frames.
inline FeatureVector extract_features(const audio::AudioClip& clip) {
  if (clip.samples.empty()) fail(errc::empty_clip, "extract_features of empty clip");
  const Spectrogram spec = stft(clip);
  const std::size_t n_frames = spec.frame_count();
  const std::size_t n_bins = spec.bin_count();
  static const std::vector<std::vector<double>> fb =
      mel_filterbank();  // defaults frozen with the extractor

  std::vector<double> mfcc_acc(kMfccCount, 0.0);
  std::array<double, kChromaCount> chroma_acc{};
  std::vector<double> mel_acc(kMelCount, 0.0);
  std::array<double, kContrastCount> contrast_acc{};
  std::array<double, kTonnetzCount> tonnetz_acc{};

  // Pitch-class index per bin (A440 reference); bin 0 (DC) excluded.
  std::vector<int> pitch_class(n_bins, -1);
  for (std::size_t b = 1; b < n_bins; ++b) {
    const double f = spec.bin_hz(b);
    const int midi = static_cast<int>(std::lround(69.0 + 12.0 * std::log2(f / 440.0)));
    pitch_class[b] = ((midi % 12) + 12) % 12;
  }

  // Octave bands for spectral contrast: six octaves up from 250 Hz plus the
  // full range as the seventh value.
  constexpr double kContrastF0 = 250.0;
  constexpr double kContrastQuantile = 0.02;

  std::vector<double> mel_power(kMelCount);
  std::vector<double> log_mel(kMelCount);
  std::vector<double> band;
  for (std::size_t fr = 0; fr < n_frames; ++fr) {
    const auto& mag = spec.magnitudes[fr];

    // mel power and log-mel
    for (std::size_t m = 0; m < kMelCount; ++m) {
      double acc = 0.0;
      for (std::size_t b = 0; b < n_bins; ++b)
        acc += fb[m][b] * mag[b] * mag[b];
      mel_power[m] = acc;
      log_mel[m] = detail::log_floored(acc);
      mel_acc[m] += log_mel[m];
    }

    // mfcc = DCT-II of the log-mel vector
    const auto mfcc = dct_ii(log_mel, kMfccCount);
    for (std::size_t k = 0; k < kMfccCount; ++k) mfcc_acc[k] += mfcc[k];

    // chroma: fold per-bin energy onto pitch classes
    std::array<double, kChromaCount> chroma{};
    for (std::size_t b = 1; b < n_bins; ++b)
      chroma[static_cast<std::size_t>(pitch_class[b])] += mag[b] * mag[b];
    for (std::size_t p = 0; p < kChromaCount; ++p) chroma_acc[p] += chroma[p];

    // spectral contrast
    auto band_contrast = [&](double lo_hz, double hi_hz) {
      band.clear();
      for (std::size_t b = 0; b < n_bins; ++b) {
        const double f = spec.bin_hz(b);
        if (f >= lo_hz && f < hi_hz) band.push_back(mag[b]);
      }
      if (band.empty()) return 0.0;
      std::sort(band.begin(), band.end());
      const std::size_t k = std::max<std::size_t>(
          1, static_cast<std::size_t>(band.size() * kContrastQuantile));
      double valley = 0.0, peak = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        valley += band[i];
        peak += band[band.size() - 1 - i];
      }
      return detail::log_floored(peak / k) - detail::log_floored(valley / k);
    };
    for (std::size_t o = 0; o < 6; ++o)
      contrast_acc[o] +=
          band_contrast(kContrastF0 * std::pow(2.0, static_cast<double>(o)),
                        kContrastF0 * std::pow(2.0, static_cast<double>(o + 1)));
    contrast_acc[6] += band_contrast(0.0, spec.sample_rate_hz / 2.0 + 1.0);

    // tonnetz from this frame's chroma
    const auto tz = detail::tonnetz_of(chroma);
    for (std::size_t k = 0; k < kTonnetzCount; ++k) tonnetz_acc[k] += tz[k];
  }

  FeatureVector fv;
  fv.values.reserve(kFeatureDim);
  const double inv = 1.0 / static_cast<double>(n_frames);
  for (double v : mfcc_acc) fv.values.push_back(v * inv);
  for (double v : chroma_acc) fv.values.push_back(v * inv);
  for (double v : mel_acc) fv.values.push_back(v * inv);
  for (double v : contrast_acc) fv.values.push_back(v * inv);
  for (double v : tonnetz_acc) fv.values.push_back(v * inv);
  return fv;
}

/// Reduced "mfcc40" profile: the MFCC family only, frame-averaged. Cheap
/// enough for fast unit tests; not wire-compatible with the 193-dim vector.
inline FeatureVector extract_mfcc40(const audio::AudioClip& clip) {
  if (clip.samples.empty()) fail(errc::empty_clip, "extract_mfcc40 of empty clip");
  const Spectrogram spec = stft(clip);
  const std::size_t n_bins = spec.bin_count();
  static const std::vector<std::vector<double>> fb = mel_filterbank();

  std::vector<double> mfcc_acc(kMfccCount, 0.0);
  std::vector<double> log_mel(kMelCount);
  for (const auto& mag : spec.magnitudes) {
    for (std::size_t m = 0; m < kMelCount; ++m) {
      double acc = 0.0;
      for (std::size_t b = 0; b < n_bins; ++b)
        acc += fb[m][b] * mag[b] * mag[b];
      log_mel[m] = detail::log_floored(acc);
    }
    const auto mfcc = dct_ii(log_mel, kMfccCount);
    for (std::size_t k = 0; k < kMfccCount; ++k) mfcc_acc[k] += mfcc[k];
  }
  FeatureVector fv;
  fv.values.reserve(kMfccCount);
  const double inv = 1.0 / static_cast<double>(spec.frame_count());
  for (double v : mfcc_acc) fv.values.push_back(v * inv);
  return fv;
}

/// 193 little-endian IEEE-754 doubles; exactly 1,544 bytes.
inline std::vector<std::uint8_t> serialize_features(const FeatureVector& fv) {
  if (fv.values.size() != kFeatureDim)
    fail(errc::wrong_dimension, "expected dimension 193, got " +
                                    std::to_string(fv.values.size()));
  std::vector<std::uint8_t> out;
  out.reserve(kFeatureBytes);
  for (double v : fv.values) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i)
      out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  return out;
}

inline FeatureVector deserialize_features(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() != kFeatureBytes)
    fail(errc::wrong_dimension, "expected 1544 bytes, got " +
                                    std::to_string(bytes.size()));
  FeatureVector fv;
  fv.values.resize(kFeatureDim);
  for (std::size_t k = 0; k < kFeatureDim; ++k) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
      bits |= std::uint64_t(bytes[8 * k + static_cast<std::size_t>(i)]) << (8 * i);
    std::memcpy(&fv.values[k], &bits, 8);
  }
  return fv;
}

/// Text form: one decimal value per line (round-trips through strtod).
inline void write_features_text(const FeatureVector& fv,
                                const std::filesystem::path& path) {
  if (fv.values.size() != kFeatureDim)
    fail(errc::wrong_dimension, "expected dimension 193");
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(errc::io_failure, "cannot open " + path.string());
  out.precision(17);
  for (double v : fv.values) out << v << '\n';
  if (!out) fail(errc::io_failure, "write failed: " + path.string());
}

inline FeatureVector read_features_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(errc::not_found, "cannot open " + path.string());
  FeatureVector fv;
  double v;
  while (in >> v) fv.values.push_back(v);
  if (fv.values.size() != kFeatureDim)
    fail(errc::wrong_dimension, "expected 193 lines, got " +
                                    std::to_string(fv.values.size()));
  return fv;
}

}  // namespace fogsound::features
