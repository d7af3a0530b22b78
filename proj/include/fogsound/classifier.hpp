#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "fogsound/errors.hpp"
#include "fogsound/features.hpp"

namespace fogsound::classifier {

inline constexpr std::array<std::size_t, 4> kLayerDims = {193, 280, 300, 10};
inline constexpr int kClassCount = 10;
inline constexpr int kDefaultEpochs = 5000;
inline constexpr double kDefaultLearningRate = 0.1;

/// One dense layer: row-major weights (out x in) plus bias.
struct Layer {
  std::size_t in = 0, out = 0;
  std::vector<double> weights;  // out * in, row-major
  std::vector<double> biases;   // out

  bool operator==(const Layer&) const = default;
};

/// 193-280-300-10 MLP, ReLU hidden, softmax output. input_mean/input_scale
/// hold the feature standardization fitted at training time (identity until
/// then); they are frozen preprocessing, not trained parameters.
struct MlpModel {
  std::vector<Layer> layers;  // 3 layers
  std::vector<double> input_mean;
  std::vector<double> input_scale;

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.biases.size();
    return n;
  }
  bool operator==(const MlpModel&) const = default;
};

struct TrainSpec {
  int epochs = kDefaultEpochs;
  double learning_rate = kDefaultLearningRate;
  std::uint64_t seed = 0;
  bool full_batch = true;
};

struct Dataset {
  struct Item {
    features::FeatureVector fv;
    int class_id = 0;
  };
  std::vector<Item> items;
};

namespace detail {

inline double uniform01(std::mt19937_64& rng) {
  return (rng() >> 11) * 0x1.0p-53;
}

inline std::uint32_t crc32(const std::uint8_t* data, std::size_t len) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k)
        c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  std::uint32_t crc = 0xffffffffu;
  for (std::size_t i = 0; i < len; ++i)
    crc = table[(crc ^ data[i]) & 0xff] ^ (crc >> 8);
  return crc ^ 0xffffffffu;
}

}  // namespace detail

/// Glorot-uniform weights, zero biases, deterministic per seed.
inline MlpModel init_model(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  MlpModel m;
  for (std::size_t li = 0; li + 1 < kLayerDims.size(); ++li) {
    Layer l;
    l.in = kLayerDims[li];
    l.out = kLayerDims[li + 1];
    l.weights.resize(l.out * l.in);
    l.biases.assign(l.out, 0.0);
    const double limit = std::sqrt(6.0 / static_cast<double>(l.in + l.out));
    for (double& w : l.weights)
      w = (2.0 * detail::uniform01(rng) - 1.0) * limit;
    m.layers.push_back(std::move(l));
  }
  m.input_mean.assign(kLayerDims[0], 0.0);
  m.input_scale.assign(kLayerDims[0], 1.0);
  return m;
}

namespace detail {

struct ForwardCache {
  std::vector<double> x0;                     // standardized input
  std::vector<std::vector<double>> pre;       // pre-activations per layer
  std::vector<std::vector<double>> act;       // post-activations per layer
  std::vector<double> probs;
};

inline void softmax_inplace(std::vector<double>& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

inline ForwardCache forward_cached(const MlpModel& m,
                                   const std::vector<double>& input) {
  ForwardCache c;
  c.x0.resize(input.size());
  for (std::size_t i = 0; i < input.size(); ++i)
    c.x0[i] = (input[i] - m.input_mean[i]) * m.input_scale[i];
  const std::vector<double>* x = &c.x0;
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    const Layer& l = m.layers[li];
    std::vector<double> z(l.out);
    for (std::size_t o = 0; o < l.out; ++o) {
      const double* wrow = &l.weights[o * l.in];
      double acc = l.biases[o];
      for (std::size_t i = 0; i < l.in; ++i) acc += wrow[i] * (*x)[i];
      z[o] = acc;
    }
    c.pre.push_back(z);
    if (li + 1 < m.layers.size()) {
      for (double& v : z) v = std::max(0.0, v);  // ReLU
      c.act.push_back(std::move(z));
      x = &c.act.back();
    } else {
      softmax_inplace(z);
      c.probs = std::move(z);
    }
  }
  return c;
}

}  // namespace detail

/// Softmax class probabilities for one feature vector.
inline std::vector<double> forward(const MlpModel& m,
                                   const features::FeatureVector& fv) {
  if (fv.values.size() != kLayerDims[0])
    fail(errc::dimension_mismatch, "expected input dimension 193, got " +
                                       std::to_string(fv.values.size()));
  return detail::forward_cached(m, fv.values).probs;
}

/// Argmax of forward; ties broken by lowest class index.
inline int classify(const MlpModel& m, const features::FeatureVector& fv) {
  const auto p = forward(m, fv);
  int best = 0;
  for (int k = 1; k < kClassCount; ++k)
    if (p[static_cast<std::size_t>(k)] > p[static_cast<std::size_t>(best)])
      best = k;
  return best;
}

/// Mean categorical cross-entropy over the dataset.
inline double loss(const MlpModel& m, const Dataset& ds) {
  if (ds.items.empty()) fail(errc::empty_dataset, "loss of empty dataset");
  double acc = 0.0;
  for (const auto& item : ds.items) {
    const auto p = forward(m, item.fv);
    acc += -std::log(std::max(p[static_cast<std::size_t>(item.class_id)], 1e-300));
  }
  return acc / static_cast<double>(ds.items.size());
}

/// Parameter-shaped gradients of loss (mean over items), via backprop.
struct Gradients {
  std::vector<Layer> layers;  // same shapes as the model
};

inline Gradients grad(const MlpModel& m, const Dataset& ds) {
  if (ds.items.empty()) fail(errc::empty_dataset, "grad of empty dataset");
  Gradients g;
  for (const auto& l : m.layers) {
    Layer gl;
    gl.in = l.in;
    gl.out = l.out;
    gl.weights.assign(l.weights.size(), 0.0);
    gl.biases.assign(l.biases.size(), 0.0);
    g.layers.push_back(std::move(gl));
  }
  const double inv_n = 1.0 / static_cast<double>(ds.items.size());
  for (const auto& item : ds.items) {
    if (item.fv.values.size() != kLayerDims[0])
      fail(errc::dimension_mismatch, "bad feature dimension in dataset");
    const auto cache = detail::forward_cached(m, item.fv.values);
    // delta at output: softmax + cross-entropy
    std::vector<double> delta = cache.probs;
    delta[static_cast<std::size_t>(item.class_id)] -= 1.0;
    for (std::size_t li = m.layers.size(); li-- > 0;) {
      const Layer& l = m.layers[li];
      Layer& gl = g.layers[li];
      const std::vector<double>& in_act =
          li == 0 ? cache.x0 : cache.act[li - 1];
      for (std::size_t o = 0; o < l.out; ++o) {
        const double d = delta[o] * inv_n;
        gl.biases[o] += d;
        double* grow = &gl.weights[o * l.in];
        for (std::size_t i = 0; i < l.in; ++i) grow[i] += d * in_act[i];
      }
      if (li == 0) break;
      // propagate through weights and the previous ReLU
      std::vector<double> prev(l.in, 0.0);
      for (std::size_t o = 0; o < l.out; ++o) {
        const double d = delta[o];
        const double* wrow = &l.weights[o * l.in];
        for (std::size_t i = 0; i < l.in; ++i) prev[i] += wrow[i] * d;
      }
      for (std::size_t i = 0; i < l.in; ++i)
        if (cache.pre[li - 1][i] <= 0.0) prev[i] = 0.0;
      delta = std::move(prev);
    }
  }
  return g;
}

/// Fits input standardization to the dataset and stores it on the model.
inline void fit_standardization(MlpModel& m, const Dataset& ds) {
  if (ds.items.empty()) fail(errc::empty_dataset, "standardize on empty dataset");
  const std::size_t d = kLayerDims[0];
  std::vector<double> mean(d, 0.0), var(d, 0.0);
  for (const auto& item : ds.items)
    for (std::size_t i = 0; i < d; ++i) mean[i] += item.fv.values[i];
  for (double& v : mean) v /= static_cast<double>(ds.items.size());
  for (const auto& item : ds.items)
    for (std::size_t i = 0; i < d; ++i) {
      const double e = item.fv.values[i] - mean[i];
      var[i] += e * e;
    }
  m.input_mean = mean;
  m.input_scale.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double sd = std::sqrt(var[i] / static_cast<double>(ds.items.size()));
    m.input_scale[i] = sd > 1e-12 ? 1.0 / sd : 1.0;
  }
}

/// Full-batch gradient descent. Deterministic per (model, dataset, spec).
inline MlpModel train(MlpModel model, const Dataset& ds, const TrainSpec& spec) {
  if (ds.items.empty()) fail(errc::empty_dataset, "train on empty dataset");
  if (spec.epochs < 0 || spec.learning_rate <= 0.0)
    fail(errc::invalid_config, "epochs >= 0 and learning_rate > 0 required");
  for (int e = 0; e < spec.epochs; ++e) {
    const Gradients g = grad(model, ds);
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
      Layer& l = model.layers[li];
      const Layer& gl = g.layers[li];
      for (std::size_t i = 0; i < l.weights.size(); ++i)
        l.weights[i] -= spec.learning_rate * gl.weights[i];
      for (std::size_t i = 0; i < l.biases.size(); ++i)
        l.biases[i] -= spec.learning_rate * gl.biases[i];
    }
    if ((e + 1) % 50 == 0 || e + 1 == spec.epochs) {
      const double cur = loss(model, ds);
      if (!std::isfinite(cur))
        fail(errc::divergence_detected,
             "non-finite loss at epoch " + std::to_string(e + 1));
    }
  }
  return model;
}

/// Seeded per-class stratified split; train gets floor(fraction * n_c) of
/// each class.
inline std::pair<Dataset, Dataset> split_dataset(const Dataset& ds,
                                                 double train_fraction,
                                                 std::uint64_t seed) {
  if (ds.items.size() < 10)
    fail(errc::too_small, "need at least 10 items to split");
  std::array<std::vector<std::size_t>, kClassCount> by_class;
  for (std::size_t i = 0; i < ds.items.size(); ++i) {
    const int c = ds.items[i].class_id;
    if (c < 0 || c >= kClassCount)
      fail(errc::invalid_class, "class_id out of range in dataset");
    by_class[static_cast<std::size_t>(c)].push_back(i);
  }
  std::mt19937_64 rng(seed);
  Dataset train_set, test_set;
  for (auto& idx : by_class) {
    // Fisher-Yates with our own uniform draw, for cross-platform determinism.
    for (std::size_t i = idx.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(
          detail::uniform01(rng) * static_cast<double>(i));
      std::swap(idx[i - 1], idx[std::min(j, i - 1)]);
    }
    const std::size_t n_train = static_cast<std::size_t>(
        std::floor(train_fraction * static_cast<double>(idx.size())));
    for (std::size_t k = 0; k < idx.size(); ++k)
      (k < n_train ? train_set : test_set).items.push_back(ds.items[idx[k]]);
  }
  return {std::move(train_set), std::move(test_set)};
}

/// Fraction of items where classify matches the label.
inline double evaluate(const MlpModel& m, const Dataset& ds) {
  if (ds.items.empty()) fail(errc::empty_dataset, "evaluate on empty dataset");
  std::size_t hits = 0;
  for (const auto& item : ds.items)
    if (classify(m, item.fv) == item.class_id) ++hits;
  return static_cast<double>(hits) / static_cast<double>(ds.items.size());
}

// Model file: "FMLP", u16 version, u16 layer count, u32 dims, f64 LE
// standardization vectors then per-layer weights and biases, trailing CRC32.
inline constexpr std::uint16_t kModelVersion = 1;

inline void save_model(const MlpModel& m, const std::filesystem::path& path) {
  std::vector<std::uint8_t> out;
  auto u16 = [&out](std::uint16_t v) {
    out.push_back(v & 0xff);
    out.push_back(v >> 8);
  };
  auto u32 = [&out](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xff);
  };
  auto f64 = [&out](double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i)
      out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  };
  out.insert(out.end(), {'F', 'M', 'L', 'P'});
  u16(kModelVersion);
  u16(static_cast<std::uint16_t>(kLayerDims.size()));
  for (std::size_t d : kLayerDims) u32(static_cast<std::uint32_t>(d));
  for (double v : m.input_mean) f64(v);
  for (double v : m.input_scale) f64(v);
  for (const auto& l : m.layers) {
    for (double v : l.weights) f64(v);
    for (double v : l.biases) f64(v);
  }
  u32(detail::crc32(out.data(), out.size()));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(errc::io_failure, "cannot open " + path.string());
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  if (!f) fail(errc::io_failure, "write failed: " + path.string());
}

inline MlpModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(errc::not_found, "cannot open " + path.string());
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
  if (buf.size() < 8 || std::memcmp(buf.data(), "FMLP", 4) != 0)
    fail(errc::corrupt_model, "bad magic: " + path.string());
  std::size_t pos = 4;
  auto u16 = [&] {
    if (pos + 2 > buf.size()) fail(errc::corrupt_model, "truncated");
    const std::uint16_t v = static_cast<std::uint16_t>(buf[pos] | buf[pos + 1] << 8);
    pos += 2;
    return v;
  };
  auto u32 = [&] {
    if (pos + 4 > buf.size()) fail(errc::corrupt_model, "truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(buf[pos + static_cast<std::size_t>(i)]) << (8 * i);
    pos += 4;
    return v;
  };
  auto f64 = [&] {
    if (pos + 8 > buf.size()) fail(errc::corrupt_model, "truncated");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= std::uint64_t(buf[pos + static_cast<std::size_t>(i)]) << (8 * i);
    pos += 8;
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  };
  const std::uint16_t version = u16();
  if (version != kModelVersion)
    fail(errc::version_mismatch, "unsupported model version " +
                                     std::to_string(version));
  const std::uint16_t n_layers = u16();
  if (n_layers != kLayerDims.size())
    fail(errc::corrupt_model, "unexpected layer count");
  for (std::size_t d : kLayerDims)
    if (u32() != d) fail(errc::corrupt_model, "unexpected layer dimensions");

  // Verify the trailing checksum before decoding parameters.
  if (buf.size() < pos + 4) fail(errc::corrupt_model, "truncated");
  const std::uint32_t stored =
      std::uint32_t(buf[buf.size() - 4]) | std::uint32_t(buf[buf.size() - 3]) << 8 |
      std::uint32_t(buf[buf.size() - 2]) << 16 |
      std::uint32_t(buf[buf.size() - 1]) << 24;
  if (detail::crc32(buf.data(), buf.size() - 4) != stored)
    fail(errc::corrupt_model, "checksum mismatch: " + path.string());

  MlpModel m;
  m.input_mean.resize(kLayerDims[0]);
  m.input_scale.resize(kLayerDims[0]);
  for (double& v : m.input_mean) v = f64();
  for (double& v : m.input_scale) v = f64();
  for (std::size_t li = 0; li + 1 < kLayerDims.size(); ++li) {
    Layer l;
    l.in = kLayerDims[li];
    l.out = kLayerDims[li + 1];
    l.weights.resize(l.out * l.in);
    l.biases.resize(l.out);
    for (double& v : l.weights) v = f64();
    for (double& v : l.biases) v = f64();
    m.layers.push_back(std::move(l));
  }
  if (pos + 4 != buf.size())
    fail(errc::corrupt_model, "trailing bytes in model file");
  return m;
}

}  // namespace fogsound::classifier
