#pragma once

#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "streamcnn/model.hpp"
#include "streamcnn/tensor.hpp"

namespace streamcnn::testing {

inline std::string data_path(const std::string& rel) { return std::string(STREAMCNN_DATA_DIR) + "/" + rel; }

inline const ModelGraph& svhn_baseline() {
  static const ModelGraph g = load_model(data_path("models/svhn_baseline.json"));
  return g;
}

inline const ModelGraph& svhn_aq() {
  static const ModelGraph g = load_model(data_path("models/svhn_aq.json"));
  return g;
}

/// Architecture-only copy: every parameter set to `value`.
inline ModelGraph with_constant_parameters(ModelGraph g, double value) {
  for (auto& layer : g.layers) {
    for (double& w : layer.weights) w = value;
    for (double& b : layer.bias) b = value;
  }
  return g;
}

inline Tensor uniform_tensor(const Shape& shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(shape);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

inline Tensor scaled_image(const Shape& shape, std::uint64_t seed) {
  Tensor x = random_image(shape, seed);
  for (double& v : x.values()) v /= 255.0;
  return x;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace streamcnn::testing
