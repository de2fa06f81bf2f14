#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "streamcnn/fixed_point.hpp"
#include "streamcnn/quantizer.hpp"
#include "streamcnn/tensor.hpp"

namespace streamcnn {

enum class LayerKind { Conv2D, MaxPool, AvgPool, Dense, ReLU, Softmax, Flatten, ScaleBias };
enum class Padding { Valid, Same };

std::string to_string(LayerKind kind);
std::string to_string(Padding padding);

/// Errors from model ingestion and validation. Messages name the layer.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Layer {
  std::string name;
  LayerKind kind = LayerKind::ReLU;

  // Conv2D: square kernel_size x kernel_size, `filters` outputs.
  int kernel_size = 0;
  int filters = 0;
  int stride = 1;
  Padding padding = Padding::Valid;
  // MaxPool / AvgPool: non-overlapping pool x pool windows.
  int pool = 0;
  // Dense
  int units = 0;

  // Conv2D [j][k][c][n], Dense [in][out], ScaleBias gamma[c].
  std::vector<double> weights;
  // Conv2D/Dense bias[n] or ScaleBias beta[c]; empty when absent.
  std::vector<double> bias;
  // False for biases that only exist because a scale/bias layer was folded in.
  bool bias_trainable = false;

  fx::FxFormat weight_format = fx::kDefaultFormat;
  fx::FxFormat output_format = fx::kDefaultFormat;
  fx::QuantizerSpec quantizer{};
  fx::Rounding rounding = fx::Rounding::HalfEven;
  fx::Overflow overflow = fx::Overflow::Saturate;
  int reuse_factor = 1;

  bool has_parameters() const {
    return kind == LayerKind::Conv2D || kind == LayerKind::Dense || kind == LayerKind::ScaleBias;
  }
  bool is_compute() const { return kind == LayerKind::Conv2D || kind == LayerKind::Dense; }
  bool has_bias() const { return !bias.empty(); }

  static Layer conv2d(std::string name, int kernel, int filters, int stride = 1, Padding padding = Padding::Valid);
  static Layer dense(std::string name, int units);
  static Layer max_pool(std::string name, int pool);
  static Layer avg_pool(std::string name, int pool);
  static Layer relu(std::string name);
  static Layer softmax(std::string name);
  static Layer flatten(std::string name);
  static Layer scale_bias(std::string name);
};

/// Padded geometry of a convolution over an H x W x C input.
/// "same" follows the usual convention: V = ceil(H / stride), with the odd
/// padding row/column placed at the bottom/right.
struct ConvGeometry {
  std::size_t height = 0, width = 0, channels = 0;
  int kernel = 1, stride = 1;
  std::size_t pad_top = 0, pad_left = 0, pad_bottom = 0, pad_right = 0;
  std::size_t padded_height = 0, padded_width = 0;
  std::size_t out_height = 0, out_width = 0;
};

ConvGeometry conv_geometry(const Shape& input, int kernel, int stride, Padding padding);

/// Non-overlapping pooling; trailing rows/columns that do not fill a window
/// are dropped (out = floor(in / p)).
struct PoolGeometry {
  std::size_t height = 0, width = 0, channels = 0;
  int pool = 1;
  std::size_t out_height = 0, out_width = 0;
};

PoolGeometry pool_geometry(const Shape& input, int pool);

struct ModelGraph {
  std::string name;
  Shape input_shape;
  fx::FxFormat input_format = fx::kDefaultFormat;
  std::vector<Layer> layers;
  // Filled by infer_shapes.
  std::vector<Shape> input_shapes;
  std::vector<Shape> output_shapes;

  Shape output_shape() const { return output_shapes.empty() ? input_shape : output_shapes.back(); }
  const Layer* find(const std::string& layer_name) const;
  Layer* find(const std::string& layer_name);
  /// Format of the values entering layer i in fixed-point mode.
  fx::FxFormat input_format_of(std::size_t i) const { return i == 0 ? input_format : layers[i - 1].output_format; }
};

/// Expected parameter counts for a layer given its input shape.
std::size_t expected_weight_count(const Layer& layer, const Shape& input);
std::size_t expected_bias_count(const Layer& layer, const Shape& input);

/// Output shape of one layer; throws ModelError naming the layer.
Shape layer_output_shape(const Layer& layer, const Shape& input);

/// Infers and validates every layer's input/output shape and parameter sizes.
ModelGraph infer_shapes(ModelGraph g);

/// Parses a manifest. With `weights_path` empty, the manifest's own
/// "weights_file" (relative to the manifest) is used; if that is absent too,
/// the graph is returned with zero-filled parameters.
ModelGraph load_model(const std::filesystem::path& manifest_path, const std::filesystem::path& weights_path = {});

/// Parses manifest text against an in-memory weight blob.
ModelGraph parse_model(const std::string& manifest_json, const std::vector<std::uint8_t>& weights, bool require_weights);

/// Canonical manifest text (weights referenced by byte offset into the blob).
std::string manifest_json(const ModelGraph& g, const std::string& weights_file = {});
/// Raw little-endian float32 parameters, in manifest order.
std::vector<std::uint8_t> weights_blob(const ModelGraph& g);

/// Writes the manifest and the weight file; the manifest records the weight
/// file's name relative to the manifest's directory.
void save_model(const ModelGraph& g, const std::filesystem::path& manifest_path,
                const std::filesystem::path& weights_path);

/// Folds every ScaleBias that directly follows a Conv2D or Dense into that
/// layer: w'[..., n] = w[..., n] * gamma[n], b'[n] = b[n] * gamma[n] + beta[n].
/// ScaleBias layers after any other kind stay as standalone layers; a
/// ScaleBias in first position is an error.
ModelGraph fuse_scale_bias(ModelGraph g);

/// Deterministic synthetic parameters: He-normal conv/dense weights clipped to
/// [-1.5, 1.5], scale in [0.5, 1.5], small shifts and biases.
ModelGraph synthesize_weights(ModelGraph g, std::uint64_t seed);

// -- ingestion -----------------------------------------------------------------

/// u8 image tensor (H, W, C) stored as doubles 0..255.
Tensor load_image(const std::filesystem::path& path, const Shape& raw_shape);
Tensor load_png(const std::filesystem::path& path);
Tensor load_raw_u8(const std::filesystem::path& path, const Shape& shape);
Tensor load_raw_f32(const std::filesystem::path& path, const Shape& shape);
void save_raw_f32(const std::filesystem::path& path, const Tensor& t);

/// out = (image / 255 - mean) / std, element-wise.
Tensor preprocess(const Tensor& image, const Tensor& mean, const Tensor& stddev);

/// Random u8 image (values 0..255) for demos and probes.
Tensor random_image(const Shape& shape, std::uint64_t seed);

}  // namespace streamcnn
