#include "streamcnn/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace streamcnn {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv2D: return "conv2d";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::AvgPool: return "avgpool";
    case LayerKind::Dense: return "dense";
    case LayerKind::ReLU: return "relu";
    case LayerKind::Softmax: return "softmax";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::ScaleBias: return "scale_bias";
  }
  return "unknown";
}

std::string to_string(Padding padding) { return padding == Padding::Valid ? "valid" : "same"; }

Layer Layer::conv2d(std::string name, int kernel, int filters, int stride, Padding padding) {
  Layer l;
  l.name = std::move(name);
  l.kind = LayerKind::Conv2D;
  l.kernel_size = kernel;
  l.filters = filters;
  l.stride = stride;
  l.padding = padding;
  return l;
}

Layer Layer::dense(std::string name, int units) {
  Layer l;
  l.name = std::move(name);
  l.kind = LayerKind::Dense;
  l.units = units;
  return l;
}

Layer Layer::max_pool(std::string name, int pool) {
  Layer l;
  l.name = std::move(name);
  l.kind = LayerKind::MaxPool;
  l.pool = pool;
  return l;
}

Layer Layer::avg_pool(std::string name, int pool) {
  Layer l = max_pool(std::move(name), pool);
  l.kind = LayerKind::AvgPool;
  return l;
}

Layer Layer::relu(std::string name) {
  Layer l;
  l.name = std::move(name);
  l.kind = LayerKind::ReLU;
  return l;
}

Layer Layer::softmax(std::string name) {
  Layer l = relu(std::move(name));
  l.kind = LayerKind::Softmax;
  return l;
}

Layer Layer::flatten(std::string name) {
  Layer l = relu(std::move(name));
  l.kind = LayerKind::Flatten;
  return l;
}

Layer Layer::scale_bias(std::string name) {
  Layer l = relu(std::move(name));
  l.kind = LayerKind::ScaleBias;
  return l;
}

ConvGeometry conv_geometry(const Shape& input, int kernel, int stride, Padding padding) {
  if (input.size() != 3) throw ShapeError("convolution expects an (H, W, C) input, got " + shape_to_string(input));
  if (kernel < 1) throw ShapeError("kernel size must be >= 1");
  if (stride < 1) throw ShapeError("stride must be >= 1");
  ConvGeometry g;
  g.height = input[0];
  g.width = input[1];
  g.channels = input[2];
  g.kernel = kernel;
  g.stride = stride;
  const auto k = static_cast<std::size_t>(kernel);
  const auto s = static_cast<std::size_t>(stride);
  if (padding == Padding::Valid) {
    if (g.height < k || g.width < k) {
      throw ShapeError("kernel exceeds input: " + std::to_string(kernel) + "x" + std::to_string(kernel) + " over " +
                       shape_to_string(input));
    }
    g.out_height = (g.height - k) / s + 1;
    g.out_width = (g.width - k) / s + 1;
  } else {
    g.out_height = (g.height + s - 1) / s;
    g.out_width = (g.width + s - 1) / s;
    const auto pad_h = (g.out_height - 1) * s + k > g.height ? (g.out_height - 1) * s + k - g.height : 0;
    const auto pad_w = (g.out_width - 1) * s + k > g.width ? (g.out_width - 1) * s + k - g.width : 0;
    g.pad_top = pad_h / 2;
    g.pad_bottom = pad_h - g.pad_top;
    g.pad_left = pad_w / 2;
    g.pad_right = pad_w - g.pad_left;
  }
  g.padded_height = g.height + g.pad_top + g.pad_bottom;
  g.padded_width = g.width + g.pad_left + g.pad_right;
  if (g.out_height == 0 || g.out_width == 0) throw ShapeError("convolution produces an empty output");
  return g;
}

PoolGeometry pool_geometry(const Shape& input, int pool) {
  if (input.size() != 3) throw ShapeError("pooling expects an (H, W, C) input, got " + shape_to_string(input));
  if (pool < 1) throw ShapeError("pool size must be >= 1");
  PoolGeometry g;
  g.height = input[0];
  g.width = input[1];
  g.channels = input[2];
  g.pool = pool;
  g.out_height = g.height / static_cast<std::size_t>(pool);
  g.out_width = g.width / static_cast<std::size_t>(pool);
  if (g.out_height == 0 || g.out_width == 0) {
    throw ShapeError("pool size " + std::to_string(pool) + " exceeds input " + shape_to_string(input));
  }
  return g;
}

const Layer* ModelGraph::find(const std::string& layer_name) const {
  for (const auto& l : layers)
    if (l.name == layer_name) return &l;
  return nullptr;
}

Layer* ModelGraph::find(const std::string& layer_name) {
  for (auto& l : layers)
    if (l.name == layer_name) return &l;
  return nullptr;
}

std::size_t expected_weight_count(const Layer& layer, const Shape& input) {
  switch (layer.kind) {
    case LayerKind::Conv2D:
      return static_cast<std::size_t>(layer.kernel_size * layer.kernel_size) * input.back() *
             static_cast<std::size_t>(layer.filters);
    case LayerKind::Dense:
      return element_count(input) * static_cast<std::size_t>(layer.units);
    case LayerKind::ScaleBias:
      return input.back();
    default:
      return 0;
  }
}

std::size_t expected_bias_count(const Layer& layer, const Shape& input) {
  switch (layer.kind) {
    case LayerKind::Conv2D: return static_cast<std::size_t>(layer.filters);
    case LayerKind::Dense: return static_cast<std::size_t>(layer.units);
    case LayerKind::ScaleBias: return input.back();
    default: return 0;
  }
}

Shape layer_output_shape(const Layer& layer, const Shape& in) {
  const auto fail = [&](const std::string& what) { return ModelError("layer '" + layer.name + "': " + what); };
  switch (layer.kind) {
    case LayerKind::Conv2D: {
      if (layer.filters < 1) throw fail("filters must be >= 1");
      try {
        const auto g = conv_geometry(in, layer.kernel_size, layer.stride, layer.padding);
        return {g.out_height, g.out_width, static_cast<std::size_t>(layer.filters)};
      } catch (const ShapeError& e) {
        throw fail(e.what());
      }
    }
    case LayerKind::MaxPool:
    case LayerKind::AvgPool:
      try {
        const auto g = pool_geometry(in, layer.pool);
        return {g.out_height, g.out_width, g.channels};
      } catch (const ShapeError& e) {
        throw fail(e.what());
      }
    case LayerKind::Dense:
      if (layer.units < 1) throw fail("units must be >= 1");
      if (in.size() != 1) throw fail("dense expects a flattened input, got " + shape_to_string(in));
      return {static_cast<std::size_t>(layer.units)};
    case LayerKind::Flatten:
      return {element_count(in)};
    case LayerKind::ReLU:
    case LayerKind::Softmax:
    case LayerKind::ScaleBias:
      return in;
  }
  throw fail("unknown layer kind");
}

ModelGraph infer_shapes(ModelGraph g) {
  if (g.layers.empty()) throw ModelError("empty model");
  if (g.input_shape.empty() || element_count(g.input_shape) == 0) throw ModelError("model input shape is not set");
  g.input_shapes.clear();
  g.output_shapes.clear();
  Shape current = g.input_shape;
  for (auto& layer : g.layers) {
    if (layer.reuse_factor < 1) throw ModelError("layer '" + layer.name + "': reuse factor must be >= 1");
    if (!layer.weight_format.valid() || !layer.output_format.valid()) {
      throw ModelError("layer '" + layer.name + "': invalid fixed-point format");
    }
    Shape next = layer_output_shape(layer, current);
    if (layer.has_parameters()) {
      const auto wc = expected_weight_count(layer, current);
      if (layer.weights.size() != wc) {
        throw ModelError("layer '" + layer.name + "': shape mismatch, expected " + std::to_string(wc) +
                         " weights for input " + shape_to_string(current) + ", got " +
                         std::to_string(layer.weights.size()));
      }
      const auto bc = expected_bias_count(layer, current);
      if (!layer.bias.empty() && layer.bias.size() != bc) {
        throw ModelError("layer '" + layer.name + "': shape mismatch, expected " + std::to_string(bc) +
                         " bias terms, got " + std::to_string(layer.bias.size()));
      }
      if (layer.kind == LayerKind::ScaleBias && layer.bias.empty()) layer.bias.assign(bc, 0.0);
    }
    g.input_shapes.push_back(current);
    g.output_shapes.push_back(next);
    current = std::move(next);
  }
  return g;
}

ModelGraph fuse_scale_bias(ModelGraph g) {
  std::vector<Layer> out;
  out.reserve(g.layers.size());
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    Layer& layer = g.layers[i];
    if (layer.kind != LayerKind::ScaleBias) {
      out.push_back(std::move(layer));
      continue;
    }
    if (out.empty()) throw ModelError("layer '" + layer.name + "': scale_bias has no preceding layer to fold into");
    Layer& prev = out.back();
    if (!prev.is_compute()) {
      out.push_back(std::move(layer));
      continue;
    }
    const std::size_t n_out = prev.kind == LayerKind::Conv2D ? static_cast<std::size_t>(prev.filters)
                                                               : static_cast<std::size_t>(prev.units);
    if (layer.weights.size() != n_out) {
      throw ModelError("layer '" + layer.name + "': scale has " + std::to_string(layer.weights.size()) +
                       " channels but '" + prev.name + "' produces " + std::to_string(n_out));
    }
    for (std::size_t idx = 0; idx < prev.weights.size(); ++idx) prev.weights[idx] *= layer.weights[idx % n_out];
    std::vector<double> folded(n_out);
    for (std::size_t n = 0; n < n_out; ++n) {
      const double b = prev.bias.empty() ? 0.0 : prev.bias[n];
      const double beta = layer.bias.empty() ? 0.0 : layer.bias[n];
      folded[n] = b * layer.weights[n] + beta;
    }
    prev.bias = std::move(folded);
    prev.output_format = layer.output_format;
  }
  g.layers = std::move(out);
  return infer_shapes(std::move(g));
}

namespace {
// Parameters live in float32 files; keep synthetic values float32-exact.
double as_f32(double v) { return static_cast<double>(static_cast<float>(v)); }
}  // namespace

ModelGraph synthesize_weights(ModelGraph g, std::uint64_t seed) {
  g = infer_shapes(std::move(g));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    Layer& layer = g.layers[i];
    const Shape& in = g.input_shapes[i];
    switch (layer.kind) {
      case LayerKind::Conv2D:
      case LayerKind::Dense: {
        const std::size_t n_out = layer.kind == LayerKind::Conv2D ? static_cast<std::size_t>(layer.filters)
                                                                    : static_cast<std::size_t>(layer.units);
        const std::size_t count = expected_weight_count(layer, in);
        const double fan_in = static_cast<double>(count / n_out);
        const double sigma = std::sqrt(2.0 / fan_in);
        layer.weights.resize(count);
        for (double& w : layer.weights) w = as_f32(std::clamp(normal(rng) * sigma, -1.5, 1.5));
        if (!layer.bias.empty())
          for (double& b : layer.bias) b = as_f32(0.05 * normal(rng));
        break;
      }
      case LayerKind::ScaleBias:
        layer.weights.resize(in.back());
        layer.bias.resize(in.back());
        for (double& gamma : layer.weights) gamma = as_f32(0.5 + unit(rng));
        for (double& beta : layer.bias) beta = as_f32(0.1 * normal(rng));
        break;
      default:
        break;
    }
  }
  return g;
}

}  // namespace streamcnn
