#include "streamcnn/reference.hpp"

#include <algorithm>
#include <limits>

namespace streamcnn::reference {
namespace {

void require_rank3(const Tensor& x, const std::string& what) {
  if (x.rank() != 3) throw ShapeError(what + ": expected an (H, W, C) input, got " + shape_to_string(x.shape()));
}

}  // namespace

Tensor conv2d_direct(const Tensor& x, const Layer& layer, ArithMode mode, const fx::FxFormat& in_format) {
  require_rank3(x, "conv2d '" + layer.name + "'");
  const ConvGeometry geo = conv_geometry(x.shape(), layer.kernel_size, layer.stride, layer.padding);
  const std::size_t C = geo.channels;
  const auto N = static_cast<std::size_t>(layer.filters);
  const auto K = static_cast<std::size_t>(layer.kernel_size);
  const auto S = static_cast<std::size_t>(layer.stride);
  const kernels::MatVec mv(layer, K * K * C, in_format, mode);

  // Padded input lookup; padding positions hold exact zeros.
  const auto in = [&](std::size_t pv, std::size_t pu, std::size_t c) -> double {
    if (pv < geo.pad_top || pu < geo.pad_left) return 0.0;
    const std::size_t h = pv - geo.pad_top, w = pu - geo.pad_left;
    if (h >= geo.height || w >= geo.width) return 0.0;
    return x.at(h, w, c);
  };

  Tensor y({geo.out_height, geo.out_width, N});
  for (std::size_t v = 0; v < geo.out_height; ++v) {
    for (std::size_t u = 0; u < geo.out_width; ++u) {
      for (std::size_t n = 0; n < N; ++n) {
        if (mode == ArithMode::Real) {
          double acc = mv.bias(n);
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t j = 0; j < K; ++j)
              for (std::size_t k = 0; k < K; ++k)
                acc += in(v * S + j, u * S + k, c) * mv.weight((j * K + k) * C + c, n);
          y.at(v, u, n) = mv.finish_real(acc);
        } else {
          std::int64_t acc = mv.bias_acc(n);
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t j = 0; j < K; ++j)
              for (std::size_t k = 0; k < K; ++k)
                acc += mv.product_acc(mv.input_raw(in(v * S + j, u * S + k, c)), (j * K + k) * C + c, n);
          y.at(v, u, n) = mv.finish(acc);
        }
      }
    }
  }
  return y;
}

Tensor conv2d_direct(const Tensor& x, const Tensor& w, const Tensor& bias, int stride, Padding padding) {
  if (w.rank() != 4 || w.shape()[0] != w.shape()[1]) {
    throw ShapeError("conv2d: weights must have shape (K, K, C, N), got " + shape_to_string(w.shape()));
  }
  require_rank3(x, "conv2d");
  if (w.shape()[2] != x.channels()) {
    throw ShapeError("conv2d: weights expect " + std::to_string(w.shape()[2]) + " channels, input has " +
                     std::to_string(x.channels()));
  }
  Layer layer = Layer::conv2d("conv2d", static_cast<int>(w.shape()[0]), static_cast<int>(w.shape()[3]), stride, padding);
  layer.weights = w.storage();
  if (bias.size() > 0) {
    if (bias.size() != w.shape()[3]) throw ShapeError("conv2d: bias length does not match the filter count");
    layer.bias = bias.storage();
  }
  return conv2d_direct(x, layer);
}

Tensor pool_direct(const Tensor& x, const Layer& layer, ArithMode mode, const fx::FxFormat& in_format) {
  require_rank3(x, "pool '" + layer.name + "'");
  const PoolGeometry geo = pool_geometry(x.shape(), layer.pool);
  const auto p = static_cast<std::size_t>(layer.pool);
  const kernels::Averager avg(layer, p * p, in_format, mode);
  Tensor y({geo.out_height, geo.out_width, geo.channels});
  for (std::size_t v = 0; v < geo.out_height; ++v) {
    for (std::size_t u = 0; u < geo.out_width; ++u) {
      for (std::size_t c = 0; c < geo.channels; ++c) {
        double acc = layer.kind == LayerKind::MaxPool ? -std::numeric_limits<double>::infinity() : 0.0;
        for (std::size_t dj = 0; dj < p; ++dj) {
          for (std::size_t dk = 0; dk < p; ++dk) {
            const double xv = kernels::quantize_input(x.at(v * p + dj, u * p + dk, c), in_format, mode);
            acc = layer.kind == LayerKind::MaxPool ? std::max(acc, xv) : avg.add(acc, xv);
          }
        }
        y.at(v, u, c) = layer.kind == LayerKind::MaxPool ? kernels::cast_output(acc, layer, mode) : avg.finish(acc);
      }
    }
  }
  return y;
}

Tensor pool_direct(const Tensor& x, int pool, LayerKind kind) {
  if (kind != LayerKind::MaxPool && kind != LayerKind::AvgPool) throw std::invalid_argument("pool_direct: not a pooling kind");
  Layer layer = kind == LayerKind::MaxPool ? Layer::max_pool("pool", pool) : Layer::avg_pool("pool", pool);
  return pool_direct(x, layer);
}

Tensor dense_direct(const Tensor& x, const Layer& layer, ArithMode mode, const fx::FxFormat& in_format) {
  const std::size_t in_size = x.size();
  const kernels::MatVec mv(layer, in_size, in_format, mode);
  Tensor y({mv.outputs()});
  for (std::size_t n = 0; n < mv.outputs(); ++n) {
    if (mode == ArithMode::Real) {
      double acc = mv.bias(n);
      for (std::size_t i = 0; i < in_size; ++i) acc += x[i] * mv.weight(i, n);
      y[n] = mv.finish_real(acc);
    } else {
      std::int64_t acc = mv.bias_acc(n);
      for (std::size_t i = 0; i < in_size; ++i) acc += mv.product_acc(mv.input_raw(x[i]), i, n);
      y[n] = mv.finish(acc);
    }
  }
  return y;
}

Tensor dense_direct(const Tensor& x, const Tensor& w, const Tensor& bias) {
  if (w.rank() != 2 || w.shape()[0] != x.size()) {
    throw ShapeError("dense: weights " + shape_to_string(w.shape()) + " do not match input of " +
                     std::to_string(x.size()) + " elements");
  }
  Layer layer = Layer::dense("dense", static_cast<int>(w.shape()[1]));
  layer.weights = w.storage();
  if (bias.size() > 0) {
    if (bias.size() != w.shape()[1]) throw ShapeError("dense: bias length does not match the output count");
    layer.bias = bias.storage();
  }
  return dense_direct(x, layer);
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.values()) v = std::max(v, 0.0);
  return y;
}

Tensor softmax(const Tensor& x) {
  return apply_layer(Layer::softmax("softmax"), x, ArithMode::Real, fx::kDefaultFormat);
}

Tensor apply_layer(const Layer& layer, const Tensor& x, ArithMode mode, const fx::FxFormat& in_format) {
  switch (layer.kind) {
    case LayerKind::Conv2D:
      return conv2d_direct(x, layer, mode, in_format);
    case LayerKind::MaxPool:
    case LayerKind::AvgPool:
      return pool_direct(x, layer, mode, in_format);
    case LayerKind::Dense:
      return dense_direct(x, layer, mode, in_format);
    case LayerKind::ReLU: {
      Tensor y = x;
      for (double& v : y.values()) v = kernels::cast_output(std::max(kernels::quantize_input(v, in_format, mode), 0.0), layer, mode);
      return y;
    }
    case LayerKind::Softmax: {
      Tensor y(x.shape());
      const std::size_t axis = x.shape().empty() ? 1 : x.shape().back();
      std::vector<double> row(axis);
      for (std::size_t base = 0; base < x.size(); base += axis) {
        for (std::size_t i = 0; i < axis; ++i) row[i] = kernels::quantize_input(x[base + i], in_format, mode);
        kernels::softmax(row, y.values().subspan(base, axis), layer, mode);
      }
      return y;
    }
    case LayerKind::Flatten: {
      Tensor y = x.reshaped({x.size()});
      for (double& v : y.values()) v = kernels::cast_output(kernels::quantize_input(v, in_format, mode), layer, mode);
      return y;
    }
    case LayerKind::ScaleBias: {
      const kernels::ChannelAffine affine(layer, in_format, mode);
      Tensor y = x;
      const std::size_t C = x.channels();
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = affine.apply(x[i], i % C);
      return y;
    }
  }
  throw ModelError("layer '" + layer.name + "': unsupported kind");
}

std::vector<Tensor> run_direct_trace(const ModelGraph& g, const Tensor& x, ArithMode mode) {
  if (x.shape() != g.input_shape) {
    throw ShapeError("input shape " + shape_to_string(x.shape()) + " does not match the model input " +
                     shape_to_string(g.input_shape));
  }
  std::vector<Tensor> outputs;
  outputs.reserve(g.layers.size());
  Tensor current = x;
  if (mode == ArithMode::Fixed) {
    for (double& v : current.values()) v = fx::quantize_value(v, g.input_format);
  }
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    current = apply_layer(g.layers[i], current, mode, g.input_format_of(i));
    outputs.push_back(current);
  }
  return outputs;
}

Tensor run_direct(const ModelGraph& g, const Tensor& x, ArithMode mode) {
  auto trace = run_direct_trace(g, x, mode);
  if (trace.empty()) return x;
  return std::move(trace.back());
}

}  // namespace streamcnn::reference
