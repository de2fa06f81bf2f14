#include "streamcnn/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace streamcnn {

std::string to_string(ArithMode mode) { return mode == ArithMode::Real ? "real" : "fixed"; }

ArithMode arith_mode_from_string(const std::string& s) {
  if (s == "real") return ArithMode::Real;
  if (s == "fixed") return ArithMode::Fixed;
  throw std::invalid_argument("unknown arithmetic mode '" + s + "' (expected real or fixed)");
}

namespace kernels {
namespace {

std::int64_t pow2_i64(int e) { return std::int64_t{1} << e; }

// Raw mantissa of `v` (already on the grid of `f`) aligned to `acc_frac`.
std::int64_t aligned(double v, const fx::FxFormat& f, int acc_frac) {
  return fx::align_raw(fx::exact_raw(v, f.frac_bits()), f.frac_bits(), acc_frac);
}

}  // namespace

fx::FxFormat weight_storage_format(const Layer& layer) {
  fx::QuantizerSpec q = layer.quantizer;
  q.format = layer.weight_format;
  return q.storage_format();
}

double effective_weight(double w, const Layer& layer, ArithMode mode) {
  if (mode == ArithMode::Real || w == 0.0) return w;
  fx::QuantizerSpec q = layer.quantizer;
  q.format = layer.weight_format;
  return fx::apply_quantizer(w, q, layer.rounding, layer.overflow);
}

MatVec::MatVec(const Layer& layer, std::size_t terms, const fx::FxFormat& in_format, ArithMode mode)
    : terms_(terms),
      outputs_(layer.kind == LayerKind::Conv2D ? static_cast<std::size_t>(layer.filters)
                                                : static_cast<std::size_t>(layer.units)),
      mode_(mode),
      in_format_(in_format),
      out_format_(layer.output_format),
      rounding_(layer.rounding),
      overflow_(layer.overflow) {
  if (layer.weights.size() != terms_ * outputs_) {
    throw ShapeError("layer '" + layer.name + "': expected " + std::to_string(terms_ * outputs_) + " weights, got " +
                     std::to_string(layer.weights.size()));
  }
  if (layer.has_bias() && layer.bias.size() != outputs_) {
    throw ShapeError("layer '" + layer.name + "': expected " + std::to_string(outputs_) + " biases, got " +
                     std::to_string(layer.bias.size()));
  }
  weights_.resize(layer.weights.size());
  for (std::size_t i = 0; i < weights_.size(); ++i) weights_[i] = effective_weight(layer.weights[i], layer, mode);
  bias_.assign(outputs_, 0.0);
  for (std::size_t n = 0; n < outputs_ && layer.has_bias(); ++n) {
    bias_[n] = mode == ArithMode::Fixed
                   ? fx::quantize_value(layer.bias[n], layer.weight_format, layer.rounding, layer.overflow)
                   : layer.bias[n];
  }
  if (mode == ArithMode::Real) return;

  const fx::FxFormat wfmt = weight_storage_format(layer);
  acc_format_ = fx::accumulator_format(in_format, wfmt, terms_, layer.weight_format);
  const int acc_frac = acc_format_.frac_bits();
  product_scale_ = pow2_i64(acc_frac - in_format.frac_bits() - wfmt.frac_bits());
  weight_raw_.resize(weights_.size());
  for (std::size_t i = 0; i < weights_.size(); ++i) weight_raw_[i] = fx::exact_raw(weights_[i], wfmt.frac_bits());
  bias_acc_.resize(outputs_);
  for (std::size_t n = 0; n < outputs_; ++n) bias_acc_[n] = aligned(bias_[n], layer.weight_format, acc_frac);
}

std::int64_t MatVec::input_raw(double x) const { return fx::quantize(x, in_format_).raw; }

double MatVec::finish(std::int64_t acc) const {
  if (!acc_format_.representable(acc)) {
    throw fx::FxOverflowError("accumulator " + acc_format_.to_string() + " overflowed");
  }
  return fx::requantize(acc, acc_format_.frac_bits(), out_format_, rounding_, overflow_).value();
}

void MatVec::apply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != terms_ || y.size() != outputs_) throw ShapeError("matrix-vector operand size mismatch");
  if (mode_ == ArithMode::Real) {
    for (std::size_t n = 0; n < outputs_; ++n) y[n] = bias_[n];
    for (std::size_t t = 0; t < terms_; ++t) {
      const double xt = x[t];
      const double* row = weights_.data() + t * outputs_;
      for (std::size_t n = 0; n < outputs_; ++n) y[n] += xt * row[n];
    }
    return;
  }
  std::vector<std::int64_t> acc(bias_acc_);
  for (std::size_t t = 0; t < terms_; ++t) {
    const std::int64_t xr = input_raw(x[t]);
    if (xr == 0) continue;
    const std::int64_t* row = weight_raw_.data() + t * outputs_;
    for (std::size_t n = 0; n < outputs_; ++n) acc[n] += xr * row[n] * product_scale_;
  }
  for (std::size_t n = 0; n < outputs_; ++n) y[n] = finish(acc[n]);
}

ChannelAffine::ChannelAffine(const Layer& layer, const fx::FxFormat& in_format, ArithMode mode)
    : mode_(mode),
      in_format_(in_format),
      out_format_(layer.output_format),
      rounding_(layer.rounding),
      overflow_(layer.overflow) {
  gamma_ = layer.weights;
  beta_ = layer.bias;
  beta_.resize(gamma_.size(), 0.0);
  if (mode == ArithMode::Real) return;
  const auto& f = layer.weight_format;
  for (auto& g : gamma_) g = fx::quantize_value(g, f, rounding_, overflow_);
  for (auto& b : beta_) b = fx::quantize_value(b, f, rounding_, overflow_);
  acc_format_ = fx::accumulator_format(in_format, f, 1, f);
  const int acc_frac = acc_format_.frac_bits();
  product_scale_ = pow2_i64(acc_frac - in_format.frac_bits() - f.frac_bits());
  for (double g : gamma_) gamma_raw_.push_back(fx::exact_raw(g, f.frac_bits()));
  for (double b : beta_) beta_acc_.push_back(aligned(b, f, acc_frac));
}

double ChannelAffine::apply(double x, std::size_t c) const {
  if (mode_ == ArithMode::Real) return gamma_[c] * x + beta_[c];
  const std::int64_t xr = fx::quantize(x, in_format_).raw;
  const std::int64_t acc = beta_acc_[c] + xr * gamma_raw_[c] * product_scale_;
  return fx::requantize(acc, acc_format_.frac_bits(), out_format_, rounding_, overflow_).value();
}

double cast_output(double v, const Layer& layer, ArithMode mode) {
  if (mode == ArithMode::Real) return v;
  return fx::quantize_value(v, layer.output_format, layer.rounding, layer.overflow);
}

Averager::Averager(const Layer& layer, std::size_t count, const fx::FxFormat& in_format, ArithMode mode)
    : count_(count),
      mode_(mode),
      in_format_(in_format),
      out_format_(layer.output_format),
      rounding_(layer.rounding),
      overflow_(layer.overflow) {
  reciprocal_ = std::llround(std::ldexp(1.0, kReciprocalFracBits) / static_cast<double>(count));
}

double Averager::finish(double sum) const {
  if (mode_ == ArithMode::Real) return sum / static_cast<double>(count_);
  const int frac = in_format_.frac_bits();
  return fx::requantize_product(fx::exact_raw(sum, frac), frac, reciprocal_, kReciprocalFracBits, out_format_,
                                rounding_, overflow_)
      .value();
}

void softmax(std::span<const double> in, std::span<double> out, const Layer& layer, ArithMode mode) {
  if (in.empty()) return;
  const double peak = *std::max_element(in.begin(), in.end());
  double total = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = std::exp(in[i] - peak);
    total += out[i];
  }
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = cast_output(out[i] / total, layer, mode);
}

}  // namespace kernels
}  // namespace streamcnn
