#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "streamcnn/fixed_point.hpp"
#include "streamcnn/model.hpp"

namespace streamcnn {

enum class ArithMode { Real, Fixed };

std::string to_string(ArithMode mode);
ArithMode arith_mode_from_string(const std::string& s);

namespace kernels {

/// Weight value used by the engines: unchanged in real mode; in fixed mode
/// passed through the layer's quantizer, with exact zeros kept at zero.
double effective_weight(double w, const Layer& layer, ArithMode mode);
/// Storage format of a layer's quantized weights.
fx::FxFormat weight_storage_format(const Layer& layer);

/// A conv or dense layer viewed as y[n] = b[n] + sum_t x[t] * W[t][n].
/// In fixed mode products accumulate exactly in a wide accumulator and the
/// result is cast once into the layer's output format.
class MatVec {
 public:
  MatVec(const Layer& layer, std::size_t terms, const fx::FxFormat& in_format, ArithMode mode);

  std::size_t terms() const { return terms_; }
  std::size_t outputs() const { return outputs_; }
  ArithMode mode() const { return mode_; }
  const fx::FxFormat& accumulator_format() const { return acc_format_; }

  /// Full product for one input column of `terms()` values.
  void apply(std::span<const double> x, std::span<double> y) const;

  // Building blocks for engines with their own loop order.
  double weight(std::size_t t, std::size_t n) const { return weights_[t * outputs_ + n]; }
  double bias(std::size_t n) const { return bias_[n]; }
  std::int64_t input_raw(double x) const;
  std::int64_t bias_acc(std::size_t n) const { return bias_acc_[n]; }
  /// x_raw * W[t][n], aligned to the accumulator's fractional bits.
  std::int64_t product_acc(std::int64_t x_raw, std::size_t t, std::size_t n) const {
    return x_raw * weight_raw_[t * outputs_ + n] * product_scale_;
  }
  /// Casts an exact accumulator into the output format.
  double finish(std::int64_t acc) const;
  double finish_real(double acc) const { return acc; }

 private:
  std::size_t terms_ = 0, outputs_ = 0;
  ArithMode mode_ = ArithMode::Real;
  std::vector<double> weights_, bias_;
  std::vector<std::int64_t> weight_raw_, bias_acc_;
  std::int64_t product_scale_ = 1;
  fx::FxFormat in_format_, acc_format_, out_format_;
  fx::Rounding rounding_ = fx::Rounding::HalfEven;
  fx::Overflow overflow_ = fx::Overflow::Saturate;
};

/// Per-channel y = gamma[c] * x + beta[c].
class ChannelAffine {
 public:
  ChannelAffine(const Layer& layer, const fx::FxFormat& in_format, ArithMode mode);
  double apply(double x, std::size_t c) const;

 private:
  ArithMode mode_;
  std::vector<double> gamma_, beta_;
  std::vector<std::int64_t> gamma_raw_, beta_acc_;
  std::int64_t product_scale_ = 1;
  fx::FxFormat in_format_, acc_format_, out_format_;
  fx::Rounding rounding_;
  fx::Overflow overflow_;
};

/// Fixed mode: snaps an incoming value onto the input grid (a no-op for values
/// produced by the previous layer).
inline double quantize_input(double x, const fx::FxFormat& f, ArithMode mode) {
  return mode == ArithMode::Real ? x : fx::quantize_value(x, f);
}

/// Casts an element-wise result into the layer's output format (fixed mode).
double cast_output(double v, const Layer& layer, ArithMode mode);

/// Mean of `count` values given their sum. Fixed mode sums raw mantissas of
/// `in_format` and multiplies by a precomputed 1/count constant.
class Averager {
 public:
  Averager(const Layer& layer, std::size_t count, const fx::FxFormat& in_format, ArithMode mode);
  double add(double acc, double x) const { return acc + x; }
  double finish(double sum) const;

 private:
  std::size_t count_;
  ArithMode mode_;
  std::int64_t reciprocal_ = 0;
  fx::FxFormat in_format_, out_format_;
  fx::Rounding rounding_;
  fx::Overflow overflow_;
};

inline constexpr int kReciprocalFracBits = 32;

/// Real-valued softmax over the last axis, then cast to the output format.
void softmax(std::span<const double> in, std::span<double> out, const Layer& layer, ArithMode mode);

}  // namespace kernels
}  // namespace streamcnn
