#pragma once

#include <string>

#include "streamcnn/fixed_point.hpp"
#include "streamcnn/tensor.hpp"

namespace streamcnn::fx {

enum class QuantizerKind { Mantissa, Binary, Ternary };

/// Weight quantizer used for post-training quantization emulation.
/// Binary and ternary quantizers carry a fixed unit scale.
struct QuantizerSpec {
  QuantizerKind kind = QuantizerKind::Mantissa;
  FxFormat format = kDefaultFormat;  // Mantissa only
  double threshold = 0.33;           // Ternary only, > 0

  static QuantizerSpec mantissa(FxFormat f) { return {QuantizerKind::Mantissa, f, 0.33}; }
  static QuantizerSpec binary() { return {QuantizerKind::Binary, kDefaultFormat, 0.33}; }
  static QuantizerSpec ternary(double threshold = 0.33);

  /// Storage format for the quantizer's outputs: `format` for mantissa, <2,2>
  /// (holds -1, 0, +1 exactly) for binary and ternary.
  FxFormat storage_format() const;

  friend bool operator==(const QuantizerSpec&, const QuantizerSpec&) = default;
};

std::string to_string(QuantizerKind k);
QuantizerKind quantizer_kind_from_string(const std::string& s);

double apply_quantizer(double x, const QuantizerSpec& q, Rounding rounding = Rounding::HalfEven,
                       Overflow overflow = Overflow::Saturate);

/// binary: sign with 0 -> +1; ternary: |x| <= threshold -> 0 else sign;
/// mantissa: element-wise quantize.
Tensor apply_quantizer(const Tensor& t, const QuantizerSpec& q, Rounding rounding = Rounding::HalfEven,
                       Overflow overflow = Overflow::Saturate);

}  // namespace streamcnn::fx
