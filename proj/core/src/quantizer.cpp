#include "streamcnn/quantizer.hpp"

#include <cmath>

namespace streamcnn::fx {

QuantizerSpec QuantizerSpec::ternary(double threshold) {
  if (!(threshold > 0.0)) throw FxError("ternary threshold must be > 0");
  return {QuantizerKind::Ternary, kDefaultFormat, threshold};
}

FxFormat QuantizerSpec::storage_format() const {
  if (kind == QuantizerKind::Mantissa) return format;
  return FxFormat{2, 2, true};
}

std::string to_string(QuantizerKind k) {
  switch (k) {
    case QuantizerKind::Mantissa: return "mantissa";
    case QuantizerKind::Binary: return "binary";
    case QuantizerKind::Ternary: return "ternary";
  }
  return "mantissa";
}

QuantizerKind quantizer_kind_from_string(const std::string& s) {
  if (s == "mantissa" || s == "fixed") return QuantizerKind::Mantissa;
  if (s == "binary") return QuantizerKind::Binary;
  if (s == "ternary") return QuantizerKind::Ternary;
  throw FxError("unknown quantizer kind '" + s + "'");
}

double apply_quantizer(double x, const QuantizerSpec& q, Rounding rounding, Overflow overflow) {
  switch (q.kind) {
    case QuantizerKind::Binary:
      return x < 0.0 ? -1.0 : 1.0;
    case QuantizerKind::Ternary:
      if (!(q.threshold > 0.0)) throw FxError("ternary threshold must be > 0");
      if (std::abs(x) <= q.threshold) return 0.0;
      return x < 0.0 ? -1.0 : 1.0;
    case QuantizerKind::Mantissa:
      break;
  }
  return quantize_value(x, q.format, rounding, overflow);
}

Tensor apply_quantizer(const Tensor& t, const QuantizerSpec& q, Rounding rounding, Overflow overflow) {
  Tensor out = t;
  for (double& v : out.values()) v = apply_quantizer(v, q, rounding, overflow);
  return out;
}

}  // namespace streamcnn::fx
