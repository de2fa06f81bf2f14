#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "streamcnn/fixed_point.hpp"
#include "streamcnn/quantizer.hpp"

namespace streamcnn {

/// Where an entry's bit widths come from. QKeras widths exclude the sign bit,
/// so a QKeras <b,i> is implemented as <b+1,i+1> (same fractional bits).
enum class PrecisionSource { Engine, QKeras };

struct PrecisionEntry {
  std::string layer_name;
  fx::FxFormat format;  // engine format, after any width translation
  fx::QuantizerKind quantizer_kind = fx::QuantizerKind::Mantissa;
  double threshold = 0.33;
  std::optional<fx::FxFormat> output_format;
  std::optional<fx::Rounding> rounding;
  std::optional<fx::Overflow> overflow;
};

/// Per-layer precision. For conv/dense/scale_bias layers an entry sets the
/// weight format (and optionally the output format); for every other layer
/// it sets the output format. `default_format` covers everything else.
struct PrecisionConfig {
  std::optional<fx::FxFormat> default_format;
  std::optional<fx::FxFormat> input_format;
  std::vector<PrecisionEntry> entries;

  const PrecisionEntry* find(const std::string& layer_name) const;
  static PrecisionConfig uniform(fx::FxFormat f);
};

fx::FxFormat qkeras_to_engine(fx::FxFormat f);

PrecisionConfig parse_precision_config(const std::string& json_text);
PrecisionConfig load_precision_config(const std::filesystem::path& path);
std::string precision_config_json(const PrecisionConfig& config);

}  // namespace streamcnn
