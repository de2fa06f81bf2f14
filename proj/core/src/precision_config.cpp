#include "streamcnn/precision_config.hpp"

#include <fstream>
#include <iterator>

#include "json.hpp"

namespace streamcnn {

using ordered_json = nlohmann::ordered_json;

namespace {

fx::FxFormat read_format(const ordered_json& j, const char* total_key, const char* integer_key, bool qkeras) {
  fx::FxFormat f{j.at(total_key).get<int>(), j.at(integer_key).get<int>(), j.value("signed", true)};
  if (qkeras) f = qkeras_to_engine(f);
  if (!f.valid()) throw fx::FxError("invalid precision " + f.to_string());
  return f;
}

bool is_qkeras(const ordered_json& j, bool fallback) {
  if (!j.contains("source")) return fallback;
  const auto s = j.at("source").get<std::string>();
  if (s == "qkeras") return true;
  if (s == "hls" || s == "engine") return false;
  throw fx::FxError("unknown precision source '" + s + "'");
}

ordered_json format_json(const fx::FxFormat& f) {
  ordered_json j;
  j["total_bits"] = f.total_bits;
  j["integer_bits"] = f.integer_bits;
  j["signed"] = f.is_signed;
  return j;
}

}  // namespace

const PrecisionEntry* PrecisionConfig::find(const std::string& layer_name) const {
  for (const auto& e : entries) {
    if (e.layer_name == layer_name) return &e;
  }
  return nullptr;
}

PrecisionConfig PrecisionConfig::uniform(fx::FxFormat f) {
  PrecisionConfig c;
  c.default_format = f;
  return c;
}

fx::FxFormat qkeras_to_engine(fx::FxFormat f) { return {f.total_bits + 1, f.integer_bits + 1, f.is_signed}; }

PrecisionConfig parse_precision_config(const std::string& json_text) {
  PrecisionConfig config;
  try {
    const auto doc = ordered_json::parse(json_text);
    const bool doc_qkeras = is_qkeras(doc, false);
    if (doc.contains("default")) config.default_format = read_format(doc.at("default"), "total_bits", "integer_bits", false);
    if (doc.contains("input_precision")) {
      config.input_format = read_format(doc.at("input_precision"), "total_bits", "integer_bits", false);
    }
    for (const auto& jl : doc.value("layers", ordered_json::array())) {
      PrecisionEntry e;
      e.layer_name = jl.at("layer_name").get<std::string>();
      const bool qkeras = is_qkeras(jl, doc_qkeras);
      e.format = read_format(jl, "total_bits", "integer_bits", qkeras);
      e.quantizer_kind = fx::quantizer_kind_from_string(jl.value("quantizer_kind", std::string("mantissa")));
      e.threshold = jl.value("threshold", 0.33);
      if (e.quantizer_kind == fx::QuantizerKind::Ternary && !(e.threshold > 0)) {
        throw fx::FxError("layer '" + e.layer_name + "': ternary threshold must be positive");
      }
      if (jl.contains("output_total_bits")) {
        e.output_format = read_format(jl, "output_total_bits", "output_integer_bits", qkeras);
      }
      if (jl.contains("rounding")) e.rounding = fx::rounding_from_string(jl.at("rounding").get<std::string>());
      if (jl.contains("overflow")) e.overflow = fx::overflow_from_string(jl.at("overflow").get<std::string>());
      config.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw fx::FxError(std::string("precision config: ") + e.what());
  }
  return config;
}

PrecisionConfig load_precision_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw fx::FxError("cannot open precision config '" + path.string() + "'");
  return parse_precision_config({std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()});
}

std::string precision_config_json(const PrecisionConfig& config) {
  ordered_json doc;
  if (config.default_format) doc["default"] = format_json(*config.default_format);
  if (config.input_format) doc["input_precision"] = format_json(*config.input_format);
  ordered_json layers = ordered_json::array();
  for (const auto& e : config.entries) {
    ordered_json j;
    j["layer_name"] = e.layer_name;
    j["source"] = "engine";
    j["total_bits"] = e.format.total_bits;
    j["integer_bits"] = e.format.integer_bits;
    j["signed"] = e.format.is_signed;
    j["quantizer_kind"] = fx::to_string(e.quantizer_kind);
    if (e.quantizer_kind == fx::QuantizerKind::Ternary) j["threshold"] = e.threshold;
    if (e.output_format) {
      j["output_total_bits"] = e.output_format->total_bits;
      j["output_integer_bits"] = e.output_format->integer_bits;
    }
    if (e.rounding) j["rounding"] = fx::to_string(*e.rounding);
    if (e.overflow) j["overflow"] = fx::to_string(*e.overflow);
    layers.push_back(std::move(j));
  }
  doc["layers"] = std::move(layers);
  return doc.dump(2) + "\n";
}

}  // namespace streamcnn
