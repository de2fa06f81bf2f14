// Manifest (JSON) and weight-file (raw little-endian float32) ingestion.

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "json.hpp"
#include "streamcnn/model.hpp"

namespace streamcnn {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kManifestFormat = "streamcnn-manifest/1";

LayerKind kind_from_string(const std::string& s, const std::string& layer_name) {
  if (s == "conv2d") return LayerKind::Conv2D;
  if (s == "maxpool") return LayerKind::MaxPool;
  if (s == "avgpool") return LayerKind::AvgPool;
  if (s == "dense") return LayerKind::Dense;
  if (s == "relu") return LayerKind::ReLU;
  if (s == "softmax") return LayerKind::Softmax;
  if (s == "flatten") return LayerKind::Flatten;
  if (s == "scale_bias") return LayerKind::ScaleBias;
  throw ModelError("layer '" + layer_name + "': unknown layer kind '" + s + "'");
}

ordered_json format_to_json(const fx::FxFormat& f) {
  ordered_json j;
  j["total_bits"] = f.total_bits;
  j["integer_bits"] = f.integer_bits;
  j["signed"] = f.is_signed;
  return j;
}

fx::FxFormat format_from_json(const ordered_json& j) {
  fx::FxFormat f;
  f.total_bits = j.at("total_bits").get<int>();
  f.integer_bits = j.at("integer_bits").get<int>();
  f.is_signed = j.value("signed", true);
  return f;
}

ordered_json quantizer_to_json(const fx::QuantizerSpec& q) {
  ordered_json j;
  j["kind"] = fx::to_string(q.kind);
  if (q.kind == fx::QuantizerKind::Ternary) j["threshold"] = q.threshold;
  return j;
}

struct BlobRef {
  std::size_t offset = 0;
  std::size_t count = 0;
};

float read_f32_le(const std::uint8_t* p) {
  std::uint32_t bits = 0;
  for (int b = 3; b >= 0; --b) bits = (bits << 8) | p[b];
  return std::bit_cast<float>(bits);
}

void append_f32_le(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
}

std::vector<double> read_blob(const std::vector<std::uint8_t>& weights, const BlobRef& ref,
                              const std::string& layer_name, const char* what) {
  const std::size_t end = ref.offset + ref.count * 4;
  if (end > weights.size()) {
    throw ModelError("layer '" + layer_name + "': truncated weight file, " + what + " needs bytes [" +
                     std::to_string(ref.offset) + ", " + std::to_string(end) + ") but the file has " +
                     std::to_string(weights.size()) + " bytes");
  }
  std::vector<double> out(ref.count);
  for (std::size_t i = 0; i < ref.count; ++i) out[i] = read_f32_le(weights.data() + ref.offset + 4 * i);
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

ModelGraph parse_model(const std::string& manifest_text, const std::vector<std::uint8_t>& weights,
                       bool require_weights) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(manifest_text);
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("manifest is not valid JSON: ") + e.what());
  }
  ModelGraph g;
  try {
    g.name = doc.value("name", std::string("model"));
    g.input_shape = doc.at("input_shape").get<Shape>();
    if (doc.contains("input_precision")) g.input_format = format_from_json(doc.at("input_precision"));
    if (!doc.contains("layers") || !doc.at("layers").is_array() || doc.at("layers").empty()) {
      throw ModelError("empty model");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("manifest: ") + e.what());
  }

  std::size_t blob_end = 0;
  bool any_blob = false;
  for (const auto& jl : doc.at("layers")) {
    Layer layer;
    layer.name = jl.value("name", std::string("layer") + std::to_string(g.layers.size()));
    try {
      layer.kind = kind_from_string(jl.at("kind").get<std::string>(), layer.name);
      switch (layer.kind) {
        case LayerKind::Conv2D:
          layer.kernel_size = jl.at("kernel_size").get<int>();
          layer.filters = jl.at("filters").get<int>();
          layer.stride = jl.value("strides", 1);
          layer.padding = jl.value("padding", std::string("valid")) == "same" ? Padding::Same : Padding::Valid;
          break;
        case LayerKind::Dense:
          layer.units = jl.at("units").get<int>();
          break;
        case LayerKind::MaxPool:
        case LayerKind::AvgPool:
          layer.pool = jl.at("pool_size").get<int>();
          break;
        default:
          break;
      }
      if (jl.contains("weight_precision")) layer.weight_format = format_from_json(jl.at("weight_precision"));
      if (jl.contains("output_precision")) layer.output_format = format_from_json(jl.at("output_precision"));
      if (jl.contains("quantizer")) {
        const auto& jq = jl.at("quantizer");
        layer.quantizer.kind = fx::quantizer_kind_from_string(jq.at("kind").get<std::string>());
        layer.quantizer.threshold = jq.value("threshold", 0.33);
      }
      layer.quantizer.format = layer.weight_format;
      if (jl.contains("rounding")) layer.rounding = fx::rounding_from_string(jl.at("rounding").get<std::string>());
      if (jl.contains("overflow")) layer.overflow = fx::overflow_from_string(jl.at("overflow").get<std::string>());
      layer.reuse_factor = jl.value("reuse_factor", 1);
      layer.bias_trainable = jl.value("bias_trainable", layer.kind != LayerKind::ScaleBias && jl.value("use_bias", false));

      for (const char* key : {"weights", "bias"}) {
        if (!jl.contains(key) || jl.at(key).is_null()) continue;
        const auto& jb = jl.at(key);
        BlobRef ref{jb.value("offset", std::size_t{0}), jb.at("count").get<std::size_t>()};
        auto& target = std::string(key) == "weights" ? layer.weights : layer.bias;
        if (jb.contains("offset")) {
          any_blob = true;
          blob_end = std::max(blob_end, ref.offset + 4 * ref.count);
          if (require_weights || !weights.empty()) {
            target = read_blob(weights, ref, layer.name, key);
            continue;
          }
        }
        target.assign(ref.count, 0.0);
      }
    } catch (const nlohmann::json::exception& e) {
      throw ModelError("layer '" + layer.name + "': " + e.what());
    } catch (const fx::FxError& e) {
      throw ModelError("layer '" + layer.name + "': " + e.what());
    }
    g.layers.push_back(std::move(layer));
  }
  if (any_blob && (require_weights || !weights.empty()) && weights.size() != blob_end) {
    throw ModelError("weight file has " + std::to_string(weights.size()) + " bytes but the manifest declares " +
                     std::to_string(blob_end));
  }

  // Architecture-only manifests may omit parameters; allocate them zeroed
  // (unit scale for scale_bias).
  Shape current = g.input_shape;
  for (auto& layer : g.layers) {
    if (layer.has_parameters() && !any_blob) {
      if (layer.weights.empty()) {
        layer.weights.assign(expected_weight_count(layer, current), layer.kind == LayerKind::ScaleBias ? 1.0 : 0.0);
      }
      if (layer.bias.empty() && (layer.bias_trainable || layer.kind == LayerKind::ScaleBias)) {
        layer.bias.assign(expected_bias_count(layer, current), 0.0);
      }
    }
    current = layer_output_shape(layer, current);
  }
  return infer_shapes(std::move(g));
}

ModelGraph load_model(const std::filesystem::path& manifest_path, const std::filesystem::path& weights_path) {
  std::ifstream in(manifest_path);
  if (!in) throw ModelError("cannot open manifest '" + manifest_path.string() + "'");
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};

  std::filesystem::path wpath = weights_path;
  if (wpath.empty()) {
    const auto doc = ordered_json::parse(text, nullptr, false);
    if (!doc.is_discarded() && doc.contains("weights_file")) {
      wpath = manifest_path.parent_path() / doc.at("weights_file").get<std::string>();
    }
  }
  if (wpath.empty()) return parse_model(text, {}, false);
  if (!std::filesystem::exists(wpath)) throw ModelError("weights file '" + wpath.string() + "' does not exist");
  return parse_model(text, read_file_bytes(wpath), true);
}

std::string manifest_json(const ModelGraph& g, const std::string& weights_file) {
  ordered_json doc;
  doc["format"] = kManifestFormat;
  doc["name"] = g.name;
  doc["input_shape"] = g.input_shape;
  doc["input_precision"] = format_to_json(g.input_format);
  if (!weights_file.empty()) doc["weights_file"] = weights_file;
  ordered_json layers = ordered_json::array();
  std::size_t offset = 0;
  const auto blob = [&](std::size_t count) {
    ordered_json j;
    j["offset"] = offset;
    j["count"] = count;
    offset += 4 * count;
    return j;
  };
  for (const auto& layer : g.layers) {
    ordered_json jl;
    jl["name"] = layer.name;
    jl["kind"] = to_string(layer.kind);
    switch (layer.kind) {
      case LayerKind::Conv2D:
        jl["kernel_size"] = layer.kernel_size;
        jl["filters"] = layer.filters;
        jl["strides"] = layer.stride;
        jl["padding"] = to_string(layer.padding);
        break;
      case LayerKind::Dense:
        jl["units"] = layer.units;
        break;
      case LayerKind::MaxPool:
      case LayerKind::AvgPool:
        jl["pool_size"] = layer.pool;
        break;
      default:
        break;
    }
    if (layer.has_parameters()) {
      jl["use_bias"] = layer.has_bias();
      jl["bias_trainable"] = layer.bias_trainable;
      jl["weights"] = blob(layer.weights.size());
      jl["bias"] = layer.has_bias() ? blob(layer.bias.size()) : ordered_json(nullptr);
      jl["weight_precision"] = format_to_json(layer.weight_format);
      jl["quantizer"] = quantizer_to_json(layer.quantizer);
      jl["reuse_factor"] = layer.reuse_factor;
    }
    jl["output_precision"] = format_to_json(layer.output_format);
    jl["rounding"] = fx::to_string(layer.rounding);
    jl["overflow"] = fx::to_string(layer.overflow);
    layers.push_back(std::move(jl));
  }
  doc["layers"] = std::move(layers);
  return doc.dump(2) + "\n";
}

std::vector<std::uint8_t> weights_blob(const ModelGraph& g) {
  std::vector<std::uint8_t> out;
  for (const auto& layer : g.layers) {
    if (!layer.has_parameters()) continue;
    for (double w : layer.weights) append_f32_le(out, w);
    for (double b : layer.bias) append_f32_le(out, b);
  }
  return out;
}

void save_model(const ModelGraph& g, const std::filesystem::path& manifest_path,
                const std::filesystem::path& weights_path) {
  std::error_code ec;
  const auto rel = std::filesystem::relative(weights_path, manifest_path.parent_path().empty()
                                                               ? std::filesystem::current_path()
                                                               : manifest_path.parent_path(),
                                             ec);
  const std::string rel_name = ec || rel.empty() ? weights_path.filename().string() : rel.generic_string();
  {
    std::ofstream out(manifest_path, std::ios::binary);
    if (!out) throw ModelError("cannot write manifest '" + manifest_path.string() + "'");
    out << manifest_json(g, rel_name);
  }
  const auto blob = weights_blob(g);
  std::ofstream out(weights_path, std::ios::binary);
  if (!out) throw ModelError("cannot write weights '" + weights_path.string() + "'");
  out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
}

}  // namespace streamcnn
