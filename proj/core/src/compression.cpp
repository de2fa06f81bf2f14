#include "streamcnn/compression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "streamcnn/reference.hpp"
#include "streamcnn/svg.hpp"

namespace streamcnn::compress {

using ordered_json = nlohmann::ordered_json;

std::string to_string(PruneScope scope) { return scope == PruneScope::PerLayer ? "per-layer" : "global"; }

PruneScope prune_scope_from_string(const std::string& s) {
  if (s == "per-layer" || s == "layer") return PruneScope::PerLayer;
  if (s == "global") return PruneScope::Global;
  throw std::invalid_argument("unknown pruning scope '" + s + "' (expected per-layer or global)");
}

namespace {

std::size_t uses_per_weight(const ModelGraph& g, std::size_t i) {
  if (g.layers[i].kind != LayerKind::Conv2D) return 1;
  const auto& out = g.output_shapes[i];
  return out[0] * out[1];
}

struct WeightRef {
  double magnitude;
  std::size_t layer;
  std::size_t index;
};

void zero_smallest(std::vector<WeightRef>& refs, std::size_t count, ModelGraph& g) {
  std::stable_sort(refs.begin(), refs.end(), [](const WeightRef& a, const WeightRef& b) { return a.magnitude < b.magnitude; });
  for (std::size_t i = 0; i < count && i < refs.size(); ++i) g.layers[refs[i].layer].weights[refs[i].index] = 0.0;
}

}  // namespace

SparsityReport sparsity_report(const ModelGraph& g) {
  SparsityReport r;
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    const auto& layer = g.layers[i];
    if (!layer.is_compute()) continue;
    LayerSparsity s;
    s.layer = layer.name;
    s.weights = layer.weights.size();
    s.zeros = static_cast<std::size_t>(std::count(layer.weights.begin(), layer.weights.end(), 0.0));
    s.zero_fraction = s.weights ? static_cast<double>(s.zeros) / static_cast<double>(s.weights) : 0.0;
    s.nonzero_multiplications = (s.weights - s.zeros) * uses_per_weight(g, i);
    r.total_weights += s.weights;
    r.total_zeros += s.zeros;
    r.nonzero_multiplications += s.nonzero_multiplications;
    r.layers.push_back(std::move(s));
  }
  return r;
}

PruneResult prune_magnitude(ModelGraph g, double sparsity, PruneScope scope) {
  if (!(sparsity >= 0.0 && sparsity < 1.0)) {
    throw std::invalid_argument("sparsity must be in [0, 1), got " + std::to_string(sparsity));
  }
  std::vector<WeightRef> all;
  for (std::size_t li = 0; li < g.layers.size(); ++li) {
    const auto& layer = g.layers[li];
    if (!layer.is_compute()) continue;
    std::vector<WeightRef> refs;
    refs.reserve(layer.weights.size());
    for (std::size_t i = 0; i < layer.weights.size(); ++i) refs.push_back({std::abs(layer.weights[i]), li, i});
    if (scope == PruneScope::PerLayer) {
      const auto count = static_cast<std::size_t>(std::floor(sparsity * static_cast<double>(refs.size())));
      zero_smallest(refs, count, g);
    } else {
      all.insert(all.end(), refs.begin(), refs.end());
    }
  }
  if (scope == PruneScope::Global) {
    const auto count = static_cast<std::size_t>(std::floor(sparsity * static_cast<double>(all.size())));
    zero_smallest(all, count, g);
  }
  auto report = sparsity_report(g);
  return {std::move(g), std::move(report)};
}

ModelGraph ptq(ModelGraph g, const PrecisionConfig& config) {
  for (const auto& e : config.entries) {
    if (!g.find(e.layer_name)) throw ModelError("precision config names unknown layer '" + e.layer_name + "'");
  }
  if (config.input_format) {
    g.input_format = *config.input_format;
  } else if (config.default_format) {
    g.input_format = *config.default_format;
  }
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    Layer& layer = g.layers[i];
    const PrecisionEntry* entry = config.find(layer.name);
    if (!entry && !config.default_format && layer.has_parameters()) {
      throw ModelError("precision config covers neither layer '" + layer.name + "' nor provides a default");
    }
    const fx::FxFormat fallback = config.default_format.value_or(layer.output_format);
    if (entry) {
      if (entry->rounding) layer.rounding = *entry->rounding;
      if (entry->overflow) layer.overflow = *entry->overflow;
    }
    switch (layer.kind) {
      case LayerKind::Conv2D:
      case LayerKind::Dense:
      case LayerKind::ScaleBias:
        layer.weight_format = entry ? entry->format : fallback;
        layer.output_format = entry && entry->output_format ? *entry->output_format : fallback;
        layer.quantizer = {entry && layer.kind != LayerKind::ScaleBias ? entry->quantizer_kind : fx::QuantizerKind::Mantissa,
                           layer.weight_format, entry ? entry->threshold : 0.33};
        break;
      case LayerKind::MaxPool:
      case LayerKind::AvgPool:
      case LayerKind::Flatten:
        layer.output_format = entry ? entry->format : g.input_format_of(i);
        break;
      case LayerKind::Softmax:
        layer.output_format = fx::kDefaultFormat;
        break;
      case LayerKind::ReLU:
        layer.output_format = entry ? entry->format : fallback;
        break;
    }
    if (!layer.has_parameters()) continue;
    if (layer.kind == LayerKind::ScaleBias) {
      for (double& v : layer.weights) v = fx::quantize_value(v, layer.weight_format, layer.rounding, layer.overflow);
    } else {
      for (double& v : layer.weights) v = kernels::effective_weight(v, layer, ArithMode::Fixed);
    }
    for (double& v : layer.bias) v = fx::quantize_value(v, layer.weight_format, layer.rounding, layer.overflow);
  }
  return infer_shapes(std::move(g));
}

Distribution describe(std::vector<double> values) {
  Distribution d;
  d.count = values.size();
  if (values.empty()) return d;
  std::sort(values.begin(), values.end());
  const auto pct = [&](double q) {
    const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (values[hi] - values[lo]) * (pos - static_cast<double>(lo));
  };
  d.min = values.front();
  d.max = values.back();
  d.p1 = pct(1);
  d.p5 = pct(5);
  d.p50 = pct(50);
  d.p95 = pct(95);
  d.p99 = pct(99);
  d.max_abs = std::max(std::abs(d.min), std::abs(d.max));
  for (double v : values) {
    const double a = std::abs(v);
    if (a > 0 && (d.min_nonzero_abs == 0 || a < d.min_nonzero_abs)) d.min_nonzero_abs = a;
  }
  return d;
}

bool covered(const Distribution& d, const fx::FxFormat& f) {
  if (d.max_abs > f.max_value()) return false;
  return d.min_nonzero_abs == 0 || d.min_nonzero_abs >= f.resolution();
}

RangeProfile profile(const ModelGraph& g, const std::vector<Tensor>& probe, ArithMode mode) {
  if (probe.empty()) throw std::invalid_argument("profile needs at least one probe input");
  RangeProfile p;
  for (const auto& layer : g.layers) {
    if (!layer.has_parameters()) continue;
    std::vector<double> values = layer.weights;
    values.insert(values.end(), layer.bias.begin(), layer.bias.end());
    LayerRange r{layer.name, describe(std::move(values)), layer.weight_format, false};
    r.covered = covered(r.values, r.format);
    p.weights.push_back(std::move(r));
  }
  std::vector<std::vector<double>> outputs(g.layers.size());
  for (const auto& x : probe) {
    const auto trace = reference::run_direct_trace(g, x, mode);
    for (std::size_t i = 0; i < trace.size(); ++i) {
      outputs[i].insert(outputs[i].end(), trace[i].storage().begin(), trace[i].storage().end());
    }
  }
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    LayerRange r{g.layers[i].name, describe(std::move(outputs[i])), g.layers[i].output_format, false};
    r.covered = covered(r.values, r.format);
    p.activations.push_back(std::move(r));
  }
  return p;
}

namespace {

ordered_json distribution_json(const Distribution& d) {
  ordered_json j;
  j["count"] = d.count;
  j["min"] = d.min;
  j["p1"] = d.p1;
  j["p5"] = d.p5;
  j["p50"] = d.p50;
  j["p95"] = d.p95;
  j["p99"] = d.p99;
  j["max"] = d.max;
  j["max_abs"] = d.max_abs;
  j["min_nonzero_abs"] = d.min_nonzero_abs;
  return j;
}

ordered_json ranges_json(const std::vector<LayerRange>& ranges) {
  ordered_json arr = ordered_json::array();
  for (const auto& r : ranges) {
    ordered_json j;
    j["layer"] = r.layer;
    j["format"] = r.format.to_string();
    j["covered"] = r.covered;
    j["values"] = distribution_json(r.values);
    arr.push_back(std::move(j));
  }
  return arr;
}

void ranges_csv(std::ostringstream& os, const std::string& kind, const std::vector<LayerRange>& ranges) {
  for (const auto& r : ranges) {
    const auto& d = r.values;
    os << kind << ',' << r.layer << ',' << r.format.to_string() << ',' << (r.covered ? 1 : 0) << ',' << d.count;
    for (double v : {d.min, d.p1, d.p5, d.p50, d.p95, d.p99, d.max, d.min_nonzero_abs}) os << ',' << svg::number(v);
    os << '\n';
  }
}

}  // namespace

std::string sparsity_json(const SparsityReport& r) {
  ordered_json doc;
  ordered_json layers = ordered_json::array();
  for (const auto& s : r.layers) {
    ordered_json j;
    j["layer"] = s.layer;
    j["weights"] = s.weights;
    j["zeros"] = s.zeros;
    j["zero_fraction"] = s.zero_fraction;
    j["nonzero_multiplications"] = s.nonzero_multiplications;
    layers.push_back(std::move(j));
  }
  doc["layers"] = std::move(layers);
  doc["total_weights"] = r.total_weights;
  doc["total_zeros"] = r.total_zeros;
  doc["nonzero_multiplications"] = r.nonzero_multiplications;
  return doc.dump(2) + "\n";
}

std::string sparsity_csv(const SparsityReport& r) {
  std::ostringstream os;
  os << "layer,weights,zeros,zero_fraction,nonzero_multiplications\n";
  for (const auto& s : r.layers) {
    os << s.layer << ',' << s.weights << ',' << s.zeros << ',' << svg::number(s.zero_fraction) << ','
       << s.nonzero_multiplications << '\n';
  }
  return os.str();
}

std::string profile_json(const RangeProfile& p) {
  ordered_json doc;
  doc["weights"] = ranges_json(p.weights);
  doc["activations"] = ranges_json(p.activations);
  return doc.dump(2) + "\n";
}

std::string profile_csv(const RangeProfile& p) {
  std::ostringstream os;
  os << "tensor,layer,format,covered,count,min,p1,p5,p50,p95,p99,max,min_nonzero_abs\n";
  ranges_csv(os, "weights", p.weights);
  ranges_csv(os, "activations", p.activations);
  return os.str();
}

std::string profile_svg(const RangeProfile& p) {
  constexpr double W = 760, left = 110, right = 20, top = 40, row = 26, lo = -16, hi = 8;
  const std::size_t rows = p.weights.size() + p.activations.size() + 2;
  const double H = top + row * static_cast<double>(rows) + 50;
  const double pw = W - left - right;
  const auto px = [&](double v) {
    const double e = v > 0 ? std::clamp(std::log2(v), lo, hi) : lo;
    return left + (e - lo) / (hi - lo) * pw;
  };
  svg::Document doc(W, H);
  doc.text(W / 2, 22, "|value| per layer (log2 scale); gray band = representable range", 14, "middle");
  double y = top;
  const auto section = [&](const std::string& title, const std::vector<LayerRange>& ranges) {
    doc.text(10, y + 16, title, 12);
    y += row;
    for (const auto& r : ranges) {
      const auto& d = r.values;
      doc.rect(px(r.format.resolution()), y + 2, px(r.format.max_value()) - px(r.format.resolution()), row - 4,
               "#cccccc", "none", 0.6);
      const double a5 = std::min(std::abs(d.p5), std::abs(d.p95));
      const double a95 = std::max(std::abs(d.p5), std::abs(d.p95));
      const double x_lo = px(std::max(d.min_nonzero_abs, 1e-9)), x_hi = px(d.max_abs);
      doc.line(x_lo, y + row / 2, x_hi, y + row / 2, "black");
      doc.rect(std::min(px(a5), px(a95)), y + 6, std::abs(px(a95) - px(a5)) + 1, row - 12,
               r.covered ? "#1f77b4" : "#d62728", "black", 0.8);
      doc.line(px(std::abs(d.p50)), y + 4, px(std::abs(d.p50)), y + row - 4, "black", 2);
      doc.text(left - 6, y + row / 2 + 4, r.layer, 11, "end");
      y += row;
    }
  };
  section("weights", p.weights);
  section("outputs", p.activations);
  for (int e = static_cast<int>(lo); e <= static_cast<int>(hi); e += 4) {
    const double x = px(std::ldexp(1.0, e));
    doc.line(x, top, x, y, "#999999", 0.5, true);
    doc.text(x, y + 16, "2^" + std::to_string(e), 10, "middle");
  }
  return doc.str();
}

}  // namespace streamcnn::compress
