#include "streamcnn/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "json.hpp"
#include "streamcnn/instruction.hpp"
#include "streamcnn/kernels.hpp"

namespace streamcnn::estimate {

using ordered_json = nlohmann::ordered_json;

namespace {

std::size_t out_n(const Layer& layer) {
  return static_cast<std::size_t>(layer.kind == LayerKind::Conv2D ? layer.filters : layer.units);
}

std::size_t nonzero(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](double x) { return x != 0.0; }));
}

// How many times each weight is used per inference.
std::size_t uses_per_weight(const ModelGraph& g, std::size_t i) {
  const auto& layer = g.layers[i];
  const auto& out = g.output_shapes[i];
  if (layer.kind == LayerKind::Conv2D) return out[0] * out[1];
  if (layer.kind == LayerKind::ScaleBias) return element_count(out) / out.back();
  return 1;
}

std::size_t ceil_div(std::size_t a, std::size_t b) { return b == 0 ? 0 : (a + b - 1) / b; }

// Elements per stream item entering / leaving a layer.
std::size_t item_width(const Shape& s) { return s.size() == 3 ? s[2] : element_count(s); }

}  // namespace

std::vector<WeightsFlops> count_weights_flops(const ModelGraph& g) {
  std::vector<WeightsFlops> out;
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    const auto& layer = g.layers[i];
    const auto& in = g.input_shapes[i];
    WeightsFlops wf{layer.name, 0, 0};
    switch (layer.kind) {
      case LayerKind::Conv2D: {
        const auto& o = g.output_shapes[i];
        const std::size_t w = timing::multiplier_slots(layer, in);
        wf.weights = w + (layer.bias_trainable ? out_n(layer) : 0);
        wf.flops = 2 * w * o[0] * o[1];
        break;
      }
      case LayerKind::Dense: {
        const std::size_t w = element_count(in) * out_n(layer);
        wf.weights = w + (layer.bias_trainable ? out_n(layer) : 0);
        wf.flops = 2 * w;
        break;
      }
      case LayerKind::ScaleBias:
        wf.weights = 2 * in.back();
        wf.flops = 2 * element_count(in);
        break;
      default:
        continue;
    }
    out.push_back(std::move(wf));
  }
  return out;
}

int weight_bit_width(const Layer& layer) {
  if (layer.kind != LayerKind::ScaleBias) {
    if (layer.quantizer.kind == fx::QuantizerKind::Binary) return 1;
    if (layer.quantizer.kind == fx::QuantizerKind::Ternary) return 2;
  }
  return layer.weight_format.total_bits;
}

std::vector<std::size_t> bit_size(const ModelGraph& g) {
  std::vector<std::size_t> bits(g.layers.size(), 0);
  const auto counts = count_weights_flops(g);
  for (const auto& wf : counts) {
    for (std::size_t i = 0; i < g.layers.size(); ++i) {
      if (g.layers[i].name == wf.layer) bits[i] = wf.weights * static_cast<std::size_t>(weight_bit_width(g.layers[i]));
    }
  }
  return bits;
}

EnergyTable::EnergyTable() : EnergyTable({8, 0.2}, {32, 3.1}, {8, 0.03}, {32, 0.1}, 3.7, 0.9, "45nm-default") {}

EnergyTable::EnergyTable(Anchor mult_lo, Anchor mult_hi, Anchor add_lo, Anchor add_hi, double fp32_mult,
                         double fp32_add, std::string name)
    : mult_lo_(mult_lo),
      mult_hi_(mult_hi),
      add_lo_(add_lo),
      add_hi_(add_hi),
      fp32_mult_(fp32_mult),
      fp32_add_(fp32_add),
      name_(std::move(name)) {
  for (const auto* a : {&mult_lo_, &mult_hi_, &add_lo_, &add_hi_}) {
    if (!(a->pj > 0) || !(a->bits > 0)) throw std::invalid_argument("energy table: anchors must be positive");
  }
  if (!(mult_hi_.bits > mult_lo_.bits) || !(add_hi_.bits > add_lo_.bits)) {
    throw std::invalid_argument("energy table: anchor widths must increase");
  }
  if (mult_hi_.pj < mult_lo_.pj || add_hi_.pj < add_lo_.pj) {
    throw std::invalid_argument("energy table: energies must not decrease with bit width");
  }
  if (!(fp32_mult_ > 0) || !(fp32_add_ > 0)) throw std::invalid_argument("energy table: energies must be positive");
}

double EnergyTable::power_law(const Anchor& lo, const Anchor& hi, double bits) {
  const double alpha = std::log(hi.pj / lo.pj) / std::log(hi.bits / lo.bits);
  return lo.pj * std::pow(bits / lo.bits, alpha);
}

double EnergyTable::mult_pj(double bits) const { return power_law(mult_lo_, mult_hi_, bits); }
double EnergyTable::add_pj(double bits) const { return power_law(add_lo_, add_hi_, bits); }

EnergyTable EnergyTable::parse(const std::string& json_text) {
  try {
    const auto j = ordered_json::parse(json_text);
    const auto anchor = [&](const char* op, std::size_t idx) {
      const auto& a = j.at("integer").at(op).at(idx);
      return Anchor{a.at("bits").get<double>(), a.at("pj").get<double>()};
    };
    return EnergyTable(anchor("mult", 0), anchor("mult", 1), anchor("add", 0), anchor("add", 1),
                       j.at("float32").at("mult").get<double>(), j.at("float32").at("add").get<double>(),
                       j.value("name", std::string("custom")));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("energy table: ") + e.what());
  }
}

EnergyTable EnergyTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open energy table '" + path.string() + "'");
  return parse({std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()});
}

std::vector<double> energy(const ModelGraph& g, const EnergyTable& table, EnergyMode mode) {
  std::vector<double> out(g.layers.size(), 0.0);
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    const auto& layer = g.layers[i];
    if (!layer.has_parameters()) continue;
    const double macs = static_cast<double>(nonzero(layer.weights) * uses_per_weight(g, i));
    double pj = 0;
    if (mode == EnergyMode::Float32) {
      pj = table.fp32_mult_pj() + table.fp32_add_pj();
    } else {
      const double w = weight_bit_width(layer);
      pj = table.mult_pj(w) + table.add_pj(w);
    }
    out[i] = macs * pj / 1000.0;
  }
  return out;
}

LatencyEstimate latency_ii(const ModelGraph& g, double clock_mhz, const timing::CycleParams& params) {
  const auto s = timing::schedule(g, params);
  return {s.consumption, s.ii, s.latency, timing::cycles_to_us(s.latency, clock_mhz)};
}

DeviceCapacity DeviceCapacity::parse(const std::string& json_text) {
  try {
    const auto j = ordered_json::parse(json_text);
    DeviceCapacity d;
    d.name = j.value("name", d.name);
    d.dsp = j.at("dsp").get<double>();
    d.lut = j.at("lut").get<double>();
    d.ff = j.at("ff").get<double>();
    d.bram = j.at("bram36").get<double>();
    if (!(d.dsp > 0 && d.lut > 0 && d.ff > 0 && d.bram > 0)) throw std::invalid_argument("capacities must be positive");
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("device capacity: ") + e.what());
  }
}

DeviceCapacity DeviceCapacity::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open device file '" + path.string() + "'");
  return parse({std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()});
}

std::vector<Resources> resources(const ModelGraph& g, const ResourceParams& params) {
  std::vector<Resources> out(g.layers.size());
  const timing::CycleParams cycle_params{};
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    const auto& layer = g.layers[i];
    const auto& in = g.input_shapes[i];
    const auto& o = g.output_shapes[i];
    const int in_w = g.input_format_of(i).total_bits;
    const int out_w = layer.output_format.total_bits;
    Resources& r = out[i];

    std::size_t column = item_width(in);
    if (layer.kind == LayerKind::Conv2D) column *= static_cast<std::size_t>(layer.kernel_size * layer.kernel_size);
    const std::size_t out_item = layer.kind == LayerKind::Dense ? element_count(o) : item_width(o);
    r.ff = (column * static_cast<std::size_t>(in_w) + out_item * static_cast<std::size_t>(out_w)) *
           cycle_params.pipeline_depth;

    if (!layer.has_parameters()) {
      r.lut = out_item * static_cast<std::size_t>(out_w);
      continue;
    }
    const std::size_t m = nonzero(layer.weights);
    const auto reuse = static_cast<std::size_t>(timing::layer_reuse(g, i));
    const int w = weight_bit_width(layer);
    r.multipliers = ceil_div(m, reuse);
    r.lut = r.multipliers * static_cast<std::size_t>(out_w);
    if (w > params.dsp_threshold) {
      r.dsp = r.multipliers;
    } else {
      r.lut += static_cast<std::size_t>(
          std::ceil(static_cast<double>(r.multipliers) * params.lut_per_bit2 * static_cast<double>(w * w)));
    }
    if (layer.kind == LayerKind::Conv2D) {
      const auto geo = conv_geometry(in, layer.kernel_size, layer.stride, layer.padding);
      const std::size_t fifo_bits = stream::window_capacity(layer.kernel_size, geo.padded_width) * in.back() *
                                    static_cast<std::size_t>(in_w);
      const std::size_t halves = ceil_div(fifo_bits, 18 * 1024);
      r.bram = 0.5 * static_cast<double>(halves * static_cast<std::size_t>(layer.kernel_size * layer.kernel_size));
    }
  }
  return out;
}

CostReport estimate(const ModelGraph& g, const EstimateOptions& options) {
  CostReport r;
  r.model = g.name;
  r.clock_mhz = options.clock_mhz;
  r.energy_table = options.energy_table.name();
  r.energy_mode = options.energy_mode == EnergyMode::Fixed ? "fixed" : "float32";
  r.pipeline_depth = options.cycles.pipeline_depth;
  r.device = options.device.name;

  const auto counts = count_weights_flops(g);
  const auto bits = bit_size(g);
  const auto nj = energy(g, options.energy_table, options.energy_mode);
  const auto lat = latency_ii(g, options.clock_mhz, options.cycles);
  const auto res = resources(g, options.resources);

  r.total.layer = "TOTAL";
  r.total.reuse = r.total.reuse_effective = 0;
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    const auto& layer = g.layers[i];
    LayerCost c;
    c.layer = layer.name;
    c.kind = to_string(layer.kind);
    c.weight_precision = layer.has_parameters() ? layer.weight_format.to_string() : "";
    c.output_precision = layer.output_format.to_string();
    for (const auto& wf : counts) {
      if (wf.layer == layer.name) {
        c.weights = wf.weights;
        c.flops = wf.flops;
      }
    }
    c.nonzero_weights = nonzero(layer.weights);
    c.macs = c.flops / 2;
    c.bits = bits[i];
    c.energy_nj = nj[i];
    c.reuse = timing::uses_reuse(layer) ? layer.reuse_factor : 1;
    c.reuse_effective = timing::layer_reuse(g, i);
    c.cycles = lat.cycles[i];
    c.multipliers = res[i].multipliers;
    c.dsp = res[i].dsp;
    c.lut = res[i].lut;
    c.ff = res[i].ff;
    c.bram = res[i].bram;

    auto& t = r.total;
    t.weights += c.weights;
    t.nonzero_weights += c.nonzero_weights;
    t.flops += c.flops;
    t.macs += c.macs;
    t.bits += c.bits;
    t.energy_nj += c.energy_nj;
    t.cycles += c.cycles;
    t.multipliers += c.multipliers;
    t.dsp += c.dsp;
    t.lut += c.lut;
    t.ff += c.ff;
    t.bram += c.bram;
    r.layers.push_back(std::move(c));
  }
  r.ii = lat.ii;
  r.latency_cycles = lat.latency_cycles;
  r.latency_us = lat.latency_us;
  r.dsp_percent = 100.0 * static_cast<double>(r.total.dsp) / options.device.dsp;
  r.lut_percent = 100.0 * static_cast<double>(r.total.lut) / options.device.lut;
  r.ff_percent = 100.0 * static_cast<double>(r.total.ff) / options.device.ff;
  r.bram_percent = 100.0 * r.total.bram / options.device.bram;
  return r;
}

}  // namespace streamcnn::estimate
