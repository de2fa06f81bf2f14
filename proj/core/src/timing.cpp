#include "streamcnn/timing.hpp"

#include <algorithm>
#include <cstdlib>

namespace streamcnn::timing {

bool uses_reuse(const Layer& layer) { return layer.has_parameters(); }

std::size_t multiplier_slots(const Layer& layer, const Shape& input) {
  switch (layer.kind) {
    case LayerKind::Conv2D: {
      const auto k = static_cast<std::size_t>(layer.kernel_size);
      return k * k * input.back() * static_cast<std::size_t>(layer.filters);
    }
    case LayerKind::Dense:
      return element_count(input) * static_cast<std::size_t>(layer.units);
    case LayerKind::ScaleBias:
      return input.back();
    default:
      return 0;
  }
}

int effective_reuse(std::size_t slots, int requested) {
  if (requested <= 1 || slots <= 1) return 1;
  const auto r = static_cast<std::size_t>(requested);
  if (r >= slots) return static_cast<int>(slots);
  std::size_t best = 1;
  for (std::size_t d = 1; d <= slots; ++d) {
    if (slots % d != 0) continue;
    const auto dist = d > r ? d - r : r - d;
    const auto best_dist = best > r ? best - r : r - best;
    if (dist <= best_dist) best = d;
    if (d > r) break;
  }
  return static_cast<int>(best);
}

int layer_reuse(const ModelGraph& g, std::size_t i) {
  const auto& layer = g.layers[i];
  if (!uses_reuse(layer)) return 1;
  return effective_reuse(multiplier_slots(layer, g.input_shapes[i]), layer.reuse_factor);
}

std::vector<std::size_t> input_item_counts(const ModelGraph& g) {
  std::vector<std::size_t> counts;
  counts.reserve(g.layers.size());
  std::size_t items = g.input_shape.size() == 3 ? g.input_shape[0] * g.input_shape[1] : 1;
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    counts.push_back(items);
    const auto& out = g.output_shapes[i];
    if (g.layers[i].kind == LayerKind::Flatten) continue;
    if (out.size() == 3) {
      items = out[0] * out[1];
    } else if (g.layers[i].kind == LayerKind::Dense || g.layers[i].kind == LayerKind::Softmax) {
      items = 1;
    }
  }
  return counts;
}

std::size_t consumption_cycles(std::size_t items, int reuse) { return items * static_cast<std::size_t>(std::max(reuse, 1)); }

std::size_t drain_cycles(const Layer& layer, const CycleParams& params) {
  return layer.is_compute() ? params.drain_cycles : 0;
}

Schedule schedule(const ModelGraph& g, const CycleParams& params) {
  Schedule s;
  if (g.layers.empty()) return s;
  const auto items = input_item_counts(g);
  std::size_t drain = 0;
  std::size_t slowest = 0;
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    s.consumption.push_back(consumption_cycles(items[i], layer_reuse(g, i)));
    slowest = std::max(slowest, s.consumption.back());
    drain += drain_cycles(g.layers[i], params);
  }
  s.ii = slowest + params.pipeline_depth;
  s.latency = s.ii + drain;
  return s;
}

double cycles_to_us(std::size_t cycles, double clock_mhz) { return static_cast<double>(cycles) / clock_mhz; }

}  // namespace streamcnn::timing
