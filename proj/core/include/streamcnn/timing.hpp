#pragma once

#include <cstddef>
#include <vector>

#include "streamcnn/model.hpp"

/// Cycle model shared by the streaming simulator and the static estimator.
///
/// A layer consumes one stream item per cycle at R = 1 and R cycles per item
/// otherwise. The initiation interval is the slowest layer's consumption plus
/// a fixed pipeline depth; the latency adds a drain cycle per conv/dense layer.
namespace streamcnn::timing {

struct CycleParams {
  std::size_t pipeline_depth = 5;
  std::size_t drain_cycles = 1;
};

/// Layers whose multipliers are shared according to the reuse factor.
bool uses_reuse(const Layer& layer);

/// Number of multiplications per evaluation if fully parallel.
std::size_t multiplier_slots(const Layer& layer, const Shape& input);

/// Valid reuse factor closest to `requested`: a divisor of `slots`, ties
/// resolved towards the larger divisor.
int effective_reuse(std::size_t slots, int requested);

/// Effective reuse for layer i of an inferred graph (1 for layers without multipliers).
int layer_reuse(const ModelGraph& g, std::size_t i);

/// Stream items entering each layer: H*W for feature maps, 1 for the first
/// vector; flatten forwards its items unchanged.
std::vector<std::size_t> input_item_counts(const ModelGraph& g);

std::size_t consumption_cycles(std::size_t items, int reuse);
std::size_t drain_cycles(const Layer& layer, const CycleParams& params = {});

struct Schedule {
  std::vector<std::size_t> consumption;  // per layer
  std::size_t ii = 0;
  std::size_t latency = 0;
};

Schedule schedule(const ModelGraph& g, const CycleParams& params = {});

double cycles_to_us(std::size_t cycles, double clock_mhz);

}  // namespace streamcnn::timing
