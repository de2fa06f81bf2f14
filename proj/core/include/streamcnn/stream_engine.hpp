#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "streamcnn/fifo.hpp"
#include "streamcnn/instruction.hpp"
#include "streamcnn/kernels.hpp"
#include "streamcnn/model.hpp"
#include "streamcnn/timing.hpp"

namespace streamcnn::stream {

enum class SchedulingMode { Cooperative, Threaded };

std::string to_string(SchedulingMode mode);
SchedulingMode scheduling_mode_from_string(const std::string& s);

struct CycleStats {
  std::string layer;
  std::size_t items_in = 0;       // real items read from the input FIFO
  std::size_t padding_items = 0;  // synthetic zero items (same padding)
  std::size_t items_out = 0;
  int reuse = 1;
  std::size_t consumption_cycles = 0;
  std::size_t drain_cycles = 0;
  // Convolution layers only.
  std::size_t window_capacity = 0;
  std::size_t window_peak = 0;
  std::size_t instruction_entries = 0;
  bool compressed = false;

  friend bool operator==(const CycleStats&, const CycleStats&) = default;
};

struct PipelineStats {
  std::vector<CycleStats> layers;
  std::size_t ii = 0;
  std::size_t latency_cycles = 0;
  double latency_us = 0.0;

  friend bool operator==(const PipelineStats&, const PipelineStats&) = default;
};

/// Test hook: XOR `bit` into the mask looked up for padded pixel (pv, pu) of
/// convolution layer `layer`.
struct FaultInjection {
  std::size_t layer = 0;
  std::size_t pv = 0, pu = 0;
  int bit = 0;
};

struct StreamOptions {
  SchedulingMode scheduling = SchedulingMode::Cooperative;
  bool compress = true;
  timing::CycleParams cycles{};
  double clock_mhz = 200.0;
  std::size_t channel_capacity = 16;
  std::optional<std::size_t> window_capacity;  // overrides the sizing rule
  std::optional<FaultInjection> fault;
};

struct StreamResult {
  Tensor output;
  PipelineStats stats;
};

/// (H, W, C) -> H*W items of C values in row-major order; vectors -> one item.
std::vector<StreamItem> to_stream(const Tensor& x);
Tensor from_stream(const std::vector<StreamItem>& items, const Shape& shape);

struct LayerStreamResult {
  std::vector<StreamItem> items;
  CycleStats stats;
};

LayerStreamResult conv2d_stream(const std::vector<StreamItem>& x, const Shape& input_shape, const Layer& layer,
                                const InstructionArray& ia, ArithMode mode = ArithMode::Real,
                                const fx::FxFormat& in_format = fx::kDefaultFormat);

LayerStreamResult pool_stream(const std::vector<StreamItem>& x, const Shape& input_shape, const Layer& layer,
                              const PoolLookup& lookup, ArithMode mode = ArithMode::Real,
                              const fx::FxFormat& in_format = fx::kDefaultFormat);

/// Runs the graph as a pipeline of layer tasks joined by bounded FIFOs.
/// Throws DeadlockError when no task can progress before the output is
/// complete, naming the starved or overflowing buffer.
StreamResult run_stream(const ModelGraph& g, const Tensor& x, ArithMode mode = ArithMode::Real,
                        const StreamOptions& options = {});

}  // namespace streamcnn::stream
