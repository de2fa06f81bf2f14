#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "streamcnn/model.hpp"
#include "streamcnn/timing.hpp"

namespace streamcnn::estimate {

struct WeightsFlops {
  std::string layer;
  std::size_t weights = 0;  // trainable parameters
  std::size_t flops = 0;
};

/// conv: J*K*C*N weights (+N trainable biases), 2*J*K*C*N*V*U flops;
/// dense: in*out (+out trainable biases), 2*in*out flops;
/// scale/bias: 2*C parameters, 2 flops per element. Other layers are omitted.
std::vector<WeightsFlops> count_weights_flops(const ModelGraph& g);

/// Storage width of one weight: 1 bit for binary, 2 for ternary, W otherwise.
int weight_bit_width(const Layer& layer);

/// Parameter count times weight width, per layer (0 for layers without
/// parameters).
std::vector<std::size_t> bit_size(const ModelGraph& g);

/// Per-operation energies in pJ. Integer energies follow a power law in the
/// operand width through two anchor points.
class EnergyTable {
 public:
  struct Anchor {
    double bits = 8;
    double pj = 1;
  };

  EnergyTable();  // 45 nm defaults
  EnergyTable(Anchor mult_lo, Anchor mult_hi, Anchor add_lo, Anchor add_hi, double fp32_mult, double fp32_add,
              std::string name = "custom");

  static EnergyTable load(const std::filesystem::path& path);
  static EnergyTable parse(const std::string& json_text);

  double mult_pj(double bits) const;
  double add_pj(double bits) const;
  double fp32_mult_pj() const { return fp32_mult_; }
  double fp32_add_pj() const { return fp32_add_; }
  const std::string& name() const { return name_; }

 private:
  static double power_law(const Anchor& lo, const Anchor& hi, double bits);

  Anchor mult_lo_, mult_hi_, add_lo_, add_hi_;
  double fp32_mult_, fp32_add_;
  std::string name_;
};

enum class EnergyMode { Fixed, Float32 };

/// nJ per layer: multiplications by nonzero weights times (mult + add energy)
/// at the layer's weight width, or at float32 cost.
std::vector<double> energy(const ModelGraph& g, const EnergyTable& table, EnergyMode mode = EnergyMode::Fixed);

struct LatencyEstimate {
  std::vector<std::size_t> cycles;  // per layer consumption
  std::size_t ii = 0;
  std::size_t latency_cycles = 0;
  double latency_us = 0;
};

/// Uses each layer's reuse_factor.
LatencyEstimate latency_ii(const ModelGraph& g, double clock_mhz = 200.0, const timing::CycleParams& params = {});

struct DeviceCapacity {
  std::string name = "xcvu9p";
  double dsp = 6840;
  double lut = 1182240;
  double ff = 2364480;
  double bram = 2160;  // 36 Kb blocks

  static DeviceCapacity load(const std::filesystem::path& path);
  static DeviceCapacity parse(const std::string& json_text);
};

struct ResourceParams {
  int dsp_threshold = 10;  // widths above use DSPs, at or below use LUTs
  double lut_per_bit2 = 0.5;
};

struct Resources {
  std::size_t multipliers = 0;
  std::size_t dsp = 0;
  std::size_t lut = 0;
  std::size_t ff = 0;
  double bram = 0;  // 36 Kb blocks, in half-block steps
};

/// Nonzero weights M share ceil(M / R) multipliers. Wide multipliers map to
/// DSPs; narrow ones to roughly c * w^2 LUTs each. Window FIFOs fill BRAM.
std::vector<Resources> resources(const ModelGraph& g, const ResourceParams& params = {});

struct LayerCost {
  std::string layer;
  std::string kind;
  std::string weight_precision;
  std::string output_precision;
  std::size_t weights = 0;
  std::size_t nonzero_weights = 0;
  std::size_t flops = 0;
  std::size_t macs = 0;
  std::size_t bits = 0;
  double energy_nj = 0;
  int reuse = 1;
  int reuse_effective = 1;
  std::size_t cycles = 0;
  std::size_t multipliers = 0;
  std::size_t dsp = 0;
  std::size_t lut = 0;
  std::size_t ff = 0;
  double bram = 0;

  friend bool operator==(const LayerCost&, const LayerCost&) = default;
};

struct CostReport {
  std::string model;
  double clock_mhz = 200.0;
  std::string energy_table;
  std::string energy_mode = "fixed";
  std::size_t pipeline_depth = 5;
  std::string device;
  std::vector<LayerCost> layers;
  LayerCost total;
  std::size_t ii = 0;
  std::size_t latency_cycles = 0;
  double latency_us = 0;
  double dsp_percent = 0, lut_percent = 0, ff_percent = 0, bram_percent = 0;

  friend bool operator==(const CostReport&, const CostReport&) = default;
};

struct EstimateOptions {
  double clock_mhz = 200.0;
  EnergyTable energy_table{};
  EnergyMode energy_mode = EnergyMode::Fixed;
  timing::CycleParams cycles{};
  ResourceParams resources{};
  DeviceCapacity device{};
};

CostReport estimate(const ModelGraph& g, const EstimateOptions& options = {});

std::string report_json(const CostReport& r);
CostReport report_from_json(const std::string& text);
/// `#key,value` metadata lines, a fixed header, one row per layer and a TOTAL row.
std::string report_csv(const CostReport& r);
CostReport report_from_csv(const std::string& text);

}  // namespace streamcnn::estimate
