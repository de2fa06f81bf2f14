#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "streamcnn/kernels.hpp"
#include "streamcnn/model.hpp"
#include "streamcnn/precision_config.hpp"

namespace streamcnn::compress {

enum class PruneScope { PerLayer, Global };

std::string to_string(PruneScope scope);
PruneScope prune_scope_from_string(const std::string& s);

struct LayerSparsity {
  std::string layer;
  std::size_t weights = 0;
  std::size_t zeros = 0;
  double zero_fraction = 0.0;
  // Multiplications per inference by nonzero weights.
  std::size_t nonzero_multiplications = 0;
};

struct SparsityReport {
  std::vector<LayerSparsity> layers;
  std::size_t total_weights = 0;
  std::size_t total_zeros = 0;
  std::size_t nonzero_multiplications = 0;
};

/// Zero fractions of every conv/dense weight tensor (biases and scale
/// parameters are not prunable).
SparsityReport sparsity_report(const ModelGraph& g);

struct PruneResult {
  ModelGraph graph;
  SparsityReport report;
};

/// Zeros floor(sparsity * n) weights of smallest magnitude, per tensor or
/// across all conv/dense tensors together. Ties go to the lower index.
PruneResult prune_magnitude(ModelGraph g, double sparsity, PruneScope scope = PruneScope::PerLayer);

/// Post-training quantization: assigns per-layer formats from `config` and
/// rounds every stored parameter onto its layer's grid. Softmax is kept at
/// <16,6>; pooling and flatten layers inherit their input format unless named.
ModelGraph ptq(ModelGraph g, const PrecisionConfig& config);

struct Distribution {
  std::size_t count = 0;
  double min = 0, max = 0;
  double p1 = 0, p5 = 0, p50 = 0, p95 = 0, p99 = 0;
  double max_abs = 0;
  double min_nonzero_abs = 0;  // 0 when every value is zero
};

/// Linear-interpolated percentiles of `values`.
Distribution describe(std::vector<double> values);

struct LayerRange {
  std::string layer;
  Distribution values;
  fx::FxFormat format;
  bool covered = false;
};

struct RangeProfile {
  std::vector<LayerRange> weights;      // parameterised layers only
  std::vector<LayerRange> activations;  // every layer output
};

/// A distribution is covered by `f` when max |v| <= f.max_value() and the
/// smallest nonzero |v| is at least f.resolution().
bool covered(const Distribution& d, const fx::FxFormat& f);

/// Weight ranges and per-layer output ranges over the probe inputs.
RangeProfile profile(const ModelGraph& g, const std::vector<Tensor>& probe, ArithMode mode = ArithMode::Real);

std::string sparsity_json(const SparsityReport& r);
std::string sparsity_csv(const SparsityReport& r);
std::string profile_json(const RangeProfile& p);
std::string profile_csv(const RangeProfile& p);
/// Box plots of |value| per layer on a log2 axis, with the format's
/// representable band shaded.
std::string profile_svg(const RangeProfile& p);

}  // namespace streamcnn::compress
