#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "streamcnn/model.hpp"
#include "streamcnn/stream_engine.hpp"

/// Randomized stream-vs-direct equivalence checking.
namespace streamcnn::verify {

struct GeneratorParams {
  std::vector<int> kernels{1, 3, 5};
  std::vector<int> strides{1, 2};
  std::size_t max_spatial = 16;
  std::size_t max_channels = 8;
};

/// Random graph with synthesized parameters: a convolution whose (K, stride,
/// padding) is the `combo`-th point of the parameter grid (wrapping), followed
/// by a random tail of ReLU, pooling, a second convolution and a dense head.
/// Fixed-point formats are drawn at random as well.
ModelGraph random_graph(std::uint64_t seed, std::size_t combo, const GeneratorParams& params = {});

/// Number of (K, stride, padding) combinations the generator cycles through.
std::size_t combo_count(const GeneratorParams& params = {});

struct VerifyOptions {
  std::size_t trials = 100;
  std::uint64_t seed = 1;
  ArithMode mode = ArithMode::Fixed;
  stream::SchedulingMode scheduling = stream::SchedulingMode::Cooperative;
  /// Real mode tolerates this absolute deviation; fixed mode requires 0.
  double tolerance = 1e-9;
  /// Negative control: flip one mask bit of the first convolution.
  bool inject_fault = false;
  GeneratorParams generator{};
};

struct TrialResult {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::string graph;
  double max_deviation = 0.0;
  bool mismatch = false;
  std::string error;  // stream engine failure, if any
};

struct VerifyReport {
  std::vector<TrialResult> trials;
  std::size_t mismatches = 0;
  double max_deviation = 0.0;
  std::optional<std::uint64_t> first_failing_seed;

  bool ok() const { return mismatches == 0; }
};

/// Trials on generator graphs; trial t uses seed `options.seed + t`.
VerifyReport run_verification(const VerifyOptions& options);
/// Trials on a fixed model with random input images.
VerifyReport run_verification(const ModelGraph& model, const VerifyOptions& options);

/// One-line-per-trial summary ending in "<n> mismatches".
std::string report_text(const VerifyReport& report);
std::string report_json(const VerifyReport& report);

/// Short description such as "conv3x3/s2/same 9x7x4->5 relu maxpool2 dense6".
std::string describe(const ModelGraph& g);

}  // namespace streamcnn::verify
