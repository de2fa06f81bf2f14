#include "streamcnn/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "json.hpp"
#include "streamcnn/reference.hpp"
#include "streamcnn/svg.hpp"

namespace streamcnn::verify {

namespace {

std::size_t uniform(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

bool coin(std::mt19937_64& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

fx::FxFormat random_format(std::mt19937_64& rng, int min_w, int max_w, int min_i, int max_i) {
  const int w = static_cast<int>(uniform(rng, static_cast<std::size_t>(min_w), static_cast<std::size_t>(max_w)));
  const int i = static_cast<int>(uniform(rng, static_cast<std::size_t>(min_i), static_cast<std::size_t>(max_i)));
  return fx::FxFormat{w, std::min(i, w)};
}

Tensor random_input(const Shape& shape, std::mt19937_64& rng) {
  Tensor x(shape);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (double& v : x.values()) v = dist(rng);
  return x;
}

Shape spatial_after(const Layer& layer, const Shape& in) { return layer_output_shape(layer, in); }

}  // namespace

std::size_t combo_count(const GeneratorParams& params) { return params.kernels.size() * params.strides.size() * 2; }

ModelGraph random_graph(std::uint64_t seed, std::size_t combo, const GeneratorParams& params) {
  std::mt19937_64 rng(seed);
  combo %= combo_count(params);
  const int K = params.kernels[combo % params.kernels.size()];
  const int stride = params.strides[(combo / params.kernels.size()) % params.strides.size()];
  const Padding padding = combo / (params.kernels.size() * params.strides.size()) ? Padding::Same : Padding::Valid;

  const std::size_t min_hw = padding == Padding::Valid ? static_cast<std::size_t>(K) : 1;
  const std::size_t H = uniform(rng, std::max<std::size_t>(min_hw, 2), params.max_spatial);
  const std::size_t W = uniform(rng, std::max<std::size_t>(min_hw, 2), params.max_spatial);
  const std::size_t C = uniform(rng, 1, params.max_channels);
  const int N = static_cast<int>(uniform(rng, 1, params.max_channels));

  ModelGraph g;
  g.name = "random-" + std::to_string(seed);
  g.input_shape = {H, W, C};
  g.input_format = random_format(rng, 8, 16, 2, 5);

  Layer conv = Layer::conv2d("conv0", K, N, stride, padding);
  if (coin(rng)) conv.bias.assign(static_cast<std::size_t>(N), 0.0);
  g.layers.push_back(conv);
  Shape shape = spatial_after(g.layers.back(), g.input_shape);

  if (coin(rng, 0.6)) {
    g.layers.push_back(Layer::relu("relu0"));
  }
  if (coin(rng, 0.4) && shape[0] >= 2 && shape[1] >= 2) {
    const int p = 2;
    g.layers.push_back(coin(rng) ? Layer::max_pool("pool0", p) : Layer::avg_pool("pool0", p));
    shape = spatial_after(g.layers.back(), shape);
  }
  if (coin(rng, 0.3)) {
    const int k2 = static_cast<int>(std::min<std::size_t>({3, shape[0], shape[1]}));
    const int n2 = static_cast<int>(uniform(rng, 1, params.max_channels));
    g.layers.push_back(Layer::conv2d("conv1", k2, n2, 1, coin(rng) ? Padding::Same : Padding::Valid));
    shape = spatial_after(g.layers.back(), shape);
  }
  if (coin(rng, 0.3)) {
    g.layers.push_back(Layer::flatten("flatten"));
    Layer dense = Layer::dense("dense0", static_cast<int>(uniform(rng, 1, 10)));
    if (coin(rng)) dense.bias.assign(static_cast<std::size_t>(dense.units), 0.0);
    g.layers.push_back(dense);
    if (coin(rng, 0.3)) g.layers.push_back(Layer::softmax("softmax"));
  }

  Shape in = g.input_shape;
  for (Layer& layer : g.layers) {
    layer.weights.assign(expected_weight_count(layer, in), 0.0);
    if (layer.has_bias()) layer.bias.assign(expected_bias_count(layer, in), 0.0);
    in = layer_output_shape(layer, in);
  }
  g = synthesize_weights(std::move(g), seed ^ 0x9e3779b97f4a7c15ULL);
  for (Layer& layer : g.layers) {
    if (layer.has_parameters()) {
      layer.weight_format = random_format(rng, 4, 12, 1, 3);
      for (double& w : layer.weights) w = fx::quantize_value(w, layer.weight_format);
      for (double& b : layer.bias) b = fx::quantize_value(b, layer.weight_format);
    }
  }
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    Layer& layer = g.layers[i];
    if (layer.kind == LayerKind::Softmax) {
      layer.output_format = fx::kDefaultFormat;
    } else if (layer.kind == LayerKind::MaxPool || layer.kind == LayerKind::Flatten) {
      layer.output_format = g.input_format_of(i);
    } else {
      layer.output_format = random_format(rng, 8, 18, 3, 7);
    }
  }
  return infer_shapes(std::move(g));
}

std::string describe(const ModelGraph& g) {
  std::ostringstream os;
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    const Layer& l = g.layers[i];
    const Shape& in = g.input_shapes[i];
    if (i) os << ' ';
    switch (l.kind) {
      case LayerKind::Conv2D:
        os << "conv" << l.kernel_size << 'x' << l.kernel_size << "/s" << l.stride << '/' << to_string(l.padding) << ' '
           << in[0] << 'x' << in[1] << 'x' << in[2] << "->" << l.filters;
        break;
      case LayerKind::MaxPool:
        os << "maxpool" << l.pool;
        break;
      case LayerKind::AvgPool:
        os << "avgpool" << l.pool;
        break;
      case LayerKind::Dense:
        os << "dense" << l.units;
        break;
      default:
        os << to_string(l.kind);
        break;
    }
  }
  return os.str();
}

namespace {

TrialResult run_trial(const ModelGraph& g, const Tensor& x, std::size_t trial, std::uint64_t seed,
                      const VerifyOptions& options) {
  TrialResult r;
  r.trial = trial;
  r.seed = seed;
  r.graph = describe(g);
  const Tensor expected = reference::run_direct(g, x, options.mode);
  stream::StreamOptions so;
  so.scheduling = options.scheduling;
  if (options.inject_fault) {
    const auto it = std::find_if(g.layers.begin(), g.layers.end(),
                                 [](const Layer& l) { return l.kind == LayerKind::Conv2D; });
    if (it != g.layers.end()) {
      const auto index = static_cast<std::size_t>(it - g.layers.begin());
      const ConvGeometry geo = conv_geometry(g.input_shapes[index], it->kernel_size, it->stride, it->padding);
      so.fault = stream::FaultInjection{index, geo.padded_height / 2, geo.padded_width / 2, 0};
    }
  }
  try {
    const Tensor got = stream::run_stream(g, x, options.mode, so).output;
    if (got.shape() != expected.shape()) {
      r.mismatch = true;
      r.error = "shape mismatch";
      r.max_deviation = INFINITY;
      return r;
    }
    for (std::size_t i = 0; i < got.size(); ++i) {
      r.max_deviation = std::max(r.max_deviation, std::abs(got[i] - expected[i]));
    }
    const double tol = options.mode == ArithMode::Fixed ? 0.0 : options.tolerance;
    r.mismatch = !(r.max_deviation <= tol);
  } catch (const std::exception& e) {
    r.mismatch = true;
    r.error = e.what();
    r.max_deviation = INFINITY;
  }
  return r;
}

void tally(VerifyReport& report, TrialResult r) {
  if (r.mismatch) {
    ++report.mismatches;
    if (!report.first_failing_seed) report.first_failing_seed = r.seed;
  }
  report.max_deviation = std::max(report.max_deviation, r.max_deviation);
  report.trials.push_back(std::move(r));
}

}  // namespace

VerifyReport run_verification(const VerifyOptions& options) {
  VerifyReport report;
  for (std::size_t t = 0; t < options.trials; ++t) {
    const std::uint64_t seed = options.seed + t;
    const ModelGraph g = random_graph(seed, t, options.generator);
    std::mt19937_64 rng(seed * 31 + 7);
    const Tensor x = random_input(g.input_shape, rng);
    tally(report, run_trial(g, x, t, seed, options));
  }
  return report;
}

VerifyReport run_verification(const ModelGraph& model, const VerifyOptions& options) {
  VerifyReport report;
  for (std::size_t t = 0; t < options.trials; ++t) {
    const std::uint64_t seed = options.seed + t;
    const Tensor x = random_image(model.input_shape, seed);
    tally(report, run_trial(model, x, t, seed, options));
  }
  return report;
}

std::string report_text(const VerifyReport& report) {
  std::ostringstream os;
  for (const auto& t : report.trials) {
    os << "trial " << t.trial << " seed " << t.seed << ' ' << (t.mismatch ? "MISMATCH" : "ok") << " max_dev "
       << svg::number(t.max_deviation) << ' ' << t.graph;
    if (!t.error.empty()) os << " error: " << t.error;
    os << '\n';
  }
  os << "max deviation " << svg::number(report.max_deviation) << '\n';
  if (report.first_failing_seed) os << "first failing seed " << *report.first_failing_seed << '\n';
  os << report.mismatches << " mismatches\n";
  return os.str();
}

std::string report_json(const VerifyReport& report) {
  nlohmann::ordered_json doc;
  doc["trials"] = report.trials.size();
  doc["mismatches"] = report.mismatches;
  doc["max_deviation"] = std::isfinite(report.max_deviation) ? nlohmann::ordered_json(report.max_deviation)
                                                             : nlohmann::ordered_json("inf");
  doc["first_failing_seed"] =
      report.first_failing_seed ? nlohmann::ordered_json(*report.first_failing_seed) : nlohmann::ordered_json();
  auto& rows = doc["results"] = nlohmann::ordered_json::array();
  for (const auto& t : report.trials) {
    nlohmann::ordered_json j;
    j["trial"] = t.trial;
    j["seed"] = t.seed;
    j["graph"] = t.graph;
    j["max_deviation"] = std::isfinite(t.max_deviation) ? nlohmann::ordered_json(t.max_deviation)
                                                        : nlohmann::ordered_json("inf");
    j["mismatch"] = t.mismatch;
    if (!t.error.empty()) j["error"] = t.error;
    rows.push_back(std::move(j));
  }
  return doc.dump(2) + "\n";
}

}  // namespace streamcnn::verify
