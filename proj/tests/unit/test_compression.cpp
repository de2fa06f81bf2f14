#include <gtest/gtest.h>

#include <random>

#include "streamcnn/compression.hpp"
#include "streamcnn/reference.hpp"
#include "test_support.hpp"

namespace streamcnn::compress {
namespace {

TEST(Prune, HalfOfEveryLayerIsZeroed) {
  const auto r = prune_magnitude(testing::svhn_baseline(), 0.5);
  for (const auto& s : r.report.layers) {
    EXPECT_EQ(s.zeros, s.weights / 2) << s.layer;
    EXPECT_DOUBLE_EQ(s.zero_fraction, 0.5) << s.layer;
  }
  EXPECT_EQ(r.report.layers.front().zeros, 216u);
  EXPECT_EQ(r.report.total_zeros * 2, r.report.total_weights);
}

TEST(Prune, SmallestMagnitudesGoFirst) {
  ModelGraph g;
  g.input_shape = {4};
  g.layers = {Layer::dense("d", 2)};
  g.layers[0].weights = {0.5, -0.1, 0.3, -0.3, 0.2, 0.9, -0.05, 0.4};
  g = infer_shapes(g);
  const auto r = prune_magnitude(g, 0.375);
  EXPECT_EQ(r.graph.layers[0].weights, (std::vector<double>{0.5, 0, 0.3, -0.3, 0, 0.9, 0, 0.4}));
  // Ties prune the lower index first: 0.3 at index 2 goes before -0.3 at index 3.
  const auto r2 = prune_magnitude(g, 0.5);
  EXPECT_EQ(r2.graph.layers[0].weights, (std::vector<double>{0.5, 0, 0, -0.3, 0, 0.9, 0, 0.4}));
}

TEST(Prune, IsIdempotent) {
  const auto once = prune_magnitude(testing::svhn_baseline(), 0.5).graph;
  const auto twice = prune_magnitude(once, 0.5).graph;
  EXPECT_EQ(weights_blob(once), weights_blob(twice));
}

TEST(Prune, GlobalScopeHitsTheOverallFraction) {
  const auto r = prune_magnitude(testing::svhn_baseline(), 0.3, PruneScope::Global);
  EXPECT_EQ(r.report.total_zeros, static_cast<std::size_t>(0.3 * static_cast<double>(r.report.total_weights)));
  EXPECT_THROW(prune_magnitude(testing::svhn_baseline(), 1.0), std::invalid_argument);
  EXPECT_EQ(prune_scope_from_string(to_string(PruneScope::Global)), PruneScope::Global);
}

TEST(Prune, BiasesAreUntouched) {
  const auto& g = testing::svhn_baseline();
  const auto r = prune_magnitude(g, 0.9);
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    EXPECT_EQ(r.graph.layers[i].bias, g.layers[i].bias);
    if (g.layers[i].kind == LayerKind::ScaleBias) {
      EXPECT_EQ(r.graph.layers[i].weights, g.layers[i].weights);
    }
  }
}

TEST(Ptq, AssignsFormatsAndRoundsParameters) {
  const auto config = load_precision_config(testing::data_path("configs/autoq_mixed.json"));
  const auto q = ptq(testing::svhn_baseline(), config);
  const Layer& conv0 = *q.find("conv0");
  EXPECT_EQ(conv0.weight_format, (fx::FxFormat{5, 1}));
  for (double w : conv0.weights) EXPECT_EQ(fx::quantize_value(w, conv0.weight_format), w);
  for (const auto& l : q.layers) {
    if (l.kind == LayerKind::Softmax) {
      EXPECT_EQ(l.output_format, fx::kDefaultFormat);
    }
  }
  for (std::size_t i = 0; i < q.layers.size(); ++i) {
    const auto kind = q.layers[i].kind;
    if ((kind == LayerKind::MaxPool || kind == LayerKind::Flatten) && !config.find(q.layers[i].name)) {
      EXPECT_EQ(q.layers[i].output_format, q.input_format_of(i)) << q.layers[i].name;
    }
  }
}

TEST(Ptq, PreservesPrunedZeros) {
  const auto pruned = prune_magnitude(testing::svhn_baseline(), 0.5).graph;
  const auto q = ptq(pruned, PrecisionConfig::uniform({4, 1}));
  EXPECT_GE(sparsity_report(q).total_zeros, sparsity_report(pruned).total_zeros);
  for (std::size_t i = 0; i < q.layers.size(); ++i) {
    for (std::size_t k = 0; k < q.layers[i].weights.size(); ++k) {
      if (pruned.layers[i].weights[k] == 0.0) {
        ASSERT_EQ(q.layers[i].weights[k], 0.0);
      }
    }
  }
}

TEST(Ptq, RejectsUnknownLayersAndMissingCoverage) {
  PrecisionConfig c;
  c.entries.push_back({"nope", {8, 2}, fx::QuantizerKind::Mantissa, 0.33, {}, {}, {}});
  EXPECT_THROW(ptq(testing::svhn_baseline(), c), ModelError);
  PrecisionConfig partial;
  partial.entries.push_back({"conv0", {8, 2}, fx::QuantizerKind::Mantissa, 0.33, {}, {}, {}});
  EXPECT_THROW(ptq(testing::svhn_baseline(), partial), ModelError);
}

TEST(Describe, PercentilesMatchLinearInterpolation) {
  const auto d = describe({3, -1, 4, 1, -5, 9, 2, 6, -5, 3, 5});
  EXPECT_EQ(d.count, 11u);
  EXPECT_DOUBLE_EQ(d.p1, -5.0);
  EXPECT_DOUBLE_EQ(d.p5, -5.0);
  EXPECT_DOUBLE_EQ(d.p50, 3.0);
  EXPECT_DOUBLE_EQ(d.p95, 7.5);
  EXPECT_NEAR(d.p99, 8.7, 1e-12);
  EXPECT_EQ(d.max_abs, 9.0);
  EXPECT_EQ(d.min_nonzero_abs, 1.0);
  EXPECT_EQ(describe({}).count, 0u);
}

TEST(Describe, Coverage) {
  Distribution d;
  d.max_abs = 3.9;
  d.min_nonzero_abs = 1.0 / 32;
  EXPECT_TRUE(covered(d, {8, 3}));
  EXPECT_FALSE(covered(d, {8, 2}));
  EXPECT_FALSE(covered(d, {6, 3}));
}

TEST(Profile, ReportsEveryLayer) {
  const auto& g = testing::svhn_aq();
  std::vector<Tensor> probe{testing::scaled_image(g.input_shape, 1), testing::scaled_image(g.input_shape, 2)};
  const auto p = profile(g, probe, ArithMode::Fixed);
  EXPECT_EQ(p.activations.size(), g.layers.size());
  EXPECT_EQ(p.activations.front().values.count, 2 * element_count(g.output_shapes.front()));
  for (const auto& r : p.activations) EXPECT_LE(r.values.max_abs, r.format.max_value()) << r.layer;
  EXPECT_NE(profile_svg(p).find("<svg"), std::string::npos);
  EXPECT_THROW(profile(g, {}), std::invalid_argument);
}

TEST(Commutation, ReluCommutesWithMaxPool) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t h = rng() % 6 + 2, w = rng() % 6 + 2, c = rng() % 3 + 1;
    const Tensor x = testing::uniform_tensor({h, w, c}, rng());
    ASSERT_EQ(reference::relu(reference::pool_direct(x, 2, LayerKind::MaxPool)),
              reference::pool_direct(reference::relu(x), 2, LayerKind::MaxPool));
  }
}

TEST(Commutation, ReluDoesNotCommuteWithAvgPool) {
  const Tensor x({2, 2, 1}, std::vector<double>{-1, 1, 1, 1});
  const Tensor a = reference::relu(reference::pool_direct(x, 2, LayerKind::AvgPool));
  const Tensor b = reference::pool_direct(reference::relu(x), 2, LayerKind::AvgPool);
  EXPECT_EQ(a[0], 0.5);
  EXPECT_EQ(b[0], 0.75);
}

TEST(Reports, SparsityRendersBothFormats) {
  const auto r = prune_magnitude(testing::svhn_baseline(), 0.5).report;
  EXPECT_NE(sparsity_json(r).find("\"total_zeros\""), std::string::npos);
  EXPECT_NE(sparsity_csv(r).find("conv0"), std::string::npos);
}

}  // namespace
}  // namespace streamcnn::compress
