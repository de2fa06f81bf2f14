#include <gtest/gtest.h>

#include <cmath>

#include "streamcnn/compression.hpp"
#include "streamcnn/estimator.hpp"
#include "test_support.hpp"

namespace streamcnn::estimate {
namespace {

const LayerCost& row(const CostReport& r, const std::string& name) {
  for (const auto& l : r.layers) {
    if (l.layer == name) return l;
  }
  throw std::runtime_error("no layer " + name);
}

TEST(Estimator, WeightsAndFlopsReproduceTheTable) {
  const auto counts = count_weights_flops(testing::svhn_baseline());
  std::vector<WeightsFlops> compute;
  for (const auto& c : counts) {
    if (c.layer.rfind("conv", 0) == 0 || c.layer.rfind("dense", 0) == 0 || c.layer == "output") compute.push_back(c);
  }
  ASSERT_EQ(compute.size(), 6u);
  const std::size_t weights[] = {432, 2304, 3456, 4032, 2688};
  const double mflops[] = {0.778, 0.779, 0.110, 0.008, 0.005};
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(compute[i].weights, weights[i]) << compute[i].layer;
    EXPECT_NEAR(static_cast<double>(compute[i].flops) / 1e6, mflops[i], 0.001 + 1e-12) << compute[i].layer;
  }
  EXPECT_EQ(compute[0].flops, 777600u);
  EXPECT_EQ(compute[1].flops, 778752u);
  EXPECT_EQ(compute[2].flops, 110592u);
  // Formula value for the output layer: 64 * 10 weights plus 10 biases.
  EXPECT_EQ(compute[5].weights, 650u);
}

TEST(Estimator, BitSizeFollowsWeightWidth) {
  const auto& g = testing::svhn_baseline();
  const auto bits = bit_size(g);
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    const auto& l = g.layers[i];
    EXPECT_EQ(bits[i], (l.weights.size() + l.bias.size()) * static_cast<std::size_t>(weight_bit_width(l))) << l.name;
  }
  Layer b = Layer::dense("b", 2);
  b.quantizer = fx::QuantizerSpec::binary();
  EXPECT_EQ(weight_bit_width(b), 1);
  b.quantizer = fx::QuantizerSpec::ternary();
  EXPECT_EQ(weight_bit_width(b), 2);
}

TEST(Estimator, EnergyRatiosAreInRange) {
  const EnergyTable table = EnergyTable::load(testing::data_path("configs/energy_45nm.json"));
  const auto& g = testing::svhn_baseline();
  const auto nj = energy(g, table);
  const auto idx = [&](const char* name) { return static_cast<std::size_t>(g.find(name) - g.layers.data()); };
  const double ratio = nj[idx("conv0")] / nj[idx("conv2")];
  EXPECT_GE(ratio, 5.6);
  EXPECT_LE(ratio, 8.5);

  const auto config = load_precision_config(testing::data_path("configs/autoq_mixed.json"));
  const auto aq = compress::ptq(g, config);
  const auto uniform = compress::ptq(g, PrecisionConfig::uniform(fx::kDefaultFormat));
  const auto total = [&](const ModelGraph& m) {
    double s = 0;
    for (double v : energy(m, table)) s += v;
    return s;
  };
  EXPECT_LT(total(aq), 0.15 * total(uniform));
  EXPECT_GT(total(aq), 0.0);
}

TEST(Estimator, EnergyPowerLawPassesThroughAnchors) {
  const EnergyTable t({8, 0.2}, {32, 3.1}, {8, 0.03}, {32, 0.1}, 3.7, 0.9);
  EXPECT_NEAR(t.mult_pj(8), 0.2, 1e-12);
  EXPECT_NEAR(t.mult_pj(32), 3.1, 1e-12);
  EXPECT_NEAR(t.add_pj(32), 0.1, 1e-12);
  EXPECT_LT(t.mult_pj(4), t.mult_pj(8));
  EXPECT_LT(t.mult_pj(16), t.mult_pj(32));
  EXPECT_THROW(EnergyTable::parse("{"), std::exception);
}

TEST(Estimator, FloatModeCostsMoreThanNarrowFixed) {
  const auto g = compress::ptq(testing::svhn_baseline(), PrecisionConfig::uniform({8, 3}));
  const EnergyTable t;
  double fixed = 0, fp = 0;
  for (double v : energy(g, t, EnergyMode::Fixed)) fixed += v;
  for (double v : energy(g, t, EnergyMode::Float32)) fp += v;
  EXPECT_LT(fixed, fp);
}

TEST(Estimator, DspTimesReuseIsConstant) {
  for (int r : {1, 2, 3, 4, 6, 8, 16}) {
    ModelGraph g = testing::svhn_baseline();
    for (auto& l : g.layers) l.reuse_factor = r;
    const auto res = resources(g);
    for (std::size_t i = 0; i < g.layers.size(); ++i) {
      if (!g.layers[i].is_compute()) continue;
      const auto reff = static_cast<std::size_t>(timing::layer_reuse(g, i));
      const std::size_t m = g.layers[i].weights.size();
      EXPECT_EQ(res[i].dsp * reff, m) << g.layers[i].name << " R=" << r;
    }
  }
}

TEST(Estimator, NarrowWeightsUseLuts) {
  const auto g = compress::ptq(testing::svhn_baseline(), PrecisionConfig::uniform({6, 1}));
  for (const auto& r : resources(g)) EXPECT_EQ(r.dsp, 0u);
}

TEST(Estimator, LatencyIsAffineAndIncreasingInReuse) {
  std::vector<double> lat;
  for (int r : {1, 2, 3, 4, 6}) {
    ModelGraph g = testing::svhn_baseline();
    for (auto& l : g.layers) l.reuse_factor = r;
    lat.push_back(static_cast<double>(latency_ii(g).latency_cycles));
  }
  const double slope = (lat[1] - lat[0]) / 1.0;
  const int rs[] = {1, 2, 3, 4, 6};
  for (std::size_t i = 0; i < lat.size(); ++i) {
    EXPECT_DOUBLE_EQ(lat[i], lat[0] + slope * (rs[i] - 1));
    if (i) {
      EXPECT_GT(lat[i], lat[i - 1]);
    }
  }
}

TEST(Estimator, SvhnLatency) {
  const auto l = latency_ii(testing::svhn_baseline(), 200.0);
  EXPECT_GE(l.ii, 1024u);
  EXPECT_LE(l.ii, 1060u);
  EXPECT_EQ(l.latency_cycles, 1035u);
  EXPECT_GE(l.latency_us, 5.1);
  EXPECT_LE(l.latency_us, 5.3);
}

TEST(Estimator, PruningHalvesMultipliersAndDsps) {
  const auto& base = testing::svhn_baseline();
  const auto pruned = compress::prune_magnitude(base, 0.5).graph;
  const auto a = estimate(base), b = estimate(pruned);
  for (const char* name : {"conv0", "conv1", "conv2", "dense0", "dense1", "output"}) {
    EXPECT_EQ(row(b, name).multipliers * 2, row(a, name).multipliers) << name;
    EXPECT_EQ(row(b, name).dsp * 2, row(a, name).dsp) << name;
  }
  EXPECT_EQ(a.total.multipliers, 13714u);
  EXPECT_EQ(b.total.multipliers, 6938u);
}

TEST(Estimator, ReportRoundTripsThroughJsonAndCsv) {
  const auto r = estimate(testing::svhn_aq());
  EXPECT_EQ(report_from_json(report_json(r)), r);
  const auto c = report_from_csv(report_csv(r));
  EXPECT_EQ(report_csv(c), report_csv(r));
  EXPECT_EQ(report_json(c), report_json(r));
}

TEST(Estimator, ReportMatchesGolden) {
  const auto r = estimate(testing::svhn_baseline());
  EXPECT_EQ(report_json(r), testing::read_text(std::string(STREAMCNN_GOLDEN_DIR) + "/svhn_baseline_estimate.json"));
}

TEST(Estimator, DeviceCapacityParses) {
  const auto d = DeviceCapacity::load(testing::data_path("configs/vu9p.json"));
  EXPECT_EQ(d.name, "xcvu9p");
  EXPECT_EQ(d.dsp, 6840);
  EXPECT_THROW(DeviceCapacity::parse("[]"), std::exception);
}

}  // namespace
}  // namespace streamcnn::estimate
