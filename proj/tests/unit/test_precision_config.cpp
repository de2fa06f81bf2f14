#include <gtest/gtest.h>

#include "streamcnn/precision_config.hpp"
#include "test_support.hpp"

namespace streamcnn {
namespace {

TEST(PrecisionConfig, QKerasWidthsGainASignBit) {
  EXPECT_EQ(qkeras_to_engine({4, 0}), (fx::FxFormat{5, 1}));
  EXPECT_EQ(qkeras_to_engine({3, 1}).frac_bits(), 2);
  const auto c = parse_precision_config(R"({
    "default": {"total_bits": 16, "integer_bits": 6},
    "layers": [
      {"layer_name": "a", "source": "qkeras", "total_bits": 4, "integer_bits": 0},
      {"layer_name": "b", "source": "hls", "total_bits": 4, "integer_bits": 0},
      {"layer_name": "c", "total_bits": 8, "integer_bits": 2, "output_total_bits": 12, "output_integer_bits": 4,
       "rounding": "truncate", "overflow": "wrap"},
      {"layer_name": "t", "total_bits": 2, "integer_bits": 2, "quantizer_kind": "ternary", "threshold": 0.5}
    ]})");
  ASSERT_EQ(c.entries.size(), 4u);
  EXPECT_EQ(*c.default_format, fx::kDefaultFormat);
  EXPECT_EQ(c.find("a")->format, (fx::FxFormat{5, 1}));
  EXPECT_EQ(c.find("b")->format, (fx::FxFormat{4, 0}));
  EXPECT_EQ(*c.find("c")->output_format, (fx::FxFormat{12, 4}));
  EXPECT_EQ(*c.find("c")->rounding, fx::Rounding::Truncate);
  EXPECT_EQ(*c.find("c")->overflow, fx::Overflow::Wrap);
  EXPECT_EQ(c.find("t")->quantizer_kind, fx::QuantizerKind::Ternary);
  EXPECT_EQ(c.find("t")->threshold, 0.5);
  EXPECT_EQ(c.find("zzz"), nullptr);
}

TEST(PrecisionConfig, DocumentLevelSourceApplies) {
  const auto c = parse_precision_config(
      R"({"source": "qkeras", "layers": [{"layer_name": "a", "total_bits": 6, "integer_bits": 2},
                                         {"layer_name": "b", "source": "engine", "total_bits": 6, "integer_bits": 2}]})");
  EXPECT_EQ(c.find("a")->format, (fx::FxFormat{7, 3}));
  EXPECT_EQ(c.find("b")->format, (fx::FxFormat{6, 2}));
  EXPECT_FALSE(c.default_format.has_value());
}

TEST(PrecisionConfig, ErrorsAreReported) {
  EXPECT_THROW(parse_precision_config("[1,"), fx::FxError);
  EXPECT_THROW(parse_precision_config(R"({"layers": [{"layer_name": "a", "total_bits": 0, "integer_bits": 0}]})"),
               fx::FxError);
  EXPECT_THROW(parse_precision_config(R"({"layers": [{"layer_name": "a", "integer_bits": 0}]})"), fx::FxError);
  EXPECT_THROW(
      parse_precision_config(R"({"layers": [{"layer_name": "a", "source": "tf", "total_bits": 4, "integer_bits": 0}]})"),
      fx::FxError);
  EXPECT_THROW(parse_precision_config(R"({"layers": [{"layer_name": "a", "total_bits": 2, "integer_bits": 2,
                                                      "quantizer_kind": "ternary", "threshold": 0}]})"),
               fx::FxError);
  EXPECT_THROW(load_precision_config("/nonexistent/p.json"), fx::FxError);
}

TEST(PrecisionConfig, SerializationRoundTrips) {
  const auto original = load_precision_config(testing::data_path("configs/autoq_mixed.json"));
  const auto text = precision_config_json(original);
  const auto back = parse_precision_config(text);
  ASSERT_EQ(back.entries.size(), original.entries.size());
  for (std::size_t i = 0; i < back.entries.size(); ++i) {
    EXPECT_EQ(back.entries[i].layer_name, original.entries[i].layer_name);
    EXPECT_EQ(back.entries[i].format, original.entries[i].format);
    EXPECT_EQ(back.entries[i].quantizer_kind, original.entries[i].quantizer_kind);
    EXPECT_EQ(back.entries[i].output_format, original.entries[i].output_format);
  }
  EXPECT_EQ(back.default_format, original.default_format);
  EXPECT_EQ(precision_config_json(back), text);
}

TEST(PrecisionConfig, UniformSetsOnlyTheDefault) {
  const auto c = PrecisionConfig::uniform({8, 2});
  EXPECT_EQ(*c.default_format, (fx::FxFormat{8, 2}));
  EXPECT_TRUE(c.entries.empty());
}

}  // namespace
}  // namespace streamcnn
