#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "streamcnn/fixed_point.hpp"

namespace streamcnn::fx {
namespace {

struct QuantizeCase {
  double x;
  int total_bits, integer_bits;
  const char* rounding;
  const char* overflow;
  double expected;
};

// Exact rational oracle (tests/oracles/gen_oracles.py).
const QuantizeCase kCases[] = {
    {0.3, 8, 3, "half_even", "saturate", 0.3125},
    {0.359375, 8, 3, "half_even", "saturate", 0.375},
    {0.390625, 8, 3, "half_even", "saturate", 0.375},
    {-0.359375, 8, 3, "half_even", "saturate", -0.375},
    {-0.3, 8, 3, "truncate", "saturate", -0.3125},
    {5.0, 8, 3, "half_even", "saturate", 3.96875},
    {-5.0, 8, 3, "half_even", "saturate", -4.0},
    {5.0, 8, 3, "half_even", "wrap", -3.0},
    {3.99, 8, 3, "half_even", "wrap", -4.0},
    {1234.5678, 16, 6, "half_even", "saturate", 31.9990234375},
    {3.14159265, 16, 6, "half_even", "saturate", 3.1416015625},
    {-3.14159265, 16, 6, "truncate", "saturate", -3.1416015625},
    {0.7, 4, 0, "half_even", "saturate", 0.4375},
    {100.0, 6, 8, "half_even", "saturate", 100.0},
    {97.0, 6, 8, "half_even", "saturate", 96.0},
};

TEST(FixedPoint, QuantizeMatchesRationalOracle) {
  for (const auto& c : kCases) {
    const FxFormat f{c.total_bits, c.integer_bits};
    EXPECT_EQ(quantize_value(c.x, f, rounding_from_string(c.rounding), overflow_from_string(c.overflow)), c.expected)
        << c.x << " -> " << f.to_string() << " " << c.rounding << " " << c.overflow;
  }
}

TEST(FixedPoint, FormatGeometry) {
  const FxFormat f{8, 3};
  EXPECT_EQ(f.frac_bits(), 5);
  EXPECT_EQ(f.resolution(), 1.0 / 32);
  EXPECT_EQ(f.max_value(), 4.0 - 1.0 / 32);
  EXPECT_EQ(f.min_value(), -4.0);
  EXPECT_EQ(f.raw_max(), 127);
  EXPECT_EQ(f.raw_min(), -128);
  EXPECT_EQ(f.to_string(), "<8,3>");
  EXPECT_FALSE((FxFormat{0, 0}.valid()));
  EXPECT_FALSE((FxFormat{kMaxRawBits + 1, 4}.valid()));
  EXPECT_THROW(quantize(1.0, FxFormat{0, 0}), FxError);
}

TEST(FixedPoint, NonFiniteInputsAreTotal) {
  const FxFormat f{8, 3};
  EXPECT_EQ(quantize_value(std::nan(""), f), 0.0);
  EXPECT_EQ(quantize_value(INFINITY, f), f.max_value());
  EXPECT_EQ(quantize_value(-INFINITY, f), f.min_value());
}

TEST(FixedPoint, WideFormatsStayInRange) {
  const FxFormat f{62, 2};
  const FxValue v = quantize(1e30, f);
  EXPECT_EQ(v.raw, f.raw_max());
  EXPECT_EQ(quantize(-1e30, f).raw, f.raw_min());
}

TEST(FixedPoint, ExhaustiveCodePointRoundTrip) {
  for (int w = 1; w <= 8; ++w) {
    for (int i = -3; i <= w + 3; ++i) {
      for (bool is_signed : {true, false}) {
        const FxFormat f{w, i, is_signed};
        for (std::int64_t raw = f.raw_min(); raw <= f.raw_max(); ++raw) {
          const double v = std::ldexp(static_cast<double>(raw), -f.frac_bits());
          for (auto r : {Rounding::HalfEven, Rounding::Truncate}) {
            for (auto o : {Overflow::Saturate, Overflow::Wrap}) {
              ASSERT_EQ(quantize(v, f, r, o).raw, raw) << f.to_string() << " raw " << raw;
            }
          }
          ASSERT_EQ(requantize(raw, f.frac_bits(), f).raw, raw);
          ASSERT_EQ(exact_raw(v, f.frac_bits()), raw);
        }
      }
    }
  }
}

TEST(FixedPoint, ErrorIsMonotoneInWidth) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-7.4, 7.4);
  for (int trial = 0; trial < 2000; ++trial) {
    const double x = dist(rng);
    double prev = INFINITY;
    for (int w = 5; w <= 24; ++w) {
      const FxFormat f{w, 4};
      const double err = std::abs(quantize_value(x, f) - x);
      ASSERT_LE(err, f.resolution() / 2);
      ASSERT_LE(err, prev) << x << " at " << f.to_string();
      prev = err;
    }
  }
}

TEST(FixedPoint, SaturationBoundsAndWrapIsModular) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> dist(-1000.0, 1000.0);
  const FxFormat f{10, 4};
  for (int trial = 0; trial < 5000; ++trial) {
    const double x = dist(rng);
    const double s = quantize_value(x, f);
    ASSERT_GE(s, f.min_value());
    ASSERT_LE(s, f.max_value());
    const auto wide = quantize(x, FxFormat{40, 34});
    const auto wrapped = quantize(x, f, Rounding::HalfEven, Overflow::Wrap);
    ASSERT_EQ(((wide.raw - wrapped.raw) % 1024 + 1024) % 1024, 0);
  }
}

TEST(FixedPoint, RequantizeRoundsHalfEvenAndTruncates) {
  const FxFormat f{8, 4};  // 4 fractional bits
  EXPECT_EQ(requantize(92, 7, f).raw, 12);  // 11.5 ties to even 12
  EXPECT_EQ(requantize(72, 7, f).raw, 9);   // exact
  EXPECT_EQ(requantize(68, 7, f).raw, 8);   // 8.5 ties to even 8
  EXPECT_EQ(requantize(76, 7, f).raw, 10);  // 9.5 ties to even 10
  EXPECT_EQ(requantize(77, 7, f).raw, 10);  // 9.625 rounds up
  EXPECT_EQ(requantize(-68, 7, f, Rounding::Truncate).raw, -9);
  EXPECT_EQ(requantize(1, 0, FxFormat{8, 8}).raw, 1);
  EXPECT_EQ(requantize(3, -2, FxFormat{8, 8}).raw, 12);
}

TEST(FixedPoint, RequantizeLargeLeftShiftWraps) {
  // 3 * 2^30 in <8,8> wraps to 0 (a multiple of 2^8); 3 * 2^7 wraps to -128.
  EXPECT_EQ(requantize(3, -30, FxFormat{8, 8}, Rounding::HalfEven, Overflow::Wrap).raw, 0);
  EXPECT_EQ(requantize(3, -7, FxFormat{8, 8}, Rounding::HalfEven, Overflow::Wrap).raw, -128);
  EXPECT_EQ(requantize(3, -40, FxFormat{8, 8}).raw, 127);
}

TEST(FixedPoint, RequantizeProductUsesWideIntermediate) {
  // (2^40 + 3) * 2^30 overflows 64 bits; scaled back by 2^-70 it is 1 + 3 * 2^-40.
  const FxValue v = requantize_product((std::int64_t{1} << 40) + 3, 40, std::int64_t{1} << 30, 30, FxFormat{16, 4});
  EXPECT_EQ(v.value(), 1.0);
  // Mean of four values via a 2^32 / 4 reciprocal.
  const FxValue mean = requantize_product(10, 2, std::int64_t{1} << 30, 32, FxFormat{16, 6});
  EXPECT_EQ(mean.value(), 10.0 / 4 / 4);
}

TEST(FixedPoint, ExactRawRejectsOffGridValues) {
  EXPECT_EQ(exact_raw(0.75, 2), 3);
  EXPECT_THROW(exact_raw(0.3, 4), FxError);
  EXPECT_THROW(exact_raw(std::ldexp(1.0, 70), 0), FxError);
}

TEST(FixedPoint, AccumulatorNeverOverflowsAtExtremes) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 500; ++trial) {
    const FxFormat a{static_cast<int>(rng() % 16) + 1, static_cast<int>(rng() % 9) - 2};
    const FxFormat w{static_cast<int>(rng() % 16) + 1, static_cast<int>(rng() % 9) - 2};
    const FxFormat b{static_cast<int>(rng() % 16) + 1, static_cast<int>(rng() % 9) - 2};
    const std::size_t terms = rng() % 5000 + 1;
    const FxFormat acc = accumulator_format(a, w, terms, b);
    ASSERT_EQ(acc.frac_bits(), std::max(a.frac_bits() + w.frac_bits(), b.frac_bits()));
    // Worst case: every product is min * min, plus the most negative or positive bias.
    const long double prod = std::ldexp(1.0L, a.integer_bits - 1 + w.integer_bits - 1);
    const long double bias = std::ldexp(1.0L, b.integer_bits - 1);
    const long double worst = prod * static_cast<long double>(terms) + bias;
    ASSERT_LT(worst, std::ldexp(1.0L, acc.integer_bits - 1)) << a.to_string() << w.to_string() << b.to_string();
  }
}

TEST(FixedPoint, AccumulatorTooWideThrows) {
  EXPECT_THROW(accumulator_format(FxFormat{40, 10}, FxFormat{40, 10}, 1000, FxFormat{16, 6}), FxError);
}

TEST(FixedPoint, MacIsExact) {
  const FxFormat af{8, 3}, wf{6, 2};
  const FxFormat accf = accumulator_format(af, wf, 2);
  FxValue acc{0, accf};
  acc = fx_mac(acc, quantize(1.5, af), quantize(-0.75, wf));
  acc = fx_mac(acc, quantize(2.25, af), quantize(0.5, wf));
  EXPECT_EQ(acc.value(), 1.5 * -0.75 + 2.25 * 0.5);
}

TEST(FixedPoint, ModeStringsRoundTrip) {
  for (auto r : {Rounding::HalfEven, Rounding::Truncate}) EXPECT_EQ(rounding_from_string(to_string(r)), r);
  for (auto o : {Overflow::Saturate, Overflow::Wrap}) EXPECT_EQ(overflow_from_string(to_string(o)), o);
  EXPECT_THROW(rounding_from_string("stochastic"), FxError);
}

}  // namespace
}  // namespace streamcnn::fx
