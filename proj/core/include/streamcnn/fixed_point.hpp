#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace streamcnn::fx {

/// Fixed-point format <W,I>: W total bits, I integer bits.
///
/// I counts the sign bit for signed formats, the same convention as
/// ap_fixed<W,I>. <16,6> therefore spans [-32, 32 - 2^-10] with a
/// resolution of 2^-10. I may be <= 0 or > W; the resolution is always
/// 2^(I-W) and raw mantissas always occupy W bits.
struct FxFormat {
  int total_bits = 16;
  int integer_bits = 6;
  bool is_signed = true;

  constexpr int frac_bits() const { return total_bits - integer_bits; }

  bool valid() const;
  double resolution() const;
  double max_value() const;
  double min_value() const;
  std::int64_t raw_max() const;
  std::int64_t raw_min() const;
  bool representable(std::int64_t raw) const { return raw >= raw_min() && raw <= raw_max(); }

  std::string to_string() const;

  friend bool operator==(const FxFormat&, const FxFormat&) = default;
};

inline constexpr FxFormat kDefaultFormat{16, 6, true};

/// Widest raw mantissa the integer engine carries.
inline constexpr int kMaxRawBits = 62;

enum class Rounding { HalfEven, Truncate };
enum class Overflow { Saturate, Wrap };

std::string to_string(Rounding r);
std::string to_string(Overflow o);
Rounding rounding_from_string(const std::string& s);
Overflow overflow_from_string(const std::string& s);

class FxError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a wide accumulator would wrap; signals a mis-sized accumulator.
class FxOverflowError : public FxError {
 public:
  using FxError::FxError;
};

struct FxValue {
  std::int64_t raw = 0;
  FxFormat format{};

  double value() const;
};

/// Quantizes a real number. Total: NaN maps to 0, infinities saturate (or wrap
/// like any out-of-range value).
FxValue quantize(double x, const FxFormat& f, Rounding rounding = Rounding::HalfEven,
                 Overflow overflow = Overflow::Saturate);

/// quantize(x).value()
double quantize_value(double x, const FxFormat& f, Rounding rounding = Rounding::HalfEven,
                      Overflow overflow = Overflow::Saturate);

/// Casts an exact raw mantissa with `frac_bits` fractional bits into `f`.
FxValue requantize(std::int64_t raw, int frac_bits, const FxFormat& f,
                   Rounding rounding = Rounding::HalfEven, Overflow overflow = Overflow::Saturate);

/// Casts raw * multiplier, with `frac_bits + multiplier_frac` fractional bits,
/// into `f`. The product is formed in 128-bit arithmetic.
FxValue requantize_product(std::int64_t raw, int frac_bits, std::int64_t multiplier, int multiplier_frac,
                           const FxFormat& f, Rounding rounding = Rounding::HalfEven,
                           Overflow overflow = Overflow::Saturate);

/// Exact mantissa of a value known to sit on the 2^-frac_bits grid.
/// Throws FxError if it does not.
std::int64_t exact_raw(double value, int frac_bits);

/// Accumulator sized so that `terms` products of `a` and `w` operands plus one
/// bias term in `bias` never overflow. With m = max(I_a + I_w - 2, I_bias - 1):
///   integer bits = m + ceil(log2(terms + 1)) + 2
///   fractional bits = max(F_a + F_w, F_bias)
/// The form without a bias uses I_a + I_w + ceil(log2(terms)) integer bits.
/// Throws FxError if the result exceeds kMaxRawBits.
FxFormat accumulator_format(const FxFormat& a, const FxFormat& w, std::size_t terms,
                            const FxFormat& bias);
FxFormat accumulator_format(const FxFormat& a, const FxFormat& w, std::size_t terms);

/// acc + a*w, exact in the accumulator format. The product's fractional bits
/// must not exceed the accumulator's, and the sum must stay in range.
FxValue fx_mac(const FxValue& acc, const FxValue& a, const FxValue& w);

/// Shifts `raw` from `from_frac` to `to_frac` fractional bits; to_frac >= from_frac.
std::int64_t align_raw(std::int64_t raw, int from_frac, int to_frac);

}  // namespace streamcnn::fx
