#include "streamcnn/fixed_point.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace streamcnn::fx {
namespace {

using i128 = __int128;

int ceil_log2(std::size_t n) {
  int bits = 0;
  while ((std::size_t{1} << bits) < n) ++bits;
  return bits;
}

i128 pow2(int e) { return i128{1} << e; }

// Saturate or wrap an exact integer mantissa into the W-bit range of `f`.
std::int64_t fit_raw(i128 v, const FxFormat& f, Overflow overflow) {
  const i128 lo = f.raw_min();
  const i128 hi = f.raw_max();
  if (v >= lo && v <= hi) return static_cast<std::int64_t>(v);
  if (overflow == Overflow::Saturate) return static_cast<std::int64_t>(v < lo ? lo : hi);
  const auto modulus = static_cast<unsigned __int128>(1) << f.total_bits;
  auto m = static_cast<unsigned __int128>(v) & (modulus - 1);
  i128 r = static_cast<i128>(m);
  if (f.is_signed && r >= pow2(f.total_bits - 1)) r -= static_cast<i128>(modulus);
  return static_cast<std::int64_t>(r);
}

double round_scaled(double scaled, Rounding rounding) {
  const double fl = std::floor(scaled);
  if (rounding == Rounding::Truncate) return fl;
  const double diff = scaled - fl;
  if (diff > 0.5) return fl + 1.0;
  if (diff < 0.5) return fl;
  return std::fmod(fl, 2.0) == 0.0 ? fl : fl + 1.0;
}

}  // namespace

bool FxFormat::valid() const {
  return total_bits >= 1 && total_bits <= kMaxRawBits && std::abs(frac_bits()) <= 2 * kMaxRawBits;
}

double FxFormat::resolution() const { return std::ldexp(1.0, -frac_bits()); }

std::int64_t FxFormat::raw_max() const {
  return is_signed ? (std::int64_t{1} << (total_bits - 1)) - 1 : (std::int64_t{1} << total_bits) - 1;
}

std::int64_t FxFormat::raw_min() const {
  return is_signed ? -(std::int64_t{1} << (total_bits - 1)) : 0;
}

double FxFormat::max_value() const { return std::ldexp(static_cast<double>(raw_max()), -frac_bits()); }
double FxFormat::min_value() const { return std::ldexp(static_cast<double>(raw_min()), -frac_bits()); }

std::string FxFormat::to_string() const {
  std::ostringstream os;
  os << (is_signed ? "<" : "u<") << total_bits << "," << integer_bits << ">";
  return os.str();
}

std::string to_string(Rounding r) { return r == Rounding::HalfEven ? "half_even" : "truncate"; }
std::string to_string(Overflow o) { return o == Overflow::Saturate ? "saturate" : "wrap"; }

Rounding rounding_from_string(const std::string& s) {
  if (s == "half_even" || s == "rhe") return Rounding::HalfEven;
  if (s == "truncate" || s == "trn") return Rounding::Truncate;
  throw FxError("unknown rounding mode '" + s + "'");
}

Overflow overflow_from_string(const std::string& s) {
  if (s == "saturate" || s == "sat") return Overflow::Saturate;
  if (s == "wrap") return Overflow::Wrap;
  throw FxError("unknown overflow mode '" + s + "'");
}

double FxValue::value() const { return std::ldexp(static_cast<double>(raw), -format.frac_bits()); }

FxValue quantize(double x, const FxFormat& f, Rounding rounding, Overflow overflow) {
  if (!f.valid()) throw FxError("invalid fixed-point format " + f.to_string());
  if (std::isnan(x)) return {0, f};
  if (std::isinf(x)) return {x > 0 ? f.raw_max() : f.raw_min(), f};

  const double rounded = round_scaled(std::ldexp(x, f.frac_bits()), rounding);
  // Exact powers of two; raw_max() itself may not be representable as a double.
  const double hi = std::ldexp(1.0, f.is_signed ? f.total_bits - 1 : f.total_bits);
  const double lo = f.is_signed ? -hi : 0.0;
  if (rounded >= lo && rounded < hi) return {static_cast<std::int64_t>(rounded), f};
  if (overflow == Overflow::Saturate) return {rounded < lo ? f.raw_min() : f.raw_max(), f};

  // fmod is exact, so wrapping arbitrarily large values stays bit-accurate.
  const double modulus = std::ldexp(1.0, f.total_bits);
  double m = std::fmod(rounded, modulus);
  if (m < 0) m += modulus;
  if (f.is_signed && m >= modulus / 2) m -= modulus;
  return {static_cast<std::int64_t>(m), f};
}

double quantize_value(double x, const FxFormat& f, Rounding rounding, Overflow overflow) {
  return quantize(x, f, rounding, overflow).value();
}

namespace {

FxValue requantize_wide(i128 raw, int frac_bits, const FxFormat& f, Rounding rounding, Overflow overflow) {
  if (!f.valid()) throw FxError("invalid fixed-point format " + f.to_string());
  const int shift = frac_bits - f.frac_bits();
  i128 v = raw;
  if (shift < 0) {
    if (-shift >= 63) {
      // Far outside every range; a multiple of 2^W, so it also wraps to 0.
      v = raw == 0 ? 0 : (raw > 0 ? pow2(120) : -pow2(120));
    } else {
      v = v * pow2(-shift);
    }
  } else if (shift > 0) {
    if (shift >= 126) {
      v = (rounding == Rounding::Truncate && raw < 0) ? -1 : 0;
    } else {
      const i128 fl = v >> shift;  // arithmetic shift floors
      const i128 rem = v - fl * pow2(shift);
      v = fl;
      if (rounding == Rounding::HalfEven) {
        const i128 half = pow2(shift - 1);
        if (rem > half || (rem == half && (fl & 1) != 0)) v += 1;
      }
    }
  }
  return {fit_raw(v, f, overflow), f};
}

}  // namespace

FxValue requantize(std::int64_t raw, int frac_bits, const FxFormat& f, Rounding rounding, Overflow overflow) {
  return requantize_wide(raw, frac_bits, f, rounding, overflow);
}

FxValue requantize_product(std::int64_t raw, int frac_bits, std::int64_t multiplier, int multiplier_frac,
                           const FxFormat& f, Rounding rounding, Overflow overflow) {
  return requantize_wide(static_cast<i128>(raw) * multiplier, frac_bits + multiplier_frac, f, rounding, overflow);
}

std::int64_t exact_raw(double value, int frac_bits) {
  const double scaled = std::ldexp(value, frac_bits);
  if (!std::isfinite(scaled) || scaled != std::trunc(scaled) || std::abs(scaled) >= std::ldexp(1.0, kMaxRawBits)) {
    std::ostringstream os;
    os << "value " << value << " is not on the 2^-" << frac_bits << " grid";
    throw FxError(os.str());
  }
  return static_cast<std::int64_t>(scaled);
}

std::int64_t align_raw(std::int64_t raw, int from_frac, int to_frac) {
  if (to_frac < from_frac) throw FxError("align_raw cannot drop fractional bits");
  const int shift = to_frac - from_frac;
  if (shift >= 63 && raw != 0) throw FxOverflowError("alignment shift overflows the accumulator");
  const i128 v = static_cast<i128>(raw) * pow2(std::min(shift, 63));
  if (v > INT64_MAX || v < INT64_MIN) throw FxOverflowError("alignment shift overflows the accumulator");
  return static_cast<std::int64_t>(v);
}

FxFormat accumulator_format(const FxFormat& a, const FxFormat& w, std::size_t terms, const FxFormat& bias) {
  const int ia = a.integer_bits + (a.is_signed ? 0 : 1);
  const int iw = w.integer_bits + (w.is_signed ? 0 : 1);
  const int ib = bias.integer_bits + (bias.is_signed ? 0 : 1);
  // Largest term magnitude is 2^m; n+1 terms sum to at most 2^(m+L) in either sign.
  const int m = std::max(ia + iw - 2, ib - 1);
  const int integer = m + ceil_log2(terms + 1) + 2;
  const int frac = std::max(a.frac_bits() + w.frac_bits(), bias.frac_bits());
  FxFormat acc{integer + frac, integer, true};
  if (acc.total_bits > kMaxRawBits || acc.total_bits < 1) {
    throw FxError("accumulator for " + a.to_string() + " x " + w.to_string() + " over " + std::to_string(terms) +
                  " terms needs " + std::to_string(acc.total_bits) + " bits (limit " + std::to_string(kMaxRawBits) + ")");
  }
  return acc;
}

FxFormat accumulator_format(const FxFormat& a, const FxFormat& w, std::size_t terms) {
  const int ia = a.integer_bits + (a.is_signed ? 0 : 1);
  const int iw = w.integer_bits + (w.is_signed ? 0 : 1);
  const int integer = ia + iw + ceil_log2(std::max<std::size_t>(terms, 1));
  const int frac = a.frac_bits() + w.frac_bits();
  FxFormat acc{integer + frac, integer, true};
  if (acc.total_bits > kMaxRawBits || acc.total_bits < 1) {
    throw FxError("accumulator for " + std::to_string(terms) + " terms exceeds " + std::to_string(kMaxRawBits) + " bits");
  }
  return acc;
}

FxValue fx_mac(const FxValue& acc, const FxValue& a, const FxValue& w) {
  const int prod_frac = a.format.frac_bits() + w.format.frac_bits();
  const int acc_frac = acc.format.frac_bits();
  if (prod_frac > acc_frac) {
    throw FxError("accumulator " + acc.format.to_string() + " has fewer fractional bits than the product " +
                  a.format.to_string() + " x " + w.format.to_string());
  }
  const int shift = acc_frac - prod_frac;
  if (shift > 60) throw FxOverflowError("product alignment exceeds accumulator width");
  const i128 sum = static_cast<i128>(acc.raw) + static_cast<i128>(a.raw) * static_cast<i128>(w.raw) * pow2(shift);
  if (sum < acc.format.raw_min() || sum > acc.format.raw_max()) {
    throw FxOverflowError("accumulator " + acc.format.to_string() + " overflowed");
  }
  return {static_cast<std::int64_t>(sum), acc.format};
}

}  // namespace streamcnn::fx
