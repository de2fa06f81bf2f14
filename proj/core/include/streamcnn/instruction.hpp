#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "streamcnn/model.hpp"

namespace streamcnn::stream {

/// K*K-bit membership word for one input pixel. Bit b = j*K + k is set when
/// the pixel sits at kernel position (j, k) of some output window; bit 0 is
/// position (0, 0).
using InstructionMask = std::uint64_t;

inline constexpr int kMaxKernel = 8;

constexpr InstructionMask mask_bit(int j, int k, int kernel) {
  return InstructionMask{1} << (j * kernel + k);
}

/// Bit that marks a pixel as the last element of a window, position (K-1, K-1).
constexpr InstructionMask trigger_bit(int kernel) { return mask_bit(kernel - 1, kernel - 1, kernel); }

/// Window-buffer FIFO depth sufficient for any stride: (K-1)*(Wp+1)+1, with
/// Wp the padded input width.
constexpr std::size_t window_capacity(int kernel, std::size_t padded_width) {
  return static_cast<std::size_t>(kernel - 1) * (padded_width + 1) + 1;
}

/// Mask of padded-grid pixel (pv, pu) for a convolution over an H x W input.
/// With valid padding the padded grid is the input itself.
InstructionMask compute_mask(std::size_t pv, std::size_t pu, std::size_t height, std::size_t width, int kernel,
                             int stride, Padding padding);

struct InstructionArray {
  ConvGeometry geometry;
  Padding padding = Padding::Valid;
  std::size_t rows = 0, cols = 0;
  std::vector<InstructionMask> masks;       // rows x cols
  std::vector<std::size_t> row_translate;  // padded row -> mask row
  std::vector<std::size_t> col_translate;  // padded column -> mask column
  bool compressed = false;
  // Compression was requested but unsupported for this geometry.
  bool fallback = false;

  InstructionMask lookup(std::size_t pv, std::size_t pu) const {
    return masks[row_translate[pv] * cols + col_translate[pu]];
  }
  std::size_t entry_count() const { return masks.size(); }
};

/// Stride 1 compression keeps (2K-1)^2 masks: the first K-1 rows, one
/// representative interior row and the last K-1 rows (likewise for columns).
InstructionArray build_instruction_array(std::size_t height, std::size_t width, int kernel, int stride,
                                         Padding padding, bool compress);

/// Full per-pixel array equivalent to `ia`.
InstructionArray expand(const InstructionArray& ia);

std::string instruction_array_json(const InstructionArray& ia);

/// Per row/column: which pooling window it feeds, whether it is the window's
/// last element, and whether it falls past the last whole window.
struct PoolEntry {
  std::size_t index = 0;
  bool last = false;
  bool boundary = false;

  friend bool operator==(const PoolEntry&, const PoolEntry&) = default;
};

struct PoolLookup {
  int pool = 1;
  std::vector<PoolEntry> row_table;
  std::vector<PoolEntry> col_table;
};

PoolLookup build_pool_lookup(std::size_t height, std::size_t width, int pool);

}  // namespace streamcnn::stream
