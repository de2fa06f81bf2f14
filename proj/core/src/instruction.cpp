#include "streamcnn/instruction.hpp"

#include "json.hpp"

namespace streamcnn::stream {
namespace {

// Whether output index (p - j) / stride exists in [0, out).
bool member(std::size_t p, int j, int stride, std::size_t out) {
  const auto jj = static_cast<std::size_t>(j);
  if (p < jj) return false;
  const std::size_t d = p - jj;
  const auto s = static_cast<std::size_t>(stride);
  return d % s == 0 && d / s < out;
}

std::size_t translate(std::size_t r, std::size_t n, int kernel) {
  const auto k = static_cast<std::size_t>(kernel);
  if (r + 2 <= k) return r;                     // r <= K-2
  if (r + k <= n) return k - 1;                 // K-1 <= r <= n-K
  return r - (n - (2 * k - 1));
}

void check_kernel(int kernel, int stride) {
  if (kernel < 1 || kernel > kMaxKernel) {
    throw ModelError("kernel size " + std::to_string(kernel) + " outside [1, " + std::to_string(kMaxKernel) + "]");
  }
  if (stride < 1) throw ModelError("stride must be >= 1");
}

InstructionMask mask_on_grid(std::size_t pv, std::size_t pu, const ConvGeometry& geo) {
  InstructionMask m = 0;
  for (int j = 0; j < geo.kernel; ++j) {
    if (!member(pv, j, geo.stride, geo.out_height)) continue;
    for (int k = 0; k < geo.kernel; ++k) {
      if (member(pu, k, geo.stride, geo.out_width)) m |= mask_bit(j, k, geo.kernel);
    }
  }
  return m;
}

}  // namespace

InstructionMask compute_mask(std::size_t pv, std::size_t pu, std::size_t height, std::size_t width, int kernel,
                             int stride, Padding padding) {
  check_kernel(kernel, stride);
  const auto geo = conv_geometry({height, width, 1}, kernel, stride, padding);
  if (pv >= geo.padded_height || pu >= geo.padded_width) return 0;
  return mask_on_grid(pv, pu, geo);
}

InstructionArray build_instruction_array(std::size_t height, std::size_t width, int kernel, int stride,
                                         Padding padding, bool compress) {
  check_kernel(kernel, stride);
  InstructionArray ia;
  ia.geometry = conv_geometry({height, width, 1}, kernel, stride, padding);
  ia.padding = padding;
  const auto& geo = ia.geometry;
  const auto span = static_cast<std::size_t>(2 * kernel - 1);
  const bool can_compress = stride == 1 && geo.padded_height >= span && geo.padded_width >= span;
  ia.compressed = compress && can_compress;
  ia.fallback = compress && !can_compress;

  ia.row_translate.resize(geo.padded_height);
  ia.col_translate.resize(geo.padded_width);
  for (std::size_t r = 0; r < geo.padded_height; ++r) ia.row_translate[r] = ia.compressed ? translate(r, geo.padded_height, kernel) : r;
  for (std::size_t c = 0; c < geo.padded_width; ++c) ia.col_translate[c] = ia.compressed ? translate(c, geo.padded_width, kernel) : c;
  ia.rows = ia.compressed ? span : geo.padded_height;
  ia.cols = ia.compressed ? span : geo.padded_width;

  // Each mask row/column is computed from a representative padded coordinate.
  std::vector<std::size_t> row_src(ia.rows), col_src(ia.cols);
  for (std::size_t r = 0; r < geo.padded_height; ++r) row_src[ia.row_translate[r]] = r;
  for (std::size_t c = 0; c < geo.padded_width; ++c) col_src[ia.col_translate[c]] = c;
  ia.masks.resize(ia.rows * ia.cols);
  for (std::size_t r = 0; r < ia.rows; ++r) {
    for (std::size_t c = 0; c < ia.cols; ++c) ia.masks[r * ia.cols + c] = mask_on_grid(row_src[r], col_src[c], geo);
  }
  return ia;
}

InstructionArray expand(const InstructionArray& ia) {
  InstructionArray full = ia;
  const auto& geo = ia.geometry;
  full.compressed = false;
  full.fallback = false;
  full.rows = geo.padded_height;
  full.cols = geo.padded_width;
  full.masks.assign(full.rows * full.cols, 0);
  for (std::size_t r = 0; r < full.rows; ++r) {
    full.row_translate[r] = r;
    for (std::size_t c = 0; c < full.cols; ++c) full.masks[r * full.cols + c] = ia.lookup(r, c);
  }
  for (std::size_t c = 0; c < full.cols; ++c) full.col_translate[c] = c;
  return full;
}

std::string instruction_array_json(const InstructionArray& ia) {
  nlohmann::ordered_json doc;
  const auto& geo = ia.geometry;
  doc["height"] = geo.height;
  doc["width"] = geo.width;
  doc["kernel"] = geo.kernel;
  doc["stride"] = geo.stride;
  doc["padding"] = to_string(ia.padding);
  doc["padded_height"] = geo.padded_height;
  doc["padded_width"] = geo.padded_width;
  doc["compressed"] = ia.compressed;
  doc["fallback"] = ia.fallback;
  doc["rows"] = ia.rows;
  doc["cols"] = ia.cols;
  auto masks = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < ia.rows; ++r) {
    auto row = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < ia.cols; ++c) row.push_back(ia.masks[r * ia.cols + c]);
    masks.push_back(std::move(row));
  }
  doc["masks"] = std::move(masks);
  doc["row_translate"] = ia.row_translate;
  doc["col_translate"] = ia.col_translate;
  return doc.dump() + "\n";
}

PoolLookup build_pool_lookup(std::size_t height, std::size_t width, int pool) {
  if (pool < 1) throw ModelError("pool size must be >= 1");
  const auto p = static_cast<std::size_t>(pool);
  if (p > height || p > width) {
    throw ModelError("pool size " + std::to_string(pool) + " exceeds the " + std::to_string(height) + "x" +
                     std::to_string(width) + " input");
  }
  const auto table = [p](std::size_t n) {
    std::vector<PoolEntry> t(n);
    const std::size_t whole = (n / p) * p;
    for (std::size_t r = 0; r < n; ++r) t[r] = {r / p, r % p == p - 1, r >= whole};
    return t;
  };
  return {pool, table(height), table(width)};
}

}  // namespace streamcnn::stream
