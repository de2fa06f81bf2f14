#include <png.h>

#include <bit>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <memory>
#include <random>

#include "streamcnn/model.hpp"

namespace streamcnn {
namespace {

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

Tensor load_png(const std::filesystem::path& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!file) throw ModelError("cannot open '" + path.string() + "'");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ModelError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ModelError("'" + path.string() + "' is not a readable PNG");
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  // Normalise to 8-bit RGB.
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_packing(png);
  png_set_expand(png);
  const auto color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  const auto height = png_get_image_height(png, info);
  const auto width = png_get_image_width(png, info);
  const auto rowbytes = png_get_rowbytes(png, info);
  std::vector<png_byte> pixels(rowbytes * height);
  std::vector<png_bytep> rows(height);
  for (png_uint_32 r = 0; r < height; ++r) rows[r] = pixels.data() + r * rowbytes;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);

  Tensor out({height, width, 3});
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = pixels[i];
  return out;
}

Tensor load_raw_u8(const std::filesystem::path& path, const Shape& shape) {
  const auto bytes = read_bytes(path);
  if (bytes.size() != element_count(shape)) {
    throw ModelError("'" + path.string() + "' has " + std::to_string(bytes.size()) + " bytes, expected " +
                     std::to_string(element_count(shape)) + " for shape " + shape_to_string(shape));
  }
  Tensor out(shape);
  for (std::size_t i = 0; i < bytes.size(); ++i) out[i] = bytes[i];
  return out;
}

Tensor load_image(const std::filesystem::path& path, const Shape& raw_shape) {
  auto ext = path.extension().string();
  for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (ext == ".png") return load_png(path);
  return load_raw_u8(path, raw_shape);
}

Tensor load_raw_f32(const std::filesystem::path& path, const Shape& shape) {
  const auto bytes = read_bytes(path);
  if (bytes.size() != 4 * element_count(shape)) {
    throw ModelError("'" + path.string() + "' has " + std::to_string(bytes.size()) + " bytes, expected " +
                     std::to_string(4 * element_count(shape)) + " float32 values for shape " + shape_to_string(shape));
  }
  Tensor out(shape);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 3; b >= 0; --b) bits = (bits << 8) | bytes[4 * i + static_cast<std::size_t>(b)];
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

void save_raw_f32(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ModelError("cannot write '" + path.string() + "'");
  for (double v : t.values()) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    for (int b = 0; b < 4; ++b) out.put(static_cast<char>((bits >> (8 * b)) & 0xFF));
  }
}

Tensor preprocess(const Tensor& image, const Tensor& mean, const Tensor& stddev) {
  if (image.shape() != mean.shape() || image.shape() != stddev.shape()) {
    throw ShapeError("preprocess: image " + shape_to_string(image.shape()) + ", mean " +
                     shape_to_string(mean.shape()) + " and std " + shape_to_string(stddev.shape()) + " must match");
  }
  Tensor out(image.shape());
  for (std::size_t i = 0; i < image.size(); ++i) {
    if (!(stddev[i] > 0.0)) throw ModelError("preprocess: std element " + std::to_string(i) + " is not positive");
    out[i] = (image[i] / 255.0 - mean[i]) / stddev[i];
  }
  return out;
}

Tensor random_image(const Shape& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tensor out(shape);
  for (double& v : out.values()) v = static_cast<double>(rng() % 256);
  return out;
}

}  // namespace streamcnn
