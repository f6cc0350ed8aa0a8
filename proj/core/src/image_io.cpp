// SPDX-License-Identifier: Apache-2.0
#include "msmt/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace msmt {

std::uint8_t to_byte(double value) {
  const double scaled = std::round((value + 1.0) * 0.5 * 255.0);
  return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

void write_ppm(std::ostream& os, const Tensor& image) {
  if (image.rank() != 3 || image.dim(2) != 3) throw ShapeError("write_ppm: expected [H, W, 3], got " + to_string(image.shape()));
  os << "P6\n" << image.dim(1) << ' ' << image.dim(0) << "\n255\n";
  std::vector<char> bytes(image.numel());
  const auto v = image.data();
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = static_cast<char>(to_byte(v[i]));
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

void write_ppm(const std::filesystem::path& path, const Tensor& image) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  write_ppm(os, image);
}

Tensor read_ppm(std::istream& is) {
  std::string magic;
  std::size_t width = 0, height = 0, maxval = 0;
  is >> magic >> width >> height >> maxval;
  if (!is || magic != "P6" || maxval != 255 || width == 0 || height == 0) {
    throw std::runtime_error("not a P6 image with maxval 255");
  }
  is.get();  // single whitespace before the raster
  std::vector<char> bytes(width * height * 3);
  is.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!is) throw std::runtime_error("truncated PPM raster");
  std::vector<double> values(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    values[i] = static_cast<double>(static_cast<unsigned char>(bytes[i])) / 255.0 * 2.0 - 1.0;
  }
  return Tensor::from({height, width, 3}, std::move(values));
}

Tensor read_ppm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  return read_ppm(is);
}

}  // namespace msmt
