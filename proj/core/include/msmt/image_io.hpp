// SPDX-License-Identifier: Apache-2.0
#ifndef MSMT_IMAGE_IO_HPP
#define MSMT_IMAGE_IO_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "msmt/tensor.hpp"

namespace msmt {

/// [-1, 1] -> [0, 255], rounded and clamped.
std::uint8_t to_byte(double value);

/// Binary PPM (P6, maxval 255) from a [H, W, 3] tensor in [-1, 1].
void write_ppm(std::ostream& os, const Tensor& image);
void write_ppm(const std::filesystem::path& path, const Tensor& image);
/// Reads a P6 file back into [-1, 1] values.
Tensor read_ppm(std::istream& is);
Tensor read_ppm(const std::filesystem::path& path);

}  // namespace msmt

#endif  // MSMT_IMAGE_IO_HPP
