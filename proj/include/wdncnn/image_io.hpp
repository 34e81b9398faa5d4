#pragma once

#include <string>

#include "wdncnn/tensor.hpp"

namespace wdncnn {

// 8-bit binary PGM (P5) and PPM (P6) with maxval 255. Pixels map to [0,1]
// doubles on read; writes clamp to [0,1] and round to 8 bits. Grayscale
// images load as [1,H,W], color as [3,H,W].
Tensor read_image(const std::string& path);
void write_image(const std::string& path, const Tensor& image);

Tensor decode_image(const std::string& bytes, const std::string& origin);
std::string encode_image(const Tensor& image);

}  // namespace wdncnn
