#pragma once

#include <string>

#include "tvos/image.hpp"

namespace tvos {

// Binary netpbm only (P6 for color frames, P5 for id masks), maxval 255.
// Header `#` comments are accepted; ASCII variants (P2/P3) are rejected.

ImageU8 read_ppm(const std::string& path);
void write_ppm(const std::string& path, const ImageU8& img);

MaskU8 read_pgm(const std::string& path);
void write_pgm(const std::string& path, const MaskU8& mask);

}  // namespace tvos
