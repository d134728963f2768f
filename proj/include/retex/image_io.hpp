#pragma once

#include <string>

#include "retex/raster.hpp"

namespace retex {

// Decodes a PNG or JPEG file (sniffed by magic bytes) into a Raster with
// components scaled to [0,1] (8-bit value g becomes g/255). Gray and
// gray+alpha inputs expand to RGB; alpha is dropped.
// Throws IoError for unreadable files and FormatError for unsupported
// content; both messages name the path.
Raster load_raster(const std::string& path);

// 8-bit RGB PNG encode; quantization is round-half-up on value*255.
void save_png(const Raster& r, const std::string& path);

// 8-bit grayscale PNG of value*255, round-half-up. Values are expected in
// [0,1]; anything outside is clamped at encode time.
void save_png_gray(const ScalarField& f, const std::string& path);

// Indexed (palette) PNG for label maps: label 0 is black, labels >= 1 get
// distinct palette colors. Requires labels in [0, 255].
void save_png_indexed(const LabelMap& labels, const std::string& path);

} // namespace retex
