#pragma once

#include "retex/raster.hpp"

namespace retex {

// CIELAB values per pixel, stored L,a,b interleaved. Shared by SLIC and the
// smoothing weights; computed from sRGB with D65 white.
std::vector<float> to_cielab(const Raster& r);

// SLIC over-segmentation in CIELAB+xy with deterministic grid seeding.
// Returns 4-connected segments with compact labels 0..n-1; the segment
// count lands near k (small fragments are merged during the connectivity
// pass). compactness is the usual spatial weight m.
LabelMap slic_superpixels(const Raster& r, int k, double compactness, int iterations = 10);

int label_count(const LabelMap& m);

} // namespace retex
