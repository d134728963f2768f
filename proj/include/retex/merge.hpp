#pragma once

#include <vector>

#include "retex/raster.hpp"
#include "retex/synthesis.hpp"
#include "retex/texture_detect.hpp"

namespace retex {

// A synthesized texture region anchored at its bounding box origin in the
// retargeted frame.
struct SynthesizedRegion {
    int id = 0;
    int x0 = 0, y0 = 0;
    Raster raster;
};

// Pixel-exact splice: synthesized content where the partition labels a
// texture region, the multi-operator base everywhere else.
Raster composite(const Raster& nt_base, const std::vector<SynthesizedRegion>& regions,
                 const RegionPartition& partition);

// Pixels within Euclidean distance `radius` of the T/NT interface, on both
// sides. A straight boundary yields a band exactly 2*radius wide.
Mask grow_boundary(const RegionPartition& partition, int radius = 4);

struct BandParams {
    int iterations = 10;
    double omega = 0.1;
    int patch = 8;
    int band_stride = 2;      // denser output patches inside the band
    int exemplar_stride = 2;  // aligned with the band grid so exact
                              // reproductions stay reachable
    double beta = 10.0;
};

// Re-synthesizes the boundary band at full resolution with the whole
// original image as the exemplar. Pixels outside the band are hard
// constraints and are never modified.
Raster resynthesize_band(const Raster& img, const Mask& band, const Raster& original,
                         const BandParams& params = {},
                         std::vector<EnergyTraceRow>* trace = nullptr);

} // namespace retex
