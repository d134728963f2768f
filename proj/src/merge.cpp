#include "retex/merge.hpp"

#include <algorithm>
#include <cmath>

#include "retex/errors.hpp"
#include "retex/parallel.hpp"

namespace retex {

Raster composite(const Raster& nt_base, const std::vector<SynthesizedRegion>& regions,
                 const RegionPartition& partition) {
    require(nt_base.width == partition.labels.width && nt_base.height == partition.labels.height,
            "composite: dimensions differ");
    Raster out = nt_base;
    for (const SynthesizedRegion& reg : regions) {
        for (int y = 0; y < reg.raster.height; ++y) {
            const int py = reg.y0 + y;
            if (py < 0 || py >= out.height) continue;
            for (int x = 0; x < reg.raster.width; ++x) {
                const int px = reg.x0 + x;
                if (px < 0 || px >= out.width) continue;
                if (partition.labels.at(px, py) != reg.id) continue;
                const float* src = reg.raster.pixel(x, y);
                float* dst = out.pixel(px, py);
                dst[0] = src[0];
                dst[1] = src[1];
                dst[2] = src[2];
            }
        }
    }
    return out;
}

Mask grow_boundary(const RegionPartition& partition, int radius) {
    const int w = partition.labels.width;
    const int h = partition.labels.height;
    Mask band(w, h, 0);
    if (partition.regions.empty()) return band;

    // Offsets within the Euclidean disk, excluding the center.
    std::vector<std::pair<int, int>> disk;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            if ((dx || dy) && dx * dx + dy * dy <= radius * radius) disk.emplace_back(dx, dy);

    parallel_for(0, h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            const bool textured = partition.labels.at(x, y) > 0;
            for (const auto& [dx, dy] : disk) {
                const int nx = x + dx;
                const int ny = y + dy;
                if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                if ((partition.labels.at(nx, ny) > 0) != textured) {
                    band.at(x, y) = 1;
                    break;
                }
            }
        }
    });
    return band;
}

Raster resynthesize_band(const Raster& img, const Mask& band, const Raster& original,
                         const BandParams& params, std::vector<EnergyTraceRow>* trace) {
    require(img.width == band.width && img.height == band.height,
            "resynthesize_band: band dimensions differ");
    if (band.count() == 0) return img;
    if (std::min(original.width, original.height) < params.patch ||
        std::min(img.width, img.height) < params.patch) {
        return img;
    }
    Raster out = img;
    EmLevelParams p;
    p.omega = params.omega;
    p.domain_fraction = 1.0; // full-domain search for the repair pass
    p.iterations = params.iterations;
    p.beta = params.beta;
    p.patch = params.patch;
    p.exemplar_stride = params.exemplar_stride;
    p.output_stride = params.band_stride;
    p.level_index = 0;
    p.write_mask = &band;
    p.output_patch_region = &band;
    run_em_level(original, out, p, trace);
    return out;
}

} // namespace retex
