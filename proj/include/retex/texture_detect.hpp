#pragma once

#include <vector>

#include "retex/maxflow.hpp"
#include "retex/raster.hpp"

namespace retex {

// Sum over a Gaussian window with clamp-to-edge replication and
// unnormalized weights exp(-d^2 / (2 sigma^2)), kernel radius ceil(2 sigma).
// Separable two-pass implementation.
ScalarField gaussian_window_sum(const ScalarField& f, double sigma);

// Windowed total variations D (sums of |forward difference|) and windowed
// inherent variations L (|sum of forward differences|), per axis.
// |L| <= D holds pointwise by the triangle inequality.
struct VariationMaps {
    ScalarField dx, dy; // total
    ScalarField lx, ly; // inherent
    double window_sigma = 3.0;
};

VariationMaps windowed_variations(const ScalarField& lum, double sigma);

// Per-pixel texture reliability R = Dx/(Lx+eps) + Dy/(Ly+eps).
ScalarField texture_reliability(const VariationMaps& v, double epsilon = 1e-5);

// Two-class mean threshold iteration: start from the global mean, then
// repeatedly move the threshold to alpha*mean(T) + (1-alpha)*mean(NT) until
// the change drops below eps_conv. history records every threshold value
// (initial mean first); iterations == history.size() - 1.
struct ThresholdResult {
    double threshold = 0.0;
    Mask mask; // 1 = texture pixel (R >= threshold)
    std::vector<double> history;
    int iterations = 0;
    bool degenerate = false; // all-equal field: declared textureless
};

ThresholdResult iterative_threshold(const ScalarField& reliability, double eps_conv,
                                    double alpha = 0.5);

// Each superpixel becomes uniformly textured iff strictly more than half of
// its pixels are textured; an exact half votes non-texture.
Mask vote_superpixels(const Mask& noisy, const LabelMap& segments);

struct GraphcutParams {
    double pairwise_weight = 8.0;
    double sigma_color = 0.1;
    double p_min = 0.02, p_max = 0.98; // likelihood clamp
};

// Two-label energy for the boundary refinement: data term from the
// reliability likelihood P = clamp(R / (2 threshold), p_min, p_max),
// contrast-weighted Potts on 4-neighbors. Label 1 = texture.
BinaryMrf make_refine_energy(const Raster& r, const ScalarField& reliability, double threshold,
                             const GraphcutParams& params = {});

// Global minimum of the refinement energy via min-cut. A degenerate
// threshold (<= 0 or non-finite) returns the voted mask unchanged.
Mask graphcut_refine(const Raster& r, const Mask& voted, const ScalarField& reliability,
                     double threshold, const GraphcutParams& params = {});

struct RegionInfo {
    int id = 0;
    int area = 0;
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0; // inclusive bounding box
};

// Label 0 is the (possibly disconnected) non-texture region; labels 1..n are
// 4-connected texture regions.
struct RegionPartition {
    LabelMap labels;
    std::vector<RegionInfo> regions;

    size_t texture_pixels() const {
        size_t c = 0;
        for (int v : labels.labels) c += v > 0 ? 1 : 0;
        return c;
    }
};

// 4-connected components of the texture mask with area >= min_area become
// regions 1..n (row-major discovery order); smaller blobs fold into label 0.
RegionPartition extract_regions(const Mask& mask, int min_area);

// Recomputes area/bbox metadata from the label image, preserving region ids.
void refresh_region_metadata(RegionPartition& partition);

struct DetectParams {
    double window_sigma = 3.0;
    double reliability_eps = 1e-5;
    double alpha = 0.5;
    double eps_conv = 1e-4;
    int superpixel_divisor = 600; // K = pixels / divisor, clamped below
    int superpixel_min_k = 100;
    int superpixel_max_k = 1500;
    double superpixel_compactness = 10.0;
    GraphcutParams graphcut;
    double min_area_fraction = 0.005;
};

struct DetectResult {
    ScalarField reliability;     // raw ratio field R
    ScalarField log_reliability; // log1p(log1p(R)), the thresholded field
    ThresholdResult threshold;   // trace/history in the log domain
    double threshold_value = 0.0; // back-mapped: mask = [R >= threshold_value]
    LabelMap superpixels;
    Mask voted;
    Mask refined;
    RegionPartition partition;
};

// Full detection stage: reliability -> threshold -> superpixel vote ->
// graphcut refinement -> region extraction. Deterministic for fixed input.
//
// The reliability ratio is heavy-tailed (the windowed signed gradients can
// cancel almost exactly, sending R toward D/eps), which drags a two-means
// split into the outlier tail; a single log still leaves the texture mode
// wide enough that imbalanced scenes split inside it. The threshold
// iteration therefore runs on log1p(log1p(R)), which keeps the texture mode
// tighter than the texture/smooth gap; the converged value maps back
// through expm1 twice, so the mask is still a plain threshold on R.
DetectResult detect_textures(const Raster& r, const DetectParams& params = {});

} // namespace retex
