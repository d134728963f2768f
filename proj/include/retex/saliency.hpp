#pragma once

#include <array>
#include <vector>

#include "retex/raster.hpp"
#include "retex/texture_detect.hpp"

namespace retex {

struct SaliencyConfig {
    double sigma_s_sq = 0.5;   // spatial weighting of the uniqueness cue
    double lambda = 9.0;       // location cue falloff
    double sigma_refine = 30.0;
    std::vector<int> scales{100, 500, 1000};
    double nt_area_threshold = 0.30;
    int refine_neighbors = 32;
    int base_superpixels = 300;
    double slic_compactness = 10.0;
};

// 4 frequencies x 6 orientations of complex Gabor kernels with isotropic
// Gaussian envelopes (sigma = 0.56 / frequency). Kernels are DC-corrected,
// so a constant image produces zero response.
struct GaborBank {
    struct Kernel {
        int radius = 0;
        double frequency = 0, orientation = 0;
        std::vector<double> re, im; // (2r+1)^2, row-major
    };
    std::vector<Kernel> kernels; // 24, frequency-major

    static const GaborBank& default_bank();
};

// Per-pixel magnitude responses of the 24 filters, pixel-major layout.
struct GaborFeatures {
    static constexpr int kFilters = 24;
    int width = 0, height = 0;
    std::vector<float> values; // width*height*24

    const float* at(int x, int y) const {
        return values.data() + kFilters * (static_cast<size_t>(y) * width + x);
    }
};

GaborFeatures gabor_features(const Raster& r, const GaborBank& bank = GaborBank::default_bank());

// One SLIC patch with its saliency features. mean_color and texture are
// min-max normalized per channel across the patch set (zero-range channels
// map to 0); centroid is in [0,1]^2.
struct PatchDescriptor {
    int id = 0;
    std::vector<int> pixels;   // flat indices
    std::vector<int> t_pixels; // textured subset
    double cx = 0, cy = 0;
    std::array<double, 3> mean_color{};
    std::array<double, 48> texture{}; // 24 means then 24 variances
    int t_weight = 0;                 // w(A_i)
    double uniqueness = 0, location = 0, saliency = 0;
};

std::vector<PatchDescriptor> patch_descriptors(const Raster& r, const LabelMap& segments,
                                               const Mask& tmask, const GaborFeatures& gabor);

// U_i = w(A_i) * sum_j exp(-D_s(i,j)/sigma_s^2) * (|C_i-C_j|^2 + |G_i-G_j|^2).
void uniqueness_cue(std::vector<PatchDescriptor>& patches, const SaliencyConfig& cfg);

// H_i: mean over the patch's textured pixels (all pixels when it has none)
// of exp(-lambda * |x - center|^2) in normalized coordinates.
void location_cue(std::vector<PatchDescriptor>& patches, int width, int height, double lambda);

struct TextureSaliencyResult {
    ScalarField coarse;                   // 3-scale mean, then min-max normalized
    std::vector<ScalarField> scale_maps;  // raw per-scale S_i maps
    std::vector<PatchDescriptor> finest_patches;
    LabelMap finest_segments;
};

TextureSaliencyResult multiscale_texture_saliency(const Raster& r, const Mask& tmask,
                                                  const SaliencyConfig& cfg,
                                                  const GaborFeatures& gabor);

// Pixel-level upsampling of the coarse map: Gaussian-weighted combination of
// the saliencies of the N nearest finest-scale patches in a joint
// color/texture/position feature space, exp(-d^2/(2 sigma)).
ScalarField refine_saliency(const std::vector<PatchDescriptor>& finest_patches,
                            const ScalarField& coarse, const Raster& r,
                            const GaborFeatures& gabor, double sigma = 30.0, int neighbors = 32);

// Built-in stand-in for an external base saliency method: superpixel color
// uniqueness with the same spatial weighting as the texture cue.
enum class BaseMode {
    kContrast, // uniqueness only
    kBalanced  // uniqueness * location
};

const char* base_mode_name(BaseMode mode);

ScalarField base_saliency(const Raster& r, BaseMode mode = BaseMode::kBalanced,
                          const SaliencyConfig& cfg = {});

// NT area below the threshold selects the contrast variant, otherwise the
// center-weighted balanced variant.
BaseMode select_base_mode(const RegionPartition& partition, double nt_area_threshold = 0.30);

// Piecewise splice: texture saliency inside T-regions, base map elsewhere.
ScalarField compose_significance(const ScalarField& base, const ScalarField& tex,
                                 const RegionPartition& partition);

} // namespace retex
