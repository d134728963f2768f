#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace retex {

// RGB image, row-major, 3 floats per pixel in [0,1]. Values stay linear
// floating point internally; quantization happens only at PNG encode time.
struct Raster {
    int width = 0;
    int height = 0;
    std::vector<float> data; // height * width * 3

    Raster() = default;
    Raster(int w, int h, float fill = 0.0f)
        : width(w), height(h), data(static_cast<size_t>(w) * h * 3, fill) {}

    float* pixel(int x, int y) { return data.data() + 3 * (static_cast<size_t>(y) * width + x); }
    const float* pixel(int x, int y) const {
        return data.data() + 3 * (static_cast<size_t>(y) * width + x);
    }
    size_t pixel_count() const { return static_cast<size_t>(width) * height; }
    bool same_dims(const Raster& o) const { return width == o.width && height == o.height; }
    bool operator==(const Raster& o) const {
        return width == o.width && height == o.height && data == o.data;
    }
};

// Single-channel map of reals with the same layout as Raster.
struct ScalarField {
    int width = 0;
    int height = 0;
    std::vector<float> values; // height * width

    ScalarField() = default;
    ScalarField(int w, int h, float fill = 0.0f)
        : width(w), height(h), values(static_cast<size_t>(w) * h, fill) {}

    float& at(int x, int y) { return values[static_cast<size_t>(y) * width + x]; }
    float at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
    size_t size() const { return values.size(); }
    bool operator==(const ScalarField& o) const {
        return width == o.width && height == o.height && values == o.values;
    }
};

// Binary per-pixel mask (texture/non-texture, boundary bands, ...).
struct Mask {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> values;

    Mask() = default;
    Mask(int w, int h, uint8_t fill = 0)
        : width(w), height(h), values(static_cast<size_t>(w) * h, fill) {}

    uint8_t& at(int x, int y) { return values[static_cast<size_t>(y) * width + x]; }
    uint8_t at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
    size_t size() const { return values.size(); }
    size_t count() const {
        size_t c = 0;
        for (uint8_t v : values) c += v ? 1 : 0;
        return c;
    }
    bool operator==(const Mask& o) const {
        return width == o.width && height == o.height && values == o.values;
    }
};

// Per-pixel integer labels (texture region ids, superpixel ids, ...).
struct LabelMap {
    int width = 0;
    int height = 0;
    std::vector<int> labels;

    LabelMap() = default;
    LabelMap(int w, int h, int fill = 0)
        : width(w), height(h), labels(static_cast<size_t>(w) * h, fill) {}

    int& at(int x, int y) { return labels[static_cast<size_t>(y) * width + x]; }
    int at(int x, int y) const { return labels[static_cast<size_t>(y) * width + x]; }
    size_t size() const { return labels.size(); }
    bool operator==(const LabelMap& o) const {
        return width == o.width && height == o.height && labels == o.labels;
    }
};

// Multi-resolution stack, coarsest level first. Adjacent levels differ by a
// factor of 2 (ceil rounding on odd dimensions).
struct Pyramid {
    std::vector<Raster> levels;
};

inline int clamp_index(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

// Rec.601 luma: 0.299 R + 0.587 G + 0.114 B.
ScalarField to_luminance(const Raster& r);

// Bilinear resampling with pixel-center alignment. Output is exactly
// new_w x new_h; a size-preserving call returns a bit-identical copy.
Raster resample_bilinear(const Raster& r, int new_w, int new_h);
ScalarField resample_bilinear(const ScalarField& f, int new_w, int new_h);

// Nearest-neighbor label transport for the same coordinate mapping.
LabelMap resample_nearest(const LabelMap& m, int new_w, int new_h);

// One box-filtered 2x downsample; each coarse pixel is the mean of its
// source block (2x2 in the interior, smaller on odd edges).
Raster box_downsample(const Raster& r);

// Coarse-to-fine pyramid of at most max_levels levels; levels are dropped
// while the coarsest level's min dimension would fall below min_coarsest_dim.
Pyramid build_pyramid(const Raster& r, int max_levels = 3, int min_coarsest_dim = 1);

// Number of pyramid levels the size rule allows for the given dimensions.
int pyramid_levels_for(int min_dim, int max_levels, int min_coarsest_dim);

// Field statistics used all over the place.
float field_min(const ScalarField& f);
float field_max(const ScalarField& f);
double field_mean(const ScalarField& f);

// Min-max normalization to [0,1]; a zero-range field maps to all zeros.
ScalarField normalize_field(const ScalarField& f);

// Normalized pixel coordinate shared by the saliency cues and the synthesis
// spatial term: 0..n-1 maps onto [0,1], a single-sample axis maps to 0.5.
inline double norm_coord(int p, int n) { return n > 1 ? static_cast<double>(p) / (n - 1) : 0.5; }

} // namespace retex
