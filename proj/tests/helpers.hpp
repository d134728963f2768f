#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "retex/raster.hpp"

namespace retex::testing {

// Deterministic generator for every randomized fixture in the suite.
inline std::mt19937 rng(uint32_t seed) { return std::mt19937(seed); }

inline Raster constant_raster(int w, int h, float r, float g, float b) {
    Raster out(w, h);
    for (size_t i = 0; i < out.pixel_count(); ++i) {
        out.data[3 * i] = r;
        out.data[3 * i + 1] = g;
        out.data[3 * i + 2] = b;
    }
    return out;
}

inline Raster noise_raster(int w, int h, uint32_t seed, float lo = 0.0f, float hi = 1.0f) {
    std::mt19937 gen = rng(seed);
    std::uniform_real_distribution<float> dist(lo, hi);
    Raster out(w, h);
    for (float& v : out.data) v = dist(gen);
    return out;
}

// Smooth color gradient plus per-pixel noise: spatially distinctive content
// with no exact repetitions, the friendliest texture for identity checks.
inline Raster gradient_noise_raster(int w, int h, uint32_t seed, float noise_amp = 0.25f) {
    std::mt19937 gen = rng(seed);
    std::uniform_real_distribution<float> dist(-noise_amp, noise_amp);
    Raster out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            float* px = out.pixel(x, y);
            const float u = w > 1 ? static_cast<float>(x) / (w - 1) : 0.5f;
            const float v = h > 1 ? static_cast<float>(y) / (h - 1) : 0.5f;
            px[0] = std::min(1.0f, std::max(0.0f, 0.25f + 0.5f * u + dist(gen)));
            px[1] = std::min(1.0f, std::max(0.0f, 0.25f + 0.5f * v + dist(gen)));
            px[2] = std::min(1.0f, std::max(0.0f, 0.5f + 0.25f * (u - v) + dist(gen)));
        }
    }
    return out;
}

// Value noise: random coarse cells, bilinearly upsampled. A classic smooth
// texture with locally distinctive content.
inline Raster value_noise_raster(int w, int h, uint32_t seed, int cell = 4) {
    std::mt19937 gen = rng(seed);
    std::uniform_real_distribution<float> dist(0.0f, 1.0f);
    Raster coarse((w + cell - 1) / cell, (h + cell - 1) / cell);
    for (float& v : coarse.data) v = dist(gen);
    return resample_bilinear(coarse, w, h);
}

inline ScalarField constant_field(int w, int h, float v) { return ScalarField(w, h, v); }

inline ScalarField noise_field(int w, int h, uint32_t seed, float lo = 0.0f, float hi = 1.0f) {
    std::mt19937 gen = rng(seed);
    std::uniform_real_distribution<float> dist(lo, hi);
    ScalarField out(w, h);
    for (float& v : out.values) v = dist(gen);
    return out;
}

// Left half flat gray, right half uniform noise.
inline Raster flat_noise_composite(int w, int h, uint32_t seed) {
    std::mt19937 gen = rng(seed);
    std::uniform_real_distribution<float> dist(0.0f, 1.0f);
    Raster out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            float* px = out.pixel(x, y);
            if (x < w / 2) {
                px[0] = px[1] = px[2] = 0.5f;
            } else {
                px[0] = dist(gen);
                px[1] = dist(gen);
                px[2] = dist(gen);
            }
        }
    }
    return out;
}

inline double mean_abs_diff(const Raster& a, const Raster& b) {
    double sum = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) sum += std::fabs(a.data[i] - b.data[i]);
    return sum / a.data.size();
}

// ------------------------------------------------------------------ oracles

// Scalar bilinear interpolation at pixel centers, written independently of
// the library implementation.
inline double bilinear_oracle(const std::vector<double>& src, int sw, int sh, int dw, int dh,
                              int x, int y) {
    auto sample = [&](double sx, double sy) {
        if (sx < 0) sx = 0;
        if (sy < 0) sy = 0;
        if (sx > sw - 1) sx = sw - 1;
        if (sy > sh - 1) sy = sh - 1;
        int x0 = static_cast<int>(sx);
        int y0 = static_cast<int>(sy);
        if (x0 > sw - 2) x0 = sw >= 2 ? sw - 2 : 0;
        if (y0 > sh - 2) y0 = sh >= 2 ? sh - 2 : 0;
        const int x1 = std::min(x0 + 1, sw - 1);
        const int y1 = std::min(y0 + 1, sh - 1);
        const double fx = sx - x0;
        const double fy = sy - y0;
        const double top = src[y0 * sw + x0] * (1 - fx) + src[y0 * sw + x1] * fx;
        const double bot = src[y1 * sw + x0] * (1 - fx) + src[y1 * sw + x1] * fx;
        return top * (1 - fy) + bot * fy;
    };
    const double sx = (x + 0.5) * static_cast<double>(sw) / dw - 0.5;
    const double sy = (y + 0.5) * static_cast<double>(sh) / dh - 0.5;
    return sample(sx, sy);
}

} // namespace retex::testing
