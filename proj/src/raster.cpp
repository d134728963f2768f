#include "retex/raster.hpp"

#include <algorithm>
#include <cmath>

#include "retex/errors.hpp"

namespace retex {

ScalarField to_luminance(const Raster& r) {
    ScalarField out(r.width, r.height);
    const float* src = r.data.data();
    for (size_t i = 0, n = r.pixel_count(); i < n; ++i) {
        out.values[i] = 0.299f * src[3 * i] + 0.587f * src[3 * i + 1] + 0.114f * src[3 * i + 2];
    }
    return out;
}

namespace {

// Pixel-center mapping. For identical sizes sx == x exactly, so the sampled
// weights degenerate to (1, 0) and the copy is bit-identical.
struct LinearSample {
    int i0, i1;
    float w1; // weight of i1; weight of i0 is 1 - w1
};

LinearSample linear_sample(int x, int src_n, int dst_n) {
    double sx = (x + 0.5) * static_cast<double>(src_n) / dst_n - 0.5;
    if (sx < 0) sx = 0;
    if (sx > src_n - 1) sx = src_n - 1;
    int i0 = static_cast<int>(sx);
    if (i0 > src_n - 2) i0 = src_n >= 2 ? src_n - 2 : 0;
    int i1 = std::min(i0 + 1, src_n - 1);
    float w1 = static_cast<float>(sx - i0);
    return {i0, i1, w1};
}

} // namespace

Raster resample_bilinear(const Raster& r, int new_w, int new_h) {
    if (new_w < 1 || new_h < 1) throw ConfigError("resample_bilinear: target dimension must be >= 1");
    if (new_w == r.width && new_h == r.height) return r;
    Raster out(new_w, new_h);
    std::vector<LinearSample> xs(new_w);
    for (int x = 0; x < new_w; ++x) xs[x] = linear_sample(x, r.width, new_w);
    for (int y = 0; y < new_h; ++y) {
        LinearSample sy = linear_sample(y, r.height, new_h);
        for (int x = 0; x < new_w; ++x) {
            const LinearSample& sx = xs[x];
            const float* p00 = r.pixel(sx.i0, sy.i0);
            const float* p10 = r.pixel(sx.i1, sy.i0);
            const float* p01 = r.pixel(sx.i0, sy.i1);
            const float* p11 = r.pixel(sx.i1, sy.i1);
            float* dst = out.pixel(x, y);
            for (int c = 0; c < 3; ++c) {
                float top = p00[c] + (p10[c] - p00[c]) * sx.w1;
                float bot = p01[c] + (p11[c] - p01[c]) * sx.w1;
                dst[c] = top + (bot - top) * sy.w1;
            }
        }
    }
    return out;
}

ScalarField resample_bilinear(const ScalarField& f, int new_w, int new_h) {
    if (new_w < 1 || new_h < 1) throw ConfigError("resample_bilinear: target dimension must be >= 1");
    if (new_w == f.width && new_h == f.height) return f;
    ScalarField out(new_w, new_h);
    std::vector<LinearSample> xs(new_w);
    for (int x = 0; x < new_w; ++x) xs[x] = linear_sample(x, f.width, new_w);
    for (int y = 0; y < new_h; ++y) {
        LinearSample sy = linear_sample(y, f.height, new_h);
        for (int x = 0; x < new_w; ++x) {
            const LinearSample& sx = xs[x];
            float top = f.at(sx.i0, sy.i0) + (f.at(sx.i1, sy.i0) - f.at(sx.i0, sy.i0)) * sx.w1;
            float bot = f.at(sx.i0, sy.i1) + (f.at(sx.i1, sy.i1) - f.at(sx.i0, sy.i1)) * sx.w1;
            out.at(x, y) = top + (bot - top) * sy.w1;
        }
    }
    return out;
}

LabelMap resample_nearest(const LabelMap& m, int new_w, int new_h) {
    if (new_w < 1 || new_h < 1) throw ConfigError("resample_nearest: target dimension must be >= 1");
    if (new_w == m.width && new_h == m.height) return m;
    LabelMap out(new_w, new_h);
    for (int y = 0; y < new_h; ++y) {
        double sy = (y + 0.5) * static_cast<double>(m.height) / new_h - 0.5;
        int iy = clamp_index(static_cast<int>(std::lround(sy)), 0, m.height - 1);
        for (int x = 0; x < new_w; ++x) {
            double sx = (x + 0.5) * static_cast<double>(m.width) / new_w - 0.5;
            int ix = clamp_index(static_cast<int>(std::lround(sx)), 0, m.width - 1);
            out.at(x, y) = m.at(ix, iy);
        }
    }
    return out;
}

Raster box_downsample(const Raster& r) {
    const int nw = (r.width + 1) / 2;
    const int nh = (r.height + 1) / 2;
    Raster out(nw, nh);
    for (int y = 0; y < nh; ++y) {
        const int y0 = 2 * y;
        const int y1 = std::min(y0 + 1, r.height - 1);
        const int ny = (y1 > y0) ? 2 : 1;
        for (int x = 0; x < nw; ++x) {
            const int x0 = 2 * x;
            const int x1 = std::min(x0 + 1, r.width - 1);
            const int nx = (x1 > x0) ? 2 : 1;
            float* dst = out.pixel(x, y);
            for (int c = 0; c < 3; ++c) {
                double sum = 0.0;
                for (int yy = y0; yy < y0 + ny; ++yy)
                    for (int xx = x0; xx < x0 + nx; ++xx) sum += r.pixel(xx, yy)[c];
                dst[c] = static_cast<float>(sum / (nx * ny));
            }
        }
    }
    return out;
}

int pyramid_levels_for(int min_dim, int max_levels, int min_coarsest_dim) {
    if (min_coarsest_dim < 1) min_coarsest_dim = 1;
    int levels = 1;
    int d = min_dim;
    while (levels < max_levels) {
        int next = (d + 1) / 2;
        if (next < min_coarsest_dim) break;
        d = next;
        ++levels;
    }
    return levels;
}

Pyramid build_pyramid(const Raster& r, int max_levels, int min_coarsest_dim) {
    require(r.width >= 1 && r.height >= 1, "build_pyramid: empty raster");
    const int levels = pyramid_levels_for(std::min(r.width, r.height), max_levels, min_coarsest_dim);
    Pyramid p;
    p.levels.resize(levels);
    p.levels[levels - 1] = r;
    for (int k = levels - 2; k >= 0; --k) p.levels[k] = box_downsample(p.levels[k + 1]);
    return p;
}

float field_min(const ScalarField& f) {
    float m = f.values.empty() ? 0.0f : f.values[0];
    for (float v : f.values) m = std::min(m, v);
    return m;
}

float field_max(const ScalarField& f) {
    float m = f.values.empty() ? 0.0f : f.values[0];
    for (float v : f.values) m = std::max(m, v);
    return m;
}

double field_mean(const ScalarField& f) {
    if (f.values.empty()) return 0.0;
    double sum = 0.0;
    for (float v : f.values) sum += v;
    return sum / static_cast<double>(f.values.size());
}

ScalarField normalize_field(const ScalarField& f) {
    ScalarField out(f.width, f.height);
    const float lo = field_min(f);
    const float hi = field_max(f);
    const float range = hi - lo;
    if (range <= 0.0f) return out; // zero-range rule: constant maps to 0
    for (size_t i = 0; i < f.values.size(); ++i) out.values[i] = (f.values[i] - lo) / range;
    return out;
}

} // namespace retex
