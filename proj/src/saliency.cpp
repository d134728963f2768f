#include "retex/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "retex/errors.hpp"
#include "retex/parallel.hpp"
#include "retex/slic.hpp"

namespace retex {

const GaborBank& GaborBank::default_bank() {
    static const GaborBank bank = [] {
        GaborBank b;
        const double freqs[4] = {1.0 / 4, 1.0 / 8, 1.0 / 16, 1.0 / 32};
        for (double f : freqs) {
            const double sigma = 0.56 / f;
            const int radius = static_cast<int>(std::ceil(2.0 * sigma));
            for (int o = 0; o < 6; ++o) {
                const double theta = o * M_PI / 6.0;
                Kernel k;
                k.radius = radius;
                k.frequency = f;
                k.orientation = theta;
                const int side = 2 * radius + 1;
                k.re.resize(static_cast<size_t>(side) * side);
                k.im.resize(k.re.size());
                double sum_re = 0.0, sum_im = 0.0;
                for (int y = -radius; y <= radius; ++y) {
                    for (int x = -radius; x <= radius; ++x) {
                        const double u = x * std::cos(theta) + y * std::sin(theta);
                        const double env =
                            std::exp(-(x * x + y * y) / (2.0 * sigma * sigma));
                        const double phase = 2.0 * M_PI * f * u;
                        const size_t i =
                            static_cast<size_t>(y + radius) * side + (x + radius);
                        k.re[i] = env * std::cos(phase);
                        k.im[i] = env * std::sin(phase);
                        sum_re += k.re[i];
                        sum_im += k.im[i];
                    }
                }
                const double n = static_cast<double>(k.re.size());
                for (size_t i = 0; i < k.re.size(); ++i) {
                    k.re[i] -= sum_re / n;
                    k.im[i] -= sum_im / n;
                }
                b.kernels.push_back(std::move(k));
            }
        }
        return b;
    }();
    return bank;
}

GaborFeatures gabor_features(const Raster& r, const GaborBank& bank) {
    require(bank.kernels.size() == GaborFeatures::kFilters, "gabor: expected 24 kernels");
    const ScalarField lum = to_luminance(r);
    GaborFeatures out;
    out.width = r.width;
    out.height = r.height;
    out.values.assign(r.pixel_count() * GaborFeatures::kFilters, 0.0f);
    const int w = r.width;
    const int h = r.height;
    for (int ki = 0; ki < static_cast<int>(bank.kernels.size()); ++ki) {
        const GaborBank::Kernel& k = bank.kernels[ki];
        const int radius = k.radius;
        const int side = 2 * radius + 1;
        parallel_for(0, h, [&](int y) {
            for (int x = 0; x < w; ++x) {
                double acc_re = 0.0, acc_im = 0.0;
                for (int dy = -radius; dy <= radius; ++dy) {
                    const int sy = clamp_index(y + dy, 0, h - 1);
                    const double* kre = k.re.data() + static_cast<size_t>(dy + radius) * side;
                    const double* kim = k.im.data() + static_cast<size_t>(dy + radius) * side;
                    for (int dx = -radius; dx <= radius; ++dx) {
                        const double v = lum.at(clamp_index(x + dx, 0, w - 1), sy);
                        acc_re += kre[dx + radius] * v;
                        acc_im += kim[dx + radius] * v;
                    }
                }
                out.values[GaborFeatures::kFilters * (static_cast<size_t>(y) * w + x) + ki] =
                    static_cast<float>(std::sqrt(acc_re * acc_re + acc_im * acc_im));
            }
        });
    }
    return out;
}

namespace {

// Min-max normalization of one feature channel across patches, in place.
// Zero-range channels collapse to 0 so identical patches never differ.
void normalize_channel(std::vector<PatchDescriptor>& patches,
                       const std::function<double&(PatchDescriptor&)>& get) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (auto& p : patches) {
        lo = std::min(lo, get(p));
        hi = std::max(hi, get(p));
    }
    const double range = hi - lo;
    for (auto& p : patches) get(p) = range > 0 ? (get(p) - lo) / range : 0.0;
}

} // namespace

std::vector<PatchDescriptor> patch_descriptors(const Raster& r, const LabelMap& segments,
                                               const Mask& tmask, const GaborFeatures& gabor) {
    require(r.width == segments.width && r.height == segments.height &&
                r.width == tmask.width && r.height == tmask.height,
            "patch_descriptors: dimensions differ");
    const int n = label_count(segments);
    std::vector<PatchDescriptor> patches(n);
    for (int i = 0; i < n; ++i) patches[i].id = i;

    std::vector<std::array<double, 24>> g_sum(n), g_sq(n);
    for (auto& a : g_sum) a.fill(0.0);
    for (auto& a : g_sq) a.fill(0.0);
    std::vector<std::array<double, 3>> c_sum(n);
    for (auto& a : c_sum) a.fill(0.0);
    std::vector<double> x_sum(n, 0.0), y_sum(n, 0.0);

    for (int y = 0; y < r.height; ++y) {
        for (int x = 0; x < r.width; ++x) {
            const int idx = y * r.width + x;
            const int s = segments.labels[idx];
            PatchDescriptor& p = patches[s];
            p.pixels.push_back(idx);
            if (tmask.values[idx]) p.t_pixels.push_back(idx);
            const float* c = r.pixel(x, y);
            for (int ch = 0; ch < 3; ++ch) c_sum[s][ch] += c[ch];
            const float* g = gabor.at(x, y);
            for (int f = 0; f < 24; ++f) {
                g_sum[s][f] += g[f];
                g_sq[s][f] += static_cast<double>(g[f]) * g[f];
            }
            x_sum[s] += x;
            y_sum[s] += y;
        }
    }
    for (int i = 0; i < n; ++i) {
        PatchDescriptor& p = patches[i];
        const double area = static_cast<double>(p.pixels.size());
        p.t_weight = static_cast<int>(p.t_pixels.size());
        if (area <= 0) continue;
        p.cx = r.width > 1 ? (x_sum[i] / area) / (r.width - 1) : 0.5;
        p.cy = r.height > 1 ? (y_sum[i] / area) / (r.height - 1) : 0.5;
        for (int ch = 0; ch < 3; ++ch) p.mean_color[ch] = c_sum[i][ch] / area;
        for (int f = 0; f < 24; ++f) {
            const double mean = g_sum[i][f] / area;
            const double var = std::max(0.0, g_sq[i][f] / area - mean * mean);
            p.texture[f] = mean;
            p.texture[24 + f] = var;
        }
    }
    // Normalize every feature channel to [0,1] across patches.
    for (int ch = 0; ch < 3; ++ch)
        normalize_channel(patches,
                          [ch](PatchDescriptor& p) -> double& { return p.mean_color[ch]; });
    for (int f = 0; f < 48; ++f)
        normalize_channel(patches, [f](PatchDescriptor& p) -> double& { return p.texture[f]; });
    return patches;
}

void uniqueness_cue(std::vector<PatchDescriptor>& patches, const SaliencyConfig& cfg) {
    require(!patches.empty(), "uniqueness_cue: no patches");
    const int n = static_cast<int>(patches.size());
    parallel_for(0, n, [&](int i) {
        PatchDescriptor& a = patches[i];
        double u = 0.0;
        for (int j = 0; j < n; ++j) {
            const PatchDescriptor& b = patches[j];
            const double dx = a.cx - b.cx;
            const double dy = a.cy - b.cy;
            const double ds = dx * dx + dy * dy;
            double diff = 0.0;
            for (int ch = 0; ch < 3; ++ch) {
                const double d = a.mean_color[ch] - b.mean_color[ch];
                diff += d * d;
            }
            for (int f = 0; f < 48; ++f) {
                const double d = a.texture[f] - b.texture[f];
                diff += d * d;
            }
            u += std::exp(-ds / cfg.sigma_s_sq) * diff;
        }
        a.uniqueness = a.t_weight * u;
    });
}

void location_cue(std::vector<PatchDescriptor>& patches, int width, int height, double lambda) {
    for (PatchDescriptor& p : patches) {
        const std::vector<int>& source = p.t_pixels.empty() ? p.pixels : p.t_pixels;
        if (source.empty()) {
            p.location = 0.0;
            continue;
        }
        double sum = 0.0;
        for (int idx : source) {
            const double x = norm_coord(idx % width, width) - 0.5;
            const double y = norm_coord(idx / width, height) - 0.5;
            sum += std::exp(-lambda * (x * x + y * y));
        }
        p.location = sum / static_cast<double>(source.size());
    }
}

TextureSaliencyResult multiscale_texture_saliency(const Raster& r, const Mask& tmask,
                                                  const SaliencyConfig& cfg,
                                                  const GaborFeatures& gabor) {
    TextureSaliencyResult res;
    const size_t pixels = r.pixel_count();
    ScalarField mean_map(r.width, r.height, 0.0f);
    std::vector<double> accum(pixels, 0.0);
    for (size_t si = 0; si < cfg.scales.size(); ++si) {
        const int m = std::max(1, std::min<int>(cfg.scales[si], static_cast<int>(pixels)));
        LabelMap segments = slic_superpixels(r, m, cfg.slic_compactness);
        std::vector<PatchDescriptor> patches = patch_descriptors(r, segments, tmask, gabor);
        uniqueness_cue(patches, cfg);
        location_cue(patches, r.width, r.height, cfg.lambda);
        for (PatchDescriptor& p : patches) p.saliency = p.uniqueness * p.location;
        ScalarField map(r.width, r.height);
        for (size_t i = 0; i < pixels; ++i)
            map.values[i] = static_cast<float>(patches[segments.labels[i]].saliency);
        for (size_t i = 0; i < pixels; ++i) accum[i] += map.values[i];
        res.scale_maps.push_back(std::move(map));
        if (si + 1 == cfg.scales.size()) {
            res.finest_patches = std::move(patches);
            res.finest_segments = std::move(segments);
        }
    }
    const double inv = 1.0 / static_cast<double>(cfg.scales.size());
    for (size_t i = 0; i < pixels; ++i) mean_map.values[i] = static_cast<float>(accum[i] * inv);
    res.coarse = normalize_field(mean_map);
    return res;
}

ScalarField refine_saliency(const std::vector<PatchDescriptor>& finest_patches,
                            const ScalarField& coarse, const Raster& r,
                            const GaborFeatures& gabor, double sigma, int neighbors) {
    require(!finest_patches.empty(), "refine_saliency: no patches");
    const int w = r.width;
    const int h = r.height;
    const int n = static_cast<int>(finest_patches.size());
    const int nn = std::min(neighbors, n);

    // Per-filter min-max normalization of the pixel Gabor responses keeps the
    // three feature groups commensurate under the shared sigma.
    std::array<float, 24> g_lo, g_hi;
    g_lo.fill(std::numeric_limits<float>::infinity());
    g_hi.fill(-std::numeric_limits<float>::infinity());
    for (size_t i = 0; i < r.pixel_count(); ++i) {
        const float* g = gabor.values.data() + i * 24;
        for (int f = 0; f < 24; ++f) {
            g_lo[f] = std::min(g_lo[f], g[f]);
            g_hi[f] = std::max(g_hi[f], g[f]);
        }
    }
    std::array<float, 24> g_scale;
    for (int f = 0; f < 24; ++f)
        g_scale[f] = g_hi[f] > g_lo[f] ? 1.0f / (g_hi[f] - g_lo[f]) : 0.0f;
    auto norm_g = [&](const float* g, int f) { return (g[f] - g_lo[f]) * g_scale[f]; };

    // Patch-side features: means of the normalized pixel features, plus the
    // patch's coarse saliency.
    struct PatchFeature {
        double c[3] = {0, 0, 0};
        double g[24] = {0};
        double x = 0, y = 0;
        double s = 0;
    };
    std::vector<PatchFeature> feats(n);
    for (int i = 0; i < n; ++i) {
        const PatchDescriptor& p = finest_patches[i];
        PatchFeature& f = feats[i];
        if (p.pixels.empty()) continue;
        double s_sum = 0.0;
        for (int idx : p.pixels) {
            const int px = idx % w;
            const int py = idx / w;
            const float* c = r.pixel(px, py);
            for (int ch = 0; ch < 3; ++ch) f.c[ch] += c[ch];
            const float* g = gabor.at(px, py);
            for (int ff = 0; ff < 24; ++ff) f.g[ff] += norm_g(g, ff);
            f.x += norm_coord(px, w);
            f.y += norm_coord(py, h);
            s_sum += coarse.values[idx];
        }
        const double inv = 1.0 / static_cast<double>(p.pixels.size());
        for (int ch = 0; ch < 3; ++ch) f.c[ch] *= inv;
        for (int ff = 0; ff < 24; ++ff) f.g[ff] *= inv;
        f.x *= inv;
        f.y *= inv;
        f.s = s_sum * inv;
    }

    ScalarField out(w, h);
    const double denom = 2.0 * sigma;
    parallel_for(0, h, [&](int y) {
        std::vector<std::pair<double, int>> order(n);
        for (int x = 0; x < w; ++x) {
            const double px = norm_coord(x, w);
            const double py = norm_coord(y, h);
            for (int j = 0; j < n; ++j) {
                const double dx = px - feats[j].x;
                const double dy = py - feats[j].y;
                order[j] = {dx * dx + dy * dy, j};
            }
            std::partial_sort(order.begin(), order.begin() + nn, order.end());
            const float* c = r.pixel(x, y);
            const float* g = gabor.at(x, y);
            double wsum = 0.0, vsum = 0.0;
            for (int k = 0; k < nn; ++k) {
                const PatchFeature& f = feats[order[k].second];
                double d2 = 0.0;
                for (int ch = 0; ch < 3; ++ch) {
                    const double d = c[ch] - f.c[ch];
                    d2 += d * d;
                }
                for (int ff = 0; ff < 24; ++ff) {
                    const double d = norm_g(g, ff) - f.g[ff];
                    d2 += d * d;
                }
                const double dx = px - f.x;
                const double dy = py - f.y;
                d2 += dx * dx + dy * dy;
                const double wgt = std::exp(-d2 / denom);
                wsum += wgt;
                vsum += wgt * f.s;
            }
            out.at(x, y) = static_cast<float>(wsum > 0 ? vsum / wsum : 0.0);
        }
    });
    return out;
}

const char* base_mode_name(BaseMode mode) {
    return mode == BaseMode::kContrast ? "contrast" : "balanced";
}

ScalarField base_saliency(const Raster& r, BaseMode mode, const SaliencyConfig& cfg) {
    const size_t pixels = r.pixel_count();
    const int k = std::max(1, std::min<int>(cfg.base_superpixels, static_cast<int>(pixels)));
    LabelMap segments = slic_superpixels(r, k, cfg.slic_compactness);
    const int n = label_count(segments);

    struct BasePatch {
        double c[3] = {0, 0, 0};
        double x = 0, y = 0;
        int area = 0;
        double u = 0, loc = 0;
    };
    std::vector<BasePatch> patches(n);
    for (int y = 0; y < r.height; ++y) {
        for (int x = 0; x < r.width; ++x) {
            BasePatch& p = patches[segments.at(x, y)];
            const float* c = r.pixel(x, y);
            for (int ch = 0; ch < 3; ++ch) p.c[ch] += c[ch];
            p.x += norm_coord(x, r.width);
            p.y += norm_coord(y, r.height);
            ++p.area;
        }
    }
    for (BasePatch& p : patches) {
        if (p.area == 0) continue;
        for (double& c : p.c) c /= p.area;
        p.x /= p.area;
        p.y /= p.area;
    }
    for (int i = 0; i < n; ++i) {
        BasePatch& a = patches[i];
        double u = 0.0;
        for (int j = 0; j < n; ++j) {
            const BasePatch& b = patches[j];
            const double dx = a.x - b.x;
            const double dy = a.y - b.y;
            double dc = 0.0;
            for (int ch = 0; ch < 3; ++ch) {
                const double d = a.c[ch] - b.c[ch];
                dc += d * d;
            }
            u += std::exp(-(dx * dx + dy * dy) / cfg.sigma_s_sq) * dc;
        }
        a.u = a.area * u;
    }
    for (int y = 0; y < r.height; ++y) {
        for (int x = 0; x < r.width; ++x) {
            BasePatch& p = patches[segments.at(x, y)];
            const double dx = norm_coord(x, r.width) - 0.5;
            const double dy = norm_coord(y, r.height) - 0.5;
            p.loc += std::exp(-cfg.lambda * (dx * dx + dy * dy));
        }
    }
    ScalarField map(r.width, r.height);
    for (size_t i = 0; i < pixels; ++i) {
        const BasePatch& p = patches[segments.labels[i]];
        const double loc = p.area > 0 ? p.loc / p.area : 0.0;
        map.values[i] =
            static_cast<float>(mode == BaseMode::kBalanced ? p.u * loc : p.u);
    }
    return normalize_field(map);
}

BaseMode select_base_mode(const RegionPartition& partition, double nt_area_threshold) {
    const size_t total = partition.labels.size();
    if (total == 0) return BaseMode::kBalanced;
    const double nt_fraction =
        1.0 - static_cast<double>(partition.texture_pixels()) / static_cast<double>(total);
    return nt_fraction < nt_area_threshold ? BaseMode::kContrast : BaseMode::kBalanced;
}

ScalarField compose_significance(const ScalarField& base, const ScalarField& tex,
                                 const RegionPartition& partition) {
    require(base.width == tex.width && base.height == tex.height &&
                base.width == partition.labels.width && base.height == partition.labels.height,
            "compose_significance: dimensions differ");
    ScalarField out(base.width, base.height);
    for (size_t i = 0; i < out.size(); ++i)
        out.values[i] = partition.labels.labels[i] > 0 ? tex.values[i] : base.values[i];
    return out;
}

} // namespace retex
