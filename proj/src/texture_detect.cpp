#include "retex/texture_detect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "retex/errors.hpp"
#include "retex/parallel.hpp"
#include "retex/slic.hpp"

namespace retex {

ScalarField gaussian_window_sum(const ScalarField& f, double sigma) {
    require(sigma > 0.0, "gaussian_window_sum: sigma must be positive");
    const int radius = static_cast<int>(std::ceil(2.0 * sigma));
    std::vector<double> kernel(2 * radius + 1);
    for (int d = -radius; d <= radius; ++d)
        kernel[d + radius] = std::exp(-(d * d) / (2.0 * sigma * sigma));

    const int w = f.width;
    const int h = f.height;
    ScalarField tmp(w, h);
    parallel_for(0, h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            double sum = 0.0;
            for (int d = -radius; d <= radius; ++d)
                sum += kernel[d + radius] * f.at(clamp_index(x + d, 0, w - 1), y);
            tmp.at(x, y) = static_cast<float>(sum);
        }
    });
    ScalarField out(w, h);
    parallel_for(0, h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            double sum = 0.0;
            for (int d = -radius; d <= radius; ++d)
                sum += kernel[d + radius] * tmp.at(x, clamp_index(y + d, 0, h - 1));
            out.at(x, y) = static_cast<float>(sum);
        }
    });
    return out;
}

VariationMaps windowed_variations(const ScalarField& lum, double sigma) {
    const int w = lum.width;
    const int h = lum.height;
    ScalarField gx(w, h), gy(w, h), agx(w, h), agy(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            // Forward differences; clamp-to-edge makes the border gradient 0.
            const float dx = lum.at(std::min(x + 1, w - 1), y) - lum.at(x, y);
            const float dy = lum.at(x, std::min(y + 1, h - 1)) - lum.at(x, y);
            gx.at(x, y) = dx;
            gy.at(x, y) = dy;
            agx.at(x, y) = std::fabs(dx);
            agy.at(x, y) = std::fabs(dy);
        }
    }
    VariationMaps maps;
    maps.window_sigma = sigma;
    maps.dx = gaussian_window_sum(agx, sigma);
    maps.dy = gaussian_window_sum(agy, sigma);
    ScalarField sx = gaussian_window_sum(gx, sigma);
    ScalarField sy = gaussian_window_sum(gy, sigma);
    for (float& v : sx.values) v = std::fabs(v);
    for (float& v : sy.values) v = std::fabs(v);
    maps.lx = std::move(sx);
    maps.ly = std::move(sy);
    return maps;
}

ScalarField texture_reliability(const VariationMaps& v, double epsilon) {
    require(v.dx.width == v.lx.width && v.dx.height == v.lx.height &&
                v.dx.width == v.dy.width && v.dx.height == v.dy.height,
            "texture_reliability: variation map dimensions differ");
    ScalarField r(v.dx.width, v.dx.height);
    for (size_t i = 0; i < r.size(); ++i) {
        const double rx = v.dx.values[i] / (v.lx.values[i] + epsilon);
        const double ry = v.dy.values[i] / (v.ly.values[i] + epsilon);
        r.values[i] = static_cast<float>(rx + ry);
    }
    return r;
}

ThresholdResult iterative_threshold(const ScalarField& reliability, double eps_conv,
                                    double alpha) {
    require(!reliability.values.empty(), "iterative_threshold: empty field");
    ThresholdResult res;
    res.mask = Mask(reliability.width, reliability.height, 0);

    const float lo = field_min(reliability);
    const float hi = field_max(reliability);
    if (!(hi > lo)) {
        // All-equal reliability: nothing distinguishes texture, declare none.
        res.threshold = lo;
        res.history = {lo};
        res.degenerate = true;
        return res;
    }

    double threshold = field_mean(reliability);
    res.history.push_back(threshold);
    constexpr int kMaxIters = 256;
    for (int it = 0; it < kMaxIters; ++it) {
        double sum_t = 0.0, sum_nt = 0.0;
        size_t n_t = 0, n_nt = 0;
        for (float v : reliability.values) {
            if (v >= threshold) {
                sum_t += v;
                ++n_t;
            } else {
                sum_nt += v;
                ++n_nt;
            }
        }
        if (n_t == 0 || n_nt == 0) break; // split collapsed; keep current threshold
        const double next = alpha * (sum_t / n_t) + (1.0 - alpha) * (sum_nt / n_nt);
        res.history.push_back(next);
        const bool converged = std::fabs(next - threshold) < eps_conv;
        threshold = next;
        if (converged) break;
    }
    res.threshold = threshold;
    res.iterations = static_cast<int>(res.history.size()) - 1;
    for (size_t i = 0; i < reliability.size(); ++i)
        res.mask.values[i] = reliability.values[i] >= threshold ? 1 : 0;
    return res;
}

Mask vote_superpixels(const Mask& noisy, const LabelMap& segments) {
    require(noisy.width == segments.width && noisy.height == segments.height,
            "vote_superpixels: dimensions differ");
    const int n = label_count(segments);
    std::vector<int> total(n, 0), textured(n, 0);
    for (size_t i = 0; i < segments.size(); ++i) {
        ++total[segments.labels[i]];
        if (noisy.values[i]) ++textured[segments.labels[i]];
    }
    Mask out(noisy.width, noisy.height, 0);
    for (size_t i = 0; i < segments.size(); ++i) {
        const int s = segments.labels[i];
        out.values[i] = (2 * textured[s] > total[s]) ? 1 : 0; // strict majority
    }
    return out;
}

BinaryMrf make_refine_energy(const Raster& r, const ScalarField& reliability, double threshold,
                             const GraphcutParams& params) {
    const int w = r.width;
    const int h = r.height;
    BinaryMrf mrf(w * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int node = y * w + x;
            double p = reliability.at(x, y) / (2.0 * threshold);
            p = std::clamp(p, params.p_min, params.p_max);
            mrf.set_data_cost(node, -std::log(1.0 - p), -std::log(p));
        }
    }
    const double inv = 1.0 / (2.0 * params.sigma_color * params.sigma_color);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const float* c = r.pixel(x, y);
            if (x + 1 < w) {
                const float* cr = r.pixel(x + 1, y);
                double d2 = 0;
                for (int ch = 0; ch < 3; ++ch) d2 += (c[ch] - cr[ch]) * (c[ch] - cr[ch]);
                mrf.add_pairwise(y * w + x, y * w + x + 1,
                                 params.pairwise_weight * std::exp(-d2 * inv));
            }
            if (y + 1 < h) {
                const float* cd = r.pixel(x, y + 1);
                double d2 = 0;
                for (int ch = 0; ch < 3; ++ch) d2 += (c[ch] - cd[ch]) * (c[ch] - cd[ch]);
                mrf.add_pairwise(y * w + x, (y + 1) * w + x,
                                 params.pairwise_weight * std::exp(-d2 * inv));
            }
        }
    }
    return mrf;
}

Mask graphcut_refine(const Raster& r, const Mask& voted, const ScalarField& reliability,
                     double threshold, const GraphcutParams& params) {
    require(r.width == voted.width && r.height == voted.height &&
                r.width == reliability.width && r.height == reliability.height,
            "graphcut_refine: dimensions differ");
    if (!(threshold > 0.0) || !std::isfinite(threshold)) return voted;
    BinaryMrf mrf = make_refine_energy(r, reliability, threshold, params);
    std::vector<uint8_t> labels = mrf.solve();
    Mask out(r.width, r.height);
    out.values = std::move(labels);
    return out;
}

RegionPartition extract_regions(const Mask& mask, int min_area) {
    RegionPartition part;
    part.labels = LabelMap(mask.width, mask.height, 0);
    const int w = mask.width;
    const int h = mask.height;
    std::vector<uint8_t> seen(mask.size(), 0);
    std::vector<int> stack;
    int next_id = 1;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const size_t start = static_cast<size_t>(y) * w + x;
            if (!mask.values[start] || seen[start]) continue;
            stack.clear();
            stack.push_back(static_cast<int>(start));
            seen[start] = 1;
            std::vector<int> pixels;
            while (!stack.empty()) {
                const int p = stack.back();
                stack.pop_back();
                pixels.push_back(p);
                const int px = p % w;
                const int py = p / w;
                const int nbs[4][2] = {{px - 1, py}, {px + 1, py}, {px, py - 1}, {px, py + 1}};
                for (auto& nb : nbs) {
                    if (nb[0] < 0 || nb[0] >= w || nb[1] < 0 || nb[1] >= h) continue;
                    const size_t ni = static_cast<size_t>(nb[1]) * w + nb[0];
                    if (mask.values[ni] && !seen[ni]) {
                        seen[ni] = 1;
                        stack.push_back(static_cast<int>(ni));
                    }
                }
            }
            if (static_cast<int>(pixels.size()) < min_area) continue;
            RegionInfo info;
            info.id = next_id;
            info.area = static_cast<int>(pixels.size());
            info.x0 = w;
            info.y0 = h;
            info.x1 = 0;
            info.y1 = 0;
            for (int p : pixels) {
                part.labels.labels[p] = next_id;
                const int px = p % w;
                const int py = p / w;
                info.x0 = std::min(info.x0, px);
                info.x1 = std::max(info.x1, px);
                info.y0 = std::min(info.y0, py);
                info.y1 = std::max(info.y1, py);
            }
            part.regions.push_back(info);
            ++next_id;
        }
    }
    return part;
}

void refresh_region_metadata(RegionPartition& partition) {
    const int w = partition.labels.width;
    const int h = partition.labels.height;
    int max_id = 0;
    for (int v : partition.labels.labels) max_id = std::max(max_id, v);
    std::vector<RegionInfo> infos(static_cast<size_t>(max_id) + 1);
    for (int i = 0; i <= max_id; ++i) {
        infos[i].id = i;
        infos[i].x0 = w;
        infos[i].y0 = h;
        infos[i].x1 = -1;
        infos[i].y1 = -1;
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int id = partition.labels.at(x, y);
            RegionInfo& info = infos[id];
            ++info.area;
            info.x0 = std::min(info.x0, x);
            info.x1 = std::max(info.x1, x);
            info.y0 = std::min(info.y0, y);
            info.y1 = std::max(info.y1, y);
        }
    }
    partition.regions.clear();
    for (int i = 1; i <= max_id; ++i)
        if (infos[i].area > 0) partition.regions.push_back(infos[i]);
}

DetectResult detect_textures(const Raster& r, const DetectParams& params) {
    DetectResult res;
    const ScalarField lum = to_luminance(r);
    const VariationMaps maps = windowed_variations(lum, params.window_sigma);
    res.reliability = texture_reliability(maps, params.reliability_eps);
    res.log_reliability = ScalarField(r.width, r.height);
    for (size_t i = 0; i < res.reliability.size(); ++i)
        res.log_reliability.values[i] =
            std::log1p(std::log1p(res.reliability.values[i]));
    res.threshold = iterative_threshold(res.log_reliability, params.eps_conv, params.alpha);
    res.threshold_value = std::expm1(std::expm1(res.threshold.threshold));

    const int pixels = r.width * r.height;
    const int k = std::clamp(pixels / params.superpixel_divisor, params.superpixel_min_k,
                             params.superpixel_max_k);
    res.superpixels = slic_superpixels(r, std::min(k, pixels), params.superpixel_compactness);
    res.voted = vote_superpixels(res.threshold.mask, res.superpixels);
    res.refined = res.threshold.degenerate
                      ? res.voted
                      : graphcut_refine(r, res.voted, res.reliability, res.threshold_value,
                                        params.graphcut);
    const int min_area = std::max(1, static_cast<int>(params.min_area_fraction * pixels));
    res.partition = extract_regions(res.refined, min_area);
    return res;
}

} // namespace retex
