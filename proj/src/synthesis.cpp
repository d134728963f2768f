#include "retex/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "retex/errors.hpp"
#include "retex/parallel.hpp"

namespace retex {

Neighborhood extract_neighborhood(const Raster& region, int ax, int ay, int n) {
    require(ax >= 0 && ay >= 0 && ax + n <= region.width && ay + n <= region.height,
            "extract_neighborhood: window out of bounds");
    Neighborhood nb;
    nb.anchor_x = ax;
    nb.anchor_y = ay;
    nb.size = n;
    nb.colors.resize(static_cast<size_t>(n) * n * 3);
    nb.coords.resize(static_cast<size_t>(n) * n * 2);
    size_t ci = 0, xi = 0;
    for (int j = 0; j < n; ++j) {
        const float* row = region.pixel(ax, ay + j);
        const float v = static_cast<float>(norm_coord(ay + j, region.height));
        for (int i = 0; i < n; ++i) {
            nb.colors[ci++] = row[3 * i];
            nb.colors[ci++] = row[3 * i + 1];
            nb.colors[ci++] = row[3 * i + 2];
            nb.coords[xi++] = static_cast<float>(norm_coord(ax + i, region.width));
            nb.coords[xi++] = v;
        }
    }
    return nb;
}

namespace {

// Shared distance kernel. The cutoff variant accumulates in exactly the same
// order and aborts only when the (monotone) partial value already exceeds
// the budget, so selections match the plain evaluation bit for bit.
inline double distance_accumulate(const Neighborhood& a, const Neighborhood& b, double omega,
                                  double mu, double cutoff) {
    const int samples = a.size * a.size;
    const float* ca = a.colors.data();
    const float* cb = b.colors.data();
    const float* xa = a.coords.data();
    const float* xb = b.coords.data();
    double color = 0.0, coord = 0.0;
    int s = 0;
    while (s < samples) {
        const int row_end = std::min(samples, s + a.size);
        for (; s < row_end; ++s) {
            const double d0 = static_cast<double>(ca[3 * s]) - cb[3 * s];
            const double d1 = static_cast<double>(ca[3 * s + 1]) - cb[3 * s + 1];
            const double d2 = static_cast<double>(ca[3 * s + 2]) - cb[3 * s + 2];
            color += d0 * d0 + d1 * d1 + d2 * d2;
            const double u = static_cast<double>(xa[2 * s]) - xb[2 * s];
            const double v = static_cast<double>(xa[2 * s + 1]) - xb[2 * s + 1];
            coord += u * u + v * v;
        }
        if (mu * (color + omega * coord) >= cutoff) break;
    }
    return mu * (color + omega * coord);
}

} // namespace

double neighborhood_distance(const Neighborhood& a, const Neighborhood& b, double omega,
                             double mu) {
    require(a.size == b.size, "neighborhood_distance: size mismatch");
    return distance_accumulate(a, b, omega, mu, std::numeric_limits<double>::infinity());
}

PatchGrid make_patch_grid(int width, int height, int patch, int stride) {
    PatchGrid g;
    g.patch = patch;
    if (width < patch || height < patch || patch < 1 || stride < 1) return g;
    for (int x = 0; x + patch <= width; x += stride) g.xs.push_back(x);
    if (g.xs.back() != width - patch) g.xs.push_back(width - patch);
    for (int y = 0; y + patch <= height; y += stride) g.ys.push_back(y);
    if (g.ys.back() != height - patch) g.ys.push_back(height - patch);
    return g;
}

SearchDomain adaptive_domain(int level, int prev_anchor_x, int prev_anchor_y, int exemplar_w,
                             int exemplar_h, const PatchGrid& grid, double fraction,
                             bool first_sweep) {
    SearchDomain full{0, grid.nx() - 1, 0, grid.ny() - 1};
    if (level == 0 || first_sweep || fraction >= 1.0) return full;
    require(fraction > 0.0, "adaptive_domain: fraction must be positive");

    const double side = std::sqrt(fraction);
    int ww = static_cast<int>(std::lround(exemplar_w * side));
    int wh = static_cast<int>(std::lround(exemplar_h * side));
    ww = std::clamp(ww, 1, exemplar_w);
    wh = std::clamp(wh, 1, exemplar_h);
    const int x0 = std::clamp(prev_anchor_x - ww / 2, 0, exemplar_w - ww);
    const int y0 = std::clamp(prev_anchor_y - wh / 2, 0, exemplar_h - wh);

    SearchDomain d;
    d.gx0 = static_cast<int>(std::lower_bound(grid.xs.begin(), grid.xs.end(), x0) -
                             grid.xs.begin());
    d.gx1 = static_cast<int>(std::upper_bound(grid.xs.begin(), grid.xs.end(), x0 + ww - 1) -
                             grid.xs.begin()) -
            1;
    d.gy0 = static_cast<int>(std::lower_bound(grid.ys.begin(), grid.ys.end(), y0) -
                             grid.ys.begin());
    d.gy1 = static_cast<int>(std::upper_bound(grid.ys.begin(), grid.ys.end(), y0 + wh - 1) -
                             grid.ys.begin()) -
            1;
    if (d.empty()) return full; // window missed the anchor lattice; stay safe
    return d;
}

BestMatch best_match(const Neighborhood& out_patch, const std::vector<Neighborhood>& exemplar,
                     const std::vector<int>& domain, const std::vector<int>& usage, double omega,
                     double beta) {
    require(!domain.empty(), "best_match: empty domain");
    BestMatch best;
    best.cost = std::numeric_limits<double>::infinity();
    for (int idx : domain) {
        const int t = usage.empty() ? 0 : usage[idx];
        const double mu = 1.0 + beta * t;
        const double d = distance_accumulate(out_patch, exemplar[idx], omega, mu, best.cost);
        if (d < best.cost) {
            best.cost = d;
            best.index = idx;
            best.used_t = t;
        }
    }
    best.base_cost = best.cost / (1.0 + beta * best.used_t);
    return best;
}

namespace {

// Grid columns/rows covering each coordinate, ascending, built once per level.
std::vector<std::vector<int>> coverage_lists(const std::vector<int>& anchors, int patch,
                                             int length) {
    std::vector<std::vector<int>> cover(length);
    for (int gi = 0; gi < static_cast<int>(anchors.size()); ++gi)
        for (int d = 0; d < patch; ++d) {
            const int p = anchors[gi] + d;
            if (p >= 0 && p < length) cover[p].push_back(gi);
        }
    return cover;
}

std::vector<Neighborhood> extract_grid(const Raster& region, const PatchGrid& grid) {
    std::vector<Neighborhood> out(grid.count());
    parallel_for(0, grid.count(), [&](int i) {
        out[i] = extract_neighborhood(region, grid.anchor_x(i), grid.anchor_y(i), grid.patch);
    });
    return out;
}

std::vector<uint8_t> patch_participation(const PatchGrid& grid, const Mask* region) {
    std::vector<uint8_t> keep(grid.count(), 1);
    if (!region) return keep;
    for (int i = 0; i < grid.count(); ++i) {
        const int ax = grid.anchor_x(i);
        const int ay = grid.anchor_y(i);
        uint8_t any = 0;
        for (int y = ay; y < ay + grid.patch && !any; ++y)
            for (int x = ax; x < ax + grid.patch; ++x)
                if (region->at(x, y)) {
                    any = 1;
                    break;
                }
        keep[i] = any;
    }
    return keep;
}

} // namespace

MatchState em_iteration(const MatchState& prev, Raster& output, const Raster& exemplar,
                        const EmLevelParams& params, bool first_sweep) {
    const int patch = params.patch;
    const PatchGrid egrid = make_patch_grid(exemplar.width, exemplar.height, patch,
                                            params.exemplar_stride);
    const PatchGrid ogrid = make_patch_grid(output.width, output.height, patch,
                                            params.output_stride);
    require(egrid.count() > 0 && ogrid.count() > 0, "em_iteration: region smaller than a patch");

    const std::vector<Neighborhood> epatches = extract_grid(exemplar, egrid);
    const std::vector<uint8_t> keep = patch_participation(ogrid, params.output_patch_region);

    MatchState state;
    state.match.assign(ogrid.count(), -1);
    state.cost.assign(ogrid.count(), 0.0);
    state.base_cost.assign(ogrid.count(), 0.0);
    state.used_t.assign(ogrid.count(), 0);
    state.usage.assign(egrid.count(), 0);

    const bool have_prev = static_cast<int>(prev.match.size()) == ogrid.count() &&
                           static_cast<int>(prev.usage.size()) == egrid.count();

    // M-step: independent argmin per output patch; counters frozen from the
    // previous sweep feed the reuse penalty.
    parallel_for(0, ogrid.count(), [&](int oi) {
        if (!keep[oi]) return;
        const Neighborhood onb =
            extract_neighborhood(output, ogrid.anchor_x(oi), ogrid.anchor_y(oi), patch);
        SearchDomain dom{0, egrid.nx() - 1, 0, egrid.ny() - 1};
        if (have_prev && !first_sweep && prev.match[oi] >= 0) {
            dom = adaptive_domain(params.level_index, egrid.anchor_x(prev.match[oi]),
                                  egrid.anchor_y(prev.match[oi]), exemplar.width,
                                  exemplar.height, egrid, params.domain_fraction, false);
        }
        double best_cost = std::numeric_limits<double>::infinity();
        int best_idx = -1;
        int best_t = 0;
        for (int gy = dom.gy0; gy <= dom.gy1; ++gy) {
            for (int gx = dom.gx0; gx <= dom.gx1; ++gx) {
                const int ei = gy * egrid.nx() + gx;
                const int t = have_prev ? prev.usage[ei] : 0;
                const double mu = 1.0 + params.beta * t;
                const double d =
                    distance_accumulate(onb, epatches[ei], params.omega, mu, best_cost);
                if (d < best_cost) { // strict: ties keep the smaller index
                    best_cost = d;
                    best_idx = ei;
                    best_t = t;
                }
            }
        }
        state.match[oi] = best_idx;
        state.cost[oi] = best_cost;
        state.used_t[oi] = best_t;
        state.base_cost[oi] = best_cost / (1.0 + params.beta * best_t);
    });

    double energy = 0.0;
    for (int oi = 0; oi < ogrid.count(); ++oi) {
        if (!keep[oi]) continue;
        energy += state.cost[oi];
        ++state.usage[state.match[oi]];
    }
    state.energy = energy;

    // E-step: every writable pixel becomes the plain average of the matched
    // exemplar pixels covering it; coverage is walked in ascending patch
    // index order for bit-reproducibility.
    const std::vector<std::vector<int>> cover_x = coverage_lists(ogrid.xs, patch, output.width);
    const std::vector<std::vector<int>> cover_y = coverage_lists(ogrid.ys, patch, output.height);
    parallel_for(0, output.height, [&](int y) {
        for (int x = 0; x < output.width; ++x) {
            if (params.write_mask && !params.write_mask->at(x, y)) continue;
            double sum[3] = {0, 0, 0};
            int count = 0;
            for (int gy : cover_y[y]) {
                for (int gx : cover_x[x]) {
                    const int oi = gy * ogrid.nx() + gx;
                    if (!keep[oi] || state.match[oi] < 0) continue;
                    const int ei = state.match[oi];
                    const int ex = egrid.anchor_x(ei) + (x - ogrid.anchor_x(oi));
                    const int ey = egrid.anchor_y(ei) + (y - ogrid.anchor_y(oi));
                    const float* src = exemplar.pixel(ex, ey);
                    sum[0] += src[0];
                    sum[1] += src[1];
                    sum[2] += src[2];
                    ++count;
                }
            }
            if (count > 0) {
                float* dst = output.pixel(x, y);
                dst[0] = static_cast<float>(sum[0] / count);
                dst[1] = static_cast<float>(sum[1] / count);
                dst[2] = static_cast<float>(sum[2] / count);
            }
        }
    });
    return state;
}

MatchState run_em_level(const Raster& exemplar, Raster& output, const EmLevelParams& params,
                        std::vector<EnergyTraceRow>* trace) {
    MatchState state;
    for (int it = 0; it < params.iterations; ++it) {
        state = em_iteration(state, output, exemplar, params, it == 0);
        if (trace) trace->push_back({params.level_index, it, state.energy});
    }
    return state;
}

Raster synthesize_region(const Raster& exemplar, const Raster& initial,
                         const SynthesisConfig& cfg, std::vector<EnergyTraceRow>* trace) {
    const int patch = cfg.patch_size;
    if (std::min(exemplar.width, exemplar.height) < patch ||
        std::min(initial.width, initial.height) < patch) {
        return initial; // too small to synthesize
    }
    require(cfg.omega_schedule.size() == cfg.domain_fractions.size(),
            "synthesize_region: schedule lengths differ");

    const int max_levels = static_cast<int>(cfg.omega_schedule.size());
    const int min_coarsest = cfg.min_coarsest_factor * patch;
    const int levels =
        std::min(pyramid_levels_for(std::min(exemplar.width, exemplar.height), max_levels,
                                    min_coarsest),
                 pyramid_levels_for(std::min(initial.width, initial.height), max_levels,
                                    min_coarsest));
    // Degraded pyramids keep the tail of the schedule: the finest entries
    // describe the resolution actually being produced.
    const int offset = max_levels - levels;

    const Pyramid epyr = build_pyramid(exemplar, levels, 1);

    // Output size chain by the same ceil-halving rule.
    std::vector<std::pair<int, int>> dims(levels);
    dims[levels - 1] = {initial.width, initial.height};
    for (int k = levels - 2; k >= 0; --k)
        dims[k] = {(dims[k + 1].first + 1) / 2, (dims[k + 1].second + 1) / 2};

    Raster out = initial;
    for (int k = 0; k + 1 < levels; ++k) out = box_downsample(out);

    for (int k = 0; k < levels; ++k) {
        if (k > 0) out = resample_bilinear(out, dims[k].first, dims[k].second);
        EmLevelParams p;
        p.omega = cfg.omega_schedule[offset + k];
        p.domain_fraction = cfg.domain_fractions[offset + k];
        p.iterations = cfg.em_iters_per_level;
        p.beta = cfg.beta;
        p.patch = patch;
        p.exemplar_stride = cfg.stride;
        p.output_stride = cfg.stride;
        p.level_index = k;
        run_em_level(epyr.levels[k], out, p, trace);
    }
    return out;
}

bool decide_whole_image(const RegionPartition& partition, double threshold) {
    const size_t total = partition.labels.size();
    if (total == 0) return false;
    const double fraction =
        static_cast<double>(partition.texture_pixels()) / static_cast<double>(total);
    return fraction > threshold;
}

} // namespace retex
