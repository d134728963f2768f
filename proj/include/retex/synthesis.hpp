#pragma once

#include <optional>
#include <vector>

#include "retex/raster.hpp"
#include "retex/texture_detect.hpp"

namespace retex {

struct SynthesisConfig {
    int patch_size = 8;
    int stride = 4; // output patch grid and exemplar anchor spacing
    std::vector<double> omega_schedule{0.65, 0.25, 0.1};   // coarse -> fine
    std::vector<double> domain_fractions{1.0, 0.4, 0.2};   // coarse -> fine
    double beta = 10.0;          // reuse penalty: mu = 1 + beta * t
    int em_iters_per_level = 20;
    double whole_image_threshold = 0.70;
    int min_coarsest_factor = 4; // coarsest level min dim >= factor * patch_size
};

// n x n sample block: colors plus normalized positions in its region frame.
struct Neighborhood {
    int anchor_x = 0, anchor_y = 0;
    int size = 0;
    std::vector<float> colors; // n*n*3
    std::vector<float> coords; // n*n*2
};

Neighborhood extract_neighborhood(const Raster& region, int ax, int ay, int n);

// mu * (sum |c_a - c_b|^2 + omega * sum |x_a - x_b|^2) over corresponding
// samples.
double neighborhood_distance(const Neighborhood& a, const Neighborhood& b, double omega,
                             double mu);

// Anchor lattice with the given stride, plus a clamped final anchor so the
// last patch reaches the region border. Empty when the region is smaller
// than the patch.
struct PatchGrid {
    std::vector<int> xs, ys;
    int patch = 0;

    int nx() const { return static_cast<int>(xs.size()); }
    int ny() const { return static_cast<int>(ys.size()); }
    int count() const { return nx() * ny(); }
    int anchor_x(int index) const { return xs[index % xs.size()]; }
    int anchor_y(int index) const { return ys[index / xs.size()]; }
};

PatchGrid make_patch_grid(int width, int height, int patch, int stride);

// Inclusive patch-grid index ranges forming the search window.
struct SearchDomain {
    int gx0 = 0, gx1 = -1, gy0 = 0, gy1 = -1;
    bool empty() const { return gx1 < gx0 || gy1 < gy0; }
    long long count() const {
        return empty() ? 0 : static_cast<long long>(gx1 - gx0 + 1) * (gy1 - gy0 + 1);
    }
};

// Level 0 (and every level's first sweep) searches everything; finer levels
// use the window centered on the previous match's anchor that holds the
// requested fraction of exemplar pixels (side = round(dim * sqrt(fraction)),
// clamped inside the exemplar).
SearchDomain adaptive_domain(int level, int prev_anchor_x, int prev_anchor_y, int exemplar_w,
                             int exemplar_h, const PatchGrid& grid, double fraction,
                             bool first_sweep);

struct BestMatch {
    int index = -1;
    double cost = 0.0;      // mu-scaled energy contribution
    double base_cost = 0.0; // before the reuse penalty
    int used_t = 0;         // usage count the penalty saw
};

// Argmin of neighborhood_distance over the domain; ties take the smallest
// exemplar index. usage supplies t per exemplar patch.
BestMatch best_match(const Neighborhood& out_patch, const std::vector<Neighborhood>& exemplar,
                     const std::vector<int>& domain, const std::vector<int>& usage, double omega,
                     double beta);

struct MatchState {
    std::vector<int> match;       // exemplar patch index per output patch
    std::vector<double> cost;     // mu-scaled match costs
    std::vector<double> base_cost;
    std::vector<int> used_t;      // t_p in effect when the match was scored
    std::vector<int> usage;       // t_p after the sweep (per exemplar patch)
    double energy = 0.0;          // sum of costs
};

struct EnergyTraceRow {
    int level = 0;
    int iteration = 0;
    double energy = 0.0;
};

struct EmLevelParams {
    double omega = 0.1;
    double domain_fraction = 1.0;
    int iterations = 1;
    double beta = 10.0;
    int patch = 8;
    int exemplar_stride = 4;
    int output_stride = 4;
    int level_index = 0;
    const Mask* write_mask = nullptr;             // E-step hard constraints
    const Mask* output_patch_region = nullptr;    // keep only patches touching it
};

// One full EM pass at a fixed resolution: per-sweep matching (usage counters
// frozen from the previous sweep) followed by the pixel-average E-step.
// Returns the final match state; appends one trace row per iteration.
MatchState run_em_level(const Raster& exemplar, Raster& output, const EmLevelParams& params,
                        std::vector<EnergyTraceRow>* trace);

// Single M+E iteration building on a previous state (empty state = first
// sweep). Exposed at this granularity for the energy tests.
MatchState em_iteration(const MatchState& prev, Raster& output, const Raster& exemplar,
                        const EmLevelParams& params, bool first_sweep);

// Coarse-to-fine synthesis of a region: the initial guess fixes the target
// size, the exemplar supplies the patches. Regions smaller than one patch
// skip synthesis and return the initial guess.
Raster synthesize_region(const Raster& exemplar, const Raster& initial,
                         const SynthesisConfig& cfg, std::vector<EnergyTraceRow>* trace = nullptr);

// True when texture covers strictly more than the threshold fraction; the
// pipeline then synthesizes the whole frame with the whole original as the
// exemplar.
bool decide_whole_image(const RegionPartition& partition, double threshold = 0.70);

} // namespace retex
