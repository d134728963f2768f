#include <doctest.h>

#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "retex/errors.hpp"
#include "retex/parallel.hpp"
#include "retex/synthesis.hpp"

using namespace retex;
using namespace retex::testing;

namespace {

Neighborhood nb_at(const Raster& r, int ax, int ay, int n) {
    return extract_neighborhood(r, ax, ay, n);
}

// 64x64 dot lattice with period 8 (dot centers at 8i+4).
Raster dot_texture(int w, int h, int period) {
    Raster img = constant_raster(w, h, 0.15f, 0.15f, 0.2f);
    for (int cy = period / 2; cy < h; cy += period)
        for (int cx = period / 2; cx < w; cx += period)
            for (int y = cy - 2; y <= cy + 2; ++y)
                for (int x = cx - 2; x <= cx + 2; ++x) {
                    if (x < 0 || x >= w || y < 0 || y >= h) continue;
                    if ((x - cx) * (x - cx) + (y - cy) * (y - cy) > 4) continue;
                    float* px = img.pixel(x, y);
                    px[0] = 0.9f;
                    px[1] = 0.85f;
                    px[2] = 0.3f;
                }
    return img;
}

// First local maximum (lag >= 2) of the horizontal autocorrelation of the
// luminance, mean removed.
int autocorr_peak_x(const Raster& r, int max_lag) {
    const ScalarField lum = to_luminance(r);
    double mean = 0;
    for (float v : lum.values) mean += v;
    mean /= lum.values.size();
    std::vector<double> ac(max_lag + 1, 0.0);
    for (int lag = 0; lag <= max_lag; ++lag) {
        double sum = 0;
        int n = 0;
        for (int y = 0; y < r.height; ++y)
            for (int x = 0; x + lag < r.width; ++x) {
                sum += (lum.at(x, y) - mean) * (lum.at(x + lag, y) - mean);
                ++n;
            }
        ac[lag] = sum / n;
    }
    int best = 2;
    for (int lag = 2; lag < max_lag; ++lag)
        if (ac[lag] > ac[best]) best = lag;
    return best;
}

} // namespace

TEST_CASE("neighborhood distance: identical blocks cost zero") {
    const Raster img = noise_raster(16, 16, 61);
    const Neighborhood a = nb_at(img, 4, 4, 8);
    const Neighborhood b = nb_at(img, 4, 4, 8);
    CHECK(neighborhood_distance(a, b, 0.65, 1.0) == 0.0);
}

TEST_CASE("neighborhood distance: 1x1 hand values with and without the penalty") {
    Raster black(1, 1, 0.0f);
    Raster white(1, 1);
    white.pixel(0, 0)[0] = white.pixel(0, 0)[1] = white.pixel(0, 0)[2] = 1.0f;
    const Neighborhood a = nb_at(black, 0, 0, 1);
    const Neighborhood b = nb_at(white, 0, 0, 1);
    // Same normalized coords (single-pixel frames map to 0.5), omega = 0.1.
    CHECK(neighborhood_distance(a, b, 0.1, 1.0) == doctest::Approx(3.0).epsilon(1e-12));
    // t_p = 1, beta = 10 -> mu = 11.
    const double mu = 1.0 + 10.0 * 1;
    CHECK(neighborhood_distance(a, b, 0.1, mu) == doctest::Approx(33.0).epsilon(1e-12));
}

TEST_CASE("neighborhood distance: size mismatch throws") {
    const Raster img = noise_raster(12, 12, 62);
    const Neighborhood a = nb_at(img, 0, 0, 8);
    const Neighborhood b = nb_at(img, 0, 0, 4);
    CHECK_THROWS_AS(neighborhood_distance(a, b, 0.1, 1.0), InvariantError);
}

TEST_CASE("best match: exact copy wins with zero cost") {
    const Raster exemplar = gradient_noise_raster(44, 8, 63, 0.2f);
    const PatchGrid grid = make_patch_grid(44, 8, 8, 4);
    REQUIRE(grid.count() == 10);
    std::vector<Neighborhood> patches(grid.count());
    for (int i = 0; i < grid.count(); ++i)
        patches[i] = nb_at(exemplar, grid.anchor_x(i), grid.anchor_y(i), 8);
    std::vector<int> domain(grid.count());
    for (int i = 0; i < grid.count(); ++i) domain[i] = i;
    const std::vector<int> usage(grid.count(), 0);

    const BestMatch m = best_match(patches[3], patches, domain, usage, 0.25, 10.0);
    CHECK(m.index == 3);
    CHECK(m.cost == 0.0);
    CHECK(m.used_t == 0);

    // Domain of one returns that index regardless of cost.
    const BestMatch one = best_match(patches[3], patches, {7}, usage, 0.25, 10.0);
    CHECK(one.index == 7);
    CHECK(one.cost > 0.0);
}

TEST_CASE("best match: equals the exhaustive neighborhood_distance scan") {
    const Raster exemplar = noise_raster(44, 8, 64);
    const Raster query_src = noise_raster(44, 8, 65);
    const PatchGrid grid = make_patch_grid(44, 8, 8, 4);
    std::vector<Neighborhood> patches(grid.count());
    for (int i = 0; i < grid.count(); ++i)
        patches[i] = nb_at(exemplar, grid.anchor_x(i), grid.anchor_y(i), 8);
    std::vector<int> domain(grid.count());
    for (int i = 0; i < grid.count(); ++i) domain[i] = i;
    std::vector<int> usage(grid.count(), 0);
    usage[2] = 1;
    usage[5] = 3;

    for (int q = 0; q < grid.count(); ++q) {
        const Neighborhood query = nb_at(query_src, grid.anchor_x(q), grid.anchor_y(q), 8);
        const BestMatch m = best_match(query, patches, domain, usage, 0.25, 10.0);
        int oracle_idx = -1;
        double oracle_cost = std::numeric_limits<double>::infinity();
        for (int i = 0; i < grid.count(); ++i) {
            const double mu = 1.0 + 10.0 * usage[i];
            const double d = neighborhood_distance(query, patches[i], 0.25, mu);
            if (d < oracle_cost) {
                oracle_cost = d;
                oracle_idx = i;
            }
        }
        CHECK(m.index == oracle_idx);
        CHECK(m.cost == oracle_cost);
    }
}

TEST_CASE("adaptive domain: full, windowed, and corner-clamped") {
    const PatchGrid grid = make_patch_grid(100, 100, 8, 4);
    const SearchDomain full = adaptive_domain(1, 48, 48, 100, 100, grid, 1.0, false);
    CHECK(full.count() == grid.count());
    const SearchDomain first = adaptive_domain(2, 48, 48, 100, 100, grid, 0.4, true);
    CHECK(first.count() == grid.count());
    const SearchDomain coarse = adaptive_domain(0, 48, 48, 100, 100, grid, 0.4, false);
    CHECK(coarse.count() == grid.count());

    // fraction 0.4 on 100x100 -> window side round(100*sqrt(0.4)) = 63.
    const SearchDomain mid = adaptive_domain(1, 48, 48, 100, 100, grid, 0.4, false);
    CHECK(mid.count() < grid.count());
    // Window [17, 80): anchors 20,24,...,76 plus nothing clamped -> 15 per axis.
    CHECK(mid.gx1 - mid.gx0 + 1 == 15);
    CHECK(mid.gy1 - mid.gy0 + 1 == 15);

    // Corner anchor: window clamps to [0, 63) but keeps its full size.
    const SearchDomain corner = adaptive_domain(1, 0, 0, 100, 100, grid, 0.4, false);
    CHECK(corner.gx0 == 0);
    CHECK(corner.gx1 - corner.gx0 + 1 == 16); // anchors 0..60
    // The window always contains the previous anchor.
    CHECK(grid.xs[corner.gx0] <= 0);
    CHECK(grid.xs[corner.gx1] >= 0);
}

TEST_CASE("em iteration: output == exemplar is an exact fixed point") {
    Raster exemplar = gradient_noise_raster(32, 24, 66, 0.2f);
    Raster output = exemplar;
    EmLevelParams p;
    p.omega = 0.25;
    p.iterations = 1;
    p.beta = 0.0;
    p.patch = 8;
    p.exemplar_stride = 4;
    p.output_stride = 4;
    const MatchState st = em_iteration(MatchState{}, output, exemplar, p, true);
    CHECK(st.energy == 0.0);
    CHECK(output.data == exemplar.data);
    const PatchGrid grid = make_patch_grid(32, 24, 8, 4);
    for (int i = 0; i < grid.count(); ++i) CHECK(st.match[i] == i);
    // Every exemplar patch used exactly once; counters sum to patch count.
    int total = 0;
    for (int t : st.usage) total += t;
    CHECK(total == grid.count());
}

TEST_CASE("em iteration: a single output patch copies its match verbatim") {
    const Raster exemplar = gradient_noise_raster(16, 16, 67, 0.3f);
    Raster output(8, 8);
    for (size_t i = 0; i < output.data.size(); ++i) output.data[i] = 0.5f;
    EmLevelParams p;
    p.omega = 0.0; // pure color matching for this check
    p.iterations = 1;
    p.beta = 0.0;
    const MatchState st = em_iteration(MatchState{}, output, exemplar, p, true);
    REQUIRE(st.match.size() == 1);
    const PatchGrid egrid = make_patch_grid(16, 16, 8, 4);
    const int ex = egrid.anchor_x(st.match[0]);
    const int ey = egrid.anchor_y(st.match[0]);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            for (int c = 0; c < 3; ++c)
                CHECK(output.pixel(x, y)[c] == exemplar.pixel(ex + x, ey + y)[c]);
}

TEST_CASE("em iterations: energy is non-increasing with beta 0 and full search") {
    for (uint32_t seed = 0; seed < 8; ++seed) {
        const Raster exemplar = noise_raster(32, 32, 7000 + seed);
        Raster output = noise_raster(24, 32, 8000 + seed);
        EmLevelParams p;
        p.omega = 0.1;
        p.beta = 0.0;
        p.iterations = 1;
        MatchState st;
        double prev = std::numeric_limits<double>::infinity();
        for (int it = 0; it < 4; ++it) {
            st = em_iteration(st, output, exemplar, p, it == 0);
            CHECK(st.energy <= prev * (1.0 + 1e-9) + 1e-12);
            prev = st.energy;
        }
    }
}

TEST_CASE("em iteration: usage counters feed the next sweep's penalty") {
    const Raster exemplar = noise_raster(24, 16, 71);
    Raster output = noise_raster(24, 16, 72);
    EmLevelParams p;
    p.omega = 0.1;
    p.beta = 10.0;
    MatchState st = em_iteration(MatchState{}, output, exemplar, p, true);
    // First sweep: every penalty is mu = 1 (fresh counters).
    for (size_t i = 0; i < st.used_t.size(); ++i) {
        CHECK(st.used_t[i] == 0);
        CHECK(st.cost[i] == st.base_cost[i]);
    }
    const std::vector<int> usage_after = st.usage;
    MatchState st2 = em_iteration(st, output, exemplar, p, false);
    for (size_t i = 0; i < st2.used_t.size(); ++i) {
        CHECK(st2.used_t[i] == usage_after[st2.match[i]]);
        CHECK(st2.cost[i] ==
              doctest::Approx(st2.base_cost[i] * (1.0 + 10.0 * st2.used_t[i])).epsilon(1e-12));
    }
}

TEST_CASE("em iteration selections equal the public best_match everywhere") {
    const Raster exemplar = noise_raster(32, 24, 70);
    Raster output = noise_raster(28, 24, 71);
    const PatchGrid egrid = make_patch_grid(32, 24, 8, 4);
    const PatchGrid ogrid = make_patch_grid(28, 24, 8, 4);
    std::vector<Neighborhood> epatches(egrid.count());
    for (int i = 0; i < egrid.count(); ++i)
        epatches[i] = nb_at(exemplar, egrid.anchor_x(i), egrid.anchor_y(i), 8);
    std::vector<int> full(egrid.count());
    for (int i = 0; i < egrid.count(); ++i) full[i] = i;

    EmLevelParams p;
    p.omega = 0.25;
    p.beta = 10.0;
    p.level_index = 1;
    p.domain_fraction = 0.4;
    const Raster before = output; // M-step scans the pre-E-step output
    const MatchState st = em_iteration(MatchState{}, output, exemplar, p, true);
    for (int oi = 0; oi < ogrid.count(); ++oi) {
        const Neighborhood onb = nb_at(before, ogrid.anchor_x(oi), ogrid.anchor_y(oi), 8);
        const BestMatch m = best_match(onb, epatches, full, {}, 0.25, 10.0);
        CHECK(m.index == st.match[oi]);
        CHECK(m.cost == st.cost[oi]);
    }

    // Second sweep: narrowed domains with live usage counters.
    const Raster mid = output;
    const MatchState st2 = em_iteration(st, output, exemplar, p, false);
    for (int oi = 0; oi < ogrid.count(); ++oi) {
        const SearchDomain dom =
            adaptive_domain(1, egrid.anchor_x(st.match[oi]), egrid.anchor_y(st.match[oi]), 32,
                            24, egrid, 0.4, false);
        std::vector<int> narrowed;
        for (int gy = dom.gy0; gy <= dom.gy1; ++gy)
            for (int gx = dom.gx0; gx <= dom.gx1; ++gx) narrowed.push_back(gy * egrid.nx() + gx);
        const Neighborhood onb = nb_at(mid, ogrid.anchor_x(oi), ogrid.anchor_y(oi), 8);
        const BestMatch m = best_match(onb, epatches, narrowed, st.usage, 0.25, 10.0);
        CHECK(m.index == st2.match[oi]);
        CHECK(m.cost == st2.cost[oi]);
        CHECK(m.used_t == st2.used_t[oi]);
    }
}

TEST_CASE("mu is monotone in the usage count") {
    const Raster img = noise_raster(16, 16, 73);
    const Neighborhood a = nb_at(img, 0, 0, 8);
    const Neighborhood b = nb_at(img, 8, 8, 8);
    double prev = -1.0;
    for (int t = 0; t <= 4; ++t) {
        const double mu = 1.0 + 10.0 * t;
        CHECK(mu >= 1.0);
        const double d = neighborhood_distance(a, b, 0.25, mu);
        CHECK(d > prev);
        prev = d;
    }
}

TEST_CASE("narrowed-domain match cost is never below the full-domain cost") {
    const Raster exemplar = noise_raster(64, 48, 74);
    const Raster query_src = noise_raster(64, 48, 75);
    const PatchGrid grid = make_patch_grid(64, 48, 8, 4);
    std::vector<Neighborhood> patches(grid.count());
    for (int i = 0; i < grid.count(); ++i)
        patches[i] = nb_at(exemplar, grid.anchor_x(i), grid.anchor_y(i), 8);
    std::vector<int> full(grid.count());
    for (int i = 0; i < grid.count(); ++i) full[i] = i;
    const std::vector<int> usage(grid.count(), 0);

    for (int q = 0; q < grid.count(); q += 7) {
        const Neighborhood query = nb_at(query_src, grid.anchor_x(q), grid.anchor_y(q), 8);
        const BestMatch fm = best_match(query, patches, full, usage, 0.25, 0.0);
        const SearchDomain dom = adaptive_domain(1, grid.anchor_x(q), grid.anchor_y(q), 64, 48,
                                                 grid, 0.2, false);
        std::vector<int> narrowed;
        for (int gy = dom.gy0; gy <= dom.gy1; ++gy)
            for (int gx = dom.gx0; gx <= dom.gx1; ++gx) narrowed.push_back(gy * grid.nx() + gx);
        const BestMatch nm = best_match(query, patches, narrowed, usage, 0.25, 0.0);
        CHECK(nm.cost >= fm.cost);
    }
}

TEST_CASE("e-step output stays within the exemplar value range") {
    const Raster exemplar = noise_raster(32, 24, 76, 0.3f, 0.7f);
    Raster output = noise_raster(24, 24, 77, 0.0f, 1.0f);
    EmLevelParams p;
    p.omega = 0.1;
    p.beta = 0.0;
    em_iteration(MatchState{}, output, exemplar, p, true);
    for (float v : output.data) {
        CHECK(v >= 0.3f - 1e-6f);
        CHECK(v <= 0.7f + 1e-6f);
    }
}

TEST_CASE("synthesize_region: identity inputs reproduce bit-exactly with zero energy") {
    for (int fixture = 0; fixture < 3; ++fixture) {
        const Raster img = fixture == 0   ? value_noise_raster(128, 128, 80, 4)
                           : fixture == 1 ? dot_texture(128, 128, 8)
                                          : gradient_noise_raster(128, 128, 81, 0.1f);
        SynthesisConfig cfg;
        cfg.em_iters_per_level = 6; // enough to re-settle after each upsample
        std::vector<EnergyTraceRow> trace;
        const Raster out = synthesize_region(img, img, cfg, &trace);
        REQUIRE(out.width == 128);
        REQUIRE(out.height == 128);
        CHECK(out.data == img.data);
        REQUIRE(!trace.empty());
        CHECK(trace.back().energy == 0.0);
    }
}

TEST_CASE("synthesize_region: degrades levels and skips sub-patch regions") {
    const Raster tiny = gradient_noise_raster(12, 12, 81, 0.2f);
    SynthesisConfig cfg;
    cfg.em_iters_per_level = 2;
    std::vector<EnergyTraceRow> trace;
    const Raster out = synthesize_region(tiny, tiny, cfg, &trace);
    CHECK(out.width == 12);
    // 12 px cannot halve under 4*patch: single level only.
    for (const auto& row : trace) CHECK(row.level == 0);

    const Raster sub = gradient_noise_raster(6, 6, 82, 0.2f);
    const Raster kept = synthesize_region(sub, sub, cfg, nullptr);
    CHECK(kept.data == sub.data); // region smaller than one patch
}

TEST_CASE("synthesize_region: dot texture keeps its texel spacing when halved") {
    const Raster exemplar = dot_texture(64, 64, 8);
    // Initial guess: the linearly squeezed exemplar (what a pure scale
    // would produce); synthesis must restore the texel scale.
    const Raster initial = resample_bilinear(exemplar, 32, 64);
    SynthesisConfig cfg;
    cfg.em_iters_per_level = 10;
    const Raster out = synthesize_region(exemplar, initial, cfg, nullptr);
    CHECK(autocorr_peak_x(exemplar, 16) == 8);
    const int peak = autocorr_peak_x(out, 16);
    CHECK(peak >= 7);
    CHECK(peak <= 9);
}

TEST_CASE("synthesis is deterministic for any thread count") {
    const Raster exemplar = noise_raster(48, 40, 83);
    const Raster initial = noise_raster(40, 40, 84);
    SynthesisConfig cfg;
    cfg.em_iters_per_level = 3;
    set_thread_cap(1);
    const Raster a = synthesize_region(exemplar, initial, cfg, nullptr);
    set_thread_cap(4);
    const Raster b = synthesize_region(exemplar, initial, cfg, nullptr);
    set_thread_cap(0);
    CHECK(a.data == b.data);
}

TEST_CASE("decide_whole_image: strict 70% rule") {
    RegionPartition part;
    part.labels = LabelMap(100, 100, 0);
    auto set_fraction = [&](int percent) {
        part.labels = LabelMap(100, 100, 0);
        for (int i = 0; i < percent * 100; ++i) part.labels.labels[i] = 1;
    };
    set_fraction(71);
    CHECK(decide_whole_image(part, 0.70));
    set_fraction(70);
    CHECK_FALSE(decide_whole_image(part, 0.70));
    set_fraction(69);
    CHECK_FALSE(decide_whole_image(part, 0.70));
    set_fraction(0);
    CHECK_FALSE(decide_whole_image(part, 0.70));
}

TEST_CASE("run_em_level: trace has one row per iteration at the right level") {
    const Raster exemplar = noise_raster(24, 24, 85);
    Raster output = noise_raster(24, 24, 86);
    EmLevelParams p;
    p.omega = 0.1;
    p.iterations = 5;
    p.level_index = 2;
    std::vector<EnergyTraceRow> trace;
    run_em_level(exemplar, output, p, &trace);
    REQUIRE(trace.size() == 5);
    for (int i = 0; i < 5; ++i) {
        CHECK(trace[i].level == 2);
        CHECK(trace[i].iteration == i);
    }
}
