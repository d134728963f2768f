#include <doctest.h>

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "retex/maxflow.hpp"
#include "retex/slic.hpp"
#include "retex/texture_detect.hpp"

using namespace retex;
using namespace retex::testing;

namespace {

// Direct-summation oracle for the windowed variations: no separability, no
// shared code with the implementation.
struct VariationOracle {
    std::vector<double> dx, dy, lx, ly;
};

VariationOracle variations_oracle(const ScalarField& lum, double sigma) {
    const int w = lum.width;
    const int h = lum.height;
    const int radius = static_cast<int>(std::ceil(2.0 * sigma));
    auto grad_x = [&](int x, int y) { return lum.at(std::min(x + 1, w - 1), y) - lum.at(x, y); };
    auto grad_y = [&](int x, int y) { return lum.at(x, std::min(y + 1, h - 1)) - lum.at(x, y); };
    VariationOracle o;
    o.dx.assign(static_cast<size_t>(w) * h, 0.0);
    o.dy = o.lx = o.ly = o.dx;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double sdx = 0, sdy = 0, slx = 0, sly = 0;
            for (int oy = -radius; oy <= radius; ++oy) {
                for (int ox = -radius; ox <= radius; ++ox) {
                    const double g = std::exp(-(ox * ox + oy * oy) / (2.0 * sigma * sigma));
                    const int rx = std::clamp(x + ox, 0, w - 1);
                    const int ry = std::clamp(y + oy, 0, h - 1);
                    sdx += g * std::fabs(grad_x(rx, ry));
                    sdy += g * std::fabs(grad_y(rx, ry));
                    slx += g * grad_x(rx, ry);
                    sly += g * grad_y(rx, ry);
                }
            }
            const size_t i = static_cast<size_t>(y) * w + x;
            o.dx[i] = sdx;
            o.dy[i] = sdy;
            o.lx[i] = std::fabs(slx);
            o.ly[i] = std::fabs(sly);
        }
    }
    return o;
}

ScalarField checkerboard_field(int w, int h) {
    ScalarField f(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) f.at(x, y) = ((x + y) & 1) ? 1.0f : 0.0f;
    return f;
}

} // namespace

TEST_CASE("windowed variations: constant field gives all-zero maps") {
    const VariationMaps m = windowed_variations(constant_field(16, 12, 0.7f), 3.0);
    for (size_t i = 0; i < m.dx.size(); ++i) {
        CHECK(m.dx.values[i] == 0.0f);
        CHECK(m.dy.values[i] == 0.0f);
        CHECK(m.lx.values[i] == 0.0f);
        CHECK(m.ly.values[i] == 0.0f);
    }
}

TEST_CASE("windowed variations: monotone ramp has Dx == Lx") {
    ScalarField ramp(20, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 20; ++x) ramp.at(x, y) = x / 19.0f;
    const VariationMaps m = windowed_variations(ramp, 3.0);
    for (size_t i = 0; i < m.dx.size(); ++i)
        CHECK(m.dx.values[i] == doctest::Approx(m.lx.values[i]).epsilon(1e-5));
}

TEST_CASE("windowed variations: checkerboard matches the direct oracle") {
    const ScalarField cb = checkerboard_field(8, 8);
    const VariationMaps m = windowed_variations(cb, 3.0);
    const VariationOracle o = variations_oracle(cb, 3.0);
    for (size_t i = 0; i < m.dx.size(); ++i) {
        CHECK(m.dx.values[i] == doctest::Approx(o.dx[i]).epsilon(1e-5));
        CHECK(m.dy.values[i] == doctest::Approx(o.dy[i]).epsilon(1e-5));
        CHECK(m.lx.values[i] == doctest::Approx(o.lx[i]).epsilon(1e-5));
        CHECK(m.ly.values[i] == doctest::Approx(o.ly[i]).epsilon(1e-5));
    }
}

TEST_CASE("windowed variations: |L| <= D pointwise on random fields") {
    for (uint32_t seed : {1u, 2u, 3u}) {
        const ScalarField f = noise_field(17, 13, seed);
        const VariationMaps m = windowed_variations(f, 2.0);
        for (size_t i = 0; i < m.dx.size(); ++i) {
            CHECK(m.lx.values[i] <= m.dx.values[i] + 1e-6f);
            CHECK(m.ly.values[i] <= m.dy.values[i] + 1e-6f);
        }
    }
}

TEST_CASE("reliability: zero maps give zero field") {
    VariationMaps m;
    m.dx = m.dy = m.lx = m.ly = constant_field(6, 4, 0.0f);
    const ScalarField r = texture_reliability(m);
    for (float v : r.values) CHECK(v == 0.0f);
}

TEST_CASE("reliability: ramp saturates near its algebraic value") {
    ScalarField ramp(24, 10);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 24; ++x) ramp.at(x, y) = x / 23.0f;
    const VariationMaps m = windowed_variations(ramp, 3.0);
    const ScalarField r = texture_reliability(m);
    // Interior: Dx == Lx >> eps and Dy == 0, so R ~ Dx/(Dx+eps) ~ 1.
    CHECK(r.at(12, 5) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("reliability: checkerboard matches the ratio definition and beats the ramp") {
    const ScalarField cb = checkerboard_field(8, 8);
    const VariationMaps m = windowed_variations(cb, 3.0);
    const ScalarField r = texture_reliability(m);
    const VariationOracle o = variations_oracle(cb, 3.0);
    constexpr double eps = 1e-5;
    for (size_t i = 0; i < r.size(); ++i) {
        const double expect = o.dx[i] / (o.lx[i] + eps) + o.dy[i] / (o.ly[i] + eps);
        CHECK(r.values[i] == doctest::Approx(expect).epsilon(1e-4));
    }
    CHECK(r.at(4, 4) > 2.0); // far beyond the ramp's ~1 per axis
    for (float v : r.values) CHECK(v >= 0.0f);
}

TEST_CASE("iterative threshold: half zeros half ones") {
    ScalarField f(4, 1);
    f.values = {0.0f, 0.0f, 1.0f, 1.0f};
    const ThresholdResult res = iterative_threshold(f, 1e-4);
    CHECK(res.threshold == doctest::Approx(0.5));
    CHECK(res.mask.values == std::vector<uint8_t>{0, 0, 1, 1});
    CHECK(res.iterations == 1); // converged at the first update
}

TEST_CASE("iterative threshold: {0,0,0,10} hand trace") {
    ScalarField f(4, 1);
    f.values = {0.0f, 0.0f, 0.0f, 10.0f};
    const ThresholdResult res = iterative_threshold(f, 1e-4);
    CHECK(res.threshold == doctest::Approx(5.0));
    REQUIRE(res.history.size() >= 2);
    CHECK(res.history[0] == doctest::Approx(2.5)); // initial mean
    CHECK(res.history[1] == doctest::Approx(5.0)); // alpha blend of class means
    CHECK(res.mask.values == std::vector<uint8_t>{0, 0, 0, 1});
}

TEST_CASE("iterative threshold: constant field declares no texture") {
    const ThresholdResult res = iterative_threshold(constant_field(5, 5, 3.25f), 1e-4);
    CHECK(res.degenerate);
    CHECK(res.threshold == doctest::Approx(3.25));
    for (uint8_t v : res.mask.values) CHECK(v == 0);
}

TEST_CASE("iterative threshold: converges within 64 iterations, blend honored") {
    for (uint32_t seed = 0; seed < 10; ++seed) {
        const ScalarField f = noise_field(40, 30, 900 + seed, 0.0f, 5.0f);
        const ThresholdResult res = iterative_threshold(f, 1e-4);
        CHECK(res.iterations <= 64);
        CHECK(res.threshold >= field_min(f));
        CHECK(res.threshold <= field_max(f));
        // Every update is the alpha=0.5 blend of the class means it induced.
        for (size_t k = 0; k + 1 < res.history.size(); ++k) {
            double sum_t = 0, sum_nt = 0;
            size_t n_t = 0, n_nt = 0;
            for (float v : f.values) {
                if (v >= res.history[k]) {
                    sum_t += v;
                    ++n_t;
                } else {
                    sum_nt += v;
                    ++n_nt;
                }
            }
            REQUIRE(n_t > 0);
            REQUIRE(n_nt > 0);
            const double expect = 0.5 * (sum_t / n_t) + 0.5 * (sum_nt / n_nt);
            CHECK(res.history[k + 1] == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("slic: constant image with k=4 gives four equal rectangles") {
    const Raster img = constant_raster(64, 64, 0.4f, 0.4f, 0.4f);
    const LabelMap seg = slic_superpixels(img, 4, 10.0);
    CHECK(label_count(seg) == 4);
    std::vector<int> areas(4, 0);
    for (int v : seg.labels) ++areas[v];
    for (int a : areas) CHECK(a == 64 * 64 / 4);
}

TEST_CASE("slic: four flat color quadrants are recovered exactly") {
    Raster img(64, 64);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            float* px = img.pixel(x, y);
            const int q = (x < 32 ? 0 : 1) + (y < 32 ? 0 : 2);
            px[0] = q == 0 ? 0.9f : (q == 1 ? 0.1f : 0.5f);
            px[1] = q == 2 ? 0.9f : 0.2f;
            px[2] = q == 3 ? 0.8f : 0.3f;
        }
    const LabelMap seg = slic_superpixels(img, 4, 10.0);
    REQUIRE(label_count(seg) == 4);
    // Each segment must coincide with its quadrant (IoU = 1).
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            const int expect = seg.at(x < 32 ? 0 : 63, y < 32 ? 0 : 63);
            CHECK(seg.at(x, y) == expect);
        }
}

TEST_CASE("slic: segment count lands near k on smooth content") {
    const Raster img = gradient_noise_raster(120, 90, 21, 0.03f);
    const int k = 40;
    const LabelMap seg = slic_superpixels(img, k, 10.0);
    const int n = label_count(seg);
    CHECK(n >= k / 2);
    CHECK(n <= 3 * k / 2);
}

TEST_CASE("slic: segments are 4-connected with compact labels on any image") {
    const Raster img = noise_raster(80, 60, 17);
    const int k = 48;
    const LabelMap seg = slic_superpixels(img, k, 10.0);
    const int n = label_count(seg);
    REQUIRE(n >= 1);
    std::set<int> seen(seg.labels.begin(), seg.labels.end());
    CHECK(static_cast<int>(seen.size()) == n);
    CHECK(*seen.begin() == 0);
    CHECK(*seen.rbegin() == n - 1);
    // 4-connectivity: one flood fill per label covers the whole label.
    std::vector<uint8_t> visited(seg.size(), 0);
    for (int label = 0; label < n; ++label) {
        int first = -1;
        for (size_t i = 0; i < seg.size(); ++i)
            if (seg.labels[i] == label) {
                first = static_cast<int>(i);
                break;
            }
        REQUIRE(first >= 0);
        std::vector<int> stack{first};
        visited[first] = 1;
        int count = 0;
        while (!stack.empty()) {
            const int p = stack.back();
            stack.pop_back();
            ++count;
            const int x = p % 80, y = p / 80;
            const int nbs[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
            for (auto& nb : nbs) {
                if (nb[0] < 0 || nb[0] >= 80 || nb[1] < 0 || nb[1] >= 60) continue;
                const int ni = nb[1] * 80 + nb[0];
                if (!visited[ni] && seg.labels[ni] == label) {
                    visited[ni] = 1;
                    stack.push_back(ni);
                }
            }
        }
        int total = 0;
        for (int v : seg.labels) total += v == label ? 1 : 0;
        CHECK(count == total);
    }
}

TEST_CASE("vote_superpixels: majority, tie, and idempotence") {
    LabelMap seg(5, 1, 0);
    Mask noisy(5, 1, 0);
    noisy.values = {1, 1, 1, 0, 0};
    Mask voted = vote_superpixels(noisy, seg);
    CHECK(voted.values == std::vector<uint8_t>{1, 1, 1, 1, 1});

    noisy.values = {0, 0, 0, 0, 0};
    voted = vote_superpixels(noisy, seg);
    CHECK(voted.count() == 0);

    // Exact half -> NT by the strict-majority rule.
    LabelMap seg4(4, 1, 0);
    Mask half(4, 1, 0);
    half.values = {1, 1, 0, 0};
    voted = vote_superpixels(half, seg4);
    CHECK(voted.count() == 0);

    LabelMap seg2(6, 1, 0);
    for (int x = 3; x < 6; ++x) seg2.at(x, 0) = 1;
    Mask mixed(6, 1, 0);
    mixed.values = {1, 1, 0, 0, 1, 1};
    const Mask once = vote_superpixels(mixed, seg2);
    const Mask twice = vote_superpixels(once, seg2);
    CHECK(once.values == twice.values);
}

TEST_CASE("binary mrf: 3x3 energies match exhaustive enumeration") {
    std::mt19937 gen = rng(333);
    std::uniform_real_distribution<double> unary(-2.0, 2.0);
    std::uniform_real_distribution<double> pair(0.0, 1.5);
    for (int trial = 0; trial < 100; ++trial) {
        BinaryMrf mrf(9);
        for (int p = 0; p < 9; ++p) mrf.set_data_cost(p, unary(gen), unary(gen));
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 3; ++x) {
                if (x + 1 < 3) mrf.add_pairwise(y * 3 + x, y * 3 + x + 1, pair(gen));
                if (y + 1 < 3) mrf.add_pairwise(y * 3 + x, (y + 1) * 3 + x, pair(gen));
            }
        const std::vector<uint8_t> labels = mrf.solve();
        const double got = mrf.energy(labels);
        double best = std::numeric_limits<double>::infinity();
        for (int bits = 0; bits < 512; ++bits) {
            std::vector<uint8_t> cand(9);
            for (int p = 0; p < 9; ++p) cand[p] = (bits >> p) & 1;
            best = std::min(best, mrf.energy(cand));
        }
        CHECK(got == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("graphcut_refine: zero pairwise weight returns the data argmax") {
    const Raster img = noise_raster(10, 8, 55);
    const ScalarField rel = noise_field(10, 8, 56, 0.0f, 4.0f);
    const double threshold = 1.0;
    GraphcutParams params;
    params.pairwise_weight = 0.0;
    const Mask voted(10, 8, 0);
    const Mask out = graphcut_refine(img, voted, rel, threshold, params);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 10; ++x) {
            const double p = std::clamp(rel.at(x, y) / (2.0 * threshold), 0.02, 0.98);
            const bool expect_tex = -std::log(p) < -std::log(1.0 - p);
            CHECK(static_cast<bool>(out.at(x, y)) == expect_tex);
        }
}

TEST_CASE("graphcut_refine: lone speckle is removed by a moderate pairwise weight") {
    // Flat color, uniform low reliability except one pixel. Keeping the
    // speckle would cut 4 edges of weight 8 (32) against a data delta of
    // -log(0.02) + log(0.98) ~ 3.9, so removal wins by hand comparison.
    const int w = 11, h = 11;
    const Raster img = constant_raster(w, h, 0.5f, 0.5f, 0.5f);
    ScalarField rel(w, h, 0.2f);
    rel.at(5, 5) = 10.0f;
    const Mask voted(w, h, 0);
    const Mask out = graphcut_refine(img, voted, rel, 1.0, GraphcutParams{});
    CHECK(out.count() == 0);
}

TEST_CASE("graphcut_refine: output energy never exceeds the input labeling energy") {
    for (uint32_t seed : {7u, 8u, 9u}) {
        const Raster img = noise_raster(16, 12, seed);
        const ScalarField rel = noise_field(16, 12, seed + 100, 0.0f, 3.0f);
        const double threshold = 0.8;
        LabelMap seg = slic_superpixels(img, 12, 10.0);
        Mask noisy(16, 12, 0);
        for (size_t i = 0; i < noisy.size(); ++i) noisy.values[i] = rel.values[i] > 1.5f;
        const Mask voted = vote_superpixels(noisy, seg);
        const Mask refined = graphcut_refine(img, voted, rel, threshold, GraphcutParams{});
        const BinaryMrf mrf = make_refine_energy(img, rel, threshold, GraphcutParams{});
        CHECK(mrf.energy(refined.values) <= mrf.energy(voted.values) + 1e-9);
    }
}

TEST_CASE("extract_regions: blobs, small blobs, empty masks") {
    Mask empty(10, 10, 0);
    CHECK(extract_regions(empty, 4).regions.empty());

    Mask two(20, 10, 0);
    for (int y = 1; y < 5; ++y)
        for (int x = 1; x < 5; ++x) two.at(x, y) = 1;
    for (int y = 5; y < 9; ++y)
        for (int x = 12; x < 18; ++x) two.at(x, y) = 1;
    const RegionPartition part = extract_regions(two, 4);
    REQUIRE(part.regions.size() == 2);
    CHECK(part.regions[0].id == 1);
    CHECK(part.regions[0].area == 16);
    CHECK(part.regions[1].area == 24);
    CHECK(part.regions[1].x0 == 12);
    CHECK(part.regions[1].y1 == 8);

    Mask small(10, 10, 0);
    small.at(3, 3) = small.at(3, 4) = 1;
    CHECK(extract_regions(small, 4).regions.empty());
}

TEST_CASE("detection is deterministic and nails the flat|noise composite") {
    const Raster img = flat_noise_composite(256, 256, 1234);
    const DetectResult a = detect_textures(img);
    const DetectResult b = detect_textures(img);
    CHECK(a.partition.labels == b.partition.labels);
    CHECK(a.threshold.threshold == b.threshold.threshold);
    CHECK(a.partition.regions.size() == 1);

    size_t inter = 0, uni = 0;
    for (int y = 0; y < 256; ++y)
        for (int x = 0; x < 256; ++x) {
            const bool truth = x >= 128;
            const bool got = a.partition.labels.at(x, y) > 0;
            inter += (truth && got) ? 1 : 0;
            uni += (truth || got) ? 1 : 0;
        }
    CHECK(static_cast<double>(inter) / uni >= 0.9);

    const DetectResult flat = detect_textures(constant_raster(64, 64, 0.5f, 0.5f, 0.5f));
    CHECK(flat.partition.regions.empty());
}
