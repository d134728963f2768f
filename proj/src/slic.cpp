#include "retex/slic.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "retex/errors.hpp"
#include "retex/parallel.hpp"

namespace retex {

namespace {

inline double srgb_to_linear(double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

inline double lab_f(double t) {
    constexpr double d = 6.0 / 29.0;
    return t > d * d * d ? std::cbrt(t) : t / (3.0 * d * d) + 4.0 / 29.0;
}

} // namespace

std::vector<float> to_cielab(const Raster& r) {
    std::vector<float> lab(r.pixel_count() * 3);
    parallel_for(0, r.height, [&](int y) {
        for (int x = 0; x < r.width; ++x) {
            const float* px = r.pixel(x, y);
            const double rl = srgb_to_linear(px[0]);
            const double gl = srgb_to_linear(px[1]);
            const double bl = srgb_to_linear(px[2]);
            const double X = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl;
            const double Y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl;
            const double Z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl;
            const double fx = lab_f(X / 0.95047);
            const double fy = lab_f(Y);
            const double fz = lab_f(Z / 1.08883);
            float* out = lab.data() + 3 * (static_cast<size_t>(y) * r.width + x);
            out[0] = static_cast<float>(116.0 * fy - 16.0);
            out[1] = static_cast<float>(500.0 * (fx - fy));
            out[2] = static_cast<float>(200.0 * (fy - fz));
        }
    });
    return lab;
}

namespace {

struct Cluster {
    double l = 0, a = 0, b = 0, x = 0, y = 0;
};

} // namespace

LabelMap slic_superpixels(const Raster& r, int k, double compactness, int iterations) {
    const int w = r.width;
    const int h = r.height;
    const size_t n = static_cast<size_t>(w) * h;
    require(k >= 1 && static_cast<size_t>(k) <= n, "slic: k out of range");

    const std::vector<float> lab = to_cielab(r);
    auto lab_at = [&](int x, int y) { return lab.data() + 3 * (static_cast<size_t>(y) * w + x); };

    // Grid seeding; nx*ny approximates k while covering the frame evenly.
    const double step = std::sqrt(static_cast<double>(n) / k);
    const int nx = std::max(1, static_cast<int>(std::lround(w / step)));
    const int ny = std::max(1, static_cast<int>(std::lround(h / step)));
    std::vector<Cluster> clusters;
    clusters.reserve(static_cast<size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            int cx = clamp_index(static_cast<int>((i + 0.5) * w / nx), 0, w - 1);
            int cy = clamp_index(static_cast<int>((j + 0.5) * h / ny), 0, h - 1);
            // Nudge the seed to the lowest-gradient spot in its 3x3 block.
            double best_grad = std::numeric_limits<double>::infinity();
            int bx = cx, by = cy;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    int px = clamp_index(cx + dx, 0, w - 1);
                    int py = clamp_index(cy + dy, 0, h - 1);
                    const float* c0 = lab_at(px, py);
                    const float* cr = lab_at(std::min(px + 1, w - 1), py);
                    const float* cd = lab_at(px, std::min(py + 1, h - 1));
                    double g = 0;
                    for (int c = 0; c < 3; ++c)
                        g += (cr[c] - c0[c]) * (cr[c] - c0[c]) + (cd[c] - c0[c]) * (cd[c] - c0[c]);
                    if (g < best_grad) {
                        best_grad = g;
                        bx = px;
                        by = py;
                    }
                }
            }
            const float* c = lab_at(bx, by);
            clusters.push_back({c[0], c[1], c[2], static_cast<double>(bx), static_cast<double>(by)});
        }
    }
    const int kc = static_cast<int>(clusters.size());
    const double spatial_w = (compactness * compactness) / (step * step);

    LabelMap labels(w, h, 0);
    std::vector<float> best_dist(n);

    // Bucket grid over cluster centers so each pixel only scans nearby ones.
    const int bs = std::max(1, static_cast<int>(step));
    const int bw = (w + bs - 1) / bs;
    const int bh = (h + bs - 1) / bs;

    for (int it = 0; it < iterations; ++it) {
        std::vector<std::vector<int>> buckets(static_cast<size_t>(bw) * bh);
        for (int c = 0; c < kc; ++c) {
            int bxi = clamp_index(static_cast<int>(clusters[c].x) / bs, 0, bw - 1);
            int byi = clamp_index(static_cast<int>(clusters[c].y) / bs, 0, bh - 1);
            buckets[static_cast<size_t>(byi) * bw + bxi].push_back(c);
        }
        std::fill(best_dist.begin(), best_dist.end(), std::numeric_limits<float>::infinity());
        parallel_for(0, h, [&](int y) {
            for (int x = 0; x < w; ++x) {
                const float* px = lab_at(x, y);
                const size_t idx = static_cast<size_t>(y) * w + x;
                const int bxi = x / bs;
                const int byi = y / bs;
                for (int by2 = std::max(0, byi - 2); by2 <= std::min(bh - 1, byi + 2); ++by2) {
                    for (int bx2 = std::max(0, bxi - 2); bx2 <= std::min(bw - 1, bxi + 2); ++bx2) {
                        for (int c : buckets[static_cast<size_t>(by2) * bw + bx2]) {
                            const Cluster& cl = clusters[c];
                            if (std::abs(cl.x - x) > 2 * step || std::abs(cl.y - y) > 2 * step)
                                continue;
                            const double dl = px[0] - cl.l;
                            const double da = px[1] - cl.a;
                            const double db = px[2] - cl.b;
                            const double dx = x - cl.x;
                            const double dy = y - cl.y;
                            const double d =
                                dl * dl + da * da + db * db + spatial_w * (dx * dx + dy * dy);
                            if (d < best_dist[idx]) {
                                best_dist[idx] = static_cast<float>(d);
                                labels.labels[idx] = c;
                            }
                        }
                    }
                }
            }
        });
        // Recenter. Serial accumulation keeps the result thread-independent.
        std::vector<Cluster> sums(kc);
        std::vector<int> counts(kc, 0);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const size_t idx = static_cast<size_t>(y) * w + x;
                if (!std::isfinite(best_dist[idx])) {
                    // Pixel outside every cluster window; adopt nearest seed by grid.
                    int gi = clamp_index(x * nx / w, 0, nx - 1);
                    int gj = clamp_index(y * ny / h, 0, ny - 1);
                    labels.labels[idx] = gj * nx + gi;
                }
                const int c = labels.labels[idx];
                const float* px = lab_at(x, y);
                sums[c].l += px[0];
                sums[c].a += px[1];
                sums[c].b += px[2];
                sums[c].x += x;
                sums[c].y += y;
                ++counts[c];
            }
        }
        for (int c = 0; c < kc; ++c) {
            if (counts[c] > 0) {
                clusters[c].l = sums[c].l / counts[c];
                clusters[c].a = sums[c].a / counts[c];
                clusters[c].b = sums[c].b / counts[c];
                clusters[c].x = sums[c].x / counts[c];
                clusters[c].y = sums[c].y / counts[c];
            }
        }
    }

    // Connectivity pass: relabel components row-major; fragments below a
    // quarter of the nominal segment area merge into an adjacent segment.
    const int min_size = std::max(1, static_cast<int>(n / static_cast<size_t>(kc) / 4));
    LabelMap out(w, h, -1);
    int next_label = 0;
    std::vector<int> component;
    component.reserve(n);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const size_t idx = static_cast<size_t>(y) * w + x;
            if (out.labels[idx] >= 0) continue;
            component.clear();
            const int cluster_id = labels.labels[idx];
            int adjacent = -1;
            if (x > 0) adjacent = out.labels[idx - 1];
            else if (y > 0) adjacent = out.labels[idx - w];
            out.labels[idx] = next_label;
            component.push_back(static_cast<int>(idx));
            for (size_t q = 0; q < component.size(); ++q) {
                const int ci = component[q];
                const int cx = ci % w;
                const int cy = ci / w;
                const int nbs[4][2] = {{cx - 1, cy}, {cx + 1, cy}, {cx, cy - 1}, {cx, cy + 1}};
                for (auto& nb : nbs) {
                    if (nb[0] < 0 || nb[0] >= w || nb[1] < 0 || nb[1] >= h) continue;
                    const size_t ni = static_cast<size_t>(nb[1]) * w + nb[0];
                    if (out.labels[ni] < 0 && labels.labels[ni] == cluster_id) {
                        out.labels[ni] = next_label;
                        component.push_back(static_cast<int>(ni));
                    }
                }
            }
            if (static_cast<int>(component.size()) < min_size && adjacent >= 0) {
                for (int ci : component) out.labels[ci] = adjacent;
            } else {
                ++next_label;
            }
        }
    }
    return out;
}

int label_count(const LabelMap& m) {
    int mx = -1;
    for (int v : m.labels) mx = std::max(mx, v);
    return mx + 1;
}

} // namespace retex
