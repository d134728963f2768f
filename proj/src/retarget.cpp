#include "retex/retarget.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "retex/errors.hpp"
#include "retex/parallel.hpp"

namespace retex {

using nlohmann::json;

int OperationLog::count(OpEntry::Type t) const {
    int c = 0;
    for (const OpEntry& e : entries) c += e.type == t ? 1 : 0;
    return c;
}

std::string OperationLog::to_json() const {
    json j;
    j["source"] = {source_w, source_h};
    j["target"] = {target_w, target_h};
    json ops = json::array();
    for (const OpEntry& e : entries) {
        json o;
        switch (e.type) {
            case OpEntry::Type::kRemoveSeam:
            case OpEntry::Type::kInsertSeam:
                o["type"] = e.type == OpEntry::Type::kRemoveSeam ? "seam" : "insert_seam";
                o["axis"] = e.seam.axis == SeamAxis::kVertical ? "vertical" : "horizontal";
                o["path"] = e.seam.path;
                break;
            case OpEntry::Type::kScale:
                o["type"] = "scale";
                o["to"] = {e.to_w, e.to_h};
                break;
            case OpEntry::Type::kCrop:
                o["type"] = "crop";
                o["window"] = {e.window.x, e.window.y, e.window.w, e.window.h};
                break;
        }
        ops.push_back(std::move(o));
    }
    j["ops"] = std::move(ops);
    return j.dump(2);
}

OperationLog OperationLog::from_json(const std::string& text) {
    json j = json::parse(text);
    OperationLog log;
    log.source_w = j.at("source").at(0).get<int>();
    log.source_h = j.at("source").at(1).get<int>();
    log.target_w = j.at("target").at(0).get<int>();
    log.target_h = j.at("target").at(1).get<int>();
    for (const json& o : j.at("ops")) {
        OpEntry e;
        const std::string type = o.at("type").get<std::string>();
        if (type == "seam" || type == "insert_seam") {
            e.type = type == "seam" ? OpEntry::Type::kRemoveSeam : OpEntry::Type::kInsertSeam;
            e.seam.axis = o.at("axis").get<std::string>() == "vertical" ? SeamAxis::kVertical
                                                                        : SeamAxis::kHorizontal;
            e.seam.path = o.at("path").get<std::vector<int>>();
        } else if (type == "scale") {
            e.type = OpEntry::Type::kScale;
            e.to_w = o.at("to").at(0).get<int>();
            e.to_h = o.at("to").at(1).get<int>();
        } else if (type == "crop") {
            e.type = OpEntry::Type::kCrop;
            e.window = {o.at("window").at(0).get<int>(), o.at("window").at(1).get<int>(),
                        o.at("window").at(2).get<int>(), o.at("window").at(3).get<int>()};
        } else {
            throw ConfigError("operation log: unknown op type '" + type + "'");
        }
        log.entries.push_back(std::move(e));
    }
    return log;
}

// ---------------------------------------------------------------- smoothing

namespace {

ScalarField transpose(const ScalarField& f) {
    ScalarField out(f.height, f.width);
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) out.at(y, x) = f.at(x, y);
    return out;
}

Raster transpose(const Raster& r) {
    Raster out(r.height, r.width);
    for (int y = 0; y < r.height; ++y)
        for (int x = 0; x < r.width; ++x) {
            const float* s = r.pixel(x, y);
            float* d = out.pixel(y, x);
            d[0] = s[0];
            d[1] = s[1];
            d[2] = s[2];
        }
    return out;
}

LabelMap transpose(const LabelMap& m) {
    LabelMap out(m.height, m.width);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) out.at(y, x) = m.at(x, y);
    return out;
}

// Matrix-free application of (I + lambda * div(w grad)) for the smoothing
// solve. wx(x,y) weights the edge (x,y)-(x+1,y); wy the edge (x,y)-(x,y+1).
void apply_smooth_operator(const std::vector<double>& u, std::vector<double>& out, int w, int h,
                           const std::vector<double>& wx, const std::vector<double>& wy,
                           double lambda) {
    parallel_for(0, h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            const size_t i = static_cast<size_t>(y) * w + x;
            double acc = u[i];
            if (x + 1 < w) acc += lambda * wx[i] * (u[i] - u[i + 1]);
            if (x > 0) acc += lambda * wx[i - 1] * (u[i] - u[i - 1]);
            if (y + 1 < h) acc += lambda * wy[i] * (u[i] - u[i + w]);
            if (y > 0) acc += lambda * wy[i - w] * (u[i] - u[i - w]);
            out[i] = acc;
        }
    });
}

// Conjugate gradient with serial dot products (bit-reproducible for any
// thread count). Starts from x0 = b, which makes constant images exact
// fixed points.
void solve_cg(std::vector<double>& x, const std::vector<double>& b, int w, int h,
              const std::vector<double>& wx, const std::vector<double>& wy, double lambda,
              int max_iters, double tol) {
    const size_t n = b.size();
    std::vector<double> r(n), p(n), ap(n);
    apply_smooth_operator(x, ap, w, h, wx, wy, lambda);
    double rr = 0.0;
    for (size_t i = 0; i < n; ++i) {
        r[i] = b[i] - ap[i];
        p[i] = r[i];
        rr += r[i] * r[i];
    }
    double bb = 0.0;
    for (size_t i = 0; i < n; ++i) bb += b[i] * b[i];
    const double stop = tol * tol * std::max(bb, 1e-30);
    for (int it = 0; it < max_iters && rr > stop; ++it) {
        apply_smooth_operator(p, ap, w, h, wx, wy, lambda);
        double pap = 0.0;
        for (size_t i = 0; i < n; ++i) pap += p[i] * ap[i];
        if (pap <= 0.0) break;
        const double alpha = rr / pap;
        double rr_new = 0.0;
        for (size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
            rr_new += r[i] * r[i];
        }
        const double beta = rr_new / rr;
        rr = rr_new;
        for (size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    }
}

} // namespace

Raster structure_smooth(const Raster& r, double sigma, int iterations, double lambda) {
    constexpr double kEpsL = 1e-3;  // inherent-variation floor
    constexpr double kEpsG = 1e-3;  // gradient floor in the reweighting
    const int w = r.width;
    const int h = r.height;
    const size_t n = r.pixel_count();

    Raster current = r;
    std::vector<std::vector<double>> channels(3, std::vector<double>(n));
    for (int it = 0; it < iterations; ++it) {
        const ScalarField lum = to_luminance(current);
        const VariationMaps maps = windowed_variations(lum, sigma);
        // Windowed reciprocal of the inherent variation spreads the "keep
        // this edge" signal over the same Gaussian support.
        ScalarField inv_lx(w, h), inv_ly(w, h);
        for (size_t i = 0; i < n; ++i) {
            inv_lx.values[i] = static_cast<float>(1.0 / (maps.lx.values[i] + kEpsL));
            inv_ly.values[i] = static_cast<float>(1.0 / (maps.ly.values[i] + kEpsL));
        }
        const ScalarField wx_win = gaussian_window_sum(inv_lx, sigma);
        const ScalarField wy_win = gaussian_window_sum(inv_ly, sigma);
        std::vector<double> wx(n, 0.0), wy(n, 0.0);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const size_t i = static_cast<size_t>(y) * w + x;
                const double gx =
                    std::fabs(lum.at(std::min(x + 1, w - 1), y) - lum.at(x, y));
                const double gy =
                    std::fabs(lum.at(x, std::min(y + 1, h - 1)) - lum.at(x, y));
                wx[i] = wx_win.values[i] / (gx + kEpsG);
                wy[i] = wy_win.values[i] / (gy + kEpsG);
            }
        }
        for (int c = 0; c < 3; ++c) {
            std::vector<double>& u = channels[c];
            std::vector<double> b(n);
            for (size_t i = 0; i < n; ++i) {
                b[i] = r.data[3 * i + c];         // anchor to the original
                u[i] = current.data[3 * i + c];   // warm start from current
            }
            solve_cg(u, b, w, h, wx, wy, lambda, 200, 1e-8);
        }
        for (size_t i = 0; i < n; ++i)
            for (int c = 0; c < 3; ++c)
                current.data[3 * i + c] =
                    std::clamp(static_cast<float>(channels[c][i]), 0.0f, 1.0f);
    }
    return current;
}

// ------------------------------------------------------------------- seams

namespace {

Seam min_vertical_seam(const ScalarField& sig) {
    const int w = sig.width;
    const int h = sig.height;
    require(w >= 2, "min_seam: dimension along the seam must be >= 2");
    std::vector<double> dp(static_cast<size_t>(w) * h);
    for (int x = 0; x < w; ++x) dp[x] = sig.at(x, 0);
    for (int y = 1; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double best = std::numeric_limits<double>::infinity();
            for (int dx = -1; dx <= 1; ++dx) {
                const int px = x + dx;
                if (px < 0 || px >= w) continue;
                const double v = dp[static_cast<size_t>(y - 1) * w + px];
                if (v < best) best = v;
            }
            dp[static_cast<size_t>(y) * w + x] = best + sig.at(x, y);
        }
    }
    Seam seam;
    seam.axis = SeamAxis::kVertical;
    seam.path.resize(h);
    int cx = 0;
    double best = dp[static_cast<size_t>(h - 1) * w];
    for (int x = 1; x < w; ++x) {
        const double v = dp[static_cast<size_t>(h - 1) * w + x];
        if (v < best) { // strict: ties keep the smaller column
            best = v;
            cx = x;
        }
    }
    seam.cost = best;
    seam.path[h - 1] = cx;
    for (int y = h - 1; y > 0; --y) {
        int px_best = -1;
        double v_best = std::numeric_limits<double>::infinity();
        for (int dx = -1; dx <= 1; ++dx) {
            const int px = cx + dx;
            if (px < 0 || px >= w) continue;
            const double v = dp[static_cast<size_t>(y - 1) * w + px];
            if (v < v_best) { // iteration order -1,0,+1 keeps the smaller column on ties
                v_best = v;
                px_best = px;
            }
        }
        cx = px_best;
        seam.path[y - 1] = cx;
    }
    return seam;
}

} // namespace

Seam min_seam(const ScalarField& sig, SeamAxis axis) {
    if (axis == SeamAxis::kVertical) return min_vertical_seam(sig);
    Seam s = min_vertical_seam(transpose(sig));
    s.axis = SeamAxis::kHorizontal;
    return s;
}

namespace {

template <typename T>
void validate_seam(const T& img, const Seam& s) {
    const int along = s.axis == SeamAxis::kVertical ? img.height : img.width;
    const int across = s.axis == SeamAxis::kVertical ? img.width : img.height;
    require(static_cast<int>(s.path.size()) == along, "seam: path length mismatch");
    for (int v : s.path) require(v >= 0 && v < across, "seam: path index out of range");
}

} // namespace

Raster remove_seam(const Raster& r, const Seam& s) {
    validate_seam(r, s);
    if (s.axis == SeamAxis::kHorizontal) {
        Seam t = s;
        t.axis = SeamAxis::kVertical;
        return transpose(remove_seam(transpose(r), t));
    }
    require(r.width >= 2, "remove_seam: width must be >= 2");
    Raster out(r.width - 1, r.height);
    for (int y = 0; y < r.height; ++y) {
        const int cut = s.path[y];
        float* dst = out.pixel(0, y);
        const float* src = r.pixel(0, y);
        std::copy(src, src + 3 * cut, dst);
        std::copy(src + 3 * (cut + 1), src + 3 * r.width, dst + 3 * cut);
    }
    return out;
}

ScalarField remove_seam(const ScalarField& f, const Seam& s) {
    validate_seam(f, s);
    if (s.axis == SeamAxis::kHorizontal) {
        Seam t = s;
        t.axis = SeamAxis::kVertical;
        return transpose(remove_seam(transpose(f), t));
    }
    require(f.width >= 2, "remove_seam: width must be >= 2");
    ScalarField out(f.width - 1, f.height);
    for (int y = 0; y < f.height; ++y) {
        const int cut = s.path[y];
        for (int x = 0; x < cut; ++x) out.at(x, y) = f.at(x, y);
        for (int x = cut + 1; x < f.width; ++x) out.at(x - 1, y) = f.at(x, y);
    }
    return out;
}

LabelMap remove_seam(const LabelMap& m, const Seam& s) {
    validate_seam(m, s);
    if (s.axis == SeamAxis::kHorizontal) {
        Seam t = s;
        t.axis = SeamAxis::kVertical;
        return transpose(remove_seam(transpose(m), t));
    }
    require(m.width >= 2, "remove_seam: width must be >= 2");
    LabelMap out(m.width - 1, m.height);
    for (int y = 0; y < m.height; ++y) {
        const int cut = s.path[y];
        for (int x = 0; x < cut; ++x) out.at(x, y) = m.at(x, y);
        for (int x = cut + 1; x < m.width; ++x) out.at(x - 1, y) = m.at(x, y);
    }
    return out;
}

Raster insert_seam(const Raster& r, const Seam& s) {
    validate_seam(r, s);
    if (s.axis == SeamAxis::kHorizontal) {
        Seam t = s;
        t.axis = SeamAxis::kVertical;
        return transpose(insert_seam(transpose(r), t));
    }
    Raster out(r.width + 1, r.height);
    for (int y = 0; y < r.height; ++y) {
        const int cut = s.path[y];
        const float* src = r.pixel(0, y);
        float* dst = out.pixel(0, y);
        std::copy(src, src + 3 * (cut + 1), dst);
        const float* a = r.pixel(cut, y);
        const float* b = r.pixel(std::min(cut + 1, r.width - 1), y);
        float* ins = out.pixel(cut + 1, y);
        for (int c = 0; c < 3; ++c) ins[c] = 0.5f * (a[c] + b[c]);
        std::copy(src + 3 * (cut + 1), src + 3 * r.width, dst + 3 * (cut + 2));
    }
    return out;
}

ScalarField insert_seam(const ScalarField& f, const Seam& s) {
    validate_seam(f, s);
    if (s.axis == SeamAxis::kHorizontal) {
        Seam t = s;
        t.axis = SeamAxis::kVertical;
        return transpose(insert_seam(transpose(f), t));
    }
    ScalarField out(f.width + 1, f.height);
    for (int y = 0; y < f.height; ++y) {
        const int cut = s.path[y];
        for (int x = 0; x <= cut; ++x) out.at(x, y) = f.at(x, y);
        out.at(cut + 1, y) =
            0.5f * (f.at(cut, y) + f.at(std::min(cut + 1, f.width - 1), y));
        for (int x = cut + 1; x < f.width; ++x) out.at(x + 1, y) = f.at(x, y);
    }
    return out;
}

LabelMap insert_seam(const LabelMap& m, const Seam& s) {
    validate_seam(m, s);
    if (s.axis == SeamAxis::kHorizontal) {
        Seam t = s;
        t.axis = SeamAxis::kVertical;
        return transpose(insert_seam(transpose(m), t));
    }
    LabelMap out(m.width + 1, m.height);
    for (int y = 0; y < m.height; ++y) {
        const int cut = s.path[y];
        for (int x = 0; x <= cut; ++x) out.at(x, y) = m.at(x, y);
        out.at(cut + 1, y) = m.at(cut, y);
        for (int x = cut + 1; x < m.width; ++x) out.at(x + 1, y) = m.at(x, y);
    }
    return out;
}

// -------------------------------------------------------------------- crop

CropWindow crop_window(const ScalarField& sig, int target_w, int target_h) {
    require(target_w >= 1 && target_h >= 1, "crop_window: empty target");
    require(target_w <= sig.width && target_h <= sig.height,
            "crop_window: target larger than source");
    const int w = sig.width;
    const int h = sig.height;
    // Integral image with a zero top row / left column.
    std::vector<double> integral(static_cast<size_t>(w + 1) * (h + 1), 0.0);
    for (int y = 0; y < h; ++y) {
        double row = 0.0;
        for (int x = 0; x < w; ++x) {
            row += sig.at(x, y);
            integral[static_cast<size_t>(y + 1) * (w + 1) + (x + 1)] =
                integral[static_cast<size_t>(y) * (w + 1) + (x + 1)] + row;
        }
    }
    auto window_sum = [&](int x, int y) {
        const size_t stride = w + 1;
        return integral[(y + target_h) * stride + (x + target_w)] -
               integral[y * stride + (x + target_w)] -
               integral[(y + target_h) * stride + x] + integral[y * stride + x];
    };
    CropWindow best{0, 0, target_w, target_h};
    double best_sum = window_sum(0, 0);
    for (int y = 0; y + target_h <= h; ++y) {
        for (int x = 0; x + target_w <= w; ++x) {
            const double s = window_sum(x, y);
            if (s > best_sum) { // strict: ties keep the smallest (y, x)
                best_sum = s;
                best = {x, y, target_w, target_h};
            }
        }
    }
    return best;
}

Raster crop(const Raster& r, const CropWindow& w) {
    require(w.x >= 0 && w.y >= 0 && w.x + w.w <= r.width && w.y + w.h <= r.height && w.w >= 1 &&
                w.h >= 1,
            "crop: window out of bounds");
    Raster out(w.w, w.h);
    for (int y = 0; y < w.h; ++y) {
        const float* src = r.pixel(w.x, w.y + y);
        std::copy(src, src + 3 * w.w, out.pixel(0, y));
    }
    return out;
}

ScalarField crop(const ScalarField& f, const CropWindow& w) {
    require(w.x >= 0 && w.y >= 0 && w.x + w.w <= f.width && w.y + w.h <= f.height && w.w >= 1 &&
                w.h >= 1,
            "crop: window out of bounds");
    ScalarField out(w.w, w.h);
    for (int y = 0; y < w.h; ++y)
        for (int x = 0; x < w.w; ++x) out.at(x, y) = f.at(w.x + x, w.y + y);
    return out;
}

LabelMap crop(const LabelMap& m, const CropWindow& w) {
    require(w.x >= 0 && w.y >= 0 && w.x + w.w <= m.width && w.y + w.h <= m.height && w.w >= 1 &&
                w.h >= 1,
            "crop: window out of bounds");
    LabelMap out(w.w, w.h);
    for (int y = 0; y < w.h; ++y)
        for (int x = 0; x < w.w; ++x) out.at(x, y) = m.at(w.x + x, w.y + y);
    return out;
}

// ----------------------------------------------------------------- planner

namespace {

struct PlannerState {
    Raster image;
    ScalarField sig;
};

std::vector<int> patch_anchors(int length, int patch, int stride) {
    std::vector<int> anchors;
    if (length < patch) return anchors;
    for (int a = 0; a + patch <= length; a += stride) anchors.push_back(a);
    if (anchors.back() != length - patch) anchors.push_back(length - patch);
    return anchors;
}

double patch_ssd(const Raster& a, int ax, int ay, const Raster& b, int bx, int by, int patch,
                 double early_out) {
    double sum = 0.0;
    for (int y = 0; y < patch; ++y) {
        const float* pa = a.pixel(ax, ay + y);
        const float* pb = b.pixel(bx, by + y);
        for (int i = 0; i < 3 * patch; ++i) {
            const double d = pa[i] - pb[i];
            sum += d * d;
        }
        if (sum >= early_out) return sum;
    }
    return sum;
}

} // namespace

namespace {

// Significance-weighted mean over `from` patches of the negative distance to
// the best-matching `to` patch near the geometric correspondence.
double directed_similarity(const Raster& from, const ScalarField& from_sig, const Raster& to,
                           const MultiOpParams& params, int from_stride) {
    const int patch = params.patch;
    const std::vector<int> ax = patch_anchors(from.width, patch, from_stride);
    const std::vector<int> ay = patch_anchors(from.height, patch, from_stride);
    if (ax.empty() || ay.empty()) return 0.0;

    const int npatches = static_cast<int>(ax.size() * ay.size());
    std::vector<double> neg_dist(npatches, 0.0), weight(npatches, 0.0);
    const double sx_scale =
        from.width > patch ? static_cast<double>(to.width - patch) / (from.width - patch) : 0.0;
    const double sy_scale =
        from.height > patch ? static_cast<double>(to.height - patch) / (from.height - patch)
                            : 0.0;

    parallel_for(0, npatches, [&](int pi) {
        const int cx = ax[pi % ax.size()];
        const int cy = ay[pi / ax.size()];
        // Geometric correspondence, then every offset in a local window.
        const int base_x = clamp_index(static_cast<int>(std::lround(cx * sx_scale)), 0,
                                       to.width - patch);
        const int base_y = clamp_index(static_cast<int>(std::lround(cy * sy_scale)), 0,
                                       to.height - patch);
        double best = std::numeric_limits<double>::infinity();
        for (int dy = -params.search_radius; dy <= params.search_radius;
             dy += params.search_step) {
            const int sy = base_y + dy;
            if (sy < 0 || sy > to.height - patch) continue;
            for (int dx = -params.search_radius; dx <= params.search_radius;
                 dx += params.search_step) {
                const int sx = base_x + dx;
                if (sx < 0 || sx > to.width - patch) continue;
                const double d = patch_ssd(from, cx, cy, to, sx, sy, patch, best);
                if (d < best) best = d;
            }
        }
        double wsum = 0.0;
        for (int y = 0; y < patch; ++y)
            for (int x = 0; x < patch; ++x) wsum += from_sig.at(cx + x, cy + y);
        neg_dist[pi] = -best;
        weight[pi] = wsum / (patch * patch);
    });

    double num = 0.0, den = 0.0;
    for (int i = 0; i < npatches; ++i) {
        num += weight[i] * neg_dist[i];
        den += weight[i];
    }
    if (den > 0.0) return num / den;
    double mean = 0.0;
    for (int i = 0; i < npatches; ++i) mean += neg_dist[i];
    return mean / npatches;
}

} // namespace

double patch_similarity_score(const Raster& candidate, const ScalarField& candidate_sig,
                              const Raster& source, const ScalarField& source_sig,
                              const MultiOpParams& params) {
    const double distortion =
        directed_similarity(candidate, candidate_sig, source, params, params.stride);
    // The completeness direction samples source patches at twice the stride:
    // it measures retained significance mass, not fine alignment.
    const double completeness =
        directed_similarity(source, source_sig, candidate, params, params.stride * 2);
    return 0.5 * (distortion + completeness);
}

namespace {

// Applies one batch of b pixels of reduction (or insertion) along the axis,
// choosing among the three operators by similarity score.
void plan_axis_batch(PlannerState& st, OperationLog& log, SeamAxis axis, int delta, int b,
                     const MultiOpParams& params) {
    const bool reduce = delta > 0;
    struct Candidate {
        PlannerState state;
        std::vector<OpEntry> entries;
        double score = -std::numeric_limits<double>::infinity();
        bool valid = false;
    };
    Candidate cands[3]; // seam, scale, crop (tie preference in this order)

    // Seam candidate.
    {
        Candidate& c = cands[0];
        c.state = st;
        c.valid = true;
        for (int i = 0; i < b; ++i) {
            const int along = axis == SeamAxis::kVertical ? c.state.image.width
                                                          : c.state.image.height;
            if (along < 2) {
                c.valid = false;
                break;
            }
            Seam s = min_seam(c.state.sig, axis);
            OpEntry e;
            if (reduce) {
                e.type = OpEntry::Type::kRemoveSeam;
                e.seam = s;
                c.state.image = remove_seam(c.state.image, s);
                c.state.sig = remove_seam(c.state.sig, s);
            } else {
                e.type = OpEntry::Type::kInsertSeam;
                e.seam = s;
                c.state.image = insert_seam(c.state.image, s);
                c.state.sig = insert_seam(c.state.sig, s);
            }
            c.entries.push_back(std::move(e));
        }
    }
    // Scale candidate.
    {
        Candidate& c = cands[1];
        const int nw = axis == SeamAxis::kVertical ? st.image.width + (reduce ? -b : b)
                                                   : st.image.width;
        const int nh = axis == SeamAxis::kHorizontal ? st.image.height + (reduce ? -b : b)
                                                     : st.image.height;
        if (nw >= 1 && nh >= 1) {
            c.valid = true;
            c.state.image = resample_bilinear(st.image, nw, nh);
            c.state.sig = resample_bilinear(st.sig, nw, nh);
            OpEntry e;
            e.type = OpEntry::Type::kScale;
            e.to_w = nw;
            e.to_h = nh;
            c.entries.push_back(std::move(e));
        }
    }
    // Crop candidate (reduction only).
    if (reduce) {
        Candidate& c = cands[2];
        const int nw = axis == SeamAxis::kVertical ? st.image.width - b : st.image.width;
        const int nh = axis == SeamAxis::kHorizontal ? st.image.height - b : st.image.height;
        if (nw >= 1 && nh >= 1) {
            c.valid = true;
            const CropWindow win = crop_window(st.sig, nw, nh);
            c.state.image = crop(st.image, win);
            c.state.sig = crop(st.sig, win);
            OpEntry e;
            e.type = OpEntry::Type::kCrop;
            e.window = win;
            c.entries.push_back(std::move(e));
        }
    }

    int best = -1;
    for (int i = 0; i < 3; ++i) {
        if (!cands[i].valid) continue;
        cands[i].score = patch_similarity_score(cands[i].state.image, cands[i].state.sig,
                                                st.image, st.sig, params);
        if (best < 0 || cands[i].score > cands[best].score) best = i; // strict: ties keep seam
    }
    require(best >= 0, "plan_multiop: no applicable operator for this batch");
    for (OpEntry& e : cands[best].entries) log.entries.push_back(std::move(e));
    st = std::move(cands[best].state);
}

void plan_axis(PlannerState& st, OperationLog& log, SeamAxis axis, int target,
               const MultiOpParams& params) {
    while (true) {
        const int cur = axis == SeamAxis::kVertical ? st.image.width : st.image.height;
        if (cur == target) return;
        const int delta = cur - target;
        const int b = std::min(params.batch, std::abs(delta));
        plan_axis_batch(st, log, axis, delta, b, params);
    }
}

} // namespace

OperationLog plan_multiop(const Raster& smoothed, const ScalarField& significance, int target_w,
                          int target_h, const MultiOpParams& params) {
    require(smoothed.width == significance.width && smoothed.height == significance.height,
            "plan_multiop: significance dimensions differ");
    if (target_w < 16 || target_h < 16)
        throw ConfigError("plan_multiop: target must be at least 16x16");

    OperationLog log;
    log.source_w = smoothed.width;
    log.source_h = smoothed.height;
    log.target_w = target_w;
    log.target_h = target_h;
    if (target_w == smoothed.width && target_h == smoothed.height) return log;

    PlannerState st{smoothed, significance};
    const double rel_w = std::fabs(target_w - smoothed.width) / static_cast<double>(smoothed.width);
    const double rel_h =
        std::fabs(target_h - smoothed.height) / static_cast<double>(smoothed.height);
    // Larger relative change first; width on ties.
    if (rel_w >= rel_h) {
        plan_axis(st, log, SeamAxis::kVertical, target_w, params);
        plan_axis(st, log, SeamAxis::kHorizontal, target_h, params);
    } else {
        plan_axis(st, log, SeamAxis::kHorizontal, target_h, params);
        plan_axis(st, log, SeamAxis::kVertical, target_w, params);
    }
    require(st.image.width == target_w && st.image.height == target_h,
            "plan_multiop: plan did not reach the target size");
    return log;
}

Raster replay_log(const Raster& original, const OperationLog& log) {
    require(original.width == log.source_w && original.height == log.source_h,
            "replay_log: image dimensions do not match the log source");
    Raster cur = original;
    for (const OpEntry& e : log.entries) {
        switch (e.type) {
            case OpEntry::Type::kRemoveSeam: cur = remove_seam(cur, e.seam); break;
            case OpEntry::Type::kInsertSeam: cur = insert_seam(cur, e.seam); break;
            case OpEntry::Type::kScale: cur = resample_bilinear(cur, e.to_w, e.to_h); break;
            case OpEntry::Type::kCrop: cur = crop(cur, e.window); break;
        }
    }
    require(cur.width == log.target_w && cur.height == log.target_h,
            "replay_log: replay did not reach the target size");
    return cur;
}

RegionPartition map_partition(const RegionPartition& partition, const OperationLog& log) {
    require(partition.labels.width == log.source_w && partition.labels.height == log.source_h,
            "map_partition: partition dimensions do not match the log source");
    LabelMap cur = partition.labels;
    for (const OpEntry& e : log.entries) {
        switch (e.type) {
            case OpEntry::Type::kRemoveSeam: cur = remove_seam(cur, e.seam); break;
            case OpEntry::Type::kInsertSeam: cur = insert_seam(cur, e.seam); break;
            case OpEntry::Type::kScale: cur = resample_nearest(cur, e.to_w, e.to_h); break;
            case OpEntry::Type::kCrop: cur = crop(cur, e.window); break;
        }
    }
    RegionPartition out;
    out.labels = std::move(cur);
    refresh_region_metadata(out);
    return out;
}

} // namespace retex
