#include "retex/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "retex/errors.hpp"
#include "retex/image_io.hpp"
#include "retex/parallel.hpp"

namespace retex {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

template <typename T>
void read_key(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

} // namespace

void PipelineConfig::apply_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    static const std::vector<std::string> known = {
        "window_sigma", "eps_conv", "superpixel_divisor", "superpixel_compactness",
        "graphcut_weight", "graphcut_sigma_color", "min_area_fraction", "sigma_s_sq", "lambda",
        "sigma_refine", "scales", "nt_area_threshold", "refine_neighbors", "base_superpixels",
        "smooth_sigma", "smooth_iterations", "smooth_lambda", "multiop_batch", "multiop_patch",
        "multiop_stride", "search_radius", "search_step", "patch_size", "stride",
        "omega_schedule", "domain_fractions", "beta", "em_iters_per_level",
        "whole_image_threshold", "band_iterations", "band_stride", "band_omega", "threads",
        "dump_stages"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw ConfigError("config: unknown key '" + it.key() + "'");
    }
    read_key(j, "window_sigma", detect.window_sigma);
    read_key(j, "eps_conv", detect.eps_conv);
    read_key(j, "superpixel_divisor", detect.superpixel_divisor);
    read_key(j, "superpixel_compactness", detect.superpixel_compactness);
    read_key(j, "graphcut_weight", detect.graphcut.pairwise_weight);
    read_key(j, "graphcut_sigma_color", detect.graphcut.sigma_color);
    read_key(j, "min_area_fraction", detect.min_area_fraction);
    read_key(j, "sigma_s_sq", saliency.sigma_s_sq);
    read_key(j, "lambda", saliency.lambda);
    read_key(j, "sigma_refine", saliency.sigma_refine);
    read_key(j, "scales", saliency.scales);
    read_key(j, "nt_area_threshold", saliency.nt_area_threshold);
    read_key(j, "refine_neighbors", saliency.refine_neighbors);
    read_key(j, "base_superpixels", saliency.base_superpixels);
    read_key(j, "smooth_sigma", smooth_sigma);
    read_key(j, "smooth_iterations", smooth_iterations);
    read_key(j, "smooth_lambda", smooth_lambda);
    read_key(j, "multiop_batch", multiop.batch);
    read_key(j, "multiop_patch", multiop.patch);
    read_key(j, "multiop_stride", multiop.stride);
    read_key(j, "search_radius", multiop.search_radius);
    read_key(j, "search_step", multiop.search_step);
    read_key(j, "patch_size", synthesis.patch_size);
    read_key(j, "stride", synthesis.stride);
    read_key(j, "omega_schedule", synthesis.omega_schedule);
    read_key(j, "domain_fractions", synthesis.domain_fractions);
    read_key(j, "beta", synthesis.beta);
    read_key(j, "em_iters_per_level", synthesis.em_iters_per_level);
    read_key(j, "whole_image_threshold", synthesis.whole_image_threshold);
    read_key(j, "band_iterations", band.iterations);
    read_key(j, "band_stride", band.band_stride);
    read_key(j, "band_omega", band.omega);
    read_key(j, "threads", threads);
    read_key(j, "dump_stages", dump_stages);
    band.patch = synthesis.patch_size;
    band.beta = synthesis.beta;
}

void PipelineConfig::apply_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    apply_json_text(buf.str());
}

void PipelineConfig::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0)) throw ConfigError(std::string("config: ") + name + " must be positive");
    };
    positive(detect.window_sigma, "window_sigma");
    positive(detect.eps_conv, "eps_conv");
    positive(detect.superpixel_compactness, "superpixel_compactness");
    positive(saliency.sigma_s_sq, "sigma_s_sq");
    positive(saliency.lambda, "lambda");
    positive(saliency.sigma_refine, "sigma_refine");
    positive(smooth_sigma, "smooth_sigma");
    positive(synthesis.beta + 1.0, "beta");
    if (saliency.scales.empty()) throw ConfigError("config: scales must not be empty");
    for (size_t i = 1; i < saliency.scales.size(); ++i)
        if (saliency.scales[i] <= saliency.scales[i - 1])
            throw ConfigError("config: scales must be strictly increasing");
    if (synthesis.patch_size < 2) throw ConfigError("config: patch_size must be >= 2");
    if (synthesis.stride < 1 || multiop.stride < 1 || band.band_stride < 1)
        throw ConfigError("config: strides must be >= 1");
    if (synthesis.omega_schedule.size() != synthesis.domain_fractions.size() ||
        synthesis.omega_schedule.empty())
        throw ConfigError("config: omega_schedule and domain_fractions must match and be non-empty");
    for (double f : synthesis.domain_fractions)
        if (!(f > 0.0 && f <= 1.0))
            throw ConfigError("config: domain fractions must be in (0,1]");
    if (synthesis.em_iters_per_level < 1 || band.iterations < 1)
        throw ConfigError("config: iteration counts must be >= 1");
    if (multiop.batch < 1) throw ConfigError("config: multiop_batch must be >= 1");
    if (threads < 0) throw ConfigError("config: threads must be >= 0");
    if (!(synthesis.whole_image_threshold > 0 && synthesis.whole_image_threshold < 1))
        throw ConfigError("config: whole_image_threshold must be in (0,1)");
    if (!(saliency.nt_area_threshold > 0 && saliency.nt_area_threshold < 1))
        throw ConfigError("config: nt_area_threshold must be in (0,1)");
}

uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file for checksum: " + path);
    uint64_t hash = 1469598103934665603ull;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            hash ^= static_cast<unsigned char>(buf[i]);
            hash *= 1099511628211ull;
        }
        if (!in) break;
    }
    return hash;
}

void RunManifest::add(const std::string& stage, const std::string& path) {
    char hex[32];
    std::snprintf(hex, sizeof(hex), "fnv1a64:%016llx",
                  static_cast<unsigned long long>(fnv1a64_file(path)));
    entries.push_back({stage, path, hex});
}

void RunManifest::write(const std::string& path) const {
    json j;
    json arr = json::array();
    for (const Entry& e : entries)
        arr.push_back({{"stage", e.stage}, {"path", e.path}, {"checksum", e.checksum}});
    j["artifacts"] = std::move(arr);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write manifest: " + path);
    out << j.dump(2) << "\n";
}

DetectResult run_detect(const Raster& input, const PipelineConfig& cfg) {
    set_thread_cap(cfg.threads);
    return detect_textures(input, cfg.detect);
}

SignificanceBundle run_significance(const Raster& input, const PipelineConfig& cfg) {
    set_thread_cap(cfg.threads);
    SignificanceBundle b;
    b.detect = detect_textures(input, cfg.detect);
    b.gabor = gabor_features(input);
    Mask tmask(input.width, input.height, 0);
    for (size_t i = 0; i < tmask.size(); ++i)
        tmask.values[i] = b.detect.partition.labels.labels[i] > 0 ? 1 : 0;
    b.tex = multiscale_texture_saliency(input, tmask, cfg.saliency, b.gabor);
    b.tex_refined = refine_saliency(b.tex.finest_patches, b.tex.coarse, input, b.gabor,
                                    cfg.saliency.sigma_refine, cfg.saliency.refine_neighbors);
    b.base_mode = select_base_mode(b.detect.partition, cfg.saliency.nt_area_threshold);
    b.base = base_saliency(input, b.base_mode, cfg.saliency);
    b.significance = compose_significance(b.base, b.tex_refined, b.detect.partition);
    return b;
}

RetargetOutputs run_retarget(const Raster& input, const SignificanceBundle& sig, int target_w,
                             int target_h, const PipelineConfig& cfg) {
    set_thread_cap(cfg.threads);
    RetargetOutputs out;
    out.smoothed = structure_smooth(input, cfg.smooth_sigma, cfg.smooth_iterations,
                                    cfg.smooth_lambda);
    out.log = plan_multiop(out.smoothed, sig.significance, target_w, target_h, cfg.multiop);
    out.replayed = replay_log(input, out.log);
    out.mapped = map_partition(sig.detect.partition, out.log);
    out.whole_image = decide_whole_image(sig.detect.partition, cfg.synthesis.whole_image_threshold);

    if (!cfg.synthesis_enabled) {
        out.final = out.replayed;
        return out;
    }
    if (out.whole_image) {
        out.composited =
            synthesize_region(input, out.replayed, cfg.synthesis, &out.synthesis_trace);
        out.final = out.composited;
        return out;
    }
    if (sig.detect.partition.regions.empty()) {
        out.final = out.replayed;
        return out;
    }

    std::vector<SynthesizedRegion> synthesized;
    for (const RegionInfo& region : sig.detect.partition.regions) {
        const RegionInfo* mapped_region = nullptr;
        for (const RegionInfo& m : out.mapped.regions)
            if (m.id == region.id) mapped_region = &m;
        if (!mapped_region || mapped_region->area <= 0) continue;

        const CropWindow src_win{region.x0, region.y0, region.x1 - region.x0 + 1,
                                 region.y1 - region.y0 + 1};
        const CropWindow dst_win{mapped_region->x0, mapped_region->y0,
                                 mapped_region->x1 - mapped_region->x0 + 1,
                                 mapped_region->y1 - mapped_region->y0 + 1};
        const Raster exemplar = crop(input, src_win);
        const Raster initial = crop(out.replayed, dst_win);
        SynthesizedRegion sr;
        sr.id = region.id;
        sr.x0 = dst_win.x;
        sr.y0 = dst_win.y;
        sr.raster = synthesize_region(exemplar, initial, cfg.synthesis, &out.synthesis_trace);
        synthesized.push_back(std::move(sr));
    }
    out.composited = composite(out.replayed, synthesized, out.mapped);
    out.band = grow_boundary(out.mapped);
    BandParams band_params = cfg.band;
    band_params.patch = cfg.synthesis.patch_size;
    band_params.beta = cfg.synthesis.beta;
    out.final = resynthesize_band(out.composited, out.band, input, band_params, &out.band_trace);
    return out;
}

namespace {

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory: " + dir);
}

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

json region_json(const RegionPartition& part) {
    json regions = json::array();
    for (const RegionInfo& r : part.regions) {
        regions.push_back({{"id", r.id},
                           {"area", r.area},
                           {"bbox", {r.x0, r.y0, r.x1 - r.x0 + 1, r.y1 - r.y0 + 1}}});
    }
    return regions;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path);
    out << text;
}

void dump_detect_artifacts(const DetectResult& det, const std::string& out_dir,
                           RunManifest& manifest, bool dump_stages) {
    const std::string mask_path = join(out_dir, "partition.png");
    save_png_indexed(det.partition.labels, mask_path);
    manifest.add("detect", mask_path);

    json j;
    j["regions"] = region_json(det.partition);
    j["threshold"] = det.threshold_value;
    const std::string json_path = join(out_dir, "partition.json");
    write_text(json_path, j.dump(2) + "\n");
    manifest.add("detect", json_path);

    if (dump_stages) {
        const std::string rel = join(out_dir, "reliability.png");
        save_png_gray(normalize_field(det.reliability), rel);
        manifest.add("detect", rel);
        ScalarField noisy(det.threshold.mask.width, det.threshold.mask.height);
        for (size_t i = 0; i < noisy.size(); ++i) noisy.values[i] = det.threshold.mask.values[i];
        const std::string noisy_path = join(out_dir, "mask_noisy.png");
        save_png_gray(noisy, noisy_path);
        manifest.add("detect", noisy_path);
        ScalarField voted(det.voted.width, det.voted.height);
        for (size_t i = 0; i < voted.size(); ++i) voted.values[i] = det.voted.values[i];
        const std::string voted_path = join(out_dir, "mask_voted.png");
        save_png_gray(voted, voted_path);
        manifest.add("detect", voted_path);
        ScalarField refined(det.refined.width, det.refined.height);
        for (size_t i = 0; i < refined.size(); ++i) refined.values[i] = det.refined.values[i];
        const std::string refined_path = join(out_dir, "mask_refined.png");
        save_png_gray(refined, refined_path);
        manifest.add("detect", refined_path);
    }
}

std::vector<std::string> dump_saliency_artifacts(const SignificanceBundle& sig,
                                                 const std::string& out_dir,
                                                 RunManifest& manifest, bool dump_stages) {
    std::vector<std::string> scale_paths;
    if (dump_stages) {
        for (size_t i = 0; i < sig.tex.scale_maps.size(); ++i) {
            const std::string p = join(out_dir, "saliency_scale" + std::to_string(i) + ".png");
            save_png_gray(normalize_field(sig.tex.scale_maps[i]), p);
            manifest.add("saliency", p);
            scale_paths.push_back(p);
        }
        const std::string coarse = join(out_dir, "saliency_coarse.png");
        save_png_gray(sig.tex.coarse, coarse);
        manifest.add("saliency", coarse);
        const std::string refined = join(out_dir, "saliency_refined.png");
        save_png_gray(sig.tex_refined, refined);
        manifest.add("saliency", refined);
        const std::string base = join(out_dir, "saliency_base.png");
        save_png_gray(sig.base, base);
        manifest.add("saliency", base);
    }
    const std::string sig_path = join(out_dir, "significance.png");
    save_png_gray(sig.significance, sig_path);
    manifest.add("saliency", sig_path);

    json j;
    j["scale_maps"] = scale_paths;
    j["base_mode"] = base_mode_name(sig.base_mode);
    const std::string json_path = join(out_dir, "significance.json");
    write_text(json_path, j.dump(2) + "\n");
    manifest.add("saliency", json_path);
    return scale_paths;
}

std::string trace_csv(const std::vector<EnergyTraceRow>& rows) {
    std::ostringstream out;
    out << "level,iteration,energy\n";
    for (const EnergyTraceRow& r : rows) {
        char line[96];
        std::snprintf(line, sizeof(line), "%d,%d,%.17g\n", r.level, r.iteration, r.energy);
        out << line;
    }
    return out.str();
}

} // namespace

void cmd_detect(const std::string& input_path, const std::string& out_dir,
                const PipelineConfig& cfg) {
    cfg.validate();
    const Raster input = load_raster(input_path);
    ensure_dir(out_dir);
    const DetectResult det = run_detect(input, cfg);
    RunManifest manifest;
    dump_detect_artifacts(det, out_dir, manifest, cfg.dump_stages);
    manifest.write(join(out_dir, "manifest.json"));
}

void cmd_saliency(const std::string& input_path, const std::string& out_dir,
                  const PipelineConfig& cfg) {
    cfg.validate();
    const Raster input = load_raster(input_path);
    ensure_dir(out_dir);
    const SignificanceBundle sig = run_significance(input, cfg);
    RunManifest manifest;
    dump_detect_artifacts(sig.detect, out_dir, manifest, cfg.dump_stages);
    dump_saliency_artifacts(sig, out_dir, manifest, cfg.dump_stages);
    manifest.write(join(out_dir, "manifest.json"));
}

void cmd_retarget(const std::string& input_path, int target_w, int target_h,
                  const std::string& out_dir, const PipelineConfig& cfg) {
    cfg.validate();
    if (target_w < 16 || target_h < 16)
        throw ConfigError("retarget: target must be at least 16x16");
    const Raster input = load_raster(input_path);
    ensure_dir(out_dir);
    const SignificanceBundle sig = run_significance(input, cfg);
    const RetargetOutputs out = run_retarget(input, sig, target_w, target_h, cfg);

    RunManifest manifest;
    dump_detect_artifacts(sig.detect, out_dir, manifest, cfg.dump_stages);
    dump_saliency_artifacts(sig, out_dir, manifest, cfg.dump_stages);

    if (cfg.dump_stages) {
        const std::string smoothed = join(out_dir, "smoothed.png");
        save_png(out.smoothed, smoothed);
        manifest.add("retarget", smoothed);
        const std::string replayed = join(out_dir, "replayed.png");
        save_png(out.replayed, replayed);
        manifest.add("retarget", replayed);
        const std::string mapped = join(out_dir, "partition_mapped.png");
        save_png_indexed(out.mapped.labels, mapped);
        manifest.add("retarget", mapped);
        if (out.composited.width > 0) {
            const std::string comp = join(out_dir, "composited.png");
            save_png(out.composited, comp);
            manifest.add("synthesis", comp);
        }
        if (out.band.width > 0) {
            ScalarField band(out.band.width, out.band.height);
            for (size_t i = 0; i < band.size(); ++i) band.values[i] = out.band.values[i];
            const std::string band_path = join(out_dir, "band.png");
            save_png_gray(band, band_path);
            manifest.add("merge", band_path);
        }
    }
    const std::string log_path = join(out_dir, "oplog.json");
    write_text(log_path, out.log.to_json() + "\n");
    manifest.add("retarget", log_path);

    std::vector<EnergyTraceRow> all_trace = out.synthesis_trace;
    all_trace.insert(all_trace.end(), out.band_trace.begin(), out.band_trace.end());
    const std::string csv_path = join(out_dir, "energy.csv");
    write_text(csv_path, trace_csv(all_trace));
    manifest.add("synthesis", csv_path);

    const std::string final_path = join(out_dir, "final.png");
    save_png(out.final, final_path);
    manifest.add("final", final_path);
    manifest.write(join(out_dir, "manifest.json"));
}

} // namespace retex
