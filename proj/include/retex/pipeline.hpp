#pragma once

#include <string>
#include <vector>

#include "retex/merge.hpp"
#include "retex/raster.hpp"
#include "retex/retarget.hpp"
#include "retex/saliency.hpp"
#include "retex/synthesis.hpp"
#include "retex/texture_detect.hpp"

namespace retex {

// Every tunable of the pipeline with the method's defaults. Values are
// validated before any work starts; precedence is defaults < JSON config
// file < command-line flags.
struct PipelineConfig {
    DetectParams detect;
    SaliencyConfig saliency;
    double smooth_sigma = 3.0;
    int smooth_iterations = 3;
    double smooth_lambda = 0.015;
    MultiOpParams multiop;
    SynthesisConfig synthesis;
    BandParams band;
    int threads = 0;        // 0 = hardware
    bool dump_stages = true;
    bool synthesis_enabled = true;

    void apply_json_text(const std::string& text);
    void apply_json_file(const std::string& path);
    void validate() const;
};

// Artifact bookkeeping for a run directory.
struct RunManifest {
    struct Entry {
        std::string stage;
        std::string path;
        std::string checksum;
    };
    std::vector<Entry> entries;

    void add(const std::string& stage, const std::string& path);
    void write(const std::string& path) const;
};

uint64_t fnv1a64_file(const std::string& path);

struct SignificanceBundle {
    DetectResult detect;
    GaborFeatures gabor;
    TextureSaliencyResult tex;
    ScalarField tex_refined;
    BaseMode base_mode = BaseMode::kBalanced;
    ScalarField base;
    ScalarField significance;
};

struct RetargetOutputs {
    Raster smoothed;
    OperationLog log;
    Raster replayed;
    RegionPartition mapped;
    bool whole_image = false;
    Raster composited;
    Mask band;
    Raster final;
    std::vector<EnergyTraceRow> synthesis_trace;
    std::vector<EnergyTraceRow> band_trace;
};

// Pure stages (no I/O).
DetectResult run_detect(const Raster& input, const PipelineConfig& cfg);
SignificanceBundle run_significance(const Raster& input, const PipelineConfig& cfg);
RetargetOutputs run_retarget(const Raster& input, const SignificanceBundle& sig, int target_w,
                             int target_h, const PipelineConfig& cfg);

// CLI-facing commands: load, run, write artifacts + manifest into out_dir.
void cmd_detect(const std::string& input_path, const std::string& out_dir,
                const PipelineConfig& cfg);
void cmd_saliency(const std::string& input_path, const std::string& out_dir,
                  const PipelineConfig& cfg);
void cmd_retarget(const std::string& input_path, int target_w, int target_h,
                  const std::string& out_dir, const PipelineConfig& cfg);

} // namespace retex
