// retex: content-aware image retargeting with texture detection, a
// texture-aware significance map, multi-operator resizing, and patch-based
// regeneration of textural regions.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "retex/errors.hpp"
#include "retex/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitConfig = 3;
constexpr int kExitInternal = 4;

struct CommonArgs {
    std::string input;
    std::string out_dir = "retex_out";
    std::string config_path;
    int threads = 0;
    bool no_dump = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("input", args.input, "Input image (PNG or JPEG)")->required();
    cmd->add_option("--dump-dir", args.out_dir, "Run directory for artifacts");
    cmd->add_option("--config", args.config_path, "JSON config file");
    cmd->add_option("--threads", args.threads, "Worker thread cap (0 = hardware)");
    cmd->add_flag("--no-dump", args.no_dump, "Skip intermediate stage artifacts");
}

retex::PipelineConfig build_config(const CommonArgs& args) {
    retex::PipelineConfig cfg;
    if (!args.config_path.empty()) cfg.apply_json_file(args.config_path);
    if (args.threads > 0) cfg.threads = args.threads;
    if (args.no_dump) cfg.dump_stages = false;
    cfg.validate();
    return cfg;
}

bool parse_target(const std::string& text, int& w, int& h) {
    const size_t x = text.find_first_of("xX");
    if (x == std::string::npos) return false;
    try {
        size_t used = 0;
        w = std::stoi(text.substr(0, x), &used);
        if (used != x) return false;
        h = std::stoi(text.substr(x + 1), &used);
        if (used != text.size() - x - 1) return false;
    } catch (const std::exception&) {
        return false;
    }
    return w > 0 && h > 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"retex: texture-aware content-aware image retargeting"};
    app.require_subcommand(1);

    CommonArgs detect_args, saliency_args, retarget_args;
    std::string target_text;
    bool no_synthesis = false;

    CLI::App* detect = app.add_subcommand("detect", "Detect textural regions");
    add_common(detect, detect_args);

    CLI::App* saliency = app.add_subcommand("saliency", "Build the significance map");
    add_common(saliency, saliency_args);

    CLI::App* retarget = app.add_subcommand("retarget", "Retarget to a new size");
    add_common(retarget, retarget_args);
    retarget->add_option("--target", target_text, "Target size WxH (e.g. 250x333)")->required();
    retarget->add_flag("--no-synthesis", no_synthesis,
                       "Stop after multi-operator replay (ablation mode)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (detect->parsed()) {
            retex::cmd_detect(detect_args.input, detect_args.out_dir, build_config(detect_args));
        } else if (saliency->parsed()) {
            retex::cmd_saliency(saliency_args.input, saliency_args.out_dir,
                                build_config(saliency_args));
        } else if (retarget->parsed()) {
            int tw = 0, th = 0;
            if (!parse_target(target_text, tw, th)) {
                std::fprintf(stderr, "retex: cannot parse --target '%s' (expected WxH)\n",
                             target_text.c_str());
                return kExitConfig;
            }
            retex::PipelineConfig cfg = build_config(retarget_args);
            if (no_synthesis) cfg.synthesis_enabled = false;
            retex::cmd_retarget(retarget_args.input, tw, th, retarget_args.out_dir, cfg);
        }
    } catch (const retex::ConfigError& e) {
        std::fprintf(stderr, "retex: config error: %s\n", e.what());
        return kExitConfig;
    } catch (const retex::IoError& e) {
        std::fprintf(stderr, "retex: input error: %s\n", e.what());
        return kExitInput;
    } catch (const retex::InvariantError& e) {
        std::fprintf(stderr, "retex: internal error: %s\n", e.what());
        return kExitInternal;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "retex: internal error: %s\n", e.what());
        return kExitInternal;
    }
    return kExitOk;
}
