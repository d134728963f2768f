#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "helpers.hpp"
#include "retex/image_io.hpp"
#include "retex/pipeline.hpp"

using namespace retex;
using namespace retex::testing;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(RETEX_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path work_dir() {
    const fs::path dir = fs::temp_directory_path() / "retex_cli_test";
    fs::create_directories(dir);
    return dir;
}

Raster pipeline_fixture(int w, int h) {
    // Flat-ish sky over a value-noise ground: one detectable T-region.
    Raster img(w, h);
    const Raster tex = value_noise_raster(w, h, 404);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            float* px = img.pixel(x, y);
            if (y < h / 2) {
                px[0] = 0.55f;
                px[1] = 0.65f;
                px[2] = 0.85f;
            } else {
                px[0] = 0.2f + 0.5f * tex.pixel(x, y)[0];
                px[1] = 0.3f + 0.5f * tex.pixel(x, y)[1];
                px[2] = 0.1f + 0.3f * tex.pixel(x, y)[2];
            }
        }
    return img;
}

std::string fast_config_path() {
    const fs::path path = work_dir() / "fast.json";
    std::ofstream out(path);
    out << R"({"em_iters_per_level": 3, "band_iterations": 2, "scales": [40, 90, 160],)"
        << R"( "superpixel_divisor": 100, "threads": 2})";
    out.close();
    return path.string();
}

} // namespace

TEST_CASE("cli: detect writes partition artifacts and a manifest") {
    const fs::path dir = work_dir();
    const std::string input = (dir / "input.png").string();
    save_png(pipeline_fixture(96, 80), input);
    const std::string out_dir = (dir / "detect_out").string();
    const int code = run_cli("detect " + input + " --dump-dir " + out_dir);
    CHECK(code == 0);
    CHECK(fs::exists(fs::path(out_dir) / "partition.png"));
    CHECK(fs::exists(fs::path(out_dir) / "partition.json"));
    CHECK(fs::exists(fs::path(out_dir) / "manifest.json"));
}

TEST_CASE("cli: corrupt input exits 2 naming the file") {
    const fs::path dir = work_dir();
    const std::string junk = (dir / "junk.png").string();
    std::ofstream(junk) << "not a png";
    CHECK(run_cli("detect " + junk) == 2);
    CHECK(run_cli("detect " + (dir / "missing.png").string()) == 2);
}

TEST_CASE("cli: config errors exit 3") {
    const fs::path dir = work_dir();
    const std::string input = (dir / "input3.png").string();
    save_png(pipeline_fixture(48, 40), input);

    const std::string bad_cfg = (dir / "bad.json").string();
    std::ofstream(bad_cfg) << R"({"no_such_key": 1})";
    CHECK(run_cli("detect " + input + " --config " + bad_cfg) == 3);

    CHECK(run_cli("retarget " + input + " --target nonsense") == 3);
    CHECK(run_cli("retarget " + input + " --target 8x8") == 3); // below 16x16
    CHECK(run_cli("bogus-subcommand") == 3);
}

TEST_CASE("cli: retarget runs, determinism, ablation mode") {
    const fs::path dir = work_dir();
    const std::string input = (dir / "input2.png").string();
    save_png(pipeline_fixture(96, 80), input);
    const std::string cfg = fast_config_path();

    const std::string out1 = (dir / "run1").string();
    const std::string out2 = (dir / "run2").string();
    CHECK(run_cli("retarget " + input + " --target 72x80 --config " + cfg + " --dump-dir " +
                  out1) == 0);
    CHECK(run_cli("retarget " + input + " --target 72x80 --config " + cfg + " --dump-dir " +
                  out2) == 0);
    const Raster a = load_raster((fs::path(out1) / "final.png").string());
    CHECK(a.width == 72);
    CHECK(a.height == 80);
    CHECK(fnv1a64_file((fs::path(out1) / "final.png").string()) ==
          fnv1a64_file((fs::path(out2) / "final.png").string()));
    CHECK(fs::exists(fs::path(out1) / "oplog.json"));
    CHECK(fs::exists(fs::path(out1) / "energy.csv"));
    CHECK(fs::exists(fs::path(out1) / "significance.png"));

    // Ablation: --no-synthesis output equals the replayed stage dump.
    const std::string out3 = (dir / "run3").string();
    CHECK(run_cli("retarget " + input + " --target 72x80 --config " + cfg + " --no-synthesis" +
                  " --dump-dir " + out3) == 0);
    CHECK(fnv1a64_file((fs::path(out3) / "final.png").string()) ==
          fnv1a64_file((fs::path(out3) / "replayed.png").string()));
}
