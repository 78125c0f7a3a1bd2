// End-to-end checks of the installed command surface: subcommands, flags,
// and exit codes, driven through the real binary.

#include "catalogstitch/dataset.hpp"
#include "catalogstitch/mask_geometry.hpp"
#include "catalogstitch/png_io.hpp"
#include "catalogstitch/report.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace ts = test_support;
namespace fs = std::filesystem;
using namespace catalogstitch;

#ifndef CLI_PATH
#define CLI_PATH "catalogstitch"
#endif
#ifndef STUB_INPAINTER
#define STUB_INPAINTER ""
#endif

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST(Cli, FixturesRunReportRoundTrip) {
    ts::TempDir tmp("cli");
    const fs::path ds = tmp.path() / "ds";
    const fs::path out = tmp.path() / "out";

    ASSERT_EQ(run_cli("fixtures --out " + ds.string() + " --seed 7 --dimension 2 --occlusion 1"), 0);
    EXPECT_EQ(load_dataset(ds).size(), 3u);

    ASSERT_EQ(run_cli("run --dataset " + ds.string() + " --out " + out.string() +
                      " --mock --mock-compositor stretch-fill --jobs 2"),
              0);
    EXPECT_TRUE(fs::exists(out / "results.json"));
    EXPECT_TRUE(fs::exists(out / "report.html"));
    const auto results = load_results_json(out / "results.json");
    ASSERT_EQ(results.size(), 3u);
    for (const auto& r : results) {
        EXPECT_TRUE(r.success);
        EXPECT_TRUE(fs::exists(out / *r.artifact("final")));
    }

    const fs::path report2 = tmp.path() / "elsewhere" / "report.html";
    ASSERT_EQ(run_cli("report --results " + out.string() + " --out " + report2.string()), 0);
    EXPECT_TRUE(fs::exists(report2));
}

TEST(Cli, MaskModeAndRestoreFlags) {
    ts::TempDir tmp("cli");
    const fs::path ds = tmp.path() / "ds";
    ASSERT_EQ(run_cli("fixtures --out " + ds.string() + " --seed 3 --dimension 1 --occlusion 1"), 0);

    const fs::path out = tmp.path() / "out";
    ASSERT_EQ(run_cli("run --dataset " + ds.string() + " --out " + out.string() +
                      " --mock --mask-mode bbox --no-restore --tau 0.1 --tau-occ 0.05"),
              0);
    const auto results = load_results_json(out / "results.json");
    for (const auto& r : results) {
        EXPECT_FALSE(r.flags.adapted); // bbox mode never adapts
        EXPECT_EQ(r.artifact("before_restore"), nullptr);
    }
}

TEST(Cli, ExitCodesForFailureModes) {
    ts::TempDir tmp("cli");
    const fs::path ds = tmp.path() / "ds";
    ASSERT_EQ(run_cli("fixtures --out " + ds.string() + " --seed 5 --dimension 2 --occlusion 0"), 0);

    // Without --mock or --backend-* the run is a configuration error.
    EXPECT_EQ(run_cli("run --dataset " + ds.string() + " --out " + (tmp.path() / "o1").string()), 1);
    // Missing dataset is fatal.
    EXPECT_EQ(run_cli("run --dataset " + (tmp.path() / "gone").string() + " --out " +
                      (tmp.path() / "o2").string() + " --mock"),
              1);
    // A grayscale product makes exactly one example fail: partial failure.
    fs::copy_file(ds / "dim_000" / "target_mask.png", ds / "dim_000" / "product.png",
                  fs::copy_options::overwrite_existing);
    EXPECT_EQ(run_cli("run --dataset " + ds.string() + " --out " +
                      (tmp.path() / "o3").string() + " --mock"),
              2);
}

TEST(Cli, ExternalBackendFlagRunsTheCommand) {
    // An external inpainter mixed with mock segmenter/compositor: the stub
    // fills occluder regions with (42,42,42) before compositing, and the
    // restored output must still be pixel-perfect over the occluders.
    ts::TempDir tmp("cli");
    const fs::path ds = tmp.path() / "ds";
    ASSERT_EQ(run_cli("fixtures --out " + ds.string() + " --seed 6 --dimension 0 --occlusion 1"), 0);

    const fs::path out = tmp.path() / "out";
    ASSERT_EQ(run_cli("run --dataset " + ds.string() + " --out " + out.string() +
                      " --mock --backend-inpaint " + std::string(STUB_INPAINTER)),
              0);
    const auto results = load_results_json(out / "results.json");
    ASSERT_EQ(results.size(), 1u);
    EXPECT_TRUE(results[0].success);
    ASSERT_TRUE(results[0].metrics.occluder_psnr_db.has_value());
    EXPECT_DOUBLE_EQ(*results[0].metrics.occluder_psnr_db, 99.0);

    // The stub's constant fill is visible in the inpainted background.
    const RasterImage inpainted =
        load_image_png(out / *results[0].artifact("inpainted_bg"));
    const BinaryMask occ = load_mask_png(load_dataset(ds)[0].occluder_masks[0]);
    const BBox obox = mask_to_bbox(occ);
    EXPECT_EQ(inpainted.pixel(obox.x + obox.w / 2, obox.y + obox.h / 2)[0], 42);
}

TEST(Cli, FixturesAreSeedDeterministic) {
    ts::TempDir tmp("cli");
    const fs::path a = tmp.path() / "a", b = tmp.path() / "b";
    ASSERT_EQ(run_cli("fixtures --out " + a.string() + " --seed 9 --dimension 1 --occlusion 1"), 0);
    ASSERT_EQ(run_cli("fixtures --out " + b.string() + " --seed 9 --dimension 1 --occlusion 1"), 0);
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (!e.is_regular_file()) continue;
        const fs::path rel = fs::relative(e.path(), a);
        std::ifstream fa(e.path(), std::ios::binary), fb(b / rel, std::ios::binary);
        const std::string da((std::istreambuf_iterator<char>(fa)), {});
        const std::string db((std::istreambuf_iterator<char>(fb)), {});
        EXPECT_EQ(da, db) << rel;
    }
}
