#include "catalogstitch/backend.hpp"

#include "catalogstitch/metrics.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

using namespace catalogstitch;
namespace ts = test_support;

#ifndef STUB_OK
#define STUB_OK ""
#endif
#ifndef STUB_VIOLATE
#define STUB_VIOLATE ""
#endif
#ifndef STUB_CRASH
#define STUB_CRASH ""
#endif
#ifndef STUB_GARBAGE
#define STUB_GARBAGE ""
#endif
#ifndef STUB_SEGMENTER
#define STUB_SEGMENTER ""
#endif
#ifndef STUB_SEGMENTER_GARBAGE
#define STUB_SEGMENTER_GARBAGE ""
#endif

namespace {

BackendSpec external_with_workroot(const char* exe, const std::filesystem::path& root) {
    BackendSpec spec = BackendSpec::external({exe});
    spec.work_root = root;
    return spec;
}

} // namespace

// --- oracle segmenter -------------------------------------------------------

TEST(OracleSegmenter, ReadsMasksInFilenameOrder) {
    ts::TempDir tmp("seg");
    const RasterImage bg(24, 20, 3);
    BinaryMask m0(24, 20, 0), m1(24, 20, 0);
    m0.set(3, 3, 255);
    m1.set(10, 10, 255);
    save_png(tmp.path() / "occluder_1.png", m1);
    save_png(tmp.path() / "occluder_0.png", m0);

    BackendSpec spec = BackendSpec::builtin(MockVariant::oracle_segmenter);
    spec.oracle_mask_dir = tmp.path();
    const auto entities = run_segmenter(bg, spec);
    ASSERT_EQ(entities.size(), 2u);
    EXPECT_EQ(entities[0].id, "occluder_0");
    EXPECT_EQ(entities[1].id, "occluder_1");
    EXPECT_EQ(entities[0].bbox, (BBox{3, 3, 1, 1}));
}

TEST(OracleSegmenter, EmptyDirectoryGivesNoEntities) {
    ts::TempDir tmp("seg");
    BackendSpec spec = BackendSpec::builtin(MockVariant::oracle_segmenter);
    spec.oracle_mask_dir = tmp.path();
    EXPECT_TRUE(run_segmenter(RasterImage(8, 8, 3), spec).empty());
}

TEST(OracleSegmenter, SizeMismatchIsContractViolation) {
    ts::TempDir tmp("seg");
    save_png(tmp.path() / "e.png", BinaryMask(10, 10, 255));
    BackendSpec spec = BackendSpec::builtin(MockVariant::oracle_segmenter);
    spec.oracle_mask_dir = tmp.path();
    EXPECT_THROW(run_segmenter(RasterImage(8, 8, 3), spec), ContractViolation);
}

TEST(OracleSegmenter, EmptyMasksAreDropped) {
    ts::TempDir tmp("seg");
    save_png(tmp.path() / "a_empty.png", BinaryMask(8, 8, 0));
    BinaryMask keep(8, 8, 0);
    keep.set(1, 1, 255);
    save_png(tmp.path() / "b_keep.png", keep);
    BackendSpec spec = BackendSpec::builtin(MockVariant::oracle_segmenter);
    spec.oracle_mask_dir = tmp.path();
    const auto entities = run_segmenter(RasterImage(8, 8, 3), spec);
    ASSERT_EQ(entities.size(), 1u);
    EXPECT_EQ(entities[0].id, "b_keep");
}

// --- nearest-fill inpainter --------------------------------------------------

TEST(NearestFillInpaint, AllBackgroundMaskIsIdentity) {
    std::mt19937_64 rng(20);
    const RasterImage bg = ts::random_image(rng, 12, 9);
    const BackendSpec spec = BackendSpec::builtin(MockVariant::nearest_fill_inpainter);
    EXPECT_EQ(run_inpainter(bg, BinaryMask(12, 9, 0), spec), bg);
}

TEST(NearestFillInpaint, SinglePixelSurroundedByUniformColor) {
    RasterImage bg(5, 5, 3, 77);
    bg.pixel(2, 2)[0] = 1;
    bg.pixel(2, 2)[1] = 2;
    bg.pixel(2, 2)[2] = 3;
    BinaryMask mask(5, 5, 0);
    mask.set(2, 2, 255);
    const RasterImage out = nearest_fill_inpaint(bg, mask);
    EXPECT_EQ(out.pixel(2, 2)[0], 77);
    EXPECT_EQ(out.pixel(2, 2)[1], 77);
    EXPECT_EQ(out.pixel(2, 2)[2], 77);
}

TEST(NearestFillInpaint, RowTieBreaksTowardSmallerColumn) {
    // Row [A, A, ?, B]: columns 1 and 3 are both at distance 1 from the
    // masked pixel; the smaller column wins, so A fills it.
    RasterImage bg(4, 1, 3, 0);
    bg.pixel(0, 0)[0] = 10;
    bg.pixel(1, 0)[0] = 10;
    bg.pixel(2, 0)[0] = 99;
    bg.pixel(3, 0)[0] = 200;
    BinaryMask mask(4, 1, 0);
    mask.set(2, 0, 255);
    const RasterImage out = nearest_fill_inpaint(bg, mask);
    EXPECT_EQ(out.pixel(2, 0)[0], 10);
}

TEST(NearestFillInpaint, MatchesBruteForceOracle) {
    std::mt19937_64 rng(21);
    for (int it = 0; it < 60; ++it) {
        const int w = ts::rand_int(rng, 2, 36), h = ts::rand_int(rng, 2, 28);
        const RasterImage bg = ts::random_image(rng, w, h);
        BinaryMask mask = ts::random_mask(rng, w, h, ts::rand_int(rng, 10, 70));
        if (foreground_count(mask) == static_cast<std::int64_t>(w) * h)
            mask.set(0, 0, 0);
        EXPECT_EQ(nearest_fill_inpaint(bg, mask), ts::oracle_nearest_fill(bg, mask));
    }
}

TEST(NearestFillInpaint, FullyMaskedImageFails) {
    EXPECT_THROW(nearest_fill_inpaint(RasterImage(4, 4, 3), BinaryMask(4, 4, 255)),
                 BackendFailure);
}

// --- compositors -------------------------------------------------------------

TEST(FitInsideCompositor, ExactUpscaleFillsBox) {
    // 50x100 crop into a 200x400 box: scale 4 on both axes.
    RasterImage bg(512, 512, 3, 10);
    const RasterImage product(60, 110, 3, 200);
    const BinaryMask pmask = rect_mask(60, 110, BBox{5, 5, 50, 100});
    const BBox box{100, 50, 200, 400};
    const BinaryMask tmask = rect_mask(512, 512, box);
    const RasterImage out = fit_inside_composite(bg, product, pmask, tmask);
    EXPECT_EQ(output_object_bbox(out, bg, BBox{0, 0, 512, 512}), box);
}

TEST(FitInsideCompositor, HeightLimitedCaseIsCentered) {
    // 50x100 crop into a 200x100 box: scale 1, centered at columns 75..124.
    RasterImage bg(400, 300, 3, 10);
    const RasterImage product(60, 110, 3, 200);
    const BinaryMask pmask = rect_mask(60, 110, BBox{5, 5, 50, 100});
    const BBox box{40, 60, 200, 100};
    const BinaryMask tmask = rect_mask(400, 300, box);
    const RasterImage out = fit_inside_composite(bg, product, pmask, tmask);
    EXPECT_EQ(output_object_bbox(out, bg, BBox{0, 0, 400, 300}),
              (BBox{40 + 75, 60, 50, 100}));
}

TEST(FitInsideCompositor, AspectPreservedWithinRoundingBound) {
    std::mt19937_64 rng(22);
    for (int it = 0; it < 100; ++it) {
        // Product aspect ratios in [1/3, 2]: the regime where the rounding
        // bound is a theorem for the floor-scaled extents.
        const int ph = ts::rand_int(rng, 4, 40);
        const int pw = ts::rand_int(rng, std::max(2, ph / 3), std::min(40, 2 * ph));
        const int bw = ts::rand_int(rng, pw, 160), bh = ts::rand_int(rng, ph, 160);
        RasterImage bg(220, 220, 3, 0);
        const RasterImage product(pw + 4, ph + 4, 3, 200);
        const BinaryMask pmask = rect_mask(pw + 4, ph + 4, BBox{2, 2, pw, ph});
        const BBox box{20, 20, bw, bh};
        const BinaryMask tmask = rect_mask(220, 220, box);
        const RasterImage out = fit_inside_composite(bg, product, pmask, tmask);
        const BBox placed = output_object_bbox(out, bg, BBox{0, 0, 220, 220});
        const double ar_p = static_cast<double>(pw) / ph;
        EXPECT_LE(std::abs(aspect_ratio(placed) - ar_p),
                  2.0 / std::min(placed.w, placed.h) + 1e-12);
        EXPECT_LE(placed.w, bw);
        EXPECT_LE(placed.h, bh);
    }
}

TEST(StretchFillCompositor, FillsBoxExactlyAndDistorts) {
    // 50x100 crop into 200x100: anisotropic scale (4, 1), output AR = 2.
    RasterImage bg(400, 300, 3, 10);
    const RasterImage product(60, 110, 3, 200);
    const BinaryMask pmask = rect_mask(60, 110, BBox{5, 5, 50, 100});
    const BBox box{40, 60, 200, 100};
    const BinaryMask tmask = rect_mask(400, 300, box);
    const RasterImage out = stretch_fill_composite(bg, product, pmask, tmask);
    const BBox placed = output_object_bbox(out, bg, BBox{0, 0, 400, 300});
    EXPECT_EQ(placed, box);
    EXPECT_DOUBLE_EQ(aspect_ratio(placed), 2.0);
}

TEST(Compositors, BitDeterministic) {
    std::mt19937_64 rng(23);
    const RasterImage bg = ts::random_image(rng, 120, 90);
    const RasterImage product = ts::random_image(rng, 40, 30);
    const BinaryMask pmask = rect_mask(40, 30, BBox{3, 3, 30, 20});
    const BinaryMask tmask = rect_mask(120, 90, BBox{10, 10, 70, 50});
    EXPECT_EQ(fit_inside_composite(bg, product, pmask, tmask),
              fit_inside_composite(bg, product, pmask, tmask));
    EXPECT_EQ(stretch_fill_composite(bg, product, pmask, tmask),
              stretch_fill_composite(bg, product, pmask, tmask));
    const BinaryMask m = rect_mask(120, 90, BBox{20, 20, 30, 25});
    EXPECT_EQ(nearest_fill_inpaint(bg, m), nearest_fill_inpaint(bg, m));
}

// --- external protocol --------------------------------------------------------

TEST(ExternalProtocol, ConformingStubRoundTripsBitExactly) {
    ts::TempDir tmp("proto");
    std::mt19937_64 rng(24);
    const RasterImage bg = ts::random_image(rng, 32, 24);
    const BinaryMask mask = rect_mask(32, 24, BBox{8, 6, 10, 9});

    const RasterImage out =
        run_inpainter(bg, mask, external_with_workroot(STUB_OK, tmp.path()));
    RasterImage expected = bg;
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 32; ++x)
            if (mask.foreground(x, y))
                for (int c = 0; c < 3; ++c)
                    expected.pixel(x, y)[c] = 42;
    EXPECT_EQ(out, expected);

    // Hermetic invocation: the working directory is cleaned up on success.
    EXPECT_TRUE(std::filesystem::is_empty(tmp.path()));
}

TEST(ExternalProtocol, UnmaskedPixelChangeIsContractViolation) {
    ts::TempDir tmp("proto");
    std::mt19937_64 rng(25);
    const RasterImage bg = ts::random_image(rng, 16, 16);
    const BinaryMask mask = rect_mask(16, 16, BBox{4, 4, 6, 6});
    EXPECT_THROW(run_inpainter(bg, mask, external_with_workroot(STUB_VIOLATE, tmp.path())),
                 ContractViolation);
    // The working directory is retained for inspection on failure.
    EXPECT_FALSE(std::filesystem::is_empty(tmp.path()));
}

TEST(ExternalProtocol, NonzeroExitIsBackendFailure) {
    ts::TempDir tmp("proto");
    const RasterImage bg(8, 8, 3);
    const BinaryMask mask = rect_mask(8, 8, BBox{2, 2, 3, 3});
    EXPECT_THROW(run_inpainter(bg, mask, external_with_workroot(STUB_CRASH, tmp.path())),
                 BackendFailure);
}

TEST(ExternalProtocol, MalformedOutputIsBackendFailure) {
    ts::TempDir tmp("proto");
    const RasterImage bg(8, 8, 3);
    const BinaryMask mask = rect_mask(8, 8, BBox{2, 2, 3, 3});
    EXPECT_THROW(run_inpainter(bg, mask, external_with_workroot(STUB_GARBAGE, tmp.path())),
                 BackendFailure);
}

TEST(ExternalProtocol, MissingOutputIsBackendFailure) {
    ts::TempDir tmp("proto");
    const RasterImage bg(8, 8, 3);
    const BinaryMask mask = rect_mask(8, 8, BBox{2, 2, 3, 3});
    // /bin/true exits 0 without writing anything.
    EXPECT_THROW(run_inpainter(bg, mask, external_with_workroot("/bin/true", tmp.path())),
                 BackendFailure);
}

TEST(ExternalProtocol, ExternalSegmenterRoundTrip) {
    ts::TempDir tmp("proto");
    const RasterImage bg(40, 32, 3, 90);
    const auto entities =
        run_segmenter(bg, external_with_workroot(STUB_SEGMENTER, tmp.path()));
    ASSERT_EQ(entities.size(), 2u);
    EXPECT_EQ(entities[0].id, "000");
    EXPECT_EQ(entities[1].id, "001");
    EXPECT_EQ(entities[0].bbox, (BBox{2, 2, 10, 8}));
    EXPECT_EQ(entities[1].bbox, (BBox{20, 1, 3, 5}));
    EXPECT_EQ(entities[0].mask.width, bg.width);
    EXPECT_TRUE(std::filesystem::is_empty(tmp.path()));
}

TEST(ExternalProtocol, SegmenterMalformedEntityIsBackendFailure) {
    ts::TempDir tmp("proto");
    const RasterImage bg(16, 16, 3, 90);
    EXPECT_THROW(
        run_segmenter(bg, external_with_workroot(STUB_SEGMENTER_GARBAGE, tmp.path())),
        BackendFailure);
}

TEST(ExternalProtocol, ManifestListsStageRolesAndRelativePaths) {
    BackendManifest m;
    m.stage = Stage::composite;
    m.inputs = {{"background", "background.png"},
                {"product", "product.png"},
                {"product_mask", "product_mask.png"},
                {"target_mask", "target_mask.png"}};
    m.outputs = {{"composited", "composited.png"}};
    const auto j = m.to_json();
    EXPECT_EQ(j["stage"], "composite");
    EXPECT_EQ(j["inputs"].size(), 4u);
    EXPECT_EQ(j["outputs"]["composited"], "composited.png");
    EXPECT_TRUE(j["params"].is_object());
}
