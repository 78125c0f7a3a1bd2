#pragma once

#include "catalogstitch/errors.hpp"
#include "catalogstitch/occlusion.hpp"
#include "catalogstitch/png_io.hpp"
#include "catalogstitch/raster.hpp"

#include <json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace catalogstitch {

enum class Stage { segment, inpaint, composite };

inline const char* stage_name(Stage s) {
    switch (s) {
    case Stage::segment: return "segment";
    case Stage::inpaint: return "inpaint";
    case Stage::composite: return "composite";
    }
    return "?";
}

enum class BackendKind { external_command, builtin_mock };

enum class MockVariant {
    oracle_segmenter,
    nearest_fill_inpainter,
    fit_inside_compositor,
    stretch_fill_compositor,
};

/// How one generative stage is fulfilled: a deterministic built-in mock, or
/// an external command invoked with a single argument (the manifest path).
struct BackendSpec {
    BackendKind kind = BackendKind::builtin_mock;
    std::vector<std::string> command;                       // external only
    MockVariant mock_variant = MockVariant::oracle_segmenter;
    std::filesystem::path oracle_mask_dir;                  // oracle_segmenter only
    std::vector<std::filesystem::path> oracle_mask_files;   // overrides the dir scan
    std::filesystem::path work_root;                        // empty -> system temp dir
    nlohmann::json params = nlohmann::json::object();

    static BackendSpec builtin(MockVariant v) {
        BackendSpec s;
        s.kind = BackendKind::builtin_mock;
        s.mock_variant = v;
        return s;
    }
    static BackendSpec external(std::vector<std::string> argv) {
        BackendSpec s;
        s.kind = BackendKind::external_command;
        s.command = std::move(argv);
        return s;
    }
};

/// Wire contract for one backend invocation. Serialized as manifest.json in
/// the invocation's working directory; every referenced path is relative to
/// that directory.
struct BackendManifest {
    Stage stage = Stage::segment;
    std::map<std::string, std::string> inputs;
    std::map<std::string, std::string> outputs;
    nlohmann::json params = nlohmann::json::object();

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["stage"] = stage_name(stage);
        j["inputs"] = inputs;
        j["outputs"] = outputs;
        j["params"] = params;
        return j;
    }
};

// ---------------------------------------------------------------------------
// Built-in mocks
// ---------------------------------------------------------------------------

/// Builds entities from explicit per-entity grayscale mask PNGs. Masks that
/// are empty after binarization are dropped with a warning.
inline std::vector<EntityInstance> oracle_segment_files(
    const RasterImage& background, const std::vector<std::filesystem::path>& files) {
    std::vector<EntityInstance> entities;
    for (const auto& f : files) {
        BinaryMask m = load_mask_png(f);
        if (m.width != background.width || m.height != background.height)
            throw ContractViolation("segmenter: entity mask " + f.filename().string() +
                                    " is " + shape_string(m.width, m.height) +
                                    ", background is " +
                                    shape_string(background.width, background.height));
        if (foreground_count(m) == 0) {
            std::fprintf(stderr, "[catalogstitch] dropping empty entity mask %s\n",
                         f.filename().string().c_str());
            continue;
        }
        entities.push_back(EntityInstance::from_mask(f.stem().string(), std::move(m)));
    }
    return entities;
}

/// Reads one grayscale mask PNG per entity from `dir`, in filename order.
inline std::vector<EntityInstance> oracle_segment(const RasterImage& background,
                                                  const std::filesystem::path& dir) {
    if (dir.empty() || !std::filesystem::exists(dir))
        return {};
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".png")
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    return oracle_segment_files(background, files);
}

/// Fill every masked pixel with the value of its nearest background pixel in
/// Euclidean distance; ties go to the smaller row, then the smaller column.
/// Exact: per-column nearest background rows, then a horizontal expanding
/// search with lexicographic (distance^2, row, column) comparison, all in
/// integer arithmetic.
inline RasterImage nearest_fill_inpaint(const RasterImage& background,
                                        const BinaryMask& mask) {
    const int w = background.width, h = background.height;
    constexpr int kNone = std::numeric_limits<int>::max();

    if (foreground_count(mask) == static_cast<std::int64_t>(w) * h)
        throw BackendFailure("inpaint mock: mask covers the entire image, no source pixels");

    // vert_d[y*w+x]: vertical distance from (x, y) to the nearest background
    // pixel within column x; vert_r: that pixel's row. Row ties prefer the
    // smaller row, matching the global tie-break.
    std::vector<int> vert_d(static_cast<std::size_t>(w) * h, kNone);
    std::vector<int> vert_r(static_cast<std::size_t>(w) * h, -1);
    for (int x = 0; x < w; ++x) {
        int last = -1;
        for (int y = 0; y < h; ++y) {
            if (!mask.foreground(x, y)) last = y;
            if (last >= 0) {
                vert_d[mask.index(x, y)] = y - last;
                vert_r[mask.index(x, y)] = last;
            }
        }
        int next = -1;
        for (int y = h - 1; y >= 0; --y) {
            if (!mask.foreground(x, y)) next = y;
            if (next >= 0) {
                const std::size_t i = mask.index(x, y);
                const int d = next - y;
                if (d < vert_d[i]) { // strict: on a tie the smaller row (above) wins
                    vert_d[i] = d;
                    vert_r[i] = next;
                }
            }
        }
    }

    RasterImage out = background;
    const int ch = background.channels;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask.foreground(x, y)) continue;

            std::int64_t best_d2 = std::numeric_limits<std::int64_t>::max();
            int best_row = std::numeric_limits<int>::max();
            int best_col = std::numeric_limits<int>::max();
            for (int dx = 0;; ++dx) {
                const std::int64_t dx2 = static_cast<std::int64_t>(dx) * dx;
                if (dx2 > best_d2) break;
                bool any_column = false;
                const int cols[2] = {x - dx, x + dx};
                const int n_cols = dx == 0 ? 1 : 2;
                for (int ci = 0; ci < n_cols; ++ci) {
                    const int xc = cols[ci];
                    if (xc < 0 || xc >= w) continue;
                    any_column = true;
                    const std::size_t i = mask.index(xc, y);
                    if (vert_d[i] == kNone) continue;
                    const std::int64_t d2 =
                        dx2 + static_cast<std::int64_t>(vert_d[i]) * vert_d[i];
                    const int row = vert_r[i];
                    if (d2 < best_d2 ||
                        (d2 == best_d2 &&
                         (row < best_row || (row == best_row && xc < best_col)))) {
                        best_d2 = d2;
                        best_row = row;
                        best_col = xc;
                    }
                }
                if (!any_column && dx > w) break; // ran off both sides
            }
            if (best_d2 == std::numeric_limits<std::int64_t>::max())
                throw BackendFailure("inpaint mock: no background pixel reachable");

            const std::uint8_t* src = background.pixel(best_col, best_row);
            std::copy(src, src + ch, out.pixel(x, y));
        }
    }
    return out;
}

namespace detail {

// Largest integer size with the crop's aspect ratio that fits the box.
// Pure integer arithmetic: floor(crop_h * box_w / crop_w) etc.
inline std::pair<int, int> fit_scale(int crop_w, int crop_h, int box_w, int box_h) {
    const std::int64_t lhs = static_cast<std::int64_t>(box_w) * crop_h;
    const std::int64_t rhs = static_cast<std::int64_t>(box_h) * crop_w;
    int sw, sh;
    if (lhs <= rhs) { // width-limited
        sw = box_w;
        sh = static_cast<int>(lhs / crop_w);
    } else { // height-limited
        sh = box_h;
        sw = static_cast<int>(rhs / crop_h);
    }
    return {std::max(1, sw), std::max(1, sh)};
}

} // namespace detail

/// Scale the product crop uniformly to the largest size fitting the target
/// box (aspect ratio preserved), center it there, hard-paste it.
inline RasterImage fit_inside_composite(const RasterImage& background,
                                        const RasterImage& product,
                                        const BinaryMask& product_mask,
                                        const BinaryMask& target_mask) {
    const BBox box = mask_to_bbox(target_mask);
    const BBox pbox = mask_to_bbox(product_mask);
    const RasterImage pcrop = crop(product, pbox);
    const BinaryMask mcrop = crop(product_mask, pbox);

    const auto [sw, sh] = detail::fit_scale(pbox.w, pbox.h, box.w, box.h);
    const RasterImage scaled = scale_nearest(pcrop, sw, sh);
    const BinaryMask scaled_mask = scale_nearest(mcrop, sw, sh);
    const BBox at{box.x + (box.w - sw) / 2, box.y + (box.h - sh) / 2, sw, sh};
    return alpha_paste(background, scaled, scaled_mask, at);
}

/// Scale the product crop anisotropically to exactly fill the target box,
/// distorting its aspect ratio (the naive-mask baseline behaviour).
inline RasterImage stretch_fill_composite(const RasterImage& background,
                                          const RasterImage& product,
                                          const BinaryMask& product_mask,
                                          const BinaryMask& target_mask) {
    const BBox box = mask_to_bbox(target_mask);
    const BBox pbox = mask_to_bbox(product_mask);
    const RasterImage scaled = scale_nearest(crop(product, pbox), box.w, box.h);
    const BinaryMask scaled_mask = scale_nearest(crop(product_mask, pbox), box.w, box.h);
    return alpha_paste(background, scaled, scaled_mask, BBox{box.x, box.y, box.w, box.h});
}

// ---------------------------------------------------------------------------
// External-command protocol
// ---------------------------------------------------------------------------

namespace detail {

inline std::filesystem::path make_work_dir(const BackendSpec& spec, Stage stage) {
    static std::atomic<std::uint64_t> counter{0};
    const std::filesystem::path root =
        spec.work_root.empty() ? std::filesystem::temp_directory_path() : spec.work_root;
    std::filesystem::path dir =
        root / ("catalogstitch-" + std::string(stage_name(stage)) + "-" +
                std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(dir);
    return dir;
}

inline int run_command(const std::vector<std::string>& argv) {
    std::vector<char*> cargv;
    cargv.reserve(argv.size() + 1);
    for (const std::string& a : argv)
        cargv.push_back(const_cast<char*>(a.c_str()));
    cargv.push_back(nullptr);

    const pid_t pid = ::fork();
    if (pid < 0)
        throw BackendFailure("fork failed");
    if (pid == 0) {
        ::execvp(cargv[0], cargv.data());
        ::_exit(127);
    }
    int status = 0;
    if (::waitpid(pid, &status, 0) < 0)
        throw BackendFailure("waitpid failed");
    if (WIFEXITED(status))
        return WEXITSTATUS(status);
    return -1;
}

/// Write the manifest, run the command, and verify the declared outputs
/// exist. The working directory is retained when anything fails so the
/// failure can be inspected.
inline void run_external(const BackendSpec& spec, const BackendManifest& manifest,
                         const std::filesystem::path& workdir) {
    {
        std::ofstream out(workdir / "manifest.json");
        out << manifest.to_json().dump(2) << "\n";
    }
    std::vector<std::string> argv = spec.command;
    if (argv.empty())
        throw BackendFailure("external backend has an empty command");
    argv.push_back((workdir / "manifest.json").string());

    const int rc = run_command(argv);
    if (rc != 0)
        throw BackendFailure("backend '" + spec.command.front() + "' exited with code " +
                             std::to_string(rc) + " (workdir retained: " +
                             workdir.string() + ")");
    for (const auto& [role, rel] : manifest.outputs) {
        if (!std::filesystem::exists(workdir / rel))
            throw BackendFailure("backend '" + spec.command.front() +
                                 "' did not produce output '" + role + "' (" + rel +
                                 "); workdir retained: " + workdir.string());
    }
}

struct WorkDirGuard {
    std::filesystem::path dir;
    bool keep = false;
    ~WorkDirGuard() {
        if (!keep && !dir.empty()) {
            std::error_code ec;
            std::filesystem::remove_all(dir, ec);
        }
    }
};

} // namespace detail

/// Run the segmentation stage. The oracle mock enumerates per-entity mask
/// PNGs from spec.oracle_mask_dir; an external command receives the
/// background and must write entities/NNN.png full-frame grayscale masks.
inline std::vector<EntityInstance> run_segmenter(const RasterImage& background,
                                                 const BackendSpec& spec) {
    if (spec.kind == BackendKind::builtin_mock) {
        if (spec.mock_variant != MockVariant::oracle_segmenter)
            throw BackendFailure("segment stage configured with a non-segmenter mock");
        if (!spec.oracle_mask_files.empty())
            return oracle_segment_files(background, spec.oracle_mask_files);
        return oracle_segment(background, spec.oracle_mask_dir);
    }

    detail::WorkDirGuard guard{detail::make_work_dir(spec, Stage::segment), true};
    save_png(guard.dir / "background.png", background);

    BackendManifest manifest;
    manifest.stage = Stage::segment;
    manifest.inputs = {{"background", "background.png"}};
    manifest.outputs = {{"entities_dir", "entities"}};
    manifest.params = spec.params;
    detail::run_external(spec, manifest, guard.dir);

    std::vector<EntityInstance> entities;
    try {
        entities = oracle_segment(background, guard.dir / "entities");
    } catch (const FormatError& e) {
        throw BackendFailure(std::string("segmenter output unreadable: ") + e.what() +
                             "; workdir retained: " + guard.dir.string());
    }
    guard.keep = false;
    return entities;
}

/// Run the inpainting stage over the mask foreground. Output must match the
/// input dimensions and leave every unmasked pixel byte-identical; that
/// contract is checked for mocks and external commands alike.
inline RasterImage run_inpainter(const RasterImage& background, const BinaryMask& mask,
                                 const BackendSpec& spec) {
    if (mask.width != background.width || mask.height != background.height)
        throw DimensionMismatchError("run_inpainter: mask " +
                                     shape_string(mask.width, mask.height) +
                                     " vs background " +
                                     shape_string(background.width, background.height));

    RasterImage result;
    detail::WorkDirGuard guard;
    if (spec.kind == BackendKind::builtin_mock) {
        if (spec.mock_variant != MockVariant::nearest_fill_inpainter)
            throw BackendFailure("inpaint stage configured with a non-inpainter mock");
        result = nearest_fill_inpaint(background, mask);
    } else {
        guard.dir = detail::make_work_dir(spec, Stage::inpaint);
        guard.keep = true;
        save_png(guard.dir / "background.png", background);
        save_png(guard.dir / "mask.png", mask);

        BackendManifest manifest;
        manifest.stage = Stage::inpaint;
        manifest.inputs = {{"background", "background.png"}, {"mask", "mask.png"}};
        manifest.outputs = {{"inpainted", "inpainted.png"}};
        manifest.params = spec.params;
        detail::run_external(spec, manifest, guard.dir);

        try {
            result = load_image_png(guard.dir / "inpainted.png");
        } catch (const Error& e) {
            throw BackendFailure(std::string("inpainter output unreadable: ") + e.what() +
                                 "; workdir retained: " + guard.dir.string());
        }
    }

    if (!result.same_shape(background))
        throw ContractViolation("inpainter changed image shape");
    for (int y = 0; y < background.height; ++y) {
        for (int x = 0; x < background.width; ++x) {
            if (mask.foreground(x, y)) continue;
            const std::uint8_t* a = result.pixel(x, y);
            const std::uint8_t* b = background.pixel(x, y);
            if (!std::equal(a, a + background.channels, b))
                throw ContractViolation("inpainter altered unmasked pixel (" +
                                        std::to_string(x) + "," + std::to_string(y) +
                                        ")" +
                                        (guard.dir.empty()
                                             ? std::string()
                                             : "; workdir retained: " + guard.dir.string()));
        }
    }
    guard.keep = false;
    return result;
}

/// Run the compositing stage: insert the product into the background inside
/// the target mask. Output dimensions must equal the background's.
inline RasterImage run_compositor(const RasterImage& background, const RasterImage& product,
                                  const BinaryMask& product_mask,
                                  const BinaryMask& target_mask, const BackendSpec& spec) {
    if (target_mask.width != background.width || target_mask.height != background.height)
        throw DimensionMismatchError("run_compositor: target mask " +
                                     shape_string(target_mask.width, target_mask.height) +
                                     " vs background " +
                                     shape_string(background.width, background.height));
    if (product_mask.width != product.width || product_mask.height != product.height)
        throw DimensionMismatchError("run_compositor: product mask " +
                                     shape_string(product_mask.width, product_mask.height) +
                                     " vs product " +
                                     shape_string(product.width, product.height));

    RasterImage result;
    detail::WorkDirGuard guard;
    if (spec.kind == BackendKind::builtin_mock) {
        switch (spec.mock_variant) {
        case MockVariant::fit_inside_compositor:
            result = fit_inside_composite(background, product, product_mask, target_mask);
            break;
        case MockVariant::stretch_fill_compositor:
            result = stretch_fill_composite(background, product, product_mask, target_mask);
            break;
        default:
            throw BackendFailure("composite stage configured with a non-compositor mock");
        }
    } else {
        guard.dir = detail::make_work_dir(spec, Stage::composite);
        guard.keep = true;
        save_png(guard.dir / "background.png", background);
        save_png(guard.dir / "product.png", product);
        save_png(guard.dir / "product_mask.png", product_mask);
        save_png(guard.dir / "target_mask.png", target_mask);

        BackendManifest manifest;
        manifest.stage = Stage::composite;
        manifest.inputs = {{"background", "background.png"},
                           {"product", "product.png"},
                           {"product_mask", "product_mask.png"},
                           {"target_mask", "target_mask.png"}};
        manifest.outputs = {{"composited", "composited.png"}};
        manifest.params = spec.params;
        detail::run_external(spec, manifest, guard.dir);

        try {
            result = load_image_png(guard.dir / "composited.png");
        } catch (const Error& e) {
            throw BackendFailure(std::string("compositor output unreadable: ") + e.what() +
                                 "; workdir retained: " + guard.dir.string());
        }
    }

    if (!result.same_shape(background))
        throw ContractViolation("compositor changed image shape" +
                                (guard.dir.empty()
                                     ? std::string()
                                     : "; workdir retained: " + guard.dir.string()));
    guard.keep = false;
    return result;
}

} // namespace catalogstitch
