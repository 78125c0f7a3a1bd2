#pragma once

#include "catalogstitch/backend.hpp"
#include "catalogstitch/dataset.hpp"
#include "catalogstitch/errors.hpp"
#include "catalogstitch/mask_geometry.hpp"
#include "catalogstitch/metrics.hpp"
#include "catalogstitch/occlusion.hpp"
#include "catalogstitch/png_io.hpp"
#include "catalogstitch/raster.hpp"

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace catalogstitch {

/// Target-mask strategy: the raw freeform mask, its tight bounding box, or
/// the dimension-aware rectangle.
enum class MaskMode { freeform, bbox, dim_aware };

inline const char* mask_mode_name(MaskMode m) {
    switch (m) {
    case MaskMode::freeform: return "freeform";
    case MaskMode::bbox: return "bbox";
    case MaskMode::dim_aware: return "dim-aware";
    }
    return "?";
}

struct PipelineConfig {
    double tau = 0.06;
    double tau_occ = 0.01;
    MaskMode mask_mode = MaskMode::dim_aware;
    bool restore_occluders = true;
    BackendSpec segment_backend = BackendSpec::builtin(MockVariant::oracle_segmenter);
    BackendSpec inpaint_backend = BackendSpec::builtin(MockVariant::nearest_fill_inpainter);
    BackendSpec composite_backend = BackendSpec::builtin(MockVariant::fit_inside_compositor);
    std::filesystem::path output_dir;
    int parallelism = 1;

    void validate() const {
        if (!(tau > 0.0 && tau <= 1.0))
            throw Error("config: tau must be in (0, 1]");
        if (!(tau_occ > 0.0 && tau_occ <= 1.0))
            throw Error("config: tau_occ must be in (0, 1]");
        if (parallelism < 1)
            throw Error("config: parallelism must be >= 1");
    }
};

struct RunFlags {
    bool adapted = false;
    bool clipped = false;
    int n_occluders = 0;

    bool operator==(const RunFlags&) const = default;
};

/// Everything one example run produced: artifact paths (relative to the
/// output directory), metrics, per-stage wall times, and status.
struct RunResult {
    std::string example_id;
    bool success = false;
    std::string error;
    std::vector<std::pair<std::string, std::string>> artifacts;
    MetricReport metrics;
    std::vector<std::pair<std::string, double>> timings_ms;
    RunFlags flags;

    const std::string* artifact(const std::string& role) const {
        for (const auto& [r, p] : artifacts)
            if (r == role) return &p;
        return nullptr;
    }
    double timing(const std::string& stage) const {
        for (const auto& [s, ms] : timings_ms)
            if (s == stage) return ms;
        return 0.0;
    }
};

inline bool operator==(const MetricReport& a, const MetricReport& b) {
    return a.ar_error_pct == b.ar_error_pct && a.occluder_psnr_db == b.occluder_psnr_db &&
           a.notes == b.notes;
}

inline bool operator==(const RunResult& a, const RunResult& b) {
    return a.example_id == b.example_id && a.success == b.success && a.error == b.error &&
           a.artifacts == b.artifacts && a.metrics == b.metrics &&
           a.timings_ms == b.timings_ms && a.flags == b.flags;
}

namespace detail {

class StageClock {
public:
    explicit StageClock(std::vector<std::pair<std::string, double>>& sink) : sink_(sink) {}

    template <typename Fn>
    void run(const char* stage, Fn&& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        sink_.emplace_back(stage, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    void skip(const char* stage) { sink_.emplace_back(stage, 0.0); }

private:
    std::vector<std::pair<std::string, double>>& sink_;
};

/// 256x256 thumbnail of the scene with the planned mask tinted red.
inline RasterImage mask_overlay_thumb(const RasterImage& bg, const BinaryMask& mask) {
    constexpr int kThumb = 256;
    RasterImage small_bg = scale_nearest(bg, kThumb, kThumb);
    BinaryMask small_mask = scale_nearest(mask, kThumb, kThumb);
    for (int y = 0; y < kThumb; ++y) {
        for (int x = 0; x < kThumb; ++x) {
            if (!small_mask.foreground(x, y)) continue;
            std::uint8_t* p = small_bg.pixel(x, y);
            p[0] = static_cast<std::uint8_t>((p[0] + 255) / 2);
            p[1] = static_cast<std::uint8_t>(p[1] / 2);
            p[2] = static_cast<std::uint8_t>(p[2] / 2);
        }
    }
    return small_bg;
}

inline std::string relative_to(const std::filesystem::path& target,
                               const std::filesystem::path& base) {
    std::error_code ec;
    std::filesystem::path rel = std::filesystem::relative(target, base, ec);
    if (ec || rel.empty())
        return target.generic_string();
    return rel.generic_string();
}

} // namespace detail

/// Run the full flow for one example: plan the target mask, optionally
/// segment/cache/inpaint occluders, composite, optionally restore, measure,
/// and write artifacts under `cfg.output_dir / rec.id`. Throws on failure;
/// batch-level isolation happens in run_batch.
inline RunResult run_example(const ExampleRecord& rec, const PipelineConfig& cfg) {
    cfg.validate();

    RunResult result;
    result.example_id = rec.id;
    detail::StageClock clock(result.timings_ms);

    RasterImage background, product;
    BinaryMask target_mask, product_mask;
    clock.run("load", [&] {
        background = load_image_png(rec.background);
        product = load_image_png(rec.product);
        target_mask = load_mask_png(rec.target_mask);
        product_mask = load_mask_png(rec.product_mask);
        if (target_mask.width != background.width || target_mask.height != background.height)
            throw DimensionMismatchError("target mask " +
                                         shape_string(target_mask.width, target_mask.height) +
                                         " vs background " +
                                         shape_string(background.width, background.height));
        if (product_mask.width != product.width || product_mask.height != product.height)
            throw DimensionMismatchError("product mask " +
                                         shape_string(product_mask.width, product_mask.height) +
                                         " vs product " +
                                         shape_string(product.width, product.height));
    });

    MaskPlan plan;
    clock.run("mask_plan", [&] {
        switch (cfg.mask_mode) {
        case MaskMode::freeform: {
            const BBox box = mask_to_bbox(target_mask);
            plan = MaskPlan{target_mask, box, false, false,
                            static_cast<double>(box.w), static_cast<double>(box.h)};
            break;
        }
        case MaskMode::bbox: {
            const BBox box = mask_to_bbox(target_mask);
            plan = MaskPlan{rect_mask(background.width, background.height, box), box,
                            false, false, static_cast<double>(box.w),
                            static_cast<double>(box.h)};
            break;
        }
        case MaskMode::dim_aware:
            plan = compute_dimension_aware_mask(target_mask, product_mask, background.width,
                                                background.height,
                                                AspectRatioPolicy{cfg.tau});
            break;
        }
    });
    result.flags.adapted = plan.adapted;
    result.flags.clipped = plan.clipped;

    // Occluder handling (segment -> detect -> cache -> inpaint), against the
    // adapted mask's box.
    std::vector<EntityInstance> entities;
    OccluderCache cache;
    RasterImage compositor_input = background;
    if (cfg.restore_occluders) {
        clock.run("segment", [&] {
            BackendSpec spec = cfg.segment_backend;
            if (spec.kind == BackendKind::builtin_mock && spec.oracle_mask_files.empty() &&
                spec.oracle_mask_dir.empty())
                spec.oracle_mask_files = rec.occluder_masks;
            entities = run_segmenter(background, spec);
        });
        std::vector<EntityInstance> occluders;
        clock.run("detect", [&] {
            occluders = detect_occluders(entities, plan.bbox, cfg.tau_occ);
        });
        clock.run("cache", [&] { cache = build_cache(background, occluders, plan.bbox); });
        result.flags.n_occluders = static_cast<int>(cache.entries.size());
        if (!cache.empty()) {
            clock.run("inpaint", [&] {
                compositor_input = run_inpainter(background, cache.union_mask,
                                                 cfg.inpaint_backend);
            });
        } else {
            clock.skip("inpaint");
        }
    } else {
        clock.skip("segment");
        clock.skip("detect");
        clock.skip("cache");
        clock.skip("inpaint");
    }

    RasterImage composited;
    clock.run("composite", [&] {
        composited = run_compositor(compositor_input, product, product_mask, plan.mask,
                                    cfg.composite_backend);
    });

    RasterImage final_image;
    bool restored = false;
    if (cfg.restore_occluders && !cache.empty()) {
        clock.run("restore", [&] {
            final_image = restore(composited, cache);
            restored = true;
        });
    } else {
        clock.skip("restore");
        final_image = composited;
    }

    clock.run("metrics", [&] {
        if (plan.clipped)
            result.metrics.notes.push_back("clipped mask");
        if (rec.category == Category::dimension) {
            const double ar_in = aspect_ratio(mask_to_bbox(product_mask));
            try {
                const BBox obox = output_object_bbox(final_image, compositor_input, plan.bbox);
                result.metrics.ar_error_pct = ar_error(ar_in, aspect_ratio(obox));
            } catch (const NoObjectFoundError&) {
                result.metrics.notes.push_back("no object found");
            }
        } else {
            if (rec.occluder_masks.empty()) {
                result.metrics.notes.push_back("no occluders");
            } else {
                BinaryMask psnr_mask;
                for (const auto& path : rec.occluder_masks) {
                    BinaryMask m = load_mask_png(path);
                    psnr_mask = psnr_mask.width == 0 ? std::move(m)
                                                     : mask_union(psnr_mask, m);
                }
                if (foreground_count(psnr_mask) == 0)
                    result.metrics.notes.push_back("no occluders");
                else
                    result.metrics.occluder_psnr_db =
                        masked_psnr(final_image, background, psnr_mask);
            }
        }
    });

    clock.run("write", [&] {
        const std::filesystem::path dir = cfg.output_dir / rec.id;
        std::filesystem::create_directories(dir);
        auto add = [&](const std::string& role, const std::string& rel) {
            result.artifacts.emplace_back(role, rel);
        };

        add("background", detail::relative_to(rec.background, cfg.output_dir));
        add("product", detail::relative_to(rec.product, cfg.output_dir));

        save_png(dir / "adapted_mask.png", plan.mask);
        add("adapted_mask", rec.id + "/adapted_mask.png");

        save_png(dir / "mask_overlay.png", detail::mask_overlay_thumb(background, plan.mask));
        add("mask_overlay", rec.id + "/mask_overlay.png");

        if (cfg.restore_occluders && !cache.empty()) {
            save_png(dir / "occluder_union.png", cache.union_mask);
            add("occluder_union", rec.id + "/occluder_union.png");
            save_png(dir / "inpainted_bg.png", compositor_input);
            add("inpainted_bg", rec.id + "/inpainted_bg.png");
        }

        save_png(dir / "composited.png", composited);
        add("composited", rec.id + "/composited.png");
        if (cfg.restore_occluders)
            add("before_restore", rec.id + "/composited.png");

        if (restored) {
            save_png(dir / "final.png", final_image);
            add("final", rec.id + "/final.png");
        } else {
            add("final", rec.id + "/composited.png");
        }
    });

    result.success = true;
    return result;
}

/// Run a batch with up to cfg.parallelism examples in flight. Results come
/// back in input order; a failing example is recorded and does not abort the
/// rest.
inline std::vector<RunResult> run_batch(const std::vector<ExampleRecord>& records,
                                        const PipelineConfig& cfg) {
    cfg.validate();
    std::vector<RunResult> results(records.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= records.size()) return;
            try {
                results[i] = run_example(records[i], cfg);
            } catch (const std::exception& e) {
                RunResult failed;
                failed.example_id = records[i].id;
                failed.success = false;
                failed.error = "example " + records[i].id + ": " + e.what();
                results[i] = std::move(failed);
            }
        }
    };

    const int n_threads = std::min<int>(cfg.parallelism, static_cast<int>(records.size()));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(n_threads);
        for (int t = 0; t < n_threads; ++t)
            threads.emplace_back(worker);
        for (auto& t : threads)
            t.join();
    }
    return results;
}

struct BatchAggregates {
    std::optional<double> mean_ar_error_pct;
    std::optional<double> mean_occluder_psnr_db;
    int n_success = 0;
    int n_failed = 0;
};

inline BatchAggregates aggregate(const std::vector<RunResult>& results) {
    BatchAggregates agg;
    double ar_sum = 0.0, psnr_sum = 0.0;
    int ar_n = 0, psnr_n = 0;
    for (const RunResult& r : results) {
        if (!r.success) {
            ++agg.n_failed;
            continue;
        }
        ++agg.n_success;
        if (r.metrics.ar_error_pct) {
            ar_sum += *r.metrics.ar_error_pct;
            ++ar_n;
        }
        if (r.metrics.occluder_psnr_db) {
            psnr_sum += *r.metrics.occluder_psnr_db;
            ++psnr_n;
        }
    }
    if (ar_n > 0) agg.mean_ar_error_pct = ar_sum / ar_n;
    if (psnr_n > 0) agg.mean_occluder_psnr_db = psnr_sum / psnr_n;
    return agg;
}

} // namespace catalogstitch
