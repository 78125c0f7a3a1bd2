#pragma once

#include "catalogstitch/dataset.hpp"
#include "catalogstitch/errors.hpp"
#include "catalogstitch/mask_geometry.hpp"
#include "catalogstitch/png_io.hpp"
#include "catalogstitch/raster.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace catalogstitch {
namespace fixtures_detail {

// Bounded draws go through these helpers instead of std distributions so the
// byte stream depends only on the mt19937_64 sequence, which the standard
// pins down exactly.
inline int rand_int(std::mt19937_64& rng, int lo, int hi) {
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

inline double rand_double(std::mt19937_64& rng, double lo, double hi) {
    const double u = static_cast<double>(rng() >> 11) * 0x1p-53;
    return lo + u * (hi - lo);
}

inline std::uint32_t pixel_hash(std::uint32_t x, std::uint32_t y, std::uint32_t salt) {
    std::uint32_t h = x * 0x9E3779B1u ^ y * 0x85EBCA77u ^ salt * 0xC2B2AE3Du;
    h ^= h >> 16;
    h *= 0x7FEB352Du;
    h ^= h >> 15;
    h *= 0x846CA68Bu;
    h ^= h >> 16;
    return h;
}

inline std::uint8_t clamp_u8(int v) {
    return static_cast<std::uint8_t>(std::clamp(v, 0, 255));
}

/// Dark textured scene background: base color, gentle gradient, hash noise.
/// Values stay below 120 so composited products (>= 150) always clear the
/// difference threshold used by the metrics.
inline RasterImage make_background(std::mt19937_64& rng, int w, int h) {
    RasterImage img(w, h, 3);
    int base[3], gx[3], gy[3];
    for (int c = 0; c < 3; ++c) {
        base[c] = rand_int(rng, 30, 88);
        gx[c] = rand_int(rng, -24, 24);
        gy[c] = rand_int(rng, -24, 24);
    }
    const std::uint32_t salt = static_cast<std::uint32_t>(rng());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::uint8_t* p = img.pixel(x, y);
            const int noise = static_cast<int>(pixel_hash(x, y, salt) % 25) - 12;
            for (int c = 0; c < 3; ++c) {
                const int v = base[c] + gx[c] * x / w + gy[c] * y / h + noise;
                p[c] = clamp_u8(std::clamp(v, 0, 119));
            }
        }
    }
    return img;
}

enum class Shape { rect, ellipse };

/// Foreground test for a shape inscribed in `box`, pixel-center convention.
inline bool shape_contains(Shape s, const BBox& box, int x, int y) {
    if (x < box.x || x >= box.right() || y < box.y || y >= box.bottom())
        return false;
    if (s == Shape::rect)
        return true;
    const double cx = box.x + box.w / 2.0;
    const double cy = box.y + box.h / 2.0;
    const double nx = (x + 0.5 - cx) / (box.w / 2.0);
    const double ny = (y + 0.5 - cy) / (box.h / 2.0);
    return nx * nx + ny * ny <= 1.0;
}

inline void draw_shape_mask(BinaryMask& m, Shape s, const BBox& box) {
    for (int y = std::max(0, box.y); y < std::min(m.height, box.bottom()); ++y)
        for (int x = std::max(0, box.x); x < std::min(m.width, box.right()); ++x)
            if (shape_contains(s, box, x, y))
                m.set(x, y, 255);
}

inline void draw_shape_color(RasterImage& img, Shape s, const BBox& box, const int rgb[3],
                             std::uint32_t noise_salt, int noise_amp) {
    for (int y = std::max(0, box.y); y < std::min(img.height, box.bottom()); ++y) {
        for (int x = std::max(0, box.x); x < std::min(img.width, box.right()); ++x) {
            if (!shape_contains(s, box, x, y)) continue;
            std::uint8_t* p = img.pixel(x, y);
            const int noise = noise_amp > 0
                                  ? static_cast<int>(pixel_hash(x, y, noise_salt) %
                                                     (2 * noise_amp + 1)) - noise_amp
                                  : 0;
            for (int c = 0; c < 3; ++c)
                p[c] = clamp_u8(rgb[c] + noise);
        }
    }
}

/// Irregular target blob whose tight bounding box is exactly `box`: an
/// inscribed ellipse (touching all four edges at their midpoints) plus a few
/// random interior rectangles.
inline BinaryMask make_target_blob(std::mt19937_64& rng, int w, int h, const BBox& box) {
    BinaryMask m(w, h, 0);
    draw_shape_mask(m, Shape::ellipse, box);
    const int n_bumps = rand_int(rng, 2, 4);
    for (int i = 0; i < n_bumps; ++i) {
        const int bw = rand_int(rng, box.w / 5, std::max(box.w / 5, box.w / 2));
        const int bh = rand_int(rng, box.h / 5, std::max(box.h / 5, box.h / 2));
        const int bx = box.x + rand_int(rng, 0, std::max(0, box.w - bw));
        const int by = box.y + rand_int(rng, 0, std::max(0, box.h - bh));
        draw_shape_mask(m, Shape::rect, BBox{bx, by, bw, bh});
    }
    return m;
}

/// Product shot: light studio canvas with one flat-shaded shape.
struct ProductScene {
    RasterImage image;
    BinaryMask mask;
    BBox bbox; // tight box of the shape within the canvas
};

inline ProductScene make_product(std::mt19937_64& rng, int pw, int ph, Shape shape) {
    const int margin = rand_int(rng, 12, 40);
    const int cw = pw + 2 * margin;
    const int chh = ph + 2 * margin;
    ProductScene p;
    p.image = RasterImage(cw, chh, 3);
    const std::uint32_t salt = static_cast<std::uint32_t>(rng());
    for (int y = 0; y < chh; ++y) {
        for (int x = 0; x < cw; ++x) {
            std::uint8_t* px = p.image.pixel(x, y);
            const int v = 233 + static_cast<int>(pixel_hash(x, y, salt) % 9) - 4;
            px[0] = px[1] = px[2] = clamp_u8(v);
        }
    }
    int rgb[3];
    for (int c = 0; c < 3; ++c)
        rgb[c] = rand_int(rng, 150, 190);
    p.bbox = BBox{margin, margin, pw, ph};
    p.mask = BinaryMask(cw, chh, 0);
    draw_shape_mask(p.mask, shape, p.bbox);
    draw_shape_color(p.image, shape, p.bbox, rgb, salt ^ 0xA5A5A5A5u, 6);
    return p;
}

inline std::string padded(const char* prefix, int i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s_%03d", prefix, i);
    return buf;
}

inline nlohmann::ordered_json bbox_json(const BBox& b) {
    return nlohmann::ordered_json::array({b.x, b.y, b.w, b.h});
}

} // namespace fixtures_detail

/// Deterministically synthesize a benchmark-shaped dataset under `root`:
/// `n_dimension` aspect-ratio-mismatch scenes and `n_occlusion` scenes with
/// 1-2 foreground occluders overlapping the target. Scenes are 1024x1024.
/// Identical (seed, counts) produce byte-identical trees. Each example gets
/// a truth.json sidecar with the exact placements used.
inline std::vector<ExampleRecord> generate_fixtures(const std::filesystem::path& root,
                                                    std::uint64_t seed,
                                                    int n_dimension = 35,
                                                    int n_occlusion = 23) {
    namespace fd = fixtures_detail;
    const int W = 1024, H = 1024;
    std::mt19937_64 rng(seed);
    std::filesystem::create_directories(root);

    nlohmann::ordered_json index;
    index["examples"] = nlohmann::ordered_json::array();

    auto add_example = [&](const std::string& id, Category cat,
                           const std::vector<std::string>& occ_files) {
        nlohmann::ordered_json e;
        e["id"] = id;
        e["category"] = category_name(cat);
        e["background"] = id + "/background.png";
        e["product"] = id + "/product.png";
        e["target_mask"] = id + "/target_mask.png";
        e["product_mask"] = id + "/product_mask.png";
        e["occluder_masks"] = occ_files;
        index["examples"].push_back(std::move(e));
    };

    // --- dimension-mismatch scenes ---------------------------------------
    for (int i = 0; i < n_dimension; ++i) {
        const std::string id = fd::padded("dim", i);
        const std::filesystem::path dir = root / id;
        std::filesystem::create_directories(dir);

        // Sample until the expanded box is guaranteed unclipped and both
        // ideal extents are large enough that rounding keeps the achievable
        // AR error well under 1%.
        BBox tbox;
        int pw = 0, ph = 0;
        BinaryMask blob;
        fd::Shape product_shape = fd::Shape::rect;
        for (int attempt = 0;; ++attempt) {
            if (attempt > 200)
                throw Error("fixture generation failed to satisfy constraints (dimension)");
            const int th = fd::rand_int(rng, 170, 330);
            const double ar_t = fd::rand_double(rng, 0.35, 2.6);
            const int tw = std::clamp(static_cast<int>(std::lround(th * ar_t)), 170, 700);
            const double ar_t_actual = static_cast<double>(tw) / th;

            const double delta = fd::rand_double(rng, 0.12, 3.0);
            const double sign = (rng() & 1) ? 1.0 : -1.0;
            const double ar_p_goal = std::clamp(ar_t_actual + sign * delta, 0.25, 3.2);
            ph = fd::rand_int(rng, 120, 280);
            pw = std::max(30, static_cast<int>(std::lround(ph * ar_p_goal)));
            const double ar_p = static_cast<double>(pw) / ph;
            if (std::abs(ar_p - ar_t_actual) < 0.1)
                continue;

            const double ideal_w = std::max<double>(tw, th * ar_p);
            const double ideal_h = std::max<double>(th, tw / ar_p);
            if (ideal_w > 880.0 || ideal_h > 880.0)
                continue;
            if (ideal_w < 150.0 || ideal_h < 150.0)
                continue;

            const int cx = fd::rand_int(rng, 472, 552);
            const int cy = fd::rand_int(rng, 472, 552);
            tbox = BBox{cx - tw / 2, cy - th / 2, tw, th};
            blob = fd::make_target_blob(rng, W, H, tbox);
            product_shape = (rng() & 1) ? fd::Shape::rect : fd::Shape::ellipse;
            break;
        }

        fd::ProductScene product = fd::make_product(rng, pw, ph, product_shape);

        // Construction checks: blob tight box, adapted and unclipped plan.
        if (mask_to_bbox(blob) != tbox)
            throw Error("fixture generation: blob bbox drifted");
        const MaskPlan plan = compute_dimension_aware_mask(blob, product.mask, W, H);
        if (!plan.adapted || plan.clipped)
            throw Error("fixture generation: dimension plan not adapted/unclipped");

        RasterImage bg = fd::make_background(rng, W, H);
        save_png(dir / "background.png", bg);
        save_png(dir / "product.png", product.image);
        save_png(dir / "target_mask.png", blob);
        save_png(dir / "product_mask.png", product.mask);

        nlohmann::ordered_json truth;
        truth["id"] = id;
        truth["category"] = "dimension";
        truth["image_size"] = {W, H};
        truth["target_bbox"] = fd::bbox_json(tbox);
        truth["product_bbox"] = fd::bbox_json(product.bbox);
        truth["product_ar"] = static_cast<double>(product.bbox.w) / product.bbox.h;
        truth["occluders"] = nlohmann::ordered_json::array();
        std::ofstream(dir / "truth.json") << truth.dump(2) << "\n";

        add_example(id, Category::dimension, {});
    }

    // --- occlusion scenes --------------------------------------------------
    for (int i = 0; i < n_occlusion; ++i) {
        const std::string id = fd::padded("occ", i);
        const std::filesystem::path dir = root / id;
        std::filesystem::create_directories(dir);

        for (int attempt = 0;; ++attempt) {
            if (attempt > 400)
                throw Error("fixture generation failed to satisfy constraints (occlusion)");

            const int th = fd::rand_int(rng, 220, 380);
            const double ar_t = fd::rand_double(rng, 0.6, 1.8);
            const int tw = std::clamp(static_cast<int>(std::lround(th * ar_t)), 200, 640);
            const int cx = fd::rand_int(rng, 452, 572);
            const int cy = fd::rand_int(rng, 452, 572);
            const BBox tbox{cx - tw / 2, cy - th / 2, tw, th};

            // Product aspect close to the target's: adaptation may or may not
            // trigger, and the adapted box stays near the original. Products
            // are rectangles so the compositor covers its whole box.
            const double ar_t_actual = static_cast<double>(tw) / th;
            const double jitter = fd::rand_double(rng, -0.28, 0.28);
            const int ph = fd::rand_int(rng, 140, 260);
            const int pw = std::max(40, static_cast<int>(std::lround(
                                            ph * std::clamp(ar_t_actual + jitter, 0.4, 2.4))));
            const double ar_p = static_cast<double>(pw) / ph;
            const double ideal_w = std::max<double>(tw, th * ar_p);
            const double ideal_h = std::max<double>(th, tw / ar_p);
            if (ideal_w > 860.0 || ideal_h > 860.0)
                continue;

            BinaryMask blob = fd::make_target_blob(rng, W, H, tbox);
            fd::ProductScene product = fd::make_product(rng, pw, ph, fd::Shape::rect);
            const MaskPlan plan = compute_dimension_aware_mask(blob, product.mask, W, H);
            if (plan.clipped)
                continue;
            const BBox planned = plan.bbox;

            // 1-2 occluders centred on the target box boundary so a solid
            // chunk of each lies inside both the raw and the adapted box.
            const int n_occ = fd::rand_int(rng, 1, 2);
            std::vector<BBox> occ_boxes;
            std::vector<fd::Shape> occ_shapes;
            bool ok = true;
            for (int k = 0; k < n_occ; ++k) {
                const int ow = fd::rand_int(rng, 100, 220);
                const int oh = fd::rand_int(rng, 100, 220);
                const int edge = fd::rand_int(rng, 0, 3); // 0=L 1=R 2=T 3=B
                int ocx, ocy;
                if (edge == 0 || edge == 1) {
                    ocx = edge == 0 ? tbox.x : tbox.right();
                    ocy = tbox.y + fd::rand_int(rng, tbox.h / 5, 4 * tbox.h / 5);
                } else {
                    ocy = edge == 2 ? tbox.y : tbox.bottom();
                    ocx = tbox.x + fd::rand_int(rng, tbox.w / 5, 4 * tbox.w / 5);
                }
                const BBox obox{ocx - ow / 2, ocy - oh / 2, ow, oh};
                if (obox.x < 2 || obox.y < 2 || obox.right() > W - 2 || obox.bottom() > H - 2) {
                    ok = false;
                    break;
                }
                if (bbox_iou(obox, tbox) <= 0.015 || bbox_iou(obox, planned) <= 0.015) {
                    ok = false;
                    break;
                }
                occ_boxes.push_back(obox);
                occ_shapes.push_back((rng() & 1) ? fd::Shape::rect : fd::Shape::ellipse);
            }
            if (!ok)
                continue;

            RasterImage bg = fd::make_background(rng, W, H);
            std::vector<std::string> occ_files;
            std::vector<BinaryMask> occ_masks;
            for (int k = 0; k < n_occ; ++k) {
                int rgb[3];
                for (int c = 0; c < 3; ++c)
                    rgb[c] = fd::rand_int(rng, 205, 250);
                const std::uint32_t salt = static_cast<std::uint32_t>(rng());
                fd::draw_shape_color(bg, occ_shapes[k], occ_boxes[k], rgb, salt, 8);
                BinaryMask om(W, H, 0);
                fd::draw_shape_mask(om, occ_shapes[k], occ_boxes[k]);
                occ_masks.push_back(std::move(om));
            }

            // Each occluder must genuinely intrude into the planned region.
            bool overlap_ok = true;
            for (int k = 0; k < n_occ; ++k) {
                std::int64_t inside = 0;
                for (int y = planned.y; y < planned.bottom() && inside < 200; ++y)
                    for (int x = planned.x; x < planned.right(); ++x)
                        if (occ_masks[k].foreground(x, y)) ++inside;
                if (inside < 200) {
                    overlap_ok = false;
                    break;
                }
            }
            if (!overlap_ok)
                continue;

            save_png(dir / "background.png", bg);
            save_png(dir / "product.png", product.image);
            save_png(dir / "target_mask.png", blob);
            save_png(dir / "product_mask.png", product.mask);
            for (int k = 0; k < n_occ; ++k) {
                const std::string name = fd::padded("occluder", k) + ".png";
                save_png(dir / name, occ_masks[k]);
                occ_files.push_back(id + "/" + name);
            }

            nlohmann::ordered_json truth;
            truth["id"] = id;
            truth["category"] = "occlusion";
            truth["image_size"] = {W, H};
            truth["target_bbox"] = fd::bbox_json(tbox);
            truth["product_bbox"] = fd::bbox_json(product.bbox);
            truth["product_ar"] = static_cast<double>(product.bbox.w) / product.bbox.h;
            truth["occluders"] = nlohmann::ordered_json::array();
            for (int k = 0; k < n_occ; ++k) {
                nlohmann::ordered_json o;
                o["file"] = occ_files[k];
                o["bbox"] = fd::bbox_json(occ_boxes[k]);
                truth["occluders"].push_back(std::move(o));
            }
            std::ofstream(dir / "truth.json") << truth.dump(2) << "\n";

            add_example(id, Category::occlusion, occ_files);
            break;
        }
    }

    std::ofstream(root / "index.json") << index.dump(2) << "\n";
    return load_dataset(root);
}

} // namespace catalogstitch
