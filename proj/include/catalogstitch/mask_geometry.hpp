#pragma once

#include "catalogstitch/errors.hpp"
#include "catalogstitch/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace catalogstitch {

/// Threshold on |AR_t - AR_p| below which the original target mask is kept.
struct AspectRatioPolicy {
    double tau = 0.06;
};

/// Result of dimension-aware target-mask computation.
///
/// When `adapted` is true the mask is a solid rectangle equal to `bbox`;
/// when false the mask is the input target mask unchanged and `bbox` is its
/// tight bounding box. `ideal_w`/`ideal_h` are the real-valued extents before
/// integer rounding (equal to the tight-box extents when not adapted).
/// `clipped` reports right/bottom truncation at the image border; the
/// max(0, .) clamp on the origin is part of the placement formula and does
/// not count as clipping.
struct MaskPlan {
    BinaryMask mask;
    BBox bbox;
    bool adapted = false;
    bool clipped = false;
    double ideal_w = 0.0;
    double ideal_h = 0.0;
};

/// Width over height of a tight bounding box.
inline double aspect_ratio(const BBox& b) {
    return static_cast<double>(b.w) / static_cast<double>(b.h);
}

/// Intersection-over-union of two boxes by pixel area; 0 when disjoint.
inline double bbox_iou(const BBox& a, const BBox& b) {
    const std::int64_t ix = std::max<std::int64_t>(
        0, std::min(a.right(), b.right()) - std::max(a.x, b.x));
    const std::int64_t iy = std::max<std::int64_t>(
        0, std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y));
    const std::int64_t inter = ix * iy;
    const std::int64_t uni = a.area() + b.area() - inter;
    if (uni <= 0) return 0.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace detail {
inline int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }
} // namespace detail

/// Compute the dimension-aware target mask.
///
/// The target and product aspect ratios come from the tight bounding boxes of
/// the two masks. If they differ by less than `policy.tau` the input mask is
/// returned unchanged. Otherwise the target box is re-dimensioned to the
/// product's aspect ratio: height is kept and width recomputed, unless that
/// would shrink the width, in which case width is kept and height recomputed.
/// The new rectangle is centered on the centroid of the original target mask
/// (origin clamped at 0), rounded to integer pixels (half-up origin, ceiling
/// extents), and truncated at the right/bottom image borders.
inline MaskPlan compute_dimension_aware_mask(const BinaryMask& target_mask,
                                             const BinaryMask& product_mask,
                                             int image_w, int image_h,
                                             const AspectRatioPolicy& policy = {}) {
    if (target_mask.width != image_w || target_mask.height != image_h)
        throw DimensionMismatchError(
            "compute_dimension_aware_mask: target mask " +
            shape_string(target_mask.width, target_mask.height) + " vs image " +
            shape_string(image_w, image_h));

    const BBox target_box = mask_to_bbox(target_mask);   // throws EmptyMaskError
    const BBox product_box = mask_to_bbox(product_mask); // throws EmptyMaskError

    const double ar_t = aspect_ratio(target_box);
    const double ar_p = aspect_ratio(product_box);

    MaskPlan plan;
    if (std::abs(ar_t - ar_p) < policy.tau) {
        plan.mask = target_mask;
        plan.bbox = target_box;
        plan.adapted = false;
        plan.clipped = false;
        plan.ideal_w = static_cast<double>(target_box.w);
        plan.ideal_h = static_cast<double>(target_box.h);
        return plan;
    }

    // Anchor on height; switch to the width anchor if that would shrink the
    // box below the target width. Products of integer extents are divided in
    // one rounding step so exactly divisible cases stay exact.
    double ideal_w, ideal_h;
    ideal_h = static_cast<double>(target_box.h);
    ideal_w = static_cast<double>(static_cast<std::int64_t>(target_box.h) * product_box.w) /
              static_cast<double>(product_box.h);
    if (ideal_w < static_cast<double>(target_box.w)) {
        ideal_w = static_cast<double>(target_box.w);
        ideal_h = static_cast<double>(static_cast<std::int64_t>(target_box.w) * product_box.h) /
                  static_cast<double>(product_box.w);
    }

    const auto [cx, cy] = mask_centroid(target_mask);

    const int w_px = static_cast<int>(std::ceil(ideal_w));
    const int h_px = static_cast<int>(std::ceil(ideal_h));
    int x_px = detail::round_half_up(std::max(0.0, cx - w_px / 2.0));
    int y_px = detail::round_half_up(std::max(0.0, cy - h_px / 2.0));
    x_px = std::min(x_px, image_w - 1);
    y_px = std::min(y_px, image_h - 1);

    int out_w = w_px;
    int out_h = h_px;
    bool clipped = false;
    if (x_px + out_w > image_w) {
        out_w = image_w - x_px;
        clipped = true;
    }
    if (y_px + out_h > image_h) {
        out_h = image_h - y_px;
        clipped = true;
    }

    plan.bbox = BBox{x_px, y_px, out_w, out_h};
    plan.mask = rect_mask(image_w, image_h, plan.bbox);
    plan.adapted = true;
    plan.clipped = clipped;
    plan.ideal_w = ideal_w;
    plan.ideal_h = ideal_h;
    return plan;
}

} // namespace catalogstitch
