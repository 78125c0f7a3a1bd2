#pragma once

#include "catalogstitch/errors.hpp"
#include "catalogstitch/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace catalogstitch {

/// Per-example metric values. A field is absent when the example carries no
/// evaluation of that kind (e.g. no dimension ground truth, no occluders).
struct MetricReport {
    std::optional<double> ar_error_pct;
    std::optional<double> occluder_psnr_db;
    std::vector<std::string> notes;
};

/// Relative aspect-ratio deviation in percent: |out - in| / in * 100.
inline double ar_error(double ar_input, double ar_output) {
    if (ar_input <= 0.0 || ar_output <= 0.0)
        throw NonPositiveRatioError("ar_error: ratios must be positive, got " +
                                    std::to_string(ar_input) + ", " +
                                    std::to_string(ar_output));
    return std::abs(ar_output - ar_input) / ar_input * 100.0;
}

/// Tight bounding box of the pixels inside `region` whose max-channel
/// absolute difference from the reference exceeds `diff_threshold`. This is
/// how the generated object region is located in a composited output.
inline BBox output_object_bbox(const RasterImage& output, const RasterImage& reference_bg,
                               const BBox& region, int diff_threshold = 8) {
    if (!output.same_shape(reference_bg))
        throw DimensionMismatchError("output_object_bbox: output " +
                                     shape_string(output.width, output.height) +
                                     " vs reference " +
                                     shape_string(reference_bg.width, reference_bg.height));
    const int x0 = std::max(0, region.x);
    const int y0 = std::max(0, region.y);
    const int x1 = std::min(output.width, region.right());
    const int y1 = std::min(output.height, region.bottom());
    const int ch = output.channels;

    int min_x = output.width, min_y = output.height, max_x = -1, max_y = -1;
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
            const std::uint8_t* a = output.pixel(x, y);
            const std::uint8_t* b = reference_bg.pixel(x, y);
            int diff = 0;
            for (int c = 0; c < ch; ++c)
                diff = std::max(diff, std::abs(static_cast<int>(a[c]) - static_cast<int>(b[c])));
            if (diff > diff_threshold) {
                min_x = std::min(min_x, x);
                min_y = std::min(min_y, y);
                max_x = std::max(max_x, x);
                max_y = std::max(max_y, y);
            }
        }
    }
    if (max_x < 0)
        throw NoObjectFoundError("output_object_bbox: no pixel differs from the reference by more than " +
                                 std::to_string(diff_threshold));
    return BBox{min_x, min_y, max_x - min_x + 1, max_y - min_y + 1};
}

/// PSNR restricted to the mask foreground. MSE is averaged over every channel
/// sample of every foreground pixel; returns `cap_db` when the regions are
/// byte-identical (MSE = 0).
inline double masked_psnr(const RasterImage& a, const RasterImage& b, const BinaryMask& mask,
                          double cap_db = 99.0) {
    if (!a.same_shape(b))
        throw DimensionMismatchError("masked_psnr: image shapes differ");
    if (a.width != mask.width || a.height != mask.height)
        throw DimensionMismatchError("masked_psnr: mask " +
                                     shape_string(mask.width, mask.height) + " vs image " +
                                     shape_string(a.width, a.height));
    const int ch = a.channels;
    std::int64_t sq_sum = 0;
    std::int64_t n_samples = 0;
    for (int y = 0; y < a.height; ++y) {
        for (int x = 0; x < a.width; ++x) {
            if (!mask.foreground(x, y)) continue;
            const std::uint8_t* pa = a.pixel(x, y);
            const std::uint8_t* pb = b.pixel(x, y);
            for (int c = 0; c < ch; ++c) {
                const int d = static_cast<int>(pa[c]) - static_cast<int>(pb[c]);
                sq_sum += static_cast<std::int64_t>(d) * d;
            }
            n_samples += ch;
        }
    }
    if (n_samples == 0)
        throw EmptyMaskError("masked_psnr: mask has no foreground pixel");
    if (sq_sum == 0)
        return cap_db;
    const double mse = static_cast<double>(sq_sum) / static_cast<double>(n_samples);
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

} // namespace catalogstitch
