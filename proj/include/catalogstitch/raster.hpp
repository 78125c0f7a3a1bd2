#pragma once

#include "catalogstitch/errors.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

namespace catalogstitch {

/// Integer pixel rectangle, origin top-left. Covers columns [x, x+w) and
/// rows [y, y+h).
struct BBox {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    int right() const { return x + w; }
    int bottom() const { return y + h; }
    std::int64_t area() const { return static_cast<std::int64_t>(w) * h; }

    bool operator==(const BBox&) const = default;
};

/// H x W interleaved 8-bit image, 3 (RGB) or 4 (RGBA) channels, row-major.
struct RasterImage {
    int width = 0;
    int height = 0;
    int channels = 3;
    std::vector<std::uint8_t> data;

    RasterImage() = default;
    RasterImage(int w, int h, int ch, std::uint8_t fill = 0)
        : width(w), height(h), channels(ch),
          data(static_cast<std::size_t>(w) * h * ch, fill) {}

    std::size_t index(int x, int y) const {
        return (static_cast<std::size_t>(y) * width + x) * channels;
    }
    std::uint8_t* pixel(int x, int y) { return data.data() + index(x, y); }
    const std::uint8_t* pixel(int x, int y) const { return data.data() + index(x, y); }

    bool same_shape(const RasterImage& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }

    bool operator==(const RasterImage&) const = default;
};

/// H x W 8-bit single-channel mask. A pixel is foreground when its sample
/// value is >= fg_threshold (128 by default, so 0/255 masks binarize at the
/// midpoint).
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::uint8_t fg_threshold = 128;
    std::vector<std::uint8_t> data;

    BinaryMask() = default;
    BinaryMask(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * width + x;
    }
    bool foreground(int x, int y) const { return data[index(x, y)] >= fg_threshold; }
    void set(int x, int y, std::uint8_t v) { data[index(x, y)] = v; }

    bool same_shape(const BinaryMask& o) const {
        return width == o.width && height == o.height;
    }

    bool operator==(const BinaryMask&) const = default;
};

inline std::string shape_string(int w, int h) {
    return std::to_string(w) + "x" + std::to_string(h);
}

/// Number of foreground pixels.
inline std::int64_t foreground_count(const BinaryMask& m) {
    std::int64_t n = 0;
    for (std::uint8_t v : m.data)
        if (v >= m.fg_threshold) ++n;
    return n;
}

/// Tight axis-aligned bounding box of the foreground. Every edge of the box
/// touches at least one foreground pixel.
inline BBox mask_to_bbox(const BinaryMask& m) {
    int min_x = m.width, min_y = m.height, max_x = -1, max_y = -1;
    for (int y = 0; y < m.height; ++y) {
        const std::uint8_t* row = m.data.data() + static_cast<std::size_t>(y) * m.width;
        for (int x = 0; x < m.width; ++x) {
            if (row[x] >= m.fg_threshold) {
                min_x = std::min(min_x, x);
                min_y = std::min(min_y, y);
                max_x = std::max(max_x, x);
                max_y = std::max(max_y, y);
            }
        }
    }
    if (max_x < 0)
        throw EmptyMaskError("mask_to_bbox: mask has no foreground pixel");
    return BBox{min_x, min_y, max_x - min_x + 1, max_y - min_y + 1};
}

/// Center of mass of the foreground under the pixel-center convention:
/// pixel (x, y) contributes (x + 0.5, y + 0.5).
inline std::pair<double, double> mask_centroid(const BinaryMask& m) {
    std::int64_t sum_x = 0, sum_y = 0, n = 0;
    for (int y = 0; y < m.height; ++y) {
        const std::uint8_t* row = m.data.data() + static_cast<std::size_t>(y) * m.width;
        for (int x = 0; x < m.width; ++x) {
            if (row[x] >= m.fg_threshold) {
                sum_x += x;
                sum_y += y;
                ++n;
            }
        }
    }
    if (n == 0)
        throw EmptyMaskError("mask_centroid: mask has no foreground pixel");
    return {static_cast<double>(sum_x) / static_cast<double>(n) + 0.5,
            static_cast<double>(sum_y) / static_cast<double>(n) + 0.5};
}

/// Hard paste: every pixel of `src_pixels` whose mask sample is foreground
/// replaces the destination pixel byte-for-byte; background samples leave the
/// destination untouched. `at` must have the source dimensions; the placement
/// is clipped to the destination bounds.
inline RasterImage alpha_paste(RasterImage dst, const RasterImage& src_pixels,
                               const BinaryMask& src_mask, const BBox& at) {
    if (src_pixels.width != src_mask.width || src_pixels.height != src_mask.height)
        throw DimensionMismatchError("alpha_paste: source pixels " +
                                     shape_string(src_pixels.width, src_pixels.height) +
                                     " vs mask " +
                                     shape_string(src_mask.width, src_mask.height));
    if (at.w != src_pixels.width || at.h != src_pixels.height)
        throw DimensionMismatchError("alpha_paste: placement box " +
                                     shape_string(at.w, at.h) + " vs source " +
                                     shape_string(src_pixels.width, src_pixels.height));
    if (dst.channels != src_pixels.channels)
        throw DimensionMismatchError("alpha_paste: channel count " +
                                     std::to_string(dst.channels) + " vs " +
                                     std::to_string(src_pixels.channels));

    const int x0 = std::max(0, at.x);
    const int y0 = std::max(0, at.y);
    const int x1 = std::min(dst.width, at.right());
    const int y1 = std::min(dst.height, at.bottom());
    const int ch = dst.channels;
    for (int y = y0; y < y1; ++y) {
        const int sy = y - at.y;
        for (int x = x0; x < x1; ++x) {
            const int sx = x - at.x;
            if (!src_mask.foreground(sx, sy)) continue;
            const std::uint8_t* s = src_pixels.pixel(sx, sy);
            std::copy(s, s + ch, dst.pixel(x, y));
        }
    }
    return dst;
}

/// Pixelwise OR of two same-sized masks (result uses 0/255 samples).
inline BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b) {
    if (!a.same_shape(b))
        throw DimensionMismatchError("mask_union: " + shape_string(a.width, a.height) +
                                     " vs " + shape_string(b.width, b.height));
    BinaryMask out(a.width, a.height, 0);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const bool fg = a.data[i] >= a.fg_threshold || b.data[i] >= b.fg_threshold;
        out.data[i] = fg ? 255 : 0;
    }
    return out;
}

/// Solid-rectangle mask: foreground exactly on `box` (clipped to the frame).
inline BinaryMask rect_mask(int width, int height, const BBox& box) {
    BinaryMask out(width, height, 0);
    const int x0 = std::clamp(box.x, 0, width);
    const int y0 = std::clamp(box.y, 0, height);
    const int x1 = std::clamp(box.right(), 0, width);
    const int y1 = std::clamp(box.bottom(), 0, height);
    for (int y = y0; y < y1; ++y)
        std::fill(out.data.begin() + out.index(x0, y), out.data.begin() + out.index(x0, y) + (x1 - x0), std::uint8_t{255});
    return out;
}

inline RasterImage crop(const RasterImage& img, const BBox& box) {
    RasterImage out(box.w, box.h, img.channels);
    for (int y = 0; y < box.h; ++y) {
        const std::uint8_t* src = img.pixel(box.x, box.y + y);
        std::copy(src, src + static_cast<std::size_t>(box.w) * img.channels,
                  out.pixel(0, y));
    }
    return out;
}

inline BinaryMask crop(const BinaryMask& m, const BBox& box) {
    BinaryMask out(box.w, box.h);
    out.fg_threshold = m.fg_threshold;
    for (int y = 0; y < box.h; ++y) {
        const std::uint8_t* src = m.data.data() + m.index(box.x, box.y + y);
        std::copy(src, src + box.w, out.data.begin() + out.index(0, y));
    }
    return out;
}

namespace detail {
// Nearest-neighbor source index for destination index i: center sampling,
// deterministic in integer arithmetic.
inline int nn_src_index(int i, int src_dim, int dst_dim) {
    const std::int64_t num = (2 * static_cast<std::int64_t>(i) + 1) * src_dim;
    int s = static_cast<int>(num / (2 * static_cast<std::int64_t>(dst_dim)));
    return std::min(s, src_dim - 1);
}
} // namespace detail

/// Nearest-neighbor resampling. Integer index arithmetic keeps the result
/// bit-deterministic across platforms.
inline RasterImage scale_nearest(const RasterImage& img, int new_w, int new_h) {
    RasterImage out(new_w, new_h, img.channels);
    const int ch = img.channels;
    for (int y = 0; y < new_h; ++y) {
        const int sy = detail::nn_src_index(y, img.height, new_h);
        for (int x = 0; x < new_w; ++x) {
            const int sx = detail::nn_src_index(x, img.width, new_w);
            const std::uint8_t* s = img.pixel(sx, sy);
            std::copy(s, s + ch, out.pixel(x, y));
        }
    }
    return out;
}

inline BinaryMask scale_nearest(const BinaryMask& m, int new_w, int new_h) {
    BinaryMask out(new_w, new_h);
    out.fg_threshold = m.fg_threshold;
    for (int y = 0; y < new_h; ++y) {
        const int sy = detail::nn_src_index(y, m.height, new_h);
        for (int x = 0; x < new_w; ++x) {
            const int sx = detail::nn_src_index(x, m.width, new_w);
            out.data[out.index(x, y)] = m.data[m.index(sx, sy)];
        }
    }
    return out;
}

} // namespace catalogstitch
