#pragma once

#include "catalogstitch/errors.hpp"
#include "catalogstitch/raster.hpp"

#include <png.h>

#include <cstdio>
#include <csetjmp>
#include <filesystem>
#include <memory>
#include <variant>

namespace catalogstitch {

using LoadedPng = std::variant<RasterImage, BinaryMask>;

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// libpng reports errors via longjmp. Keep all non-trivial locals constructed
// before setjmp so unwinding on the throw path stays well-defined.
struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReader() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    }
};

struct PngWriter {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriter() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    }
};

} // namespace detail

/// Decode an 8-bit PNG. Grayscale files become a BinaryMask, RGB/RGBA files a
/// RasterImage. Samples round-trip bit-exactly with save_png (no gamma or
/// palette transforms are applied).
inline LoadedPng load_png(const std::filesystem::path& path) {
    detail::FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp)
        throw IoError("cannot open PNG for reading: " + path.string());

    unsigned char sig[8];
    if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw FormatError("not a PNG file: " + path.string());

    detail::PngReader r;
    r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!r.png) throw Error("png_create_read_struct failed");
    r.info = png_create_info_struct(r.png);
    if (!r.info) throw Error("png_create_info_struct failed");

    std::vector<std::uint8_t> pixels;
    std::vector<png_bytep> rows;

    if (setjmp(png_jmpbuf(r.png)))
        throw FormatError("corrupt PNG: " + path.string());

    png_init_io(r.png, fp.get());
    png_set_sig_bytes(r.png, 8);
    png_read_info(r.png, r.info);

    const png_uint_32 width = png_get_image_width(r.png, r.info);
    const png_uint_32 height = png_get_image_height(r.png, r.info);
    const int bit_depth = png_get_bit_depth(r.png, r.info);
    const int color_type = png_get_color_type(r.png, r.info);

    if (bit_depth != 8)
        throw FormatError("unsupported PNG bit depth " + std::to_string(bit_depth) +
                          " (need 8): " + path.string());

    int channels = 0;
    switch (color_type) {
    case PNG_COLOR_TYPE_GRAY: channels = 1; break;
    case PNG_COLOR_TYPE_RGB: channels = 3; break;
    case PNG_COLOR_TYPE_RGB_ALPHA: channels = 4; break;
    default:
        throw FormatError("unsupported PNG color type " + std::to_string(color_type) +
                          ": " + path.string());
    }
    if (width < 1 || height < 1)
        throw FormatError("degenerate PNG dimensions: " + path.string());

    png_set_interlace_handling(r.png);
    png_read_update_info(r.png, r.info);

    pixels.resize(static_cast<std::size_t>(width) * height * channels);
    rows.resize(height);
    const std::size_t stride = static_cast<std::size_t>(width) * channels;
    for (png_uint_32 y = 0; y < height; ++y)
        rows[y] = pixels.data() + y * stride;
    png_read_image(r.png, rows.data());
    png_read_end(r.png, nullptr);

    if (channels == 1) {
        BinaryMask m(static_cast<int>(width), static_cast<int>(height));
        m.data = std::move(pixels);
        return m;
    }
    RasterImage img;
    img.width = static_cast<int>(width);
    img.height = static_cast<int>(height);
    img.channels = channels;
    img.data = std::move(pixels);
    return img;
}

/// load_png, requiring an RGB/RGBA image.
inline RasterImage load_image_png(const std::filesystem::path& path) {
    LoadedPng p = load_png(path);
    if (auto* img = std::get_if<RasterImage>(&p))
        return std::move(*img);
    throw FormatError("expected RGB/RGBA PNG, got grayscale: " + path.string());
}

/// load_png, requiring a grayscale mask.
inline BinaryMask load_mask_png(const std::filesystem::path& path) {
    LoadedPng p = load_png(path);
    if (auto* m = std::get_if<BinaryMask>(&p))
        return std::move(*m);
    throw FormatError("expected grayscale mask PNG, got color: " + path.string());
}

namespace detail {

inline void save_png_raw(const std::filesystem::path& path, const std::uint8_t* data,
                         int width, int height, int channels) {
    int color_type;
    switch (channels) {
    case 1: color_type = PNG_COLOR_TYPE_GRAY; break;
    case 3: color_type = PNG_COLOR_TYPE_RGB; break;
    case 4: color_type = PNG_COLOR_TYPE_RGB_ALPHA; break;
    default: throw FormatError("save_png: unsupported channel count " + std::to_string(channels));
    }
    if (width < 1 || height < 1)
        throw FormatError("save_png: degenerate dimensions");

    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp)
        throw IoError("cannot open PNG for writing: " + path.string());

    PngWriter w;
    w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!w.png) throw Error("png_create_write_struct failed");
    w.info = png_create_info_struct(w.png);
    if (!w.info) throw Error("png_create_info_struct failed");

    std::vector<png_bytep> rows(height);
    const std::size_t stride = static_cast<std::size_t>(width) * channels;
    for (int y = 0; y < height; ++y)
        rows[y] = const_cast<png_bytep>(data + y * stride);

    if (setjmp(png_jmpbuf(w.png)))
        throw IoError("PNG write failed: " + path.string());

    png_init_io(w.png, fp.get());
    // Fast, fixed encoder settings; identical input bytes yield identical
    // files. Level 0 stores scanlines uncompressed: artifacts here are
    // bit-exact intermediates where encode speed matters more than size.
    png_set_compression_level(w.png, 0);
    png_set_filter(w.png, 0, PNG_FILTER_NONE);
    png_set_IHDR(w.png, w.info, width, height, 8, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(w.png, w.info);
    png_write_image(w.png, rows.data());
    png_write_end(w.png, nullptr);
}

} // namespace detail

inline void save_png(const std::filesystem::path& path, const RasterImage& img) {
    detail::save_png_raw(path, img.data.data(), img.width, img.height, img.channels);
}

inline void save_png(const std::filesystem::path& path, const BinaryMask& mask) {
    detail::save_png_raw(path, mask.data.data(), mask.width, mask.height, 1);
}

} // namespace catalogstitch
