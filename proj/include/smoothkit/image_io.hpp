#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <png.h>

#include "errors.hpp"
#include "image.hpp"

namespace smoothkit {

// ============================================================================
// 8-bit image IO: PNG (via libpng) and binary PPM/PGM.
//
// Loading maps sample v to v/255.0f; saving maps s to round(clamp(s,0,1)*255).
// A [0,1] image therefore survives a save/load round trip within 1/510.
// Format on load is detected from magic bytes, on save from the extension.
// ============================================================================

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_file(const std::string& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw io_error("cannot open '" + path + "'");
    return f;
}

// ---- PNG ----------------------------------------------------------------

inline Image load_png(std::FILE* fp, const std::string& path) {
    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw io_error("png: allocation failure reading '" + path + "'");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw io_error("png: allocation failure reading '" + path + "'");
    }
    std::vector<png_bytep> rows;
    std::vector<png_byte> pixels;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw io_error("png: malformed file '" + path + "'");
    }
    png_init_io(png, fp);
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    int color_type = png_get_color_type(png, info);

    // Normalize everything to 8-bit gray or RGB.
    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw io_error("png: unsupported channel count in '" + path + "'");
    }

    std::size_t stride = png_get_rowbytes(png, info);
    pixels.resize(stride * h);
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = pixels.data() + y * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Image img(static_cast<int>(w), static_cast<int>(h), channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < channels; ++c)
                img.at(x, y, c) =
                    pixels[y * stride + static_cast<std::size_t>(x) * channels + c] /
                    255.0f;
    return img;
}

inline void save_png(const Image& img, const std::string& path) {
    FilePtr fp = open_file(path, "wb");
    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw io_error("png: allocation failure writing '" + path + "'");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw io_error("png: allocation failure writing '" + path + "'");
    }
    std::vector<png_byte> pixels;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw io_error("png: write failure on '" + path + "'");
    }
    png_init_io(png, fp.get());
    int color_type =
        img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(png, info, img.width, img.height, 8, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
    pixels.resize(stride * img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                float s = std::clamp(img.at(x, y, c), 0.0f, 1.0f);
                pixels[y * stride + static_cast<std::size_t>(x) * img.channels + c] =
                    static_cast<png_byte>(std::lround(s * 255.0f));
            }
    rows.resize(img.height);
    for (int y = 0; y < img.height; ++y) rows[y] = pixels.data() + y * stride;
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

// ---- PPM / PGM (binary, maxval 255) --------------------------------------

inline int pnm_read_token(std::FILE* fp, const std::string& path) {
    // Skips whitespace and '#' comments, then parses a non-negative integer.
    int ch = std::fgetc(fp);
    while (ch != EOF) {
        if (ch == '#') {
            while (ch != EOF && ch != '\n') ch = std::fgetc(fp);
        } else if (std::isspace(ch)) {
            ch = std::fgetc(fp);
        } else {
            break;
        }
    }
    if (ch == EOF || !std::isdigit(ch))
        throw io_error("pnm: malformed header in '" + path + "'");
    long value = 0;
    while (ch != EOF && std::isdigit(ch)) {
        value = value * 10 + (ch - '0');
        if (value > 1 << 30) throw io_error("pnm: absurd header value in '" + path + "'");
        ch = std::fgetc(fp);
    }
    if (ch != EOF) std::ungetc(ch, fp);
    return static_cast<int>(value);
}

inline Image load_pnm(std::FILE* fp, const std::string& path) {
    char magic[2];
    if (std::fread(magic, 1, 2, fp) != 2 || magic[0] != 'P' ||
        (magic[1] != '5' && magic[1] != '6'))
        throw io_error("pnm: unsupported magic in '" + path + "' (want P5 or P6)");
    int channels = magic[1] == '5' ? 1 : 3;
    int w = pnm_read_token(fp, path);
    int h = pnm_read_token(fp, path);
    int maxval = pnm_read_token(fp, path);
    if (w <= 0 || h <= 0) throw io_error("pnm: bad dimensions in '" + path + "'");
    if (maxval != 255)
        throw io_error("pnm: only maxval 255 supported, got " +
                       std::to_string(maxval) + " in '" + path + "'");
    int sep = std::fgetc(fp); // single whitespace byte before raster
    if (sep == EOF || !std::isspace(sep))
        throw io_error("pnm: malformed header in '" + path + "'");

    std::size_t n = static_cast<std::size_t>(w) * h * channels;
    std::vector<std::uint8_t> raw(n);
    if (std::fread(raw.data(), 1, n, fp) != n)
        throw io_error("pnm: truncated raster in '" + path + "'");

    Image img(w, h, channels);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < channels; ++c)
                img.at(x, y, c) =
                    raw[(static_cast<std::size_t>(y) * w + x) * channels + c] / 255.0f;
    return img;
}

inline void save_pnm(const Image& img, const std::string& path) {
    if (img.channels != 1 && img.channels != 3)
        throw io_error("pnm: can only write 1- or 3-channel images to '" + path + "'");
    FilePtr fp = open_file(path, "wb");
    std::string header = (img.channels == 1 ? std::string("P5") : std::string("P6")) +
                         "\n" + std::to_string(img.width) + " " +
                         std::to_string(img.height) + "\n255\n";
    if (std::fwrite(header.data(), 1, header.size(), fp.get()) != header.size())
        throw io_error("pnm: write failure on '" + path + "'");
    std::vector<std::uint8_t> raw(static_cast<std::size_t>(img.width) * img.height *
                                  img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                float s = std::clamp(img.at(x, y, c), 0.0f, 1.0f);
                raw[(static_cast<std::size_t>(y) * img.width + x) * img.channels + c] =
                    static_cast<std::uint8_t>(std::lround(s * 255.0f));
            }
    if (std::fwrite(raw.data(), 1, raw.size(), fp.get()) != raw.size())
        throw io_error("pnm: write failure on '" + path + "'");
}

} // namespace detail

// Load an 8-bit PNG/PPM/PGM file; format is detected from the leading bytes.
inline Image load_image(const std::string& path) {
    detail::FilePtr fp = detail::open_file(path, "rb");
    unsigned char magic[8] = {0};
    std::size_t got = std::fread(magic, 1, sizeof magic, fp.get());
    std::rewind(fp.get());
    if (got >= 8 && png_sig_cmp(magic, 0, 8) == 0)
        return detail::load_png(fp.get(), path);
    if (got >= 2 && magic[0] == 'P' && (magic[1] == '5' || magic[1] == '6'))
        return detail::load_pnm(fp.get(), path);
    throw io_error("unrecognized image format in '" + path +
                   "' (expected PNG, P5, or P6)");
}

// Save as PNG (.png) or binary PNM (.ppm/.pgm), chosen by extension.
inline void save_image(const Image& img, const std::string& path) {
    if (img.empty()) throw io_error("refusing to save empty image to '" + path + "'");
    std::string ext = std::filesystem::path(path).extension().string();
    for (auto& ch : ext) ch = static_cast<char>(std::tolower(ch));
    if (ext == ".png") {
        detail::save_png(img, path);
    } else if (ext == ".ppm" || ext == ".pgm") {
        detail::save_pnm(img, path);
    } else {
        throw io_error("unsupported save extension '" + ext + "' for '" + path +
                       "' (use .png, .ppm, or .pgm)");
    }
}

} // namespace smoothkit
