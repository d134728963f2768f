#include "retex/image_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "retex/errors.hpp"

namespace retex {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

unsigned char quantize8(float v) {
    if (v <= 0.0f) return 0;
    if (v >= 1.0f) return 255;
    return static_cast<unsigned char>(std::lround(v * 255.0f));
}

Raster from_rgb8(const std::vector<unsigned char>& rgb, int w, int h) {
    Raster out(w, h);
    for (size_t i = 0, n = out.pixel_count() * 3; i < n; ++i)
        out.data[i] = static_cast<float>(rgb[i]) / 255.0f;
    return out;
}

Raster load_png_file(FILE* fp, const std::string& path) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png: out of memory reading " + path);
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("png: out of memory reading " + path);
    }
    std::vector<unsigned char> rgb;
    int w = 0, h = 0;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("png: corrupt or truncated file: " + path);
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    w = static_cast<int>(png_get_image_width(png, info));
    h = static_cast<int>(png_get_image_height(png, info));
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);

    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    rgb.resize(static_cast<size_t>(w) * h * 3);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y) rows[y] = rgb.data() + static_cast<size_t>(y) * w * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return from_rgb8(rgb, w, h);
}

struct JpegErrorMgr {
    jpeg_error_mgr pub;
    std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    std::longjmp(mgr->jump, 1);
}

Raster load_jpeg_file(FILE* fp, const std::string& path) {
    jpeg_decompress_struct cinfo;
    JpegErrorMgr jerr;
    cinfo.err = jpeg_std_error(&jerr.pub);
    jerr.pub.error_exit = jpeg_error_exit;
    if (setjmp(jerr.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw FormatError("jpeg: corrupt or unsupported file: " + path);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, fp);
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    const int w = static_cast<int>(cinfo.output_width);
    const int h = static_cast<int>(cinfo.output_height);
    std::vector<unsigned char> rgb(static_cast<size_t>(w) * h * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        unsigned char* row = rgb.data() + static_cast<size_t>(cinfo.output_scanline) * w * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return from_rgb8(rgb, w, h);
}

} // namespace

Raster load_raster(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open file: " + path);
    unsigned char magic[8] = {0};
    const size_t got = std::fread(magic, 1, sizeof(magic), fp.get());
    std::rewind(fp.get());
    static const unsigned char png_sig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    if (got >= 8 && std::memcmp(magic, png_sig, 8) == 0) return load_png_file(fp.get(), path);
    if (got >= 2 && magic[0] == 0xFF && magic[1] == 0xD8) return load_jpeg_file(fp.get(), path);
    throw FormatError("unsupported image format (need PNG or JPEG): " + path);
}

namespace {

void write_png_rows(const std::string& path, int w, int h, int color_type,
                    const std::vector<unsigned char>& bytes, int bytes_per_px,
                    const std::vector<std::array<unsigned char, 3>>* palette) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot write file: " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png: out of memory writing " + path);
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png: out of memory writing " + path);
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png: write failure: " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, w, h, 8, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    std::vector<png_color> pal;
    if (palette) {
        pal.resize(palette->size());
        for (size_t i = 0; i < palette->size(); ++i)
            pal[i] = {(*palette)[i][0], (*palette)[i][1], (*palette)[i][2]};
        png_set_PLTE(png, info, pal.data(), static_cast<int>(pal.size()));
    }
    png_write_info(png, info);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y)
        rows[y] = const_cast<png_bytep>(bytes.data() + static_cast<size_t>(y) * w * bytes_per_px);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

} // namespace

void save_png(const Raster& r, const std::string& path) {
    std::vector<unsigned char> bytes(r.pixel_count() * 3);
    for (size_t i = 0; i < bytes.size(); ++i) bytes[i] = quantize8(r.data[i]);
    write_png_rows(path, r.width, r.height, PNG_COLOR_TYPE_RGB, bytes, 3, nullptr);
}

void save_png_gray(const ScalarField& f, const std::string& path) {
    std::vector<unsigned char> bytes(f.size());
    for (size_t i = 0; i < bytes.size(); ++i) bytes[i] = quantize8(f.values[i]);
    write_png_rows(path, f.width, f.height, PNG_COLOR_TYPE_GRAY, bytes, 1, nullptr);
}

void save_png_indexed(const LabelMap& labels, const std::string& path) {
    int max_label = 0;
    for (int v : labels.labels) max_label = std::max(max_label, v);
    if (max_label > 255) throw ConfigError("save_png_indexed: more than 256 labels: " + path);
    std::vector<std::array<unsigned char, 3>> palette(static_cast<size_t>(max_label) + 1);
    palette[0] = {0, 0, 0};
    for (int i = 1; i <= max_label; ++i) {
        // Golden-angle hue walk keeps adjacent region ids visually distinct.
        const double hue = std::fmod(0.618033988749895 * i, 1.0) * 6.0;
        const int k = static_cast<int>(hue);
        const double t = hue - k;
        double rr = 0, gg = 0, bb = 0;
        switch (k % 6) {
            case 0: rr = 1; gg = t; break;
            case 1: rr = 1 - t; gg = 1; break;
            case 2: gg = 1; bb = t; break;
            case 3: gg = 1 - t; bb = 1; break;
            case 4: rr = t; bb = 1; break;
            default: rr = 1; bb = 1 - t; break;
        }
        palette[i] = {static_cast<unsigned char>(55 + 200 * rr),
                      static_cast<unsigned char>(55 + 200 * gg),
                      static_cast<unsigned char>(55 + 200 * bb)};
    }
    std::vector<unsigned char> bytes(labels.size());
    for (size_t i = 0; i < bytes.size(); ++i) bytes[i] = static_cast<unsigned char>(labels.labels[i]);
    write_png_rows(path, labels.width, labels.height, PNG_COLOR_TYPE_PALETTE, bytes, 1, &palette);
}

} // namespace retex
