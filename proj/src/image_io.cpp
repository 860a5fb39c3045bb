#include "avifind/error.hpp"
#include "avifind/image.hpp"

#include <jpeglib.h>
#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>
#include <string>

namespace avifind {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail_decode(const std::filesystem::path& path, const std::string& why) {
    throw IoError("cannot decode " + path.string() + ": " + why);
}

// ---------------------------------------------------------------------------
// PNG
// ---------------------------------------------------------------------------

struct PngError {
    std::jmp_buf env;
    std::string message;
};

void png_error_fn(png_structp png, png_const_charp msg) {
    auto* err = static_cast<PngError*>(png_get_error_ptr(png));
    err->message = msg != nullptr ? msg : "libpng error";
    std::longjmp(err->env, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

RasterImage load_png(std::FILE* f, const std::filesystem::path& path) {
    PngError err;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err,
                                             png_error_fn, png_warning_fn);
    if (png == nullptr) fail_decode(path, "libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        fail_decode(path, "libpng init failed");
    }

    std::vector<png_bytep> rows;
    std::vector<png_byte> data;
    png_uint_32 width = 0, height = 0;

    // libpng reports errors via longjmp; no C++ objects with nontrivial
    // destructors may be live in this frame past this point.
    if (setjmp(err.env)) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail_decode(path, err.message);
    }

    png_init_io(png, f);
    png_read_info(png, info);

    int bit_depth = 0, color_type = 0;
    png_get_IHDR(png, info, &width, &height, &bit_depth, &color_type,
                 nullptr, nullptr, nullptr);
    if (width < 1 || height < 1) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail_decode(path, "empty image");
    }

    // Normalize every variant to 8-bit RGB.
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const std::size_t stride = png_get_rowbytes(png, info);
    data.resize(stride * height);
    rows.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) rows[y] = data.data() + stride * y;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    if (stride < static_cast<std::size_t>(width) * 3)
        fail_decode(path, "unexpected row stride");

    RasterImage img(static_cast<int>(width), static_cast<int>(height));
    for (png_uint_32 y = 0; y < height; ++y) {
        const png_byte* row = data.data() + stride * y;
        for (png_uint_32 x = 0; x < width; ++x)
            img.at(static_cast<int>(x), static_cast<int>(y)) =
                Rgb{row[3 * x], row[3 * x + 1], row[3 * x + 2]};
    }
    return img;
}

// ---------------------------------------------------------------------------
// JPEG
// ---------------------------------------------------------------------------

struct JpegError {
    jpeg_error_mgr mgr;
    std::jmp_buf env;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegError*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->env, 1);
}

void jpeg_emit_message(j_common_ptr, int) {}

RasterImage load_jpeg(std::FILE* f, const std::filesystem::path& path) {
    jpeg_decompress_struct cinfo;
    JpegError err;
    cinfo.err = jpeg_std_error(&err.mgr);
    err.mgr.error_exit = jpeg_error_exit;
    err.mgr.emit_message = jpeg_emit_message;

    std::vector<JSAMPLE> row;
    RasterImage img;

    if (setjmp(err.env)) {
        jpeg_destroy_decompress(&cinfo);
        fail_decode(path, err.message);
    }

    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, f);
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);

    const int width = static_cast<int>(cinfo.output_width);
    const int height = static_cast<int>(cinfo.output_height);
    if (width < 1 || height < 1 || cinfo.output_components != 3) {
        jpeg_destroy_decompress(&cinfo);
        fail_decode(path, "unsupported jpeg layout");
    }

    img = RasterImage(width, height);
    row.resize(static_cast<std::size_t>(width) * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        const int y = static_cast<int>(cinfo.output_scanline);
        JSAMPROW rp = row.data();
        jpeg_read_scanlines(&cinfo, &rp, 1);
        for (int x = 0; x < width; ++x)
            img.at(x, y) = Rgb{static_cast<std::uint8_t>(row[3 * x]),
                               static_cast<std::uint8_t>(row[3 * x + 1]),
                               static_cast<std::uint8_t>(row[3 * x + 2])};
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return img;
}

}  // namespace

RasterImage load_image(const std::filesystem::path& path) {
    FilePtr f(std::fopen(path.string().c_str(), "rb"));
    if (!f) throw IoError("cannot open " + path.string());

    unsigned char magic[8] = {};
    const std::size_t got = std::fread(magic, 1, sizeof(magic), f.get());
    std::rewind(f.get());

    if (got >= 8 && png_sig_cmp(magic, 0, 8) == 0) return load_png(f.get(), path);
    if (got >= 2 && magic[0] == 0xFF && magic[1] == 0xD8) return load_jpeg(f.get(), path);
    throw IoError("unsupported image format: " + path.string() +
                  " (expected PNG or JPEG)");
}

}  // namespace avifind
