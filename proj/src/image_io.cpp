#include <png.h>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "ipsim/io.hpp"

namespace ipsim {

namespace {

std::string lower_ext(const std::filesystem::path& p) {
    std::string e = p.extension().string();
    for (char& c : e) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return e;
}

// Next header token of a PNM file, skipping whitespace and comments.
std::string pnm_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

RgbImage read_pnm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image " + path.string());
    const std::string magic = pnm_token(in);
    if (magic != "P5" && magic != "P6") throw IoError(path.string() + ": only binary P5/P6 supported");
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(pnm_token(in));
        h = std::stoi(pnm_token(in));
        maxval = std::stoi(pnm_token(in));
    } catch (const std::exception&) {
        throw IoError(path.string() + ": malformed PNM header");
    }
    if (w < 1 || h < 1) throw IoError(path.string() + ": bad dimensions");
    if (maxval != 255 && maxval != 65535) throw IoError(path.string() + ": maxval must be 255 or 65535");
    const int channels = magic == "P6" ? 3 : 1;
    const int bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * channels * bytes);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size())) throw IoError(path.string() + ": truncated pixel data");

    RgbImage img(w, h);
    std::size_t k = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < channels; ++c) {
                // PNM samples are big-endian.
                unsigned v = raw[k++];
                if (bytes == 2) v = (v << 8) | raw[k++];
                const double norm = static_cast<double>(v) / maxval;
                if (channels == 1) {
                    img.at(x, y, 0) = img.at(x, y, 1) = img.at(x, y, 2) = norm;
                } else {
                    img.at(x, y, c) = norm;
                }
            }
        }
    }
    return img;
}

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Keeps libpng quiet; the message is reported through IoError instead.
void png_error_to_string(png_structp png, png_const_charp msg) {
    *static_cast<std::string*>(png_get_error_ptr(png)) = msg;
    png_longjmp(png, 1);
}
void png_ignore_warning(png_structp, png_const_charp) {}

RgbImage read_png(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open image " + path.string());
    std::string png_msg = "unknown error";
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &png_msg, png_error_to_string,
                                             png_ignore_warning);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng initialization failed");
    }
    std::vector<unsigned char> pixels;
    std::vector<png_bytep> rows;
    png_uint_32 w = 0, h = 0;
    int depth = 0;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError(path.string() + ": malformed PNG (" + png_msg + ")");
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);
    const int color = png_get_color_type(png, info);
    png_set_expand(png);
    png_set_strip_alpha(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
    png_read_update_info(png, info);
    w = png_get_image_width(png, info);
    h = png_get_image_height(png, info);
    depth = png_get_bit_depth(png, info);
    const std::size_t stride = png_get_rowbytes(png, info);
    pixels.resize(stride * h);
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = pixels.data() + y * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    RgbImage img(static_cast<int>(w), static_cast<int>(h));
    const double maxval = depth == 16 ? 65535.0 : 255.0;
    for (png_uint_32 y = 0; y < h; ++y) {
        const unsigned char* row = rows[y];
        for (png_uint_32 x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                const std::size_t i = x * 3 + c;
                // PNG samples are big-endian.
                const unsigned v = depth == 16 ? (row[2 * i] << 8) | row[2 * i + 1] : row[i];
                img.at(static_cast<int>(x), static_cast<int>(y), c) = v / maxval;
            }
        }
    }
    return img;
}

unsigned to_u16(double v) {
    return static_cast<unsigned>(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
}

void write_pnm(const std::filesystem::path& path, const RgbImage& img, bool color) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << (color ? "P6" : "P5") << '\n' << img.width() << ' ' << img.height() << "\n65535\n";
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            for (int c = color ? 0 : 1; c < (color ? 3 : 2); ++c) {
                const unsigned v = to_u16(img.at(x, y, c));
                out.put(static_cast<char>(v >> 8));
                out.put(static_cast<char>(v & 0xFF));
            }
        }
    }
    if (!out) throw IoError("short write to " + path.string());
}

void write_png(const std::filesystem::path& path, const RgbImage& img) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot write " + path.string());
    std::string png_msg = "unknown error";
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &png_msg, png_error_to_string,
                                              png_ignore_warning);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng initialization failed");
    }
    const std::size_t stride = static_cast<std::size_t>(img.width()) * 6;
    std::vector<unsigned char> pixels(stride * img.height());
    std::vector<png_bytep> rows(img.height());
    for (int y = 0; y < img.height(); ++y) {
        rows[y] = pixels.data() + y * stride;
        for (int x = 0; x < img.width(); ++x) {
            for (int c = 0; c < 3; ++c) {
                const unsigned v = to_u16(img.at(x, y, c));
                rows[y][(x * 3 + c) * 2] = static_cast<unsigned char>(v >> 8);
                rows[y][(x * 3 + c) * 2 + 1] = static_cast<unsigned char>(v & 0xFF);
            }
        }
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("PNG encoding failed for " + path.string() + " (" + png_msg + ")");
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.width(), img.height(), 16, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

RgbImage read_image(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("no such image: " + path.string());
    const auto ext = lower_ext(path);
    RgbImage img = ext == ".png" ? read_png(path) : read_pnm(path);
    return img;
}

void write_image(const std::filesystem::path& path, const RgbImage& img) {
    const auto ext = lower_ext(path);
    if (ext == ".png") {
        write_png(path, img);
    } else if (ext == ".ppm") {
        write_pnm(path, img, true);
    } else if (ext == ".pgm") {
        write_pnm(path, img, false);
    } else {
        throw IoError("unsupported image extension '" + ext + "' (use .pgm, .ppm or .png)");
    }
}

}  // namespace ipsim
