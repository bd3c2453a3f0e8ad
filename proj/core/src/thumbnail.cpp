#include "cdisc/thumbnail.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include <png.h>

#include "cdisc/error.hpp"
#include "cdisc/random.hpp"

namespace cdisc {

Image::Image(int w, int h, Rgb fill) : width(w), height(h), pixels(static_cast<std::size_t>(w * h * 3)) {
    fill_rect(0, 0, w, h, fill);
}

Rgb Image::at(int x, int y) const {
    const auto p = static_cast<std::size_t>((y * width + x) * 3);
    return {pixels[p], pixels[p + 1], pixels[p + 2]};
}

void Image::set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    const auto p = static_cast<std::size_t>((y * width + x) * 3);
    pixels[p] = c.r;
    pixels[p + 1] = c.g;
    pixels[p + 2] = c.b;
}

void Image::fill_rect(int x0, int y0, int x1, int y1, Rgb c) {
    for (int y = std::max(0, y0); y < std::min(height, y1); ++y)
        for (int x = std::max(0, x0); x < std::min(width, x1); ++x) set(x, y, c);
}

namespace {

// Rows top to bottom, bit 4 is the leftmost column.
using Glyph = std::array<std::uint8_t, 7>;

const std::map<char, Glyph>& font() {
    static const std::map<char, Glyph> f{
        {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}}, {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
        {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}}, {'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
        {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}}, {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
        {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}}, {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
        {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}}, {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
        {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}}, {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
        {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}}, {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
        {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
        {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}}, {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
        {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}}, {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
        {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}}, {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
        {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}}, {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
        {'Y', {0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04}}, {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
        {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}}, {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
        {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}}, {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
        {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}}, {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
        {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}}, {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
        {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}}, {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
        {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}}, {'#', {0x0A, 0x0A, 0x1F, 0x0A, 0x1F, 0x0A, 0x0A}},
        {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
    };
    return f;
}

constexpr Glyph box{0x1F, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1F};

void append_bytes(png_structp png, png_bytep data, png_size_t n) {
    auto* out = static_cast<std::string*>(png_get_io_ptr(png));
    out->append(reinterpret_cast<const char*>(data), n);
}

}  // namespace

int draw_text(Image& img, int x, int y, const std::string& text, Rgb color) {
    for (char ch : text) {
        const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        const auto it = font().find(up);
        const Glyph& g = it == font().end() ? box : it->second;
        for (int r = 0; r < 7; ++r)
            for (int c = 0; c < 5; ++c)
                if (g[static_cast<std::size_t>(r)] & (0x10 >> c)) img.set(x + c, y + r, color);
        x += 6;
    }
    return x;
}

std::string encode_png(const Image& img) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw Error("PNG: cannot create writer");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw Error("PNG: cannot create info");
    }
    std::string out;
    std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
    for (int y = 0; y < img.height; ++y) {
        rows[static_cast<std::size_t>(y)] =
            const_cast<png_bytep>(img.pixels.data() + static_cast<std::size_t>(y * img.width * 3));
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("PNG encoding failed");
    }
    png_set_write_fn(png, &out, append_bytes, nullptr);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_rows(png, info, rows.data());
    png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

bool color_for_label(const std::string& label, Rgb& out) {
    static const std::map<std::string, Rgb> colors{
        {"red", {200, 30, 40}},     {"blue", {40, 70, 200}},    {"green", {40, 150, 60}},
        {"black", {20, 20, 20}},    {"white", {245, 245, 245}}, {"yellow", {235, 205, 40}},
        {"pink", {240, 140, 180}},  {"purple", {120, 50, 160}}, {"orange", {240, 130, 30}},
        {"grey", {128, 128, 128}},  {"gray", {128, 128, 128}},  {"brown", {120, 80, 40}},
        {"beige", {225, 205, 170}}, {"navy", {20, 30, 90}},
    };
    const auto it = colors.find(label);
    if (it == colors.end()) return false;
    out = it->second;
    return true;
}

Image render_thumbnail(int item_id, const std::vector<std::string>& labels, int size) {
    Image img(size, size, {250, 250, 250});
    Rgb swatch{};
    bool found = false;
    for (const auto& l : labels)
        if (!found) found = color_for_label(l, swatch);
    if (!found) {
        std::uint64_t h = fnv1a(std::to_string(item_id));
        for (const auto& l : labels) h = fnv1a(l, h);
        const auto g = static_cast<std::uint8_t>(96 + h % 96);
        swatch = {g, g, g};
    }
    const int band = size / 4;
    img.fill_rect(0, 0, size, band, swatch);
    img.fill_rect(0, band, size, band + 1, {180, 180, 180});

    const Rgb ink{30, 30, 30};
    int y = band + 4;
    draw_text(img, 4, y, "#" + std::to_string(item_id), ink);
    y += 10;
    for (const auto& l : labels) {
        if (y + 7 > size) break;
        draw_text(img, 4, y, l, ink);
        y += 9;
    }
    return img;
}

}  // namespace cdisc
