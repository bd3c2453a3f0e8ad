#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace cdisc {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    bool operator==(const Rgb&) const = default;
};

// 8-bit RGB raster, row-major.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // width * height * 3

    Image(int w, int h, Rgb fill);
    Rgb at(int x, int y) const;
    void set(int x, int y, Rgb c);
    void fill_rect(int x0, int y0, int x1, int y1, Rgb c);
};

// Draws upper-cased text with a 5x7 bitmap font; unknown glyphs render as
// a hollow box. Returns the x just past the last glyph.
int draw_text(Image& img, int x, int y, const std::string& text, Rgb color);

// Non-interlaced 8-bit truecolor PNG.
std::string encode_png(const Image& img);

// Swatch color for a color-word attribute label, if it names one.
bool color_for_label(const std::string& label, Rgb& out);

// Placeholder thumbnail: a swatch band (the item's color word, or a hashed
// grey) over the item id and its attribute labels, one per line.
Image render_thumbnail(int item_id, const std::vector<std::string>& labels, int size = 128);

}  // namespace cdisc
