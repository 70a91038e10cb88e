#pragma once

#include <string>
#include <vector>

namespace tmsc {

// Grayscale raster, row-major floats in [0, 1].
struct Image {
    int width = 0;
    int height = 0;
    std::vector<float> pixels;

    Image() = default;
    Image(int w, int h, float fill = 0.0f)
        : width(w), height(h), pixels(static_cast<size_t>(w) * h, fill) {}

    float& at(int y, int x) { return pixels[static_cast<size_t>(y) * width + x]; }
    float at(int y, int x) const { return pixels[static_cast<size_t>(y) * width + x]; }
    size_t size() const { return pixels.size(); }
};

// Mean over factor x factor blocks; width and height must be divisible.
Image block_mean(const Image& img, int factor);

// Binary 8-bit PGM (P5, maxval 255). Pixels are clamped to [0, 1] and scaled.
void write_pgm(const Image& img, const std::string& path);
Image read_pgm(const std::string& path);

// g x g grid rendered one pixel per cell, min-max normalized to 0..255
// (constant grids render all-zero).
void write_heatmap(const std::vector<float>& grid, int g, const std::string& path);

// Upscaled variant: cell_px pixels per cell, selected cells outlined at
// maximum intensity.
void write_heatmap_overlay(const std::vector<float>& grid, int g,
                           const std::vector<int>& selected, int cell_px,
                           const std::string& path);

}  // namespace tmsc
