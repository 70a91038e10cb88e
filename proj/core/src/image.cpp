#include "tmsc/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace tmsc {

namespace {

uint8_t to_byte(float v) {
    float c = std::clamp(v, 0.0f, 1.0f);
    return static_cast<uint8_t>(std::lround(c * 255.0f));
}

// Reads the next header token, skipping whitespace and # comments.
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {}
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

void write_p5(const std::vector<uint8_t>& bytes, int w, int h, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("pgm: cannot open " + path + " for writing");
    out << "P5\n" << w << " " << h << "\n255\n";
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("pgm: write failed for " + path);
}

}  // namespace

Image block_mean(const Image& img, int factor) {
    if (factor <= 0 || img.width % factor != 0 || img.height % factor != 0) {
        throw std::invalid_argument("block_mean: " + std::to_string(img.width) + "x" +
                                    std::to_string(img.height) + " not divisible by " +
                                    std::to_string(factor));
    }
    Image out(img.width / factor, img.height / factor);
    const double inv = 1.0 / (static_cast<double>(factor) * factor);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            double acc = 0.0;
            for (int dy = 0; dy < factor; ++dy)
                for (int dx = 0; dx < factor; ++dx)
                    acc += img.at(y * factor + dy, x * factor + dx);
            out.at(y, x) = static_cast<float>(acc * inv);
        }
    }
    return out;
}

void write_pgm(const Image& img, const std::string& path) {
    std::vector<uint8_t> bytes(img.size());
    for (size_t i = 0; i < img.size(); ++i) bytes[i] = to_byte(img.pixels[i]);
    write_p5(bytes, img.width, img.height, path);
}

Image read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("pgm: cannot open " + path);
    if (next_token(in) != "P5") throw std::runtime_error("pgm: " + path + " is not binary P5");
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(next_token(in));
        h = std::stoi(next_token(in));
        maxval = std::stoi(next_token(in));
    } catch (const std::exception&) {
        throw std::runtime_error("pgm: malformed header in " + path);
    }
    if (w <= 0 || h <= 0 || maxval != 255) {
        throw std::runtime_error("pgm: unsupported dimensions or maxval in " + path);
    }
    std::vector<uint8_t> bytes(static_cast<size_t>(w) * h);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
        throw std::runtime_error("pgm: truncated pixel data in " + path);
    }
    Image img(w, h);
    for (size_t i = 0; i < bytes.size(); ++i) img.pixels[i] = static_cast<float>(bytes[i]) / 255.0f;
    return img;
}

namespace {

std::vector<uint8_t> normalize_grid(const std::vector<float>& grid) {
    if (grid.empty()) throw std::invalid_argument("heatmap: empty grid");
    float lo = grid[0], hi = grid[0];
    for (float v : grid) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::vector<uint8_t> bytes(grid.size(), 0);
    if (hi > lo) {
        const double range = static_cast<double>(hi) - lo;
        for (size_t i = 0; i < grid.size(); ++i) {
            bytes[i] = static_cast<uint8_t>(std::lround((grid[i] - lo) / range * 255.0));
        }
    }
    return bytes;
}

}  // namespace

void write_heatmap(const std::vector<float>& grid, int g, const std::string& path) {
    if (g <= 0 || grid.size() != static_cast<size_t>(g) * g) {
        throw std::invalid_argument("heatmap: grid is not " + std::to_string(g) + "x" +
                                    std::to_string(g));
    }
    write_p5(normalize_grid(grid), g, g, path);
}

void write_heatmap_overlay(const std::vector<float>& grid, int g,
                           const std::vector<int>& selected, int cell_px,
                           const std::string& path) {
    if (g <= 0 || grid.size() != static_cast<size_t>(g) * g) {
        throw std::invalid_argument("heatmap: grid is not " + std::to_string(g) + "x" +
                                    std::to_string(g));
    }
    if (cell_px < 3) throw std::invalid_argument("heatmap: cell_px must be >= 3");
    const auto cells = normalize_grid(grid);
    const int side = g * cell_px;
    std::vector<uint8_t> img(static_cast<size_t>(side) * side);
    for (int r = 0; r < g; ++r)
        for (int c = 0; c < g; ++c)
            for (int dy = 0; dy < cell_px; ++dy)
                for (int dx = 0; dx < cell_px; ++dx)
                    img[static_cast<size_t>(r * cell_px + dy) * side + c * cell_px + dx] =
                        cells[static_cast<size_t>(r) * g + c];
    for (int idx : selected) {
        if (idx < 0 || idx >= g * g) {
            throw std::invalid_argument("heatmap: selected index " + std::to_string(idx) +
                                        " outside grid");
        }
        const int r = idx / g, c = idx % g;
        for (int d = 0; d < cell_px; ++d) {
            img[static_cast<size_t>(r * cell_px) * side + c * cell_px + d] = 255;
            img[static_cast<size_t>(r * cell_px + cell_px - 1) * side + c * cell_px + d] = 255;
            img[static_cast<size_t>(r * cell_px + d) * side + c * cell_px] = 255;
            img[static_cast<size_t>(r * cell_px + d) * side + c * cell_px + cell_px - 1] = 255;
        }
    }
    write_p5(img, side, side, path);
}

}  // namespace tmsc
