#pragma once

#include <cstdint>
#include <vector>

#include "tmsc/image.hpp"
#include "tmsc/vit.hpp"

namespace tmsc {

// Class-token attention grid with its foreground mask. Background cells hold
// exactly zero after masking.
struct RolloutMap {
    int grid_side = 0;
    std::vector<float> grid;          // g*g, non-negative
    std::vector<uint8_t> foreground;  // g*g, 1 = foreground

    int cell_count() const { return grid_side * grid_side; }
};

// A = 0.5 * (W + I); keeps rows stochastic.
std::vector<float> renormalize_layer(const std::vector<float>& attention, int tokens);

// Ordered product A(L-1) * ... * A(0) of the renormalized layers, accumulated
// in double precision.
std::vector<double> compute_rollout(const AttentionStack& stack);

// Class-token row of the top rollout matrix, class column dropped, reshaped
// row-major to g x g.
std::vector<float> extract_cls_grid(const std::vector<double>& rollout_top, int tokens, int g);

// Otsu threshold over a 256-bin histogram of [0,1] intensities. Returns the
// upper boundary of the chosen bin, ties broken toward the smallest
// threshold. Degenerate input (single populated bin) returns 1.0 so that
// everything classifies as foreground.
float otsu_threshold(const Image& gray);

// Foreground mask at grid resolution: a pixel is foreground iff its intensity
// is <= the Otsu threshold (dark tissue on a bright background), a cell iff
// at least `coverage` of its pixels are.
std::vector<uint8_t> foreground_mask(const Image& gray, int g, double coverage = 0.5);

RolloutMap apply_mask(const std::vector<float>& grid, const std::vector<uint8_t>& mask, int g);

// Full path from a captured attention stack to a masked grid.
RolloutMap rollout_map(const AttentionStack& stack, const Image& low_res, int g,
                       double coverage = 0.5);

}  // namespace tmsc
