#pragma once

#include <vector>

#include "tmsc/image.hpp"
#include "tmsc/rollout.hpp"

namespace tmsc {

struct Selection {
    int grid_index = 0;   // row-major cell index, 0..g*g-1
    float attention = 0;  // value of the cell before suppression
};

// Iterative argmax with 4-neighborhood suppression over a working copy of the
// grid. Each round picks the highest unselected cell (ties toward the
// smallest row-major index, which also covers the exhausted-grid fallback),
// records its original attention value, then zeroes the cell and its
// top/bottom/left/right neighbors. Always returns exactly n_select entries.
std::vector<Selection> nms_patch_select(const RolloutMap& map, int n_select);
std::vector<Selection> nms_patch_select(const std::vector<float>& grid, int g, int n_select);

// Axis-aligned crops of the high-resolution image at the given grid cells.
// The image side must be divisible by g; indices must be unique and in range.
std::vector<Image> extract_patches(const Image& high_res, const std::vector<int>& indices,
                                   int g);

struct PatchBag {
    std::vector<Selection> picks;
    std::vector<Image> patches;
};

PatchBag select_patch_bag(const RolloutMap& map, const Image& high_res, int n_select);

}  // namespace tmsc
