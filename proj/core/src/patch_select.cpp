#include "tmsc/patch_select.hpp"

#include <stdexcept>
#include <string>

namespace tmsc {

std::vector<Selection> nms_patch_select(const std::vector<float>& grid, int g, int n_select) {
    const int q = g * g;
    if (g <= 0 || grid.size() != static_cast<size_t>(q)) {
        throw std::invalid_argument("nms_patch_select: grid is not " + std::to_string(g) + "x" +
                                    std::to_string(g));
    }
    if (n_select <= 0 || n_select > q) {
        throw std::invalid_argument("nms_patch_select: n_select " + std::to_string(n_select) +
                                    " outside 1.." + std::to_string(q));
    }

    std::vector<float> working = grid;
    std::vector<uint8_t> selected(static_cast<size_t>(q), 0);
    std::vector<Selection> picks;
    picks.reserve(n_select);
    for (int round = 0; round < n_select; ++round) {
        int best = -1;
        for (int i = 0; i < q; ++i) {
            if (selected[i]) continue;
            if (best < 0 || working[i] > working[best]) best = i;
        }
        picks.push_back(Selection{best, grid[best]});
        selected[best] = 1;

        const int r = best / g, c = best % g;
        working[best] = 0.0f;
        if (r > 0) working[best - g] = 0.0f;
        if (r + 1 < g) working[best + g] = 0.0f;
        if (c > 0) working[best - 1] = 0.0f;
        if (c + 1 < g) working[best + 1] = 0.0f;
    }
    return picks;
}

std::vector<Selection> nms_patch_select(const RolloutMap& map, int n_select) {
    return nms_patch_select(map.grid, map.grid_side, n_select);
}

std::vector<Image> extract_patches(const Image& high_res, const std::vector<int>& indices,
                                   int g) {
    if (g <= 0 || high_res.width != high_res.height || high_res.width % g != 0) {
        throw std::invalid_argument("extract_patches: image " + std::to_string(high_res.width) +
                                    "x" + std::to_string(high_res.height) +
                                    " does not split into a " + std::to_string(g) + "x" +
                                    std::to_string(g) + " grid");
    }
    const int q = g * g;
    std::vector<uint8_t> seen(static_cast<size_t>(q), 0);
    for (int idx : indices) {
        if (idx < 0 || idx >= q) {
            throw std::invalid_argument("extract_patches: index " + std::to_string(idx) +
                                        " outside 0.." + std::to_string(q - 1));
        }
        if (seen[idx]) {
            throw std::invalid_argument("extract_patches: duplicate index " + std::to_string(idx));
        }
        seen[idx] = 1;
    }

    const int patch_px = high_res.width / g;
    std::vector<Image> patches;
    patches.reserve(indices.size());
    for (int idx : indices) {
        const int r = idx / g, c = idx % g;
        Image tile(patch_px, patch_px);
        for (int dy = 0; dy < patch_px; ++dy)
            for (int dx = 0; dx < patch_px; ++dx)
                tile.at(dy, dx) = high_res.at(r * patch_px + dy, c * patch_px + dx);
        patches.push_back(std::move(tile));
    }
    return patches;
}

PatchBag select_patch_bag(const RolloutMap& map, const Image& high_res, int n_select) {
    PatchBag bag;
    bag.picks = nms_patch_select(map, n_select);
    std::vector<int> indices;
    indices.reserve(bag.picks.size());
    for (const auto& p : bag.picks) indices.push_back(p.grid_index);
    bag.patches = extract_patches(high_res, indices, map.grid_side);
    return bag;
}

}  // namespace tmsc
