#include "tmsc/rollout.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tmsc {

std::vector<float> renormalize_layer(const std::vector<float>& attention, int tokens) {
    if (tokens <= 0 || attention.size() != static_cast<size_t>(tokens) * tokens) {
        throw std::invalid_argument("renormalize_layer: expected square " +
                                    std::to_string(tokens) + "x" + std::to_string(tokens) +
                                    " matrix, got " + std::to_string(attention.size()) +
                                    " entries");
    }
    std::vector<float> out(attention.size());
    for (int i = 0; i < tokens; ++i) {
        for (int j = 0; j < tokens; ++j) {
            const double identity = i == j ? 1.0 : 0.0;
            out[static_cast<size_t>(i) * tokens + j] = static_cast<float>(
                0.5 * (static_cast<double>(attention[static_cast<size_t>(i) * tokens + j]) +
                       identity));
        }
    }
    return out;
}

std::vector<double> compute_rollout(const AttentionStack& stack) {
    if (stack.layers.empty()) throw std::invalid_argument("compute_rollout: empty attention stack");
    const int t = stack.tokens;
    for (const auto& layer : stack.layers) {
        if (layer.size() != static_cast<size_t>(t) * t) {
            throw std::invalid_argument("compute_rollout: layer size mismatch");
        }
    }

    // rollout(0) = A(0); rollout(l) = A(l) * rollout(l-1)
    std::vector<double> rollout(static_cast<size_t>(t) * t);
    {
        const auto a0 = renormalize_layer(stack.layers[0], t);
        for (size_t i = 0; i < rollout.size(); ++i) rollout[i] = a0[i];
    }
    std::vector<double> next(rollout.size());
    for (size_t l = 1; l < stack.layers.size(); ++l) {
        const auto a = renormalize_layer(stack.layers[l], t);
        for (int i = 0; i < t; ++i) {
            for (int j = 0; j < t; ++j) {
                double acc = 0.0;
                for (int k = 0; k < t; ++k) {
                    acc += static_cast<double>(a[static_cast<size_t>(i) * t + k]) *
                           rollout[static_cast<size_t>(k) * t + j];
                }
                next[static_cast<size_t>(i) * t + j] = acc;
            }
        }
        rollout.swap(next);
    }
    return rollout;
}

std::vector<float> extract_cls_grid(const std::vector<double>& rollout_top, int tokens, int g) {
    if (tokens != g * g + 1) {
        throw std::invalid_argument("extract_cls_grid: token count " + std::to_string(tokens) +
                                    " does not match grid side " + std::to_string(g));
    }
    if (rollout_top.size() != static_cast<size_t>(tokens) * tokens) {
        throw std::invalid_argument("extract_cls_grid: rollout matrix size mismatch");
    }
    std::vector<float> grid(static_cast<size_t>(g) * g);
    // class token is row/column 0
    for (int q = 0; q < g * g; ++q) {
        grid[q] = static_cast<float>(rollout_top[static_cast<size_t>(q) + 1]);
    }
    return grid;
}

float otsu_threshold(const Image& gray) {
    if (gray.size() == 0) throw std::invalid_argument("otsu: empty image");
    constexpr int bins = 256;
    std::array<int64_t, bins> hist{};
    for (float v : gray.pixels) {
        int b = static_cast<int>(v * bins);
        b = b < 0 ? 0 : (b >= bins ? bins - 1 : b);
        ++hist[b];
    }

    const auto total = static_cast<int64_t>(gray.size());
    int64_t total_weighted = 0;
    for (int b = 0; b < bins; ++b) total_weighted += hist[b] * b;

    // maximize inter-class variance over the 255 bin boundaries
    double best_var = 0.0;
    int best_k = -1;
    int64_t w0 = 0, sum0 = 0;
    for (int k = 0; k < bins - 1; ++k) {
        w0 += hist[k];
        sum0 += hist[k] * k;
        const int64_t w1 = total - w0;
        if (w0 == 0 || w1 == 0) continue;
        const double mu0 = static_cast<double>(sum0) / w0;
        const double mu1 = static_cast<double>(total_weighted - sum0) / w1;
        const double var = static_cast<double>(w0) * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (var > best_var) {
            best_var = var;
            best_k = k;
        }
    }
    if (best_k < 0) return 1.0f;  // single populated bin: fail open, all foreground
    return static_cast<float>(best_k + 1) / bins;
}

std::vector<uint8_t> foreground_mask(const Image& gray, int g, double coverage) {
    if (g <= 0 || gray.width % g != 0 || gray.height % g != 0) {
        throw std::invalid_argument("foreground_mask: image " + std::to_string(gray.width) + "x" +
                                    std::to_string(gray.height) + " not divisible into " +
                                    std::to_string(g) + "x" + std::to_string(g) + " cells");
    }
    const float t = otsu_threshold(gray);
    const int cell_w = gray.width / g, cell_h = gray.height / g;
    const int cell_pixels = cell_w * cell_h;
    std::vector<uint8_t> mask(static_cast<size_t>(g) * g, 0);
    for (int r = 0; r < g; ++r) {
        for (int c = 0; c < g; ++c) {
            int count = 0;
            for (int dy = 0; dy < cell_h; ++dy)
                for (int dx = 0; dx < cell_w; ++dx)
                    if (gray.at(r * cell_h + dy, c * cell_w + dx) <= t) ++count;
            mask[static_cast<size_t>(r) * g + c] =
                static_cast<double>(count) >= coverage * cell_pixels ? 1 : 0;
        }
    }
    return mask;
}

RolloutMap apply_mask(const std::vector<float>& grid, const std::vector<uint8_t>& mask, int g) {
    if (grid.size() != static_cast<size_t>(g) * g || mask.size() != grid.size()) {
        throw std::invalid_argument("apply_mask: grid/mask sizes do not match " +
                                    std::to_string(g) + "x" + std::to_string(g));
    }
    RolloutMap out;
    out.grid_side = g;
    out.foreground = mask;
    out.grid.resize(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) out.grid[i] = mask[i] ? grid[i] : 0.0f;
    return out;
}

RolloutMap rollout_map(const AttentionStack& stack, const Image& low_res, int g,
                       double coverage) {
    const auto top = compute_rollout(stack);
    const auto grid = extract_cls_grid(top, stack.tokens, g);
    return apply_mask(grid, foreground_mask(low_res, g, coverage), g);
}

}  // namespace tmsc
