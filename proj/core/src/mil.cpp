#include "tmsc/mil.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "tmsc/rng.hpp"

namespace tmsc {

MILParams init_mil(int embed_dim, int hidden, uint64_t seed) {
    if (embed_dim <= 0 || hidden <= 0) {
        throw std::invalid_argument("mil: dimensions must be positive");
    }
    Rng rng(seed);
    const double v_scale = 1.0 / std::sqrt(static_cast<double>(embed_dim));
    const double w_scale = 1.0 / std::sqrt(static_cast<double>(hidden));
    std::vector<float> v(static_cast<size_t>(hidden) * embed_dim);
    for (auto& x : v) x = static_cast<float>(rng.truncated_normal() * v_scale);
    std::vector<float> w(static_cast<size_t>(hidden));
    for (auto& x : w) x = static_cast<float>(rng.truncated_normal() * w_scale);
    MILParams p;
    p.v = Tensor::from_data({hidden, embed_dim}, std::move(v), true);
    p.w = Tensor::from_data({hidden, 1}, std::move(w), true);
    return p;
}

Tensor mil_attention_pool(const std::vector<Tensor>& features,
                          const std::vector<float>& attention, const MILParams& params) {
    if (features.empty()) throw std::invalid_argument("mil_attention_pool: empty bag");
    if (attention.size() != features.size()) {
        throw std::invalid_argument("mil_attention_pool: " + std::to_string(features.size()) +
                                    " features vs " + std::to_string(attention.size()) +
                                    " attention values");
    }
    const int d = params.v.cols();
    std::vector<Tensor> scaled;
    scaled.reserve(features.size());
    for (size_t i = 0; i < features.size(); ++i) {
        if (features[i].shape() != std::vector<int>{1, d}) {
            throw std::invalid_argument("mil_attention_pool: feature " + std::to_string(i) +
                                        " has shape " + shape_str(features[i].shape()) +
                                        ", expected [1, " + std::to_string(d) + "]");
        }
        scaled.push_back(scale(features[i], attention[i]));
    }

    Tensor stacked = concat_rows(scaled);                       // n x d
    Tensor gates = tanh(matmul(stacked, transpose(params.v)));  // n x hidden
    Tensor logits = matmul(gates, params.w);                    // n x 1
    Tensor weights = row_softmax(transpose(logits));            // 1 x n
    return matmul(weights, stacked);                            // 1 x d
}

}  // namespace tmsc
