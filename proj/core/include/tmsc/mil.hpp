#pragma once

#include <cstdint>
#include <vector>

#include "tmsc/tensor.hpp"

namespace tmsc {

// Gating network of the multi-instance pooler: logits w^T tanh(V s_i) over
// attention-scaled instances s_i.
struct MILParams {
    Tensor v;  // hidden x d
    Tensor w;  // hidden x 1

    std::vector<Tensor> parameters() const { return {v, w}; }
};

MILParams init_mil(int embed_dim, int hidden, uint64_t seed);

// Aggregates a bag of instance features (each 1 x d) into one 1 x d vector:
// s_i = attention_i * h_i, a = softmax_i(w^T tanh(V s_i)), out = sum a_i s_i.
// The attention values enter as constants.
Tensor mil_attention_pool(const std::vector<Tensor>& features,
                          const std::vector<float>& attention, const MILParams& params);

}  // namespace tmsc
