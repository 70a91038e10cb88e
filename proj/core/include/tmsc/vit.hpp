#pragma once

#include <cstdint>
#include <vector>

#include "tmsc/image.hpp"
#include "tmsc/tensor.hpp"

namespace tmsc {

// Small vision-transformer encoder. One shared architecture; the two branches
// of the pipeline instantiate it with disjoint parameter sets.
struct EncoderConfig {
    int image_side = 24;
    int patch_size = 4;
    int channels = 1;
    int depth = 2;
    int heads = 2;
    int embed_dim = 32;
    float mlp_ratio = 2.0f;

    int grid_side() const { return image_side / patch_size; }
    int token_count() const { return grid_side() * grid_side() + 1; }  // + class token
    int patch_dim() const { return patch_size * patch_size * channels; }
    int head_dim() const { return embed_dim / heads; }
    int mlp_hidden() const;
    void validate() const;
};

// Head-averaged post-softmax attention per layer, captured as plain values
// during the forward pass (the rollout consumer does not differentiate).
struct AttentionStack {
    int tokens = 0;
    std::vector<std::vector<float>> layers;  // each tokens x tokens, row-major
};

struct EncoderLayerParams {
    Tensor norm1_gamma, norm1_beta;
    std::vector<Tensor> wq, bq, wk, bk, wv, bv;  // one entry per head
    std::vector<Tensor> wo;                      // per-head output projection
    Tensor attn_bias;
    Tensor norm2_gamma, norm2_beta;
    Tensor mlp_w1, mlp_b1, mlp_w2, mlp_b2;
};

struct EncoderParams {
    Tensor patch_weight;  // patch_dim x d
    Tensor patch_bias;    // 1 x d
    Tensor cls_token;     // 1 x d
    Tensor pos_embed;     // T x d
    std::vector<EncoderLayerParams> layers;
    Tensor final_gamma, final_beta;

    void collect_parameters(std::vector<Tensor>& out) const;
    std::vector<Tensor> parameters() const;
};

struct EncodeResult {
    Tensor feature;  // 1 x d, class token after the final norm
    AttentionStack attention;
};

// Row-major patch tokens, (T-1) x patch_dim, as a constant leaf. Values of a
// multi-channel patch are laid out pixel-major, channel-minor.
Tensor patchify(const std::vector<Image>& planes, int patch_size);
Tensor patchify(const Image& image, int patch_size);

// Inverse of patchify for a single plane; used to validate the tiling.
Image unpatchify(const Tensor& tokens, int image_side, int patch_size);

int64_t parameter_count(const EncoderConfig& config);
EncoderParams init_encoder(const EncoderConfig& config, uint64_t seed);
EncodeResult encode(const Image& image, const EncoderParams& params,
                    const EncoderConfig& config);

}  // namespace tmsc
