#include "tmsc/vit.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "tmsc/rng.hpp"

namespace tmsc {

int EncoderConfig::mlp_hidden() const {
    return static_cast<int>(std::lround(static_cast<double>(mlp_ratio) * embed_dim));
}

void EncoderConfig::validate() const {
    if (image_side <= 0 || patch_size <= 0 || image_side % patch_size != 0) {
        throw std::invalid_argument("encoder: image side " + std::to_string(image_side) +
                                    " not divisible by patch size " + std::to_string(patch_size));
    }
    if (channels <= 0) throw std::invalid_argument("encoder: channels must be positive");
    if (depth <= 0) throw std::invalid_argument("encoder: depth must be positive");
    if (heads <= 0 || embed_dim <= 0 || embed_dim % heads != 0) {
        throw std::invalid_argument("encoder: embed dim " + std::to_string(embed_dim) +
                                    " not divisible by heads " + std::to_string(heads));
    }
    if (mlp_hidden() <= 0) throw std::invalid_argument("encoder: mlp_ratio too small");
}

Tensor patchify(const std::vector<Image>& planes, int patch_size) {
    if (planes.empty()) throw std::invalid_argument("patchify: no image planes");
    const int w = planes[0].width, h = planes[0].height;
    for (const auto& p : planes) {
        if (p.width != w || p.height != h) {
            throw std::invalid_argument("patchify: plane sizes differ");
        }
    }
    if (patch_size <= 0 || w % patch_size != 0 || h % patch_size != 0) {
        throw std::invalid_argument("patchify: " + std::to_string(w) + "x" + std::to_string(h) +
                                    " not divisible by patch size " + std::to_string(patch_size));
    }
    const int gx = w / patch_size, gy = h / patch_size;
    const int channels = static_cast<int>(planes.size());
    const int pd = patch_size * patch_size * channels;
    std::vector<float> data(static_cast<size_t>(gx) * gy * pd);
    size_t t = 0;
    for (int py = 0; py < gy; ++py) {
        for (int px = 0; px < gx; ++px) {
            float* tok = data.data() + t * pd;
            size_t k = 0;
            for (int dy = 0; dy < patch_size; ++dy) {
                for (int dx = 0; dx < patch_size; ++dx) {
                    for (int c = 0; c < channels; ++c) {
                        tok[k++] = planes[c].at(py * patch_size + dy, px * patch_size + dx);
                    }
                }
            }
            ++t;
        }
    }
    return Tensor::from_data({gx * gy, pd}, std::move(data));
}

Tensor patchify(const Image& image, int patch_size) {
    return patchify(std::vector<Image>{image}, patch_size);
}

Image unpatchify(const Tensor& tokens, int image_side, int patch_size) {
    const int g = image_side / patch_size;
    if (image_side % patch_size != 0 || tokens.shape() !=
        std::vector<int>{g * g, patch_size * patch_size}) {
        throw std::invalid_argument("unpatchify: tokens of shape " + shape_str(tokens.shape()) +
                                    " do not tile a " + std::to_string(image_side) + "px image");
    }
    Image img(image_side, image_side);
    for (int t = 0; t < g * g; ++t) {
        const int py = t / g, px = t % g;
        for (int dy = 0; dy < patch_size; ++dy)
            for (int dx = 0; dx < patch_size; ++dx)
                img.at(py * patch_size + dy, px * patch_size + dx) =
                    tokens.at2(t, dy * patch_size + dx);
    }
    return img;
}

namespace {

Tensor init_weight(Rng& rng, int rows, int cols, int fan_in) {
    std::vector<float> data(static_cast<size_t>(rows) * cols);
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : data) v = static_cast<float>(rng.truncated_normal() * scale);
    return Tensor::from_data({rows, cols}, std::move(data), true);
}

Tensor init_const(int rows, int cols, float value) {
    return Tensor::full({rows, cols}, value, true);
}

}  // namespace

int64_t parameter_count(const EncoderConfig& c) {
    c.validate();
    const int64_t d = c.embed_dim, dh = c.head_dim(), hid = c.mlp_hidden();
    const int64_t t = c.token_count();
    int64_t n = static_cast<int64_t>(c.patch_dim()) * d + d;  // patch projection
    n += d + t * d;                                           // class token + positions
    const int64_t per_layer = 2 * d                            // norm1
                              + 3 * c.heads * (d * dh + dh)    // qkv
                              + c.heads * (dh * d) + d         // output projection
                              + 2 * d                          // norm2
                              + d * hid + hid + hid * d + d;   // mlp
    n += c.depth * per_layer;
    n += 2 * d;  // final norm
    return n;
}

EncoderParams init_encoder(const EncoderConfig& c, uint64_t seed) {
    c.validate();
    Rng rng(seed);
    const int d = c.embed_dim, dh = c.head_dim(), hid = c.mlp_hidden();

    EncoderParams p;
    p.patch_weight = init_weight(rng, c.patch_dim(), d, c.patch_dim());
    p.patch_bias = init_const(1, d, 0.0f);
    p.cls_token = init_weight(rng, 1, d, d);
    p.pos_embed = init_weight(rng, c.token_count(), d, d);
    p.layers.resize(c.depth);
    for (auto& layer : p.layers) {
        layer.norm1_gamma = init_const(1, d, 1.0f);
        layer.norm1_beta = init_const(1, d, 0.0f);
        for (int h = 0; h < c.heads; ++h) {
            layer.wq.push_back(init_weight(rng, d, dh, d));
            layer.bq.push_back(init_const(1, dh, 0.0f));
            layer.wk.push_back(init_weight(rng, d, dh, d));
            layer.bk.push_back(init_const(1, dh, 0.0f));
            layer.wv.push_back(init_weight(rng, d, dh, d));
            layer.bv.push_back(init_const(1, dh, 0.0f));
            layer.wo.push_back(init_weight(rng, dh, d, dh));
        }
        layer.attn_bias = init_const(1, d, 0.0f);
        layer.norm2_gamma = init_const(1, d, 1.0f);
        layer.norm2_beta = init_const(1, d, 0.0f);
        layer.mlp_w1 = init_weight(rng, d, hid, d);
        layer.mlp_b1 = init_const(1, hid, 0.0f);
        layer.mlp_w2 = init_weight(rng, hid, d, hid);
        layer.mlp_b2 = init_const(1, d, 0.0f);
    }
    p.final_gamma = init_const(1, d, 1.0f);
    p.final_beta = init_const(1, d, 0.0f);
    return p;
}

void EncoderParams::collect_parameters(std::vector<Tensor>& out) const {
    out.push_back(patch_weight);
    out.push_back(patch_bias);
    out.push_back(cls_token);
    out.push_back(pos_embed);
    for (const auto& l : layers) {
        out.push_back(l.norm1_gamma);
        out.push_back(l.norm1_beta);
        for (size_t h = 0; h < l.wq.size(); ++h) {
            out.push_back(l.wq[h]);
            out.push_back(l.bq[h]);
            out.push_back(l.wk[h]);
            out.push_back(l.bk[h]);
            out.push_back(l.wv[h]);
            out.push_back(l.bv[h]);
            out.push_back(l.wo[h]);
        }
        out.push_back(l.attn_bias);
        out.push_back(l.norm2_gamma);
        out.push_back(l.norm2_beta);
        out.push_back(l.mlp_w1);
        out.push_back(l.mlp_b1);
        out.push_back(l.mlp_w2);
        out.push_back(l.mlp_b2);
    }
    out.push_back(final_gamma);
    out.push_back(final_beta);
}

std::vector<Tensor> EncoderParams::parameters() const {
    std::vector<Tensor> out;
    collect_parameters(out);
    return out;
}

EncodeResult encode(const Image& image, const EncoderParams& params,
                    const EncoderConfig& config) {
    config.validate();
    if (config.channels != 1) {
        throw std::invalid_argument("encode: only single-channel images are wired up");
    }
    if (image.width != config.image_side || image.height != config.image_side) {
        throw std::invalid_argument("encode: image " + std::to_string(image.width) + "x" +
                                    std::to_string(image.height) + " does not match config side " +
                                    std::to_string(config.image_side));
    }

    const int t_count = config.token_count();
    const float att_scale = static_cast<float>(1.0 / std::sqrt(config.head_dim()));

    Tensor tokens = patchify(image, config.patch_size);
    Tensor x = add_rowvec(matmul(tokens, params.patch_weight), params.patch_bias);
    x = add(concat_rows({params.cls_token, x}), params.pos_embed);

    AttentionStack stack;
    stack.tokens = t_count;
    for (const auto& layer : params.layers) {
        Tensor h = layer_norm(x, layer.norm1_gamma, layer.norm1_beta);
        std::vector<double> avg(static_cast<size_t>(t_count) * t_count, 0.0);
        Tensor attn_out;
        for (size_t head = 0; head < layer.wq.size(); ++head) {
            Tensor q = add_rowvec(matmul(h, layer.wq[head]), layer.bq[head]);
            Tensor k = add_rowvec(matmul(h, layer.wk[head]), layer.bk[head]);
            Tensor v = add_rowvec(matmul(h, layer.wv[head]), layer.bv[head]);
            Tensor att = row_softmax(scale(matmul(q, transpose(k)), att_scale));
            const auto& att_vals = att.data();
            for (size_t i = 0; i < avg.size(); ++i) avg[i] += att_vals[i];
            Tensor head_out = matmul(matmul(att, v), layer.wo[head]);
            attn_out = head == 0 ? head_out : add(attn_out, head_out);
        }
        std::vector<float> captured(avg.size());
        const double inv_heads = 1.0 / static_cast<double>(layer.wq.size());
        for (size_t i = 0; i < avg.size(); ++i) captured[i] = static_cast<float>(avg[i] * inv_heads);
        stack.layers.push_back(std::move(captured));

        x = add(x, add_rowvec(attn_out, layer.attn_bias));
        Tensor m = layer_norm(x, layer.norm2_gamma, layer.norm2_beta);
        m = tanh(add_rowvec(matmul(m, layer.mlp_w1), layer.mlp_b1));
        m = add_rowvec(matmul(m, layer.mlp_w2), layer.mlp_b2);
        x = add(x, m);
    }

    Tensor final = layer_norm(x, params.final_gamma, params.final_beta);
    return EncodeResult{take_row(final, 0), std::move(stack)};
}

}  // namespace tmsc
