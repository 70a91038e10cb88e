#include "tmsc/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "tmsc/checkpoint.hpp"
#include "tmsc/rng.hpp"

namespace tmsc {

std::string to_string(FusionMode m) { return m == FusionMode::tmsn ? "tmsn" : "avg"; }

std::string to_string(SelectionMode m) {
    switch (m) {
        case SelectionMode::nms: return "nms";
        case SelectionMode::topk: return "topk";
        default: return "random";
    }
}

FusionMode fusion_mode_from_string(const std::string& s) {
    if (s == "tmsn") return FusionMode::tmsn;
    if (s == "avg") return FusionMode::avg;
    throw std::invalid_argument("unknown fusion mode '" + s + "' (tmsn|avg)");
}

SelectionMode selection_mode_from_string(const std::string& s) {
    if (s == "nms") return SelectionMode::nms;
    if (s == "topk") return SelectionMode::topk;
    if (s == "random") return SelectionMode::random;
    throw std::invalid_argument("unknown selection mode '" + s + "' (nms|topk|random)");
}

EncoderConfig RunConfig::lrn_config() const {
    EncoderConfig c;
    c.image_side = synth.low_side;
    c.patch_size = low_patch;
    c.channels = 1;
    c.depth = depth;
    c.heads = heads;
    c.embed_dim = embed_dim;
    c.mlp_ratio = mlp_ratio;
    return c;
}

EncoderConfig RunConfig::hrn_config() const {
    EncoderConfig c;
    c.image_side = synth.patch_px;
    c.patch_size = high_patch;
    c.channels = 1;
    c.depth = depth;
    c.heads = heads;
    c.embed_dim = embed_dim;
    c.mlp_ratio = mlp_ratio;
    return c;
}

void RunConfig::validate() const {
    synth.validate();
    lrn_config().validate();
    hrn_config().validate();
    if (lrn_config().grid_side() != synth.grid_side) {
        throw std::invalid_argument(
            "config: thumbnail tokenization " + std::to_string(lrn_config().grid_side()) +
            "x does not match the patch grid " + std::to_string(synth.grid_side) + "x");
    }
    if (n_select < 1 || n_select > synth.grid_side * synth.grid_side) {
        throw std::invalid_argument("config: n_h " + std::to_string(n_select) + " outside 1.." +
                                    std::to_string(synth.grid_side * synth.grid_side));
    }
    if (epochs < 0) throw std::invalid_argument("config: negative epochs");
    if (!(lr > 0.0f)) throw std::invalid_argument("config: learning rate must be positive");
    if (batch_size < 1) throw std::invalid_argument("config: batch size must be positive");
}

ModelBundle init_model(const RunConfig& config) {
    config.validate();
    ModelBundle m;
    m.lrn_config = config.lrn_config();
    m.hrn_config = config.hrn_config();
    m.lrn = init_encoder(m.lrn_config, derive_seed(config.seed, 1));
    m.hrn = init_encoder(m.hrn_config, derive_seed(config.seed, 2));
    const int hidden = std::max(1, config.embed_dim / 2);
    m.mil = init_mil(config.embed_dim, hidden, derive_seed(config.seed, 3));
    m.head_low = init_evidence_head(config.synth.classes, config.embed_dim,
                                    derive_seed(config.seed, 4));
    m.head_high = init_evidence_head(config.synth.classes, config.embed_dim,
                                     derive_seed(config.seed, 5));
    m.classes = config.synth.classes;
    m.n_select = config.n_select;
    m.grid_side = config.synth.grid_side;
    m.seed = config.seed;
    m.fusion_mode = config.fusion_mode;
    m.selection_mode = config.selection_mode;
    return m;
}

std::vector<Tensor> ModelBundle::parameters() const {
    std::vector<Tensor> out;
    lrn.collect_parameters(out);
    hrn.collect_parameters(out);
    for (const auto& t : mil.parameters()) out.push_back(t);
    for (const auto& t : head_low.parameters()) out.push_back(t);
    for (const auto& t : head_high.parameters()) out.push_back(t);
    return out;
}

ForwardOptions options_for(const ModelBundle& model) {
    ForwardOptions o;
    o.fusion = model.fusion_mode;
    o.selection = model.selection_mode;
    o.seed = model.seed;
    return o;
}

namespace {

// Content hash so that per-sample randomized selection does not depend on
// evaluation order.
uint64_t sample_key(const Sample& s) {
    uint64_t h = 1469598103934665603ULL;
    auto mix_bytes = [&h](const void* ptr, size_t n) {
        const auto* p = static_cast<const unsigned char*>(ptr);
        for (size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 1099511628211ULL;
        }
    };
    mix_bytes(s.low_res.pixels.data(), s.low_res.pixels.size() * sizeof(float));
    mix_bytes(s.high_res.pixels.data(), s.high_res.pixels.size() * sizeof(float));
    mix_bytes(&s.label, sizeof(s.label));
    return h;
}

std::vector<Selection> topk_select(const RolloutMap& map, int n_select) {
    const int q = map.cell_count();
    if (n_select < 1 || n_select > q) {
        throw std::invalid_argument("topk: n_select outside grid");
    }
    std::vector<int> order(q);
    for (int i = 0; i < q; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&map](int a, int b) {
        return map.grid[a] > map.grid[b];  // ties keep the smaller index first
    });
    std::vector<Selection> picks;
    picks.reserve(n_select);
    for (int i = 0; i < n_select; ++i) picks.push_back({order[i], map.grid[order[i]]});
    return picks;
}

std::vector<Selection> random_select(int q, int n_select, uint64_t stream) {
    std::vector<int> order(q);
    for (int i = 0; i < q; ++i) order[i] = i;
    Rng rng(stream);
    rng.shuffle(order);
    std::vector<Selection> picks;
    picks.reserve(n_select);
    // random cropping has no attention signal; instances enter unweighted
    for (int i = 0; i < n_select; ++i) picks.push_back({order[i], 1.0f});
    return picks;
}

// Attention values rescaled to mean one before entering the pooler. Raw
// rollout cells are O(1/Q) and would shrink the bag feature (and its
// gradients) by that factor; the rescale keeps relative weights intact.
std::vector<float> pooling_weights(const std::vector<Selection>& picks) {
    double total = 0.0;
    for (const auto& p : picks) total += p.attention;
    std::vector<float> w(picks.size(), 1.0f);
    if (total > 0.0) {
        const double scale = static_cast<double>(picks.size()) / total;
        for (size_t i = 0; i < picks.size(); ++i) {
            w[i] = static_cast<float>(picks[i].attention * scale);
        }
    }
    return w;
}

}  // namespace

ForwardTrace run_forward(const Sample& sample, const ModelBundle& model,
                         const ForwardOptions& options) {
    if (static_cast<int>(sample.one_hot.size()) != model.classes) {
        throw std::invalid_argument("forward: sample has " +
                                    std::to_string(sample.one_hot.size()) +
                                    " classes, model expects " + std::to_string(model.classes));
    }

    // low-resolution view and its attention stack
    EncodeResult low_enc = encode(sample.low_res, model.lrn, model.lrn_config);
    RolloutMap rmap = rollout_map(low_enc.attention, sample.low_res, model.grid_side);

    // patch selection (inference-only; gradients do not flow through it)
    std::vector<Selection> picks;
    if (options.frozen.has_value()) {
        const auto& frozen = *options.frozen;
        if (frozen.indices.size() != frozen.attention.size()) {
            throw std::invalid_argument("forward: frozen bag indices/attention size mismatch");
        }
        for (size_t i = 0; i < frozen.indices.size(); ++i) {
            picks.push_back({frozen.indices[i], frozen.attention[i]});
        }
    } else {
        switch (options.selection) {
            case SelectionMode::nms: picks = nms_patch_select(rmap, model.n_select); break;
            case SelectionMode::topk: picks = topk_select(rmap, model.n_select); break;
            case SelectionMode::random:
                picks = random_select(rmap.cell_count(), model.n_select,
                                      derive_seed(options.seed, sample_key(sample)));
                break;
        }
    }

    PatchBag bag;
    bag.picks = picks;
    std::vector<int> indices;
    for (const auto& p : picks) indices.push_back(p.grid_index);
    bag.patches = extract_patches(sample.high_res, indices, model.grid_side);

    // high-resolution view
    std::vector<Tensor> features;
    features.reserve(bag.patches.size());
    for (const auto& patch : bag.patches) {
        features.push_back(encode(patch, model.hrn, model.hrn_config).feature);
    }
    Tensor z2 = mil_attention_pool(features, pooling_weights(picks), model.mil);

    // evidential opinions and fusion
    Tensor e1 = evidence_head(low_enc.feature, model.head_low);
    Tensor e2 = evidence_head(z2, model.head_high);
    OpinionT op1 = opinion_from_evidence_t(e1);
    OpinionT op2 = opinion_from_evidence_t(e2);
    OpinionT fused = options.fusion == FusionMode::tmsn ? ds_combine_t(op1, op2)
                                                        : avg_combine_t(op1, op2);

    ForwardTrace trace;
    trace.alpha_low = alpha_from_evidence_t(e1);
    trace.alpha_high = alpha_from_evidence_t(e2);
    trace.alpha_fused = alpha_from_opinion_t(fused);

    trace.prediction.low = opinion_values(op1);
    trace.prediction.high = opinion_values(op2);
    trace.prediction.fused = opinion_values(fused);
    trace.prediction.uncertainty = trace.prediction.fused.uncertainty;
    int best = 0;
    for (int k = 1; k < model.classes; ++k) {
        if (trace.prediction.fused.belief[k] > trace.prediction.fused.belief[best]) best = k;
    }
    trace.prediction.predicted_class = best;
    trace.prediction.rollout = std::move(rmap);
    trace.prediction.bag = std::move(bag);
    return trace;
}

Prediction forward(const Sample& sample, const ModelBundle& model) {
    return run_forward(sample, model, options_for(model)).prediction;
}

EvalResult evaluate(const ModelBundle& model, const std::vector<Sample>& samples) {
    if (samples.empty()) throw std::invalid_argument("evaluate: no samples");
    ConfusionMatrix cm(model.classes);
    EvalResult out;
    out.records.reserve(samples.size());
    const ForwardOptions options = options_for(model);
    for (const auto& s : samples) {
        ForwardTrace trace = run_forward(s, model, options);
        const auto& p = trace.prediction;
        cm.at(s.label, p.predicted_class) += 1;
        out.records.push_back({s.label, p.predicted_class, p.fused.uncertainty,
                               p.low.uncertainty, p.high.uncertainty});
    }
    out.metrics = compute_metrics(cm);
    return out;
}

namespace {

std::vector<std::vector<float>> snapshot_parameters(const std::vector<Tensor>& params) {
    std::vector<std::vector<float>> snap;
    snap.reserve(params.size());
    for (const auto& p : params) snap.push_back(p.data());
    return snap;
}

void restore_parameters(std::vector<Tensor>& params,
                        const std::vector<std::vector<float>>& snap) {
    for (size_t i = 0; i < params.size(); ++i) params[i].mutable_data() = snap[i];
}

void accumulate(LossBreakdown& into, const LossBreakdown& piece) {
    into.ace_fused += piece.ace_fused;
    into.kl_fused += piece.kl_fused;
    into.ace_v1 += piece.ace_v1;
    into.kl_v1 += piece.kl_v1;
    into.ace_v2 += piece.ace_v2;
    into.kl_v2 += piece.kl_v2;
    into.total += piece.total;
}

void scale_breakdown(LossBreakdown& b, double s) {
    b.ace_fused *= s;
    b.kl_fused *= s;
    b.ace_v1 *= s;
    b.kl_v1 *= s;
    b.ace_v2 *= s;
    b.kl_v2 *= s;
    b.total *= s;
}

}  // namespace

TrainResult train_on(const std::vector<Sample>& samples, const SplitIndices& splits,
                     const RunConfig& config) {
    config.validate();
    if (splits.train.empty()) throw std::invalid_argument("train: empty train split");
    for (int idx : splits.train) {
        if (idx < 0 || idx >= static_cast<int>(samples.size())) {
            throw std::invalid_argument("train: split index out of range");
        }
    }

    TrainResult result;
    result.model = init_model(config);
    std::vector<Tensor> params = result.model.parameters();

    std::vector<Sample> val_samples;
    for (int idx : splits.val) val_samples.push_back(samples[idx]);

    const ForwardOptions options = options_for(result.model);
    double best_val = -1.0;
    auto best_params = snapshot_parameters(params);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double lambda = lambda_schedule(epoch);
        std::vector<int> order = splits.train;
        Rng shuffle_rng(derive_seed(config.seed, 0x10000ULL + epoch));
        shuffle_rng.shuffle(order);

        LossBreakdown epoch_sum;
        for (size_t start = 0; start < order.size(); start += config.batch_size) {
            const size_t stop = std::min(order.size(), start + config.batch_size);
            Tensor batch_loss;
            for (size_t i = start; i < stop; ++i) {
                const Sample& s = samples[order[i]];
                ForwardTrace trace = run_forward(s, result.model, options);
                TotalLoss piece = total_loss(trace.alpha_fused, trace.alpha_low,
                                             trace.alpha_high, s.one_hot, lambda,
                                             config.ace_on_alpha_tilde);
                accumulate(epoch_sum, piece.breakdown);
                batch_loss = i == start ? piece.loss : add(batch_loss, piece.loss);
            }
            batch_loss = scale(batch_loss, 1.0f / static_cast<float>(stop - start));
            batch_loss.backward();
            sgd_step(params, config.lr);
        }
        scale_breakdown(epoch_sum, 1.0 / static_cast<double>(order.size()));
        epoch_sum.lambda = lambda;

        double val_acc = 0.0;
        if (!val_samples.empty()) {
            val_acc = evaluate(result.model, val_samples).metrics.acc;
        }
        result.log.push_back({epoch, lambda, epoch_sum, val_acc});

        if (val_acc >= best_val) {  // ties -> later epoch
            best_val = val_acc;
            best_params = snapshot_parameters(params);
        }
    }

    restore_parameters(params, best_params);
    return result;
}

TrainResult train(const RunConfig& config) {
    config.validate();
    auto samples = generate_dataset(config.synth);
    auto splits = split_dataset(samples, config.seed);
    return train_on(samples, splits, config);
}

// --- checkpoint --------------------------------------------------------------

namespace {

std::vector<std::pair<std::string, Tensor>> named_encoder(const std::string& prefix,
                                                          const EncoderParams& p) {
    std::vector<std::pair<std::string, Tensor>> out;
    out.emplace_back(prefix + ".patch_weight", p.patch_weight);
    out.emplace_back(prefix + ".patch_bias", p.patch_bias);
    out.emplace_back(prefix + ".cls_token", p.cls_token);
    out.emplace_back(prefix + ".pos_embed", p.pos_embed);
    for (size_t l = 0; l < p.layers.size(); ++l) {
        const auto& layer = p.layers[l];
        const std::string lp = prefix + ".layer" + std::to_string(l);
        out.emplace_back(lp + ".norm1_gamma", layer.norm1_gamma);
        out.emplace_back(lp + ".norm1_beta", layer.norm1_beta);
        for (size_t h = 0; h < layer.wq.size(); ++h) {
            const std::string hp = lp + ".head" + std::to_string(h);
            out.emplace_back(hp + ".wq", layer.wq[h]);
            out.emplace_back(hp + ".bq", layer.bq[h]);
            out.emplace_back(hp + ".wk", layer.wk[h]);
            out.emplace_back(hp + ".bk", layer.bk[h]);
            out.emplace_back(hp + ".wv", layer.wv[h]);
            out.emplace_back(hp + ".bv", layer.bv[h]);
            out.emplace_back(hp + ".wo", layer.wo[h]);
        }
        out.emplace_back(lp + ".attn_bias", layer.attn_bias);
        out.emplace_back(lp + ".norm2_gamma", layer.norm2_gamma);
        out.emplace_back(lp + ".norm2_beta", layer.norm2_beta);
        out.emplace_back(lp + ".mlp_w1", layer.mlp_w1);
        out.emplace_back(lp + ".mlp_b1", layer.mlp_b1);
        out.emplace_back(lp + ".mlp_w2", layer.mlp_w2);
        out.emplace_back(lp + ".mlp_b2", layer.mlp_b2);
    }
    out.emplace_back(prefix + ".final_gamma", p.final_gamma);
    out.emplace_back(prefix + ".final_beta", p.final_beta);
    return out;
}

Tensor meta_scalar(float v) { return Tensor::scalar(v); }

Tensor seed_tensor(uint64_t seed) {
    std::vector<float> bytes(8);
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<float>((seed >> (8 * i)) & 0xff);
    return Tensor::from_data({8}, std::move(bytes));
}

uint64_t seed_from_tensor(const Tensor& t) {
    if (t.numel() != 8) throw std::runtime_error("checkpoint: malformed meta.seed_bytes");
    uint64_t seed = 0;
    for (int i = 0; i < 8; ++i) {
        seed |= static_cast<uint64_t>(static_cast<uint8_t>(t.at(i))) << (8 * i);
    }
    return seed;
}

std::vector<std::pair<std::string, Tensor>> encoder_meta(const std::string& prefix,
                                                         const EncoderConfig& c) {
    return {
        {prefix + ".image_side", meta_scalar(static_cast<float>(c.image_side))},
        {prefix + ".patch_size", meta_scalar(static_cast<float>(c.patch_size))},
        {prefix + ".channels", meta_scalar(static_cast<float>(c.channels))},
        {prefix + ".depth", meta_scalar(static_cast<float>(c.depth))},
        {prefix + ".heads", meta_scalar(static_cast<float>(c.heads))},
        {prefix + ".embed_dim", meta_scalar(static_cast<float>(c.embed_dim))},
        {prefix + ".mlp_ratio", meta_scalar(c.mlp_ratio)},
    };
}

}  // namespace

std::vector<std::pair<std::string, Tensor>> ModelBundle::named_parameters() const {
    auto out = named_encoder("lrn", lrn);
    auto hrn_named = named_encoder("hrn", hrn);
    out.insert(out.end(), hrn_named.begin(), hrn_named.end());
    out.emplace_back("mil.v", mil.v);
    out.emplace_back("mil.w", mil.w);
    out.emplace_back("head_low.weight", head_low.weight);
    out.emplace_back("head_low.bias", head_low.bias);
    out.emplace_back("head_high.weight", head_high.weight);
    out.emplace_back("head_high.bias", head_high.bias);
    return out;
}

void save_checkpoint(const ModelBundle& model, const std::string& path) {
    auto entries = model.named_parameters();
    entries.emplace_back("meta.classes", meta_scalar(static_cast<float>(model.classes)));
    entries.emplace_back("meta.n_select", meta_scalar(static_cast<float>(model.n_select)));
    entries.emplace_back("meta.grid_side", meta_scalar(static_cast<float>(model.grid_side)));
    entries.emplace_back("meta.fusion_mode",
                         meta_scalar(static_cast<float>(model.fusion_mode == FusionMode::avg)));
    entries.emplace_back("meta.selection_mode",
                         meta_scalar(static_cast<float>(static_cast<int>(model.selection_mode))));
    entries.emplace_back("meta.seed_bytes", seed_tensor(model.seed));
    auto lrn_meta = encoder_meta("meta.lrn", model.lrn_config);
    auto hrn_meta = encoder_meta("meta.hrn", model.hrn_config);
    entries.insert(entries.end(), lrn_meta.begin(), lrn_meta.end());
    entries.insert(entries.end(), hrn_meta.begin(), hrn_meta.end());
    entries.emplace_back("meta.mil_hidden", meta_scalar(static_cast<float>(model.mil.v.rows())));
    write_tensor_file(path, entries);
}

namespace {

class TensorMap {
public:
    explicit TensorMap(std::vector<std::pair<std::string, Tensor>> entries,
                       const std::string& path)
        : path_(path) {
        for (auto& [name, tensor] : entries) {
            if (!map_.emplace(name, tensor).second) {
                throw std::runtime_error("checkpoint: duplicate tensor '" + name + "' in " + path);
            }
        }
    }

    Tensor take(const std::string& name) {
        auto it = map_.find(name);
        if (it == map_.end()) {
            throw std::runtime_error("checkpoint: missing tensor '" + name + "' in " + path_);
        }
        Tensor t = it->second;
        map_.erase(it);
        return t;
    }

    float scalar(const std::string& name) { return take(name).value(); }

    void expect_empty() const {
        if (!map_.empty()) {
            throw std::runtime_error("checkpoint: unexpected tensor '" + map_.begin()->first +
                                     "' in " + path_);
        }
    }

private:
    std::map<std::string, Tensor> map_;
    std::string path_;
};

EncoderConfig config_from_meta(TensorMap& map, const std::string& prefix) {
    EncoderConfig c;
    c.image_side = static_cast<int>(map.scalar(prefix + ".image_side"));
    c.patch_size = static_cast<int>(map.scalar(prefix + ".patch_size"));
    c.channels = static_cast<int>(map.scalar(prefix + ".channels"));
    c.depth = static_cast<int>(map.scalar(prefix + ".depth"));
    c.heads = static_cast<int>(map.scalar(prefix + ".heads"));
    c.embed_dim = static_cast<int>(map.scalar(prefix + ".embed_dim"));
    c.mlp_ratio = map.scalar(prefix + ".mlp_ratio");
    c.validate();
    return c;
}

Tensor load_param(TensorMap& map, const std::string& name, const std::vector<int>& shape) {
    Tensor stored = map.take(name);
    if (stored.shape() != shape) {
        throw std::runtime_error("checkpoint: tensor '" + name + "' has shape " +
                                 shape_str(stored.shape()) + ", expected " + shape_str(shape));
    }
    return Tensor::from_data(shape, stored.data(), true);
}

EncoderParams encoder_from_map(TensorMap& map, const std::string& prefix,
                               const EncoderConfig& c) {
    EncoderParams p;
    const int d = c.embed_dim, dh = c.head_dim(), hid = c.mlp_hidden();
    p.patch_weight = load_param(map, prefix + ".patch_weight", {c.patch_dim(), d});
    p.patch_bias = load_param(map, prefix + ".patch_bias", {1, d});
    p.cls_token = load_param(map, prefix + ".cls_token", {1, d});
    p.pos_embed = load_param(map, prefix + ".pos_embed", {c.token_count(), d});
    p.layers.resize(c.depth);
    for (int l = 0; l < c.depth; ++l) {
        auto& layer = p.layers[l];
        const std::string lp = prefix + ".layer" + std::to_string(l);
        layer.norm1_gamma = load_param(map, lp + ".norm1_gamma", {1, d});
        layer.norm1_beta = load_param(map, lp + ".norm1_beta", {1, d});
        for (int h = 0; h < c.heads; ++h) {
            const std::string hp = lp + ".head" + std::to_string(h);
            layer.wq.push_back(load_param(map, hp + ".wq", {d, dh}));
            layer.bq.push_back(load_param(map, hp + ".bq", {1, dh}));
            layer.wk.push_back(load_param(map, hp + ".wk", {d, dh}));
            layer.bk.push_back(load_param(map, hp + ".bk", {1, dh}));
            layer.wv.push_back(load_param(map, hp + ".wv", {d, dh}));
            layer.bv.push_back(load_param(map, hp + ".bv", {1, dh}));
            layer.wo.push_back(load_param(map, hp + ".wo", {dh, d}));
        }
        layer.attn_bias = load_param(map, lp + ".attn_bias", {1, d});
        layer.norm2_gamma = load_param(map, lp + ".norm2_gamma", {1, d});
        layer.norm2_beta = load_param(map, lp + ".norm2_beta", {1, d});
        layer.mlp_w1 = load_param(map, lp + ".mlp_w1", {d, hid});
        layer.mlp_b1 = load_param(map, lp + ".mlp_b1", {1, hid});
        layer.mlp_w2 = load_param(map, lp + ".mlp_w2", {hid, d});
        layer.mlp_b2 = load_param(map, lp + ".mlp_b2", {1, d});
    }
    p.final_gamma = load_param(map, prefix + ".final_gamma", {1, d});
    p.final_beta = load_param(map, prefix + ".final_beta", {1, d});
    return p;
}

}  // namespace

ModelBundle load_checkpoint(const std::string& path) {
    TensorMap map(read_tensor_file(path), path);

    ModelBundle m;
    m.lrn_config = config_from_meta(map, "meta.lrn");
    m.hrn_config = config_from_meta(map, "meta.hrn");
    m.classes = static_cast<int>(map.scalar("meta.classes"));
    m.n_select = static_cast<int>(map.scalar("meta.n_select"));
    m.grid_side = static_cast<int>(map.scalar("meta.grid_side"));
    m.fusion_mode = map.scalar("meta.fusion_mode") != 0.0f ? FusionMode::avg : FusionMode::tmsn;
    const int sel = static_cast<int>(map.scalar("meta.selection_mode"));
    if (sel < 0 || sel > 2) throw std::runtime_error("checkpoint: bad selection mode in " + path);
    m.selection_mode = static_cast<SelectionMode>(sel);
    m.seed = seed_from_tensor(map.take("meta.seed_bytes"));
    const int hidden = static_cast<int>(map.scalar("meta.mil_hidden"));

    if (m.classes < 2) throw std::runtime_error("checkpoint: bad class count in " + path);
    m.lrn = encoder_from_map(map, "lrn", m.lrn_config);
    m.hrn = encoder_from_map(map, "hrn", m.hrn_config);
    m.mil.v = load_param(map, "mil.v", {hidden, m.lrn_config.embed_dim});
    m.mil.w = load_param(map, "mil.w", {hidden, 1});
    m.head_low.weight = load_param(map, "head_low.weight", {m.classes, m.lrn_config.embed_dim});
    m.head_low.bias = load_param(map, "head_low.bias", {1, m.classes});
    m.head_high.weight = load_param(map, "head_high.weight", {m.classes, m.hrn_config.embed_dim});
    m.head_high.bias = load_param(map, "head_high.bias", {1, m.classes});
    map.expect_empty();
    return m;
}

// --- config file ---------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument("config: bad boolean for " + key + ": '" + v + "'");
}

}  // namespace

RunConfig parse_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);

    RunConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("config: line " + std::to_string(line_no) +
                                     " is not key = value: '" + line + "'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "classes") cfg.synth.classes = std::stoi(value);
            else if (key == "samples") cfg.synth.n_samples = std::stoi(value);
            else if (key == "grid") cfg.synth.grid_side = std::stoi(value);
            else if (key == "patch_px") cfg.synth.patch_px = std::stoi(value);
            else if (key == "low_side") cfg.synth.low_side = std::stoi(value);
            else if (key == "texture_cells") cfg.synth.texture_cell_count = std::stoi(value);
            else if (key == "noise_std") cfg.synth.noise_std = std::stof(value);
            else if (key == "corrupt_high_prob") cfg.synth.corrupt_high_prob = std::stof(value);
            else if (key == "shape_cue_prob") cfg.synth.shape_cue_prob = std::stof(value);
            else if (key == "depth") cfg.depth = std::stoi(value);
            else if (key == "heads") cfg.heads = std::stoi(value);
            else if (key == "embed_dim") cfg.embed_dim = std::stoi(value);
            else if (key == "mlp_ratio") cfg.mlp_ratio = std::stof(value);
            else if (key == "low_patch") cfg.low_patch = std::stoi(value);
            else if (key == "high_patch") cfg.high_patch = std::stoi(value);
            else if (key == "n_h") cfg.n_select = std::stoi(value);
            else if (key == "epochs") cfg.epochs = std::stoi(value);
            else if (key == "lr") cfg.lr = std::stof(value);
            else if (key == "batch_size") cfg.batch_size = std::stoi(value);
            else if (key == "seed") cfg.seed = std::stoull(value);
            else if (key == "fusion_mode") cfg.fusion_mode = fusion_mode_from_string(value);
            else if (key == "selection_mode")
                cfg.selection_mode = selection_mode_from_string(value);
            else if (key == "ace_on_alpha_tilde")
                cfg.ace_on_alpha_tilde = parse_bool(value, key);
            else throw std::runtime_error("config: unknown key '" + key + "'");
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error("config: line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    cfg.validate();
    return cfg;
}

void write_training_log(const std::vector<EpochLog>& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("log: cannot open " + path + " for writing");
    out << "epoch\tlambda\tloss_total\tloss_fused_ace\tloss_fused_kl\tloss_v1_ace\tloss_v1_kl\t"
           "loss_v2_ace\tloss_v2_kl\tval_acc\n";
    char buf[320];
    for (const auto& e : log) {
        std::snprintf(buf, sizeof(buf),
                      "%d\t%.4f\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\n", e.epoch,
                      e.lambda, e.mean_loss.total, e.mean_loss.ace_fused, e.mean_loss.kl_fused,
                      e.mean_loss.ace_v1, e.mean_loss.kl_v1, e.mean_loss.ace_v2,
                      e.mean_loss.kl_v2, e.val_acc);
        out << buf;
    }
    if (!out) throw std::runtime_error("log: write failed for " + path);
}

}  // namespace tmsc
