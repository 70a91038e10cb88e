#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tmsc/evidential.hpp"
#include "tmsc/loss.hpp"
#include "tmsc/metrics.hpp"
#include "tmsc/mil.hpp"
#include "tmsc/patch_select.hpp"
#include "tmsc/rollout.hpp"
#include "tmsc/synth.hpp"
#include "tmsc/vit.hpp"

namespace tmsc {

enum class FusionMode { tmsn, avg };
enum class SelectionMode { nms, topk, random };

std::string to_string(FusionMode m);
std::string to_string(SelectionMode m);
FusionMode fusion_mode_from_string(const std::string& s);
SelectionMode selection_mode_from_string(const std::string& s);

struct RunConfig {
    SynthConfig synth;

    // shared encoder dims; the two branches get disjoint parameters
    int depth = 2;
    int heads = 2;
    int embed_dim = 32;
    float mlp_ratio = 2.0f;
    int low_patch = 4;   // LRN tokenization; low_side / low_patch must equal grid_side
    int high_patch = 4;  // HRN tokenization of the selected patches

    int n_select = 4;  // patches kept per sample
    int epochs = 30;
    float lr = 1e-3f;
    int batch_size = 4;
    uint64_t seed = 1;

    FusionMode fusion_mode = FusionMode::tmsn;
    SelectionMode selection_mode = SelectionMode::nms;
    bool ace_on_alpha_tilde = false;

    EncoderConfig lrn_config() const;
    EncoderConfig hrn_config() const;
    void validate() const;
};

// Key-value config file (one `key = value` per line, # comments).
RunConfig parse_run_config(const std::string& path);

struct ModelBundle {
    EncoderConfig lrn_config, hrn_config;
    EncoderParams lrn, hrn;
    MILParams mil;
    EvidenceHeadParams head_low, head_high;

    int classes = 0;
    int n_select = 0;
    int grid_side = 0;
    uint64_t seed = 0;
    FusionMode fusion_mode = FusionMode::tmsn;
    SelectionMode selection_mode = SelectionMode::nms;

    std::vector<Tensor> parameters() const;
    std::vector<std::pair<std::string, Tensor>> named_parameters() const;
};

ModelBundle init_model(const RunConfig& config);

struct Prediction {
    Opinion fused, low, high;
    int predicted_class = 0;
    double uncertainty = 0.0;  // fused u
    RolloutMap rollout;
    PatchBag bag;
};

// Pins the selection to externally chosen cells; used by the finite-difference
// gradient harness, where the discrete selection step must stay fixed while
// parameters are perturbed.
struct FrozenBag {
    std::vector<int> indices;
    std::vector<float> attention;
};

struct ForwardOptions {
    FusionMode fusion = FusionMode::tmsn;
    SelectionMode selection = SelectionMode::nms;
    uint64_t seed = 0;  // stream for random selection
    std::optional<FrozenBag> frozen;
};

ForwardOptions options_for(const ModelBundle& model);

// Full graph-building forward pass; the per-view and fused Dirichlet
// parameters stay connected to the trainable parameters.
struct ForwardTrace {
    Prediction prediction;
    Tensor alpha_fused, alpha_low, alpha_high;  // 1 x K
};

ForwardTrace run_forward(const Sample& sample, const ModelBundle& model,
                         const ForwardOptions& options);
Prediction forward(const Sample& sample, const ModelBundle& model);

struct EpochLog {
    int epoch = 0;
    double lambda = 0.0;
    LossBreakdown mean_loss;  // per-sample mean over the epoch
    double val_acc = 0.0;
};

struct TrainResult {
    ModelBundle model;
    std::vector<EpochLog> log;
};

// Algorithm: per epoch, shuffle the train split, accumulate the batch-mean
// total loss, backprop, one SGD step; lambda follows the warm-up schedule.
// Returns the parameters of the best validation epoch (ties -> later epoch).
TrainResult train_on(const std::vector<Sample>& samples, const SplitIndices& splits,
                     const RunConfig& config);
TrainResult train(const RunConfig& config);  // generates its own dataset

struct SampleRecord {
    int label = 0;
    int predicted = 0;
    double fused_u = 0.0, low_u = 0.0, high_u = 0.0;
};

struct EvalResult {
    MetricsReport metrics;
    std::vector<SampleRecord> records;
};

EvalResult evaluate(const ModelBundle& model, const std::vector<Sample>& samples);

void save_checkpoint(const ModelBundle& model, const std::string& path);
ModelBundle load_checkpoint(const std::string& path);

// log.tsv: epoch, lambda, loss_total, loss_fused_ace, loss_fused_kl,
// loss_v1_ace, loss_v1_kl, loss_v2_ace, loss_v2_kl, val_acc.
void write_training_log(const std::vector<EpochLog>& log, const std::string& path);

}  // namespace tmsc
