#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tmsc/image.hpp"

namespace tmsc {

// One multi-resolution sample: the low-res thumbnail is exactly the
// block-mean of the high-res image.
struct Sample {
    Image low_res;
    Image high_res;
    int label = 0;
    std::vector<float> one_hot;
};

struct SynthConfig {
    int classes = 2;
    int grid_side = 6;           // g; cells per axis in the high-res image
    int patch_px = 16;           // high-res pixels per cell
    int low_side = 24;           // thumbnail side; must divide grid_side * patch_px
    int n_samples = 260;
    int texture_cell_count = 6;  // discriminative cells stamped per sample
    float noise_std = 0.04f;
    float corrupt_high_prob = 0.0f;  // chance the fine texture is destroyed
    float shape_cue_prob = 0.7f;     // chance the blob orientation matches the label
    uint64_t seed = 1;

    int high_side() const { return grid_side * patch_px; }
    void validate() const;
};

// Per-sample generation record, for oracles and uncertainty studies.
struct SampleMeta {
    std::vector<int> texture_cells;  // grid indices that carry (or carried) texture
    bool corrupted = false;          // texture replaced by noise
};

// Canonical class texture: oriented two-pixel stripes on a patch_px tile.
Image class_stencil(int label, int classes, int patch_px);

std::vector<Sample> generate_dataset(const SynthConfig& config);
std::pair<std::vector<Sample>, std::vector<SampleMeta>> generate_dataset_with_meta(
    const SynthConfig& config);

// Stratified 70/30 train-pool/test split, then 80/20 train/val of the pool.
// Deterministic per seed; every class needs at least 4 samples.
struct SplitIndices {
    std::vector<int> train, val, test;
};

SplitIndices split_dataset(const std::vector<Sample>& samples, uint64_t seed);

// On-disk layout: <id>_low.pgm / <id>_high.pgm pairs plus index.tsv with
// columns id, label, split.
void save_dataset(const std::vector<Sample>& samples, const SplitIndices& splits,
                  const std::string& dir);

struct LoadedDataset {
    std::vector<Sample> samples;
    SplitIndices splits;
};

LoadedDataset load_dataset(const std::string& dir);

}  // namespace tmsc
