#include "tmsc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "tmsc/rng.hpp"

namespace tmsc {

namespace {

constexpr float kBackground = 0.9f;
constexpr float kBlobShade = 0.25f;
constexpr float kStripeDark = 0.15f;
constexpr float kStripeLight = 0.45f;
constexpr double kPi = 3.14159265358979323846;

struct Ellipse {
    double cx, cy, a, b, angle;

    bool contains(double x, double y) const {
        const double dx = x - cx, dy = y - cy;
        const double u = dx * std::cos(angle) + dy * std::sin(angle);
        const double v = -dx * std::sin(angle) + dy * std::cos(angle);
        return (u * u) / (a * a) + (v * v) / (b * b) <= 1.0;
    }
};

// Cells covered by the ellipse at >= 50% of their pixels, row-major order.
std::vector<int> covered_cells(const Ellipse& e, int g, int patch_px) {
    std::vector<int> cells;
    for (int r = 0; r < g; ++r) {
        for (int c = 0; c < g; ++c) {
            int inside = 0;
            for (int dy = 0; dy < patch_px; ++dy)
                for (int dx = 0; dx < patch_px; ++dx)
                    if (e.contains(c * patch_px + dx + 0.5, r * patch_px + dy + 0.5)) ++inside;
            if (2 * inside >= patch_px * patch_px) cells.push_back(r * g + c);
        }
    }
    return cells;
}

float stripe_value(int label, int classes, int x, int y) {
    const double phi = kPi * label / classes;
    const double band = std::floor((std::cos(phi) * x + std::sin(phi) * y) / 2.0);
    const auto parity = static_cast<int64_t>(band);
    return ((parity % 2) + 2) % 2 == 0 ? kStripeDark : kStripeLight;
}

}  // namespace

void SynthConfig::validate() const {
    if (classes < 2) throw std::invalid_argument("synth: need at least 2 classes");
    if (grid_side <= 0 || patch_px <= 0) throw std::invalid_argument("synth: non-positive geometry");
    if (low_side <= 0 || high_side() % low_side != 0) {
        throw std::invalid_argument("synth: high side " + std::to_string(high_side()) +
                                    " not divisible by low side " + std::to_string(low_side));
    }
    if (n_samples <= 0) throw std::invalid_argument("synth: n_samples must be positive");
    if (texture_cell_count < 1 || 2 * texture_cell_count > grid_side * grid_side) {
        throw std::invalid_argument("synth: texture_cell_count " +
                                    std::to_string(texture_cell_count) + " outside 1.." +
                                    std::to_string(grid_side * grid_side / 2));
    }
    if (noise_std < 0.0f) throw std::invalid_argument("synth: negative noise_std");
    if (corrupt_high_prob < 0.0f || corrupt_high_prob > 1.0f) {
        throw std::invalid_argument("synth: corrupt_high_prob outside [0,1]");
    }
    if (shape_cue_prob < 0.0f || shape_cue_prob > 1.0f) {
        throw std::invalid_argument("synth: shape_cue_prob outside [0,1]");
    }
}

Image class_stencil(int label, int classes, int patch_px) {
    if (label < 0 || label >= classes) throw std::invalid_argument("stencil: label out of range");
    Image tile(patch_px, patch_px);
    for (int y = 0; y < patch_px; ++y)
        for (int x = 0; x < patch_px; ++x) tile.at(y, x) = stripe_value(label, classes, x, y);
    return tile;
}

std::pair<std::vector<Sample>, std::vector<SampleMeta>> generate_dataset_with_meta(
    const SynthConfig& config) {
    config.validate();
    const int side = config.high_side();
    const int g = config.grid_side;
    const int p = config.patch_px;

    std::vector<Sample> samples;
    std::vector<SampleMeta> metas;
    samples.reserve(config.n_samples);
    metas.reserve(config.n_samples);

    for (int i = 0; i < config.n_samples; ++i) {
        Rng rng(derive_seed(config.seed, static_cast<uint64_t>(i)));
        const int label = i % config.classes;  // balanced classes

        // blob geometry; the orientation is the weak low-res class cue
        Ellipse blob;
        blob.cx = side * (0.5 + 0.12 * (rng.uniform() - 0.5));
        blob.cy = side * (0.5 + 0.12 * (rng.uniform() - 0.5));
        blob.a = side * (0.32 + 0.08 * rng.uniform());
        blob.b = side * (0.19 + 0.05 * rng.uniform());
        int shape_class = label;
        if (rng.uniform() >= config.shape_cue_prob) {
            shape_class = static_cast<int>(rng.below(static_cast<uint64_t>(config.classes)));
        }
        blob.angle = kPi * shape_class / config.classes;

        std::vector<int> fg_cells = covered_cells(blob, g, p);
        while (static_cast<int>(fg_cells.size()) < config.texture_cell_count) {
            blob.a = std::min(blob.a * 1.12, side * 0.49);
            blob.b = std::min(blob.b * 1.12, side * 0.49);
            auto grown = covered_cells(blob, g, p);
            if (grown.size() == fg_cells.size() && static_cast<int>(grown.size()) <
                config.texture_cell_count) {
                throw std::runtime_error("synth: blob cannot cover texture_cell_count cells");
            }
            fg_cells = std::move(grown);
        }

        Sample s;
        s.label = label;
        s.one_hot.assign(config.classes, 0.0f);
        s.one_hot[label] = 1.0f;
        s.high_res = Image(side, side, kBackground);
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side; ++x)
                if (blob.contains(x + 0.5, y + 0.5)) s.high_res.at(y, x) = kBlobShade;

        rng.shuffle(fg_cells);
        SampleMeta meta;
        meta.texture_cells.assign(fg_cells.begin(), fg_cells.begin() + config.texture_cell_count);
        std::sort(meta.texture_cells.begin(), meta.texture_cells.end());
        meta.corrupted = rng.uniform() < config.corrupt_high_prob;

        for (int cell : meta.texture_cells) {
            const int r = cell / g, c = cell % g;
            for (int dy = 0; dy < p; ++dy) {
                for (int dx = 0; dx < p; ++dx) {
                    float v = meta.corrupted
                                  ? static_cast<float>(0.1 + 0.35 * rng.uniform())
                                  : stripe_value(label, config.classes, dx, dy);
                    s.high_res.at(r * p + dy, c * p + dx) = v;
                }
            }
        }

        if (config.noise_std > 0.0f) {
            for (auto& v : s.high_res.pixels) {
                v = std::clamp(v + static_cast<float>(rng.normal() * config.noise_std), 0.0f,
                               1.0f);
            }
        }
        s.low_res = block_mean(s.high_res, side / config.low_side);

        samples.push_back(std::move(s));
        metas.push_back(std::move(meta));
    }
    return {std::move(samples), std::move(metas)};
}

std::vector<Sample> generate_dataset(const SynthConfig& config) {
    return generate_dataset_with_meta(config).first;
}

SplitIndices split_dataset(const std::vector<Sample>& samples, uint64_t seed) {
    if (samples.size() < 10) {
        throw std::invalid_argument("split_dataset: need at least 10 samples, got " +
                                    std::to_string(samples.size()));
    }
    int classes = 0;
    for (const auto& s : samples) classes = std::max(classes, s.label + 1);
    std::vector<std::vector<int>> by_class(classes);
    for (size_t i = 0; i < samples.size(); ++i) {
        by_class[samples[i].label].push_back(static_cast<int>(i));
    }

    SplitIndices out;
    Rng rng(derive_seed(seed, 0x5717ULL));
    for (int k = 0; k < classes; ++k) {
        auto& members = by_class[k];
        if (members.size() < 4) {
            throw std::invalid_argument("split_dataset: class " + std::to_string(k) + " has " +
                                        std::to_string(members.size()) +
                                        " samples, cannot stratify");
        }
        rng.shuffle(members);
        const auto n = static_cast<int64_t>(members.size());
        const auto n_test = std::llround(0.3 * static_cast<double>(n));
        const int64_t pool = n - n_test;
        const auto n_val = std::llround(0.2 * static_cast<double>(pool));
        const int64_t n_train = pool - n_val;
        for (int64_t i = 0; i < n; ++i) {
            if (i < n_train) out.train.push_back(members[i]);
            else if (i < n_train + n_val) out.val.push_back(members[i]);
            else out.test.push_back(members[i]);
        }
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.val.begin(), out.val.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

namespace {

std::string sample_id(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06d", index);
    return buf;
}

}  // namespace

void save_dataset(const std::vector<Sample>& samples, const SplitIndices& splits,
                  const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::vector<std::string> split_of(samples.size(), "train");
    for (int i : splits.val) split_of.at(i) = "val";
    for (int i : splits.test) split_of.at(i) = "test";
    for (int i : splits.train) split_of.at(i) = "train";

    std::ofstream manifest(fs::path(dir) / "index.tsv");
    if (!manifest) throw std::runtime_error("save_dataset: cannot write manifest in " + dir);
    for (size_t i = 0; i < samples.size(); ++i) {
        const std::string id = sample_id(static_cast<int>(i));
        write_pgm(samples[i].low_res, (fs::path(dir) / (id + "_low.pgm")).string());
        write_pgm(samples[i].high_res, (fs::path(dir) / (id + "_high.pgm")).string());
        manifest << id << "\t" << samples[i].label << "\t" << split_of[i] << "\n";
    }
}

LoadedDataset load_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream manifest(fs::path(dir) / "index.tsv");
    if (!manifest) throw std::runtime_error("load_dataset: no index.tsv in " + dir);

    LoadedDataset out;
    std::string line;
    int classes = 0;
    std::vector<std::string> split_names;
    while (std::getline(manifest, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string id, label_str, split;
        if (!std::getline(row, id, '\t') || !std::getline(row, label_str, '\t') ||
            !std::getline(row, split, '\t')) {
            throw std::runtime_error("load_dataset: malformed manifest line: " + line);
        }
        Sample s;
        s.label = std::stoi(label_str);
        classes = std::max(classes, s.label + 1);
        s.low_res = read_pgm((fs::path(dir) / (id + "_low.pgm")).string());
        s.high_res = read_pgm((fs::path(dir) / (id + "_high.pgm")).string());
        out.samples.push_back(std::move(s));
        split_names.push_back(split);
    }
    for (size_t i = 0; i < out.samples.size(); ++i) {
        out.samples[i].one_hot.assign(classes, 0.0f);
        out.samples[i].one_hot[out.samples[i].label] = 1.0f;
        const auto idx = static_cast<int>(i);
        if (split_names[i] == "train") out.splits.train.push_back(idx);
        else if (split_names[i] == "val") out.splits.val.push_back(idx);
        else if (split_names[i] == "test") out.splits.test.push_back(idx);
        else throw std::runtime_error("load_dataset: unknown split '" + split_names[i] + "'");
    }
    return out;
}

}  // namespace tmsc
