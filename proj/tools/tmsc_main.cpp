#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tmsc/image.hpp"
#include "tmsc/pipeline.hpp"
#include "tmsc/synth.hpp"

namespace {

// Builds a sample from loose image files; the label slot is a placeholder.
tmsc::Sample sample_from_files(const std::string& low_path, const std::string& high_path,
                               int classes) {
    tmsc::Sample s;
    s.low_res = tmsc::read_pgm(low_path);
    s.high_res = tmsc::read_pgm(high_path);
    s.label = 0;
    s.one_hot.assign(classes, 0.0f);
    s.one_hot[0] = 1.0f;
    return s;
}

std::vector<tmsc::Sample> pick_split(const tmsc::LoadedDataset& data, const std::string& split) {
    const std::vector<int>* indices = nullptr;
    if (split == "train") indices = &data.splits.train;
    else if (split == "val") indices = &data.splits.val;
    else if (split == "test") indices = &data.splits.test;
    else throw std::runtime_error("unknown split '" + split + "' (train|val|test)");
    std::vector<tmsc::Sample> out;
    for (int i : *indices) out.push_back(data.samples[i]);
    if (out.empty()) throw std::runtime_error("split '" + split + "' is empty");
    return out;
}

int run_synth(const std::string& config_path, const std::string& out_dir) {
    tmsc::RunConfig cfg = tmsc::parse_run_config(config_path);
    auto samples = tmsc::generate_dataset(cfg.synth);
    auto splits = tmsc::split_dataset(samples, cfg.seed);
    tmsc::save_dataset(samples, splits, out_dir);
    std::printf("wrote %zu samples (%zu train / %zu val / %zu test) to %s\n", samples.size(),
                splits.train.size(), splits.val.size(), splits.test.size(), out_dir.c_str());
    return 0;
}

int run_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_path, const std::string& log_path) {
    tmsc::RunConfig cfg = tmsc::parse_run_config(config_path);
    tmsc::LoadedDataset data = tmsc::load_dataset(data_dir);
    tmsc::TrainResult result = tmsc::train_on(data.samples, data.splits, cfg);
    tmsc::save_checkpoint(result.model, out_path);
    if (!log_path.empty()) tmsc::write_training_log(result.log, log_path);
    double best_val = 0.0;
    for (const auto& e : result.log) best_val = std::max(best_val, e.val_acc);
    std::printf("trained %d epochs, best val acc %.4f, checkpoint %s\n", cfg.epochs, best_val,
                out_path.c_str());
    return 0;
}

int run_eval(const std::string& ckpt_path, const std::string& data_dir,
             const std::string& split) {
    tmsc::ModelBundle model = tmsc::load_checkpoint(ckpt_path);
    tmsc::LoadedDataset data = tmsc::load_dataset(data_dir);
    auto samples = pick_split(data, split);
    tmsc::EvalResult result = tmsc::evaluate(model, samples);
    std::printf("%s\n", result.metrics.tsv_line().c_str());
    std::printf("%s", result.metrics.pretty().c_str());
    return 0;
}

int run_infer(const std::string& ckpt_path, const std::string& low_path,
              const std::string& high_path) {
    tmsc::ModelBundle model = tmsc::load_checkpoint(ckpt_path);
    tmsc::Sample s = sample_from_files(low_path, high_path, model.classes);
    tmsc::Prediction p = tmsc::forward(s, model);
    std::printf("predicted_class\t%d\n", p.predicted_class);
    std::printf("fused_beliefs");
    for (double b : p.fused.belief) std::printf("\t%.6f", b);
    std::printf("\n");
    std::printf("uncertainty_fused\t%.6f\n", p.fused.uncertainty);
    std::printf("uncertainty_low\t%.6f\n", p.low.uncertainty);
    std::printf("uncertainty_high\t%.6f\n", p.high.uncertainty);
    return 0;
}

int run_rollout(const std::string& ckpt_path, const std::string& low_path,
                const std::string& high_path, const std::string& out_path) {
    tmsc::ModelBundle model = tmsc::load_checkpoint(ckpt_path);
    tmsc::Sample s = sample_from_files(low_path, high_path, model.classes);
    tmsc::Prediction p = tmsc::forward(s, model);
    std::vector<int> selected;
    for (const auto& pick : p.bag.picks) selected.push_back(pick.grid_index);
    tmsc::write_heatmap_overlay(p.rollout.grid, p.rollout.grid_side, selected,
                                model.hrn_config.image_side, out_path);
    std::printf("wrote %s\n", out_path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"trusted multi-scale image classification pipeline"};
    app.require_subcommand(1);

    std::string config_path, data_dir, out_path, log_path, ckpt_path;
    std::string low_path, high_path, split = "test";

    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    synth->add_option("--config", config_path, "run config file")->required();
    synth->add_option("--out", out_path, "output directory")->required();

    auto* train = app.add_subcommand("train", "train a model on a dataset directory");
    train->add_option("--config", config_path, "run config file")->required();
    train->add_option("--data", data_dir, "dataset directory")->required();
    train->add_option("--out", out_path, "checkpoint output path")->required();
    train->add_option("--log", log_path, "training log TSV path");

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
    eval->add_option("--ckpt", ckpt_path, "checkpoint path")->required();
    eval->add_option("--data", data_dir, "dataset directory")->required();
    eval->add_option("--split", split, "train|val|test (default test)");

    auto* infer = app.add_subcommand("infer", "classify one low/high resolution pair");
    infer->add_option("--ckpt", ckpt_path, "checkpoint path")->required();
    infer->add_option("--low", low_path, "low resolution PGM")->required();
    infer->add_option("--high", high_path, "high resolution PGM")->required();

    auto* rollout = app.add_subcommand("rollout", "export the masked rollout heatmap");
    rollout->add_option("--ckpt", ckpt_path, "checkpoint path")->required();
    rollout->add_option("--low", low_path, "low resolution PGM")->required();
    rollout->add_option("--high", high_path, "high resolution PGM")->required();
    rollout->add_option("--out", out_path, "output PGM path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return run_synth(config_path, out_path);
        if (train->parsed()) return run_train(config_path, data_dir, out_path, log_path);
        if (eval->parsed()) return run_eval(ckpt_path, data_dir, split);
        if (infer->parsed()) return run_infer(ckpt_path, low_path, high_path);
        if (rollout->parsed()) return run_rollout(ckpt_path, low_path, high_path, out_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
