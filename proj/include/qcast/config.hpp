#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qcast/model.hpp"

namespace qcast {

enum class Phase { phase1, phase2a, phase2b, custom };

// Run configuration with defaults matching the shared hyperparameter
// table: Adam, lr 1e-3 with exponential decay, MSE loss, batch 64,
// patience 5, L2 1e-4 on dense kernels, dropout 0.1/0.2, spike threshold
// 0.75, T1 10.0, 12-step context window.
struct ExperimentConfig {
    Phase phase = Phase::custom;
    std::string dataset;  // CSV path or .qds cache
    std::string schema;   // schema file, required for CSV input
    std::string out_dir = "runs/out";
    std::vector<std::uint64_t> seeds = {1};
    NeuronKind neuron = NeuronKind::qlif;

    double lr = 1e-3;
    double lr_decay = 0.96;
    std::size_t batch_size = 64;
    int max_epochs = 15;
    int patience = 5;
    double l2 = 1e-4;
    double val_frac = 0.1;
    double dropout1 = 0.1;
    double dropout2 = 0.2;
    double threshold = 0.75;
    double t1 = 10.0;
    SurrogateCenter surrogate_center = SurrogateCenter::threshold;
    std::size_t window = 12;
    std::size_t lstm_units = 24;
    double device_scale = 1.0;  // fraction of train/test windows used

    static ExperimentConfig load(const std::string& path);
    void apply_phase();  // phase-specific epoch/unit presets
    std::string to_kv() const;

    ModelSpec model_spec(std::size_t n_features, std::size_t n_targets) const;
    TrainConfig train_config(std::uint64_t seed) const;
};

}  // namespace qcast
