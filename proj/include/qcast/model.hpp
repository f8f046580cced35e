#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qcast/container.hpp"
#include "qcast/data.hpp"
#include "qcast/layers.hpp"
#include "qcast/lif.hpp"
#include "qcast/qlif.hpp"

namespace qcast {

enum class NeuronKind { qlif, lif };

struct ModelSpec {
    NeuronKind kind = NeuronKind::qlif;
    std::size_t n_features = 4;
    std::size_t n_targets = 4;
    std::size_t lstm_units = 24;
    std::size_t window = 12;
    std::size_t latent = 48;  // L1 projection width = spiking layer size
    QlifHyper hyper;          // threshold/center shared with the LIF layer
    double dropout1 = 0.1;
    double dropout2 = 0.2;
};

struct TrainRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double lr = 0.0;
};

struct TrainConfig {
    int max_epochs = 15;
    std::size_t batch_size = 64;
    int patience = 5;
    double val_frac = 0.1;  // chronological tail of the training windows
    AdamConfig adam;
    std::uint64_t seed = 0;
};

// The seven-layer hybrid network: TD-dense 48 relu + dropout, spiking 48
// (QLIF or LIF), batchnorm + dropout, LSTM, dense 32 relu + dropout,
// dense 16 relu, linear output. Per-layer init streams are derived from
// the seed, so the two neuron kinds share identical non-spiking weights.
class Model {
public:
    Model(const ModelSpec& spec, std::uint64_t seed);

    Tensor forward(const Tensor& x, bool training, Rng* dropout_rng);
    void backward(const Tensor& grad_out);

    std::vector<Param> params();
    std::size_t param_count();
    std::vector<std::size_t> layer_param_counts();  // L1..L7

    // Deterministic inference pass, evaluated in fixed-size batches.
    Tensor predict(const Tensor& windows);

    const ModelSpec& spec() const { return spec_; }

    // Full persistent state: parameters plus batchnorm moving statistics.
    std::vector<std::pair<std::string, Tensor*>> state_tensors();
    Container to_container();
    void load_state(const Container& c);

    // One line per layer; equal for both neuron kinds except layer 2.
    std::vector<std::string> structure() const;

private:
    ModelSpec spec_;

    Dense l1_, l5_, l6_, l7_;
    Dropout d1_, d3_, d5_;
    BatchNorm l3_;
    Lstm l4_;

    QlifLayerParams qlif_params_;
    QlifGrads qlif_grads_;
    LifLayerParams lif_params_;
    LifGrads lif_grads_;

    Dense::Cache c1_, c5_, c6_, c7_;
    Dropout::Cache cd1_, cd3_, cd5_;
    QlifCache cq_;
    LifCache cl_;
    BatchNorm::Cache c3_;
    Lstm::Cache c4_;
};

struct TrainResult {
    std::vector<TrainRecord> records;
    double best_val_loss = 0.0;
    int best_epoch = 0;
    double wall_seconds = 0.0;
};

// Adam/MSE training with chronological validation split, per-epoch
// shuffling from the run seed, early stopping on validation loss, and
// best-weights restoration.
TrainResult train(Model& model, const WindowedDataset& dataset,
                  const TrainConfig& cfg);

// MSE between prediction and target tensors (standardized units).
double mse_loss(const Tensor& pred, const Tensor& target);

}  // namespace qcast
