#include "qcast/model.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qcast {

Model::Model(const ModelSpec& spec, std::uint64_t seed) : spec_(spec) {
    if (spec.n_features == 0 || spec.n_targets == 0 || spec.lstm_units == 0 ||
        spec.window == 0 || spec.latent == 0)
        throw std::invalid_argument("Model: invalid spec");
    if (spec.hyper.threshold <= 0.0 || spec.hyper.threshold >= 1.0 ||
        spec.hyper.t1 <= 0.0)
        throw std::invalid_argument("Model: invalid hyper");

    // independent init stream per layer so the non-spiking weights are
    // identical across the two neuron kinds
    auto layer_rng = [&](std::uint64_t idx) {
        return Rng(seed * 0x100000001b3ULL + idx);
    };
    Rng r1 = layer_rng(1);
    l1_.init(spec.n_features, spec.latent, Activation::relu, r1);
    d1_.rate = spec.dropout1;
    Rng r2 = layer_rng(2);
    if (spec.kind == NeuronKind::qlif)
        qlif_params_ = qlif_init(spec.latent, spec.latent, r2);
    else
        lif_params_ = lif_init(spec.latent, spec.latent, r2);
    l3_.init(spec.latent);
    d3_.rate = spec.dropout2;
    Rng r4 = layer_rng(4);
    l4_.init(spec.latent, spec.lstm_units, r4);
    Rng r5 = layer_rng(5);
    l5_.init(spec.lstm_units, 32, Activation::relu, r5);
    d5_.rate = spec.dropout2;
    Rng r6 = layer_rng(6);
    l6_.init(32, 16, Activation::relu, r6);
    Rng r7 = layer_rng(7);
    l7_.init(16, spec.n_targets, Activation::linear, r7);

    if (spec.kind == NeuronKind::qlif) {
        qlif_grads_.kernel = Tensor({spec.latent, spec.latent});
        qlif_grads_.theta = Tensor({spec.latent});
        qlif_grads_.tau_raw = Tensor({spec.latent});
    } else {
        lif_grads_.kernel = Tensor({spec.latent, spec.latent});
        lif_grads_.bias = Tensor({spec.latent});
        lif_grads_.tau_raw = Tensor({spec.latent});
    }
}

Tensor Model::forward(const Tensor& x, bool training, Rng* dropout_rng) {
    if (x.ndim() != 3 || x.dim(2) != spec_.n_features)
        throw std::invalid_argument("Model::forward: input " + x.shape_str());
    Rng null_rng(0);
    Rng& rng = dropout_rng ? *dropout_rng : null_rng;

    Tensor h = l1_.forward(x, c1_);
    h = d1_.forward(h, training, rng, cd1_);
    if (spec_.kind == NeuronKind::qlif) {
        h = qlif_layer_forward(h, qlif_params_, spec_.hyper, cq_);
    } else {
        LifHyper lh{spec_.hyper.threshold, spec_.hyper.surrogate_center};
        h = lif_layer_forward(h, lif_params_, lh, cl_);
    }
    h = l3_.forward(h, training, c3_);
    h = d3_.forward(h, training, rng, cd3_);
    h = l4_.forward(h, c4_);
    h = l5_.forward(h, c5_);
    h = d5_.forward(h, training, rng, cd5_);
    h = l6_.forward(h, c6_);
    return l7_.forward(h, c7_);
}

void Model::backward(const Tensor& grad_out) {
    Tensor g = l7_.backward(c7_, grad_out);
    g = l6_.backward(c6_, g);
    g = d5_.backward(cd5_, g);
    g = l5_.backward(c5_, g);
    g = l4_.backward(c4_, g);
    g = d3_.backward(cd3_, g);
    g = l3_.backward(c3_, g);
    if (spec_.kind == NeuronKind::qlif)
        g = qlif_layer_backward(cq_, qlif_params_, g, qlif_grads_);
    else
        g = lif_layer_backward(cl_, lif_params_, g, lif_grads_);
    g = d1_.backward(cd1_, g);
    l1_.backward(c1_, g);
}

std::vector<Param> Model::params() {
    std::vector<Param> p;
    p.push_back({"l1.kernel", &l1_.W, &l1_.gW, true});
    p.push_back({"l1.bias", &l1_.b, &l1_.gb, false});
    if (spec_.kind == NeuronKind::qlif) {
        p.push_back({"l2.kernel", &qlif_params_.kernel, &qlif_grads_.kernel, false});
        p.push_back({"l2.theta", &qlif_params_.theta, &qlif_grads_.theta, false});
        p.push_back({"l2.tau_raw", &qlif_params_.tau_raw, &qlif_grads_.tau_raw, false});
    } else {
        p.push_back({"l2.kernel", &lif_params_.kernel, &lif_grads_.kernel, false});
        p.push_back({"l2.bias", &lif_params_.bias, &lif_grads_.bias, false});
        p.push_back({"l2.tau_raw", &lif_params_.tau_raw, &lif_grads_.tau_raw, false});
    }
    p.push_back({"l3.gamma", &l3_.gamma, &l3_.ggamma, false});
    p.push_back({"l3.beta", &l3_.beta, &l3_.gbeta, false});
    p.push_back({"l4.kernel", &l4_.Wx, &l4_.gWx, false});
    p.push_back({"l4.recurrent", &l4_.Wh, &l4_.gWh, false});
    p.push_back({"l4.bias", &l4_.b, &l4_.gb, false});
    p.push_back({"l5.kernel", &l5_.W, &l5_.gW, true});
    p.push_back({"l5.bias", &l5_.b, &l5_.gb, false});
    p.push_back({"l6.kernel", &l6_.W, &l6_.gW, true});
    p.push_back({"l6.bias", &l6_.b, &l6_.gb, false});
    p.push_back({"l7.kernel", &l7_.W, &l7_.gW, true});
    p.push_back({"l7.bias", &l7_.b, &l7_.gb, false});
    return p;
}

std::vector<std::size_t> Model::layer_param_counts() {
    const std::size_t l2 = spec_.kind == NeuronKind::qlif ? qlif_params_.count()
                                                          : lif_params_.count();
    return {l1_.count(), l2, l3_.count(), l4_.count(),
            l5_.count(), l6_.count(), l7_.count()};
}

std::size_t Model::param_count() {
    const auto counts = layer_param_counts();
    return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

Tensor Model::predict(const Tensor& windows) {
    const std::size_t n = windows.dim(0), T = windows.dim(1), F = windows.dim(2);
    const std::size_t chunk = 256;
    Tensor out({n, spec_.n_targets});
    for (std::size_t start = 0; start < n; start += chunk) {
        const std::size_t m = std::min(chunk, n - start);
        Tensor batch({m, T, F});
        std::copy_n(&windows.data[start * T * F], m * T * F, batch.data.data());
        Tensor y = forward(batch, false, nullptr);
        std::copy_n(y.data.data(), m * spec_.n_targets,
                    &out.data[start * spec_.n_targets]);
    }
    return out;
}

std::vector<std::pair<std::string, Tensor*>> Model::state_tensors() {
    std::vector<std::pair<std::string, Tensor*>> s;
    for (auto& p : params()) s.emplace_back(p.name, p.value);
    s.emplace_back("l3.moving_mean", &l3_.moving_mean);
    s.emplace_back("l3.moving_var", &l3_.moving_var);
    return s;
}

Container Model::to_container() {
    Container c;
    for (auto& [name, t] : state_tensors()) c.tensors[name] = *t;
    c.meta["neuron"] = spec_.kind == NeuronKind::qlif ? "qlif" : "lif";
    c.meta["n_features"] = std::to_string(spec_.n_features);
    c.meta["n_targets"] = std::to_string(spec_.n_targets);
    c.meta["lstm_units"] = std::to_string(spec_.lstm_units);
    c.meta["window"] = std::to_string(spec_.window);
    c.meta["threshold"] = std::to_string(spec_.hyper.threshold);
    c.meta["t1"] = std::to_string(spec_.hyper.t1);
    return c;
}

void Model::load_state(const Container& c) {
    for (auto& [name, t] : state_tensors()) {
        const Tensor& src = c.get(name);
        if (src.shape != t->shape)
            throw std::runtime_error("load_state: shape mismatch for " + name);
        *t = src;
    }
}

std::vector<std::string> Model::structure() const {
    const std::string units = std::to_string(spec_.lstm_units);
    const std::string lat = std::to_string(spec_.latent);
    std::vector<std::string> s;
    s.push_back("L1 timedist_dense " + std::to_string(spec_.n_features) + "->" +
                lat + " relu dropout=" + std::to_string(spec_.dropout1));
    s.push_back("L2 " +
                std::string(spec_.kind == NeuronKind::qlif ? "qlif" : "lif") +
                " " + lat + "->" + lat);
    s.push_back("L3 batchnorm " + lat + " dropout=" + std::to_string(spec_.dropout2));
    s.push_back("L4 lstm " + lat + "->" + units);
    s.push_back("L5 dense " + units + "->32 relu dropout=" +
                std::to_string(spec_.dropout2));
    s.push_back("L6 dense 32->16 relu");
    s.push_back("L7 dense 16->" + std::to_string(spec_.n_targets) + " linear");
    return s;
}

double mse_loss(const Tensor& pred, const Tensor& target) {
    if (!pred.same_shape(target))
        throw std::invalid_argument("mse_loss: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.numel(); ++i) {
        const double e = pred[i] - target[i];
        s += e * e;
    }
    return s / double(pred.numel());
}

TrainResult train(Model& model, const WindowedDataset& dataset,
                  const TrainConfig& cfg) {
    const std::size_t T = dataset.X.dim(1), F = dataset.X.dim(2),
                      N = dataset.y.dim(1);
    const std::size_t n_train_all = dataset.n_train();
    std::size_t n_val = std::size_t(std::floor(cfg.val_frac * double(n_train_all)));
    if (n_val == 0 && n_train_all >= 2) n_val = 1;
    const std::size_t n_train = n_train_all - n_val;
    if (n_train == 0) throw std::invalid_argument("train: no training windows");

    auto slice = [&](std::size_t start, const std::vector<std::size_t>* idx,
                     std::size_t count, Tensor& bx, Tensor& by) {
        bx = Tensor({count, T, F});
        by = Tensor({count, N});
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t w = idx ? (*idx)[start + i] : start + i;
            std::copy_n(&dataset.X.data[w * T * F], T * F, &bx.data[i * T * F]);
            std::copy_n(&dataset.y.data[w * N], N, &by.data[i * N]);
        }
    };

    Tensor val_x, val_y;
    slice(n_train, nullptr, n_val, val_x, val_y);

    auto val_loss_of = [&]() {
        if (n_val == 0) return 0.0;
        return mse_loss(model.predict(val_x), val_y);
    };

    Adam opt(cfg.adam);
    auto params = model.params();
    Rng master(cfg.seed);

    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    double best_val = std::numeric_limits<double>::infinity();
    int best_epoch = -1;
    int since_improved = 0;
    std::vector<Tensor> best_state;

    const auto t_start = std::chrono::steady_clock::now();
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        Rng shuffle_rng = master.fork();
        Rng dropout_rng = master.fork();
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start < n_train; start += cfg.batch_size) {
            const std::size_t m = std::min(cfg.batch_size, n_train - start);
            Tensor bx, by;
            slice(start, &order, m, bx, by);
            Tensor pred = model.forward(bx, true, &dropout_rng);
            const double loss = mse_loss(pred, by);
            if (!std::isfinite(loss))
                throw std::runtime_error("train: non-finite loss at epoch " +
                                         std::to_string(epoch));
            Tensor grad(pred.shape);
            const double scale = 2.0 / double(pred.numel());
            for (std::size_t i = 0; i < pred.numel(); ++i)
                grad[i] = scale * (pred[i] - by[i]);
            model.backward(grad);
            opt.step(params, epoch);
            epoch_loss += loss;
            ++n_batches;
        }

        TrainRecord rec;
        rec.epoch = epoch;
        rec.train_loss = epoch_loss / double(n_batches);
        rec.val_loss = val_loss_of();
        rec.lr = cfg.adam.lr0 * std::pow(cfg.adam.decay_rate, epoch);
        result.records.push_back(rec);

        if (rec.val_loss < best_val) {
            best_val = rec.val_loss;
            best_epoch = epoch;
            since_improved = 0;
            best_state.clear();
            for (auto& [name, t] : model.state_tensors()) best_state.push_back(*t);
        } else if (++since_improved >= cfg.patience) {
            break;
        }
    }
    const auto t_end = std::chrono::steady_clock::now();
    result.wall_seconds =
        std::chrono::duration<double>(t_end - t_start).count();

    if (!best_state.empty()) {
        std::size_t i = 0;
        for (auto& [name, t] : model.state_tensors()) *t = best_state[i++];
    }
    result.best_val_loss = best_val;
    result.best_epoch = best_epoch;
    return result;
}

}  // namespace qcast
