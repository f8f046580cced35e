#include "qcast/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qcast {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

Phase parse_phase(const std::string& v) {
    if (v == "phase1") return Phase::phase1;
    if (v == "phase2a") return Phase::phase2a;
    if (v == "phase2b") return Phase::phase2b;
    if (v == "custom") return Phase::custom;
    throw std::runtime_error("config: unknown phase: " + v);
}

const char* phase_name(Phase p) {
    switch (p) {
        case Phase::phase1: return "phase1";
        case Phase::phase2a: return "phase2a";
        case Phase::phase2b: return "phase2b";
        default: return "custom";
    }
}

}  // namespace

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    ExperimentConfig c;
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: bad line: " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key == "phase") c.phase = parse_phase(val);
        else if (key == "dataset") c.dataset = val;
        else if (key == "schema") c.schema = val;
        else if (key == "out") c.out_dir = val;
        else if (key == "seeds") {
            c.seeds.clear();
            std::istringstream is(val);
            std::string item;
            while (std::getline(is, item, ','))
                c.seeds.push_back(std::stoull(trim(item)));
            if (c.seeds.empty()) throw std::runtime_error("config: empty seeds");
        }
        else if (key == "neuron")
            c.neuron = val == "lif" ? NeuronKind::lif : NeuronKind::qlif;
        else if (key == "lr") c.lr = std::stod(val);
        else if (key == "lr_decay") c.lr_decay = std::stod(val);
        else if (key == "batch_size") c.batch_size = std::stoul(val);
        else if (key == "max_epochs") c.max_epochs = std::stoi(val);
        else if (key == "patience") c.patience = std::stoi(val);
        else if (key == "l2") c.l2 = std::stod(val);
        else if (key == "val_frac") c.val_frac = std::stod(val);
        else if (key == "dropout1") c.dropout1 = std::stod(val);
        else if (key == "dropout2") c.dropout2 = std::stod(val);
        else if (key == "threshold") c.threshold = std::stod(val);
        else if (key == "t1") c.t1 = std::stod(val);
        else if (key == "surrogate_center")
            c.surrogate_center = val == "zero" ? SurrogateCenter::zero
                                               : SurrogateCenter::threshold;
        else if (key == "window") c.window = std::stoul(val);
        else if (key == "lstm_units") c.lstm_units = std::stoul(val);
        else if (key == "device_scale") c.device_scale = std::stod(val);
        else throw std::runtime_error("config: unknown key: " + key);
    }
    c.apply_phase();
    return c;
}

void ExperimentConfig::apply_phase() {
    switch (phase) {
        case Phase::phase1:
            max_epochs = 15;
            lstm_units = 24;
            break;
        case Phase::phase2a:
            max_epochs = 30;
            lstm_units = 48;  // larger recurrent state for the air-quality task
            break;
        case Phase::phase2b:
            max_epochs = 30;
            lstm_units = 24;
            break;
        case Phase::custom:
            break;
    }
}

std::string ExperimentConfig::to_kv() const {
    std::ostringstream os;
    os << "phase=" << phase_name(phase) << "\n";
    os << "dataset=" << dataset << "\n";
    os << "schema=" << schema << "\n";
    os << "out=" << out_dir << "\n";
    os << "seeds=";
    for (std::size_t i = 0; i < seeds.size(); ++i)
        os << (i ? "," : "") << seeds[i];
    os << "\n";
    os << "neuron=" << (neuron == NeuronKind::qlif ? "qlif" : "lif") << "\n";
    os << "lr=" << lr << "\n";
    os << "lr_decay=" << lr_decay << "\n";
    os << "batch_size=" << batch_size << "\n";
    os << "max_epochs=" << max_epochs << "\n";
    os << "patience=" << patience << "\n";
    os << "l2=" << l2 << "\n";
    os << "val_frac=" << val_frac << "\n";
    os << "dropout1=" << dropout1 << "\n";
    os << "dropout2=" << dropout2 << "\n";
    os << "threshold=" << threshold << "\n";
    os << "t1=" << t1 << "\n";
    os << "surrogate_center="
       << (surrogate_center == SurrogateCenter::threshold ? "threshold" : "zero")
       << "\n";
    os << "window=" << window << "\n";
    os << "lstm_units=" << lstm_units << "\n";
    os << "device_scale=" << device_scale << "\n";
    return os.str();
}

ModelSpec ExperimentConfig::model_spec(std::size_t n_features,
                                       std::size_t n_targets) const {
    ModelSpec s;
    s.kind = neuron;
    s.n_features = n_features;
    s.n_targets = n_targets;
    s.lstm_units = lstm_units;
    s.window = window;
    s.hyper.threshold = threshold;
    s.hyper.t1 = t1;
    s.hyper.surrogate_center = surrogate_center;
    s.dropout1 = dropout1;
    s.dropout2 = dropout2;
    return s;
}

TrainConfig ExperimentConfig::train_config(std::uint64_t seed) const {
    TrainConfig t;
    t.max_epochs = max_epochs;
    t.batch_size = batch_size;
    t.patience = patience;
    t.val_frac = val_frac;
    t.adam.lr0 = lr;
    t.adam.decay_rate = lr_decay;
    t.adam.l2 = l2;
    t.seed = seed;
    return t;
}

}  // namespace qcast
