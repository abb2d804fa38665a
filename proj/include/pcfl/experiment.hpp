#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pcfl/channel.hpp"
#include "pcfl/codec.hpp"
#include "pcfl/common.hpp"
#include "pcfl/local_update.hpp"
#include "pcfl/model.hpp"

namespace pcfl {

// Canned codec setups used throughout the experiments.
//   fedavg-uncompressed: raw 32-bit weights, codec bypassed
//   fedpaq-equivalent:   mode 1 only, stochastic quantizer, no entropy coding
//   proposed:            all four modes, rate-distortion quantizer selection,
//                        entropy coding on
inline CodecConfig make_baseline(const std::string& id) {
    CodecConfig cfg;
    if (id == "fedavg-uncompressed") {
        cfg.bypass = true;
    } else if (id == "fedpaq-equivalent") {
        cfg.predictor.enabled_modes = {1};
        cfg.quantizer.family = QuantizerFamily::stochastic;
        cfg.entropy_coding = false;
    } else if (id == "proposed") {
        cfg.predictor.enabled_modes = {1, 2, 3, 4};
        cfg.quantizer.family = QuantizerFamily::rd_select;
        cfg.entropy_coding = true;
    } else {
        throw config_error("unknown baseline id: " + id +
                           " (expected fedavg-uncompressed | fedpaq-equivalent | proposed)");
    }
    return cfg;
}

enum class DatasetKind : std::uint8_t { blobs, csv };

struct ExperimentConfig {
    // dataset
    DatasetKind dataset = DatasetKind::blobs;
    std::string dataset_path;
    int dataset_n = 2000;
    int dataset_features = 16;
    int dataset_classes = 10;
    double dataset_separation = 1.2;
    double test_fraction = 0.25;
    double dirichlet_alpha = 0.5;

    // model
    ModelSpec model{Arch::mlp, 16, 32, 10, Activation::tanh_act};

    // federation
    int workers = 8;
    int rounds = 50;
    int seeds = 1;          // paired seeds for multi-seed runs and sweeps
    bool parallel_workers = false;

    // local optimizer
    LocalOptimizerConfig optimizer;

    // codec (baseline preset applied first, explicit keys override)
    std::string baseline = "proposed";
    CodecConfig codec = make_baseline("proposed");

    // channel
    ChannelConfig channel;
    double cell_radius_m = 500.0;

    std::uint64_t seed = 1;
    std::string out_dir = "runs/out";

    void validate() const;
    std::string canonical_string() const;
    std::uint64_t hash() const;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

struct KvFile {
    std::map<std::string, std::string> entries;

    static KvFile parse(std::istream& in) {
        KvFile kv;
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto hash_pos = line.find('#');
            if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw config_error("line " + std::to_string(line_no) + ": expected key = value");
            }
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty()) {
                throw config_error("line " + std::to_string(line_no) + ": empty key");
            }
            kv.entries[key] = value;
        }
        return kv;
    }

    bool has(const std::string& key) const { return entries.count(key) != 0; }

    std::string str(const std::string& key) const { return entries.at(key); }

    double num(const std::string& key) const {
        try {
            std::size_t used = 0;
            const double v = std::stod(entries.at(key), &used);
            if (used != entries.at(key).size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw config_error("key '" + key + "': expected a number, got '" + entries.at(key) + "'");
        }
    }

    long integer(const std::string& key) const {
        try {
            std::size_t used = 0;
            const long v = std::stol(entries.at(key), &used);
            if (used != entries.at(key).size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw config_error("key '" + key + "': expected an integer, got '" + entries.at(key) +
                               "'");
        }
    }

    bool flag(const std::string& key) const {
        const std::string v = entries.at(key);
        if (v == "on" || v == "true" || v == "1") return true;
        if (v == "off" || v == "false" || v == "0") return false;
        throw config_error("key '" + key + "': expected on/off, got '" + v + "'");
    }
};

inline std::vector<int> parse_int_list(const std::string& text, const std::string& key) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        cell = trim(cell);
        if (cell.empty()) continue;
        try {
            out.push_back(std::stoi(cell));
        } catch (const std::exception&) {
            throw config_error("key '" + key + "': bad integer list entry '" + cell + "'");
        }
    }
    if (out.empty()) throw config_error("key '" + key + "': empty list");
    return out;
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(std::istream& in) {
    const auto kv = detail::KvFile::parse(in);
    ExperimentConfig cfg;

    static const std::vector<std::string> known = {
        "dataset", "dataset.path", "dataset.n", "dataset.features", "dataset.classes",
        "dataset.separation", "dataset.test_fraction", "dirichlet_alpha",
        "model", "model.hidden", "model.activation",
        "workers", "rounds", "seeds", "parallel",
        "optimizer", "lr", "local_steps", "batch_size",
        "adam.beta1", "adam.beta2", "adam.epsilon",
        "codec", "codec.modes", "codec.s", "codec.kappa", "codec.norm", "codec.quantizer",
        "codec.lambda", "codec.entropy", "codec.memory",
        "predictor.ar_step", "predictor.history", "predictor.beta1", "predictor.beta2",
        "predictor.scale", "predictor.epsilon",
        "channel.radius", "channel.bandwidth", "channel.power", "channel.noise_dbm",
        "channel.antenna_gain", "channel.carrier", "channel.path_loss", "channel.gain_as_power",
        "seed", "out"};
    for (const auto& [key, value] : kv.entries) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw config_error("unknown config key '" + key + "'");
        }
    }

    if (kv.has("dataset")) {
        const std::string v = kv.str("dataset");
        if (v == "blobs") cfg.dataset = DatasetKind::blobs;
        else if (v == "csv") cfg.dataset = DatasetKind::csv;
        else throw config_error("key 'dataset': expected blobs|csv, got '" + v + "'");
    }
    if (kv.has("dataset.path")) cfg.dataset_path = kv.str("dataset.path");
    if (kv.has("dataset.n")) cfg.dataset_n = static_cast<int>(kv.integer("dataset.n"));
    if (kv.has("dataset.features")) cfg.dataset_features = static_cast<int>(kv.integer("dataset.features"));
    if (kv.has("dataset.classes")) cfg.dataset_classes = static_cast<int>(kv.integer("dataset.classes"));
    if (kv.has("dataset.separation")) cfg.dataset_separation = kv.num("dataset.separation");
    if (kv.has("dataset.test_fraction")) cfg.test_fraction = kv.num("dataset.test_fraction");
    if (kv.has("dirichlet_alpha")) cfg.dirichlet_alpha = kv.num("dirichlet_alpha");

    if (kv.has("model")) {
        const std::string v = kv.str("model");
        if (v == "mlp") cfg.model.arch = Arch::mlp;
        else if (v == "logistic") cfg.model.arch = Arch::logistic;
        else throw config_error("key 'model': expected mlp|logistic, got '" + v + "'");
    }
    if (kv.has("model.hidden")) cfg.model.hidden = static_cast<int>(kv.integer("model.hidden"));
    if (kv.has("model.activation")) {
        const std::string v = kv.str("model.activation");
        if (v == "tanh") cfg.model.activation = Activation::tanh_act;
        else if (v == "relu") cfg.model.activation = Activation::relu;
        else throw config_error("key 'model.activation': expected tanh|relu, got '" + v + "'");
    }

    if (kv.has("workers")) cfg.workers = static_cast<int>(kv.integer("workers"));
    if (kv.has("rounds")) cfg.rounds = static_cast<int>(kv.integer("rounds"));
    if (kv.has("seeds")) cfg.seeds = static_cast<int>(kv.integer("seeds"));
    if (kv.has("parallel")) cfg.parallel_workers = kv.flag("parallel");

    if (kv.has("optimizer")) {
        const std::string v = kv.str("optimizer");
        if (v == "adam") cfg.optimizer.optimizer = Optimizer::adam;
        else if (v == "sgd") cfg.optimizer.optimizer = Optimizer::sgd;
        else throw config_error("key 'optimizer': expected adam|sgd, got '" + v + "'");
    }
    if (kv.has("lr")) cfg.optimizer.lr = kv.num("lr");
    if (kv.has("local_steps")) cfg.optimizer.local_steps = static_cast<int>(kv.integer("local_steps"));
    if (kv.has("batch_size")) cfg.optimizer.batch_size = static_cast<int>(kv.integer("batch_size"));
    if (kv.has("adam.beta1")) cfg.optimizer.beta1 = kv.num("adam.beta1");
    if (kv.has("adam.beta2")) cfg.optimizer.beta2 = kv.num("adam.beta2");
    if (kv.has("adam.epsilon")) cfg.optimizer.epsilon = kv.num("adam.epsilon");

    if (kv.has("codec")) cfg.baseline = kv.str("codec");
    cfg.codec = make_baseline(cfg.baseline);
    if (kv.has("codec.modes")) {
        cfg.codec.predictor.enabled_modes = detail::parse_int_list(kv.str("codec.modes"), "codec.modes");
    }
    if (kv.has("codec.s")) cfg.codec.quantizer.s = static_cast<int>(kv.integer("codec.s"));
    if (kv.has("codec.kappa")) cfg.codec.quantizer.kappa = kv.num("codec.kappa");
    if (kv.has("codec.norm")) {
        const std::string v = kv.str("codec.norm");
        if (v == "l2") cfg.codec.quantizer.norm = NormOrder::l2;
        else if (v == "linf") cfg.codec.quantizer.norm = NormOrder::linf;
        else throw config_error("key 'codec.norm': expected l2|linf, got '" + v + "'");
    }
    if (kv.has("codec.quantizer")) {
        const std::string v = kv.str("codec.quantizer");
        if (v == "uniform") cfg.codec.quantizer.family = QuantizerFamily::uniform;
        else if (v == "stochastic") cfg.codec.quantizer.family = QuantizerFamily::stochastic;
        else if (v == "rd-select") cfg.codec.quantizer.family = QuantizerFamily::rd_select;
        else throw config_error("key 'codec.quantizer': expected uniform|stochastic|rd-select");
    }
    if (kv.has("codec.lambda")) cfg.codec.quantizer.lambda = kv.num("codec.lambda");
    if (kv.has("codec.entropy")) cfg.codec.entropy_coding = kv.flag("codec.entropy");
    if (kv.has("codec.memory")) {
        const std::string v = kv.str("codec.memory");
        if (v == "per-worker") cfg.codec.predictor.memory = MemoryVariant::per_worker;
        else if (v == "global") cfg.codec.predictor.memory = MemoryVariant::global;
        else throw config_error("key 'codec.memory': expected per-worker|global");
    }

    if (kv.has("predictor.ar_step")) cfg.codec.predictor.ar_step = kv.num("predictor.ar_step");
    if (kv.has("predictor.history")) cfg.codec.predictor.history_order = static_cast<int>(kv.integer("predictor.history"));
    if (kv.has("predictor.beta1")) cfg.codec.predictor.beta1 = kv.num("predictor.beta1");
    if (kv.has("predictor.beta2")) cfg.codec.predictor.beta2 = kv.num("predictor.beta2");
    if (kv.has("predictor.scale")) cfg.codec.predictor.moment_scale = kv.num("predictor.scale");
    if (kv.has("predictor.epsilon")) cfg.codec.predictor.epsilon = kv.num("predictor.epsilon");

    if (kv.has("channel.radius")) cfg.cell_radius_m = kv.num("channel.radius");
    if (kv.has("channel.bandwidth")) cfg.channel.bandwidth_hz = kv.num("channel.bandwidth");
    if (kv.has("channel.power")) cfg.channel.tx_power_w = kv.num("channel.power");
    if (kv.has("channel.noise_dbm")) cfg.channel.noise_psd_dbm_hz = kv.num("channel.noise_dbm");
    if (kv.has("channel.antenna_gain")) cfg.channel.antenna_gain = kv.num("channel.antenna_gain");
    if (kv.has("channel.carrier")) cfg.channel.carrier_hz = kv.num("channel.carrier");
    if (kv.has("channel.path_loss")) cfg.channel.path_loss_exponent = kv.num("channel.path_loss");
    if (kv.has("channel.gain_as_power")) cfg.channel.gain_as_power = kv.flag("channel.gain_as_power");

    if (kv.has("seed")) cfg.seed = static_cast<std::uint64_t>(kv.integer("seed"));
    if (kv.has("out")) cfg.out_dir = kv.str("out");

    cfg.model.input_dim = cfg.dataset_features;
    cfg.model.classes = cfg.dataset_classes;
    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    return parse_experiment_config(in);
}

inline void ExperimentConfig::validate() const {
    if (dataset == DatasetKind::csv && dataset_path.empty()) {
        throw config_error("dataset.path required when dataset = csv");
    }
    if (dataset_n < 1) throw config_error("dataset.n must be >= 1");
    if (dataset_features < 1) throw config_error("dataset.features must be >= 1");
    if (dataset_classes < 2) throw config_error("dataset.classes must be >= 2");
    if (test_fraction < 0.0 || test_fraction >= 1.0) {
        throw config_error("dataset.test_fraction must be in [0, 1)");
    }
    if (!(dirichlet_alpha > 0.0)) throw config_error("dirichlet_alpha must be positive");
    if (workers < 1) throw config_error("workers must be >= 1");
    if (rounds < 0) throw config_error("rounds must be >= 0");
    if (seeds < 1) throw config_error("seeds must be >= 1");
    if (!(cell_radius_m > 0.0)) throw config_error("channel.radius must be positive");
    try {
        model.validate();
        optimizer.validate();
        codec.validate();
        channel.validate();
    } catch (const contract_error& e) {
        throw config_error(e.what());
    }
}

inline std::string ExperimentConfig::canonical_string() const {
    std::ostringstream os;
    os.precision(17);
    os << "dataset=" << (dataset == DatasetKind::blobs ? "blobs" : "csv") << '\n'
       << "dataset.path=" << dataset_path << '\n'
       << "dataset.n=" << dataset_n << '\n'
       << "dataset.features=" << dataset_features << '\n'
       << "dataset.classes=" << dataset_classes << '\n'
       << "dataset.separation=" << dataset_separation << '\n'
       << "dataset.test_fraction=" << test_fraction << '\n'
       << "dirichlet_alpha=" << dirichlet_alpha << '\n'
       << "model=" << (model.arch == Arch::mlp ? "mlp" : "logistic") << '\n'
       << "model.hidden=" << model.hidden << '\n'
       << "model.activation=" << (model.activation == Activation::tanh_act ? "tanh" : "relu") << '\n'
       << "workers=" << workers << '\n'
       << "rounds=" << rounds << '\n'
       << "seeds=" << seeds << '\n'
       << "parallel=" << (parallel_workers ? "on" : "off") << '\n'
       << "optimizer=" << (optimizer.optimizer == Optimizer::adam ? "adam" : "sgd") << '\n'
       << "lr=" << optimizer.lr << '\n'
       << "local_steps=" << optimizer.local_steps << '\n'
       << "batch_size=" << optimizer.batch_size << '\n'
       << "adam.beta1=" << optimizer.beta1 << '\n'
       << "adam.beta2=" << optimizer.beta2 << '\n'
       << "adam.epsilon=" << optimizer.epsilon << '\n'
       << "codec=" << baseline << '\n'
       << "codec.bypass=" << (codec.bypass ? "on" : "off") << '\n'
       << "codec.modes=";
    for (std::size_t i = 0; i < codec.predictor.enabled_modes.size(); ++i) {
        if (i) os << ',';
        os << codec.predictor.enabled_modes[i];
    }
    os << '\n'
       << "codec.s=" << codec.quantizer.s << '\n'
       << "codec.kappa=" << codec.quantizer.kappa << '\n'
       << "codec.norm=" << (codec.quantizer.norm == NormOrder::l2 ? "l2" : "linf") << '\n'
       << "codec.quantizer="
       << (codec.quantizer.family == QuantizerFamily::uniform
               ? "uniform"
               : codec.quantizer.family == QuantizerFamily::stochastic ? "stochastic" : "rd-select")
       << '\n'
       << "codec.lambda=" << codec.quantizer.lambda << '\n'
       << "codec.entropy=" << (codec.entropy_coding ? "on" : "off") << '\n'
       << "codec.memory="
       << (codec.predictor.memory == MemoryVariant::per_worker ? "per-worker" : "global") << '\n'
       << "predictor.ar_step=" << codec.predictor.ar_step << '\n'
       << "predictor.history=" << codec.predictor.history_order << '\n'
       << "predictor.beta1=" << codec.predictor.beta1 << '\n'
       << "predictor.beta2=" << codec.predictor.beta2 << '\n'
       << "predictor.scale=" << codec.predictor.moment_scale << '\n'
       << "predictor.epsilon=" << codec.predictor.epsilon << '\n'
       << "channel.radius=" << cell_radius_m << '\n'
       << "channel.bandwidth=" << channel.bandwidth_hz << '\n'
       << "channel.power=" << channel.tx_power_w << '\n'
       << "channel.noise_dbm=" << channel.noise_psd_dbm_hz << '\n'
       << "channel.antenna_gain=" << channel.antenna_gain << '\n'
       << "channel.carrier=" << channel.carrier_hz << '\n'
       << "channel.path_loss=" << channel.path_loss_exponent << '\n'
       << "channel.gain_as_power=" << (channel.gain_as_power ? "on" : "off") << '\n';
    return os.str();
}

// FNV-1a over the canonical key-value dump; embedded in every output file.
inline std::uint64_t ExperimentConfig::hash() const {
    const std::string text = canonical_string();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace pcfl
