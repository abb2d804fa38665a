#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <string>
#include <vector>

#include "pcfl/channel.hpp"
#include "pcfl/codec.hpp"
#include "pcfl/common.hpp"
#include "pcfl/dataset.hpp"
#include "pcfl/experiment.hpp"
#include "pcfl/local_update.hpp"
#include "pcfl/model.hpp"
#include "pcfl/predictor.hpp"

namespace pcfl {

// Server view: global weights plus the per-worker memory mirrors (or the
// single shared memory in the O(d) variant).
struct ServerState {
    ParamVector w;
    std::vector<PredictorMemory> mirrors;
    PredictorMemory global_mirror;
    std::uint64_t round = 0;
};

struct RoundMetrics {
    int round = 0;
    double train_loss = 0.0, train_acc = 0.0;
    double test_loss = 0.0, test_acc = 0.0;
    std::vector<std::uint64_t> bits;       // gross per worker
    std::vector<double> tx_seconds;        // per worker
    double comm_time_s = 0.0;              // max over workers
    std::uint64_t total_bits = 0;
    std::uint64_t payload_bits = 0;        // entropy/fixed payload only
    double compression_ratio = 0.0;        // M*32d / total_bits
    double payload_ratio = 0.0;            // M*32d / payload_bits
    std::array<int, 4> mode_hist{};
    int quant_uniform = 0;
    int quant_stochastic = 0;
    std::vector<double> p_hat;             // ||e||^2 / ||delta||^2 per worker
    std::vector<double> q_hat;             // ||Q(e)-e||^2 / ||e||^2 per worker
    std::vector<double> chosen_pred_err;   // squared error of the selected mode
    std::vector<double> mode1_pred_err;    // squared error of mode 1 (NaN if disabled)
    double residual_skew = 0.0;
    double grad_norm_sq = 0.0;             // full-batch ||grad f(w_k)||^2
};

struct Simulation {
    ExperimentConfig cfg;
    std::uint64_t master_seed = 0;
    Dataset train;
    Dataset test;
    std::vector<Dataset> shards;
    WorkerPlacement placement;
    ServerState server;
    std::vector<PredictorMemory> worker_mems;  // worker-side state
    PredictorMemory worker_global_mem;         // shared state, global variant
};

inline Simulation build_simulation(const ExperimentConfig& cfg, std::uint64_t master_seed) {
    cfg.validate();
    Simulation sim;
    sim.cfg = cfg;
    sim.master_seed = master_seed;

    Dataset full;
    if (cfg.dataset == DatasetKind::blobs) {
        Rng data_rng = make_stream(master_seed, 1);
        full = make_blobs(cfg.dataset_n, cfg.dataset_features, cfg.dataset_classes,
                          cfg.dataset_separation, data_rng);
    } else {
        full = load_csv(cfg.dataset_path);
        if (full.features != cfg.model.input_dim || full.classes > cfg.model.classes) {
            throw config_error("csv dataset does not match the model spec (features/classes)");
        }
    }

    Rng split_rng = make_stream(master_seed, 2);
    auto [train, test] = split_train_test(full, cfg.test_fraction, split_rng);
    sim.train = std::move(train);
    sim.test = std::move(test);

    Rng part_rng = make_stream(master_seed, 3);
    sim.shards = dirichlet_partition(sim.train, cfg.workers, cfg.dirichlet_alpha, part_rng);

    Rng init_rng = make_stream(master_seed, 4);
    sim.server.w = init_weights(cfg.model, init_rng);

    Rng place_rng = make_stream(master_seed, 5);
    sim.placement = place_workers_uniform(cfg.workers, cfg.cell_radius_m, place_rng);

    const std::size_t d = sim.server.w.size();
    sim.worker_mems.assign(static_cast<std::size_t>(cfg.workers), make_predictor_memory(d));
    sim.server.mirrors = sim.worker_mems;
    sim.worker_global_mem = make_predictor_memory(d);
    sim.server.global_mirror = sim.worker_global_mem;
    return sim;
}

namespace detail {

struct WorkerOutcome {
    ParamVector w_hat;
    std::uint64_t gross_bits = 0;
    std::uint64_t payload_bits = 0;
    int mode = 0;  // 0 = bypass
    QuantizerFamily family = QuantizerFamily::uniform;
    double p_hat = 1.0;
    double q_hat = 0.0;
    double chosen_err = 0.0;
    double mode1_err = std::numeric_limits<double>::quiet_NaN();
    MomentAccumulator residual_moments;
};

inline double ratio_or(double num, double den, double when_zero) {
    if (den == 0.0) return num == 0.0 ? when_zero : std::numeric_limits<double>::infinity();
    return num / den;
}

inline WorkerOutcome run_worker(Simulation& sim, int m, const ParamVector& w0) {
    const ExperimentConfig& cfg = sim.cfg;
    Rng rng = make_stream(sim.master_seed, 100 + sim.server.round, static_cast<std::uint64_t>(m));

    ParamVector w_local;
    try {
        w_local = run_local_iterations(cfg.model, w0, cfg.optimizer,
                                       sim.shards[static_cast<std::size_t>(m)], rng);
    } catch (const diverged_error& e) {
        throw diverged_error("worker " + std::to_string(m) + ": " + e.what(), e.iteration);
    }

    WorkerOutcome out;
    if (cfg.codec.bypass) {
        out.w_hat = w_local;
        out.gross_bits = 32ull * w0.size();
        out.payload_bits = out.gross_bits;
        const ParamVector delta = sub(w0, w_local);
        out.residual_moments.add(delta);
        return out;
    }

    PredictorMemory& enc_mem = cfg.codec.predictor.memory == MemoryVariant::global
                                   ? sim.worker_global_mem
                                   : sim.worker_mems[static_cast<std::size_t>(m)];
    EncodeResult enc = encode(w_local, w0, enc_mem, cfg.codec, rng);

    // Ship the exact bytes the worker would transmit.
    const std::vector<std::uint8_t> wire = serialize_message(enc.message);
    const UplinkMessage received = parse_message(wire);
    PredictorMemory& dec_mem = cfg.codec.predictor.memory == MemoryVariant::global
                                   ? sim.server.global_mirror
                                   : sim.server.mirrors[static_cast<std::size_t>(m)];
    ParamVector w_hat = decode(received, w0, dec_mem, cfg.codec);

    if (w_hat != enc.w_hat) {
        throw std::logic_error("encoder and decoder reconstructions diverged");
    }

    out.w_hat = std::move(w_hat);
    out.gross_bits = message_size_bits(enc.message);
    out.payload_bits = enc.message.payload.bit_len;
    out.mode = enc.mode;
    out.family = enc.family;
    const double delta_sq = squared_l2(sub(w0, w_local));
    out.p_hat = ratio_or(enc.residual_sq, delta_sq, 1.0);
    out.q_hat = ratio_or(enc.distortion_sq, enc.residual_sq, 0.0);
    out.chosen_err = enc.prediction_errors.at(enc.mode);
    if (auto it = enc.prediction_errors.find(1); it != enc.prediction_errors.end()) {
        out.mode1_err = it->second;
    }
    out.residual_moments = enc.residual_moments;
    return out;
}

}  // namespace detail

// One communication round: broadcast, local training, encode, decode,
// aggregate, memory advance, metrics. Worker evaluation may run in parallel;
// results are identical to the sequential order because each worker owns its
// rng stream and memory slot.
inline RoundMetrics run_round(Simulation& sim) {
    const ExperimentConfig& cfg = sim.cfg;
    const ParamVector w0 = sim.server.w;  // broadcast
    const int workers = cfg.workers;

    RoundMetrics metrics;
    metrics.round = static_cast<int>(sim.server.round);
    metrics.grad_norm_sq = squared_l2(backward_grad(cfg.model, w0, sim.train, all_rows(sim.train)));

    std::vector<detail::WorkerOutcome> outcomes(static_cast<std::size_t>(workers));
    if (cfg.parallel_workers) {
        std::vector<std::future<detail::WorkerOutcome>> futures;
        futures.reserve(static_cast<std::size_t>(workers));
        for (int m = 0; m < workers; ++m) {
            futures.push_back(std::async(std::launch::async,
                                         [&sim, m, &w0] { return detail::run_worker(sim, m, w0); }));
        }
        for (int m = 0; m < workers; ++m) {
            outcomes[static_cast<std::size_t>(m)] = futures[static_cast<std::size_t>(m)].get();
        }
    } else {
        for (int m = 0; m < workers; ++m) {
            outcomes[static_cast<std::size_t>(m)] = detail::run_worker(sim, m, w0);
        }
    }

    // Aggregation: coordinate-wise mean of the reconstructions.
    ParamVector w_next(w0.size(), 0.0);
    for (const auto& out : outcomes) axpy(1.0, out.w_hat, w_next);
    const double inv_m = 1.0 / static_cast<double>(workers);
    for (double& v : w_next) v *= inv_m;

    if (!cfg.codec.bypass && cfg.codec.predictor.memory == MemoryVariant::global) {
        advance_global_memory(sim.worker_global_mem, w0, w_next, cfg.codec.predictor);
        advance_global_memory(sim.server.global_mirror, w0, w_next, cfg.codec.predictor);
    }

    sim.server.w = w_next;
    sim.server.round += 1;

    MomentAccumulator pooled;
    metrics.bits.resize(static_cast<std::size_t>(workers));
    metrics.tx_seconds.resize(static_cast<std::size_t>(workers));
    for (int m = 0; m < workers; ++m) {
        const auto& out = outcomes[static_cast<std::size_t>(m)];
        metrics.bits[static_cast<std::size_t>(m)] = out.gross_bits;
        metrics.total_bits += out.gross_bits;
        metrics.payload_bits += out.payload_bits;
        const double capacity =
            uplink_capacity(sim.placement.distances_m[static_cast<std::size_t>(m)], cfg.channel);
        metrics.tx_seconds[static_cast<std::size_t>(m)] =
            static_cast<double>(out.gross_bits) / capacity;
        if (out.mode >= 1 && out.mode <= 4) ++metrics.mode_hist[static_cast<std::size_t>(out.mode - 1)];
        if (!cfg.codec.bypass) {
            (out.family == QuantizerFamily::uniform ? metrics.quant_uniform
                                                    : metrics.quant_stochastic) += 1;
        }
        metrics.p_hat.push_back(out.p_hat);
        metrics.q_hat.push_back(out.q_hat);
        metrics.chosen_pred_err.push_back(out.chosen_err);
        metrics.mode1_pred_err.push_back(out.mode1_err);
        pooled.merge(out.residual_moments);
    }
    metrics.comm_time_s = round_comm_time(metrics.bits, sim.placement, cfg.channel);
    const double raw_bits = 32.0 * static_cast<double>(w0.size()) * workers;
    metrics.compression_ratio = raw_bits / static_cast<double>(metrics.total_bits);
    metrics.payload_ratio = raw_bits / std::max<double>(1.0, static_cast<double>(metrics.payload_bits));
    metrics.residual_skew = pooled.skewness();

    const EvalResult train_eval = evaluate(cfg.model, sim.server.w, sim.train);
    const EvalResult test_eval = evaluate(cfg.model, sim.server.w, sim.test);
    metrics.train_loss = train_eval.loss;
    metrics.train_acc = train_eval.accuracy;
    metrics.test_loss = test_eval.loss;
    metrics.test_acc = test_eval.accuracy;
    return metrics;
}

// Full training run, deterministic in (cfg, master_seed).
inline std::vector<RoundMetrics> run_training(const ExperimentConfig& cfg,
                                              std::uint64_t master_seed) {
    Simulation sim = build_simulation(cfg, master_seed);
    std::vector<RoundMetrics> series;
    series.reserve(static_cast<std::size_t>(cfg.rounds));
    for (int k = 0; k < cfg.rounds; ++k) series.push_back(run_round(sim));
    return series;
}

inline std::vector<RoundMetrics> run_training(const ExperimentConfig& cfg) {
    return run_training(cfg, cfg.seed);
}

}  // namespace pcfl
