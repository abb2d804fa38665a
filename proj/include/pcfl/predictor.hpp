#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "pcfl/common.hpp"

namespace pcfl {

enum class MemoryVariant : std::uint8_t {
    per_worker,  // track each worker's reconstructed delta
    global       // track the shared global weight difference (O(d) memory)
};

struct PredictorConfig {
    std::vector<int> enabled_modes = {1, 2, 3, 4};
    double ar_step = 1e-3;        // step size a for the linear-predictor update
    int history_order = 3;        // R for the moving-average mode
    double beta1 = 0.8;           // moment tracking
    double beta2 = 0.99;
    double moment_scale = 1e-2;   // c in the moment-based prediction
    double epsilon = 1e-8;
    MemoryVariant memory = MemoryVariant::per_worker;

    void validate() const {
        if (enabled_modes.empty()) throw contract_error("predictor: no modes enabled");
        for (int m : enabled_modes) {
            if (m < 1 || m > 4) throw contract_error("predictor: mode ids must be in 1..4");
        }
        if (history_order < 1) throw contract_error("predictor: history order must be >= 1");
        if (beta1 <= 0.0 || beta1 >= 1.0 || beta2 <= 0.0 || beta2 >= 1.0) {
            throw contract_error("predictor: betas must be in (0, 1)");
        }
        if (!(epsilon > 0.0)) throw contract_error("predictor: epsilon must be positive");
    }

    bool mode_enabled(int mode) const {
        return std::find(enabled_modes.begin(), enabled_modes.end(), mode) != enabled_modes.end();
    }
};

// State shared (and kept bit-identical) between a worker and its server-side
// mirror: past reconstructed deltas, linear-predictor coefficients, and
// moment accumulators.
struct PredictorMemory {
    std::deque<ParamVector> delta_history;  // front = most recent delta_hat
    ParamVector ar_coeff;                   // starts as identity predictor
    ParamVector ar_bias;
    ParamVector moment1;
    ParamVector moment2;                    // entries stay >= 0
    std::uint64_t round = 0;

    bool operator==(const PredictorMemory& other) const = default;
};

inline PredictorMemory make_predictor_memory(std::size_t dim) {
    PredictorMemory mem;
    mem.ar_coeff.assign(dim, 1.0);
    mem.ar_bias.assign(dim, 0.0);
    mem.moment1.assign(dim, 0.0);
    mem.moment2.assign(dim, 0.0);
    return mem;
}

// One prediction of the post-training weights from the broadcast weights w0
// and the shared memory. Modes that need history fall back to w0 while the
// history is empty.
inline ParamVector predict(int mode, const ParamVector& w0, const PredictorMemory& mem,
                           const PredictorConfig& cfg) {
    switch (mode) {
        case 1:
            return w0;
        case 2: {
            ParamVector out(w0.size());
            for (std::size_t i = 0; i < w0.size(); ++i) {
                out[i] = mem.ar_coeff[i] * w0[i] + mem.ar_bias[i];
            }
            return out;
        }
        case 3: {
            const int avail = static_cast<int>(mem.delta_history.size());
            const int r_eff = std::min(cfg.history_order, avail);
            if (r_eff == 0) return w0;
            ParamVector out = w0;
            const double inv = 1.0 / static_cast<double>(r_eff);
            for (int r = 0; r < r_eff; ++r) {
                const ParamVector& delta = mem.delta_history[static_cast<std::size_t>(r)];
                for (std::size_t i = 0; i < out.size(); ++i) out[i] -= inv * delta[i];
            }
            return out;
        }
        case 4: {
            ParamVector out(w0.size());
            for (std::size_t i = 0; i < w0.size(); ++i) {
                out[i] = w0[i] - cfg.moment_scale * mem.moment1[i] /
                                     (std::sqrt(mem.moment2[i]) + cfg.epsilon);
            }
            return out;
        }
        default:
            throw contract_error("predict: unknown mode " + std::to_string(mode));
    }
}

struct PredictionResult {
    ParamVector prediction;
    int mode = 1;
    std::map<int, double> squared_errors;  // per enabled mode
};

// Evaluates every enabled mode against the true post-training weights and
// keeps the one with the smallest squared l2 error; ties go to the lowest
// mode id.
inline PredictionResult select_mode(const ParamVector& w_true, const ParamVector& w0,
                                    const PredictorMemory& mem, const PredictorConfig& cfg) {
    cfg.validate();
    check_same_size(w_true, w0, "select_mode");
    PredictionResult result;
    double best = std::numeric_limits<double>::infinity();

    std::vector<int> modes = cfg.enabled_modes;
    std::sort(modes.begin(), modes.end());
    for (int mode : modes) {
        ParamVector pred = predict(mode, w0, mem, cfg);
        double err = 0.0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const double diff = w_true[i] - pred[i];
            err += diff * diff;
        }
        result.squared_errors[mode] = err;
        if (err < best) {
            best = err;
            result.mode = mode;
            result.prediction = std::move(pred);
        }
    }
    return result;
}

// Adapts the linear predictor toward the reconstruction both sides hold:
// MSE = (1/d) ||(coeff*w0 + bias) - w_hat||^2, one gradient step on coeff
// and bias.
inline void update_ar_coefficients(PredictorMemory& mem, const ParamVector& w0,
                                   const ParamVector& w_hat, const PredictorConfig& cfg) {
    check_same_size(w0, w_hat, "update_ar_coefficients");
    const double d = static_cast<double>(w0.size());
    const double step = 2.0 * cfg.ar_step / d;
    for (std::size_t i = 0; i < w0.size(); ++i) {
        const double predicted = mem.ar_coeff[i] * w0[i] + mem.ar_bias[i];
        const double diff = predicted - w_hat[i];
        mem.ar_coeff[i] -= step * diff * w0[i];
        mem.ar_bias[i] -= step * diff;
    }
}

// Pushes this round's delta into the history and refreshes the moments.
// The per-worker variant tracks w0 - w_hat; the global variant tracks the
// globally known w_k - w_{k+1} instead, which every side can compute.
inline void update_memory(PredictorMemory& mem, const ParamVector& w0, const ParamVector& w_hat,
                          const PredictorConfig& cfg,
                          const ParamVector* global_w_next = nullptr) {
    if (cfg.memory == MemoryVariant::global && global_w_next == nullptr) {
        throw contract_error("update_memory: global variant needs the next global weight");
    }
    const ParamVector delta = cfg.memory == MemoryVariant::per_worker ? sub(w0, w_hat)
                                                                      : sub(w0, *global_w_next);
    for (std::size_t i = 0; i < delta.size(); ++i) {
        mem.moment1[i] = cfg.beta1 * mem.moment1[i] + (1.0 - cfg.beta1) * delta[i];
        mem.moment2[i] = cfg.beta2 * mem.moment2[i] + (1.0 - cfg.beta2) * delta[i] * delta[i];
    }
    mem.delta_history.push_front(delta);
    while (static_cast<int>(mem.delta_history.size()) > cfg.history_order) {
        mem.delta_history.pop_back();
    }
    mem.round += 1;
}

}  // namespace pcfl
