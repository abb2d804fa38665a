#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "pcfl/common.hpp"
#include "pcfl/dataset.hpp"
#include "pcfl/model.hpp"

namespace pcfl {

enum class Optimizer : std::uint8_t { sgd, adam };

struct LocalOptimizerConfig {
    Optimizer optimizer = Optimizer::adam;
    double lr = 5e-3;
    int local_steps = 10;   // tau
    int batch_size = 32;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const {
        if (!(lr >= 0.0)) throw contract_error("optimizer: learning rate must be nonnegative");
        if (local_steps < 1) throw contract_error("optimizer: local_steps must be >= 1");
        if (batch_size < 1) throw contract_error("optimizer: batch_size must be >= 1");
        if (beta1 <= 0.0 || beta1 >= 1.0 || beta2 <= 0.0 || beta2 >= 1.0) {
            throw contract_error("optimizer: betas must be in (0, 1)");
        }
        if (!(epsilon > 0.0)) throw contract_error("optimizer: epsilon must be positive");
    }
};

// Runs tau mini-batch steps from w0 on a worker's shard. Batches are drawn
// uniformly with replacement; the effective batch size is capped by the
// shard size. Adam state starts fresh each call, so the result is a pure
// function of (w0, cfg, data, rng state).
inline ParamVector run_local_iterations(const ModelSpec& spec, const ParamVector& w0,
                                        const LocalOptimizerConfig& cfg, const Dataset& data,
                                        Rng& rng) {
    cfg.validate();
    spec.validate();
    data.validate();
    detail::check_weights(spec, w0, "run_local_iterations");

    const int batch = std::min(cfg.batch_size, data.size());
    std::uniform_int_distribution<int> pick(0, data.size() - 1);
    std::vector<int> rows(static_cast<std::size_t>(batch));

    ParamVector w = w0;
    ParamVector m, v;
    if (cfg.optimizer == Optimizer::adam) {
        m.assign(w.size(), 0.0);
        v.assign(w.size(), 0.0);
    }

    for (int t = 0; t < cfg.local_steps; ++t) {
        for (int& r : rows) r = pick(rng);
        const ParamVector grad = backward_grad(spec, w, data, rows);

        if (cfg.optimizer == Optimizer::sgd) {
            for (std::size_t i = 0; i < w.size(); ++i) w[i] -= cfg.lr * grad[i];
        } else {
            const double bc1 = 1.0 - std::pow(cfg.beta1, t + 1);
            const double bc2 = 1.0 - std::pow(cfg.beta2, t + 1);
            for (std::size_t i = 0; i < w.size(); ++i) {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
                const double m_hat = m[i] / bc1;
                const double v_hat = v[i] / bc2;
                w[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
            }
        }
        if (!all_finite(w)) {
            throw diverged_error("local training diverged at iteration " + std::to_string(t), t);
        }
    }
    return w;
}

}  // namespace pcfl
