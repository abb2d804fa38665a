#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "pcfl/common.hpp"
#include "pcfl/dataset.hpp"

namespace pcfl {

enum class Arch : std::uint8_t { logistic, mlp };
enum class Activation : std::uint8_t { tanh_act, relu };

// Desk-scale classifier: multinomial logistic regression or a one-hidden-layer
// MLP, parameters stored as one flat vector.
struct ModelSpec {
    Arch arch = Arch::mlp;
    int input_dim = 0;
    int hidden = 32;   // ignored for logistic
    int classes = 2;
    Activation activation = Activation::tanh_act;

    int param_count() const {
        if (arch == Arch::logistic) return classes * input_dim + classes;
        return hidden * input_dim + hidden + classes * hidden + classes;
    }

    void validate() const {
        if (input_dim < 1) throw contract_error("model: input_dim must be >= 1");
        if (classes < 2) throw contract_error("model: classes must be >= 2");
        if (arch == Arch::mlp && hidden < 1) throw contract_error("model: hidden must be >= 1");
    }
};

namespace detail {

inline double activate(double z, Activation a) {
    return a == Activation::tanh_act ? std::tanh(z) : std::max(0.0, z);
}

inline double activate_grad(double z, double act, Activation a) {
    return a == Activation::tanh_act ? 1.0 - act * act : (z > 0.0 ? 1.0 : 0.0);
}

// Stable softmax cross-entropy on logits; returns loss and fills probs.
inline double softmax_xent(std::span<const double> logits, int label,
                           std::span<double> probs) {
    const double zmax = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (std::size_t c = 0; c < logits.size(); ++c) {
        probs[c] = std::exp(logits[c] - zmax);
        denom += probs[c];
    }
    for (std::size_t c = 0; c < logits.size(); ++c) probs[c] /= denom;
    return -(logits[static_cast<std::size_t>(label)] - zmax - std::log(denom));
}

struct Workspace {
    std::vector<double> z1, a1, logits, probs, delta_out, delta_hidden;
    void resize(const ModelSpec& spec) {
        if (spec.arch == Arch::mlp) {
            z1.resize(static_cast<std::size_t>(spec.hidden));
            a1.resize(static_cast<std::size_t>(spec.hidden));
            delta_hidden.resize(static_cast<std::size_t>(spec.hidden));
        }
        logits.resize(static_cast<std::size_t>(spec.classes));
        probs.resize(static_cast<std::size_t>(spec.classes));
        delta_out.resize(static_cast<std::size_t>(spec.classes));
    }
};

inline void check_weights(const ModelSpec& spec, const ParamVector& w, const char* where) {
    if (static_cast<int>(w.size()) != spec.param_count()) {
        throw contract_error(std::string(where) + ": weight vector has wrong length");
    }
}

// Forward pass for one sample; returns the loss. When `grad` is non-null the
// per-sample gradient is accumulated into it (same flat layout as w).
inline double sample_pass(const ModelSpec& spec, const ParamVector& w,
                          const double* x, int label, Workspace& ws, ParamVector* grad) {
    const int p = spec.input_dim;
    const int c_num = spec.classes;

    if (spec.arch == Arch::logistic) {
        // layout: [W (C x p)][b (C)]
        const double* W = w.data();
        const double* b = w.data() + static_cast<std::size_t>(c_num) * p;
        for (int c = 0; c < c_num; ++c) {
            double z = b[c];
            const double* row = W + static_cast<std::size_t>(c) * p;
            for (int j = 0; j < p; ++j) z += row[j] * x[j];
            ws.logits[static_cast<std::size_t>(c)] = z;
        }
        const double loss = softmax_xent(ws.logits, label, ws.probs);
        if (grad) {
            double* gW = grad->data();
            double* gb = grad->data() + static_cast<std::size_t>(c_num) * p;
            for (int c = 0; c < c_num; ++c) {
                const double dz = ws.probs[static_cast<std::size_t>(c)] - (c == label ? 1.0 : 0.0);
                gb[c] += dz;
                double* grow = gW + static_cast<std::size_t>(c) * p;
                for (int j = 0; j < p; ++j) grow[j] += dz * x[j];
            }
        }
        return loss;
    }

    // MLP layout: [W1 (H x p)][b1 (H)][W2 (C x H)][b2 (C)]
    const int h_num = spec.hidden;
    const double* W1 = w.data();
    const double* b1 = W1 + static_cast<std::size_t>(h_num) * p;
    const double* W2 = b1 + h_num;
    const double* b2 = W2 + static_cast<std::size_t>(c_num) * h_num;

    for (int h = 0; h < h_num; ++h) {
        double z = b1[h];
        const double* row = W1 + static_cast<std::size_t>(h) * p;
        for (int j = 0; j < p; ++j) z += row[j] * x[j];
        ws.z1[static_cast<std::size_t>(h)] = z;
        ws.a1[static_cast<std::size_t>(h)] = activate(z, spec.activation);
    }
    for (int c = 0; c < c_num; ++c) {
        double z = b2[c];
        const double* row = W2 + static_cast<std::size_t>(c) * h_num;
        for (int h = 0; h < h_num; ++h) z += row[h] * ws.a1[static_cast<std::size_t>(h)];
        ws.logits[static_cast<std::size_t>(c)] = z;
    }
    const double loss = softmax_xent(ws.logits, label, ws.probs);

    if (grad) {
        double* gW1 = grad->data();
        double* gb1 = gW1 + static_cast<std::size_t>(h_num) * p;
        double* gW2 = gb1 + h_num;
        double* gb2 = gW2 + static_cast<std::size_t>(c_num) * h_num;

        for (int c = 0; c < c_num; ++c) {
            ws.delta_out[static_cast<std::size_t>(c)] =
                ws.probs[static_cast<std::size_t>(c)] - (c == label ? 1.0 : 0.0);
        }
        std::fill(ws.delta_hidden.begin(), ws.delta_hidden.end(), 0.0);
        for (int c = 0; c < c_num; ++c) {
            const double dz = ws.delta_out[static_cast<std::size_t>(c)];
            gb2[c] += dz;
            double* grow = gW2 + static_cast<std::size_t>(c) * h_num;
            const double* wrow = W2 + static_cast<std::size_t>(c) * h_num;
            for (int h = 0; h < h_num; ++h) {
                grow[h] += dz * ws.a1[static_cast<std::size_t>(h)];
                ws.delta_hidden[static_cast<std::size_t>(h)] += dz * wrow[h];
            }
        }
        for (int h = 0; h < h_num; ++h) {
            const double dz = ws.delta_hidden[static_cast<std::size_t>(h)] *
                              activate_grad(ws.z1[static_cast<std::size_t>(h)],
                                            ws.a1[static_cast<std::size_t>(h)], spec.activation);
            gb1[h] += dz;
            double* grow = gW1 + static_cast<std::size_t>(h) * p;
            for (int j = 0; j < p; ++j) grow[j] += dz * x[j];
        }
    }
    return loss;
}

}  // namespace detail

// Mean cross-entropy of the batch rows under weights w.
inline double forward_loss(const ModelSpec& spec, const ParamVector& w, const Dataset& data,
                           std::span<const int> rows) {
    spec.validate();
    detail::check_weights(spec, w, "forward_loss");
    if (rows.empty()) throw contract_error("forward_loss: empty batch");
    if (data.features != spec.input_dim) throw contract_error("forward_loss: feature mismatch");
    detail::Workspace ws;
    ws.resize(spec);
    double total = 0.0;
    for (int r : rows) {
        total += detail::sample_pass(spec, w, data.row(r), data.labels[static_cast<std::size_t>(r)],
                                     ws, nullptr);
    }
    return total / static_cast<double>(rows.size());
}

// Gradient of the mean batch loss with respect to w.
inline ParamVector backward_grad(const ModelSpec& spec, const ParamVector& w, const Dataset& data,
                                 std::span<const int> rows) {
    spec.validate();
    detail::check_weights(spec, w, "backward_grad");
    if (rows.empty()) throw contract_error("backward_grad: empty batch");
    if (data.features != spec.input_dim) throw contract_error("backward_grad: feature mismatch");
    detail::Workspace ws;
    ws.resize(spec);
    ParamVector grad(w.size(), 0.0);
    for (int r : rows) {
        detail::sample_pass(spec, w, data.row(r), data.labels[static_cast<std::size_t>(r)], ws,
                            &grad);
    }
    const double inv = 1.0 / static_cast<double>(rows.size());
    for (double& g : grad) g *= inv;
    return grad;
}

inline std::vector<int> all_rows(const Dataset& data) {
    std::vector<int> rows(static_cast<std::size_t>(data.size()));
    for (int i = 0; i < data.size(); ++i) rows[static_cast<std::size_t>(i)] = i;
    return rows;
}

// Loss and accuracy over a whole dataset.
struct EvalResult {
    double loss = 0.0;
    double accuracy = 0.0;
};

inline EvalResult evaluate(const ModelSpec& spec, const ParamVector& w, const Dataset& data) {
    spec.validate();
    detail::check_weights(spec, w, "evaluate");
    detail::Workspace ws;
    ws.resize(spec);
    double total = 0.0;
    int correct = 0;
    for (int r = 0; r < data.size(); ++r) {
        total += detail::sample_pass(spec, w, data.row(r), data.labels[static_cast<std::size_t>(r)],
                                     ws, nullptr);
        const auto best = std::distance(
            ws.probs.begin(), std::max_element(ws.probs.begin(), ws.probs.end()));
        if (static_cast<int>(best) == data.labels[static_cast<std::size_t>(r)]) ++correct;
    }
    EvalResult out;
    out.loss = total / std::max(1, data.size());
    out.accuracy = static_cast<double>(correct) / std::max(1, data.size());
    return out;
}

// Symmetric uniform init scaled by fan-in, biases zero.
inline ParamVector init_weights(const ModelSpec& spec, Rng& rng) {
    spec.validate();
    ParamVector w(static_cast<std::size_t>(spec.param_count()), 0.0);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    auto fill_layer = [&](std::size_t offset, int rows_n, int cols_n) {
        const double bound = std::sqrt(6.0 / static_cast<double>(rows_n + cols_n));
        for (std::size_t i = 0; i < static_cast<std::size_t>(rows_n) * cols_n; ++i) {
            w[offset + i] = bound * unit(rng);
        }
    };
    if (spec.arch == Arch::logistic) {
        fill_layer(0, spec.classes, spec.input_dim);
    } else {
        fill_layer(0, spec.hidden, spec.input_dim);
        fill_layer(static_cast<std::size_t>(spec.hidden) * spec.input_dim + spec.hidden,
                   spec.classes, spec.hidden);
    }
    return w;
}

}  // namespace pcfl
