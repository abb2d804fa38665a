#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pcfl/common.hpp"
#include "pcfl/entropy.hpp"

namespace pcfl {

enum class NormOrder : std::uint8_t { l2, linf };
enum class QuantizerFamily : std::uint8_t { uniform, stochastic, rd_select };

struct QuantizerConfig {
    int s = 1;                // level parameter; representation levels L = 2s+1
    double kappa = 1.0;       // scale factor on the norm
    NormOrder norm = NormOrder::l2;
    QuantizerFamily family = QuantizerFamily::stochastic;
    double lambda = 0.0;      // rate weight in the D + lambda*R selection cost

    void validate() const {
        if (s < 1) throw contract_error("quantizer: s must be >= 1");
        if (!(kappa > 0.0)) throw contract_error("quantizer: kappa must be positive");
        if (lambda < 0.0) throw contract_error("quantizer: lambda must be nonnegative");
    }
};

// Norm scalar plus nonnegative sign-interleaved levels; everything the
// dequantizer needs, with no record of which quantizer produced it.
struct QuantizedResidual {
    double norm = 0.0;        // ||e||_p
    std::vector<int> levels;  // h_i in [0, 2s]
    int s = 1;
    double kappa = 1.0;
    NormOrder norm_order = NormOrder::l2;
};

inline double residual_norm(const ParamVector& e, const QuantizerConfig& cfg) {
    return cfg.norm == NormOrder::l2 ? l2_norm(e) : linf_norm(e);
}

// Folds signed levels [-s, s] onto [0, 2s]: the sign rides the least
// significant bit, and level 0 always maps to 0.
inline int interleave_sign(int signed_level, int s) {
    if (signed_level < -s || signed_level > s) {
        throw contract_error("interleave_sign: level " + std::to_string(signed_level) +
                             " outside [-s, s]");
    }
    return signed_level <= 0 ? -2 * signed_level : 2 * signed_level - 1;
}

inline int deinterleave_sign(int h, int s) {
    if (h < 0 || h > 2 * s) {
        throw contract_error("deinterleave_sign: symbol " + std::to_string(h) + " outside [0, 2s]");
    }
    return (h % 2 == 0) ? -(h / 2) : (h + 1) / 2;
}

namespace detail {

inline int sign_of(double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); }

inline QuantizedResidual make_zero_quantized(std::size_t d, const QuantizerConfig& cfg) {
    QuantizedResidual q;
    q.norm = 0.0;
    q.levels.assign(d, interleave_sign(0, cfg.s));
    q.s = cfg.s;
    q.kappa = cfg.kappa;
    q.norm_order = cfg.norm;
    return q;
}

}  // namespace detail

// Deterministic mid-tread uniform quantizer: round |e_i| to the nearest of
// s+1 levels on [0, kappa*||e||_p], clamped so symbols stay in [0, 2s].
inline QuantizedResidual quant_uniform(const ParamVector& e, const QuantizerConfig& cfg) {
    cfg.validate();
    if (!all_finite(e)) throw contract_error("quant_uniform: non-finite input");
    const double norm = residual_norm(e, cfg);
    if (norm == 0.0) return detail::make_zero_quantized(e.size(), cfg);

    QuantizedResidual q;
    q.norm = norm;
    q.s = cfg.s;
    q.kappa = cfg.kappa;
    q.norm_order = cfg.norm;
    q.levels.resize(e.size());
    const double scale = static_cast<double>(cfg.s) / (cfg.kappa * norm);
    for (std::size_t i = 0; i < e.size(); ++i) {
        int level = static_cast<int>(std::floor(std::fabs(e[i]) * scale + 0.5));
        level = std::min(level, cfg.s);
        q.levels[i] = interleave_sign(detail::sign_of(e[i]) * level, cfg.s);
    }
    return q;
}

// Stochastic quantizer: |e_i| lands on level l or l+1 with probabilities
// chosen so the reconstruction is unbiased.
inline QuantizedResidual quant_stochastic(const ParamVector& e, const QuantizerConfig& cfg,
                                          Rng& rng) {
    cfg.validate();
    if (!all_finite(e)) throw contract_error("quant_stochastic: non-finite input");
    const double norm = residual_norm(e, cfg);
    if (norm == 0.0) return detail::make_zero_quantized(e.size(), cfg);

    QuantizedResidual q;
    q.norm = norm;
    q.s = cfg.s;
    q.kappa = cfg.kappa;
    q.norm_order = cfg.norm;
    q.levels.resize(e.size());
    const double scale = static_cast<double>(cfg.s) / (cfg.kappa * norm);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double ratio = std::fabs(e[i]) * scale;  // in [0, s] when kappa covers the range
        int lower = static_cast<int>(std::floor(ratio));
        int level;
        if (lower >= cfg.s) {
            level = cfg.s;
        } else {
            const double p_up = ratio - static_cast<double>(lower);
            level = lower + (unit(rng) < p_up ? 1 : 0);
        }
        q.levels[i] = interleave_sign(detail::sign_of(e[i]) * level, cfg.s);
    }
    return q;
}

// Reconstruction is quantizer-agnostic: e_hat_i = (kappa/s) * ||e||_p * level_i.
inline ParamVector dequantize(const QuantizedResidual& q) {
    ParamVector out(q.levels.size());
    const double step = q.kappa * q.norm / static_cast<double>(q.s);
    for (std::size_t i = 0; i < q.levels.size(); ++i) {
        out[i] = step * static_cast<double>(deinterleave_sign(q.levels[i], q.s));
    }
    return out;
}

struct QuantizerChoice {
    QuantizedResidual quantized;
    QuantizerFamily family = QuantizerFamily::uniform;
    double distortion = 0.0;  // ||e_hat - e||_2^2 of the chosen quantizer
    double rate_bits = 0.0;   // d * empirical entropy of the chosen levels
};

namespace detail {

inline double distortion_of(const QuantizedResidual& q, const ParamVector& e) {
    const ParamVector rec = dequantize(q);
    double d2 = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double diff = rec[i] - e[i];
        d2 += diff * diff;
    }
    return d2;
}

inline double rate_of(const QuantizedResidual& q) {
    if (q.levels.empty()) return 0.0;
    return static_cast<double>(q.levels.size()) * empirical_entropy(q.levels);
}

}  // namespace detail

// Runs both quantizers and keeps the one with the lower D + lambda*R cost.
// Ties go to the uniform quantizer.
inline QuantizerChoice select_quantizer(const ParamVector& e, const QuantizerConfig& cfg,
                                        Rng& rng) {
    cfg.validate();
    QuantizerChoice uni;
    uni.quantized = quant_uniform(e, cfg);
    uni.family = QuantizerFamily::uniform;
    uni.distortion = detail::distortion_of(uni.quantized, e);
    uni.rate_bits = detail::rate_of(uni.quantized);

    QuantizerChoice sto;
    sto.quantized = quant_stochastic(e, cfg, rng);
    sto.family = QuantizerFamily::stochastic;
    sto.distortion = detail::distortion_of(sto.quantized, e);
    sto.rate_bits = detail::rate_of(sto.quantized);

    const double cost_uni = uni.distortion + cfg.lambda * uni.rate_bits;
    const double cost_sto = sto.distortion + cfg.lambda * sto.rate_bits;
    return cost_sto < cost_uni ? sto : uni;
}

// Quantize with the configured family; rd_select tries both.
inline QuantizerChoice quantize(const ParamVector& e, const QuantizerConfig& cfg, Rng& rng) {
    switch (cfg.family) {
        case QuantizerFamily::uniform: {
            QuantizerChoice c;
            c.quantized = quant_uniform(e, cfg);
            c.family = QuantizerFamily::uniform;
            c.distortion = detail::distortion_of(c.quantized, e);
            c.rate_bits = detail::rate_of(c.quantized);
            return c;
        }
        case QuantizerFamily::stochastic: {
            QuantizerChoice c;
            c.quantized = quant_stochastic(e, cfg, rng);
            c.family = QuantizerFamily::stochastic;
            c.distortion = detail::distortion_of(c.quantized, e);
            c.rate_bits = detail::rate_of(c.quantized);
            return c;
        }
        case QuantizerFamily::rd_select:
            return select_quantizer(e, cfg, rng);
    }
    throw contract_error("quantize: unknown family");
}

}  // namespace pcfl
