#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pcfl/bytes.hpp"
#include "pcfl/common.hpp"
#include "pcfl/entropy.hpp"
#include "pcfl/predictor.hpp"
#include "pcfl/quantizer.hpp"

namespace pcfl {

struct CodecConfig {
    PredictorConfig predictor;
    QuantizerConfig quantizer;
    bool entropy_coding = true;
    // Uncompressed baseline: the orchestrator ships raw weights and charges
    // 32 bits per coordinate, skipping the codec entirely.
    bool bypass = false;

    void validate() const {
        predictor.validate();
        quantizer.validate();
    }
};

// One worker's uplink payload. The norm travels as a 32-bit float; the
// frequency table is present only when entropy coding is on.
struct UplinkMessage {
    std::uint8_t mode = 1;
    float norm = 0.0f;
    std::vector<std::uint8_t> table_bytes;
    Bitstream payload;

    bool operator==(const UplinkMessage& other) const = default;
};

// Accounted size: 2 mode bits + 32 norm bits + table + payload. The mode id
// is stored byte-aligned in the container but costed at 2 bits.
inline std::uint64_t message_size_bits(const UplinkMessage& msg) {
    return 2 + 32 + 8ull * msg.table_bytes.size() + msg.payload.bit_len;
}

// Container layout: [u8 mode][f32 BE norm][u16 table bytes T][T bytes]
// [u32 payload bit length][payload bytes].
inline std::vector<std::uint8_t> serialize_message(const UplinkMessage& msg) {
    ByteWriter w;
    w.u8(msg.mode);
    w.f32be(msg.norm);
    w.u16be(static_cast<std::uint16_t>(msg.table_bytes.size()));
    w.raw(msg.table_bytes);
    w.u32be(static_cast<std::uint32_t>(msg.payload.bit_len));
    w.raw(msg.payload.bytes);
    return w.bytes;
}

inline UplinkMessage parse_message(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    UplinkMessage msg;
    msg.mode = r.u8("message header");
    msg.norm = r.f32be("message header");
    const std::uint16_t table_len = r.u16be("message header");
    auto table = r.raw(table_len, "frequency table");
    msg.table_bytes.assign(table.begin(), table.end());
    msg.payload.bit_len = r.u32be("payload length");
    const std::size_t payload_bytes = static_cast<std::size_t>((msg.payload.bit_len + 7) / 8);
    auto payload = r.raw(payload_bytes, "payload");
    msg.payload.bytes.assign(payload.begin(), payload.end());
    if (r.remaining() != 0) throw decode_error("trailing bytes after payload");
    return msg;
}

namespace detail {

inline int bits_per_level(int s) {
    int bits = 0;
    for (int v = 2 * s; v > 0; v >>= 1) ++bits;
    return std::max(1, bits);
}

inline Bitstream pack_fixed_width(std::span<const int> levels, int s) {
    const int width = bits_per_level(s);
    Bitstream out;
    for (int h : levels) {
        for (int b = width - 1; b >= 0; --b) out.push_bit((h >> b) & 1);
    }
    return out;
}

inline std::vector<int> unpack_fixed_width(const Bitstream& bits, int s, std::size_t n) {
    const int width = bits_per_level(s);
    if (bits.bit_len != static_cast<std::uint64_t>(width) * n) {
        throw decode_error("fixed-width payload has wrong bit length");
    }
    std::vector<int> levels(n);
    std::uint64_t pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
        int v = 0;
        for (int b = 0; b < width; ++b) v = (v << 1) | bits.bit_at(pos++);
        if (v > 2 * s) throw decode_error("fixed-width symbol outside [0, 2s]");
        levels[i] = v;
    }
    return levels;
}

// Both sides must rebuild the identical reconstruction, so the norm is
// rounded to its 32-bit wire precision before dequantization.
inline double wire_norm(double norm) { return static_cast<double>(static_cast<float>(norm)); }

inline void advance_per_worker_memory(PredictorMemory& mem, const ParamVector& w0,
                                      const ParamVector& w_hat, const PredictorConfig& cfg) {
    update_ar_coefficients(mem, w0, w_hat, cfg);
    update_memory(mem, w0, w_hat, cfg);
}

}  // namespace detail

struct EncodeResult {
    UplinkMessage message;
    ParamVector w_hat;                       // reconstruction the decoder will compute
    int mode = 1;
    QuantizerFamily family = QuantizerFamily::uniform;
    std::map<int, double> prediction_errors;  // squared l2 per enabled mode
    double residual_sq = 0.0;                // ||e||^2 before quantization
    double distortion_sq = 0.0;              // ||Q(e) - e||^2
    MomentAccumulator residual_moments;      // raw moments of residual entries
};

// Worker-side compression: pick the best predictor, quantize the residue,
// entropy-code the levels, then mirror the decoder's reconstruction and
// memory update so both sides stay in lockstep.
inline EncodeResult encode(const ParamVector& w_local, const ParamVector& w0,
                           PredictorMemory& mem, const CodecConfig& cfg, Rng& rng) {
    cfg.validate();
    check_same_size(w_local, w0, "encode");

    EncodeResult out;
    PredictionResult pred = select_mode(w_local, w0, mem, cfg.predictor);
    out.mode = pred.mode;
    out.prediction_errors = pred.squared_errors;

    const ParamVector residual = sub(w_local, pred.prediction);
    out.residual_sq = squared_l2(residual);
    out.residual_moments.add(residual);

    QuantizerChoice choice = quantize(residual, cfg.quantizer, rng);
    out.family = choice.family;

    UplinkMessage msg;
    msg.mode = static_cast<std::uint8_t>(pred.mode);
    msg.norm = static_cast<float>(choice.quantized.norm);
    choice.quantized.norm = detail::wire_norm(choice.quantized.norm);

    if (cfg.entropy_coding) {
        const FrequencyTable table =
            FrequencyTable::from_symbols(choice.quantized.levels, 2 * cfg.quantizer.s + 1);
        msg.table_bytes = table.serialize();
        msg.payload = arithmetic_encode(choice.quantized.levels, table);
    } else {
        msg.payload = detail::pack_fixed_width(choice.quantized.levels, cfg.quantizer.s);
    }

    const ParamVector recon_residual = dequantize(choice.quantized);
    out.distortion_sq = squared_l2(sub(recon_residual, residual));
    out.w_hat = add(pred.prediction, recon_residual);
    out.message = std::move(msg);

    if (cfg.predictor.memory == MemoryVariant::per_worker) {
        detail::advance_per_worker_memory(mem, w0, out.w_hat, cfg.predictor);
    }
    return out;
}

// Server-side reconstruction; must be driven with the memory mirror that is
// synchronized with the producing worker.
inline ParamVector decode(const UplinkMessage& msg, const ParamVector& w0, PredictorMemory& mem,
                          const CodecConfig& cfg) {
    cfg.validate();
    if (msg.mode < 1 || msg.mode > 4 || !cfg.predictor.mode_enabled(msg.mode)) {
        throw decode_error("message names a mode that is not enabled");
    }
    if (!std::isfinite(msg.norm) || msg.norm < 0.0f) {
        throw decode_error("message norm is not a nonnegative finite value");
    }

    const ParamVector prediction = predict(msg.mode, w0, mem, cfg.predictor);

    QuantizedResidual q;
    q.s = cfg.quantizer.s;
    q.kappa = cfg.quantizer.kappa;
    q.norm_order = cfg.quantizer.norm;
    q.norm = static_cast<double>(msg.norm);
    if (cfg.entropy_coding) {
        const FrequencyTable table =
            FrequencyTable::deserialize(msg.table_bytes, 2 * cfg.quantizer.s + 1);
        q.levels = arithmetic_decode(msg.payload, table, w0.size());
    } else {
        if (!msg.table_bytes.empty()) throw decode_error("unexpected frequency table");
        q.levels = detail::unpack_fixed_width(msg.payload, cfg.quantizer.s, w0.size());
    }
    for (int h : q.levels) {
        if (h < 0 || h > 2 * cfg.quantizer.s) throw decode_error("decoded level outside [0, 2s]");
    }

    ParamVector w_hat = add(prediction, dequantize(q));

    if (cfg.predictor.memory == MemoryVariant::per_worker) {
        detail::advance_per_worker_memory(mem, w0, w_hat, cfg.predictor);
    }
    return w_hat;
}

// Shared-memory update for the O(d) variant, applied once per round by the
// orchestrator (and by workers after the broadcast) with identical inputs.
inline void advance_global_memory(PredictorMemory& mem, const ParamVector& w_k,
                                  const ParamVector& w_next, const PredictorConfig& cfg) {
    if (cfg.memory != MemoryVariant::global) {
        throw contract_error("advance_global_memory: config is not the global variant");
    }
    update_ar_coefficients(mem, w_k, w_next, cfg);
    update_memory(mem, w_k, w_next, cfg, &w_next);
}

}  // namespace pcfl
