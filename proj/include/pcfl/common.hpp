#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcfl {

// Flat weight/update/residue vector of dimension d.
using ParamVector = std::vector<double>;

using Rng = std::mt19937_64;

// ----------------------------- errors -----------------------------

// A caller violated a documented precondition.
struct contract_error : std::logic_error {
    using std::logic_error::logic_error;
};

// Local training produced NaN/Inf weights.
struct diverged_error : std::runtime_error {
    diverged_error(const std::string& what, int iteration)
        : std::runtime_error(what), iteration(iteration) {}
    int iteration;
};

// A serialized message or bitstream could not be decoded.
struct decode_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An experiment configuration failed validation.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ----------------------------- rng streams -----------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Independent stream derived from a master seed and a stream label.
// Workers, rounds, and verification suites each get their own stream so
// parallel evaluation matches sequential evaluation bit for bit.
inline Rng make_stream(std::uint64_t master_seed, std::uint64_t a, std::uint64_t b = 0) {
    return Rng(splitmix64(splitmix64(master_seed ^ 0x243f6a8885a308d3ull) + a) ^ splitmix64(b + 1));
}

// ----------------------------- vector ops -----------------------------

inline void check_same_size(const ParamVector& a, const ParamVector& b, const char* where) {
    if (a.size() != b.size()) {
        throw contract_error(std::string(where) + ": dimension mismatch (" +
                             std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    }
}

inline ParamVector sub(const ParamVector& a, const ParamVector& b) {
    check_same_size(a, b, "sub");
    ParamVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

inline ParamVector add(const ParamVector& a, const ParamVector& b) {
    check_same_size(a, b, "add");
    ParamVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

inline void axpy(double alpha, const ParamVector& x, ParamVector& y) {
    check_same_size(x, y, "axpy");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline double dot(const ParamVector& a, const ParamVector& b) {
    check_same_size(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double squared_l2(const ParamVector& a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    return s;
}

inline double l2_norm(const ParamVector& a) { return std::sqrt(squared_l2(a)); }

inline double linf_norm(const ParamVector& a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::fabs(v));
    return m;
}

inline bool all_finite(const ParamVector& a) {
    for (double v : a) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

inline double entry_mean(const ParamVector& a) {
    if (a.empty()) return 0.0;
    double s = 0.0;
    for (double v : a) s += v;
    return s / static_cast<double>(a.size());
}

// Population variance of the entries of a vector.
inline double entry_variance(const ParamVector& a) {
    if (a.empty()) return 0.0;
    const double mu = entry_mean(a);
    double s = 0.0;
    for (double v : a) s += (v - mu) * (v - mu);
    return s / static_cast<double>(a.size());
}

// Streaming accumulator for skewness of pooled residual entries.
struct MomentAccumulator {
    std::uint64_t n = 0;
    double sum = 0.0, sum2 = 0.0, sum3 = 0.0;

    void add(double v) {
        n += 1;
        sum += v;
        sum2 += v * v;
        sum3 += v * v * v;
    }
    void add(const ParamVector& a) {
        for (double v : a) add(v);
    }
    void merge(const MomentAccumulator& other) {
        n += other.n;
        sum += other.sum;
        sum2 += other.sum2;
        sum3 += other.sum3;
    }
    double skewness() const {
        if (n == 0) return 0.0;
        const double nn = static_cast<double>(n);
        const double m = sum / nn;
        const double m2 = sum2 / nn - m * m;
        const double m3 = sum3 / nn - 3.0 * m * (sum2 / nn) + 2.0 * m * m * m;
        if (m2 <= 0.0) return 0.0;
        return m3 / std::pow(m2, 1.5);
    }
};

}  // namespace pcfl
