#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "pcfl/common.hpp"

namespace pcfl {

// Constants appearing in the convergence analysis: smoothness L, learning
// rate eta, local steps tau, workers M, prediction-error ratio p,
// quantization-error ratio q, gradient-noise variance, and the objective
// gap f(w0) - f*.
struct TheoryParams {
    double smoothness = 1.0;        // L
    double lr = 0.1;                // eta
    int local_steps = 1;            // tau
    int workers = 1;                // M
    double pred_error_ratio = 1.0;  // p
    double quant_error_ratio = 1.0; // q
    double grad_noise_var = 0.0;    // sigma_xi^2
    double f_initial = 1.0;         // f(w^0)
    double f_optimum = 0.0;         // f*

    void validate() const {
        if (smoothness < 0.0 || lr < 0.0 || pred_error_ratio < 0.0 || quant_error_ratio < 0.0 ||
            grad_noise_var < 0.0) {
            throw contract_error("theory: parameters must be nonnegative");
        }
        if (local_steps < 1 || workers < 1) {
            throw contract_error("theory: tau and M must be >= 1");
        }
    }
};

// Learning-rate condition:
//   L^2 eta^2 tau (tau - 1) / 2 + L eta tau (q p / M + 1) <= 1.
inline bool lr_constraint_satisfied(const TheoryParams& tp) {
    tp.validate();
    const double L = tp.smoothness, eta = tp.lr;
    const double tau = static_cast<double>(tp.local_steps);
    const double lhs = L * L * eta * eta * tau * (tau - 1.0) / 2.0 +
                       L * eta * tau * (tp.quant_error_ratio * tp.pred_error_ratio /
                                            static_cast<double>(tp.workers) +
                                        1.0);
    return lhs <= 1.0;
}

// Bound on the K-round average squared gradient norm:
//   2 [f(w0) - f*] / (eta tau K) + L eta ((q p + 1)/M + L eta (tau - 1)/2) sigma^2.
inline double convergence_bound_rhs(const TheoryParams& tp, int rounds) {
    tp.validate();
    if (rounds < 1) throw contract_error("convergence_bound_rhs: rounds must be >= 1");
    const double L = tp.smoothness, eta = tp.lr;
    const double tau = static_cast<double>(tp.local_steps);
    const double first = 2.0 * (tp.f_initial - tp.f_optimum) /
                         (eta * tau * static_cast<double>(rounds));
    const double noise =
        L * eta *
        ((tp.quant_error_ratio * tp.pred_error_ratio + 1.0) / static_cast<double>(tp.workers) +
         L * eta * (tau - 1.0) / 2.0) *
        tp.grad_noise_var;
    return first + noise;
}

// Monte Carlo estimate of E[min of N i.i.d. Normal(mu, sigma^2) draws] for
// N = 1..n_max. Prefix minima share draws across N within one repetition,
// so each repetition contributes a monotone sequence.
struct MinErrorCurve {
    std::vector<double> mean;    // index N-1
    std::vector<double> stddev;
};

inline MinErrorCurve min_of_normals_curve(double mu, double sigma, int n_max, int reps, Rng& rng) {
    if (n_max < 1 || reps < 1) throw contract_error("min_of_normals_curve: n_max, reps >= 1");
    std::normal_distribution<double> gauss(mu, sigma);
    std::vector<double> sum(static_cast<std::size_t>(n_max), 0.0);
    std::vector<double> sum2(static_cast<std::size_t>(n_max), 0.0);
    for (int r = 0; r < reps; ++r) {
        double running = std::numeric_limits<double>::infinity();
        for (int n = 0; n < n_max; ++n) {
            running = std::min(running, gauss(rng));
            sum[static_cast<std::size_t>(n)] += running;
            sum2[static_cast<std::size_t>(n)] += running * running;
        }
    }
    MinErrorCurve curve;
    curve.mean.resize(static_cast<std::size_t>(n_max));
    curve.stddev.resize(static_cast<std::size_t>(n_max));
    for (int n = 0; n < n_max; ++n) {
        const double m = sum[static_cast<std::size_t>(n)] / reps;
        const double var = sum2[static_cast<std::size_t>(n)] / reps - m * m;
        curve.mean[static_cast<std::size_t>(n)] = m;
        curve.stddev[static_cast<std::size_t>(n)] = std::sqrt(std::max(0.0, var));
    }
    return curve;
}

}  // namespace pcfl
