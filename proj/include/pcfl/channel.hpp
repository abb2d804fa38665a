#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "pcfl/common.hpp"

namespace pcfl {

// OFDMA uplink parameters. Defaults follow the simulated wireless setup:
// 10 mW transmit power, 2 MHz bandwidth, -174 dBm/Hz noise PSD, antenna
// gain 4.11, 915 MHz carrier, path-loss exponent 2.8.
struct ChannelConfig {
    double bandwidth_hz = 2e6;
    double tx_power_w = 0.01;
    double noise_psd_dbm_hz = -174.0;
    double antenna_gain = 4.11;
    double carrier_hz = 915e6;
    double path_loss_exponent = 2.8;
    // The printed capacity formula squares the path-loss gain. Setting this
    // treats the gain as a power gain instead (used unsquared); kept behind a
    // flag, not the default.
    bool gain_as_power = false;

    double noise_psd_w_hz() const { return std::pow(10.0, (noise_psd_dbm_hz - 30.0) / 10.0); }

    void validate() const {
        if (!(bandwidth_hz > 0.0) || !(tx_power_w > 0.0) || !(antenna_gain > 0.0) ||
            !(carrier_hz > 0.0)) {
            throw contract_error("channel: parameters must be positive");
        }
        if (!(noise_psd_w_hz() > 0.0)) throw contract_error("channel: noise PSD must be positive");
    }
};

struct WorkerPlacement {
    std::vector<double> distances_m;
};

// Quasi-static path-loss gain h = A_d * (c / (4 pi f_c d))^d_e.
inline double channel_gain(double distance_m, const ChannelConfig& cfg) {
    if (!(distance_m > 0.0)) throw contract_error("channel_gain: distance must be positive");
    const double wavelength_term = 3e8 / (4.0 * std::numbers::pi * cfg.carrier_hz * distance_m);
    return cfg.antenna_gain * std::pow(wavelength_term, cfg.path_loss_exponent);
}

// Uplink rate c = B log2(1 + P h^2 / (B N0)).
inline double uplink_capacity(double distance_m, const ChannelConfig& cfg) {
    cfg.validate();
    const double h = channel_gain(distance_m, cfg);
    const double gain = cfg.gain_as_power ? h : h * h;
    const double snr = cfg.tx_power_w * gain / (cfg.bandwidth_hz * cfg.noise_psd_w_hz());
    return cfg.bandwidth_hz * std::log2(1.0 + snr);
}

// Concurrent uplinks: the round costs as much as its slowest worker.
inline double round_comm_time(std::span<const std::uint64_t> bits_per_worker,
                              const WorkerPlacement& placement, const ChannelConfig& cfg) {
    if (bits_per_worker.size() != placement.distances_m.size()) {
        throw contract_error("round_comm_time: bits and placements differ in length");
    }
    double worst = 0.0;
    for (std::size_t m = 0; m < bits_per_worker.size(); ++m) {
        const double c = uplink_capacity(placement.distances_m[m], cfg);
        worst = std::max(worst, static_cast<double>(bits_per_worker[m]) / c);
    }
    return worst;
}

// Uniform placement over a disk of the given radius (sqrt-scaled radius).
inline WorkerPlacement place_workers_uniform(int workers, double radius_m, Rng& rng) {
    if (workers < 1) throw contract_error("place_workers_uniform: workers must be >= 1");
    if (!(radius_m > 0.0)) throw contract_error("place_workers_uniform: radius must be positive");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    WorkerPlacement placement;
    placement.distances_m.resize(static_cast<std::size_t>(workers));
    for (double& d : placement.distances_m) {
        double u = unit(rng);
        // Angle is irrelevant for path loss but drawn to keep the sampler a
        // faithful point process over the disk.
        (void)unit(rng);
        d = radius_m * std::sqrt(u);
        if (d <= 0.0) d = radius_m * 1e-9;  // guard against u == 0
    }
    return placement;
}

}  // namespace pcfl
