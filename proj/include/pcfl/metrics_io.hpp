#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pcfl/common.hpp"
#include "pcfl/orchestrator.hpp"

namespace pcfl {

inline double median_of(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

inline std::string hash_string(std::uint64_t h) {
    std::ostringstream os;
    os << std::hex << std::setfill('0') << std::setw(16) << h;
    return os.str();
}

// Column order is part of the output contract; see the README.
inline const char* kRoundCsvHeader =
    "round,train_loss,train_acc,test_loss,test_acc,total_bits,payload_bits,comm_time_s,"
    "compression_ratio,payload_ratio,mode1,mode2,mode3,mode4,quant_uniform,quant_stochastic,"
    "p_hat_median,q_hat_median,residual_skew,grad_norm_sq";

inline void write_round_csv(std::ostream& os, const std::vector<RoundMetrics>& series,
                            std::uint64_t config_hash, std::uint64_t seed) {
    os << "# config_hash=" << hash_string(config_hash) << " seed=" << seed << '\n';
    os << kRoundCsvHeader << '\n';
    os << std::setprecision(12);
    for (const auto& r : series) {
        os << r.round << ',' << r.train_loss << ',' << r.train_acc << ',' << r.test_loss << ','
           << r.test_acc << ',' << r.total_bits << ',' << r.payload_bits << ',' << r.comm_time_s
           << ',' << r.compression_ratio << ',' << r.payload_ratio << ',' << r.mode_hist[0] << ','
           << r.mode_hist[1] << ',' << r.mode_hist[2] << ',' << r.mode_hist[3] << ','
           << r.quant_uniform << ',' << r.quant_stochastic << ',' << median_of(r.p_hat) << ','
           << median_of(r.q_hat) << ',' << r.residual_skew << ',' << r.grad_norm_sq << '\n';
    }
}

inline void write_round_csv_file(const std::string& path, const std::vector<RoundMetrics>& series,
                                 std::uint64_t config_hash, std::uint64_t seed) {
    std::ofstream out(path);
    if (!out) throw config_error("cannot write metrics file: " + path);
    write_round_csv(out, series, config_hash, seed);
}

struct SeedSummary {
    std::uint64_t seed = 0;
    double final_test_loss = 0.0;
    double final_test_acc = 0.0;
    std::uint64_t cumulative_bits = 0;
    double cumulative_comm_time_s = 0.0;
    double mean_compression_ratio = 0.0;
    std::array<double, 4> mode_frequency{};
};

inline SeedSummary summarize_run(std::uint64_t seed, const std::vector<RoundMetrics>& series) {
    SeedSummary s;
    s.seed = seed;
    if (series.empty()) return s;
    s.final_test_loss = series.back().test_loss;
    s.final_test_acc = series.back().test_acc;
    double ratio_sum = 0.0;
    std::array<double, 4> mode_counts{};
    double total_modes = 0.0;
    for (const auto& r : series) {
        s.cumulative_bits += r.total_bits;
        s.cumulative_comm_time_s += r.comm_time_s;
        ratio_sum += r.compression_ratio;
        for (std::size_t i = 0; i < 4; ++i) {
            mode_counts[i] += r.mode_hist[i];
            total_modes += r.mode_hist[i];
        }
    }
    s.mean_compression_ratio = ratio_sum / static_cast<double>(series.size());
    if (total_modes > 0) {
        for (std::size_t i = 0; i < 4; ++i) s.mode_frequency[i] = mode_counts[i] / total_modes;
    }
    return s;
}

inline nlohmann::json summary_json(std::uint64_t config_hash, std::uint64_t master_seed,
                                   const std::vector<SeedSummary>& seeds) {
    nlohmann::json j;
    j["config_hash"] = hash_string(config_hash);
    j["master_seed"] = master_seed;
    nlohmann::json per_seed = nlohmann::json::array();
    std::vector<double> accs, losses;
    for (const auto& s : seeds) {
        per_seed.push_back({{"seed", s.seed},
                            {"final_test_loss", s.final_test_loss},
                            {"final_test_acc", s.final_test_acc},
                            {"cumulative_bits", s.cumulative_bits},
                            {"cumulative_comm_time_s", s.cumulative_comm_time_s},
                            {"mean_compression_ratio", s.mean_compression_ratio},
                            {"mode_frequency", s.mode_frequency}});
        accs.push_back(s.final_test_acc);
        losses.push_back(s.final_test_loss);
    }
    j["runs"] = per_seed;
    auto mean_std = [](const std::vector<double>& v) {
        if (v.empty()) return std::pair<double, double>{0.0, 0.0};
        double mu = 0.0;
        for (double x : v) mu += x;
        mu /= static_cast<double>(v.size());
        double var = 0.0;
        for (double x : v) var += (x - mu) * (x - mu);
        var /= static_cast<double>(v.size());
        return std::pair<double, double>{mu, std::sqrt(var)};
    };
    const auto [acc_mu, acc_sd] = mean_std(accs);
    const auto [loss_mu, loss_sd] = mean_std(losses);
    j["final_test_acc_mean"] = acc_mu;
    j["final_test_acc_std"] = acc_sd;
    j["final_test_loss_mean"] = loss_mu;
    j["final_test_loss_std"] = loss_sd;
    return j;
}

// ----------------------------- assumption report -----------------------------

// Empirical diagnostics backing the analysis assumptions: residual symmetry
// (skewness), prediction-error ratio p, and quantization-error ratio q
// against its worst-case bound.
struct AssumptionReport {
    std::vector<double> skew_per_round;
    std::vector<int> skew_flagged_rounds;     // |skew| > 0.5
    std::vector<double> p_hat_median_per_round;
    double p_hat_overall_median = 0.0;
    std::vector<double> q_hat_max_per_round;
    double q_bound = 0.0;                      // min(d/s^2, sqrt(d)/s)
    bool q_within_bound = true;
};

inline AssumptionReport check_assumptions(const std::vector<RoundMetrics>& series, int dimension,
                                          int s) {
    AssumptionReport rep;
    const double d = static_cast<double>(dimension);
    const double ss = static_cast<double>(s);
    rep.q_bound = std::min(d / (ss * ss), std::sqrt(d) / ss);
    for (const auto& r : series) {
        rep.skew_per_round.push_back(r.residual_skew);
        if (std::fabs(r.residual_skew) > 0.5) rep.skew_flagged_rounds.push_back(r.round);
        rep.p_hat_median_per_round.push_back(median_of(r.p_hat));
        double qmax = 0.0;
        for (double q : r.q_hat) qmax = std::max(qmax, q);
        rep.q_hat_max_per_round.push_back(qmax);
        if (qmax > rep.q_bound) rep.q_within_bound = false;
    }
    rep.p_hat_overall_median = median_of(rep.p_hat_median_per_round);
    return rep;
}

inline nlohmann::json assumption_report_json(const AssumptionReport& rep) {
    nlohmann::json j;
    j["skew_per_round"] = rep.skew_per_round;
    j["skew_flagged_rounds"] = rep.skew_flagged_rounds;
    j["p_hat_median_per_round"] = rep.p_hat_median_per_round;
    j["p_hat_overall_median"] = rep.p_hat_overall_median;
    j["q_hat_max_per_round"] = rep.q_hat_max_per_round;
    j["q_bound"] = rep.q_bound;
    j["q_within_bound"] = rep.q_within_bound;
    return j;
}

}  // namespace pcfl
