#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pcfl/common.hpp"

namespace pcfl {

// Labeled feature matrix, rows stored contiguously.
struct Dataset {
    int features = 0;
    int classes = 0;
    std::vector<double> x;   // size() * features, row-major
    std::vector<int> labels;

    int size() const { return static_cast<int>(labels.size()); }
    const double* row(int r) const { return x.data() + static_cast<std::size_t>(r) * features; }

    void append_row(const double* values, int label) {
        x.insert(x.end(), values, values + features);
        labels.push_back(label);
    }

    void validate() const {
        if (size() < 1) throw contract_error("dataset: empty");
        if (features < 1) throw contract_error("dataset: no features");
        for (int y : labels) {
            if (y < 0 || y >= classes) throw contract_error("dataset: label out of range");
        }
    }
};

// Isotropic Gaussian blobs, one cluster per class. `separation` scales the
// spread of the class centers relative to the unit within-class noise.
inline Dataset make_blobs(int n, int features, int classes, double separation, Rng& rng) {
    if (n < classes) throw contract_error("make_blobs: need at least one sample per class");
    Dataset data;
    data.features = features;
    data.classes = classes;
    data.x.reserve(static_cast<std::size_t>(n) * features);
    data.labels.reserve(static_cast<std::size_t>(n));

    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> centers(static_cast<std::size_t>(classes) * features);
    for (double& c : centers) c = separation * gauss(rng);

    std::uniform_int_distribution<int> pick_class(0, classes - 1);
    std::vector<double> row(static_cast<std::size_t>(features));
    for (int i = 0; i < n; ++i) {
        const int y = pick_class(rng);
        const double* center = centers.data() + static_cast<std::size_t>(y) * features;
        for (int j = 0; j < features; ++j) row[static_cast<std::size_t>(j)] = center[j] + gauss(rng);
        data.append_row(row.data(), y);
    }
    return data;
}

// Header-free CSV rows: label,x1,...,xp as decimal text.
inline Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open dataset file: " + path);
    Dataset data;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> values;
        while (std::getline(ss, cell, ',')) {
            try {
                values.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw config_error("bad numeric value at " + path + ":" + std::to_string(line_no));
            }
        }
        if (values.size() < 2) {
            throw config_error("row with fewer than two columns at " + path + ":" +
                               std::to_string(line_no));
        }
        const int label = static_cast<int>(std::llround(values[0]));
        if (label < 0) throw config_error("negative label at " + path + ":" + std::to_string(line_no));
        if (data.features == 0) {
            data.features = static_cast<int>(values.size()) - 1;
        } else if (static_cast<int>(values.size()) - 1 != data.features) {
            throw config_error("inconsistent column count at " + path + ":" + std::to_string(line_no));
        }
        data.x.insert(data.x.end(), values.begin() + 1, values.end());
        data.labels.push_back(label);
        data.classes = std::max(data.classes, label + 1);
    }
    if (data.size() == 0) throw config_error("dataset file is empty: " + path);
    return data;
}

inline void save_csv(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw config_error("cannot write dataset file: " + path);
    out.precision(17);
    for (int r = 0; r < data.size(); ++r) {
        out << data.labels[static_cast<std::size_t>(r)];
        const double* row = data.row(r);
        for (int j = 0; j < data.features; ++j) out << ',' << row[j];
        out << '\n';
    }
}

// Seeded shuffle-split into train and held-out test parts.
inline std::pair<Dataset, Dataset> split_train_test(const Dataset& data, double test_fraction,
                                                    Rng& rng) {
    if (test_fraction < 0.0 || test_fraction >= 1.0) {
        throw contract_error("split_train_test: test_fraction must be in [0, 1)");
    }
    std::vector<int> order(static_cast<std::size_t>(data.size()));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const int n_test = static_cast<int>(std::floor(test_fraction * data.size()));

    Dataset train, test;
    train.features = test.features = data.features;
    train.classes = test.classes = data.classes;
    for (int i = 0; i < data.size(); ++i) {
        const int r = order[static_cast<std::size_t>(i)];
        (i < n_test ? test : train).append_row(data.row(r), data.labels[static_cast<std::size_t>(r)]);
    }
    return {std::move(train), std::move(test)};
}

// Non-i.i.d. split: worker m receives class-k samples in proportion to
// q_{m,k} with q_m ~ Dir(alpha). The union of the shards is exactly the
// input multiset and every worker ends up with at least one sample.
inline std::vector<Dataset> dirichlet_partition(const Dataset& data, int workers, double alpha,
                                                Rng& rng) {
    data.validate();
    if (workers < 1) throw contract_error("dirichlet_partition: workers must be >= 1");
    if (!(alpha > 0.0)) throw contract_error("dirichlet_partition: alpha must be positive");
    if (workers > data.size()) {
        throw contract_error("dirichlet_partition: infeasible, more workers than samples");
    }

    // q_m ~ Dir(alpha) via normalized gamma draws.
    std::gamma_distribution<double> gamma(alpha, 1.0);
    std::vector<std::vector<double>> q(static_cast<std::size_t>(workers),
                                       std::vector<double>(static_cast<std::size_t>(data.classes)));
    for (auto& qm : q) {
        double sum = 0.0;
        for (double& v : qm) {
            v = gamma(rng);
            // A zero gamma draw is possible at tiny alpha in floating point.
            if (v <= 0.0) v = 1e-300;
            sum += v;
        }
        for (double& v : qm) v /= sum;
    }

    std::vector<std::vector<int>> by_class(static_cast<std::size_t>(data.classes));
    for (int r = 0; r < data.size(); ++r) {
        by_class[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(r)])].push_back(r);
    }
    for (auto& rows : by_class) std::shuffle(rows.begin(), rows.end(), rng);

    // Largest-remainder apportioning per class keeps the split exact.
    std::vector<std::vector<int>> assignment(static_cast<std::size_t>(workers));
    for (int k = 0; k < data.classes; ++k) {
        const auto& rows = by_class[static_cast<std::size_t>(k)];
        if (rows.empty()) continue;
        double wsum = 0.0;
        for (int m = 0; m < workers; ++m) wsum += q[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)];
        std::vector<int> counts(static_cast<std::size_t>(workers), 0);
        std::vector<std::pair<double, int>> remainders;
        int assigned = 0;
        for (int m = 0; m < workers; ++m) {
            const double share =
                static_cast<double>(rows.size()) * q[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)] / wsum;
            counts[static_cast<std::size_t>(m)] = static_cast<int>(std::floor(share));
            assigned += counts[static_cast<std::size_t>(m)];
            remainders.emplace_back(share - std::floor(share), m);
        }
        std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        for (int left = static_cast<int>(rows.size()) - assigned, i = 0; left > 0; --left, ++i) {
            ++counts[static_cast<std::size_t>(remainders[static_cast<std::size_t>(i)].second)];
        }
        std::size_t cursor = 0;
        for (int m = 0; m < workers; ++m) {
            for (int c = 0; c < counts[static_cast<std::size_t>(m)]; ++c) {
                assignment[static_cast<std::size_t>(m)].push_back(rows[cursor++]);
            }
        }
    }

    // Steal-one fallback so no worker is left empty.
    for (int m = 0; m < workers; ++m) {
        if (!assignment[static_cast<std::size_t>(m)].empty()) continue;
        auto richest = std::max_element(assignment.begin(), assignment.end(),
                                        [](const auto& a, const auto& b) { return a.size() < b.size(); });
        assignment[static_cast<std::size_t>(m)].push_back(richest->back());
        richest->pop_back();
    }

    std::vector<Dataset> shards(static_cast<std::size_t>(workers));
    for (int m = 0; m < workers; ++m) {
        auto& shard = shards[static_cast<std::size_t>(m)];
        shard.features = data.features;
        shard.classes = data.classes;
        for (int r : assignment[static_cast<std::size_t>(m)]) {
            shard.append_row(data.row(r), data.labels[static_cast<std::size_t>(r)]);
        }
    }
    return shards;
}

}  // namespace pcfl
