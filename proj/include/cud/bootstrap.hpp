#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "cud/rng.hpp"

namespace cud {

// A bootstrap replicate as per-point copy counts, phi_i >= 0, sum phi_i = n.
struct Multiplicities {
    std::vector<int> phi;

    int n() const { return static_cast<int>(phi.size()); }

    void validate() const {
        long s = 0;
        for (int v : phi) {
            if (v < 0) throw std::invalid_argument("Multiplicities: negative count");
            s += v;
        }
        if (s != static_cast<long>(phi.size()))
            throw std::invalid_argument("Multiplicities: counts must sum to n");
    }
};

// n i.i.d. index draws with equal mass on each of the n points, i.e. a
// multinomial(n; 1/n, ..., 1/n) copy-count vector. Deterministic per seed.
inline Multiplicities draw_multiplicities(int n, uint64_t seed) {
    if (n < 1) throw std::invalid_argument("draw_multiplicities: n must be >= 1");
    Multiplicities m;
    m.phi.assign(static_cast<size_t>(n), 0);
    Rng rng(seed);
    for (int i = 0; i < n; ++i) ++m.phi[rng.next_below(static_cast<uint64_t>(n))];
    return m;
}

// The points a replicate actually moves: indices with phi_i != 1, their net
// weights phi_i - 1, and the distinct raw feature vectors among them
// (deduplicated by exact bitwise equality of coordinates).
struct OffSupport {
    std::vector<int> indices;
    std::vector<int> net_weights;                     // aligned with indices
    std::vector<Eigen::VectorXd> distinct_features;   // deduped raw rows
    std::vector<int> feature_group;                   // indices[i] -> distinct_features id
};

namespace detail {

inline std::string row_key(const Eigen::VectorXd& row) {
    std::string key(static_cast<size_t>(row.size()) * sizeof(double), '\0');
    std::memcpy(key.data(), row.data(), key.size());
    return key;
}

}  // namespace detail

inline OffSupport off_support(const Multiplicities& m, const Eigen::MatrixXd& features) {
    if (static_cast<Eigen::Index>(m.phi.size()) != features.rows())
        throw std::invalid_argument("off_support: multiplicity length must match row count");
    OffSupport out;
    std::unordered_map<std::string, int> seen;
    for (int i = 0; i < m.n(); ++i) {
        if (m.phi[static_cast<size_t>(i)] == 1) continue;
        out.indices.push_back(i);
        out.net_weights.push_back(m.phi[static_cast<size_t>(i)] - 1);
        const Eigen::VectorXd row = features.row(i);
        const std::string key = detail::row_key(row);
        auto it = seen.find(key);
        if (it == seen.end()) {
            const int id = static_cast<int>(out.distinct_features.size());
            seen.emplace(key, id);
            out.distinct_features.push_back(row);
            out.feature_group.push_back(id);
        } else {
            out.feature_group.push_back(it->second);
        }
    }
    return out;
}

// (1/n) |sum_i (phi_i - 1) flag_i|: the absolute difference between the
// replicate's empirical error and the original sample's, for the classifier
// whose misclassification flags are given.
inline double deviation(const Multiplicities& m, const std::vector<int>& misclassified_flags) {
    if (misclassified_flags.size() != m.phi.size())
        throw std::invalid_argument("deviation: flag length must match n");
    long s = 0;
    for (size_t i = 0; i < m.phi.size(); ++i)
        s += static_cast<long>(m.phi[i] - 1) * misclassified_flags[i];
    return std::fabs(static_cast<double>(s)) / static_cast<double>(m.phi.size());
}

}  // namespace cud
