#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "smartsvm/core.hpp"
#include "smartsvm/dataset.hpp"
#include "smartsvm/mst.hpp"
#include "smartsvm/parallel.hpp"
#include "smartsvm/rng.hpp"

namespace smartsvm {

// Henze-Penrose divergence from a Friedman-Rafsky cross count, clamped to
// [0, 1] against sampling noise.
inline double hp_divergence(double r, std::size_t n1, std::size_t n2) {
    if (n1 < 1 || n2 < 1) throw DataError("both sample counts must be positive");
    const double n = static_cast<double>(n1 + n2);
    if (r < 0.0 || r > n - 1.0) throw DataError("cross count out of range");
    const double d = 1.0 - n * r / (2.0 * static_cast<double>(n1) * static_cast<double>(n2));
    return std::clamp(d, 0.0, 1.0);
}

// Cross-count ceiling: the count at which the plug-in estimate reaches the
// minority prior. Counts above it only reflect overlap noise.
inline double gamma_threshold(std::size_t n, std::size_t n1, std::size_t n2) {
    if (n1 < 1 || n2 < 1 || n1 + n2 != n) throw DataError("inconsistent sample counts");
    const double nn = static_cast<double>(n);
    const double m = static_cast<double>(std::min(n1, n2)) / nn;
    return 2.0 * nn * m - 0.75 * nn + 0.25 * nn * std::sqrt(9.0 - 16.0 * m);
}

inline double bias_corrected_r(double r, std::size_t n, std::size_t n1, std::size_t n2) {
    if (r < 0.0) throw DataError("cross count out of range");
    return std::min(r, gamma_threshold(n, n1, n2));
}

struct BerEstimate {
    double r_raw = 0.0;
    double r_corrected = 0.0;
    double u_hp = 0.0;
    double p_lower = 0.0;
    double p_upper = 0.0;
    double p_hat = 0.0;
    double p_hat_normalized = 0.0;
    std::size_t n1 = 0;
    std::size_t n2 = 0;
};

inline BerEstimate estimate_from_r(double r_corrected, std::size_t n1, std::size_t n2) {
    if (n1 < 1 || n2 < 1) throw DataError("both sample counts must be positive");
    const double n = static_cast<double>(n1 + n2);
    if (r_corrected < 0.0 || r_corrected > n - 1.0) throw DataError("cross count out of range");
    BerEstimate e;
    e.r_raw = r_corrected;
    e.r_corrected = r_corrected;
    e.n1 = n1;
    e.n2 = n2;
    e.u_hp = std::clamp(1.0 - 2.0 * r_corrected / n, 0.0, 1.0);
    const double root = std::sqrt(e.u_hp);
    e.p_lower = 0.5 - 0.5 * root;
    e.p_upper = 0.5 - 0.5 * e.u_hp;
    e.p_hat = 0.5 - 0.25 * root - 0.25 * e.u_hp;
    const double minority = static_cast<double>(std::min(n1, n2)) / n;
    e.p_hat_normalized = std::min(1.0, e.p_hat / minority);
    return e;
}

// Cap the raw count, then estimate; keeps the raw count for reporting.
inline BerEstimate ber_from_raw_count(double r_raw, std::size_t n1, std::size_t n2) {
    BerEstimate e = estimate_from_r(bias_corrected_r(r_raw, n1 + n2, n1, n2), n1, n2);
    e.r_raw = r_raw;
    return e;
}

inline void to_json(nlohmann::json& j, const BerEstimate& e) {
    j = nlohmann::json{{"r_raw", e.r_raw},
                       {"r_corrected", e.r_corrected},
                       {"u_hp", e.u_hp},
                       {"p_lower", e.p_lower},
                       {"p_upper", e.p_upper},
                       {"p_hat", e.p_hat},
                       {"p_hat_normalized", e.p_hat_normalized},
                       {"n1", e.n1},
                       {"n2", e.n2}};
}

namespace detail {

// Mean raw cross count over orthogonal trees for a binary membership.
inline double mean_cross_count(const OrthogonalMsts& forests,
                               std::span<const std::uint8_t> membership) {
    if (forests.trees.empty()) throw InternalError("no spanning trees built");
    double total = 0.0;
    for (const auto& tree : forests.trees) {
        total += static_cast<double>(cross_count(tree, membership));
    }
    return total / static_cast<double>(forests.trees.size());
}

}  // namespace detail

// BER estimate for one class pair: restrict to the two classes, average raw
// cross counts over the orthogonal trees, then apply one bias correction to
// the mean.
inline BerEstimate pairwise_ber(const LabeledDataset& ds, int class_a, int class_b, int n_trees,
                                std::uint64_t seed) {
    (void)seed;  // construction is deterministic; kept for interface stability
    if (class_a == class_b) throw DataError("class pair must be distinct");
    if (class_a < 0 || class_b < 0 || class_a >= ds.n_classes() || class_b >= ds.n_classes()) {
        throw DataError("class id out of range");
    }
    std::vector<std::size_t> rows;
    std::vector<std::uint8_t> membership;
    for (std::size_t i = 0; i < ds.n_samples(); ++i) {
        if (ds.labels[i] == class_a || ds.labels[i] == class_b) {
            rows.push_back(i);
            membership.push_back(ds.labels[i] == class_a ? 1 : 0);
        }
    }
    std::size_t n1 = 0;
    for (std::uint8_t m : membership) n1 += m;
    const std::size_t n2 = rows.size() - n1;
    if (n1 < 2) {
        throw DataError("class '" + ds.class_labels[static_cast<std::size_t>(class_a)] +
                        "' has fewer than 2 samples");
    }
    if (n2 < 2) {
        throw DataError("class '" + ds.class_labels[static_cast<std::size_t>(class_b)] +
                        "' has fewer than 2 samples");
    }
    const Matrix sub = gather_rows(ds.features, rows);
    const DistanceMatrix dist = pairwise_distances(sub);
    const OrthogonalMsts forests = orthogonal_msts(dist, n_trees);
    const double r_raw = detail::mean_cross_count(forests, membership);
    return ber_from_raw_count(r_raw, n1, n2);
}

// Symmetric K x K matrix of pairwise estimates; the diagonal is unused.
struct PairwiseBerMatrix {
    int n_classes = 0;
    std::vector<BerEstimate> cells;

    const BerEstimate& at(int k, int l) const {
        if (k < 0 || l < 0 || k >= n_classes || l >= n_classes || k == l) {
            throw InternalError("pairwise matrix index out of range");
        }
        return cells[static_cast<std::size_t>(k) * static_cast<std::size_t>(n_classes) +
                     static_cast<std::size_t>(l)];
    }
};

inline PairwiseBerMatrix pairwise_ber_matrix(const LabeledDataset& ds, int n_trees,
                                             std::uint64_t seed, unsigned workers = 1) {
    validate_dataset(ds);
    const int k = ds.n_classes();
    PairwiseBerMatrix m;
    m.n_classes = k;
    m.cells.assign(static_cast<std::size_t>(k) * static_cast<std::size_t>(k), BerEstimate{});
    std::vector<std::pair<int, int>> pairs;
    for (int a = 0; a < k; ++a) {
        for (int b = a + 1; b < k; ++b) pairs.emplace_back(a, b);
    }
    parallel_for(pairs.size(), workers, [&](std::size_t p) {
        const auto [a, b] = pairs[p];
        const BerEstimate e = pairwise_ber(ds, a, b, n_trees, derive_seed(seed, p));
        m.cells[static_cast<std::size_t>(a) * static_cast<std::size_t>(k) +
                static_cast<std::size_t>(b)] = e;
        m.cells[static_cast<std::size_t>(b) * static_cast<std::size_t>(k) +
                static_cast<std::size_t>(a)] = e;
    });
    return m;
}

// Per-class one-vs-rest estimates from a single set of orthogonal trees over
// the full dataset.
inline std::vector<BerEstimate> ovr_ber_estimates(const LabeledDataset& ds, int n_trees,
                                                  std::uint64_t seed) {
    (void)seed;
    validate_dataset(ds);
    const int k = ds.n_classes();
    const auto counts = ds.class_counts();
    const DistanceMatrix dist = pairwise_distances(ds.features);
    const OrthogonalMsts forests = orthogonal_msts(dist, n_trees);
    if (forests.trees.empty()) throw InternalError("no spanning trees built");
    std::vector<double> mean_counts(static_cast<std::size_t>(k), 0.0);
    for (const auto& tree : forests.trees) {
        const auto counts_k = ovr_cross_counts(tree, ds.labels, k);
        for (int c = 0; c < k; ++c) {
            mean_counts[static_cast<std::size_t>(c)] += counts_k[static_cast<std::size_t>(c)];
        }
    }
    std::vector<BerEstimate> out;
    out.reserve(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
        const double r_raw = mean_counts[static_cast<std::size_t>(c)] /
                             static_cast<double>(forests.trees.size());
        const std::size_t n_c = counts[static_cast<std::size_t>(c)];
        out.push_back(ber_from_raw_count(r_raw, n_c, ds.n_samples() - n_c));
    }
    return out;
}

}  // namespace smartsvm
