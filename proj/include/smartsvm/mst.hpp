#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "smartsvm/core.hpp"
#include "smartsvm/parallel.hpp"

namespace smartsvm {

// Full symmetric Euclidean distance matrix, zero diagonal.
struct DistanceMatrix {
    std::size_t n = 0;
    std::vector<double> entries;

    double operator()(std::size_t i, std::size_t j) const { return entries[i * n + j]; }
};

inline DistanceMatrix pairwise_distances(const Matrix& features, unsigned workers = 1) {
    if (features.rows < 2) throw DataError("need at least 2 samples for distances");
    for (double v : features.data) {
        if (!std::isfinite(v)) throw DataError("non-finite feature value");
    }
    const std::size_t n = features.rows;
    const std::size_t d = features.cols;
    DistanceMatrix dm;
    dm.n = n;
    dm.entries.assign(n * n, 0.0);
    parallel_for(n, workers, [&](std::size_t i) {
        const double* xi = features.data.data() + i * d;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double* xj = features.data.data() + j * d;
            double s = 0.0;
            for (std::size_t t = 0; t < d; ++t) {
                const double diff = xi[t] - xj[t];
                s += diff * diff;
            }
            const double dist = std::sqrt(s);
            dm.entries[i * n + j] = dist;
            dm.entries[j * n + i] = dist;
        }
    });
    return dm;
}

// Edges normalized to (min, max) and sorted; total_weight is summed in that
// order so equal trees always report bit-identical weights.
struct SpanningTree {
    std::size_t n = 0;
    std::vector<std::pair<int, int>> edges;
    double total_weight = 0.0;
};

namespace detail {

// Strict order on candidate edges: weight first, then endpoints (a < b).
inline bool edge_less(double w1, int a1, int b1, double w2, int a2, int b2) {
    if (w1 != w2) return w1 < w2;
    if (a1 != a2) return a1 < a2;
    return b1 < b2;
}

inline SpanningTree prim_mst(const DistanceMatrix& dist, const std::vector<std::uint8_t>* excluded) {
    const std::size_t n = dist.n;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::uint8_t> in_tree(n, 0);
    std::vector<double> best_w(n, inf);
    std::vector<int> best_other(n, -1);
    auto is_excluded = [&](std::size_t a, std::size_t b) {
        return excluded && (*excluded)[a * n + b];
    };
    in_tree[0] = 1;
    for (std::size_t v = 1; v < n; ++v) {
        if (!is_excluded(0, v)) {
            best_w[v] = dist(0, v);
            best_other[v] = 0;
        }
    }
    SpanningTree tree;
    tree.n = n;
    tree.edges.reserve(n - 1);
    for (std::size_t step = 1; step < n; ++step) {
        std::size_t pick = n;
        double pick_w = inf;
        int pick_a = 0, pick_b = 0;
        for (std::size_t v = 0; v < n; ++v) {
            if (in_tree[v] || best_other[v] < 0) continue;
            const int a = std::min<int>(best_other[v], static_cast<int>(v));
            const int b = std::max<int>(best_other[v], static_cast<int>(v));
            if (pick == n || edge_less(best_w[v], a, b, pick_w, pick_a, pick_b)) {
                pick = v;
                pick_w = best_w[v];
                pick_a = a;
                pick_b = b;
            }
        }
        if (pick == n) throw DataError("edge exclusions disconnect the point set");
        tree.edges.emplace_back(pick_a, pick_b);
        in_tree[pick] = 1;
        for (std::size_t u = 0; u < n; ++u) {
            if (in_tree[u] || is_excluded(pick, u)) continue;
            const double w = dist(pick, u);
            const int a = std::min<int>(static_cast<int>(pick), static_cast<int>(u));
            const int b = std::max<int>(static_cast<int>(pick), static_cast<int>(u));
            if (best_other[u] < 0) {
                best_w[u] = w;
                best_other[u] = static_cast<int>(pick);
            } else {
                const int ca = std::min<int>(best_other[u], static_cast<int>(u));
                const int cb = std::max<int>(best_other[u], static_cast<int>(u));
                if (edge_less(w, a, b, best_w[u], ca, cb)) {
                    best_w[u] = w;
                    best_other[u] = static_cast<int>(pick);
                }
            }
        }
    }
    std::sort(tree.edges.begin(), tree.edges.end());
    tree.total_weight = 0.0;
    for (const auto& [a, b] : tree.edges) {
        tree.total_weight += dist(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
    }
    return tree;
}

}  // namespace detail

inline SpanningTree mst(const DistanceMatrix& dist,
                        std::span<const std::pair<int, int>> excluded = {}) {
    if (dist.n < 2) throw DataError("need at least 2 points for a spanning tree");
    if (excluded.empty()) return detail::prim_mst(dist, nullptr);
    std::vector<std::uint8_t> bitmap(dist.n * dist.n, 0);
    for (const auto& [a, b] : excluded) {
        if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= dist.n ||
            static_cast<std::size_t>(b) >= dist.n) {
            throw DataError("excluded edge endpoint out of range");
        }
        bitmap[static_cast<std::size_t>(a) * dist.n + static_cast<std::size_t>(b)] = 1;
        bitmap[static_cast<std::size_t>(b) * dist.n + static_cast<std::size_t>(a)] = 1;
    }
    return detail::prim_mst(dist, &bitmap);
}

struct OrthogonalMsts {
    std::vector<SpanningTree> trees;
    bool complete = true;  // false when exclusions disconnected the point set early
};

// Successive edge-disjoint spanning trees. If exclusions disconnect the point
// set before `count` trees exist, the ones built so far are returned.
inline OrthogonalMsts orthogonal_msts(const DistanceMatrix& dist, int count) {
    if (count < 1) throw DataError("tree count must be at least 1");
    if (dist.n < 2) throw DataError("need at least 2 points for a spanning tree");
    OrthogonalMsts result;
    std::vector<std::uint8_t> bitmap(dist.n * dist.n, 0);
    for (int t = 0; t < count; ++t) {
        SpanningTree tree;
        try {
            tree = detail::prim_mst(dist, &bitmap);
        } catch (const DataError&) {
            result.complete = false;
            return result;
        }
        for (const auto& [a, b] : tree.edges) {
            bitmap[static_cast<std::size_t>(a) * dist.n + static_cast<std::size_t>(b)] = 1;
            bitmap[static_cast<std::size_t>(b) * dist.n + static_cast<std::size_t>(a)] = 1;
        }
        result.trees.push_back(std::move(tree));
    }
    return result;
}

// Number of tree edges joining the two membership groups.
inline int cross_count(const SpanningTree& tree, std::span<const std::uint8_t> membership) {
    if (membership.size() != tree.n) throw DataError("membership length does not match tree size");
    std::size_t ones = 0;
    for (std::uint8_t m : membership) ones += (m != 0);
    if (ones == 0 || ones == membership.size()) {
        throw DataError("membership must contain both groups");
    }
    int count = 0;
    for (const auto& [a, b] : tree.edges) {
        const bool ma = membership[static_cast<std::size_t>(a)] != 0;
        const bool mb = membership[static_cast<std::size_t>(b)] != 0;
        count += (ma != mb);
    }
    return count;
}

// One pass over the edges: counts[k] = edges with exactly one endpoint in
// class k. An edge between classes a and b increments both counts.
inline std::vector<int> ovr_cross_counts(const SpanningTree& tree, std::span<const int> labels,
                                         int n_classes) {
    if (labels.size() != tree.n) throw DataError("label length does not match tree size");
    if (n_classes < 2) throw DataError("need at least 2 classes");
    for (int y : labels) {
        if (y < 0 || y >= n_classes) throw DataError("class id out of range");
    }
    std::vector<int> counts(static_cast<std::size_t>(n_classes), 0);
    for (const auto& [a, b] : tree.edges) {
        const int ya = labels[static_cast<std::size_t>(a)];
        const int yb = labels[static_cast<std::size_t>(b)];
        if (ya != yb) {
            counts[static_cast<std::size_t>(ya)]++;
            counts[static_cast<std::size_t>(yb)]++;
        }
    }
    return counts;
}

}  // namespace smartsvm
