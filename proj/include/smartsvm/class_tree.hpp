#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "smartsvm/ber.hpp"
#include "smartsvm/core.hpp"

namespace smartsvm {

// Complete weighted graph over class ids; weights are normalized BER
// estimates, symmetric with a zero diagonal.
struct ClassGraph {
    int n_vertices = 0;
    Matrix weights;
};

inline ClassGraph build_class_graph(const PairwiseBerMatrix& m) {
    if (m.n_classes < 2) throw DataError("need at least 2 classes");
    ClassGraph g;
    g.n_vertices = m.n_classes;
    g.weights = Matrix(static_cast<std::size_t>(m.n_classes), static_cast<std::size_t>(m.n_classes));
    for (int a = 0; a < m.n_classes; ++a) {
        for (int b = 0; b < m.n_classes; ++b) {
            if (a != b) {
                g.weights(static_cast<std::size_t>(a), static_cast<std::size_t>(b)) =
                    m.at(a, b).p_hat_normalized;
            }
        }
    }
    return g;
}

// side0 holds the smallest class id of the cut node; both sides ascending.
struct GraphCut {
    std::vector<int> side0;
    std::vector<int> side1;
    double weight = 0.0;
};

namespace detail {

// Stoer-Wagner on the subgraph induced by `vertices`. Deterministic: phases
// start from the group holding the smallest class id, merge candidates are
// scanned in ascending smallest-id order so ties go to the smaller id, and
// the first minimum cut found wins.
inline GraphCut stoer_wagner_subset(const Matrix& weights, std::vector<int> vertices) {
    std::sort(vertices.begin(), vertices.end());
    const std::size_t m = vertices.size();
    if (m < 2) throw InternalError("min cut needs at least 2 vertices");

    std::vector<std::vector<double>> w(m, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (i != j) {
                w[i][j] = weights(static_cast<std::size_t>(vertices[i]),
                                  static_cast<std::size_t>(vertices[j]));
            }
        }
    }
    std::vector<std::vector<int>> groups(m);
    std::vector<int> group_min(m);
    for (std::size_t i = 0; i < m; ++i) {
        groups[i] = {vertices[i]};
        group_min[i] = vertices[i];
    }
    std::vector<std::size_t> active(m);
    for (std::size_t i = 0; i < m; ++i) active[i] = i;

    std::vector<int> best_side;
    double best_weight = std::numeric_limits<double>::infinity();

    while (active.size() > 1) {
        std::vector<char> in_a(m, 0);
        std::vector<double> conn(m, 0.0);
        const std::size_t first = active[0];
        in_a[first] = 1;
        for (std::size_t u : active) {
            if (!in_a[u]) conn[u] = w[first][u];
        }
        std::size_t prev = first;
        std::size_t last = first;
        for (std::size_t step = 1; step < active.size(); ++step) {
            std::size_t pick = m;
            for (std::size_t u : active) {
                if (in_a[u]) continue;
                if (pick == m || conn[u] > conn[pick]) pick = u;
            }
            prev = last;
            last = pick;
            in_a[pick] = 1;
            for (std::size_t u : active) {
                if (!in_a[u]) conn[u] += w[pick][u];
            }
        }
        if (conn[last] < best_weight) {
            best_weight = conn[last];
            best_side = groups[last];
        }
        for (std::size_t u : active) {
            if (u == prev || u == last) continue;
            w[prev][u] += w[last][u];
            w[u][prev] = w[prev][u];
        }
        groups[prev].insert(groups[prev].end(), groups[last].begin(), groups[last].end());
        group_min[prev] = std::min(group_min[prev], group_min[last]);
        active.erase(std::find(active.begin(), active.end(), last));
        std::sort(active.begin(), active.end(),
                  [&](std::size_t a, std::size_t b) { return group_min[a] < group_min[b]; });
    }

    std::sort(best_side.begin(), best_side.end());
    std::vector<int> other;
    for (int v : vertices) {
        if (!std::binary_search(best_side.begin(), best_side.end(), v)) other.push_back(v);
    }
    GraphCut cut;
    if (other.empty() || best_side.empty()) throw InternalError("degenerate cut");
    if (best_side.front() < other.front()) {
        cut.side0 = best_side;
        cut.side1 = other;
    } else {
        cut.side0 = other;
        cut.side1 = best_side;
    }
    cut.weight = 0.0;
    for (int a : cut.side0) {
        for (int b : cut.side1) {
            cut.weight += weights(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
        }
    }
    return cut;
}

}  // namespace detail

inline GraphCut min_cut(const ClassGraph& g) {
    if (g.n_vertices < 2) throw DataError("need at least 2 classes for a cut");
    std::vector<int> all(static_cast<std::size_t>(g.n_vertices));
    for (int i = 0; i < g.n_vertices; ++i) all[static_cast<std::size_t>(i)] = i;
    return detail::stoer_wagner_subset(g.weights, all);
}

// One binary split per internal node; child index -1 marks a singleton side.
struct TreeNode {
    std::vector<int> left_classes;
    std::vector<int> right_classes;
    double cut_weight = 0.0;
    int left_child = -1;
    int right_child = -1;
};

// Preorder-indexed binary hierarchy over class ids, root at node 0. A tree
// over K classes always has exactly K-1 internal nodes.
struct ClassificationTree {
    int n_classes = 0;
    std::vector<TreeNode> nodes;
};

namespace detail {

inline int build_hierarchy_node(const Matrix& weights, const std::vector<int>& vertices,
                                std::vector<TreeNode>& nodes) {
    const GraphCut cut = stoer_wagner_subset(weights, vertices);
    const int idx = static_cast<int>(nodes.size());
    nodes.push_back(TreeNode{cut.side0, cut.side1, cut.weight, -1, -1});
    if (cut.side0.size() > 1) {
        nodes[static_cast<std::size_t>(idx)].left_child =
            build_hierarchy_node(weights, cut.side0, nodes);
    }
    if (cut.side1.size() > 1) {
        nodes[static_cast<std::size_t>(idx)].right_child =
            build_hierarchy_node(weights, cut.side1, nodes);
    }
    return idx;
}

}  // namespace detail

// Recursive min-cut partitioning of the class graph.
inline ClassificationTree build_hierarchy(const ClassGraph& g) {
    if (g.n_vertices < 2) throw DataError("need at least 2 classes for a hierarchy");
    ClassificationTree tree;
    tree.n_classes = g.n_vertices;
    std::vector<int> all(static_cast<std::size_t>(g.n_vertices));
    for (int i = 0; i < g.n_vertices; ++i) all[static_cast<std::size_t>(i)] = i;
    detail::build_hierarchy_node(g.weights, all, tree.nodes);
    if (tree.nodes.size() != static_cast<std::size_t>(g.n_vertices - 1)) {
        throw InternalError("hierarchy node count mismatch");
    }
    return tree;
}

namespace detail {

inline nlohmann::json tree_node_to_json(const ClassificationTree& tree, int idx,
                                        std::span<const std::string> class_labels) {
    const TreeNode& node = tree.nodes[static_cast<std::size_t>(idx)];
    auto side = [&](const std::vector<int>& classes) {
        nlohmann::json arr = nlohmann::json::array();
        for (int c : classes) arr.push_back(class_labels[static_cast<std::size_t>(c)]);
        return arr;
    };
    nlohmann::json j{{"left", side(node.left_classes)},
                     {"right", side(node.right_classes)},
                     {"weight", node.cut_weight},
                     {"children", nlohmann::json::array()}};
    if (node.left_child >= 0) j["children"].push_back(tree_node_to_json(tree, node.left_child, class_labels));
    if (node.right_child >= 0) j["children"].push_back(tree_node_to_json(tree, node.right_child, class_labels));
    return j;
}

}  // namespace detail

inline nlohmann::json tree_to_json(const ClassificationTree& tree,
                                   std::span<const std::string> class_labels) {
    if (tree.nodes.empty()) throw InternalError("empty tree");
    if (class_labels.size() != static_cast<std::size_t>(tree.n_classes)) {
        throw InternalError("label table size mismatch");
    }
    return detail::tree_node_to_json(tree, 0, class_labels);
}

namespace detail {

inline std::vector<int> parse_side(const nlohmann::json& arr,
                                   std::span<const std::string> class_labels) {
    if (!arr.is_array() || arr.empty()) throw DataError("malformed tree: bad side list");
    std::vector<int> out;
    for (const auto& item : arr) {
        if (!item.is_string()) throw DataError("malformed tree: class labels must be strings");
        const std::string name = item.get<std::string>();
        const auto it = std::find(class_labels.begin(), class_labels.end(), name);
        if (it == class_labels.end()) throw DataError("malformed tree: unknown class '" + name + "'");
        out.push_back(static_cast<int>(it - class_labels.begin()));
    }
    std::sort(out.begin(), out.end());
    if (std::adjacent_find(out.begin(), out.end()) != out.end()) {
        throw DataError("malformed tree: duplicate class in side list");
    }
    return out;
}

inline int tree_node_from_json(const nlohmann::json& j, std::span<const std::string> class_labels,
                               std::vector<TreeNode>& nodes) {
    if (!j.is_object() || !j.contains("left") || !j.contains("right") || !j.contains("weight")) {
        throw DataError("malformed tree: node must have left, right and weight");
    }
    TreeNode node;
    node.left_classes = parse_side(j["left"], class_labels);
    node.right_classes = parse_side(j["right"], class_labels);
    if (!j["weight"].is_number()) throw DataError("malformed tree: weight must be a number");
    node.cut_weight = j["weight"].get<double>();
    std::vector<int> merged = node.left_classes;
    merged.insert(merged.end(), node.right_classes.begin(), node.right_classes.end());
    std::sort(merged.begin(), merged.end());
    if (std::adjacent_find(merged.begin(), merged.end()) != merged.end()) {
        throw DataError("malformed tree: sides overlap");
    }
    const int idx = static_cast<int>(nodes.size());
    nodes.push_back(node);

    std::vector<const nlohmann::json*> children;
    if (j.contains("children")) {
        if (!j["children"].is_array()) throw DataError("malformed tree: children must be an array");
        for (const auto& c : j["children"]) children.push_back(&c);
    }
    auto match_child = [&](const std::vector<int>& side) -> const nlohmann::json* {
        for (auto it = children.begin(); it != children.end(); ++it) {
            std::vector<int> covered = parse_side((**it)["left"], class_labels);
            const auto right = parse_side((**it)["right"], class_labels);
            covered.insert(covered.end(), right.begin(), right.end());
            std::sort(covered.begin(), covered.end());
            if (covered == side) {
                const nlohmann::json* found = *it;
                children.erase(it);
                return found;
            }
        }
        return nullptr;
    };
    if (node.left_classes.size() > 1) {
        const auto* child = match_child(node.left_classes);
        if (!child) throw DataError("malformed tree: missing child for a multi-class side");
        nodes[static_cast<std::size_t>(idx)].left_child =
            tree_node_from_json(*child, class_labels, nodes);
    }
    if (node.right_classes.size() > 1) {
        const auto* child = match_child(node.right_classes);
        if (!child) throw DataError("malformed tree: missing child for a multi-class side");
        nodes[static_cast<std::size_t>(idx)].right_child =
            tree_node_from_json(*child, class_labels, nodes);
    }
    if (!children.empty()) throw DataError("malformed tree: unmatched child node");
    return idx;
}

}  // namespace detail

inline ClassificationTree tree_from_json(const nlohmann::json& j,
                                         std::span<const std::string> class_labels) {
    ClassificationTree tree;
    tree.n_classes = static_cast<int>(class_labels.size());
    detail::tree_node_from_json(j, class_labels, tree.nodes);
    const auto& root = tree.nodes[0];
    std::vector<int> covered = root.left_classes;
    covered.insert(covered.end(), root.right_classes.begin(), root.right_classes.end());
    std::sort(covered.begin(), covered.end());
    std::vector<int> all(class_labels.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    if (covered != all) throw DataError("malformed tree: root does not cover every class");
    if (tree.nodes.size() != class_labels.size() - 1) {
        throw DataError("malformed tree: wrong node count");
    }
    return tree;
}

namespace detail {

inline void render_tree_node(const ClassificationTree& tree, int idx,
                             std::span<const std::string> class_labels, int depth,
                             std::string& out) {
    const TreeNode& node = tree.nodes[static_cast<std::size_t>(idx)];
    const std::string indent(static_cast<std::size_t>(depth) * 2, ' ');
    auto side_text = [&](const std::vector<int>& classes) {
        std::string s = "{";
        for (std::size_t i = 0; i < classes.size(); ++i) {
            if (i) s += ' ';
            s += class_labels[static_cast<std::size_t>(classes[i])];
        }
        return s + "}";
    };
    out += indent + "split " + side_text(node.left_classes) + " | " +
           side_text(node.right_classes) + "  weight=" + format_double(node.cut_weight) + "\n";
    if (node.left_child >= 0) {
        render_tree_node(tree, node.left_child, class_labels, depth + 1, out);
    } else {
        out += indent + "  leaf " + class_labels[static_cast<std::size_t>(node.left_classes[0])] + "\n";
    }
    if (node.right_child >= 0) {
        render_tree_node(tree, node.right_child, class_labels, depth + 1, out);
    } else {
        out += indent + "  leaf " + class_labels[static_cast<std::size_t>(node.right_classes[0])] + "\n";
    }
}

}  // namespace detail

inline std::string render_tree_text(const ClassificationTree& tree,
                                    std::span<const std::string> class_labels) {
    if (tree.nodes.empty()) throw InternalError("empty tree");
    std::string out;
    detail::render_tree_node(tree, 0, class_labels, 0, out);
    return out;
}

}  // namespace smartsvm
