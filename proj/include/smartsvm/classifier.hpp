#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "smartsvm/ber.hpp"
#include "smartsvm/class_tree.hpp"
#include "smartsvm/core.hpp"
#include "smartsvm/dataset.hpp"
#include "smartsvm/linear_svm.hpp"
#include "smartsvm/parallel.hpp"
#include "smartsvm/rng.hpp"

namespace smartsvm {

struct Standardization {
    std::vector<double> mean;
    std::vector<double> stddev;  // constant columns keep stddev 1
};

inline Standardization fit_standardization(const Matrix& x) {
    if (x.rows < 1) throw DataError("cannot standardize an empty matrix");
    Standardization s;
    s.mean.assign(x.cols, 0.0);
    s.stddev.assign(x.cols, 0.0);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t j = 0; j < x.cols; ++j) s.mean[j] += x(i, j);
    }
    for (double& m : s.mean) m /= static_cast<double>(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t j = 0; j < x.cols; ++j) {
            const double d = x(i, j) - s.mean[j];
            s.stddev[j] += d * d;
        }
    }
    for (double& v : s.stddev) {
        v = std::sqrt(v / static_cast<double>(x.rows));
        if (v == 0.0) v = 1.0;
    }
    return s;
}

inline void apply_standardization(Matrix& x, const Standardization& s) {
    if (x.cols != s.mean.size()) throw DataError("feature dimension does not match model");
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t j = 0; j < x.cols; ++j) {
            x(i, j) = (x(i, j) - s.mean[j]) / s.stddev[j];
        }
    }
}

inline std::vector<double> desk_c_grid() {
    std::vector<double> g;
    for (int e = -6; e <= 6; e += 2) g.push_back(std::ldexp(1.0, e));
    return g;
}

inline std::vector<double> paper_c_grid() {
    std::vector<double> g;
    for (int e = -18; e <= 18; e += 2) g.push_back(std::ldexp(1.0, e));
    return g;
}

struct TrainOptions {
    int n_trees = 3;
    std::vector<double> c_grid = desk_c_grid();
    int cv_folds = 10;
    std::uint64_t seed = 42;
    bool standardize = false;
    unsigned workers = 1;
};

// Trained multiclass model. For the hierarchical strategy node_models aligns
// with the tree's preorder nodes; for one-vs-one it aligns with `pairs`; for
// one-vs-rest with class ids.
struct SmartSvmModel {
    std::string strategy;
    std::vector<std::string> class_labels;
    ClassificationTree tree;
    std::vector<std::pair<int, int>> pairs;
    std::vector<LinearModel> node_models;
    std::optional<Standardization> standardize;
};

namespace detail {

inline void check_trainable(const LabeledDataset& ds, const TrainOptions& opt) {
    validate_dataset(ds);
    if (opt.n_trees < 1) throw DataError("tree count must be at least 1");
    if (opt.cv_folds < 2) throw DataError("fold count must be at least 2");
    if (opt.c_grid.empty()) throw DataError("empty C grid");
    const auto counts = ds.class_counts();
    const std::size_t need = static_cast<std::size_t>(std::max(2, opt.cv_folds));
    std::string tiny;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] < need) {
            if (!tiny.empty()) tiny += ", ";
            tiny += "'" + ds.class_labels[c] + "'";
        }
    }
    if (!tiny.empty()) {
        throw DataError("classes with fewer than " + std::to_string(need) +
                        " samples: " + tiny);
    }
}

struct BinaryTask {
    std::vector<std::size_t> rows;
    std::vector<int> signs;
};

// Collects the rows for one binary subproblem: sign +1 for positive_classes.
inline BinaryTask binary_task(const LabeledDataset& ds, std::span<const int> positive_classes,
                              std::span<const int> negative_classes) {
    std::vector<char> role(static_cast<std::size_t>(ds.n_classes()), 0);
    for (int c : positive_classes) role[static_cast<std::size_t>(c)] = 1;
    for (int c : negative_classes) role[static_cast<std::size_t>(c)] = 2;
    BinaryTask task;
    for (std::size_t i = 0; i < ds.n_samples(); ++i) {
        const char r = role[static_cast<std::size_t>(ds.labels[i])];
        if (r == 0) continue;
        task.rows.push_back(i);
        task.signs.push_back(r == 1 ? 1 : -1);
    }
    return task;
}

// Tunes C by stratified cross-validation on the task rows, then fits the
// final model on all of them.
inline LinearModel fit_task(const LabeledDataset& ds, const BinaryTask& task,
                            const TrainOptions& opt, std::uint64_t task_seed) {
    const Matrix x = gather_rows(ds.features, task.rows);
    const LabeledDataset sub = dataset_subset(ds, task.rows);
    const FoldAssignment folds = kfold(sub, opt.cv_folds, derive_seed(task_seed, 0));
    const CSelection sel = select_c(x, task.signs, opt.c_grid, folds, derive_seed(task_seed, 1));
    return train_binary(x, task.signs, sel.best_c, derive_seed(task_seed, 2));
}

}  // namespace detail

// Full pipeline: pairwise BER matrix, min-cut hierarchy, one tuned linear
// separator per internal node.
inline SmartSvmModel train(const LabeledDataset& ds, const TrainOptions& opt = {}) {
    detail::check_trainable(ds, opt);
    LabeledDataset work = ds;
    SmartSvmModel model;
    model.strategy = "smartsvm";
    model.class_labels = ds.class_labels;
    if (opt.standardize) {
        model.standardize = fit_standardization(work.features);
        apply_standardization(work.features, *model.standardize);
    }
    const PairwiseBerMatrix ber = pairwise_ber_matrix(work, opt.n_trees, opt.seed, opt.workers);
    model.tree = build_hierarchy(build_class_graph(ber));
    model.node_models.resize(model.tree.nodes.size());
    parallel_for(model.tree.nodes.size(), opt.workers, [&](std::size_t node) {
        const TreeNode& tn = model.tree.nodes[node];
        const auto task = detail::binary_task(work, tn.left_classes, tn.right_classes);
        model.node_models[node] = detail::fit_task(work, task, opt, derive_seed(opt.seed, 100 + node));
    });
    return model;
}

// One-vs-one baseline: a tuned separator per class pair (a, b), a < b, with
// +1 mapped to the smaller class id.
inline SmartSvmModel train_ovo(const LabeledDataset& ds, const TrainOptions& opt = {}) {
    detail::check_trainable(ds, opt);
    LabeledDataset work = ds;
    SmartSvmModel model;
    model.strategy = "ovo";
    model.class_labels = ds.class_labels;
    if (opt.standardize) {
        model.standardize = fit_standardization(work.features);
        apply_standardization(work.features, *model.standardize);
    }
    for (int a = 0; a < ds.n_classes(); ++a) {
        for (int b = a + 1; b < ds.n_classes(); ++b) model.pairs.emplace_back(a, b);
    }
    model.node_models.resize(model.pairs.size());
    parallel_for(model.pairs.size(), opt.workers, [&](std::size_t p) {
        const auto [a, b] = model.pairs[p];
        const int pos[] = {a};
        const int neg[] = {b};
        const auto task = detail::binary_task(work, pos, neg);
        model.node_models[p] = detail::fit_task(work, task, opt, derive_seed(opt.seed, 100 + p));
    });
    return model;
}

// One-vs-rest baseline: a tuned separator per class against everything else.
inline SmartSvmModel train_ovr(const LabeledDataset& ds, const TrainOptions& opt = {}) {
    detail::check_trainable(ds, opt);
    LabeledDataset work = ds;
    SmartSvmModel model;
    model.strategy = "ovr";
    model.class_labels = ds.class_labels;
    if (opt.standardize) {
        model.standardize = fit_standardization(work.features);
        apply_standardization(work.features, *model.standardize);
    }
    const int k = ds.n_classes();
    model.node_models.resize(static_cast<std::size_t>(k));
    parallel_for(static_cast<std::size_t>(k), opt.workers, [&](std::size_t c) {
        std::vector<int> pos = {static_cast<int>(c)};
        std::vector<int> neg;
        for (int l = 0; l < k; ++l) {
            if (l != static_cast<int>(c)) neg.push_back(l);
        }
        const auto task = detail::binary_task(work, pos, neg);
        model.node_models[c] = detail::fit_task(work, task, opt, derive_seed(opt.seed, 100 + c));
    });
    return model;
}

namespace detail {

inline void check_predictable(const SmartSvmModel& model, const Matrix& x) {
    if (model.node_models.empty()) throw DataError("model has no trained separators");
    if (x.cols + 1 != model.node_models[0].weights.size()) {
        throw DataError("feature dimension does not match model");
    }
    for (double v : x.data) {
        if (!std::isfinite(v)) throw DataError("non-finite feature value");
    }
}

inline int route_tree(const SmartSvmModel& model, std::span<const double> row) {
    int node = 0;
    for (;;) {
        const TreeNode& tn = model.tree.nodes[static_cast<std::size_t>(node)];
        const double m = predict_margin(model.node_models[static_cast<std::size_t>(node)], row);
        if (m >= 0.0) {
            if (tn.left_child < 0) return tn.left_classes[0];
            node = tn.left_child;
        } else {
            if (tn.right_child < 0) return tn.right_classes[0];
            node = tn.right_child;
        }
    }
}

}  // namespace detail

// Routes each sample down the tree; the non-negative margin side is the one
// holding the smallest class id.
inline std::vector<int> predict_ids(const SmartSvmModel& model, const Matrix& features) {
    detail::check_predictable(model, features);
    Matrix x = features;
    if (model.standardize) apply_standardization(x, *model.standardize);
    const std::size_t k = model.class_labels.size();
    std::vector<int> out(x.rows);
    if (model.strategy == "smartsvm") {
        if (model.tree.nodes.size() != model.node_models.size()) {
            throw DataError("model tree does not match separator count");
        }
        for (std::size_t i = 0; i < x.rows; ++i) out[i] = detail::route_tree(model, x.row(i));
    } else if (model.strategy == "ovo") {
        if (model.pairs.size() != model.node_models.size()) {
            throw DataError("model pairs do not match separator count");
        }
        for (std::size_t i = 0; i < x.rows; ++i) {
            std::vector<int> votes(k, 0);
            for (std::size_t p = 0; p < model.pairs.size(); ++p) {
                const double m = predict_margin(model.node_models[p], x.row(i));
                const auto [a, b] = model.pairs[p];
                votes[static_cast<std::size_t>(m >= 0.0 ? a : b)]++;
            }
            int best = 0;
            for (std::size_t c = 1; c < k; ++c) {
                if (votes[c] > votes[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
            }
            out[i] = best;
        }
    } else if (model.strategy == "ovr") {
        if (model.node_models.size() != k) {
            throw DataError("model separators do not match class count");
        }
        for (std::size_t i = 0; i < x.rows; ++i) {
            int best = 0;
            double best_margin = predict_margin(model.node_models[0], x.row(i));
            for (std::size_t c = 1; c < k; ++c) {
                const double m = predict_margin(model.node_models[c], x.row(i));
                if (m > best_margin) {
                    best = static_cast<int>(c);
                    best_margin = m;
                }
            }
            out[i] = best;
        }
    } else {
        throw DataError("unknown strategy '" + model.strategy + "'");
    }
    return out;
}

inline std::vector<std::string> predict(const SmartSvmModel& model, const Matrix& features) {
    const auto ids = predict_ids(model, features);
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (int id : ids) out.push_back(model.class_labels[static_cast<std::size_t>(id)]);
    return out;
}

// Fraction of samples where exactly one of truth and prediction equals k.
inline double confusion_rate(std::span<const int> truth, std::span<const int> predicted, int k) {
    if (truth.size() != predicted.size()) throw DataError("label vectors differ in length");
    if (truth.empty()) throw DataError("need at least 1 sample");
    std::size_t bad = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        bad += ((truth[i] == k) != (predicted[i] == k));
    }
    return static_cast<double>(bad) / static_cast<double>(truth.size());
}

// Hubert-Arabie adjusted Rand index. A zero denominator only occurs when
// both partitions are trivial and identical, which scores 1.
inline double adjusted_rand_index(std::span<const int> truth, std::span<const int> predicted) {
    if (truth.size() != predicted.size()) throw DataError("label vectors differ in length");
    const std::size_t n = truth.size();
    if (n < 2) throw DataError("need at least 2 samples");
    auto densify = [](std::span<const int> v) {
        std::unordered_map<int, int> ids;
        std::vector<int> out(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            out[i] = ids.try_emplace(v[i], static_cast<int>(ids.size())).first->second;
        }
        return std::pair{out, ids.size()};
    };
    const auto [a, ka] = densify(truth);
    const auto [b, kb] = densify(predicted);
    std::vector<double> table(ka * kb, 0.0);
    std::vector<double> row_sums(ka, 0.0), col_sums(kb, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        table[static_cast<std::size_t>(a[i]) * kb + static_cast<std::size_t>(b[i])] += 1.0;
        row_sums[static_cast<std::size_t>(a[i])] += 1.0;
        col_sums[static_cast<std::size_t>(b[i])] += 1.0;
    }
    auto comb2 = [](double v) { return v * (v - 1.0) / 2.0; };
    double sum_cells = 0.0, sum_rows = 0.0, sum_cols = 0.0;
    for (double v : table) sum_cells += comb2(v);
    for (double v : row_sums) sum_rows += comb2(v);
    for (double v : col_sums) sum_cols += comb2(v);
    const double expected = sum_rows * sum_cols / comb2(static_cast<double>(n));
    const double max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index == expected) return 1.0;
    return (sum_cells - expected) / (max_index - expected);
}

enum class FeatureObjective { mean_ber, worst_ber };

// Greedy forward selection: at each step add the feature whose subset gives
// the lowest aggregate normalized pairwise BER. Ties pick the lowest index.
inline std::vector<std::size_t> forward_feature_select(const LabeledDataset& ds,
                                                       std::size_t max_features, int n_trees,
                                                       std::uint64_t seed,
                                                       FeatureObjective objective =
                                                           FeatureObjective::mean_ber,
                                                       unsigned workers = 1) {
    validate_dataset(ds);
    if (max_features < 1 || max_features > ds.n_features()) {
        throw DataError("feature budget out of range");
    }
    std::vector<std::size_t> selected;
    std::vector<std::size_t> remaining(ds.n_features());
    std::iota(remaining.begin(), remaining.end(), std::size_t{0});
    for (std::size_t step = 0; step < max_features; ++step) {
        std::vector<double> scores(remaining.size());
        parallel_for(remaining.size(), workers, [&](std::size_t r) {
            std::vector<std::size_t> cols = selected;
            cols.push_back(remaining[r]);
            LabeledDataset sub;
            sub.features = gather_columns(ds.features, cols);
            sub.labels = ds.labels;
            sub.class_labels = ds.class_labels;
            const auto ber = pairwise_ber_matrix(
                sub, n_trees, derive_seed(seed, step * ds.n_features() + remaining[r]));
            double mean = 0.0, worst = 0.0;
            std::size_t count = 0;
            for (int k = 0; k < ber.n_classes; ++k) {
                for (int l = k + 1; l < ber.n_classes; ++l) {
                    const double v = ber.at(k, l).p_hat_normalized;
                    mean += v;
                    worst = std::max(worst, v);
                    ++count;
                }
            }
            scores[r] = objective == FeatureObjective::mean_ber
                            ? mean / static_cast<double>(count)
                            : worst;
        });
        std::size_t pick = 0;
        for (std::size_t r = 1; r < remaining.size(); ++r) {
            if (scores[r] < scores[pick]) pick = r;
        }
        selected.push_back(remaining[pick]);
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    return selected;
}

inline constexpr const char* model_format_version = "smartsvm-model/1";

namespace detail {

inline nlohmann::json linear_model_to_json(const LinearModel& m) {
    return nlohmann::json{{"weights", m.weights}, {"c", m.c_value}, {"objective", m.train_objective}};
}

inline LinearModel linear_model_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("weights") || !j.contains("c") || !j.contains("objective")) {
        throw DataError("malformed model: separator must have weights, c and objective");
    }
    LinearModel m;
    m.weights = j["weights"].get<std::vector<double>>();
    m.c_value = j["c"].get<double>();
    m.train_objective = j["objective"].get<double>();
    if (m.weights.size() < 2) throw DataError("malformed model: separator needs 2 weights");
    return m;
}

}  // namespace detail

inline nlohmann::json model_to_json(const SmartSvmModel& model) {
    nlohmann::json j{{"version", model_format_version},
                     {"strategy", model.strategy},
                     {"classes", model.class_labels}};
    if (model.standardize) {
        j["standardize"] = {{"mean", model.standardize->mean},
                            {"std", model.standardize->stddev}};
    } else {
        j["standardize"] = nullptr;
    }
    if (model.strategy == "smartsvm") {
        j["tree"] = tree_to_json(model.tree, model.class_labels);
    } else if (model.strategy == "ovo") {
        nlohmann::json pairs = nlohmann::json::array();
        for (const auto& [a, b] : model.pairs) pairs.push_back({a, b});
        j["pairs"] = pairs;
    }
    nlohmann::json models = nlohmann::json::array();
    for (const auto& m : model.node_models) models.push_back(detail::linear_model_to_json(m));
    j["node_models"] = models;
    return j;
}

inline SmartSvmModel model_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("version") || !j["version"].is_string()) {
        throw DataError("malformed model: missing version");
    }
    if (j["version"].get<std::string>() != model_format_version) {
        throw DataError("unsupported model version '" + j["version"].get<std::string>() + "'");
    }
    SmartSvmModel model;
    if (!j.contains("strategy") || !j.contains("classes") || !j.contains("node_models")) {
        throw DataError("malformed model: missing strategy, classes or node_models");
    }
    model.strategy = j["strategy"].get<std::string>();
    model.class_labels = j["classes"].get<std::vector<std::string>>();
    if (model.class_labels.size() < 2) throw DataError("malformed model: fewer than 2 classes");
    for (const auto& m : j["node_models"]) {
        model.node_models.push_back(detail::linear_model_from_json(m));
    }
    const std::size_t k = model.class_labels.size();
    if (model.strategy == "smartsvm") {
        if (!j.contains("tree")) throw DataError("malformed model: missing tree");
        model.tree = tree_from_json(j["tree"], model.class_labels);
        if (model.node_models.size() != model.tree.nodes.size()) {
            throw DataError("malformed model: separator count does not match tree");
        }
    } else if (model.strategy == "ovo") {
        if (!j.contains("pairs")) throw DataError("malformed model: missing pairs");
        for (const auto& p : j["pairs"]) {
            if (!p.is_array() || p.size() != 2) throw DataError("malformed model: bad pair");
            const int a = p[0].get<int>();
            const int b = p[1].get<int>();
            if (a < 0 || b < 0 || a >= static_cast<int>(k) || b >= static_cast<int>(k) || a >= b) {
                throw DataError("malformed model: bad pair");
            }
            model.pairs.emplace_back(a, b);
        }
        if (model.node_models.size() != model.pairs.size()) {
            throw DataError("malformed model: separator count does not match pairs");
        }
    } else if (model.strategy == "ovr") {
        if (model.node_models.size() != k) {
            throw DataError("malformed model: separator count does not match classes");
        }
    } else {
        throw DataError("unknown strategy '" + model.strategy + "'");
    }
    if (!j.contains("standardize")) throw DataError("malformed model: missing standardize");
    if (!j["standardize"].is_null()) {
        Standardization s;
        s.mean = j["standardize"]["mean"].get<std::vector<double>>();
        s.stddev = j["standardize"]["std"].get<std::vector<double>>();
        if (s.mean.size() != s.stddev.size() ||
            s.mean.size() + 1 != model.node_models[0].weights.size()) {
            throw DataError("malformed model: standardization does not match weights");
        }
        for (double v : s.stddev) {
            if (!(v > 0.0)) throw DataError("malformed model: non-positive stddev");
        }
        model.standardize = std::move(s);
    }
    const std::size_t d = model.node_models[0].weights.size();
    for (const auto& m : model.node_models) {
        if (m.weights.size() != d) {
            throw DataError("malformed model: separators disagree on dimension");
        }
    }
    return model;
}

}  // namespace smartsvm
