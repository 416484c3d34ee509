#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "smartsvm/ber.hpp"
#include "smartsvm/class_tree.hpp"
#include "smartsvm/classifier.hpp"
#include "smartsvm/core.hpp"
#include "smartsvm/dataset.hpp"
#include "smartsvm/oracle.hpp"
#include "smartsvm/parallel.hpp"

namespace smartsvm {

// Wrong invocation: unknown command, missing flags, bad flag values.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string command;
    std::string input_path;
    std::string output_path;
    std::string label_column = "label";
    std::string model_path;
    std::string predictions_path;
    std::string text_output_path;
    std::string heatmap_path;
    std::string json_output_path;
    int n_trees = 3;
    int cv_folds = 10;
    std::uint64_t seed = 42;
    std::string c_grid = "desk";
    std::string strategy = "smartsvm";
    bool standardize = false;
    unsigned workers = 0;  // 0 means all available cores
    std::size_t synth_n = 1000;
    std::size_t synth_d = 2;
    double synth_delta = 1.0;
    double synth_p1 = 0.5;
    double synth_sigma = 1.0;
    std::vector<std::vector<double>> synth_means;
    std::vector<double> synth_priors;
};

namespace detail {

inline unsigned resolve_workers(unsigned w) { return w == 0 ? default_workers() : w; }

// All-digit values select a 0-based column index, anything else a header name.
inline LabelColumn parse_label_column(const std::string& text) {
    if (text.empty()) throw UsageError("label column must not be empty");
    const bool digits = std::all_of(text.begin(), text.end(), [](unsigned char c) {
        return std::isdigit(c) != 0;
    });
    if (digits) return static_cast<std::size_t>(std::stoull(text));
    return text;
}

inline void require(bool ok, const std::string& message) {
    if (!ok) throw UsageError(message);
}

// Artifacts are staged in memory and written together; a failure removes
// everything written so far, so no partial outputs survive.
inline void write_outputs(const std::vector<std::pair<std::string, std::string>>& outputs) {
    std::vector<std::string> written;
    try {
        for (const auto& [path, content] : outputs) {
            std::ofstream f(path, std::ios::binary);
            if (!f || !(f << content) || !f.flush()) {
                throw DataError("cannot write file: " + path);
            }
            written.push_back(path);
        }
    } catch (...) {
        for (const auto& p : written) std::remove(p.c_str());
        throw;
    }
}

inline nlohmann::json parse_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    try {
        nlohmann::json j;
        in >> j;
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed JSON in " + path + ": " + std::string(e.what()));
    }
}

inline std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

inline std::vector<double> grid_from_name(const std::string& name) {
    if (name == "desk") return desk_c_grid();
    if (name == "paper") return paper_c_grid();
    throw UsageError("unknown C grid '" + name + "' (expected desk or paper)");
}

inline void run_ber(const RunConfig& config) {
    require(!config.input_path.empty(), "ber requires --input");
    require(!config.output_path.empty(), "ber requires --output");
    const auto ds = load_csv(config.input_path, parse_label_column(config.label_column));
    const auto matrix = pairwise_ber_matrix(ds, config.n_trees, config.seed,
                                            resolve_workers(config.workers));
    nlohmann::json pairwise = nlohmann::json::array();
    for (int a = 0; a < matrix.n_classes; ++a) {
        nlohmann::json row = nlohmann::json::array();
        for (int b = 0; b < matrix.n_classes; ++b) {
            if (a == b) {
                row.push_back(nullptr);
            } else {
                row.push_back(matrix.at(a, b));
            }
        }
        pairwise.push_back(row);
    }
    const nlohmann::json artifact{{"classes", ds.class_labels},
                                  {"n_trees", config.n_trees},
                                  {"pairwise", pairwise}};
    std::vector<std::pair<std::string, std::string>> outputs;
    outputs.emplace_back(config.output_path, dump_json(artifact));
    if (!config.heatmap_path.empty()) {
        std::string grid = "class";
        for (const auto& l : ds.class_labels) grid += "," + l;
        grid += "\n";
        for (int a = 0; a < matrix.n_classes; ++a) {
            grid += ds.class_labels[static_cast<std::size_t>(a)];
            for (int b = 0; b < matrix.n_classes; ++b) {
                grid += ",";
                grid += (a == b) ? "0" : format_double(matrix.at(a, b).p_hat_normalized);
            }
            grid += "\n";
        }
        outputs.emplace_back(config.heatmap_path, grid);
    }
    write_outputs(outputs);
    std::cout << "wrote pairwise estimates for " << matrix.n_classes << " classes to "
              << config.output_path << "\n";
}

inline void run_ovr(const RunConfig& config) {
    require(!config.input_path.empty(), "ovr requires --input");
    require(!config.output_path.empty(), "ovr requires --output");
    const auto ds = load_csv(config.input_path, parse_label_column(config.label_column));
    const auto estimates = ovr_ber_estimates(ds, config.n_trees, config.seed);
    const nlohmann::json artifact{{"classes", ds.class_labels},
                                  {"n_trees", config.n_trees},
                                  {"ovr", estimates}};
    write_outputs({{config.output_path, dump_json(artifact)}});
    std::cout << "wrote one-vs-rest estimates for " << ds.n_classes() << " classes to "
              << config.output_path << "\n";
}

inline void run_tree(const RunConfig& config) {
    require(!config.input_path.empty(), "tree requires --input");
    require(!config.output_path.empty(), "tree requires --output");
    const auto ds = load_csv(config.input_path, parse_label_column(config.label_column));
    const auto matrix = pairwise_ber_matrix(ds, config.n_trees, config.seed,
                                            resolve_workers(config.workers));
    const auto tree = build_hierarchy(build_class_graph(matrix));
    const std::string text = render_tree_text(tree, ds.class_labels);
    std::vector<std::pair<std::string, std::string>> outputs;
    outputs.emplace_back(config.output_path, dump_json(tree_to_json(tree, ds.class_labels)));
    if (!config.text_output_path.empty()) outputs.emplace_back(config.text_output_path, text);
    write_outputs(outputs);
    std::cout << text;
}

inline void run_train(const RunConfig& config) {
    require(!config.input_path.empty(), "train requires --input");
    require(!config.output_path.empty(), "train requires --output");
    TrainOptions opt;
    opt.n_trees = config.n_trees;
    opt.cv_folds = config.cv_folds;
    opt.seed = config.seed;
    opt.standardize = config.standardize;
    opt.workers = resolve_workers(config.workers);
    opt.c_grid = grid_from_name(config.c_grid);
    const auto ds = load_csv(config.input_path, parse_label_column(config.label_column));
    SmartSvmModel model;
    if (config.strategy == "smartsvm") {
        model = train(ds, opt);
    } else if (config.strategy == "ovo") {
        model = train_ovo(ds, opt);
    } else if (config.strategy == "ovr") {
        model = train_ovr(ds, opt);
    } else {
        throw UsageError("unknown strategy '" + config.strategy +
                         "' (expected smartsvm, ovo or ovr)");
    }
    write_outputs({{config.output_path, dump_json(model_to_json(model))}});
    std::cout << "trained " << model.strategy << " model with " << model.node_models.size()
              << " separators, wrote " << config.output_path << "\n";
}

inline void run_predict(const RunConfig& config) {
    require(!config.model_path.empty(), "predict requires --model");
    require(!config.input_path.empty(), "predict requires --input");
    require(!config.output_path.empty(), "predict requires --output");
    const auto model = model_from_json(parse_json_file(config.model_path));
    const auto features = load_features_csv(config.input_path,
                                            parse_label_column(config.label_column));
    const auto labels = predict(model, features);
    std::string csv = "label\n";
    for (const auto& l : labels) csv += l + "\n";
    write_outputs({{config.output_path, csv}});
    std::cout << "wrote " << labels.size() << " predictions to " << config.output_path << "\n";
}

inline std::vector<std::string> read_prediction_labels(const std::string& path) {
    const auto lines = read_lines(path);
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto text = trim(lines[i]);
        if (i == 0 && text == "label") continue;
        if (text.empty()) {
            throw DataError("empty row at line " + std::to_string(i + 1) + " of " + path);
        }
        labels.emplace_back(text);
    }
    if (labels.empty()) throw DataError("no predictions in " + path);
    return labels;
}

inline void run_eval(const RunConfig& config) {
    require(!config.input_path.empty(), "eval requires --input");
    require(!config.predictions_path.empty(), "eval requires --predictions");
    const auto truth = load_csv(config.input_path, parse_label_column(config.label_column));
    const auto predicted = read_prediction_labels(config.predictions_path);
    if (predicted.size() != truth.n_samples()) {
        throw DataError("prediction count does not match sample count");
    }
    std::vector<std::string> all_labels = truth.class_labels;
    std::vector<int> y_hat;
    y_hat.reserve(predicted.size());
    for (const auto& l : predicted) {
        auto it = std::find(all_labels.begin(), all_labels.end(), l);
        if (it == all_labels.end()) {
            all_labels.push_back(l);
            it = all_labels.end() - 1;
        }
        y_hat.push_back(static_cast<int>(it - all_labels.begin()));
    }
    const double ari = adjusted_rand_index(truth.labels, y_hat);
    nlohmann::json rates;
    for (std::size_t c = 0; c < all_labels.size(); ++c) {
        rates[all_labels[c]] = confusion_rate(truth.labels, y_hat, static_cast<int>(c));
    }
    const nlohmann::json artifact{{"n", truth.n_samples()},
                                  {"ari", ari},
                                  {"confusion_rates", rates}};
    if (!config.output_path.empty()) {
        write_outputs({{config.output_path, dump_json(artifact)}});
    }
    std::cout << "ari " << format_double(ari) << " over " << truth.n_samples() << " samples\n";
    for (std::size_t c = 0; c < all_labels.size(); ++c) {
        std::cout << "confusion " << all_labels[c] << " "
                  << format_double(confusion_rate(truth.labels, y_hat, static_cast<int>(c)))
                  << "\n";
    }
}

inline void run_synth(const RunConfig& config) {
    require(!config.output_path.empty(), "synth requires --output");
    std::vector<GaussianSpec> specs;
    if (!config.synth_means.empty()) {
        require(config.synth_means.size() >= 2, "synth needs at least 2 components");
        require(config.synth_priors.size() == config.synth_means.size(),
                "one --prior per --mean is required");
        for (std::size_t c = 0; c < config.synth_means.size(); ++c) {
            GaussianSpec s;
            s.mean = config.synth_means[c];
            require(s.mean.size() == config.synth_d,
                    "every --mean must have --d coordinates");
            s.sigma = config.synth_sigma;
            s.prior = config.synth_priors[c];
            specs.push_back(std::move(s));
        }
    } else {
        GaussianSpec a, b;
        a.mean.assign(config.synth_d, 0.0);
        b.mean.assign(config.synth_d, 0.0);
        b.mean[0] = config.synth_delta;
        a.sigma = b.sigma = config.synth_sigma;
        a.prior = config.synth_p1;
        b.prior = 1.0 - config.synth_p1;
        specs = {a, b};
    }
    const auto ds =
        sample_gaussian_mixture(specs, config.synth_d, config.synth_n, config.seed);

    const std::size_t k = specs.size();
    auto pair_matrix = [&](auto&& value) {
        nlohmann::json m = nlohmann::json::array();
        for (std::size_t a = 0; a < k; ++a) {
            nlohmann::json row = nlohmann::json::array();
            for (std::size_t b = 0; b < k; ++b) {
                if (a == b) {
                    row.push_back(nullptr);
                } else {
                    GaussianSpec sa = specs[a], sb = specs[b];
                    const double total = sa.prior + sb.prior;
                    sa.prior /= total;
                    sb.prior /= total;
                    row.push_back(value(sa, sb));
                }
            }
            m.push_back(row);
        }
        return m;
    };
    nlohmann::json means = nlohmann::json::array();
    nlohmann::json priors = nlohmann::json::array();
    for (const auto& s : specs) {
        means.push_back(s.mean);
        priors.push_back(s.prior);
    }
    const nlohmann::json exact{
        {"classes", ds.class_labels},
        {"n", config.synth_n},
        {"d", config.synth_d},
        {"seed", config.seed},
        {"sigma", config.synth_sigma},
        {"priors", priors},
        {"means", means},
        {"ber", pair_matrix([](const GaussianSpec& a, const GaussianSpec& b) {
             return gaussian_ber(a, b);
         })},
        {"bhattacharyya", pair_matrix([](const GaussianSpec& a, const GaussianSpec& b) {
             return gaussian_bhattacharyya(a, b);
         })}};
    std::string json_path = config.json_output_path;
    if (json_path.empty()) {
        json_path = config.output_path;
        const auto dot = json_path.rfind(".csv");
        if (dot != std::string::npos && dot == json_path.size() - 4) {
            json_path.resize(dot);
        }
        json_path += ".json";
    }
    write_outputs({{config.output_path, to_csv_string(ds)}, {json_path, dump_json(exact)}});
    std::cout << "wrote " << config.synth_n << " samples to " << config.output_path
              << " and exact values to " << json_path << "\n";
}

inline bool run_props(const RunConfig& config) {
    const unsigned workers = resolve_workers(config.workers);
    struct Check {
        std::string name;
        SweepResult result;
    };
    std::vector<Check> checks;
    checks.push_back({"sandwich_bounds", sweep_sandwich_bounds(1000, config.seed, workers)});
    checks.push_back(
        {"bhattacharyya_bound", sweep_bhattacharyya_bound(1000, derive_seed(config.seed, 1), workers)});
    checks.push_back({"js_vs_hp", sweep_js_vs_hp(1000, derive_seed(config.seed, 2), workers)});
    checks.push_back({"lemma_b1", sweep_lemma_b1(100000, derive_seed(config.seed, 3), workers)});
    {
        // equality of the lemma at x = y, relative 1e-12 tolerance
        SweepResult eq;
        eq.instances = 1000;
        Rng rng(derive_seed(config.seed, 4));
        for (std::size_t i = 0; i < eq.instances; ++i) {
            const double x = std::pow(10.0, rng.uniform(-3.0, 3.0));
            const double rhs = 2.0 * std::log(2.0) * x;
            const double slack = 1e-12 * std::max(1.0, rhs) - std::abs(lemma_b1_slack(x, x));
            eq.worst_slack = std::min(eq.worst_slack, slack);
            if (slack < 0.0) eq.violations++;
        }
        checks.push_back({"lemma_b1_equality", eq});
    }
    checks.push_back({"ovr_bounds", sweep_ovr_bounds(500, derive_seed(config.seed, 5), workers)});

    nlohmann::json report = nlohmann::json::array();
    bool all_pass = true;
    for (const auto& [name, r] : checks) {
        const bool pass = r.violations == 0;
        all_pass = all_pass && pass;
        std::cout << (pass ? "PASS " : "FAIL ") << name << ": " << r.violations
                  << " violations in " << r.instances << " instances (worst slack "
                  << format_double(r.worst_slack) << ")\n";
        report.push_back({{"name", name},
                          {"instances", r.instances},
                          {"violations", r.violations},
                          {"worst_slack", r.worst_slack},
                          {"pass", pass}});
    }
    if (!config.output_path.empty()) {
        write_outputs({{config.output_path,
                        dump_json(nlohmann::json{{"checks", report}, {"all_pass", all_pass}})}});
    }
    return all_pass;
}

}  // namespace detail

// Dispatches one batch command; maps errors to exit codes. Usage problems
// return 1, data problems 2, broken invariants 3.
inline int run(const RunConfig& config) {
    try {
        if (config.command == "ber") {
            detail::run_ber(config);
        } else if (config.command == "ovr") {
            detail::run_ovr(config);
        } else if (config.command == "tree") {
            detail::run_tree(config);
        } else if (config.command == "train") {
            detail::run_train(config);
        } else if (config.command == "predict") {
            detail::run_predict(config);
        } else if (config.command == "eval") {
            detail::run_eval(config);
        } else if (config.command == "synth") {
            detail::run_synth(config);
        } else if (config.command == "props") {
            if (!detail::run_props(config)) {
                std::cerr << "error: internal: property checks failed\n";
                return 3;
            }
        } else {
            throw UsageError("unknown command '" + config.command + "'");
        }
        return 0;
    } catch (const UsageError& e) {
        std::cerr << "error: usage: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: data: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace smartsvm
