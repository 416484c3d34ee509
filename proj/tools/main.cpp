#include <string>
#include <vector>

#include <CLI11.hpp>

#include <smartsvm/smartsvm.hpp>

namespace {

// "0,0" -> {0.0, 0.0}; used for the repeatable --mean flag.
std::vector<double> parse_coordinates(const std::string& text) {
    std::vector<double> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == ',') {
            const std::string cell = text.substr(start, i - start);
            double v;
            if (!smartsvm::detail::parse_finite_double(cell, v)) {
                throw CLI::ValidationError("--mean", "'" + cell + "' is not a finite number");
            }
            out.push_back(v);
            start = i + 1;
        }
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SmartSVM: Bayes error estimation, min-cut class hierarchies, linear SVMs"};
    app.require_subcommand(1);
    smartsvm::RunConfig config;
    std::vector<std::string> mean_texts;

    auto add_label = [&](CLI::App* cmd) {
        cmd->add_option("-l,--label-column", config.label_column,
                        "label column: header name, or 0-based index if all digits")
            ->capture_default_str();
    };
    auto add_seed = [&](CLI::App* cmd) {
        cmd->add_option("--seed", config.seed, "random seed")
            ->envname("SMARTSVM_SEED")
            ->capture_default_str();
    };
    auto add_workers = [&](CLI::App* cmd) {
        cmd->add_option("-j,--workers", config.workers, "worker threads, 0 means all cores")
            ->envname("SMARTSVM_WORKERS")
            ->capture_default_str();
    };
    auto add_trees = [&](CLI::App* cmd) {
        cmd->add_option("--n-trees", config.n_trees, "orthogonal spanning trees to average")
            ->capture_default_str();
    };

    auto* ber = app.add_subcommand("ber", "pairwise Bayes error estimates as JSON");
    ber->add_option("-i,--input", config.input_path, "input CSV dataset")->required();
    ber->add_option("-o,--output", config.output_path, "output JSON path")->required();
    ber->add_option("--heatmap", config.heatmap_path, "also write a CSV grid of normalized estimates");
    add_label(ber);
    add_trees(ber);
    add_seed(ber);
    add_workers(ber);

    auto* ovr = app.add_subcommand("ovr", "one-vs-rest Bayes error estimates as JSON");
    ovr->add_option("-i,--input", config.input_path, "input CSV dataset")->required();
    ovr->add_option("-o,--output", config.output_path, "output JSON path")->required();
    add_label(ovr);
    add_trees(ovr);
    add_seed(ovr);

    auto* tree = app.add_subcommand("tree", "min-cut class hierarchy as JSON plus a text sketch");
    tree->add_option("-i,--input", config.input_path, "input CSV dataset")->required();
    tree->add_option("-o,--output", config.output_path, "output JSON path")->required();
    tree->add_option("--text-output", config.text_output_path, "also write the text sketch to a file");
    add_label(tree);
    add_trees(tree);
    add_seed(tree);
    add_workers(tree);

    auto* train = app.add_subcommand("train", "train a multiclass linear SVM model");
    train->add_option("-i,--input", config.input_path, "input CSV dataset")->required();
    train->add_option("-o,--output", config.output_path, "output model JSON path")->required();
    train->add_option("--strategy", config.strategy, "smartsvm, ovo or ovr")->capture_default_str();
    train->add_option("--cv-folds", config.cv_folds, "cross-validation folds for tuning C")
        ->capture_default_str();
    train->add_option("--c-grid", config.c_grid, "C grid preset: desk (2^-6..2^6) or paper (2^-18..2^18)")
        ->capture_default_str();
    train->add_flag("--standardize", config.standardize, "standardize features before training");
    add_label(train);
    add_trees(train);
    add_seed(train);
    add_workers(train);

    auto* predict = app.add_subcommand("predict", "predict labels with a trained model");
    predict->add_option("-m,--model", config.model_path, "model JSON path")->required();
    predict->add_option("-i,--input", config.input_path, "input CSV of features")->required();
    predict->add_option("-o,--output", config.output_path, "output CSV of predicted labels")
        ->required();
    add_label(predict);

    auto* eval = app.add_subcommand("eval", "score predictions against labeled data");
    eval->add_option("-i,--input", config.input_path, "labeled CSV dataset")->required();
    eval->add_option("-p,--predictions", config.predictions_path, "predictions CSV")->required();
    eval->add_option("-o,--output", config.output_path, "optional JSON report path");
    add_label(eval);

    auto* synth = app.add_subcommand("synth", "sample a Gaussian mixture with exact reference values");
    synth->add_option("-o,--output", config.output_path, "output CSV path")->required();
    synth->add_option("--json-output", config.json_output_path,
                      "exact values JSON path (default: output with .json)");
    synth->add_option("-n", config.synth_n, "sample count")->capture_default_str();
    synth->add_option("-d", config.synth_d, "dimension")->capture_default_str();
    synth->add_option("--delta", config.synth_delta, "mean separation of the two-class default")
        ->capture_default_str();
    synth->add_option("--p1", config.synth_p1, "prior of class 1 in the two-class default")
        ->capture_default_str();
    synth->add_option("--sigma", config.synth_sigma, "shared spherical sigma")->capture_default_str();
    synth->add_option("--mean", mean_texts,
                      "component mean as comma-separated coordinates (repeatable)");
    synth->add_option("--prior", config.synth_priors, "component prior (repeatable, one per --mean)");
    add_seed(synth);

    auto* props = app.add_subcommand("props", "run randomized checks of the estimator inequalities");
    props->add_option("-o,--output", config.output_path, "optional JSON report path");
    add_seed(props);
    add_workers(props);

    try {
        app.parse(argc, argv);
        for (const auto& text : mean_texts) config.synth_means.push_back(parse_coordinates(text));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    config.command = app.get_subcommands().front()->get_name();
    return smartsvm::run(config);
}
