#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include <json.hpp>
#include <smartsvm/classifier.hpp>
#include <smartsvm/oracle.hpp>

using namespace smartsvm;

namespace {

LabeledDataset three_blobs(std::size_t n, std::uint64_t seed) {
    const std::vector<GaussianSpec> specs{{{0.0, 0.0}, 0.5, 1.0 / 3.0},
                                          {{10.0, 0.0}, 0.5, 1.0 / 3.0},
                                          {{0.0, 10.0}, 0.5, 1.0 / 3.0}};
    return sample_gaussian_mixture(specs, 2, n, seed);
}

TrainOptions fast_options() {
    TrainOptions opt;
    opt.cv_folds = 5;
    opt.c_grid = {0.25, 1.0, 4.0};
    opt.seed = 42;
    return opt;
}

}  // namespace

TEST_CASE("standardization uses population moments", "[classifier]") {
    Matrix x(2, 2);
    x(0, 0) = 0.0;
    x(0, 1) = 3.0;
    x(1, 0) = 2.0;
    x(1, 1) = 3.0;
    const auto s = fit_standardization(x);
    CHECK(s.mean == std::vector<double>{1.0, 3.0});
    // population stddev of {0,2} is 1; the constant column falls back to 1
    CHECK(s.stddev == std::vector<double>{1.0, 1.0});

    apply_standardization(x, s);
    CHECK(x(0, 0) == -1.0);
    CHECK(x(1, 0) == 1.0);
    CHECK(x(0, 1) == 0.0);
    CHECK(x(1, 1) == 0.0);

    Matrix wrong(1, 3);
    REQUIRE_THROWS_AS(apply_standardization(wrong, s), DataError);
}

TEST_CASE("cost grids", "[classifier]") {
    const auto desk = desk_c_grid();
    REQUIRE(desk.size() == 7);
    CHECK(desk.front() == std::ldexp(1.0, -6));
    CHECK(desk.back() == 64.0);
    CHECK(desk[3] == 1.0);

    const auto paper = paper_c_grid();
    REQUIRE(paper.size() == 19);
    CHECK(paper.front() == std::ldexp(1.0, -18));
    CHECK(paper.back() == std::ldexp(1.0, 18));
    CHECK(paper[9] == 1.0);

    CHECK(std::is_sorted(desk.begin(), desk.end()));
    CHECK(std::is_sorted(paper.begin(), paper.end()));
}

TEST_CASE("adjusted rand index on the worked example", "[classifier]") {
    const std::vector<int> truth{0, 0, 0, 1, 1, 1};
    const std::vector<int> pred{0, 0, 0, 0, 1, 1};
    // contingency from the 4/2 overlap: (index - expected) / (max - expected)
    // = (4 - 2.8) / (6.5 - 2.8)
    CHECK(adjusted_rand_index(truth, pred) ==
          Catch::Approx(0.32432432432432434).margin(1e-9));
}

TEST_CASE("adjusted rand index properties", "[classifier]") {
    const std::vector<int> truth{0, 1, 2, 0, 1, 2, 0, 1};
    CHECK(adjusted_rand_index(truth, truth) == 1.0);

    // invariant under relabeling of the prediction
    const std::vector<int> pred{0, 1, 1, 0, 2, 1, 0, 1};
    std::vector<int> relabeled(pred.size());
    const int map[] = {2, 0, 1};
    std::transform(pred.begin(), pred.end(), relabeled.begin(),
                   [&](int v) { return map[v]; });
    CHECK(adjusted_rand_index(truth, relabeled) ==
          Catch::Approx(adjusted_rand_index(truth, pred)).epsilon(1e-14));

    // both partitions trivial and identical: defined as 1
    const std::vector<int> all_same{0, 0, 0};
    const std::vector<int> all_one{1, 1, 1};
    CHECK(adjusted_rand_index(all_same, all_one) == 1.0);

    // a constant prediction against a split truth scores no better than 0
    const std::vector<int> split{0, 0, 1, 1};
    const std::vector<int> constant{0, 0, 0, 0};
    CHECK(adjusted_rand_index(split, constant) <= 0.0);

    REQUIRE_THROWS_AS(adjusted_rand_index(truth, std::vector<int>{0, 1}), DataError);
    REQUIRE_THROWS_AS(adjusted_rand_index(std::vector<int>{0}, std::vector<int>{0}), DataError);
}

TEST_CASE("confusion rates on the worked example", "[classifier]") {
    const std::vector<int> truth{0, 1, 2, 0};
    const std::vector<int> pred{0, 2, 2, 1};
    CHECK(confusion_rate(truth, pred, 0) == 0.25);
    CHECK(confusion_rate(truth, pred, 1) == 0.5);
    CHECK(confusion_rate(truth, pred, 2) == 0.25);
    // perfect agreement
    CHECK(confusion_rate(truth, truth, 0) == 0.0);
    REQUIRE_THROWS_AS(confusion_rate(truth, std::vector<int>{0}, 0), DataError);
}

TEST_CASE("hierarchical training separates clean blobs", "[classifier]") {
    const auto ds = three_blobs(60, 7);
    const auto model = train(ds, fast_options());
    CHECK(model.strategy == "smartsvm");
    CHECK(model.class_labels == ds.class_labels);
    REQUIRE(model.tree.nodes.size() == 2);
    REQUIRE(model.node_models.size() == 2);
    CHECK_FALSE(model.standardize.has_value());

    const auto ids = predict_ids(model, ds.features);
    CHECK(adjusted_rand_index(ds.labels, ids) == 1.0);
    const auto names = predict(model, ds.features);
    for (std::size_t i = 0; i < names.size(); ++i) {
        CHECK(names[i] == ds.class_labels[static_cast<std::size_t>(ds.labels[i])]);
    }
    for (int c = 0; c < 3; ++c) CHECK(confusion_rate(ds.labels, ids, c) == 0.0);
}

TEST_CASE("one-vs-one and one-vs-rest baselines", "[classifier]") {
    const auto ds = three_blobs(60, 19);
    const auto opt = fast_options();

    const auto ovo = train_ovo(ds, opt);
    CHECK(ovo.strategy == "ovo");
    CHECK(ovo.pairs ==
          std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {1, 2}});
    REQUIRE(ovo.node_models.size() == 3);
    CHECK(adjusted_rand_index(ds.labels, predict_ids(ovo, ds.features)) == 1.0);

    const auto ovr = train_ovr(ds, opt);
    CHECK(ovr.strategy == "ovr");
    CHECK(ovr.pairs.empty());
    REQUIRE(ovr.node_models.size() == 3);
    CHECK(adjusted_rand_index(ds.labels, predict_ids(ovr, ds.features)) == 1.0);
}

TEST_CASE("training is deterministic and scheduling independent", "[classifier]") {
    const auto ds = three_blobs(60, 3);
    auto opt = fast_options();
    const auto a = train(ds, opt);
    opt.workers = 4;
    const auto b = train(ds, opt);
    REQUIRE(a.node_models.size() == b.node_models.size());
    for (std::size_t i = 0; i < a.node_models.size(); ++i) {
        CHECK(a.node_models[i].weights == b.node_models[i].weights);
        CHECK(a.node_models[i].c_value == b.node_models[i].c_value);
    }
    CHECK(a.tree.nodes.size() == b.tree.nodes.size());
}

TEST_CASE("standardized training stores the transform", "[classifier]") {
    auto ds = three_blobs(60, 11);
    // stretch one feature so standardization matters
    for (std::size_t i = 0; i < ds.n_samples(); ++i) ds.features(i, 1) *= 1000.0;
    auto opt = fast_options();
    opt.standardize = true;
    const auto model = train(ds, opt);
    REQUIRE(model.standardize.has_value());
    CHECK(model.standardize->mean.size() == 2);
    // prediction consumes raw features and applies the stored transform
    const auto ids = predict_ids(model, ds.features);
    CHECK(adjusted_rand_index(ds.labels, ids) == 1.0);
}

TEST_CASE("underpopulated classes are reported by label", "[classifier]") {
    const auto ds = three_blobs(30, 13);
    auto opt = fast_options();
    opt.cv_folds = 12;
    REQUIRE_THROWS_MATCHES(
        train(ds, opt), DataError,
        Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("'2'")));

    opt.cv_folds = 1;
    REQUIRE_THROWS_AS(train(ds, opt), DataError);
    opt.cv_folds = 5;
    opt.c_grid.clear();
    REQUIRE_THROWS_AS(train(ds, opt), DataError);
}

TEST_CASE("prediction input checks", "[classifier]") {
    const auto ds = three_blobs(60, 23);
    const auto model = train(ds, fast_options());
    Matrix wrong(2, 3);
    REQUIRE_THROWS_AS(predict_ids(model, wrong), DataError);
    Matrix bad(1, 2);
    bad(0, 0) = std::numeric_limits<double>::infinity();
    REQUIRE_THROWS_AS(predict_ids(model, bad), DataError);
    SmartSvmModel empty;
    REQUIRE_THROWS_AS(predict_ids(empty, ds.features), DataError);
}

TEST_CASE("model json round trip for every strategy", "[classifier]") {
    const auto ds = three_blobs(60, 29);
    const auto opt = fast_options();

    for (int variant = 0; variant < 3; ++variant) {
        SmartSvmModel model;
        if (variant == 0) model = train(ds, opt);
        if (variant == 1) model = train_ovo(ds, opt);
        if (variant == 2) model = train_ovr(ds, opt);

        const auto j = model_to_json(model);
        CHECK(j.at("version").get<std::string>() == model_format_version);
        const auto back = model_from_json(j);
        CHECK(back.strategy == model.strategy);
        CHECK(back.class_labels == model.class_labels);
        CHECK(back.pairs == model.pairs);
        REQUIRE(back.node_models.size() == model.node_models.size());
        for (std::size_t i = 0; i < back.node_models.size(); ++i) {
            CHECK(back.node_models[i].weights == model.node_models[i].weights);
            CHECK(back.node_models[i].c_value == model.node_models[i].c_value);
        }
        CHECK(model_to_json(back) == j);

        const auto ids = predict_ids(back, ds.features);
        CHECK(ids == predict_ids(model, ds.features));
    }
}

TEST_CASE("malformed model json is rejected", "[classifier]") {
    const auto ds = three_blobs(60, 31);
    const auto good = model_to_json(train_ovo(ds, fast_options()));

    SECTION("wrong version") {
        auto j = good;
        j["version"] = "smartsvm-model/9";
        REQUIRE_THROWS_MATCHES(model_from_json(j), DataError,
                               Catch::Matchers::MessageMatches(
                                   Catch::Matchers::ContainsSubstring("version")));
    }
    SECTION("missing version") {
        auto j = good;
        j.erase("version");
        REQUIRE_THROWS_AS(model_from_json(j), DataError);
    }
    SECTION("unknown strategy") {
        auto j = good;
        j["strategy"] = "kitchen-sink";
        REQUIRE_THROWS_AS(model_from_json(j), DataError);
    }
    SECTION("descending pair") {
        auto j = good;
        j["pairs"][0] = {1, 0};
        REQUIRE_THROWS_AS(model_from_json(j), DataError);
    }
    SECTION("separator count mismatch") {
        auto j = good;
        j["node_models"].erase(0);
        REQUIRE_THROWS_AS(model_from_json(j), DataError);
    }
    SECTION("standardize dimension mismatch") {
        auto j = good;
        j["standardize"] = {{"mean", {0.0}}, {"std", {1.0}}};
        REQUIRE_THROWS_AS(model_from_json(j), DataError);
    }
    SECTION("non-positive stddev") {
        auto j = good;
        j["standardize"] = {{"mean", {0.0, 0.0}}, {"std", {1.0, 0.0}}};
        REQUIRE_THROWS_AS(model_from_json(j), DataError);
    }
    SECTION("ragged separator dimensions") {
        auto j = good;
        j["node_models"][1]["weights"] = {1.0, 2.0, 3.0, 4.0};
        REQUIRE_THROWS_AS(model_from_json(j), DataError);
    }
}

TEST_CASE("forward selection finds the informative feature first", "[classifier]") {
    // feature 0 is a fixed alternating pattern shared by both classes,
    // feature 1 separates them cleanly
    const std::size_t n = 24;
    LabeledDataset ds;
    ds.features = Matrix(n, 2);
    ds.class_labels = {"lo", "hi"};
    Rng rng(37);
    for (std::size_t i = 0; i < n; ++i) {
        const int label = i < n / 2 ? 0 : 1;
        ds.labels.push_back(label);
        ds.features(i, 0) = static_cast<double>(i % 2) + 0.01 * rng.normal();
        ds.features(i, 1) = (label == 0 ? 0.0 : 10.0) + 0.1 * rng.normal();
    }

    const auto order = forward_feature_select(ds, 2, 1, 5);
    REQUIRE(order.size() == 2);
    CHECK(order[0] == 1);
    CHECK(order[1] == 0);

    const auto first_only = forward_feature_select(ds, 1, 1, 5, FeatureObjective::worst_ber);
    REQUIRE(first_only.size() == 1);
    CHECK(first_only[0] == 1);

    // deterministic and scheduling independent
    const auto parallel = forward_feature_select(ds, 2, 1, 5, FeatureObjective::mean_ber, 4);
    CHECK(parallel == order);

    REQUIRE_THROWS_AS(forward_feature_select(ds, 0, 1, 5), DataError);
    REQUIRE_THROWS_AS(forward_feature_select(ds, 3, 1, 5), DataError);
}
