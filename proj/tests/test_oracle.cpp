#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <smartsvm/oracle.hpp>

using namespace smartsvm;

namespace {

DiscreteDistribution dist(std::vector<double> masses) {
    DiscreteDistribution f;
    f.masses = std::move(masses);
    return f;
}

}  // namespace

TEST_CASE("distribution validation", "[oracle]") {
    REQUIRE_NOTHROW(validate_distribution(dist({0.5, 0.5})));
    REQUIRE_THROWS_AS(validate_distribution(dist({})), DataError);
    REQUIRE_THROWS_AS(validate_distribution(dist({0.5, -0.1, 0.6})), DataError);
    REQUIRE_THROWS_AS(validate_distribution(dist({0.5, 0.4})), DataError);
}

TEST_CASE("exact discrete bayes error", "[oracle]") {
    const auto f1 = dist({0.5, 0.5, 0.0});
    const auto f2 = dist({0.0, 0.5, 0.5});
    CHECK(discrete_ber(f1, f2, 0.5) == 0.25);

    // identical distributions: error is the minority prior
    const auto g = dist({0.3, 0.7});
    CHECK(discrete_ber(g, g, 0.2) == Catch::Approx(0.2).epsilon(1e-15));

    // disjoint supports: zero error
    CHECK(discrete_ber(dist({1.0, 0.0}), dist({0.0, 1.0}), 0.4) == 0.0);

    REQUIRE_THROWS_AS(discrete_ber(f1, dist({1.0}), 0.5), DataError);
    REQUIRE_THROWS_AS(discrete_ber(f1, f2, 0.0), DataError);
    REQUIRE_THROWS_AS(discrete_ber(f1, f2, 1.0), DataError);
}

TEST_CASE("weighted bayes error accepts unnormalized weights", "[oracle]") {
    const auto f1 = dist({1.0, 0.0});
    const auto f2 = dist({0.5, 0.5});
    // min(0.2*1, 0.5*0.5) + min(0, 0.25) = 0.2
    CHECK(discrete_ber_weighted(f1, f2, 0.2, 0.5) == 0.2);
}

TEST_CASE("exact henze-penrose divergence", "[oracle]") {
    const auto f1 = dist({0.5, 0.5, 0.0});
    const auto f2 = dist({0.0, 0.5, 0.5});
    CHECK(discrete_hp(f1, f2, 0.5) == Catch::Approx(0.5).epsilon(1e-15));

    // identical distributions: divergence 0; disjoint: divergence 1
    const auto g = dist({0.3, 0.7});
    CHECK(discrete_hp(g, g, 0.4) == Catch::Approx(0.0).margin(1e-15));
    CHECK(discrete_hp(dist({1.0, 0.0}), dist({0.0, 1.0}), 0.3) ==
          Catch::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("divergence bounds sandwich the exact error", "[oracle]") {
    const auto f1 = dist({0.5, 0.5, 0.0});
    const auto f2 = dist({0.0, 0.5, 0.5});
    const auto bounds = hp_bounds_exact(f1, f2, 0.5);
    CHECK(bounds.lower == Catch::Approx(0.1464466094067262).epsilon(1e-14));
    CHECK(bounds.upper == Catch::Approx(0.25).epsilon(1e-15));
    const double ber = discrete_ber(f1, f2, 0.5);
    CHECK(bounds.lower <= ber);
    CHECK(ber <= bounds.upper + 1e-15);
}

TEST_CASE("jensen-shannon divergence and bound", "[oracle]") {
    const auto f1 = dist({0.75, 0.25});
    const auto f2 = dist({0.25, 0.75});
    const double js = discrete_js_divergence(f1, f2, 0.5);
    CHECK(js == Catch::Approx(0.1887218755408672).epsilon(1e-13));
    CHECK(discrete_js_bound(f1, f2, 0.5) ==
          Catch::Approx(0.4056390622295664).epsilon(1e-13));

    // the hp upper bound is tighter here
    const double hp_upper = hp_bounds_exact(f1, f2, 0.5).upper;
    CHECK(hp_upper == Catch::Approx(0.375).epsilon(1e-14));
    CHECK(hp_upper < discrete_js_bound(f1, f2, 0.5));
    CHECK(discrete_ber(f1, f2, 0.5) == 0.25);

    // identical distributions: js = 0, bound = half the prior entropy
    const auto g = dist({0.5, 0.5});
    CHECK(discrete_js_divergence(g, g, 0.5) == Catch::Approx(0.0).margin(1e-15));
    CHECK(discrete_js_bound(g, g, 0.5) == Catch::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("binary entropy", "[oracle]") {
    CHECK(binary_entropy(0.5) == 1.0);
    CHECK(binary_entropy(0.0) == 0.0);
    CHECK(binary_entropy(1.0) == 0.0);
    CHECK(binary_entropy(0.25) == Catch::Approx(0.8112781244591328).epsilon(1e-15));
}

TEST_CASE("bhattacharyya bound", "[oracle]") {
    const auto f1 = dist({0.5, 0.5, 0.0});
    const auto f2 = dist({0.0, 0.5, 0.5});
    CHECK(discrete_bhattacharyya_bound(f1, f2, 0.5) == 0.25);
    CHECK(discrete_ber(f1, f2, 0.5) <= 0.25);

    // identical distributions: bound sqrt(p1 p2) >= minority prior
    const auto g = dist({0.3, 0.7});
    CHECK(discrete_bhattacharyya_bound(g, g, 0.2) == Catch::Approx(std::sqrt(0.16)));
}

TEST_CASE("pointwise lemma slack", "[oracle]") {
    CHECK(lemma_b1_slack(1.0, 2.0) == Catch::Approx(0.0611500233912511).epsilon(1e-12));
    CHECK(lemma_b1_check(1.0, 2.0));
    // symmetric in x and y
    CHECK(lemma_b1_slack(2.0, 1.0) == Catch::Approx(lemma_b1_slack(1.0, 2.0)).epsilon(1e-14));
    // equality at x = y
    for (double x : {1e-3, 0.1, 1.0, 7.5, 1e3}) {
        CHECK(std::abs(lemma_b1_slack(x, x)) <= 1e-12 * std::max(1.0, 4.0 * x));
    }
    REQUIRE_THROWS_AS(lemma_b1_slack(0.0, 1.0), DataError);
    REQUIRE_THROWS_AS(lemma_b1_slack(1.0, -1.0), DataError);
}

TEST_CASE("one-vs-rest exact error and rest mixture", "[oracle]") {
    const std::vector<DiscreteDistribution> fs{dist({1.0, 0.0}), dist({0.0, 1.0}),
                                               dist({0.5, 0.5})};
    const std::vector<double> ps{0.2, 0.3, 0.5};

    const auto [g, pg] = discrete_mixture_rest(fs, ps, 0);
    CHECK(pg == 0.8);
    CHECK(g.masses[0] == Catch::Approx(0.3125).epsilon(1e-15));
    CHECK(g.masses[1] == Catch::Approx(0.6875).epsilon(1e-15));
    REQUIRE_NOTHROW(validate_distribution(g));

    // class 0 never wins under the bayes rule, so it loses its whole prior
    CHECK(discrete_ovr_ber(fs, ps, 0) == Catch::Approx(0.2).epsilon(1e-15));

    // lower bound (rest-mixture pair) and upper bound (pairwise sum) are
    // both tight on this instance
    CHECK(discrete_ber_weighted(fs[0], g, 0.2, 0.8) == Catch::Approx(0.2).epsilon(1e-15));
    const double pairwise_sum = discrete_ber_weighted(fs[0], fs[1], 0.2, 0.3) +
                                discrete_ber_weighted(fs[0], fs[2], 0.2, 0.5);
    CHECK(pairwise_sum == Catch::Approx(0.2).epsilon(1e-15));

    REQUIRE_THROWS_AS(discrete_ovr_ber(fs, ps, 3), DataError);
    REQUIRE_THROWS_AS(discrete_ovr_ber(fs, std::vector<double>{0.5, 0.5}, 0), DataError);
}

TEST_CASE("gaussian closed forms", "[oracle]") {
    GaussianSpec a{{0.0, 0.0}, 1.0, 0.5};
    GaussianSpec b{{2.0, 0.0}, 1.0, 0.5};
    // delta = 2, equal priors: BER = Phi(-1)
    CHECK(gaussian_ber(a, b) == Catch::Approx(0.15865525393145705).epsilon(1e-14));
    // delta = 2: BC bound = 0.5 exp(-0.5)
    CHECK(gaussian_bhattacharyya(a, b) ==
          Catch::Approx(0.5 * std::exp(-0.5)).epsilon(1e-15));

    // zero separation: BER equals the minority prior
    GaussianSpec c{{1.0}, 2.0, 0.3};
    GaussianSpec d{{1.0}, 2.0, 0.7};
    CHECK(gaussian_ber(c, d) == 0.3);
    CHECK(gaussian_bhattacharyya(c, d) == std::sqrt(0.3 * 0.7));

    // scale invariance: delta depends on distance over sigma
    GaussianSpec e{{0.0}, 0.5, 0.5};
    GaussianSpec f{{1.0}, 0.5, 0.5};
    GaussianSpec g{{0.0}, 1.0, 0.5};
    GaussianSpec h{{2.0}, 1.0, 0.5};
    CHECK(gaussian_ber(e, f) == Catch::Approx(gaussian_ber(g, h)).epsilon(1e-15));
}

TEST_CASE("gaussian ber stays below the minority prior and the bc bound", "[oracle]") {
    for (double delta : {0.0, 0.5, 1.0, 2.0, 4.0}) {
        for (double p1 : {0.15, 1.0 / 3.0, 0.5}) {
            GaussianSpec a{{0.0}, 1.0, p1};
            GaussianSpec b{{delta}, 1.0, 1.0 - p1};
            const double ber = gaussian_ber(a, b);
            CHECK(ber >= 0.0);
            CHECK(ber <= std::min(p1, 1.0 - p1) + 1e-12);
            CHECK(ber <= gaussian_bhattacharyya(a, b) + 1e-12);
        }
    }
}

TEST_CASE("gaussian input checks", "[oracle]") {
    GaussianSpec a{{0.0}, 1.0, 0.5};
    GaussianSpec bad_sigma{{1.0}, 2.0, 0.5};
    REQUIRE_THROWS_AS(gaussian_ber(a, bad_sigma), DataError);
    GaussianSpec bad_dim{{1.0, 2.0}, 1.0, 0.5};
    REQUIRE_THROWS_AS(gaussian_ber(a, bad_dim), DataError);
    GaussianSpec bad_prior{{1.0}, 1.0, 0.6};
    REQUIRE_THROWS_AS(gaussian_ber(a, bad_prior), DataError);
}

TEST_CASE("monte carlo estimates agree with the closed forms", "[oracle]") {
    GaussianSpec a{{0.0, 0.0}, 1.0, 0.5};
    GaussianSpec b{{2.0, 0.0}, 1.0, 0.5};

    const auto ber_mc = mc_gaussian_bayes_error(a, b, 200000, 12345);
    CHECK(ber_mc.std_error > 0.0);
    CHECK(std::abs(ber_mc.value - gaussian_ber(a, b)) <= 4.0 * ber_mc.std_error);

    const auto bc_mc = mc_gaussian_bhattacharyya(a, b, 200000, 54321);
    CHECK(bc_mc.std_error > 0.0);
    CHECK(std::abs(bc_mc.value - gaussian_bhattacharyya(a, b)) <= 4.0 * bc_mc.std_error);

    // at zero separation the importance weight is exactly 1
    GaussianSpec c{{0.0}, 1.0, 0.4};
    GaussianSpec d{{0.0}, 1.0, 0.6};
    const auto exact = mc_gaussian_bhattacharyya(c, d, 100, 7);
    CHECK(exact.value == Catch::Approx(std::sqrt(0.24)).epsilon(1e-15));
    CHECK(exact.std_error == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("mixture sampling uses largest remainder counts", "[oracle]") {
    const std::vector<GaussianSpec> specs{
        {{0.0, 0.0}, 1.0, 0.5}, {{5.0, 0.0}, 1.0, 0.3}, {{0.0, 5.0}, 1.0, 0.2}};
    const auto ds = sample_gaussian_mixture(specs, 2, 10, 99);
    CHECK(ds.class_counts() == std::vector<std::size_t>{5, 3, 2});
    CHECK(ds.class_labels == std::vector<std::string>{"1", "2", "3"});

    // equal priors with a remainder: ties go to the earlier component
    const std::vector<GaussianSpec> eq{
        {{0.0}, 1.0, 1.0 / 3.0}, {{5.0}, 1.0, 1.0 / 3.0}, {{10.0}, 1.0, 1.0 / 3.0}};
    const auto ds7 = sample_gaussian_mixture(eq, 1, 7, 1);
    CHECK(ds7.class_counts() == std::vector<std::size_t>{3, 2, 2});

    // deterministic in the seed
    const auto again = sample_gaussian_mixture(specs, 2, 10, 99);
    CHECK(again.features.data == ds.features.data);
    const auto other = sample_gaussian_mixture(specs, 2, 10, 100);
    CHECK(other.features.data != ds.features.data);
}

TEST_CASE("mixture sampling input checks", "[oracle]") {
    const std::vector<GaussianSpec> one{{{0.0}, 1.0, 1.0}};
    REQUIRE_THROWS_AS(sample_gaussian_mixture(one, 1, 10, 1), DataError);
    const std::vector<GaussianSpec> bad_prior{{{0.0}, 1.0, 0.5}, {{1.0}, 1.0, 0.6}};
    REQUIRE_THROWS_AS(sample_gaussian_mixture(bad_prior, 1, 10, 1), DataError);
    const std::vector<GaussianSpec> bad_dim{{{0.0, 0.0}, 1.0, 0.5}, {{1.0}, 1.0, 0.5}};
    REQUIRE_THROWS_AS(sample_gaussian_mixture(bad_dim, 1, 10, 1), DataError);
}

TEST_CASE("inequality sweeps hold on small runs", "[oracle]") {
    const auto sandwich = sweep_sandwich_bounds(200, 42);
    CHECK(sandwich.instances == 200);
    CHECK(sandwich.violations == 0);
    CHECK(sandwich.worst_slack >= -1e-12);

    const auto bc = sweep_bhattacharyya_bound(200, 43);
    CHECK(bc.violations == 0);

    const auto js = sweep_js_vs_hp(200, 44);
    CHECK(js.violations == 0);

    const auto lemma = sweep_lemma_b1(1000, 45);
    CHECK(lemma.violations == 0);

    const auto ovr = sweep_ovr_bounds(100, 46);
    CHECK(ovr.violations == 0);
    CHECK(ovr.worst_slack >= -1e-12);
}

TEST_CASE("sweeps are deterministic and scheduling independent", "[oracle]") {
    const auto serial = sweep_sandwich_bounds(100, 7, 1);
    const auto parallel = sweep_sandwich_bounds(100, 7, 4);
    CHECK(serial.worst_slack == parallel.worst_slack);
    CHECK(serial.violations == parallel.violations);
}
