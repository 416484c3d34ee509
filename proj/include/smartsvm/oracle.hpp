#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "smartsvm/core.hpp"
#include "smartsvm/dataset.hpp"
#include "smartsvm/parallel.hpp"
#include "smartsvm/rng.hpp"

namespace smartsvm {

// Probability mass function on a shared finite support.
struct DiscreteDistribution {
    std::vector<double> masses;
};

inline void validate_distribution(const DiscreteDistribution& f) {
    if (f.masses.empty()) throw DataError("distribution has empty support");
    double total = 0.0;
    for (double m : f.masses) {
        if (!(m >= 0.0)) throw DataError("distribution has a negative mass");
        total += m;
    }
    if (std::abs(total - 1.0) > 1e-12) throw DataError("distribution masses do not sum to 1");
}

namespace detail {

inline void check_pair(const DiscreteDistribution& f1, const DiscreteDistribution& f2, double p1) {
    validate_distribution(f1);
    validate_distribution(f2);
    if (f1.masses.size() != f2.masses.size()) {
        throw DataError("distributions must share one support");
    }
    if (!(p1 > 0.0 && p1 < 1.0)) throw DataError("prior must be strictly between 0 and 1");
}

}  // namespace detail

// Exact Bayes error for a weighted pair of densities: sum of min(w1 f1, w2 f2).
inline double discrete_ber_weighted(const DiscreteDistribution& f1, const DiscreteDistribution& f2,
                                    double w1, double w2) {
    if (f1.masses.size() != f2.masses.size()) {
        throw DataError("distributions must share one support");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < f1.masses.size(); ++i) {
        acc += std::min(w1 * f1.masses[i], w2 * f2.masses[i]);
    }
    return acc;
}

inline double discrete_ber(const DiscreteDistribution& f1, const DiscreteDistribution& f2,
                           double p1) {
    detail::check_pair(f1, f2, p1);
    return discrete_ber_weighted(f1, f2, p1, 1.0 - p1);
}

// Exact Henze-Penrose divergence.
inline double discrete_hp(const DiscreteDistribution& f1, const DiscreteDistribution& f2,
                          double p1) {
    detail::check_pair(f1, f2, p1);
    const double p2 = 1.0 - p1;
    double acc = 0.0;
    for (std::size_t i = 0; i < f1.masses.size(); ++i) {
        const double a = p1 * f1.masses[i];
        const double b = p2 * f2.masses[i];
        const double s = a + b;
        if (s > 0.0) acc += (a - b) * (a - b) / s;
    }
    return std::clamp((acc - (p1 - p2) * (p1 - p2)) / (4.0 * p1 * p2), 0.0, 1.0);
}

struct BerBounds {
    double lower = 0.0;
    double upper = 0.0;
};

// Exact divergence-based bounds on the Bayes error.
inline BerBounds hp_bounds_exact(const DiscreteDistribution& f1, const DiscreteDistribution& f2,
                                 double p1) {
    const double p2 = 1.0 - p1;
    const double d = discrete_hp(f1, f2, p1);
    const double u = std::clamp(4.0 * p1 * p2 * d + (p1 - p2) * (p1 - p2), 0.0, 1.0);
    return {0.5 - 0.5 * std::sqrt(u), 0.5 - 0.5 * u};
}

namespace detail {

inline double log2_safe_ratio_term(double num, double den) {
    // contribution num * log2(num/den) with the 0 log 0 convention
    if (num <= 0.0) return 0.0;
    return num * (std::log2(num) - std::log2(den));
}

}  // namespace detail

// Jensen-Shannon divergence against the prior-weighted mixture, base-2 logs.
inline double discrete_js_divergence(const DiscreteDistribution& f1,
                                     const DiscreteDistribution& f2, double p1) {
    detail::check_pair(f1, f2, p1);
    const double p2 = 1.0 - p1;
    double js = 0.0;
    for (std::size_t i = 0; i < f1.masses.size(); ++i) {
        const double m = p1 * f1.masses[i] + p2 * f2.masses[i];
        js += p1 * detail::log2_safe_ratio_term(f1.masses[i], m);
        js += p2 * detail::log2_safe_ratio_term(f2.masses[i], m);
    }
    return js;
}

inline double binary_entropy(double p) {
    double h = 0.0;
    if (p > 0.0) h -= p * std::log2(p);
    if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
    return h;
}

// Jensen-Shannon upper bound on the Bayes error: half the JS distance
// H(p1) - JS(f1, f2).
inline double discrete_js_bound(const DiscreteDistribution& f1, const DiscreteDistribution& f2,
                                double p1) {
    return 0.5 * (binary_entropy(p1) - discrete_js_divergence(f1, f2, p1));
}

inline double discrete_bhattacharyya_bound(const DiscreteDistribution& f1,
                                           const DiscreteDistribution& f2, double p1) {
    detail::check_pair(f1, f2, p1);
    double bc = 0.0;
    for (std::size_t i = 0; i < f1.masses.size(); ++i) {
        bc += std::sqrt(f1.masses[i] * f2.masses[i]);
    }
    return std::sqrt(p1 * (1.0 - p1)) * bc;
}

// Signed margin of the key pointwise inequality behind the JS comparison,
// natural logs: x log(1+y/x) + y log(1+x/y) - 4 log(2) x y / (x+y).
inline double lemma_b1_slack(double x, double y) {
    if (!(x > 0.0) || !(y > 0.0)) throw DataError("lemma arguments must be positive");
    const double lhs = x * std::log1p(y / x) + y * std::log1p(x / y);
    const double rhs = 4.0 * std::log(2.0) * x * y / (x + y);
    return lhs - rhs;
}

inline bool lemma_b1_check(double x, double y) { return lemma_b1_slack(x, y) >= -1e-12; }

namespace detail {

inline void check_mixture(std::span<const DiscreteDistribution> fs, std::span<const double> ps,
                          int k) {
    if (fs.size() < 2) throw DataError("need at least 2 mixture components");
    if (fs.size() != ps.size()) throw DataError("component and prior counts differ");
    if (k < 0 || static_cast<std::size_t>(k) >= fs.size()) throw DataError("class id out of range");
    double total = 0.0;
    for (double p : ps) {
        if (!(p > 0.0)) throw DataError("priors must be strictly positive");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw DataError("priors do not sum to 1");
    const std::size_t support = fs[0].masses.size();
    for (const auto& f : fs) {
        validate_distribution(f);
        if (f.masses.size() != support) throw DataError("distributions must share one support");
    }
}

}  // namespace detail

// Exact one-vs-rest Bayes error for class k inside a K-class mixture: mass
// lost at points the Bayes classifier assigns to k (the rest) plus mass of k
// where it is not the winner.
inline double discrete_ovr_ber(std::span<const DiscreteDistribution> fs, std::span<const double> ps,
                               int k) {
    detail::check_mixture(fs, ps, k);
    double acc = 0.0;
    for (std::size_t x = 0; x < fs[0].masses.size(); ++x) {
        const double qk = ps[static_cast<std::size_t>(k)] * fs[static_cast<std::size_t>(k)].masses[x];
        double qmax = 0.0;
        double rest = 0.0;
        for (std::size_t l = 0; l < fs.size(); ++l) {
            if (static_cast<int>(l) == k) continue;
            const double q = ps[l] * fs[l].masses[x];
            qmax = std::max(qmax, q);
            rest += q;
        }
        acc += (qmax >= qk) ? qk : rest;
    }
    return acc;
}

// Prior-weighted mixture of all components except k, renormalized, plus its
// total prior.
inline std::pair<DiscreteDistribution, double> discrete_mixture_rest(
    std::span<const DiscreteDistribution> fs, std::span<const double> ps, int k) {
    detail::check_mixture(fs, ps, k);
    double pg = 0.0;
    for (std::size_t l = 0; l < ps.size(); ++l) {
        if (static_cast<int>(l) != k) pg += ps[l];
    }
    DiscreteDistribution g;
    g.masses.assign(fs[0].masses.size(), 0.0);
    for (std::size_t l = 0; l < fs.size(); ++l) {
        if (static_cast<int>(l) == k) continue;
        for (std::size_t x = 0; x < g.masses.size(); ++x) {
            g.masses[x] += ps[l] * fs[l].masses[x] / pg;
        }
    }
    return {g, pg};
}

// Spherical Gaussian component: N(mean, sigma^2 I) with a mixture prior.
struct GaussianSpec {
    std::vector<double> mean;
    double sigma = 1.0;
    double prior = 0.5;
};

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace detail {

inline double gaussian_delta(const GaussianSpec& a, const GaussianSpec& b) {
    if (a.mean.size() != b.mean.size()) throw DataError("mean dimensions differ");
    if (!(a.sigma > 0.0) || !(b.sigma > 0.0)) throw DataError("sigma must be positive");
    if (std::abs(a.sigma - b.sigma) > 1e-9 * std::max(a.sigma, b.sigma)) {
        throw DataError("closed forms require equal sigmas");
    }
    if (std::abs(a.prior + b.prior - 1.0) > 1e-9) throw DataError("priors must sum to 1");
    if (!(a.prior > 0.0) || !(b.prior > 0.0)) throw DataError("priors must be strictly positive");
    double s = 0.0;
    for (std::size_t i = 0; i < a.mean.size(); ++i) {
        const double d = a.mean[i] - b.mean[i];
        s += d * d;
    }
    return std::sqrt(s) / a.sigma;
}

}  // namespace detail

// Exact Bayes error of a two-component spherical Gaussian mixture with equal
// sigmas, via the likelihood-ratio threshold on the 1-D projection.
inline double gaussian_ber(const GaussianSpec& a, const GaussianSpec& b) {
    const double delta = detail::gaussian_delta(a, b);
    const double p1 = a.prior;
    const double p2 = b.prior;
    if (delta == 0.0) return std::min(p1, p2);
    const double t = std::log(p2 / p1) / delta;
    return p1 * normal_cdf(-0.5 * delta + t) + p2 * normal_cdf(-0.5 * delta - t);
}

inline double gaussian_bhattacharyya(const GaussianSpec& a, const GaussianSpec& b) {
    const double delta = detail::gaussian_delta(a, b);
    return std::sqrt(a.prior * b.prior) * std::exp(-delta * delta / 8.0);
}

struct MonteCarloEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

// Simulated Bayes classifier error; verifies the closed form independently.
inline MonteCarloEstimate mc_gaussian_bayes_error(const GaussianSpec& a, const GaussianSpec& b,
                                                  std::size_t n_samples, std::uint64_t seed) {
    detail::gaussian_delta(a, b);
    if (n_samples < 1) throw DataError("need at least 1 sample");
    const std::size_t d = a.mean.size();
    Rng rng(seed);
    std::vector<double> x(d);
    std::size_t errors = 0;
    const double log_p1 = std::log(a.prior);
    const double log_p2 = std::log(b.prior);
    for (std::size_t i = 0; i < n_samples; ++i) {
        const bool from_a = rng.uniform() < a.prior;
        const GaussianSpec& src = from_a ? a : b;
        for (std::size_t t = 0; t < d; ++t) x[t] = src.mean[t] + src.sigma * rng.normal();
        double da = 0.0, db = 0.0;
        for (std::size_t t = 0; t < d; ++t) {
            da += (x[t] - a.mean[t]) * (x[t] - a.mean[t]);
            db += (x[t] - b.mean[t]) * (x[t] - b.mean[t]);
        }
        const double sa = log_p1 - da / (2.0 * a.sigma * a.sigma);
        const double sb = log_p2 - db / (2.0 * b.sigma * b.sigma);
        const bool pick_a = sa >= sb;
        errors += (pick_a != from_a);
    }
    const double p = static_cast<double>(errors) / static_cast<double>(n_samples);
    return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n_samples))};
}

// Importance-sampled Bhattacharyya coefficient: E_f1 sqrt(f2/f1).
inline MonteCarloEstimate mc_gaussian_bhattacharyya(const GaussianSpec& a, const GaussianSpec& b,
                                                    std::size_t n_samples, std::uint64_t seed) {
    detail::gaussian_delta(a, b);
    if (n_samples < 2) throw DataError("need at least 2 samples");
    const std::size_t d = a.mean.size();
    Rng rng(seed);
    std::vector<double> x(d);
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        for (std::size_t t = 0; t < d; ++t) x[t] = a.mean[t] + a.sigma * rng.normal();
        double da = 0.0, db = 0.0;
        for (std::size_t t = 0; t < d; ++t) {
            da += (x[t] - a.mean[t]) * (x[t] - a.mean[t]);
            db += (x[t] - b.mean[t]) * (x[t] - b.mean[t]);
        }
        const double w = std::exp((da - db) / (4.0 * a.sigma * a.sigma));
        sum += w;
        sum_sq += w * w;
    }
    const double nn = static_cast<double>(n_samples);
    const double mean = sum / nn;
    const double var = std::max(0.0, (sum_sq - nn * mean * mean) / (nn - 1.0));
    const double scale = std::sqrt(a.prior * b.prior);
    return {scale * mean, scale * std::sqrt(var / nn)};
}

// Samples a spherical Gaussian mixture with largest-remainder class counts,
// labels "1".."K" in component order.
inline LabeledDataset sample_gaussian_mixture(std::span<const GaussianSpec> specs, std::size_t d,
                                              std::size_t n, std::uint64_t seed) {
    if (specs.size() < 2) throw DataError("need at least 2 mixture components");
    if (n < specs.size()) throw DataError("need at least one sample per component");
    double total = 0.0;
    for (const auto& s : specs) {
        if (s.mean.size() != d) throw DataError("mean dimension does not match d");
        if (!(s.sigma > 0.0)) throw DataError("sigma must be positive");
        if (!(s.prior > 0.0)) throw DataError("priors must be strictly positive");
        total += s.prior;
    }
    if (std::abs(total - 1.0) > 1e-9) throw DataError("priors do not sum to 1");

    const std::size_t k = specs.size();
    std::vector<std::size_t> counts(k);
    std::vector<std::pair<double, std::size_t>> fracs(k);
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < k; ++c) {
        const double exact = specs[c].prior * static_cast<double>(n);
        counts[c] = static_cast<std::size_t>(std::floor(exact));
        fracs[c] = {exact - std::floor(exact), c};
        assigned += counts[c];
    }
    std::sort(fracs.begin(), fracs.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::size_t i = 0; assigned < n; ++i, ++assigned) counts[fracs[i % k].second]++;

    LabeledDataset ds;
    ds.features = Matrix(n, d);
    ds.labels.reserve(n);
    Rng rng(seed);
    std::size_t row = 0;
    for (std::size_t c = 0; c < k; ++c) {
        ds.class_labels.push_back(std::to_string(c + 1));
        for (std::size_t i = 0; i < counts[c]; ++i, ++row) {
            for (std::size_t t = 0; t < d; ++t) {
                ds.features(row, t) = specs[c].mean[t] + specs[c].sigma * rng.normal();
            }
            ds.labels.push_back(static_cast<int>(c));
        }
    }
    validate_dataset(ds);
    return ds;
}

// Randomized inequality sweeps. Every instance is generated from a seed
// derived by counter, so results are independent of scheduling.
struct SweepResult {
    std::size_t instances = 0;
    std::size_t violations = 0;
    double worst_slack = std::numeric_limits<double>::infinity();
};

namespace detail {

inline DiscreteDistribution random_dirichlet(Rng& rng, std::size_t support) {
    DiscreteDistribution f;
    f.masses.resize(support);
    double total = 0.0;
    for (double& m : f.masses) {
        m = rng.exponential();
        total += m;
    }
    for (double& m : f.masses) m /= total;
    return f;
}

template <typename Fn>
SweepResult run_sweep(std::size_t instances, std::uint64_t seed, unsigned workers, Fn&& fn) {
    std::vector<double> slacks(instances, std::numeric_limits<double>::infinity());
    parallel_for(instances, workers, [&](std::size_t i) {
        Rng rng(derive_seed(seed, i));
        slacks[i] = fn(rng);
    });
    SweepResult r;
    r.instances = instances;
    for (double s : slacks) {
        r.worst_slack = std::min(r.worst_slack, s);
        if (s < -1e-12) r.violations++;
    }
    return r;
}

}  // namespace detail

// Random distribution pairs: exact BER sits inside the divergence bounds.
inline SweepResult sweep_sandwich_bounds(std::size_t instances, std::uint64_t seed,
                                         unsigned workers = 1) {
    return detail::run_sweep(instances, seed, workers, [](Rng& rng) {
        const std::size_t support = 2 + static_cast<std::size_t>(rng.uniform_int(19));
        const auto f1 = detail::random_dirichlet(rng, support);
        const auto f2 = detail::random_dirichlet(rng, support);
        const double p1 = rng.uniform(0.05, 0.95);
        const double ber = discrete_ber(f1, f2, p1);
        const auto bounds = hp_bounds_exact(f1, f2, p1);
        return std::min(ber - bounds.lower, bounds.upper - ber);
    });
}

// Random pairs at arbitrary priors: BER never exceeds the Bhattacharyya bound.
inline SweepResult sweep_bhattacharyya_bound(std::size_t instances, std::uint64_t seed,
                                             unsigned workers = 1) {
    return detail::run_sweep(instances, seed, workers, [](Rng& rng) {
        const std::size_t support = 2 + static_cast<std::size_t>(rng.uniform_int(19));
        const auto f1 = detail::random_dirichlet(rng, support);
        const auto f2 = detail::random_dirichlet(rng, support);
        const double p1 = rng.uniform(0.05, 0.95);
        return discrete_bhattacharyya_bound(f1, f2, p1) - discrete_ber(f1, f2, p1);
    });
}

// Equal priors: the divergence-based upper bound is at least as tight as the
// Jensen-Shannon bound, and never beats the Bhattacharyya bound's validity.
inline SweepResult sweep_js_vs_hp(std::size_t instances, std::uint64_t seed,
                                  unsigned workers = 1) {
    return detail::run_sweep(instances, seed, workers, [](Rng& rng) {
        const std::size_t support = 2 + static_cast<std::size_t>(rng.uniform_int(19));
        const auto f1 = detail::random_dirichlet(rng, support);
        const auto f2 = detail::random_dirichlet(rng, support);
        const double hp_upper = hp_bounds_exact(f1, f2, 0.5).upper;
        const double js_upper = discrete_js_bound(f1, f2, 0.5);
        const double ber = discrete_ber(f1, f2, 0.5);
        return std::min(js_upper - hp_upper, std::min(js_upper, hp_upper) - ber);
    });
}

// Log-uniform positive pairs for the pointwise lemma.
inline SweepResult sweep_lemma_b1(std::size_t instances, std::uint64_t seed,
                                  unsigned workers = 1) {
    return detail::run_sweep(instances, seed, workers, [](Rng& rng) {
        const double x = std::pow(10.0, rng.uniform(-3.0, 3.0));
        const double y = std::pow(10.0, rng.uniform(-3.0, 3.0));
        return lemma_b1_slack(x, y);
    });
}

// Random K-class mixtures: the one-vs-rest error sits between the exact
// rest-mixture BER and the pairwise sum bound.
inline SweepResult sweep_ovr_bounds(std::size_t instances, std::uint64_t seed,
                                    unsigned workers = 1) {
    return detail::run_sweep(instances, seed, workers, [](Rng& rng) {
        const std::size_t k = 3 + static_cast<std::size_t>(rng.uniform_int(3));
        const std::size_t support = 2 + static_cast<std::size_t>(rng.uniform_int(19));
        std::vector<DiscreteDistribution> fs;
        for (std::size_t c = 0; c < k; ++c) fs.push_back(detail::random_dirichlet(rng, support));
        std::vector<double> ps(k);
        double total = 0.0;
        for (double& p : ps) {
            p = rng.exponential();
            total += p;
        }
        for (double& p : ps) p /= total;
        double slack = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            const int ci = static_cast<int>(c);
            const auto [g, pg] = discrete_mixture_rest(fs, ps, ci);
            const double lower = discrete_ber_weighted(fs[c], g, ps[c], pg);
            const double exact = discrete_ovr_ber(fs, ps, ci);
            double upper = 0.0;
            for (std::size_t l = 0; l < k; ++l) {
                if (l == c) continue;
                upper += discrete_ber_weighted(fs[c], fs[l], ps[c], ps[l]);
            }
            slack = std::min(slack, std::min(exact - lower, upper - exact));
        }
        return slack;
    });
}

}  // namespace smartsvm
