#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "smartsvm/core.hpp"
#include "smartsvm/dataset.hpp"
#include "smartsvm/parallel.hpp"
#include "smartsvm/rng.hpp"

namespace smartsvm {

// L2-regularized hinge-loss separator. The intercept is the last weight,
// realized as a constant augmented feature, so it is regularized too.
struct LinearModel {
    std::vector<double> weights;
    double c_value = 1.0;
    double train_objective = 0.0;
};

struct SolverInfo {
    std::size_t epochs = 0;
    double duality_gap = 0.0;             // relative, at exit
    std::vector<double> dual_trace;       // dual minimization objective per epoch
};

inline constexpr double svm_gap_tolerance = 1e-4;
inline constexpr std::size_t svm_max_epochs = 5000;

// Dual coordinate descent over box-constrained alphas with per-epoch seeded
// shuffling. Stops when the relative primal-dual gap drops below tolerance.
inline LinearModel train_binary(const Matrix& x, std::span<const int> signs, double c,
                                std::uint64_t seed = 0, SolverInfo* info = nullptr) {
    const std::size_t n = x.rows;
    const std::size_t d = x.cols;
    if (n < 2) throw DataError("need at least 2 samples");
    if (signs.size() != n) throw DataError("sign count does not match sample count");
    if (!(c > 0.0)) throw DataError("cost parameter must be positive");
    bool has_pos = false, has_neg = false;
    for (int s : signs) {
        if (s == 1) has_pos = true;
        else if (s == -1) has_neg = true;
        else throw DataError("signs must be +1 or -1");
    }
    if (!has_pos || !has_neg) throw DataError("both sign groups must be present");
    for (double v : x.data) {
        if (!std::isfinite(v)) throw DataError("non-finite feature value");
    }

    std::vector<double> q_diag(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 1.0;  // augmented constant feature
        for (double v : x.row(i)) s += v * v;
        q_diag[i] = s;
    }
    std::vector<double> alpha(n, 0.0);
    std::vector<double> w(d + 1, 0.0);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);

    auto margin = [&](std::size_t i) {
        double m = w[d];
        const auto xi = x.row(i);
        for (std::size_t t = 0; t < d; ++t) m += w[t] * xi[t];
        return m;
    };
    auto objectives = [&](double& primal, double& dual) {
        double norm_sq = 0.0;
        for (double v : w) norm_sq += v * v;
        double hinge = 0.0, alpha_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            hinge += std::max(0.0, 1.0 - static_cast<double>(signs[i]) * margin(i));
            alpha_sum += alpha[i];
        }
        primal = 0.5 * norm_sq + c * hinge;
        dual = alpha_sum - 0.5 * norm_sq;
    };

    double primal = 0.0, dual = 0.0, gap = 0.0;
    std::size_t epoch = 0;
    while (epoch < svm_max_epochs) {
        rng.shuffle(order);
        for (std::size_t i : order) {
            const double y = static_cast<double>(signs[i]);
            const double g = y * margin(i) - 1.0;
            if ((alpha[i] == 0.0 && g >= 0.0) || (alpha[i] == c && g <= 0.0)) continue;
            const double next = std::clamp(alpha[i] - g / q_diag[i], 0.0, c);
            const double delta = next - alpha[i];
            if (delta == 0.0) continue;
            alpha[i] = next;
            const auto xi = x.row(i);
            for (std::size_t t = 0; t < d; ++t) w[t] += delta * y * xi[t];
            w[d] += delta * y;
        }
        ++epoch;
        objectives(primal, dual);
        gap = (primal - dual) / std::max(1.0, primal);
        if (info) info->dual_trace.push_back(-dual);
        if (gap <= svm_gap_tolerance) break;
    }
    if (info) {
        info->epochs = epoch;
        info->duality_gap = gap;
    }
    LinearModel model;
    model.weights = std::move(w);
    model.c_value = c;
    model.train_objective = primal;
    return model;
}

inline double predict_margin(const LinearModel& model, std::span<const double> x) {
    if (x.size() + 1 != model.weights.size()) {
        throw DataError("feature dimension does not match model");
    }
    double m = model.weights.back();
    for (std::size_t t = 0; t < x.size(); ++t) m += model.weights[t] * x[t];
    return m;
}

struct CSelection {
    double best_c = 0.0;
    double cv_accuracy = 0.0;
};

// Cross-validated grid search; mean validation accuracy per C, ties broken
// toward the smaller C. Fold models use seeds derived per grid cell.
inline CSelection select_c(const Matrix& x, std::span<const int> signs,
                           std::span<const double> grid, const FoldAssignment& folds,
                           std::uint64_t seed = 0, unsigned workers = 1) {
    if (grid.empty()) throw DataError("empty C grid");
    if (folds.fold_of.size() != x.rows) throw DataError("fold assignment does not match data");
    for (double c : grid) {
        if (!(c > 0.0)) throw DataError("cost parameter must be positive");
    }
    const std::size_t n_cells = grid.size() * static_cast<std::size_t>(folds.k);
    std::vector<double> correct(n_cells, 0.0);
    std::vector<double> totals(n_cells, 0.0);
    parallel_for(n_cells, workers, [&](std::size_t cell) {
        const std::size_t ci = cell / static_cast<std::size_t>(folds.k);
        const int fold = static_cast<int>(cell % static_cast<std::size_t>(folds.k));
        std::vector<std::size_t> train_rows, val_rows;
        for (std::size_t i = 0; i < x.rows; ++i) {
            (folds.fold_of[i] == fold ? val_rows : train_rows).push_back(i);
        }
        if (val_rows.empty() || train_rows.empty()) return;
        std::vector<int> train_signs;
        train_signs.reserve(train_rows.size());
        for (std::size_t r : train_rows) train_signs.push_back(signs[r]);
        const Matrix train_x = gather_rows(x, train_rows);
        const LinearModel model =
            train_binary(train_x, train_signs, grid[ci], derive_seed(seed, cell));
        double ok = 0.0;
        for (std::size_t r : val_rows) {
            const double m = predict_margin(model, x.row(r));
            const int pred = m >= 0.0 ? 1 : -1;
            ok += (pred == signs[r]);
        }
        correct[cell] = ok;
        totals[cell] = static_cast<double>(val_rows.size());
    });
    CSelection best;
    bool have = false;
    for (std::size_t ci = 0; ci < grid.size(); ++ci) {
        double acc_sum = 0.0;
        int counted = 0;
        for (int f = 0; f < folds.k; ++f) {
            const std::size_t cell = ci * static_cast<std::size_t>(folds.k) +
                                     static_cast<std::size_t>(f);
            if (totals[cell] > 0.0) {
                acc_sum += correct[cell] / totals[cell];
                ++counted;
            }
        }
        if (counted == 0) throw InternalError("no usable validation folds");
        const double acc = acc_sum / static_cast<double>(counted);
        if (!have || acc > best.cv_accuracy ||
            (acc == best.cv_accuracy && grid[ci] < best.best_c)) {
            best.best_c = grid[ci];
            best.cv_accuracy = acc;
            have = true;
        }
    }
    return best;
}

}  // namespace smartsvm
