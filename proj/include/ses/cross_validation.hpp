#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ses/citests.hpp"
#include "ses/dataset.hpp"

namespace ses {

enum class Task { Classification, Regression };

struct CvConfig {
    int kfolds = 10;
    std::optional<std::vector<std::vector<int>>> folds; // explicit partition, overrides kfolds
    std::vector<double> alphas = {0.01, 0.05, 0.1};
    std::vector<int> max_ks = {3, 5};
    Task task = Task::Regression;
    std::uint64_t seed = 0;
};

struct CvCell {
    double alpha = 0.0;
    int max_k = 0;
    std::vector<double> fold_scores; // one per fold; NaN when unscorable
    double mean_score = 0.0;         // larger is better (regression: negated MSE)
};

struct CvResult {
    std::vector<CvCell> per_config;
    double best_alpha = 0.0;
    int best_max_k = 0;
    double best_performance = 0.0;
};

// Seeded stratified fold assignment: per-class shuffle and round-robin for
// classification targets, plain shuffle for regression. Folds partition
// 0..n-1 and are returned with ascending members.
std::vector<std::vector<int>> make_stratified_folds(const Target& target, int kfolds,
                                                    std::uint64_t seed);

// Grid search over (alpha, max_k): each fold held out in turn, SES on the
// rest (one shared test cache per fold across the whole grid), a task model
// on the selected variables, scored on the fold. Ties on the mean prefer the
// smaller alpha, then the smaller max_k.
CvResult cv_ses(const Dataset& ds, const Target& target, const CvConfig& cfg,
                const TestSpec& test);

double mse(std::span<const double> y, std::span<const double> yhat);

// Mann-Whitney AUC with mid-rank tie handling, O(n log n).
double auc(std::span<const double> labels, std::span<const double> scores);

} // namespace ses
