#include "ses/cross_validation.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>

#include "ses/engine.hpp"
#include "ses/errors.hpp"
#include "ses/regression.hpp"
#include "ses/rng.hpp"

namespace ses {

std::vector<std::vector<int>> make_stratified_folds(const Target& target, int kfolds,
                                                    std::uint64_t seed) {
    const int n = target.size();
    if (kfolds < 2) throw ConfigError("folds: kfolds must be >= 2");
    if (kfolds > n) throw ConfigError("folds: kfolds exceeds the sample count");

    Rng rng(seed);
    std::vector<std::vector<int>> folds(kfolds);
    std::size_t cursor = 0;

    if (target.is_continuous()) {
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        for (int i : order) folds[cursor++ % kfolds].push_back(i);
    } else {
        const int levels = target.level_count;
        for (int c = 0; c < levels; ++c) {
            std::vector<int> members;
            for (int i = 0; i < n; ++i)
                if (static_cast<int>(target.values[i]) == c) members.push_back(i);
            if (static_cast<int>(members.size()) < kfolds)
                std::cerr << "warning: class " << c << " has " << members.size()
                          << " members, fewer than the " << kfolds
                          << " folds; some folds will lack it\n";
            rng.shuffle(members);
            for (int i : members) folds[cursor++ % kfolds].push_back(i);
        }
    }
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

double mse(std::span<const double> y, std::span<const double> yhat) {
    if (y.size() != yhat.size() || y.empty())
        throw ConfigError("mse: vectors must have equal nonzero length");
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    return s / static_cast<double>(y.size());
}

double auc(std::span<const double> labels, std::span<const double> scores) {
    if (labels.size() != scores.size() || labels.empty())
        throw ConfigError("auc: vectors must have equal nonzero length");
    std::vector<double> sv(scores.begin(), scores.end());
    std::vector<double> ranks = mid_ranks(sv);
    double n_pos = 0.0, n_neg = 0.0, rank_sum_pos = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == 1.0) {
            n_pos += 1.0;
            rank_sum_pos += ranks[i];
        } else {
            n_neg += 1.0;
        }
    }
    if (n_pos == 0.0 || n_neg == 0.0)
        throw ConfigError("auc: both classes must be present");
    double u = rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0;
    return u / (n_pos * n_neg);
}

namespace {

void validate_explicit_folds(const std::vector<std::vector<int>>& folds, int n) {
    std::vector<char> seen(n, 0);
    int total = 0;
    for (const auto& f : folds)
        for (int i : f) {
            if (i < 0 || i >= n || seen[i])
                throw ConfigError("folds: explicit folds must partition 0..n-1 exactly");
            seen[i] = 1;
            ++total;
        }
    if (total != n)
        throw ConfigError("folds: explicit folds must cover every sample");
}

// Fits the task model on the training rows and scores the held-out rows;
// returns NaN when the fold cannot be scored (single-class AUC).
double fit_and_score(const Dataset& train_ds, const Target& train_t,
                     const Dataset& test_ds, const Target& test_t,
                     const std::vector<int>& vars, Task task) {
    Eigen::MatrixXd design = build_design(train_ds, vars);
    Eigen::MatrixXd test_design = build_design(test_ds, vars);
    Eigen::VectorXd y =
        Eigen::Map<const Eigen::VectorXd>(train_t.values.data(), train_t.size());

    if (task == Task::Regression) {
        LinearFit fit = ols_fit(design, y);
        Eigen::VectorXd pred = test_design * fit.coefficients;
        std::vector<double> yhat(pred.data(), pred.data() + pred.size());
        return -mse(test_t.values, yhat);
    }
    LogisticFit fit = logistic_fit(design, y);
    Eigen::VectorXd eta = test_design * fit.coefficients;
    std::vector<double> prob(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) prob[i] = 1.0 / (1.0 + std::exp(-eta(i)));
    bool has0 = false, has1 = false;
    for (double v : test_t.values) (v == 1.0 ? has1 : has0) = true;
    if (!has0 || !has1) return std::numeric_limits<double>::quiet_NaN();
    return auc(test_t.values, prob);
}

} // namespace

CvResult cv_ses(const Dataset& ds, const Target& target, const CvConfig& cfg,
                const TestSpec& test) {
    if (cfg.alphas.empty() || cfg.max_ks.empty())
        throw ConfigError("cv: alphas and max_ks must be nonempty");
    if (cfg.task == Task::Classification && !target.is_binary())
        throw ConfigError("cv: classification task requires a binary target");
    if (cfg.task == Task::Regression && !target.is_continuous())
        throw ConfigError("cv: regression task requires a continuous target");

    std::vector<std::vector<int>> folds;
    if (cfg.folds) {
        folds = *cfg.folds;
        if (folds.size() < 2) throw ConfigError("cv: need at least 2 folds");
        validate_explicit_folds(folds, ds.n_rows());
    } else {
        folds = make_stratified_folds(target, cfg.kfolds, cfg.seed);
    }
    const int kfolds = static_cast<int>(folds.size());

    CvResult result;
    for (double a : cfg.alphas)
        for (int k : cfg.max_ks) result.per_config.push_back({a, k, {}, 0.0});

    std::vector<int> all(ds.n_rows());
    std::iota(all.begin(), all.end(), 0);

    for (int f = 0; f < kfolds; ++f) {
        std::vector<char> held(ds.n_rows(), 0);
        for (int i : folds[f]) held[i] = 1;
        std::vector<int> train_rows;
        for (int i : all)
            if (!held[i]) train_rows.push_back(i);
        if (train_rows.empty() || folds[f].empty())
            throw ConfigError("cv: empty fold");

        Dataset train_ds = ds.subset_rows(train_rows);
        Target train_t = target.subset(train_rows);
        Dataset test_ds = ds.subset_rows(folds[f]);
        Target test_t = target.subset(folds[f]);

        TestSpec resolved = dispatch_test(train_t, train_ds, test);
        auto cache = std::make_shared<TestCache>(
            data_digest(train_ds, train_t, resolved.name()));

        for (auto& cell : result.per_config) {
            SesConfig ses_cfg;
            ses_cfg.threshold = cell.alpha;
            ses_cfg.max_k = cell.max_k;
            ses_cfg.test = resolved;
            SesOutput out = ses_run(train_ds, train_t, ses_cfg, cache);
            cell.fold_scores.push_back(
                fit_and_score(train_ds, train_t, test_ds, test_t, out.selected_vars,
                              cfg.task));
        }
    }

    bool any_score = false;
    for (auto& cell : result.per_config) {
        double sum = 0.0;
        int count = 0;
        for (double s : cell.fold_scores)
            if (!std::isnan(s)) {
                sum += s;
                ++count;
            }
        cell.mean_score =
            count > 0 ? sum / count : -std::numeric_limits<double>::infinity();
        if (count > 0) any_score = true;
    }
    if (!any_score) throw ConfigError("cv: no fold produced a score");

    const CvCell* best = &result.per_config.front();
    for (const auto& cell : result.per_config) {
        bool better = cell.mean_score > best->mean_score ||
                      (cell.mean_score == best->mean_score &&
                       (cell.alpha < best->alpha ||
                        (cell.alpha == best->alpha && cell.max_k < best->max_k)));
        if (better) best = &cell;
    }
    result.best_alpha = best->alpha;
    result.best_max_k = best->max_k;
    result.best_performance = best->mean_score;
    return result;
}

} // namespace ses
