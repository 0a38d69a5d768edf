#include "ses/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ses/engine.hpp"
#include "ses/errors.hpp"
#include "ses/regression.hpp"
#include "ses/rng.hpp"

namespace ses {

LoadedTable generate_synthetic(const SyntheticSpec& spec) {
    if (spec.n_rows < 1 || spec.n_cols < 1)
        throw ConfigError("synthetic: n_rows and n_cols must be positive");
    for (const auto& [var, coef] : spec.coefficients) {
        (void)coef;
        if (var < 1 || var > spec.n_cols)
            throw ConfigError("synthetic: coefficient variable out of range");
    }
    for (const auto& [copy, source] : spec.duplicate_map) {
        if (copy < 1 || copy > spec.n_cols || source < 1 || source > spec.n_cols)
            throw ConfigError("synthetic: duplicate columns out of range");
        if (spec.duplicate_map.count(source))
            throw ConfigError("synthetic: duplicate source is itself a copy");
    }

    Rng rng(spec.seed);
    std::vector<std::vector<double>> cols(spec.n_cols);
    for (int j = 0; j < spec.n_cols; ++j) {
        cols[j].resize(spec.n_rows);
        for (int i = 0; i < spec.n_rows; ++i)
            cols[j][i] = rng.uniform(spec.value_lo, spec.value_hi);
    }

    std::vector<double> target_values(spec.n_rows);
    for (int i = 0; i < spec.n_rows; ++i) {
        double v = rng.uniform(spec.noise_lo, spec.noise_hi);
        for (const auto& [var, coef] : spec.coefficients) v += coef * cols[var - 1][i];
        target_values[i] = v;
    }

    // Duplicates overwrite after the target is formed, so the copies carry
    // none of their original draw.
    for (const auto& [copy, source] : spec.duplicate_map) cols[copy - 1] = cols[source - 1];

    std::vector<std::string> names(spec.n_cols);
    std::vector<ColumnKind> kinds(spec.n_cols, ColumnKind::continuous());
    for (int j = 0; j < spec.n_cols; ++j) names[j] = "X" + std::to_string(j + 1);

    LoadedTable out;
    out.dataset = Dataset(std::move(names), std::move(cols), std::move(kinds));
    out.target = Target::continuous(std::move(target_values));
    return out;
}

std::optional<double> coefficient_of_variation(std::span<const double> xs) {
    if (xs.size() < 2) return std::nullopt;
    double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    if (mean == 0.0) return std::nullopt;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    double sd = std::sqrt(ss / (xs.size() - 1));
    return sd / std::abs(mean);
}

double quantile(std::vector<double> xs, double p) {
    if (xs.empty()) throw ConfigError("quantile: empty sample");
    std::sort(xs.begin(), xs.end());
    if (p <= 0.0) return xs.front();
    if (p >= 1.0) return xs.back();
    double h = (xs.size() - 1) * p;
    std::size_t lo = static_cast<std::size_t>(std::floor(h));
    double frac = h - lo;
    if (lo + 1 >= xs.size()) return xs.back();
    return xs[lo] + frac * (xs[lo + 1] - xs[lo]);
}

namespace {

constexpr std::uint64_t kSignatureFitCap = 1000;

// Per-signature holdout metric: MSE for regression, AUC for classification.
double signature_holdout_score(const Dataset& train_ds, const Target& train_t,
                               const Dataset& hold_ds, const Target& hold_t,
                               const std::vector<int>& vars, bool classification) {
    Eigen::MatrixXd design = build_design(train_ds, vars);
    Eigen::MatrixXd hold_design = build_design(hold_ds, vars);
    Eigen::VectorXd y =
        Eigen::Map<const Eigen::VectorXd>(train_t.values.data(), train_t.size());
    if (!classification) {
        LinearFit fit = ols_fit(design, y);
        Eigen::VectorXd pred = hold_design * fit.coefficients;
        std::vector<double> yhat(pred.data(), pred.data() + pred.size());
        return mse(hold_t.values, yhat);
    }
    LogisticFit fit = logistic_fit(design, y);
    Eigen::VectorXd eta = hold_design * fit.coefficients;
    std::vector<double> prob(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) prob[i] = 1.0 / (1.0 + std::exp(-eta(i)));
    return auc(hold_t.values, prob);
}

} // namespace

ProtocolResult run_protocol(const Dataset& ds, const Target& target, int reps,
                            std::uint64_t seed, const ProtocolGrid& grid) {
    if (reps < 1) throw ConfigError("protocol: reps must be >= 1");
    const bool classification = target.is_binary();

    ProtocolResult result;
    result.summary.multiplicity_histogram.assign(10, 0);

    for (int rep = 0; rep < reps; ++rep) {
        std::uint64_t rep_seed = Rng::derive_seed(seed, static_cast<std::uint64_t>(rep));

        // Stratified 50/50 split via a 2-fold assignment.
        auto halves = make_stratified_folds(target, 2, rep_seed);
        const std::vector<int>& train_rows = halves[0];
        const std::vector<int>& hold_rows = halves[1];
        Dataset train_ds = ds.subset_rows(train_rows);
        Target train_t = target.subset(train_rows);
        Dataset hold_ds = ds.subset_rows(hold_rows);
        Target hold_t = target.subset(hold_rows);

        CvConfig cv_cfg;
        cv_cfg.kfolds = grid.kfolds;
        cv_cfg.alphas = grid.alphas;
        cv_cfg.max_ks = grid.max_ks;
        cv_cfg.task = classification ? Task::Classification : Task::Regression;
        cv_cfg.seed = Rng::derive_seed(rep_seed, 1);
        CvResult cv = cv_ses(train_ds, train_t, cv_cfg, TestSpec::auto_select());

        SesConfig ses_cfg;
        ses_cfg.threshold = cv.best_alpha;
        ses_cfg.max_k = cv.best_max_k;
        SesOutput out = ses_run(train_ds, train_t, ses_cfg);

        RepetitionResult rr;
        rr.rep = rep;
        rr.chosen_alpha = cv.best_alpha;
        rr.chosen_max_k = cv.best_max_k;
        rr.selected_count = static_cast<int>(out.selected_vars.size());
        rr.signature_count = out.signature_count;

        // Uniform subsample of the signature space beyond the fitting cap.
        std::uint64_t to_fit = std::min(out.signature_count, kSignatureFitCap);
        for (std::uint64_t i = 0; i < to_fit; ++i) {
            std::uint64_t idx =
                out.signature_count <= kSignatureFitCap
                    ? i
                    : (i * out.signature_count) / kSignatureFitCap;
            std::vector<int> sig = signature_at(out, idx);
            rr.performances.push_back(signature_holdout_score(
                train_ds, train_t, hold_ds, hold_t, sig, classification));
        }
        rr.cv_of_performances = coefficient_of_variation(rr.performances);

        std::uint64_t count = std::max<std::uint64_t>(rr.signature_count, 1);
        std::size_t bin = count >= 10 ? 9 : static_cast<std::size_t>(count - 1);
        result.summary.multiplicity_histogram[bin]++;
        result.repetitions.push_back(std::move(rr));
    }

    std::vector<double> cvs;
    for (const auto& rr : result.repetitions)
        if (rr.cv_of_performances) cvs.push_back(*rr.cv_of_performances);
    result.summary.defined_cv_count = static_cast<int>(cvs.size());
    if (!cvs.empty()) {
        result.summary.cv_q025 = quantile(cvs, 0.025);
        result.summary.cv_median = quantile(cvs, 0.5);
        result.summary.cv_q975 = quantile(cvs, 0.975);
    }
    return result;
}

} // namespace ses
