#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "ses/cross_validation.hpp"
#include "ses/dataset.hpp"

namespace ses {

// Recipe for the simulated regression data set: uniform predictors, a linear
// target with uniform noise, and exact duplicate columns that create
// equivalent signatures. Column numbers are 1-based and match the generated
// names X1..Xn.
struct SyntheticSpec {
    int n_rows = 1000;
    int n_cols = 300;
    std::map<int, double> coefficients = {{10, 3.0}, {200, 2.0}, {20, 3.0}};
    std::map<int, int> duplicate_map = {{15, 10}, {250, 200}, {230, 200}}; // copy <- source
    double value_lo = 1.0, value_hi = 100.0;
    double noise_lo = 0.0, noise_hi = 10.0;
    std::uint64_t seed = 12345678;
};

// Draws the predictors, forms the target from the original columns, then
// overwrites the duplicate columns, in that order.
LoadedTable generate_synthetic(const SyntheticSpec& spec);

struct ProtocolGrid {
    std::vector<double> alphas = {0.01, 0.05, 0.1};
    std::vector<int> max_ks = {3, 5};
    int kfolds = 10;
};

struct RepetitionResult {
    int rep = 0;
    double chosen_alpha = 0.0;
    int chosen_max_k = 0;
    int selected_count = 0;
    std::uint64_t signature_count = 0;
    std::vector<double> performances; // per-signature holdout metric (MSE or AUC)
    std::optional<double> cv_of_performances;
};

struct ProtocolSummary {
    double cv_q025 = 0.0, cv_median = 0.0, cv_q975 = 0.0;
    int defined_cv_count = 0;
    std::vector<int> multiplicity_histogram; // bins: 1..9 signatures, then 10+
};

struct ProtocolResult {
    std::vector<RepetitionResult> repetitions;
    ProtocolSummary summary;
};

// Repeated-split protocol: per repetition a seeded stratified 50/50 split,
// grid-search CV on the training half, a final SES run with the chosen
// configuration, one predictive model per enumerated signature (capped at
// 1000, uniformly subsampled beyond) scored on the holdout half, and the
// coefficient of variation of those scores.
ProtocolResult run_protocol(const Dataset& ds, const Target& target, int reps,
                            std::uint64_t seed, const ProtocolGrid& grid);

// Sample standard deviation (n-1) over |mean|; nullopt when fewer than two
// values or zero mean.
std::optional<double> coefficient_of_variation(std::span<const double> xs);

// Interpolated sample quantile (R type 7).
double quantile(std::vector<double> xs, double p);

} // namespace ses
