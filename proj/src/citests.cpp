#include "ses/citests.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ses/distributions.hpp"
#include "ses/errors.hpp"
#include "ses/regression.hpp"

namespace ses {

namespace {

constexpr double kResidualVarianceFloor = 1e-12;
constexpr double kCorrelationClamp = 1.0 - 1e-12;

void require_continuous_columns(const Dataset& ds, int x, std::span<const int> cond,
                                const char* test) {
    if (ds.kind(x).is_categorical())
        throw ConfigError(std::string(test) + ": predictor '" + ds.name(x) +
                          "' is categorical");
    for (int c : cond)
        if (ds.kind(c).is_categorical())
            throw ConfigError(std::string(test) + ": conditioning column '" + ds.name(c) +
                              "' is categorical");
}

// Residuals of v ~ [1, cond-columns].
Eigen::VectorXd residualize(const Dataset& ds, const std::vector<double>& v,
                            std::span<const int> cond) {
    const int n = ds.n_rows();
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(v.data(), n);
    Eigen::MatrixXd design(n, 1 + cond.size());
    design.col(0).setOnes();
    for (std::size_t j = 0; j < cond.size(); ++j)
        design.col(1 + j) = Eigen::Map<const Eigen::VectorXd>(ds.column(cond[j]).data(), n);
    LinearFit fit = ols_fit(design, y);
    return y - design * fit.coefficients;
}

double centered_sum_squares(const std::vector<double>& v) {
    double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return ss;
}

TestResult fisher_on_vectors(const Dataset& ds, const std::vector<double>& t, int x,
                             std::span<const int> cond) {
    const int n = ds.n_rows();
    const double effective = static_cast<double>(n) - static_cast<double>(cond.size()) - 3.0;
    if (effective < 1.0) return TestResult::invalid();
    auto r = partial_correlation(ds, x, t, cond);
    if (!r) return TestResult::invalid();
    double rc = std::clamp(*r, -kCorrelationClamp, kCorrelationClamp);
    double z = std::sqrt(effective) * 0.5 * std::log((1.0 + rc) / (1.0 - rc));
    return TestResult::of(z, normal_two_sided_p(z), effective);
}

} // namespace

std::string TestSpec::name() const {
    switch (kind) {
        case TestKind::Auto: return "auto";
        case TestKind::Fisher: return "fisher";
        case TestKind::Spearman: return "spearman";
        case TestKind::GSquare: return "g2";
        case TestKind::LinRegLRT: return "linreg";
        case TestKind::LogisticLRT: return "logistic";
        case TestKind::Custom: return "custom";
    }
    return "unknown";
}

TestSpec TestSpec::from_name(const std::string& name) {
    if (name == "auto") return of(TestKind::Auto);
    if (name == "fisher") return of(TestKind::Fisher);
    if (name == "spearman") return of(TestKind::Spearman);
    if (name == "g2") return of(TestKind::GSquare);
    if (name == "linreg") return of(TestKind::LinRegLRT);
    if (name == "logistic") return of(TestKind::LogisticLRT);
    throw ConfigError("unknown test '" + name +
                      "' (expected fisher, spearman, g2, linreg, logistic or auto)");
}

std::optional<double> partial_correlation(const Dataset& ds, int x,
                                          const std::vector<double>& t,
                                          std::span<const int> cond) {
    const int n = ds.n_rows();
    if (static_cast<int>(t.size()) != n)
        throw ConfigError("partial_correlation: target length mismatch");
    if (n <= static_cast<int>(cond.size()) + 2) return std::nullopt;

    double sxx = centered_sum_squares(ds.column(x));
    double stt = centered_sum_squares(t);
    if (sxx == 0.0 || stt == 0.0) return std::nullopt;

    Eigen::VectorXd ex = residualize(ds, ds.column(x), cond);
    Eigen::VectorXd et = residualize(ds, t, cond);
    double rssx = ex.squaredNorm();
    double rsst = et.squaredNorm();
    // A residual collapsing to numeric noise means x (or t) is an exact
    // linear function of the conditioning set.
    if (rssx <= kResidualVarianceFloor * sxx || rsst <= kResidualVarianceFloor * stt)
        return std::nullopt;

    double r = ex.dot(et) / std::sqrt(rssx * rsst);
    return std::clamp(r, -1.0, 1.0);
}

TestResult fisher_test(const Dataset& ds, const Target& t, int x, std::span<const int> cond) {
    if (!t.is_continuous()) throw ConfigError("fisher: target must be continuous");
    require_continuous_columns(ds, x, cond, "fisher");
    return fisher_on_vectors(ds, t.values, x, cond);
}

std::vector<double> mid_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
        i = j + 1;
    }
    return ranks;
}

TestResult spearman_test(const Dataset& ds, const Target& t, int x, std::span<const int> cond) {
    if (!t.is_continuous()) throw ConfigError("spearman: target must be continuous");
    require_continuous_columns(ds, x, cond, "spearman");

    // Rank-transform every involved column, then reuse the Fisher machinery.
    std::vector<std::string> names;
    std::vector<std::vector<double>> cols;
    std::vector<ColumnKind> kinds;
    names.push_back("x");
    cols.push_back(mid_ranks(ds.column(x)));
    kinds.push_back(ColumnKind::continuous());
    std::vector<int> rcond;
    for (std::size_t j = 0; j < cond.size(); ++j) {
        names.push_back("c" + std::to_string(j));
        cols.push_back(mid_ranks(ds.column(cond[j])));
        kinds.push_back(ColumnKind::continuous());
        rcond.push_back(static_cast<int>(j) + 1);
    }
    Dataset ranked(std::move(names), std::move(cols), std::move(kinds));
    return fisher_on_vectors(ranked, mid_ranks(t.values), 0, rcond);
}

TestResult g2_test(const Dataset& ds, const Target& t, int x, std::span<const int> cond) {
    if (t.is_continuous()) throw ConfigError("g2: target must be categorical or binary");
    if (!ds.kind(x).is_categorical())
        throw ConfigError("g2: predictor '" + ds.name(x) + "' is not categorical");
    for (int c : cond)
        if (!ds.kind(c).is_categorical())
            throw ConfigError("g2: conditioning column '" + ds.name(c) + "' is not categorical");

    const int n = ds.n_rows();
    const int nx = ds.kind(x).level_count;
    const int nt = t.level_count;
    long long n_slices = 1;
    for (int c : cond) n_slices *= ds.kind(c).level_count;

    const long long n_cells = n_slices * nx * nt;
    if (static_cast<long long>(n) < 5 * n_cells) return TestResult::invalid();

    // counts[slice][xi][ti]
    std::vector<double> counts(static_cast<std::size_t>(n_cells), 0.0);
    const auto& xcol = ds.column(x);
    for (int i = 0; i < n; ++i) {
        long long slice = 0;
        for (int c : cond)
            slice = slice * ds.kind(c).level_count + static_cast<long long>(ds.column(c)[i]);
        long long idx = (slice * nx + static_cast<long long>(xcol[i])) * nt +
                        static_cast<long long>(t.values[i]);
        counts[static_cast<std::size_t>(idx)] += 1.0;
    }

    double g2 = 0.0;
    long long zero_slices = 0;
    std::vector<double> row(nx), col(nt);
    for (long long s = 0; s < n_slices; ++s) {
        const double* slice = counts.data() + s * nx * nt;
        double total = 0.0;
        std::fill(row.begin(), row.end(), 0.0);
        std::fill(col.begin(), col.end(), 0.0);
        for (int a = 0; a < nx; ++a)
            for (int b = 0; b < nt; ++b) {
                double o = slice[a * nt + b];
                total += o;
                row[a] += o;
                col[b] += o;
            }
        if (total == 0.0) {
            ++zero_slices;
            continue;
        }
        for (int a = 0; a < nx; ++a)
            for (int b = 0; b < nt; ++b) {
                double o = slice[a * nt + b];
                if (o > 0.0) g2 += o * std::log(o * total / (row[a] * col[b]));
            }
    }
    g2 *= 2.0;

    double dof = static_cast<double>(nx - 1) * static_cast<double>(nt - 1) *
                 static_cast<double>(n_slices - zero_slices);
    if (dof <= 0.0) return TestResult::invalid();
    return TestResult::of(g2, chi_squared_sf(g2, dof), dof);
}

Eigen::MatrixXd build_design(const Dataset& ds, std::span<const int> vars) {
    const int n = ds.n_rows();
    int width = 1;
    for (int v : vars)
        width += ds.kind(v).is_categorical() ? ds.kind(v).level_count - 1 : 1;
    Eigen::MatrixXd design(n, width);
    design.col(0).setOnes();
    int col = 1;
    for (int v : vars) {
        const auto& c = ds.column(v);
        if (ds.kind(v).is_categorical()) {
            for (int lvl = 1; lvl < ds.kind(v).level_count; ++lvl) {
                for (int i = 0; i < n; ++i)
                    design(i, col) = c[i] == static_cast<double>(lvl) ? 1.0 : 0.0;
                ++col;
            }
        } else {
            design.col(col) = Eigen::Map<const Eigen::VectorXd>(c.data(), n);
            ++col;
        }
    }
    return design;
}

TestResult linreg_lrt_test(const Dataset& ds, const Target& t, int x,
                           std::span<const int> cond) {
    if (!t.is_continuous()) throw ConfigError("linreg: target must be continuous");
    const int n = ds.n_rows();
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(t.values.data(), n);

    std::vector<int> with_x;
    with_x.push_back(x);
    with_x.insert(with_x.end(), cond.begin(), cond.end());

    LinearFit fit0 = ols_fit(build_design(ds, cond), y);
    LinearFit fit1 = ols_fit(build_design(ds, with_x), y);

    int d = fit1.rank - fit0.rank;
    int df1 = fit1.df_residual;
    if (d <= 0 || df1 <= 0) return TestResult::invalid();

    double num = (fit0.rss - fit1.rss) / d;
    if (num < 0.0) num = 0.0;
    double denom = fit1.rss / df1;
    double f;
    if (denom <= 0.0)
        f = num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    else
        f = num / denom;
    return TestResult::of(f, f_sf(f, d, df1), d);
}

TestResult logistic_lrt_test(const Dataset& ds, const Target& t, int x,
                             std::span<const int> cond) {
    if (!t.is_binary()) throw ConfigError("logistic: target must be binary");
    const int n = ds.n_rows();
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(t.values.data(), n);

    std::vector<int> with_x;
    with_x.push_back(x);
    with_x.insert(with_x.end(), cond.begin(), cond.end());

    LogisticFit fit0 = logistic_fit(build_design(ds, cond), y);
    if (fit0.separable) return TestResult::invalid();
    LogisticFit fit1 = logistic_fit(build_design(ds, with_x), y);
    if (fit1.separable) return TestResult::invalid();

    int d = fit1.rank - fit0.rank;
    if (d <= 0) return TestResult::invalid();
    double stat = std::max(0.0, fit0.deviance - fit1.deviance);
    return TestResult::of(stat, chi_squared_sf(stat, d), d);
}

TestSpec dispatch_test(const Target& target, const Dataset& ds, const TestSpec& requested) {
    switch (requested.kind) {
        case TestKind::Auto: {
            if (target.is_binary()) return TestSpec::of(TestKind::LogisticLRT);
            if (target.is_continuous())
                return ds.all_continuous() ? TestSpec::of(TestKind::Fisher)
                                           : TestSpec::of(TestKind::LinRegLRT);
            if (ds.all_categorical()) return TestSpec::of(TestKind::GSquare);
            throw ConfigError(
                "auto: no in-scope test for a multi-level categorical target with "
                "continuous predictors");
        }
        case TestKind::Fisher:
        case TestKind::Spearman:
            if (!target.is_continuous())
                throw ConfigError(requested.name() + ": requires a continuous target");
            if (!ds.all_continuous())
                throw ConfigError(requested.name() + ": requires all-continuous predictors");
            return requested;
        case TestKind::GSquare:
            if (target.is_continuous())
                throw ConfigError("g2: requires a categorical or binary target");
            if (!ds.all_categorical())
                throw ConfigError("g2: requires all-categorical predictors");
            return requested;
        case TestKind::LinRegLRT:
            if (!target.is_continuous())
                throw ConfigError("linreg: requires a continuous target");
            return requested;
        case TestKind::LogisticLRT:
            if (!target.is_binary()) throw ConfigError("logistic: requires a binary target");
            return requested;
        case TestKind::Custom:
            if (!requested.custom) throw ConfigError("custom test without a function");
            return requested;
    }
    throw ConfigError("unreachable test kind");
}

CiTestFn make_test_function(const TestSpec& resolved) {
    switch (resolved.kind) {
        case TestKind::Fisher: return fisher_test;
        case TestKind::Spearman: return spearman_test;
        case TestKind::GSquare: return g2_test;
        case TestKind::LinRegLRT: return linreg_lrt_test;
        case TestKind::LogisticLRT: return logistic_lrt_test;
        case TestKind::Custom: return resolved.custom;
        case TestKind::Auto: break;
    }
    throw ConfigError("make_test_function: spec must be resolved first");
}

} // namespace ses
