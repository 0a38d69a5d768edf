#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ses/dataset.hpp"

namespace ses {

// Outcome of one conditional-independence test ind(X, T | cond). Degenerate
// evaluations (insufficient samples, zero variance, separation) come back
// with valid=false and the conservative p = 1.
struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    double dof = 0.0;
    bool valid = false;

    static TestResult invalid() { return {}; }
    static TestResult of(double stat, double p, double dof) {
        return {stat, p, dof, true};
    }
};

using CiTestFn =
    std::function<TestResult(const Dataset&, const Target&, int, std::span<const int>)>;

enum class TestKind { Auto, Fisher, Spearman, GSquare, LinRegLRT, LogisticLRT, Custom };

struct TestSpec {
    TestKind kind = TestKind::Auto;
    CiTestFn custom; // used when kind == Custom

    std::string name() const;
    // Accepts: auto, fisher, spearman, g2, linreg, logistic.
    static TestSpec from_name(const std::string& name);
    static TestSpec auto_select() { return {TestKind::Auto, nullptr}; }
    static TestSpec of(TestKind k) { return {k, nullptr}; }
};

// Partial correlation of column x and vector t given the cond columns,
// computed by correlating the OLS residuals of x ~ cond and t ~ cond
// (intercept included). nullopt when a residual has (numerically) zero
// variance; the raw value is returned unclamped.
std::optional<double> partial_correlation(const Dataset& ds, int x,
                                          const std::vector<double>& t,
                                          std::span<const int> cond);

TestResult fisher_test(const Dataset& ds, const Target& t, int x, std::span<const int> cond);
TestResult spearman_test(const Dataset& ds, const Target& t, int x, std::span<const int> cond);
TestResult g2_test(const Dataset& ds, const Target& t, int x, std::span<const int> cond);
TestResult linreg_lrt_test(const Dataset& ds, const Target& t, int x, std::span<const int> cond);
TestResult logistic_lrt_test(const Dataset& ds, const Target& t, int x, std::span<const int> cond);

// Resolves Auto to a concrete test for the given task and verifies that an
// explicit request is compatible with the data; throws ConfigError otherwise.
TestSpec dispatch_test(const Target& target, const Dataset& ds, const TestSpec& requested);

// Callable for the resolved spec (Custom passes through).
CiTestFn make_test_function(const TestSpec& resolved);

// Design matrix over the given rows: intercept column first, then each
// variable expanded (categorical columns become level_count-1 indicators
// with level 0 as reference).
Eigen::MatrixXd build_design(const Dataset& ds, std::span<const int> vars);

// Mid-ranks (1-based, ties averaged).
std::vector<double> mid_ranks(const std::vector<double>& v);

} // namespace ses
