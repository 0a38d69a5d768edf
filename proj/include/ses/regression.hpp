#pragma once

#include <Eigen/Dense>
#include <vector>

namespace ses {

// Ordinary least squares result. Coefficients are full-length: columns
// dropped for rank deficiency carry a zero coefficient, so prediction is a
// plain dot product.
struct LinearFit {
    Eigen::VectorXd coefficients; // intercept first
    double rss = 0.0;
    int df_residual = 0; // n - rank
    int rank = 0;
};

// IRLS logistic regression result (Bernoulli likelihood, logit link).
struct LogisticFit {
    Eigen::VectorXd coefficients;
    double deviance = 0.0; // -2 log-likelihood
    bool converged = false;
    bool separable = false; // perfect separation / single-class degeneracy
    int iterations = 0;
    int rank = 0;
};

// Least-squares fit of y on design (intercept must already be a column).
// Rank-deficient designs are handled by column pivoting: dependent columns
// are dropped and reported through `rank`.
LinearFit ols_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& y);

// IRLS maximization of the Bernoulli log-likelihood. Stops when the deviance
// change drops below `tol` or after `max_iter` iterations. Separation
// (diverging coefficients or underflowing working weights) ends the fit at
// the last stable iterate with `separable` set.
LogisticFit logistic_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                         int max_iter = 25, double tol = 1e-8);

double predict_linear(const LinearFit& fit, const Eigen::VectorXd& design_row);
double predict_logistic(const LogisticFit& fit, const Eigen::VectorXd& design_row);

} // namespace ses
