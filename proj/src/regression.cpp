#include "ses/regression.hpp"

#include <cmath>
#include <stdexcept>

namespace ses {

namespace {

constexpr double kSeparationCoef = 30.0;
constexpr double kWeightFloor = 1e-12;
constexpr double kMuClamp = 1e-10;

double clamp_mu(double mu) {
    if (mu < kMuClamp) return kMuClamp;
    if (mu > 1.0 - kMuClamp) return 1.0 - kMuClamp;
    return mu;
}

double bernoulli_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& eta) {
    double dev = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        double mu = clamp_mu(1.0 / (1.0 + std::exp(-eta(i))));
        dev += y(i) == 1.0 ? -2.0 * std::log(mu) : -2.0 * std::log(1.0 - mu);
    }
    return dev;
}

constexpr double kRankThreshold = 1e-10;

// Least squares restricted to the pivoted full-rank columns; dropped columns
// get a zero coefficient. ColPivHouseholderQR::solve cannot be used directly:
// its internal nonzeroPivots count follows a machine-epsilon heuristic fixed
// at factorization time, and a borderline duplicate column then divides by a
// ~1e-15 pivot.
Eigen::VectorXd rank_limited_lstsq(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                                   int& rank_out) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
    qr.setThreshold(kRankThreshold);
    qr.compute(design);
    const int rank = static_cast<int>(qr.rank());
    rank_out = rank;
    Eigen::VectorXd c = qr.householderQ().adjoint() * y;
    Eigen::VectorXd z = c.head(rank);
    qr.matrixR().topLeftCorner(rank, rank).triangularView<Eigen::Upper>().solveInPlace(z);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(design.cols());
    const auto& perm = qr.colsPermutation().indices();
    for (int i = 0; i < rank; ++i) beta(perm(i)) = z(i);
    return beta;
}

} // namespace

LinearFit ols_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
    if (design.rows() != y.size())
        throw std::invalid_argument("ols_fit: design/response length mismatch");
    LinearFit fit;
    fit.coefficients = rank_limited_lstsq(design, y, fit.rank);
    Eigen::VectorXd resid = y - design * fit.coefficients;
    fit.rss = resid.squaredNorm();
    fit.df_residual = static_cast<int>(design.rows()) - fit.rank;
    return fit;
}

LogisticFit logistic_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                         int max_iter, double tol) {
    if (design.rows() != y.size())
        throw std::invalid_argument("logistic_fit: design/response length mismatch");
    const Eigen::Index n = design.rows();
    const Eigen::Index p = design.cols();

    LogisticFit fit;
    fit.coefficients = Eigen::VectorXd::Zero(p);
    {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
        qr.setThreshold(kRankThreshold);
        qr.compute(design);
        fit.rank = static_cast<int>(qr.rank());
    }

    bool has0 = false, has1 = false;
    for (Eigen::Index i = 0; i < n; ++i) (y(i) == 1.0 ? has1 : has0) = true;
    if (!has0 || !has1) {
        // Single-class response: the likelihood is maximized in the limit,
        // deviance 0, flagged as separable.
        fit.deviance = 0.0;
        fit.converged = false;
        fit.separable = true;
        return fit;
    }

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
    double dev_old = bernoulli_deviance(y, eta);

    for (int iter = 1; iter <= max_iter; ++iter) {
        Eigen::VectorXd sw(n), z(n);
        bool weight_underflow = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            double mu = clamp_mu(1.0 / (1.0 + std::exp(-eta(i))));
            double w = mu * (1.0 - mu);
            if (w < kWeightFloor) weight_underflow = true;
            sw(i) = std::sqrt(w);
            z(i) = eta(i) + (y(i) - mu) / w;
        }
        if (weight_underflow) {
            fit.separable = true;
            break;
        }

        Eigen::MatrixXd xw = sw.asDiagonal() * design;
        Eigen::VectorXd zw = sw.asDiagonal() * z;
        int wrank = 0;
        Eigen::VectorXd beta_new = rank_limited_lstsq(xw, zw, wrank);

        if (beta_new.array().abs().maxCoeff() > kSeparationCoef) {
            // Keep the last stable iterate.
            fit.separable = true;
            break;
        }

        Eigen::VectorXd eta_new = design * beta_new;
        double dev_new = bernoulli_deviance(y, eta_new);

        // Step-halving guards against occasional deviance increases.
        for (int h = 0; h < 20 && dev_new > dev_old + 1e-12; ++h) {
            beta_new = 0.5 * (beta + beta_new);
            eta_new = design * beta_new;
            dev_new = bernoulli_deviance(y, eta_new);
        }

        beta = beta_new;
        eta = eta_new;
        fit.iterations = iter;
        if (std::abs(dev_new - dev_old) < tol) {
            fit.converged = true;
            dev_old = dev_new;
            break;
        }
        dev_old = dev_new;
    }

    fit.coefficients = beta;
    fit.deviance = dev_old;
    if (fit.separable) fit.converged = false;
    return fit;
}

double predict_linear(const LinearFit& fit, const Eigen::VectorXd& design_row) {
    if (design_row.size() != fit.coefficients.size())
        throw std::invalid_argument("predict_linear: dimension mismatch");
    return fit.coefficients.dot(design_row);
}

double predict_logistic(const LogisticFit& fit, const Eigen::VectorXd& design_row) {
    if (design_row.size() != fit.coefficients.size())
        throw std::invalid_argument("predict_logistic: dimension mismatch");
    double eta = fit.coefficients.dot(design_row);
    return 1.0 / (1.0 + std::exp(-eta));
}

} // namespace ses
