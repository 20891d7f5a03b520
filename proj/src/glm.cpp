#include "gazelab/glm.hpp"

#include <cmath>
#include <sstream>

namespace gazelab {

double softplus(double x) {
    if (x > 35.0) return x;
    if (x < -35.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

namespace {

// The residual y - p written so that flipping the response negates it
// bitwise: p and its complement are evaluated by the same function at
// mirrored arguments, never as 1 - p.
struct LogisticState {
    Eigen::VectorXd p;          // sigma(eta)
    Eigen::VectorXd complement; // sigma(-eta)
    Eigen::VectorXd weight;     // p * complement
    Eigen::VectorXd residual;   // y - p
    double deviance = 0.0;

    void update(const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
        const Eigen::Index n = eta.size();
        p.resize(n);
        complement.resize(n);
        weight.resize(n);
        residual.resize(n);
        deviance = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            p[i] = logistic(eta[i]);
            complement[i] = logistic(-eta[i]);
            weight[i] = p[i] * complement[i];
            residual[i] = y[i] == 1.0 ? complement[i] : -p[i];
            deviance += 2.0 * (y[i] == 1.0 ? softplus(-eta[i]) : softplus(eta[i]));
        }
    }
};

void check_full_rank(const ModelFrame& frame) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(frame.design);
    const Eigen::Index rank = qr.rank();
    const Eigen::Index q = frame.design.cols();
    if (rank == q) return;
    // Pivot order: the trailing q - rank pivots mark dependent columns.
    const auto& perm = qr.colsPermutation().indices();
    std::ostringstream msg;
    msg << "design matrix is rank deficient (rank " << rank << " of " << q
        << "); collinear columns:";
    for (Eigen::Index k = rank; k < q; ++k)
        msg << " '" << frame.column_names[static_cast<std::size_t>(perm[k])] << "'";
    throw SingularityError(msg.str());
}

}  // namespace

FitResult fit_irls(const ModelFrame& frame, const IrlsOptions& options) {
    const Eigen::MatrixXd& x = frame.design;
    const Eigen::VectorXd& y = frame.response;
    const Eigen::Index q = x.cols();
    if (x.rows() == 0) throw EmptyInputError("fit_irls: empty frame");
    check_full_rank(frame);

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(q);
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(x.rows());
    LogisticState state;
    state.update(eta, y);

    FitResult fit;
    fit.names = frame.column_names;
    fit.deviance_trace.push_back(state.deviance);
    bool converged = false;
    int iter = 0;
    int polish = 0;
    double score_norm = (x.transpose() * state.residual).cwiseAbs().maxCoeff();

    for (; iter < options.max_iterations; ++iter) {
        if (score_norm < options.score_tolerance && polish >= 2) break;
        if (score_norm < 1e-13) break;

        const Eigen::MatrixXd xtwx =
            x.transpose() * state.weight.asDiagonal() * x;
        const Eigen::VectorXd score = x.transpose() * state.residual;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(xtwx);
        if (ldlt.info() != Eigen::Success)
            throw SingularityError("fit_irls: weighted normal equations are singular");
        const Eigen::VectorXd step = ldlt.solve(score);

        // Step-halving keeps the deviance non-increasing.
        const double old_deviance = state.deviance;
        double scale = 1.0;
        Eigen::VectorXd candidate;
        for (int half = 0; half < 30; ++half) {
            candidate = beta + scale * step;
            state.update(x * candidate, y);
            if (state.deviance <= old_deviance * (1.0 + 1e-14) + 1e-300) break;
            scale *= 0.5;
        }
        beta = candidate;
        fit.deviance_trace.push_back(state.deviance);
        score_norm = (x.transpose() * state.residual).cwiseAbs().maxCoeff();

        const double rel_change =
            std::abs(old_deviance - state.deviance) / (std::abs(old_deviance) + 1e-300);
        if (score_norm < options.score_tolerance) {
            converged = true;
            ++polish;  // a couple of extra Newton steps sharpen the score to ~0
        } else if (rel_change < options.deviance_tolerance) {
            converged = true;
            break;
        }
        if (beta.cwiseAbs().maxCoeff() > options.separation_bound && !converged)
            throw SeparationError(
                "fit_irls: coefficients exceed " +
                std::to_string(options.separation_bound) +
                " without convergence; the data are likely perfectly separated");
    }
    if (score_norm < options.score_tolerance) converged = true;
    if (!converged)
        throw ConvergenceError("fit_irls: no convergence after " +
                               std::to_string(options.max_iterations) +
                               " iterations (score max-norm " + std::to_string(score_norm) + ")");

    fit.coefficients = beta;
    const Eigen::MatrixXd xtwx = x.transpose() * state.weight.asDiagonal() * x;
    fit.covariance_model =
        Eigen::LDLT<Eigen::MatrixXd>(xtwx).solve(Eigen::MatrixXd::Identity(q, q));
    fit.log_likelihood = -0.5 * state.deviance;
    fit.iterations = iter;
    fit.converged = converged;
    return fit;
}

FitResult fit_lag(const ModelFrame& frame, const IrlsOptions& options) {
    if (!frame.has_lag)
        throw UsageError("fit_lag requires a frame built with lag=true");
    return fit_irls(frame, options);
}

}  // namespace gazelab
