#include "gazelab/gee.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "gazelab/glm.hpp"
#include "gazelab/util/parallel.hpp"

namespace gazelab {

namespace {

void validate_spec(const WorkingCorrelation& spec) {
    if (std::abs(spec.phi) >= 1.0)
        throw DomainError("working correlation requires |phi| < 1, got " +
                          std::to_string(spec.phi));
    if (spec.ridge < 0.0) throw DomainError("ridge must be nonnegative");
    if (spec.kind == CorrelationKind::toeplitz_band && spec.bandwidth < 1)
        throw DomainError("toeplitz_band requires bandwidth >= 1");
}

}  // namespace

CorrelationMatrix build_correlation_detail(const WorkingCorrelation& spec, Eigen::Index t_len) {
    validate_spec(spec);
    if (t_len < 1) throw DomainError("correlation matrix needs T >= 1");

    CorrelationMatrix out;
    Eigen::MatrixXd& r = out.r;
    r.setIdentity(t_len, t_len);
    switch (spec.kind) {
        case CorrelationKind::independence:
            break;
        case CorrelationKind::ar1:
            for (Eigen::Index l = 0; l < t_len; ++l)
                for (Eigen::Index m = 0; m < l; ++m)
                    r(l, m) = r(m, l) = std::pow(spec.phi, static_cast<double>(l - m));
            break;
        case CorrelationKind::toeplitz_band:
            for (Eigen::Index l = 0; l < t_len; ++l)
                for (Eigen::Index m = 0; m < l; ++m)
                    if (l - m <= spec.bandwidth) r(l, m) = r(m, l) = spec.phi;
            break;
    }
    r.diagonal().array() += spec.ridge;

    // Backstop: floor eigenvalues when the ridged matrix is not PD.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r);
    const double floor = spec.ridge > 0.0 ? spec.ridge : 1e-8;
    if (eig.eigenvalues().minCoeff() <= 0.0) {
        Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(floor);
        Eigen::MatrixXd floored =
            eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
        floored = 0.5 * (floored + floored.transpose()).eval();
        out.max_deviation = (floored - r).cwiseAbs().maxCoeff();
        out.floored = true;
        r = std::move(floored);
    }
    return out;
}

Eigen::MatrixXd build_correlation(const WorkingCorrelation& spec, Eigen::Index t_len) {
    return build_correlation_detail(spec, t_len).r;
}

PhiEstimate estimate_phi_ar1(const std::vector<ClusterBlock>& blocks) {
    double numerator = 0.0;
    double denominator = 0.0;
    for (const ClusterBlock& block : blocks) {
        const Eigen::VectorXd& r = block.residuals;
        for (Eigen::Index t = 1; t < r.size(); ++t) numerator += r[t] * r[t - 1];
        denominator += static_cast<double>(r.size() - 1);
    }
    if (denominator <= 0.0)
        throw DegreesOfFreedomError(
            "estimate_phi_ar1 is undefined: every cluster has a single observation");
    PhiEstimate est;
    est.value = numerator / denominator;
    if (est.value >= 0.999) {
        est.value = 0.999;
        est.clamped = true;
    } else if (est.value <= -0.999) {
        est.value = -0.999;
        est.clamped = true;
    }
    return est;
}

double estimate_scale(const std::vector<ClusterBlock>& blocks, Eigen::Index q) {
    double sum_sq = 0.0;
    Eigen::Index n = 0;
    for (const ClusterBlock& block : blocks) {
        sum_sq += block.residuals.squaredNorm();
        n += block.residuals.size();
    }
    if (n <= q)
        throw DegreesOfFreedomError("estimate_scale needs N > q, got N = " + std::to_string(n) +
                                    ", q = " + std::to_string(q));
    return sum_sq / static_cast<double>(n - q);
}

Eigen::MatrixXd sandwich_covariance(const std::vector<SandwichPart>& parts) {
    if (parts.empty()) throw EmptyInputError("sandwich_covariance: no clusters");
    const Eigen::Index q = parts.front().d.cols();
    Eigen::MatrixXd bread = Eigen::MatrixXd::Zero(q, q);
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(q, q);
    for (const SandwichPart& part : parts) {
        Eigen::LDLT<Eigen::MatrixXd> v_ldlt(part.v);
        if (v_ldlt.info() != Eigen::Success)
            throw SingularityError("sandwich_covariance: singular cluster covariance");
        const Eigen::MatrixXd vinv_d = v_ldlt.solve(part.d);
        bread.noalias() += part.d.transpose() * vinv_d;
        const Eigen::VectorXd u = vinv_d.transpose() * part.residual;
        meat.noalias() += u * u.transpose();
    }
    Eigen::LDLT<Eigen::MatrixXd> b_ldlt(bread);
    if (b_ldlt.info() != Eigen::Success || !b_ldlt.isPositive())
        throw SingularityError("sandwich_covariance: singular bread matrix B");
    const Eigen::MatrixXd binv_m = b_ldlt.solve(meat);
    Eigen::MatrixXd cov = b_ldlt.solve(binv_m.transpose());
    return 0.5 * (cov + cov.transpose());
}

namespace {

// Applies R^{-1} per cluster length. AR(1) with no ridge uses the analytic
// tridiagonal inverse; everything else goes through dense LLT factors built
// once per distinct length (so apply calls are safe to run in parallel).
class CorrelationSolver {
public:
    CorrelationSolver(const WorkingCorrelation& spec, double phi,
                      const std::vector<Eigen::Index>& lengths)
        : spec_(spec), phi_(phi) {
        spec_.phi = phi;
        identity_ = spec.kind == CorrelationKind::independence && spec.ridge == 0.0;
        analytic_ar1_ = spec.kind == CorrelationKind::ar1 && spec.ridge == 0.0;
        if (identity_ || analytic_ar1_) return;
        for (Eigen::Index t_len : lengths) {
            if (factors_.count(t_len)) continue;
            CorrelationMatrix built = build_correlation_detail(spec_, t_len);
            if (built.floored) {
                floored_ = true;
                max_deviation_ = std::max(max_deviation_, built.max_deviation);
            }
            Eigen::LLT<Eigen::MatrixXd> llt(built.r);
            if (llt.info() != Eigen::Success)
                throw SingularityError("gee_fit: working correlation for T = " +
                                       std::to_string(t_len) + " is singular");
            dense_.emplace(t_len, std::move(built.r));
            factors_.emplace(t_len, std::move(llt));
        }
    }

    Eigen::MatrixXd apply_rinv(const Eigen::MatrixXd& z) const {
        if (identity_) return z;
        if (analytic_ar1_) return ar1_solve(z);
        return factors_.at(z.rows()).solve(z);
    }

    Eigen::MatrixXd dense_r(Eigen::Index t_len) const {
        if (identity_) return Eigen::MatrixXd::Identity(t_len, t_len);
        if (analytic_ar1_) return build_correlation(spec_, t_len);
        return dense_.at(t_len);
    }

    bool floored() const { return floored_; }
    double max_deviation() const { return max_deviation_; }

private:
    Eigen::MatrixXd ar1_solve(const Eigen::MatrixXd& z) const {
        // R^{-1} is tridiagonal: diag (1, 1+phi^2, ..., 1+phi^2, 1) and
        // off-diagonal -phi, all scaled by 1/(1 - phi^2).
        const Eigen::Index t_len = z.rows();
        if (t_len == 1) return z;
        const double phi = phi_;
        const double scale = 1.0 / (1.0 - phi * phi);
        Eigen::MatrixXd out(t_len, z.cols());
        for (Eigen::Index c = 0; c < z.cols(); ++c) {
            out(0, c) = scale * (z(0, c) - phi * z(1, c));
            for (Eigen::Index t = 1; t + 1 < t_len; ++t)
                out(t, c) =
                    scale * (-phi * z(t - 1, c) + (1.0 + phi * phi) * z(t, c) - phi * z(t + 1, c));
            out(t_len - 1, c) = scale * (z(t_len - 1, c) - phi * z(t_len - 2, c));
        }
        return out;
    }

    WorkingCorrelation spec_;
    double phi_;
    bool analytic_ar1_ = false;
    bool identity_ = false;
    bool floored_ = false;
    double max_deviation_ = 0.0;
    std::map<Eigen::Index, Eigen::LLT<Eigen::MatrixXd>> factors_;
    std::map<Eigen::Index, Eigen::MatrixXd> dense_;
};

}  // namespace

FitResult gee_fit(const ModelFrame& frame, const WorkingCorrelation& spec,
                  const GeeOptions& options) {
    validate_spec(spec);
    if (spec.kind == CorrelationKind::toeplitz_band && spec.estimate_phi)
        throw DomainError("phi estimation is not supported for toeplitz_band; fix phi");
    if (frame.clusters.empty()) throw EmptyInputError("gee_fit: empty frame");

    const Eigen::MatrixXd& x = frame.design;
    const Eigen::VectorXd& y = frame.response;
    const Eigen::Index q = x.cols();
    const Eigen::Index n = x.rows();
    const std::size_t n_clusters = frame.clusters.size();

    // GLM coefficients are the natural starting point of the alternation.
    FitResult init = fit_irls(frame);
    Eigen::VectorXd beta = init.coefficients;

    double phi = spec.kind == CorrelationKind::independence ? 0.0 : spec.phi;
    double alpha = 1.0;
    bool phi_clamped = false;
    double moment_phi = 0.0;
    bool have_moment_phi = false;

    std::vector<ClusterBlock> blocks(n_clusters);
    Eigen::VectorXd p(n), weight(n), pearson(n), residual(n);

    auto refresh_residuals = [&]() {
        const Eigen::VectorXd eta = x * beta;
        for (Eigen::Index i = 0; i < n; ++i) {
            p[i] = logistic(eta[i]);
            weight[i] = std::max(p[i] * (1.0 - p[i]), 1e-12);
            residual[i] = y[i] - p[i];
            pearson[i] = residual[i] / std::sqrt(weight[i]);
        }
        for (std::size_t c = 0; c < n_clusters; ++c) {
            const ClusterSpan& span = frame.clusters[c];
            ClusterBlock& block = blocks[c];
            block.subject_id = span.subject_id;
            block.item_id = span.item_id;
            block.start = span.start;
            block.length = span.length;
            block.a_diag = weight.segment(span.start, span.length);
            block.residuals = pearson.segment(span.start, span.length);
        }
    };

    std::vector<Eigen::Index> lengths;
    lengths.reserve(n_clusters);
    for (const ClusterSpan& span : frame.clusters) lengths.push_back(span.length);

    bool converged = false;
    int iter = 0;
    double score_norm = std::numeric_limits<double>::infinity();
    std::vector<Eigen::MatrixXd> bread_parts(n_clusters);
    std::vector<Eigen::VectorXd> score_parts(n_clusters);
    CorrelationSolver solver(spec, phi, lengths);

    for (; iter < options.max_iterations; ++iter) {
        refresh_residuals();
        if (spec.estimate_phi) {
            const PhiEstimate est = estimate_phi_ar1(blocks);
            phi = est.value;
            phi_clamped = est.clamped;
            solver = CorrelationSolver(spec, phi, lengths);
        }
        alpha = estimate_scale(blocks, q);

        parallel_for(n_clusters, options.threads, [&](std::size_t c) {
            const ClusterSpan& span = frame.clusters[c];
            const Eigen::VectorXd sqrt_w =
                weight.segment(span.start, span.length).cwiseSqrt();
            // G = A^{1/2} X, h = Pearson residuals; then
            // D'V^{-1}(y-p) = G' R^{-1} h / alpha and D'V^{-1}D = G' R^{-1} G / alpha.
            Eigen::MatrixXd g =
                sqrt_w.asDiagonal() * x.middleRows(span.start, span.length);
            Eigen::MatrixXd rinv_g = solver.apply_rinv(g);
            bread_parts[c].noalias() = g.transpose() * rinv_g;
            Eigen::VectorXd h = pearson.segment(span.start, span.length);
            score_parts[c].noalias() = rinv_g.transpose() * h;
        });

        Eigen::MatrixXd bread = Eigen::MatrixXd::Zero(q, q);
        Eigen::VectorXd score = Eigen::VectorXd::Zero(q);
        for (std::size_t c = 0; c < n_clusters; ++c) {  // fixed reduction order
            bread += bread_parts[c];
            score += score_parts[c];
        }
        bread /= alpha;
        score /= alpha;

        score_norm = score.cwiseAbs().maxCoeff();
        if (score_norm < options.score_tolerance) {
            converged = true;
            break;
        }
        Eigen::LDLT<Eigen::MatrixXd> ldlt(bread);
        if (ldlt.info() != Eigen::Success)
            throw SingularityError("gee_fit: singular quasi-information matrix");
        beta += ldlt.solve(score);
        if (!beta.allFinite())
            throw SingularityError("gee_fit: coefficient update is not finite");
    }
    if (!converged) {
        std::ostringstream msg;
        msg << "gee_fit: no convergence after " << options.max_iterations
            << " iterations; score max-norm " << score_norm << "; last beta:";
        for (Eigen::Index k = 0; k < q; ++k) msg << ' ' << beta[k];
        throw ConvergenceError(msg.str());
    }

    // Final quantities at the solution.
    refresh_residuals();
    if (spec.kind == CorrelationKind::ar1) {
        bool any_pair = false;
        for (const ClusterBlock& block : blocks) any_pair = any_pair || block.length >= 2;
        if (any_pair) {
            moment_phi = estimate_phi_ar1(blocks).value;
            have_moment_phi = true;
        }
    }
    alpha = estimate_scale(blocks, q);

    std::vector<SandwichPart> parts(n_clusters);
    parallel_for(n_clusters, options.threads, [&](std::size_t c) {
        const ClusterSpan& span = frame.clusters[c];
        SandwichPart& part = parts[c];
        const Eigen::VectorXd w = weight.segment(span.start, span.length);
        part.d = w.asDiagonal() * x.middleRows(span.start, span.length);
        const Eigen::VectorXd sqrt_w = w.cwiseSqrt();
        part.v = alpha * (sqrt_w.asDiagonal() * solver.dense_r(span.length) *
                          sqrt_w.asDiagonal());
        part.residual = residual.segment(span.start, span.length);
    });

    Eigen::MatrixXd bread = Eigen::MatrixXd::Zero(q, q);
    for (std::size_t c = 0; c < n_clusters; ++c) {
        Eigen::LDLT<Eigen::MatrixXd> v_ldlt(parts[c].v);
        bread.noalias() += parts[c].d.transpose() * v_ldlt.solve(parts[c].d);
    }

    FitResult fit;
    fit.names = frame.column_names;
    fit.coefficients = beta;
    fit.covariance_model =
        Eigen::LDLT<Eigen::MatrixXd>(bread).solve(Eigen::MatrixXd::Identity(q, q));
    fit.covariance_robust = sandwich_covariance(parts);
    fit.dispersion = alpha;
    if (spec.kind != CorrelationKind::independence) fit.correlation = phi;
    if (have_moment_phi) fit.correlation_moment = moment_phi;
    fit.correlation_clamped = phi_clamped;
    fit.correlation_floored = solver.floored();
    fit.correlation_floor_deviation = solver.max_deviation();
    fit.iterations = iter;
    fit.converged = converged;
    return fit;
}

}  // namespace gazelab
