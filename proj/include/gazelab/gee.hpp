// Generalized estimating equations for marginal logistic regression.
//
// Working correlations: independence, AR(1) with entries phi^|l-m|, and a
// banded Toeplitz matrix (1 on the diagonal, phi within the band). A ridge
// may be added to R; if the ridged matrix still has a non-positive minimum
// eigenvalue, eigenvalues are floored and the matrix reconstituted. phi is
// estimated by the lag-1 Pearson-residual moment equation, the scale alpha by
// the mean squared Pearson residual, and coefficient noise by the robust
// sandwich B^-1 M B^-1.
#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "gazelab/design.hpp"
#include "gazelab/types.hpp"

namespace gazelab {

enum class CorrelationKind { independence, ar1, toeplitz_band };

struct WorkingCorrelation {
    CorrelationKind kind = CorrelationKind::independence;
    double phi = 0.0;       // used directly unless estimate_phi
    int bandwidth = 25;     // toeplitz_band only
    double ridge = 0.0;
    bool estimate_phi = false;
};

struct CorrelationMatrix {
    Eigen::MatrixXd r;
    bool floored = false;       // the eigenvalue floor engaged
    double max_deviation = 0.0; // max abs entry change caused by flooring
};

/// T x T working correlation with ridge and eigenvalue-floor backstop.
CorrelationMatrix build_correlation_detail(const WorkingCorrelation& spec, Eigen::Index t_len);
Eigen::MatrixXd build_correlation(const WorkingCorrelation& spec, Eigen::Index t_len);

/// Per-cluster quantities entering the moment estimators.
struct ClusterBlock {
    std::string subject_id;
    std::string item_id;
    Eigen::Index start = 0;
    Eigen::Index length = 0;
    Eigen::VectorXd a_diag;     // p(1-p), entries in (0, 0.25]
    Eigen::VectorXd residuals;  // Pearson residuals
};

struct PhiEstimate {
    double value = 0.0;
    bool clamped = false;
};

/// Lag-1 moment estimator: sum_t r_t r_{t-1} over clusters divided by
/// sum (T - 1), clamped to (-0.999, 0.999).
PhiEstimate estimate_phi_ar1(const std::vector<ClusterBlock>& blocks);

/// Scale estimator: sum r^2 / (N - q).
double estimate_scale(const std::vector<ClusterBlock>& blocks, Eigen::Index q);

/// Per-cluster inputs of the sandwich estimator.
struct SandwichPart {
    Eigen::MatrixXd d;         // T x q derivative matrix
    Eigen::MatrixXd v;         // T x T working covariance
    Eigen::VectorXd residual;  // y - p
};

/// Robust covariance B^-1 M B^-1; symmetric by construction.
Eigen::MatrixXd sandwich_covariance(const std::vector<SandwichPart>& parts);

struct GeeOptions {
    int max_iterations = 200;
    double score_tolerance = 1e-8;
    unsigned threads = 1;
};

/// Solves the quasi-score equation by Fisher scoring, alternating with the
/// phi and alpha moment updates.
FitResult gee_fit(const ModelFrame& frame, const WorkingCorrelation& spec,
                  const GeeOptions& options = {});

}  // namespace gazelab
