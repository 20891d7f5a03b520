// Logistic regression by iteratively reweighted least squares.
//
// Backbone for the plain GLM and LAG fits and the inner loop shared with the
// GEE and GLMM fitters. Convergence: relative deviance change below 1e-10 or
// score max-norm below 1e-8, at most 100 iterations, with step-halving on any
// deviance increase.
#pragma once

#include "gazelab/design.hpp"
#include "gazelab/types.hpp"

namespace gazelab {

struct IrlsOptions {
    int max_iterations = 100;
    double score_tolerance = 1e-8;
    double deviance_tolerance = 1e-10;
    // Coefficient magnitude treated as diverging when not converged.
    double separation_bound = 15.0;
};

/// Maximum-likelihood logistic fit. Throws SingularityError on rank-deficient
/// designs (naming the collinear columns) and SeparationError when estimates
/// diverge.
FitResult fit_irls(const ModelFrame& frame, const IrlsOptions& options = {});

/// The lag-1 model: identical contract, requires a frame built with lag=true.
FitResult fit_lag(const ModelFrame& frame, const IrlsOptions& options = {});

/// Stable log(1 + exp(x)).
double softplus(double x);

/// Stable logistic function 1 / (1 + exp(-x)).
double logistic(double x);

}  // namespace gazelab
