// Two-state stratified Cox proportional hazards on RLE episodes.
//
// Counting-process records (start, stop] with the baseline hazard stratified
// by transition direction. The risk set at an event time t within a stratum
// contains records with start < t <= stop. Ties are handled by the Efron
// method (Breslow available for cross-checks). Robust covariance aggregates
// score residuals by cluster.
#pragma once

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

#include "gazelab/types.hpp"

namespace gazelab {

enum class TieMethod { efron, breslow };

struct CoxOptions {
    TieMethod ties = TieMethod::efron;
    int max_iterations = 50;
    double gradient_tolerance = 1e-8;
    double divergence_bound = 15.0;
};

struct HazardFit {
    std::vector<std::string> names;
    Eigen::VectorXd coefficients;
    Eigen::MatrixXd covariance_robust;
    Eigen::MatrixXd covariance_model;  // inverse observed information
    std::map<std::string, Eigen::Index> n_events;  // per stratum
    double log_partial_likelihood = 0.0;
    int iterations = 0;
    bool converged = false;

    int index_of(const std::string& name) const {
        for (std::size_t k = 0; k < names.size(); ++k)
            if (names[k] == name) return static_cast<int>(k);
        throw LookupError("no coefficient named '" + name + "'");
    }
    double coefficient(const std::string& name) const { return coefficients[index_of(name)]; }
};

/// Newton solve of the stratified partial likelihood.
HazardFit fit_cox(const std::vector<SurvivalRecord>& records, const CoxOptions& options = {});

/// Covariate names in fit order for a record collection.
std::vector<std::string> cox_covariate_names(const std::vector<SurvivalRecord>& records);

/// Log partial likelihood at an arbitrary coefficient vector (test hook and
/// finite-difference oracle surface).
double cox_log_partial_likelihood(const std::vector<SurvivalRecord>& records,
                                  const std::vector<std::string>& names,
                                  const Eigen::VectorXd& beta,
                                  TieMethod ties = TieMethod::efron);

/// Per-record score residuals at beta (rows align with records).
Eigen::MatrixXd cox_score_residuals(const std::vector<SurvivalRecord>& records,
                                    const std::vector<std::string>& names,
                                    const Eigen::VectorXd& beta,
                                    TieMethod ties = TieMethod::efron);

struct TotalEffect {
    double estimate = 0.0;
    double se = 0.0;
};

/// Sum of a main effect and its transition interaction, with the SE from the
/// robust covariance.
TotalEffect total_effect(const HazardFit& fit, const std::string& main,
                         const std::string& interaction);

}  // namespace gazelab
