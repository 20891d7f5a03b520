// Core domain types shared by the gazelab modules.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gazelab/errors.hpp"

namespace gazelab {

/// One row of a long-format input file: a single 0/1 fixation sample.
struct ObservationRecord {
    std::string subject_id;
    std::string item_id;
    int trial_index = 1;  // order of presentation, 1-based
    int time_index = 0;   // sample number within the trial, 0-based
    int y = 0;            // 1 = gaze on target
    int contrast = 0;     // item-level condition
    int privileged = 0;   // item-level condition
};

/// One subject-by-item trial as an ordered binary series.
struct TrialSeries {
    std::string subject_id;
    std::string item_id;
    double bin_seconds = 0.01;
    std::vector<std::uint8_t> samples;  // values in {0,1}
    int contrast = 0;
    int privileged = 0;
    // Extra binary covariates passed through to model frames unchanged.
    std::vector<std::pair<std::string, double>> extra;

    std::size_t length() const { return samples.size(); }
    double duration() const { return static_cast<double>(samples.size()) * bin_seconds; }
    bool is_constant() const {
        for (std::size_t t = 1; t < samples.size(); ++t)
            if (samples[t] != samples[0]) return false;
        return true;
    }
};

/// A single RLE run. Times are cumulative trial time in seconds.
struct RunEpisode {
    std::string subject_id;
    std::string item_id;
    int run_index = 1;  // 1-based within the trial
    int state = 0;      // the repeated sample value
    int length = 0;     // number of samples in the run
    double start_time = 0.0;
    double stop_time = 0.0;
    int event = 0;  // 1 = a transition to the opposite state ends this run
};

/// Transition direction of a survival episode.
enum class Transition {
    to_target,    // 0 -> 1 (entering the target)
    from_target,  // 1 -> 0 (leaving the target)
};

inline const char* to_string(Transition t) {
    return t == Transition::to_target ? "0to1" : "1to0";
}

/// One (start, stop] counting-process record for the two-state Cox model.
struct SurvivalRecord {
    double start = 0.0;
    double stop = 0.0;
    int event = 1;
    Transition stratum = Transition::to_target;
    std::vector<std::pair<std::string, double>> covariates;
    std::string cluster_subject;
    std::string cluster_item;
};

/// Result of any of the regression fitters.
struct FitResult {
    std::vector<std::string> names;
    Eigen::VectorXd coefficients;
    Eigen::MatrixXd covariance_model;
    std::optional<Eigen::MatrixXd> covariance_robust;
    std::optional<double> dispersion;           // GEE scale alpha
    std::optional<double> correlation;          // phi used in the working correlation
    std::optional<double> correlation_moment;   // moment estimate of phi (diagnostic)
    bool correlation_clamped = false;           // phi hit the (-0.999, 0.999) clamp
    bool correlation_floored = false;           // eigenvalue floor modified R
    double correlation_floor_deviation = 0.0;   // max entry change from flooring
    std::map<std::string, double> variance_components;  // sigma_u2 / sigma_v2
    bool boundary = false;  // a variance component was estimated at its lower bound
    std::optional<double> log_likelihood;
    int iterations = 0;
    bool converged = false;
    std::vector<double> deviance_trace;  // filled by the IRLS fitters

    int index_of(const std::string& name) const {
        for (std::size_t k = 0; k < names.size(); ++k)
            if (names[k] == name) return static_cast<int>(k);
        throw LookupError("no coefficient named '" + name + "'");
    }
    double coefficient(const std::string& name) const { return coefficients[index_of(name)]; }
    double se_model(int k) const { return std::sqrt(covariance_model(k, k)); }
    double se_robust(int k) const {
        if (!covariance_robust) throw LookupError("fit has no robust covariance");
        return std::sqrt((*covariance_robust)(k, k));
    }
};

}  // namespace gazelab
