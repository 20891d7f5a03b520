// Model-frame construction for all regression fitters.
//
// The standard design is Intercept, Contrast, Privileged, Time, Time*Contrast,
// Time*Privileged with per-series Time rescaled to [0, 1]. With lag enabled a
// trailing Ylag-1 column holds the previous sample and the first row of every
// series is dropped.
#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "gazelab/types.hpp"

namespace gazelab {

struct ClusterSpan {
    std::string subject_id;
    std::string item_id;
    Eigen::Index start = 0;
    Eigen::Index length = 0;
};

struct ModelFrame {
    Eigen::VectorXd response;
    Eigen::MatrixXd design;  // N x q
    std::vector<std::string> column_names;
    Eigen::VectorXd time;               // row-aligned, in [0, 1]
    std::vector<ClusterSpan> clusters;  // contiguous, time-ordered rows
    bool has_lag = false;

    Eigen::Index rows() const { return design.rows(); }
    Eigen::Index cols() const { return design.cols(); }
    int column_index(const std::string& name) const {
        for (std::size_t k = 0; k < column_names.size(); ++k)
            if (column_names[k] == name) return static_cast<int>(k);
        throw LookupError("no design column named '" + name + "'");
    }
};

struct BuildFrameOptions {
    bool lag = false;
    // Time coding: unit interval t/(T-1) by default, raw seconds otherwise.
    bool time_in_seconds = false;
};

/// Assembles the model frame. Series shorter than 2 samples are skipped with
/// a warning count when lag is requested (no lagged row exists).
ModelFrame build_frame(const std::vector<TrialSeries>& series, const BuildFrameOptions& options = {});

inline ModelFrame build_frame(const std::vector<TrialSeries>& series, bool lag) {
    return build_frame(series, BuildFrameOptions{.lag = lag});
}

/// Column names of the standard (non-lag) design.
extern const char* const kStandardColumns[6];
extern const char* const kLagColumn;

}  // namespace gazelab
