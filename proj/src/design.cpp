#include "gazelab/design.hpp"

#include <iostream>

namespace gazelab {

const char* const kStandardColumns[6] = {"Intercept",      "Contrast", "Privileged",
                                         "Time",           "Time*Contrast",
                                         "Time*Privileged"};
const char* const kLagColumn = "Ylag-1";

ModelFrame build_frame(const std::vector<TrialSeries>& series, const BuildFrameOptions& options) {
    ModelFrame frame;
    frame.has_lag = options.lag;

    // Extra covariate names must agree across series; take them from the first.
    std::vector<std::string> extra_names;
    if (!series.empty())
        for (const auto& [name, value] : series.front().extra) extra_names.push_back(name);

    frame.column_names.assign(std::begin(kStandardColumns), std::end(kStandardColumns));
    frame.column_names.insert(frame.column_names.end(), extra_names.begin(), extra_names.end());
    if (options.lag) frame.column_names.push_back(kLagColumn);
    const Eigen::Index q = static_cast<Eigen::Index>(frame.column_names.size());

    Eigen::Index total_rows = 0;
    std::size_t skipped_short = 0;
    for (const TrialSeries& s : series) {
        const Eigen::Index t_len = static_cast<Eigen::Index>(s.samples.size());
        if (options.lag && t_len < 2) {
            ++skipped_short;
            continue;
        }
        total_rows += options.lag ? t_len - 1 : t_len;
    }
    if (skipped_short > 0)
        std::cerr << "build_frame: skipped " << skipped_short
                  << " series of length 1 (no lagged row exists)\n";

    frame.response.resize(total_rows);
    frame.design.resize(total_rows, q);
    frame.time.resize(total_rows);
    frame.clusters.reserve(series.size());

    Eigen::Index row = 0;
    for (const TrialSeries& s : series) {
        const Eigen::Index t_len = static_cast<Eigen::Index>(s.samples.size());
        if (options.lag && t_len < 2) continue;
        ClusterSpan span;
        span.subject_id = s.subject_id;
        span.item_id = s.item_id;
        span.start = row;
        const Eigen::Index first = options.lag ? 1 : 0;
        for (Eigen::Index t = first; t < t_len; ++t, ++row) {
            double time_value;
            if (options.time_in_seconds)
                time_value = static_cast<double>(t) * s.bin_seconds;
            else
                time_value = t_len > 1 ? static_cast<double>(t) / static_cast<double>(t_len - 1)
                                       : 0.0;
            frame.response[row] = s.samples[static_cast<std::size_t>(t)];
            frame.time[row] = time_value;
            frame.design(row, 0) = 1.0;
            frame.design(row, 1) = s.contrast;
            frame.design(row, 2) = s.privileged;
            frame.design(row, 3) = time_value;
            frame.design(row, 4) = time_value * s.contrast;
            frame.design(row, 5) = time_value * s.privileged;
            Eigen::Index col = 6;
            for (const auto& [name, value] : s.extra) frame.design(row, col++) = value;
            if (options.lag)
                frame.design(row, q - 1) = s.samples[static_cast<std::size_t>(t - 1)];
        }
        span.length = row - span.start;
        frame.clusters.push_back(std::move(span));
    }
    return frame;
}

}  // namespace gazelab
