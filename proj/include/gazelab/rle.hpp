// Lossless run-length encoding of binary series and survival episodes.
//
// A series of T samples at bin_seconds resolution becomes runs with integer
// lengths and cumulative stop times (stop of run k = samples so far * bin).
// Dropping the final, censored run of each trial turns the runs into
// counting-process records for the two-state Cox model.
#pragma once

#include <string>
#include <vector>

#include "gazelab/types.hpp"

namespace gazelab {

/// Encodes one trial into maximal runs. Throws EmptyInputError on an empty series.
std::vector<RunEpisode> rle_encode(const TrialSeries& series);

/// Exact inverse of rle_encode. Validates alternation and time contiguity.
TrialSeries rle_decode(const std::vector<RunEpisode>& episodes, double bin_seconds);

/// Runs of one trial together with the covariates needed downstream.
struct TrialEpisodes {
    std::string subject_id;
    std::string item_id;
    int contrast = 0;
    int privileged = 0;
    double bin_seconds = 0.01;
    std::vector<RunEpisode> runs;
};

TrialEpisodes encode_trial(const TrialSeries& series);

/// Survival records plus an audit table of the dropped final runs.
struct SurvivalBuild {
    std::vector<SurvivalRecord> records;
    std::vector<RunEpisode> dropped_last_runs;
};

/// Converts per-trial runs to survival records: one record per run except the
/// final run of each trial. Covariates become {Privileged, Contrast} plus
/// their products with the 0->1 transition indicator.
SurvivalBuild episodes_to_survival(const std::vector<TrialEpisodes>& trials);

/// Episode file I/O. Format: a "# bin_seconds=..." comment, then a header
/// row subject,item,run,state,length,start,stop,event[,contrast,privileged].
void write_episode_file(const std::string& path, const std::vector<TrialEpisodes>& trials,
                        bool with_covariates = true);
std::vector<TrialEpisodes> read_episode_file(const std::string& path);

/// Run-length statistics over a series collection.
struct RunStats {
    std::size_t run_count = 0;
    std::size_t sample_count = 0;
    double median_length = 0.0;
    double mean_length = 0.0;
};

RunStats summarize_runs(const std::vector<TrialSeries>& series);

}  // namespace gazelab
