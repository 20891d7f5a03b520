// Long-format loading and the data-selection rules.
//
// Two exclusions are applied: for each (subject, item) pair only the first
// presented trial is kept, and any series that never changes state (a single
// run) is removed. Condition codes are 0/1 and must be constant within a
// (subject, item) pair.
#pragma once

#include <string>
#include <vector>

#include "gazelab/types.hpp"

namespace gazelab {

/// Column-name map for long-format files.
struct ColumnSchema {
    std::string subject = "subject";
    std::string item = "item";
    std::string trial = "trial";
    std::string time = "time";
    std::string y = "y";
    std::string contrast = "contrast";
    std::string privileged = "privileged";
};

/// Reads a comma-separated long-format file. Rows keep their input order.
std::vector<ObservationRecord> load_long_format(const std::string& path,
                                                const ColumnSchema& schema = {});

struct ExclusionSummary {
    std::size_t input_records = 0;
    std::size_t retained_records = 0;
    std::size_t later_trial_records = 0;   // dropped: not the first trial of the item
    std::size_t constant_series_records = 0;  // dropped: single-run series
    std::size_t later_trial_series = 0;
    std::size_t constant_series = 0;
    std::size_t retained_series = 0;
};

struct ExclusionResult {
    std::vector<TrialSeries> series;  // sorted by (subject_id, item_id)
    ExclusionSummary summary;
};

/// Applies the selection rules and assembles per-trial series.
ExclusionResult apply_exclusions(const std::vector<ObservationRecord>& records,
                                 double bin_seconds = 0.01);

/// Expands series back to long format (trial index 1). Inverse of the
/// ingest pipeline for already-selected data; used by the simulator output.
std::vector<ObservationRecord> series_to_records(const std::vector<TrialSeries>& series);

/// Writes records as a comma-separated long-format file.
void write_long_format(const std::string& path, const std::vector<ObservationRecord>& records,
                       const ColumnSchema& schema = {});

}  // namespace gazelab
