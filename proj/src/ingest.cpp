#include "gazelab/ingest.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <tuple>

#include "gazelab/util/csv.hpp"

namespace gazelab {

namespace {

int parse_int_field(const std::string& field, const char* what, long row) {
    char* end = nullptr;
    const long v = std::strtol(field.c_str(), &end, 10);
    if (end == field.c_str() || *end != '\0')
        throw ParseError(std::string("expected integer for column '") + what + "', got '" +
                             field + "'",
                         row);
    return static_cast<int>(v);
}

int parse_binary_field(const std::string& field, const char* what, long row) {
    if (field == "0") return 0;
    if (field == "1") return 1;
    throw ParseError(std::string("column '") + what + "' must be 0 or 1, got '" + field + "'",
                     row);
}

}  // namespace

std::vector<ObservationRecord> load_long_format(const std::string& path,
                                                const ColumnSchema& schema) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::string line;
    if (!std::getline(in, line)) throw EmptyInputError("'" + path + "' is empty");
    const std::vector<std::string> header = csv::split(line);

    auto column = [&](const std::string& name) {
        for (std::size_t k = 0; k < header.size(); ++k)
            if (header[k] == name) return static_cast<int>(k);
        throw SchemaError("'" + path + "': missing column '" + name + "'");
    };
    const int c_subject = column(schema.subject);
    const int c_item = column(schema.item);
    const int c_trial = column(schema.trial);
    const int c_time = column(schema.time);
    const int c_y = column(schema.y);
    const int c_contrast = column(schema.contrast);
    const int c_privileged = column(schema.privileged);

    std::vector<ObservationRecord> records;
    long row = 0;  // data rows, header excluded
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        ++row;
        const std::vector<std::string> f = csv::split(line);
        if (f.size() < header.size()) throw ParseError("too few fields", row);
        ObservationRecord rec;
        rec.subject_id = f[c_subject];
        rec.item_id = f[c_item];
        rec.trial_index = parse_int_field(f[c_trial], schema.trial.c_str(), row);
        rec.time_index = parse_int_field(f[c_time], schema.time.c_str(), row);
        rec.y = parse_binary_field(f[c_y], schema.y.c_str(), row);
        rec.contrast = parse_binary_field(f[c_contrast], schema.contrast.c_str(), row);
        rec.privileged = parse_binary_field(f[c_privileged], schema.privileged.c_str(), row);
        if (rec.trial_index < 1) throw ParseError("trial index must be positive", row);
        if (rec.time_index < 0) throw ParseError("time index must be nonnegative", row);
        records.push_back(std::move(rec));
    }
    if (records.empty()) throw EmptyInputError("'" + path + "' contains a header but no rows");
    return records;
}

ExclusionResult apply_exclusions(const std::vector<ObservationRecord>& records,
                                 double bin_seconds) {
    using GroupKey = std::tuple<std::string, std::string, int>;
    std::map<GroupKey, std::vector<const ObservationRecord*>> groups;
    for (const ObservationRecord& rec : records)
        groups[{rec.subject_id, rec.item_id, rec.trial_index}].push_back(&rec);

    // First trial per (subject, item).
    std::map<std::pair<std::string, std::string>, int> first_trial;
    for (const auto& [key, rows] : groups) {
        const auto pair_key = std::make_pair(std::get<0>(key), std::get<1>(key));
        auto it = first_trial.find(pair_key);
        if (it == first_trial.end() || std::get<2>(key) < it->second)
            first_trial[pair_key] = std::get<2>(key);
    }

    ExclusionResult result;
    result.summary.input_records = records.size();
    for (const auto& [key, rows] : groups) {
        const auto& [subject, item, trial] = key;
        if (first_trial.at({subject, item}) != trial) {
            result.summary.later_trial_records += rows.size();
            result.summary.later_trial_series += 1;
            continue;
        }
        std::vector<const ObservationRecord*> sorted = rows;
        std::stable_sort(sorted.begin(), sorted.end(),
                         [](const ObservationRecord* a, const ObservationRecord* b) {
                             return a->time_index < b->time_index;
                         });
        TrialSeries series;
        series.subject_id = subject;
        series.item_id = item;
        series.bin_seconds = bin_seconds;
        series.contrast = sorted.front()->contrast;
        series.privileged = sorted.front()->privileged;
        series.samples.reserve(sorted.size());
        for (std::size_t t = 0; t < sorted.size(); ++t) {
            if (sorted[t]->time_index != static_cast<int>(t))
                throw StructuralError("subject " + subject + ", item " + item + ", trial " +
                                      std::to_string(trial) +
                                      ": time indices are not consecutive from 0");
            if (sorted[t]->contrast != series.contrast ||
                sorted[t]->privileged != series.privileged)
                throw StructuralError("subject " + subject + ", item " + item +
                                      ": contrast/privileged vary within the pair");
            series.samples.push_back(static_cast<std::uint8_t>(sorted[t]->y));
        }
        if (series.is_constant()) {
            result.summary.constant_series_records += series.samples.size();
            result.summary.constant_series += 1;
            continue;
        }
        result.summary.retained_records += series.samples.size();
        result.series.push_back(std::move(series));
    }
    result.summary.retained_series = result.series.size();
    // std::map iteration already yields (subject, item) order; keep it explicit.
    std::sort(result.series.begin(), result.series.end(),
              [](const TrialSeries& a, const TrialSeries& b) {
                  return std::tie(a.subject_id, a.item_id) < std::tie(b.subject_id, b.item_id);
              });
    return result;
}

std::vector<ObservationRecord> series_to_records(const std::vector<TrialSeries>& series) {
    std::vector<ObservationRecord> records;
    for (const TrialSeries& s : series) {
        for (std::size_t t = 0; t < s.samples.size(); ++t) {
            ObservationRecord rec;
            rec.subject_id = s.subject_id;
            rec.item_id = s.item_id;
            rec.trial_index = 1;
            rec.time_index = static_cast<int>(t);
            rec.y = s.samples[t];
            rec.contrast = s.contrast;
            rec.privileged = s.privileged;
            records.push_back(std::move(rec));
        }
    }
    return records;
}

void write_long_format(const std::string& path, const std::vector<ObservationRecord>& records,
                       const ColumnSchema& schema) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << schema.subject << ',' << schema.item << ',' << schema.trial << ',' << schema.time
        << ',' << schema.y << ',' << schema.contrast << ',' << schema.privileged << "\n";
    for (const ObservationRecord& rec : records)
        out << rec.subject_id << ',' << rec.item_id << ',' << rec.trial_index << ','
            << rec.time_index << ',' << rec.y << ',' << rec.contrast << ',' << rec.privileged
            << "\n";
    if (!out) throw IoError("failed while writing '" + path + "'");
}

}  // namespace gazelab
