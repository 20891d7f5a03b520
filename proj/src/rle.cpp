#include "gazelab/rle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>

#include "gazelab/util/csv.hpp"
#include "gazelab/util/format.hpp"

namespace gazelab {

std::vector<RunEpisode> rle_encode(const TrialSeries& series) {
    if (series.samples.empty())
        throw EmptyInputError("rle_encode: series " + series.subject_id + "/" +
                              series.item_id + " is empty");
    std::vector<RunEpisode> runs;
    int cum = 0;
    std::size_t t = 0;
    while (t < series.samples.size()) {
        std::size_t begin = t;
        const std::uint8_t state = series.samples[t];
        while (t < series.samples.size() && series.samples[t] == state) ++t;
        RunEpisode run;
        run.subject_id = series.subject_id;
        run.item_id = series.item_id;
        run.run_index = static_cast<int>(runs.size()) + 1;
        run.state = state;
        run.length = static_cast<int>(t - begin);
        run.start_time = static_cast<double>(cum) * series.bin_seconds;
        cum += run.length;
        run.stop_time = static_cast<double>(cum) * series.bin_seconds;
        run.event = 1;  // all but the last run end in a transition
        runs.push_back(std::move(run));
    }
    runs.back().event = 0;
    return runs;
}

namespace {

bool times_close(double a, double b) {
    return std::abs(a - b) <= 1e-9 + 1e-9 * std::max(std::abs(a), std::abs(b));
}

}  // namespace

TrialSeries rle_decode(const std::vector<RunEpisode>& episodes, double bin_seconds) {
    if (episodes.empty()) throw EmptyInputError("rle_decode: no episodes");
    TrialSeries series;
    series.subject_id = episodes.front().subject_id;
    series.item_id = episodes.front().item_id;
    series.bin_seconds = bin_seconds;
    int cum = 0;
    for (std::size_t k = 0; k < episodes.size(); ++k) {
        const RunEpisode& run = episodes[k];
        if (run.length <= 0)
            throw StructuralError("rle_decode: run " + std::to_string(k + 1) +
                                  " has non-positive length");
        if (run.state != 0 && run.state != 1)
            throw StructuralError("rle_decode: run " + std::to_string(k + 1) +
                                  " has non-binary state");
        if (k > 0) {
            if (run.state == episodes[k - 1].state)
                throw StructuralError("rle_decode: runs " + std::to_string(k) + " and " +
                                      std::to_string(k + 1) + " do not alternate state");
            if (!times_close(run.start_time, episodes[k - 1].stop_time))
                throw StructuralError("rle_decode: run " + std::to_string(k + 1) +
                                      " does not start where the previous run stopped");
        }
        if (!times_close(run.stop_time - run.start_time,
                         static_cast<double>(run.length) * bin_seconds))
            throw StructuralError("rle_decode: run " + std::to_string(k + 1) +
                                  " duration does not match length * bin_seconds");
        cum += run.length;
        series.samples.insert(series.samples.end(), static_cast<std::size_t>(run.length),
                              static_cast<std::uint8_t>(run.state));
    }
    return series;
}

TrialEpisodes encode_trial(const TrialSeries& series) {
    TrialEpisodes out;
    out.subject_id = series.subject_id;
    out.item_id = series.item_id;
    out.contrast = series.contrast;
    out.privileged = series.privileged;
    out.bin_seconds = series.bin_seconds;
    out.runs = rle_encode(series);
    return out;
}

SurvivalBuild episodes_to_survival(const std::vector<TrialEpisodes>& trials) {
    SurvivalBuild build;
    for (const TrialEpisodes& trial : trials) {
        if (trial.runs.empty()) continue;
        for (std::size_t k = 0; k + 1 < trial.runs.size(); ++k) {
            const RunEpisode& run = trial.runs[k];
            SurvivalRecord rec;
            rec.start = run.start_time;
            rec.stop = run.stop_time;
            rec.event = 1;
            rec.stratum = run.state == 0 ? Transition::to_target : Transition::from_target;
            const double to_target = rec.stratum == Transition::to_target ? 1.0 : 0.0;
            rec.covariates = {
                {"Privileged", static_cast<double>(trial.privileged)},
                {"Contrast", static_cast<double>(trial.contrast)},
                {"Privileged:0to1", trial.privileged * to_target},
                {"Contrast:0to1", trial.contrast * to_target},
            };
            rec.cluster_subject = trial.subject_id;
            rec.cluster_item = trial.item_id;
            build.records.push_back(std::move(rec));
        }
        build.dropped_last_runs.push_back(trial.runs.back());
    }
    return build;
}

void write_episode_file(const std::string& path, const std::vector<TrialEpisodes>& trials,
                        bool with_covariates) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    const double bin = trials.empty() ? 0.01 : trials.front().bin_seconds;
    out << "# bin_seconds=" << format_full(bin) << "\n";
    out << "subject,item,run,state,length,start,stop,event";
    if (with_covariates) out << ",contrast,privileged";
    out << "\n";
    for (const TrialEpisodes& trial : trials) {
        for (const RunEpisode& run : trial.runs) {
            out << trial.subject_id << ',' << trial.item_id << ',' << run.run_index << ','
                << run.state << ',' << run.length << ',' << format_full(run.start_time) << ','
                << format_full(run.stop_time) << ',' << run.event;
            if (with_covariates) out << ',' << trial.contrast << ',' << trial.privileged;
            out << "\n";
        }
    }
    if (!out) throw IoError("failed while writing '" + path + "'");
}

std::vector<TrialEpisodes> read_episode_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::string line;
    double bin = 0.01;
    // Comment lines before the header carry the bin size.
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (line.rfind("# bin_seconds=", 0) == 0) {
            bin = std::strtod(line.c_str() + 14, nullptr);
            continue;
        }
        if (!line.empty() && line[0] == '#') continue;
        header = csv::split(line);
        break;
    }
    const std::vector<std::string> required = {"subject", "item",  "run",  "state",
                                               "length",  "start", "stop", "event"};
    if (header.size() < required.size())
        throw SchemaError("episode file '" + path + "' has a short header");
    for (std::size_t k = 0; k < required.size(); ++k)
        if (header[k] != required[k])
            throw SchemaError("episode file '" + path + "': expected column '" + required[k] +
                              "' at position " + std::to_string(k + 1) + ", got '" + header[k] +
                              "'");
    int contrast_col = -1, privileged_col = -1;
    for (std::size_t k = required.size(); k < header.size(); ++k) {
        if (header[k] == "contrast") contrast_col = static_cast<int>(k);
        if (header[k] == "privileged") privileged_col = static_cast<int>(k);
    }

    std::vector<TrialEpisodes> trials;
    long row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> f = csv::split(line);
        if (f.size() < header.size())
            throw ParseError("episode file '" + path + "': too few fields", row);
        RunEpisode run;
        run.subject_id = f[0];
        run.item_id = f[1];
        run.run_index = std::atoi(f[2].c_str());
        run.state = std::atoi(f[3].c_str());
        run.length = std::atoi(f[4].c_str());
        run.start_time = std::strtod(f[5].c_str(), nullptr);
        run.stop_time = std::strtod(f[6].c_str(), nullptr);
        run.event = std::atoi(f[7].c_str());
        if (trials.empty() || trials.back().subject_id != run.subject_id ||
            trials.back().item_id != run.item_id || run.run_index == 1) {
            TrialEpisodes trial;
            trial.subject_id = run.subject_id;
            trial.item_id = run.item_id;
            trial.bin_seconds = bin;
            if (contrast_col >= 0) trial.contrast = std::atoi(f[contrast_col].c_str());
            if (privileged_col >= 0) trial.privileged = std::atoi(f[privileged_col].c_str());
            trials.push_back(std::move(trial));
        }
        trials.back().runs.push_back(std::move(run));
    }
    if (trials.empty()) throw EmptyInputError("episode file '" + path + "' has no runs");
    return trials;
}

RunStats summarize_runs(const std::vector<TrialSeries>& series) {
    if (series.empty()) throw EmptyInputError("summarize_runs: no series");
    std::vector<int> lengths;
    RunStats stats;
    for (const TrialSeries& s : series) {
        stats.sample_count += s.samples.size();
        for (const RunEpisode& run : rle_encode(s)) lengths.push_back(run.length);
    }
    stats.run_count = lengths.size();
    double sum = 0.0;
    for (int n : lengths) sum += n;
    stats.mean_length = sum / static_cast<double>(lengths.size());
    std::sort(lengths.begin(), lengths.end());
    const std::size_t m = lengths.size();
    stats.median_length = (m % 2 == 1)
                              ? lengths[m / 2]
                              : 0.5 * (lengths[m / 2 - 1] + lengths[m / 2]);
    return stats;
}

}  // namespace gazelab
