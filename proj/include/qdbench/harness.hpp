#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include <qdbench/mapelites.hpp>
#include <qdbench/reliability.hpp>

namespace qdbench {

/// Configuration problem tied to one key path, e.g. `runs[0].operator.kind`.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& message);
    const std::string& key() const { return _key; }

private:
    std::string _key;
};

struct LabeledRun {
    std::string label;
    RunConfig run;
};

struct ReferenceSpec {
    enum class Kind { Analytic, FromRun, Load };

    Kind kind = Kind::Analytic;
    std::size_t samples_per_bin = 10'000; // analytic
    RunConfig run;                        // from-run
    std::filesystem::path path;           // load
};

struct ExperimentConfig {
    std::vector<LabeledRun> runs;
    ReferenceSpec reference;
    std::filesystem::path output_dir = "results";
    std::size_t repetitions = 1; // repetition k uses seed + k
    std::size_t jobs = 1;        // concurrent (run, repetition) pairs
    bool save_reference = false;

    /// Throws ConfigError naming the offending key.
    void validate() const;
};

/// Canonical label for an operator/dimension pair: ME1 (polynomial) or ME2 (Gaussian).
std::string default_label(const RunConfig& run);

/// Parses JSON configuration text, fills defaults and validates.
/// Throws ConfigError on unknown keys, missing required fields, bad values.
ExperimentConfig parse_config(const std::string& source);

/// Fully resolved configuration, suitable for echoing into the manifest.
nlohmann::json to_json(const ExperimentConfig& cfg);
nlohmann::json to_json(const RunConfig& run);

/// Command-line overrides; unset fields leave the configuration untouched.
/// More than one entry in `dims` or `variations` regenerates the run list
/// as their cross product.
struct Overrides {
    std::optional<std::size_t> budget;
    std::vector<std::size_t> dims;
    std::optional<std::size_t> bins;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> variations;
    std::optional<double> eta;
    std::optional<double> sigma;
    std::optional<double> mutation_prob;
    std::optional<std::string> reference; // analytic | run | load:<path>
    std::optional<std::size_t> samples_per_bin;
    std::optional<std::filesystem::path> output_dir;
    std::optional<std::size_t> repetitions;
    std::optional<std::size_t> init_count;
    std::optional<std::size_t> batch_size;
    std::optional<std::size_t> checkpoint_every;
    std::optional<std::size_t> workers;
    std::optional<std::size_t> jobs;
    bool save_reference = false;
};

/// Applies overrides on top of `base` (or on a single default ME1 run when
/// `base` has no runs) and validates the result.
ExperimentConfig apply_overrides(ExperimentConfig base, const Overrides& o);

/// Builds (or loads) the reference described by `spec` for grids of `bins` per feature.
ReferenceGrid build_reference(const ReferenceSpec& spec, std::size_t bins);

/// `evaluations,global_reliability,coverage`, one row per checkpoint.
void write_series_csv(const std::vector<SeriesPoint>& series, std::ostream& out);
void write_series_csv(const std::vector<SeriesPoint>& series, const std::filesystem::path& path);

struct FileRecord {
    std::string path; // relative to output_dir
    std::string sha256;
    std::uintmax_t bytes = 0;
};

struct RunRecord {
    std::string label;
    std::size_t repetition = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    double final_coverage = 0.0;
    double final_global_reliability = 0.0;
    std::vector<FileRecord> files;
};

struct RunManifest {
    nlohmann::json config;
    nlohmann::json reference;
    std::vector<RunRecord> runs;
    std::vector<FileRecord> extra_files;
    std::string started_at;
    double duration_seconds = 0.0;

    bool all_ok() const;
    nlohmann::json to_json() const;
};

/// Builds the reference once, executes every (run, repetition) pair, writes
/// `<label>-rep<k>.grid.csv`, `<label>-rep<k>.series.csv` and `manifest.json`.
/// A failing pair leaves no output files and is recorded in the manifest.
RunManifest run_experiment(const ExperimentConfig& cfg);

inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kVersion = "1.0.0";

} // namespace qdbench
