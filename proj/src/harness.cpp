#include <qdbench/harness.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <qdbench/digest.hpp>

namespace qdbench {

using nlohmann::json;
namespace fs = std::filesystem;

ConfigError::ConfigError(std::string key, const std::string& message)
    : std::runtime_error(key + ": " + message), _key(std::move(key))
{
}

std::string default_label(const RunConfig& run)
{
    const char* family = run.op.kind == OperatorKind::PolynomialBounded ? "ME1" : "ME2";
    return std::string(family) + "-n" + std::to_string(run.dimensions);
}

// ---------------------------------------------------------------------------
// Parsing

namespace {
    std::string join_key(const std::string& prefix, const std::string& key)
    {
        return prefix.empty() ? key : prefix + "." + key;
    }

    void reject_unknown_keys(const json& obj, const std::string& prefix, std::initializer_list<const char*> allowed)
    {
        for (const auto& [key, value] : obj.items()) {
            const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
            if (!known)
                throw ConfigError(join_key(prefix, key), "unknown key");
        }
    }

    const json& require_object(const json& j, const std::string& key)
    {
        if (!j.is_object())
            throw ConfigError(key.empty() ? "<root>" : key, "must be an object");
        return j;
    }

    template <typename T>
    void read_unsigned(const json& obj, const std::string& prefix, const char* key, T& out)
    {
        if (!obj.contains(key))
            return;
        const json& v = obj.at(key);
        const std::string path = join_key(prefix, key);
        if (v.is_number_unsigned()) {
            out = v.get<T>();
            return;
        }
        if (v.is_number_float()) {
            const double d = v.get<double>();
            if (d >= 0.0 && std::floor(d) == d && d <= 9.007199254740992e15) {
                out = static_cast<T>(d);
                return;
            }
        }
        throw ConfigError(path, "must be a non-negative integer");
    }

    void read_double(const json& obj, const std::string& prefix, const char* key, double& out)
    {
        if (!obj.contains(key))
            return;
        const json& v = obj.at(key);
        if (!v.is_number())
            throw ConfigError(join_key(prefix, key), "must be a number");
        out = v.get<double>();
    }

    void read_string(const json& obj, const std::string& prefix, const char* key, std::string& out)
    {
        if (!obj.contains(key))
            return;
        const json& v = obj.at(key);
        if (!v.is_string())
            throw ConfigError(join_key(prefix, key), "must be a string");
        out = v.get<std::string>();
    }

    void read_bool(const json& obj, const std::string& prefix, const char* key, bool& out)
    {
        if (!obj.contains(key))
            return;
        const json& v = obj.at(key);
        if (!v.is_boolean())
            throw ConfigError(join_key(prefix, key), "must be a boolean");
        out = v.get<bool>();
    }

    OperatorConfig parse_operator(const json& j, const std::string& prefix, bool kind_required)
    {
        require_object(j, prefix);
        reject_unknown_keys(j, prefix, {"kind", "mutation_prob", "eta", "sigma", "mean"});
        OperatorConfig op;
        if (j.contains("kind")) {
            std::string kind;
            read_string(j, prefix, "kind", kind);
            try {
                op.kind = parse_operator_kind(kind);
            }
            catch (const DomainError&) {
                throw ConfigError(join_key(prefix, "kind"), "unknown operator kind '" + kind + "' (expected polynomial-bounded or gaussian)");
            }
        }
        else if (kind_required) {
            throw ConfigError(join_key(prefix, "kind"), "missing required field");
        }
        read_double(j, prefix, "mutation_prob", op.mutation_prob);
        read_double(j, prefix, "eta", op.eta);
        read_double(j, prefix, "sigma", op.sigma);
        read_double(j, prefix, "mean", op.mean);
        return op;
    }

    // Unset init_count/checkpoint_every default to min(default, budget), so
    // small budgets work without spelling them out.
    RunConfig parse_run_fields(const json& j, const std::string& prefix, bool required)
    {
        RunConfig run;
        if (required && !j.contains("dimensions"))
            throw ConfigError(join_key(prefix, "dimensions"), "missing required field");
        read_unsigned(j, prefix, "dimensions", run.dimensions);
        read_unsigned(j, prefix, "budget", run.budget);
        run.init_count = std::min(run.init_count, run.budget);
        run.checkpoint_every = std::min(run.checkpoint_every, run.budget);
        read_unsigned(j, prefix, "init_count", run.init_count);
        read_unsigned(j, prefix, "batch_size", run.batch_size);
        read_unsigned(j, prefix, "seed", run.seed);
        read_unsigned(j, prefix, "checkpoint_every", run.checkpoint_every);
        read_unsigned(j, prefix, "bins", run.bins_per_feature);
        read_unsigned(j, prefix, "workers", run.workers);
        if (j.contains("operator"))
            run.op = parse_operator(j.at("operator"), join_key(prefix, "operator"), required);
        else if (required)
            throw ConfigError(join_key(prefix, "operator"), "missing required field");
        return run;
    }

    constexpr std::initializer_list<const char*> kRunKeys = {"label", "dimensions", "budget", "init_count", "batch_size", "seed",
        "checkpoint_every", "bins", "workers", "operator"};

    LabeledRun parse_run(const json& j, const std::string& prefix)
    {
        require_object(j, prefix);
        reject_unknown_keys(j, prefix, kRunKeys);
        LabeledRun r;
        r.run = parse_run_fields(j, prefix, true);
        read_string(j, prefix, "label", r.label);
        if (!j.contains("label"))
            r.label = default_label(r.run);
        return r;
    }

    ReferenceSpec parse_reference(const json& j)
    {
        const std::string prefix = "reference";
        require_object(j, prefix);
        reject_unknown_keys(j, prefix, {"kind", "samples_per_bin", "run", "path"});
        ReferenceSpec spec;
        std::string kind = "analytic";
        read_string(j, prefix, "kind", kind);
        if (kind == "analytic")
            spec.kind = ReferenceSpec::Kind::Analytic;
        else if (kind == "run" || kind == "from-run")
            spec.kind = ReferenceSpec::Kind::FromRun;
        else if (kind == "load")
            spec.kind = ReferenceSpec::Kind::Load;
        else
            throw ConfigError("reference.kind", "unknown reference kind '" + kind + "' (expected analytic, run or load)");

        read_unsigned(j, prefix, "samples_per_bin", spec.samples_per_bin);
        if (j.contains("run")) {
            const json& rj = j.at("run");
            require_object(rj, "reference.run");
            std::vector<const char*> keys(kRunKeys.begin() + 1, kRunKeys.end());
            for (const auto& [key, value] : rj.items())
                if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; }))
                    throw ConfigError("reference.run." + key, "unknown key");
            spec.run = parse_run_fields(rj, "reference.run", false);
        }
        if (spec.kind == ReferenceSpec::Kind::Load) {
            if (!j.contains("path"))
                throw ConfigError("reference.path", "missing required field");
            std::string path;
            read_string(j, prefix, "path", path);
            spec.path = path;
        }
        return spec;
    }

    bool valid_label(const std::string& label)
    {
        return !label.empty() && std::all_of(label.begin(), label.end(), [](char c) {
            return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
        });
    }

    void validate_run(const RunConfig& run, const std::string& prefix)
    {
        try {
            run.validate();
        }
        catch (const InvalidField& e) {
            throw ConfigError(join_key(prefix, e.field()), e.detail());
        }
    }
} // namespace

void ExperimentConfig::validate() const
{
    if (runs.empty())
        throw ConfigError("runs", "at least one run is required");
    std::set<std::string> labels;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const std::string prefix = "runs[" + std::to_string(i) + "]";
        if (!valid_label(runs[i].label))
            throw ConfigError(prefix + ".label", "must be non-empty and use only [A-Za-z0-9._-]");
        if (!labels.insert(runs[i].label).second)
            throw ConfigError(prefix + ".label", "duplicate label '" + runs[i].label + "'");
        validate_run(runs[i].run, prefix);
        if (runs[i].run.bins_per_feature != runs.front().run.bins_per_feature)
            throw ConfigError(prefix + ".bins", "all runs must share one grid shape");
    }
    if (repetitions == 0)
        throw ConfigError("repetitions", "must be >= 1");
    if (jobs == 0)
        throw ConfigError("jobs", "must be >= 1");
    switch (reference.kind) {
    case ReferenceSpec::Kind::Analytic:
        if (reference.samples_per_bin < 2)
            throw ConfigError("reference.samples_per_bin", "must be >= 2");
        break;
    case ReferenceSpec::Kind::FromRun:
        validate_run(reference.run, "reference.run");
        if (reference.run.dimensions != 2)
            throw ConfigError("reference.run.dimensions", "a run-based reference illuminates the 2-D function");
        if (reference.run.bins_per_feature != runs.front().run.bins_per_feature)
            throw ConfigError("reference.run.bins", "must match the runs' grid shape");
        break;
    case ReferenceSpec::Kind::Load:
        if (reference.path.empty())
            throw ConfigError("reference.path", "must not be empty");
        break;
    }
}

ExperimentConfig parse_config(const std::string& source)
{
    json root;
    try {
        root = json::parse(source);
    }
    catch (const json::parse_error& e) {
        throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
    }
    require_object(root, "");
    reject_unknown_keys(root, "", {"runs", "reference", "output_dir", "repetitions", "jobs", "save_reference"});

    ExperimentConfig cfg;
    if (!root.contains("runs"))
        throw ConfigError("runs", "missing required field");
    const json& runs = root.at("runs");
    if (!runs.is_array())
        throw ConfigError("runs", "must be an array");
    for (std::size_t i = 0; i < runs.size(); ++i)
        cfg.runs.push_back(parse_run(runs[i], "runs[" + std::to_string(i) + "]"));
    if (root.contains("reference")) {
        cfg.reference = parse_reference(root.at("reference"));
        const json& rj = root.at("reference");
        const bool bins_given = rj.contains("run") && rj.at("run").contains("bins");
        if (!bins_given && !cfg.runs.empty())
            cfg.reference.run.bins_per_feature = cfg.runs.front().run.bins_per_feature;
    }
    std::string out = cfg.output_dir.string();
    read_string(root, "", "output_dir", out);
    cfg.output_dir = out;
    read_unsigned(root, "", "repetitions", cfg.repetitions);
    read_unsigned(root, "", "jobs", cfg.jobs);
    read_bool(root, "", "save_reference", cfg.save_reference);
    cfg.validate();
    return cfg;
}

json to_json(const RunConfig& run)
{
    return json{
        {"dimensions", run.dimensions},
        {"budget", run.budget},
        {"init_count", run.init_count},
        {"batch_size", run.batch_size},
        {"seed", run.seed},
        {"checkpoint_every", run.checkpoint_every},
        {"bins", run.bins_per_feature},
        {"workers", run.workers},
        {"operator",
            {
                {"kind", std::string(to_string(run.op.kind))},
                {"mutation_prob", run.op.mutation_prob},
                {"eta", run.op.eta},
                {"sigma", run.op.sigma},
                {"mean", run.op.mean},
            }},
    };
}

json to_json(const ExperimentConfig& cfg)
{
    json runs = json::array();
    for (const auto& r : cfg.runs) {
        json j = to_json(r.run);
        j["label"] = r.label;
        runs.push_back(std::move(j));
    }
    json ref;
    switch (cfg.reference.kind) {
    case ReferenceSpec::Kind::Analytic:
        ref = {{"kind", "analytic"}, {"samples_per_bin", cfg.reference.samples_per_bin}};
        break;
    case ReferenceSpec::Kind::FromRun:
        ref = {{"kind", "run"}, {"run", to_json(cfg.reference.run)}};
        break;
    case ReferenceSpec::Kind::Load:
        ref = {{"kind", "load"}, {"path", cfg.reference.path.string()}};
        break;
    }
    return json{
        {"runs", std::move(runs)},
        {"reference", std::move(ref)},
        {"output_dir", cfg.output_dir.string()},
        {"repetitions", cfg.repetitions},
        {"jobs", cfg.jobs},
        {"save_reference", cfg.save_reference},
    };
}

// ---------------------------------------------------------------------------
// Overrides

ExperimentConfig apply_overrides(ExperimentConfig cfg, const Overrides& o)
{
    std::vector<bool> auto_label;
    if (cfg.runs.empty()) {
        RunConfig run;
        if (cfg.reference.kind == ReferenceSpec::Kind::FromRun)
            run.bins_per_feature = cfg.reference.run.bins_per_feature;
        cfg.runs.push_back({"", run});
        auto_label.push_back(true);
    }
    else {
        auto_label.assign(cfg.runs.size(), false);
    }

    std::vector<OperatorKind> kinds;
    for (const auto& v : o.variations) {
        try {
            kinds.push_back(parse_operator_kind(v));
        }
        catch (const DomainError&) {
            throw ConfigError("operator.kind", "unknown operator kind '" + v + "' (expected poly or gauss)");
        }
    }

    if (o.dims.size() > 1 || kinds.size() > 1) {
        const RunConfig base = cfg.runs.front().run;
        const std::vector<OperatorKind> ks = kinds.empty() ? std::vector{base.op.kind} : kinds;
        const std::vector<std::size_t> ds = o.dims.empty() ? std::vector{base.dimensions} : o.dims;
        cfg.runs.clear();
        auto_label.clear();
        for (OperatorKind k : ks) {
            for (std::size_t d : ds) {
                RunConfig run = base;
                run.op.kind = k;
                run.dimensions = d;
                cfg.runs.push_back({"", run});
                auto_label.push_back(true);
            }
        }
    }
    else {
        for (auto& r : cfg.runs) {
            if (o.dims.size() == 1)
                r.run.dimensions = o.dims.front();
            if (kinds.size() == 1)
                r.run.op.kind = kinds.front();
        }
    }

    const auto apply_run = [&](RunConfig& run) {
        if (o.budget) {
            run.budget = *o.budget;
            if (!o.init_count)
                run.init_count = std::min(run.init_count, run.budget);
            if (!o.checkpoint_every)
                run.checkpoint_every = std::min(run.checkpoint_every, run.budget);
        }
        if (o.bins)
            run.bins_per_feature = *o.bins;
        if (o.init_count)
            run.init_count = *o.init_count;
        if (o.batch_size)
            run.batch_size = *o.batch_size;
        if (o.checkpoint_every)
            run.checkpoint_every = *o.checkpoint_every;
        if (o.workers)
            run.workers = *o.workers;
    };
    for (auto& r : cfg.runs) {
        apply_run(r.run);
        if (o.seed)
            r.run.seed = *o.seed;
        if (o.eta)
            r.run.op.eta = *o.eta;
        if (o.sigma)
            r.run.op.sigma = *o.sigma;
        if (o.mutation_prob)
            r.run.op.mutation_prob = *o.mutation_prob;
    }

    if (o.reference) {
        const std::string& ref = *o.reference;
        if (ref == "analytic") {
            cfg.reference.kind = ReferenceSpec::Kind::Analytic;
        }
        else if (ref == "run") {
            cfg.reference.kind = ReferenceSpec::Kind::FromRun;
        }
        else if (ref.starts_with("load:") && ref.size() > 5) {
            cfg.reference.kind = ReferenceSpec::Kind::Load;
            cfg.reference.path = ref.substr(5);
        }
        else {
            throw ConfigError("reference", "expected analytic, run or load:<path>, got '" + ref + "'");
        }
    }
    if (o.bins)
        cfg.reference.run.bins_per_feature = *o.bins;
    if (o.samples_per_bin)
        cfg.reference.samples_per_bin = *o.samples_per_bin;
    if (o.output_dir)
        cfg.output_dir = *o.output_dir;
    if (o.repetitions)
        cfg.repetitions = *o.repetitions;
    if (o.jobs)
        cfg.jobs = *o.jobs;
    if (o.save_reference)
        cfg.save_reference = true;

    for (std::size_t i = 0; i < cfg.runs.size(); ++i)
        if (auto_label[i])
            cfg.runs[i].label = default_label(cfg.runs[i].run);

    cfg.validate();
    return cfg;
}

// ---------------------------------------------------------------------------
// Execution

ReferenceGrid build_reference(const ReferenceSpec& spec, std::size_t bins)
{
    switch (spec.kind) {
    case ReferenceSpec::Kind::Analytic:
        return build_reference_analytic(bins, spec.samples_per_bin);
    case ReferenceSpec::Kind::FromRun: {
        RunConfig run = spec.run;
        run.bins_per_feature = bins;
        return build_reference_from_run(run);
    }
    case ReferenceSpec::Kind::Load:
        return ReferenceGrid(load_grid_csv(spec.path.string(), GridShape{bins}), Provenance::Loaded);
    }
    throw std::logic_error("unknown reference kind");
}

void write_series_csv(const std::vector<SeriesPoint>& series, std::ostream& out)
{
    if (series.empty())
        throw std::invalid_argument("write_series_csv: empty series");
    out << "evaluations,global_reliability,coverage\n";
    const auto old_precision = out.precision(17);
    const auto old_flags = out.flags();
    out.unsetf(std::ios::floatfield);
    for (const auto& p : series)
        out << p.evaluations << ',' << p.global_reliability << ',' << p.coverage << '\n';
    out.precision(old_precision);
    out.flags(old_flags);
}

void write_series_csv(const std::vector<SeriesPoint>& series, const fs::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    write_series_csv(series, out);
    out.flush();
    if (!out)
        throw std::runtime_error("write failed for '" + path.string() + "'");
}

bool RunManifest::all_ok() const
{
    return std::all_of(runs.begin(), runs.end(), [](const RunRecord& r) { return r.ok; });
}

namespace {
    json file_json(const FileRecord& f)
    {
        return json{{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}};
    }

    FileRecord record_file(const fs::path& dir, const std::string& name)
    {
        const fs::path p = dir / name;
        return {name, sha256_file(p), fs::file_size(p)};
    }

    std::string utc_timestamp(std::chrono::system_clock::time_point t)
    {
        const std::time_t tt = std::chrono::system_clock::to_time_t(t);
        std::tm tm{};
        gmtime_r(&tt, &tm);
        std::ostringstream os;
        os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
        return os.str();
    }

    struct Task {
        const LabeledRun* run;
        std::size_t repetition;
    };

    RunRecord execute(const Task& task, const ReferenceGrid& ref, const fs::path& dir)
    {
        RunRecord rec;
        rec.label = task.run->label;
        rec.repetition = task.repetition;
        RunConfig cfg = task.run->run;
        cfg.seed = task.run->run.seed + task.repetition;
        rec.seed = cfg.seed;

        const std::string stem = rec.label + "-rep" + std::to_string(task.repetition);
        const std::string grid_name = stem + ".grid.csv";
        const std::string series_name = stem + ".series.csv";
        const fs::path grid_tmp = dir / (grid_name + ".tmp");
        const fs::path series_tmp = dir / (series_name + ".tmp");
        try {
            const Rastrigin objective(cfg.dimensions);
            std::vector<SeriesPoint> series;
            const Grid final_grid = run(cfg, objective, [&](std::size_t evaluations, const Grid& grid) {
                series.push_back({evaluations, global_reliability(ref, grid).global_reliability, grid.coverage()});
            });
            save_grid_csv(final_grid, grid_tmp.string());
            write_series_csv(series, series_tmp);
            fs::rename(grid_tmp, dir / grid_name);
            fs::rename(series_tmp, dir / series_name);
            rec.files.push_back(record_file(dir, grid_name));
            rec.files.push_back(record_file(dir, series_name));
            rec.final_coverage = series.back().coverage;
            rec.final_global_reliability = series.back().global_reliability;
            rec.ok = true;
        }
        catch (const std::exception& e) {
            std::error_code ec;
            for (const auto& p : {grid_tmp, series_tmp, dir / grid_name, dir / series_name})
                fs::remove(p, ec);
            rec.files.clear();
            rec.ok = false;
            rec.error = e.what();
        }
        return rec;
    }

    json reference_json(const ReferenceSpec& spec, const ReferenceGrid& ref)
    {
        json j{
            {"provenance", std::string(to_string(ref.provenance()))},
            {"bins", ref.grid().bins_per_feature()},
            {"n_filled", ref.n_filled()},
            {"m_max", ref.m_max()},
        };
        switch (spec.kind) {
        case ReferenceSpec::Kind::Analytic:
            j["samples_per_bin"] = spec.samples_per_bin;
            break;
        case ReferenceSpec::Kind::FromRun:
            j["run"] = to_json(spec.run);
            break;
        case ReferenceSpec::Kind::Load:
            j["path"] = spec.path.string();
            j["sha256"] = sha256_file(spec.path);
            break;
        }
        return j;
    }
} // namespace

json RunManifest::to_json() const
{
    json run_entries = json::array();
    for (const auto& r : runs) {
        json files = json::array();
        for (const auto& f : r.files)
            files.push_back(file_json(f));
        json entry{
            {"label", r.label},
            {"repetition", r.repetition},
            {"seed", r.seed},
            {"status", r.ok ? "ok" : "failed"},
            {"files", std::move(files)},
        };
        if (r.ok) {
            entry["final_coverage"] = r.final_coverage;
            entry["final_global_reliability"] = r.final_global_reliability;
        }
        else {
            entry["error"] = r.error;
        }
        run_entries.push_back(std::move(entry));
    }
    json extras = json::array();
    for (const auto& f : extra_files)
        extras.push_back(file_json(f));
    return json{
        {"software", {{"name", "qdbench"}, {"version", kVersion}}},
        {"started_at", started_at},
        {"duration_seconds", duration_seconds},
        {"config", config},
        {"reference", reference},
        {"runs", std::move(run_entries)},
        {"extra_files", std::move(extras)},
        {"status", all_ok() ? "ok" : "failed"},
    };
}

RunManifest run_experiment(const ExperimentConfig& cfg)
{
    cfg.validate();
    const auto wall_start = std::chrono::system_clock::now();
    const auto start = std::chrono::steady_clock::now();

    const fs::path dir = cfg.output_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw std::runtime_error("cannot create output directory '" + dir.string() + "'");
    {
        const fs::path probe = dir / ".write-probe";
        std::ofstream out(probe);
        if (!out)
            throw std::runtime_error("output directory '" + dir.string() + "' is not writable");
        out.close();
        fs::remove(probe, ec);
    }

    RunManifest manifest;
    manifest.started_at = utc_timestamp(wall_start);
    manifest.config = to_json(cfg);

    const std::size_t bins = cfg.runs.front().run.bins_per_feature;
    const ReferenceGrid reference = build_reference(cfg.reference, bins);
    manifest.reference = reference_json(cfg.reference, reference);
    if (cfg.save_reference) {
        save_grid_csv(reference.grid(), (dir / "reference.grid.csv").string());
        manifest.extra_files.push_back(record_file(dir, "reference.grid.csv"));
    }

    std::vector<Task> tasks;
    for (const auto& r : cfg.runs)
        for (std::size_t k = 0; k < cfg.repetitions; ++k)
            tasks.push_back({&r, k});
    manifest.runs.resize(tasks.size());

    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t t = next++; t < tasks.size(); t = next++)
            manifest.runs[t] = execute(tasks[t], reference, dir);
    };
    const std::size_t jobs = std::min(cfg.jobs, tasks.size());
    if (jobs <= 1) {
        worker();
    }
    else {
        std::vector<std::jthread> pool;
        for (std::size_t j = 0; j < jobs; ++j)
            pool.emplace_back(worker);
    }

    manifest.duration_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ofstream out(dir / kManifestName, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write manifest in '" + dir.string() + "'");
    out << manifest.to_json().dump(2) << '\n';
    return manifest;
}

} // namespace qdbench
