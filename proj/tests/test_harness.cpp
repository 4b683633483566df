#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <qdbench/digest.hpp>
#include <qdbench/harness.hpp>

using namespace qdbench;
namespace fs = std::filesystem;

namespace {

std::string key_of(const std::string& text)
{
    try {
        parse_config(text);
    }
    catch (const ConfigError& e) {
        return e.key();
    }
    return "";
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t count_suffix(const fs::path& dir, const std::string& suffix)
{
    std::size_t n = 0;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().filename().string().ends_with(suffix))
            ++n;
    return n;
}

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("qdbench-test-" + name);
    fs::remove_all(p);
    return p;
}

ExperimentConfig small_experiment(const fs::path& out)
{
    Overrides o;
    o.budget = 1000;
    o.dims = {3};
    o.repetitions = 3;
    o.checkpoint_every = 250;
    o.init_count = 200;
    o.output_dir = out;
    return apply_overrides(ExperimentConfig{}, o);
}

} // namespace

TEST_CASE("parse_config: minimal configuration resolves defaults")
{
    const ExperimentConfig cfg = parse_config(R"({
        "runs": [ { "dimensions": 14, "operator": { "kind": "polynomial-bounded" } } ],
        "reference": { "kind": "analytic" }
    })");
    REQUIRE(cfg.runs.size() == 1);
    const RunConfig& r = cfg.runs[0].run;
    CHECK(cfg.runs[0].label == "ME1-n14");
    CHECK(r.bins_per_feature == 64);
    CHECK(r.budget == 1'000'000);
    CHECK(r.op.mutation_prob == 0.5);
    CHECK(r.op.eta == 10.0);
    CHECK(r.init_count == 4096);
    CHECK(r.batch_size == 64);
    CHECK(r.checkpoint_every == 10'000);
    CHECK(cfg.repetitions == 1);
    CHECK(cfg.reference.kind == ReferenceSpec::Kind::Analytic);
    CHECK(cfg.reference.samples_per_bin == 10'000);

    const auto gauss = parse_config(R"({"runs": [{"dimensions": 3, "operator": {"kind": "gaussian"}}]})");
    CHECK(gauss.runs[0].label == "ME2-n3");
    CHECK(gauss.runs[0].run.op.sigma == 1.0);
    CHECK(gauss.runs[0].run.op.mean == 0.0);
}

TEST_CASE("parse_config: errors name the offending key")
{
    CHECK(key_of(R"({"runs": [{"dimensions": 3, "operator": {"kind": "cauchy"}}]})") == "runs[0].operator.kind");
    CHECK(key_of(R"({"runs": [{"dimensions": 3, "operator": {"kind": "poly"}}], "repetitions": 0})") == "repetitions");
    CHECK(key_of(R"({"runs": [{"operator": {"kind": "poly"}}]})") == "runs[0].dimensions");
    CHECK(key_of(R"({"runs": [{"dimensions": 3}]})") == "runs[0].operator");
    CHECK(key_of(R"({"runs": [{"dimensions": 3, "operator": {}}]})") == "runs[0].operator.kind");
    CHECK(key_of(R"({"reference": {"kind": "analytic"}})") == "runs");
    CHECK(key_of(R"({"runs": [{"dimensions": 3, "operator": {"kind": "poly"}, "budgett": 5}]})") == "runs[0].budgett");
    CHECK(key_of(R"({"runs": [{"dimensions": -3, "operator": {"kind": "poly"}}]})") == "runs[0].dimensions");
    CHECK(key_of(R"({"runs": [{"dimensions": 1, "operator": {"kind": "poly"}}]})") == "runs[0].dimensions");
    CHECK(key_of(R"({"runs": [{"dimensions": 3, "operator": {"kind": "poly", "mutation_prob": 2}}]})") == "runs[0].operator.mutation_prob");
    CHECK(key_of(R"({"runs": [{"dimensions": 3, "budget": 10, "init_count": 20, "operator": {"kind": "poly"}}]})") == "runs[0].init_count");
    CHECK(key_of(R"({"runs": [{"dimensions": 3, "operator": {"kind": "poly"}}, {"dimensions": 3, "operator": {"kind": "poly"}}]})") == "runs[1].label");
    CHECK(key_of(R"({"runs": [{"dimensions": 3, "operator": {"kind": "poly"}}], "reference": {"kind": "oracle"}})") == "reference.kind");
    CHECK(key_of(R"({"runs": [{"dimensions": 3, "operator": {"kind": "poly"}}], "reference": {"kind": "run", "run": {"dimensions": 3}}})") == "reference.run.dimensions");
    CHECK(key_of(R"({"runs": [{"dimensions": 3, "operator": {"kind": "poly"}}], "reference": {"kind": "load"}})") == "reference.path");
    CHECK(key_of(R"({"runs": [{"dimensions": 3, "label": "a b", "operator": {"kind": "poly"}}]})") == "runs[0].label");
    CHECK(key_of("{not json") == "<root>");
}

TEST_CASE("parse_config: small budgets shrink unset init_count and checkpoint_every")
{
    const auto cfg = parse_config(R"({"runs": [{"dimensions": 3, "budget": 1000, "operator": {"kind": "poly"}}]})");
    CHECK(cfg.runs[0].run.init_count == 1000);
    CHECK(cfg.runs[0].run.checkpoint_every == 1000);
}

TEST_CASE("to_json echo parses back to the same configuration")
{
    ExperimentConfig cfg = parse_config(R"({
        "runs": [
            { "label": "A", "dimensions": 6, "budget": 5000, "init_count": 100, "seed": 9, "bins": 32,
              "operator": { "kind": "gaussian", "sigma": 0.3, "mean": 0.1, "mutation_prob": 0.25 } },
            { "label": "B", "dimensions": 3, "budget": 5000, "bins": 32, "operator": { "kind": "poly", "eta": 20 } }
        ],
        "reference": { "kind": "run", "run": { "budget": 4000, "seed": 3 } },
        "output_dir": "somewhere", "repetitions": 2, "jobs": 2, "save_reference": true
    })");
    CHECK(cfg.reference.run.bins_per_feature == 32);
    const ExperimentConfig back = parse_config(to_json(cfg).dump());
    REQUIRE(back.runs.size() == cfg.runs.size());
    for (std::size_t i = 0; i < cfg.runs.size(); ++i) {
        CHECK(back.runs[i].label == cfg.runs[i].label);
        CHECK(back.runs[i].run == cfg.runs[i].run);
    }
    CHECK(back.reference.kind == cfg.reference.kind);
    CHECK(back.reference.run == cfg.reference.run);
    CHECK(back.output_dir == cfg.output_dir);
    CHECK(back.repetitions == 2);
    CHECK(back.jobs == 2);
    CHECK(back.save_reference);
    CHECK(to_json(back) == to_json(cfg));
}

TEST_CASE("apply_overrides")
{
    SUBCASE("flags alone describe one ME1 run")
    {
        Overrides o;
        o.dims = {3};
        o.budget = 1000;
        const auto cfg = apply_overrides({}, o);
        REQUIRE(cfg.runs.size() == 1);
        CHECK(cfg.runs[0].label == "ME1-n3");
        CHECK(cfg.runs[0].run.budget == 1000);
        CHECK(cfg.runs[0].run.init_count == 1000);
    }
    SUBCASE("lists expand to the operator x dimension matrix")
    {
        Overrides o;
        o.dims = {3, 6, 10, 14};
        o.variations = {"poly", "gauss"};
        o.sigma = 0.5;
        const auto cfg = apply_overrides({}, o);
        REQUIRE(cfg.runs.size() == 8);
        CHECK(cfg.runs[0].label == "ME1-n3");
        CHECK(cfg.runs[7].label == "ME2-n14");
        CHECK(cfg.runs[7].run.op.kind == OperatorKind::Gaussian);
        CHECK(cfg.runs[7].run.op.sigma == 0.5);
    }
    SUBCASE("scalar flags override every configured run")
    {
        ExperimentConfig base = parse_config(R"({"runs": [
            {"label": "x", "dimensions": 3, "operator": {"kind": "poly"}},
            {"label": "y", "dimensions": 6, "operator": {"kind": "gauss"}}]})");
        Overrides o;
        o.seed = 77;
        o.mutation_prob = 0.2;
        o.bins = 32;
        o.reference = "load:ref.csv";
        const auto cfg = apply_overrides(base, o);
        CHECK(cfg.runs[0].label == "x");
        CHECK(cfg.runs[1].run.seed == 77);
        CHECK(cfg.runs[1].run.op.mutation_prob == 0.2);
        CHECK(cfg.runs[0].run.bins_per_feature == 32);
        CHECK(cfg.reference.kind == ReferenceSpec::Kind::Load);
        CHECK(cfg.reference.path == "ref.csv");
    }
    SUBCASE("bad values")
    {
        Overrides o;
        o.variations = {"cauchy"};
        CHECK_THROWS_AS(apply_overrides({}, o), ConfigError);
        Overrides r;
        r.reference = "sometimes";
        CHECK_THROWS_AS(apply_overrides({}, r), ConfigError);
        Overrides z;
        z.repetitions = 0;
        CHECK_THROWS_AS(apply_overrides({}, z), ConfigError);
    }
}

TEST_CASE("write_series_csv")
{
    std::vector<SeriesPoint> series;
    for (std::size_t k = 1; k <= 100; ++k)
        series.push_back({k * 100, 0.01 * static_cast<double>(k), 0.5});
    std::ostringstream out;
    write_series_csv(series, out);
    const std::string text = out.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 101);
    CHECK(text.rfind("evaluations,global_reliability,coverage\n100,0.01,0.5\n", 0) == 0);
    CHECK_THROWS_AS(write_series_csv({}, out), std::invalid_argument);
}

TEST_CASE("sha256")
{
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("run_experiment: files, manifest, determinism")
{
    const fs::path out = scratch("experiment");
    const ExperimentConfig cfg = small_experiment(out);
    const RunManifest m = run_experiment(cfg);
    CHECK(m.all_ok());
    CHECK(count_suffix(out, ".grid.csv") == 3);
    CHECK(count_suffix(out, ".series.csv") == 3);
    CHECK(fs::exists(out / kManifestName));
    CHECK(std::distance(fs::directory_iterator(out), fs::directory_iterator{}) == 7);

    const auto json = nlohmann::json::parse(slurp(out / kManifestName));
    CHECK(json["status"] == "ok");
    REQUIRE(json["runs"].size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        const auto& r = json["runs"][k];
        CHECK(r["seed"] == k);
        for (const auto& f : r["files"])
            CHECK(f["sha256"] == sha256_file(out / f["path"].get<std::string>()));
        const std::string series = slurp(out / ("ME1-n3-rep" + std::to_string(k) + ".series.csv"));
        CHECK(std::count(series.begin(), series.end(), '\n') == 5);
    }
    CHECK(json["config"] == to_json(cfg));

    // Same config, more parallelism: same bytes.
    const fs::path again = scratch("experiment-again");
    ExperimentConfig parallel = cfg;
    parallel.output_dir = again;
    parallel.jobs = 3;
    for (auto& r : parallel.runs)
        r.run.workers = 4;
    CHECK(run_experiment(parallel).all_ok());
    for (const auto& entry : fs::directory_iterator(out)) {
        const auto name = entry.path().filename().string();
        if (name != kManifestName)
            CHECK(slurp(entry.path()) == slurp(again / name));
    }
    fs::remove_all(out);
    fs::remove_all(again);
}

TEST_CASE("run_experiment: references")
{
    const fs::path out = scratch("references");
    ExperimentConfig cfg = small_experiment(out);
    cfg.repetitions = 1;
    cfg.save_reference = true;
    cfg.reference.samples_per_bin = 200;
    RunManifest m = run_experiment(cfg);
    REQUIRE(m.all_ok());
    CHECK(m.reference["provenance"] == "analytic");
    REQUIRE(m.extra_files.size() == 1);

    ExperimentConfig loaded = cfg;
    loaded.save_reference = false;
    loaded.reference.kind = ReferenceSpec::Kind::Load;
    loaded.reference.path = out / "reference.grid.csv";
    loaded.output_dir = out / "loaded";
    const RunManifest lm = run_experiment(loaded);
    REQUIRE(lm.all_ok());
    CHECK(lm.reference["provenance"] == "loaded");
    CHECK(lm.reference["sha256"] == m.extra_files[0].sha256);
    CHECK(lm.runs[0].final_global_reliability == m.runs[0].final_global_reliability);

    ExperimentConfig from_run = cfg;
    from_run.save_reference = false;
    from_run.reference.kind = ReferenceSpec::Kind::FromRun;
    from_run.reference.run.budget = 2000;
    from_run.reference.run.init_count = 500;
    from_run.reference.run.checkpoint_every = 2000;
    from_run.output_dir = out / "from-run";
    const RunManifest rm = run_experiment(from_run);
    REQUIRE(rm.all_ok());
    CHECK(rm.reference["provenance"] == "from-run");

    loaded.reference.path = out / "missing.csv";
    CHECK_THROWS(run_experiment(loaded));
    fs::remove_all(out);
}

TEST_CASE("run_experiment: a failing run is recorded and leaves no partial output")
{
    const fs::path out = scratch("failure");
    ExperimentConfig cfg = small_experiment(out);
    cfg.repetitions = 2;
    // A directory squatting on the temporary file name makes the grid write fail.
    fs::create_directories(out / "ME1-n3-rep1.grid.csv.tmp");
    const RunManifest m = run_experiment(cfg);
    CHECK_FALSE(m.all_ok());
    CHECK(m.runs[0].ok);
    CHECK_FALSE(m.runs[1].ok);
    CHECK_FALSE(m.runs[1].error.empty());
    CHECK_FALSE(fs::exists(out / "ME1-n3-rep1.series.csv"));
    CHECK_FALSE(fs::exists(out / "ME1-n3-rep1.grid.csv"));
    const auto json = nlohmann::json::parse(slurp(out / kManifestName));
    CHECK(json["status"] == "failed");
    CHECK(json["runs"][1]["status"] == "failed");
    fs::remove_all(out);
}

TEST_CASE("run_experiment: unwritable output directory")
{
    const fs::path blocker = scratch("blocker");
    std::ofstream(blocker) << "file";
    ExperimentConfig cfg = small_experiment(blocker / "sub");
    CHECK_THROWS_AS(run_experiment(cfg), std::runtime_error);
    fs::remove(blocker);
}
