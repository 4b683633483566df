// Command-line front end: run experiments, build oracle grids, score grid dumps.

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include <qdbench/harness.hpp>

using namespace qdbench;

namespace {

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct RunOptions {
    std::string config_path;
    Overrides overrides;
    bool dry_run = false;
};

void add_run_options(CLI::App& cmd, RunOptions& opt)
{
    auto& o = opt.overrides;
    cmd.add_option("-c,--config", opt.config_path, "JSON experiment configuration")->check(CLI::ExistingFile);
    cmd.add_option("--budget", o.budget, "Total evaluations per run");
    cmd.add_option("--dims", o.dims, "Dimensionality; a list expands the run matrix")->delimiter(',');
    cmd.add_option("--bins", o.bins, "Bins per feature");
    cmd.add_option("--seed", o.seed, "Root seed (repetition k uses seed + k)");
    cmd.add_option("--variation", o.variations, "poly|gauss; a list expands the run matrix")->delimiter(',');
    cmd.add_option("--eta", o.eta, "Polynomial distribution index");
    cmd.add_option("--sigma", o.sigma, "Gaussian standard deviation");
    cmd.add_option("--mut-prob", o.mutation_prob, "Per-gene mutation probability");
    cmd.add_option("--reference", o.reference, "analytic | run | load:<path>");
    cmd.add_option("--samples-per-bin", o.samples_per_bin, "Analytic oracle sampling density");
    cmd.add_option("--out", o.output_dir, "Output directory");
    cmd.add_option("--repetitions", o.repetitions, "Repetitions per run");
    cmd.add_option("--init-count", o.init_count, "Random genomes before grid selection");
    cmd.add_option("--batch-size", o.batch_size, "Candidates per batch");
    cmd.add_option("--checkpoint-every", o.checkpoint_every, "Evaluations between checkpoints");
    cmd.add_option("--workers", o.workers, "Evaluation threads per run");
    cmd.add_option("--jobs", o.jobs, "Concurrent (run, repetition) pairs");
    cmd.add_flag("--save-reference", o.save_reference, "Also write reference.grid.csv");
    cmd.add_flag("--dry-run", opt.dry_run, "Print the resolved configuration and exit");
}

int do_run(const RunOptions& opt)
{
    ExperimentConfig base;
    if (!opt.config_path.empty())
        base = parse_config(read_file(opt.config_path));
    const ExperimentConfig cfg = apply_overrides(std::move(base), opt.overrides);
    if (opt.dry_run) {
        std::cout << to_json(cfg).dump(2) << '\n';
        return 0;
    }
    const RunManifest manifest = run_experiment(cfg);
    for (const auto& r : manifest.runs) {
        std::cout << std::left << std::setw(16) << r.label << " rep " << r.repetition << "  seed " << r.seed;
        if (r.ok)
            std::cout << "  G = " << std::setprecision(6) << r.final_global_reliability << "  coverage = " << r.final_coverage << '\n';
        else
            std::cout << "  FAILED: " << r.error << '\n';
    }
    std::cout << "manifest: " << (cfg.output_dir / kManifestName).string() << '\n';
    return manifest.all_ok() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"qdbench: MAP-Elites illumination of the Rastrigin function and reliability scoring"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    RunOptions run_opt;
    auto* run_cmd = app.add_subcommand("run", "Run an experiment (config file and/or flags)");
    add_run_options(*run_cmd, run_opt);

    std::size_t oracle_bins = 64;
    std::size_t oracle_samples = 10'000;
    std::string oracle_out;
    auto* oracle_cmd = app.add_subcommand("oracle", "Write the analytic reference grid as a grid dump");
    oracle_cmd->add_option("--bins", oracle_bins, "Bins per feature");
    oracle_cmd->add_option("--samples-per-bin", oracle_samples, "Sampling density per 1-D bin");
    oracle_cmd->add_option("-o,--out", oracle_out, "Output CSV path")->required();

    std::string score_ref;
    std::string score_grid;
    std::string score_local;
    std::size_t score_bins = 64;
    auto* score_cmd = app.add_subcommand("score", "Global reliability of a grid dump against a reference dump");
    score_cmd->add_option("--reference", score_ref, "Reference grid dump (omit for the analytic oracle)");
    score_cmd->add_option("--grid", score_grid, "Candidate grid dump")->required()->check(CLI::ExistingFile);
    score_cmd->add_option("--bins", score_bins, "Bins per feature of both grids");
    score_cmd->add_option("--local", score_local, "Write per-bin local reliability CSV here");

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e) {
        // Help and version exit 0; usage errors share the configuration-error code.
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (*run_cmd)
            return do_run(run_opt);

        if (*oracle_cmd) {
            const ReferenceGrid ref = build_reference_analytic(oracle_bins, oracle_samples);
            save_grid_csv(ref.grid(), oracle_out);
            std::cout << "wrote " << ref.n_filled() << " bins, M_max = " << std::setprecision(17) << ref.m_max() << '\n';
            return 0;
        }

        if (*score_cmd) {
            const GridShape shape{score_bins};
            const ReferenceGrid ref = score_ref.empty() ? build_reference_analytic(score_bins)
                                                        : ReferenceGrid(load_grid_csv(score_ref, shape), Provenance::Loaded);
            const Grid candidate = load_grid_csv(score_grid, shape);
            const ReliabilityReport report = global_reliability(ref, candidate);
            std::cout << std::setprecision(17) << "global_reliability " << report.global_reliability << '\n'
                      << "coverage " << candidate.coverage() << '\n';
            if (!score_local.empty()) {
                std::ofstream out(score_local);
                out << "bin_x,bin_y,local_reliability\n" << std::setprecision(17);
                for (std::size_t x = 0; x < score_bins; ++x)
                    for (std::size_t y = 0; y < score_bins; ++y)
                        out << x << ',' << y << ',' << report.at(x, y) << '\n';
            }
            return 0;
        }
    }
    catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    }
    catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
