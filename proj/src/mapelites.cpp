#include <qdbench/mapelites.hpp>

#include <algorithm>
#include <exception>
#include <optional>
#include <thread>

namespace qdbench {

void RunConfig::validate() const
{
    if (dimensions < 2)
        throw InvalidField("dimensions", "must be >= 2");
    if (budget == 0)
        throw InvalidField("budget", "must be positive");
    if (init_count == 0)
        throw InvalidField("init_count", "must be positive");
    if (init_count > budget)
        throw InvalidField("init_count", "must not exceed budget");
    if (batch_size == 0)
        throw InvalidField("batch_size", "must be positive");
    if (checkpoint_every == 0)
        throw InvalidField("checkpoint_every", "must be positive");
    if (checkpoint_every > budget)
        throw InvalidField("checkpoint_every", "must not exceed budget");
    if (bins_per_feature == 0)
        throw InvalidField("bins", "must be positive");
    if (workers == 0)
        throw InvalidField("workers", "must be positive");
    op.validate();
}

const Elite& select_parent(const Grid& grid, Engine& rng)
{
    if (grid.empty())
        throw EmptyGridError("select_parent: grid has no elites");
    const auto occupied = grid.occupied();
    const std::size_t k = occupied[uniform_index(rng, occupied.size())];
    return *grid.at(grid.unflatten(k));
}

namespace {
    // Calls body(s) for s in [0, count), split over contiguous chunks.
    template <typename Body>
    void parallel_slots(std::size_t count, std::size_t workers, Body&& body)
    {
        workers = std::min(workers, count);
        if (workers <= 1) {
            for (std::size_t s = 0; s < count; ++s)
                body(s);
            return;
        }
        std::vector<std::exception_ptr> errors(workers);
        {
            std::vector<std::jthread> threads;
            threads.reserve(workers);
            const std::size_t chunk = (count + workers - 1) / workers;
            for (std::size_t w = 0; w < workers; ++w) {
                const std::size_t begin = w * chunk;
                const std::size_t end = std::min(count, begin + chunk);
                if (begin >= end)
                    break;
                threads.emplace_back([&body, &error = errors[w], begin, end] {
                    try {
                        for (std::size_t s = begin; s < end; ++s)
                            body(s);
                    }
                    catch (...) {
                        error = std::current_exception();
                    }
                });
            }
        }
        for (const auto& e : errors)
            if (e)
                std::rethrow_exception(e);
    }
} // namespace

Grid run(const RunConfig& cfg, const Objective& objective, const CheckpointSink& sink)
{
    cfg.validate();
    if (objective.dimensions() != cfg.dimensions)
        throw InvalidField("objective", "dimensionality does not match run configuration");

    Grid grid(cfg.grid_shape());
    Engine init_rng = derive_stream(cfg.seed, StreamPurpose::Initialisation);
    Engine selection_rng = derive_stream(cfg.seed, StreamPurpose::Selection);
    std::vector<Engine> slot_rngs;
    slot_rngs.reserve(cfg.batch_size);
    for (std::size_t s = 0; s < cfg.batch_size; ++s)
        slot_rngs.push_back(derive_stream(cfg.seed, StreamPurpose::Mutation, s));

    std::size_t used = 0;
    std::size_t next_checkpoint = cfg.checkpoint_every;
    std::vector<std::optional<Elite>> candidates(cfg.batch_size);
    std::vector<const Elite*> parents(cfg.batch_size);

    const auto batch_len = [&](std::size_t phase_end) {
        return std::min({cfg.batch_size, phase_end - used, next_checkpoint - used});
    };
    const auto commit = [&](std::size_t count) {
        for (std::size_t s = 0; s < count; ++s)
            grid.insert(std::move(*candidates[s]));
        used += count;
        if (used == next_checkpoint) {
            if (sink)
                sink(used, grid);
            next_checkpoint = std::min(next_checkpoint + cfg.checkpoint_every, cfg.budget);
        }
    };

    while (used < cfg.init_count) {
        const std::size_t count = batch_len(cfg.init_count);
        std::vector<Genome> genomes;
        genomes.reserve(count);
        for (std::size_t s = 0; s < count; ++s)
            genomes.push_back(random_genome(cfg.dimensions, init_rng));
        parallel_slots(count, cfg.workers, [&](std::size_t s) { candidates[s] = make_elite(objective, std::move(genomes[s])); });
        commit(count);
    }

    while (used < cfg.budget) {
        const std::size_t count = batch_len(cfg.budget);
        for (std::size_t s = 0; s < count; ++s)
            parents[s] = grid.empty() ? nullptr : &select_parent(grid, selection_rng);
        parallel_slots(count, cfg.workers, [&](std::size_t s) {
            Engine& rng = slot_rngs[s];
            Genome child = parents[s] ? mutate(parents[s]->genome, cfg.op, rng) : random_genome(cfg.dimensions, rng);
            candidates[s] = make_elite(objective, std::move(child));
        });
        commit(count);
    }
    return grid;
}

RunTrace run(const RunConfig& cfg, const Objective& objective)
{
    RunTrace trace;
    trace.final_grid = run(cfg, objective, [&](std::size_t evaluations, const Grid& grid) {
        trace.checkpoints.push_back({evaluations, grid, grid.coverage()});
    });
    return trace;
}

} // namespace qdbench
