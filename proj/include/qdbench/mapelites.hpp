#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <qdbench/archive.hpp>
#include <qdbench/objective.hpp>
#include <qdbench/random.hpp>
#include <qdbench/variation.hpp>

namespace qdbench {

struct RunConfig {
    std::size_t dimensions = 2;
    std::size_t budget = 1'000'000; // total objective evaluations
    std::size_t init_count = 4096;
    std::size_t batch_size = 64;
    OperatorConfig op;
    std::uint64_t seed = 0;
    std::size_t checkpoint_every = 10'000;
    std::size_t bins_per_feature = 64;
    // Evaluation threads. Results do not depend on this value.
    std::size_t workers = 1;

    GridShape grid_shape() const { return GridShape{bins_per_feature}; }

    /// Throws DomainError naming the offending field.
    void validate() const;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

struct Checkpoint {
    std::size_t evaluations_used = 0;
    Grid grid;
    double coverage = 0.0;
};

struct RunTrace {
    std::vector<Checkpoint> checkpoints;
    Grid final_grid;
};

/// Receives the live grid every `checkpoint_every` evaluations and at the budget.
using CheckpointSink = std::function<void(std::size_t evaluations_used, const Grid& grid)>;

/// Uniform choice among occupied cells. Throws EmptyGridError on an empty grid.
const Elite& select_parent(const Grid& grid, Engine& rng);

/// Runs MAP-Elites and streams checkpoints to `sink`; returns the final grid.
///
/// Phase one inserts `init_count` uniform genomes, phase two repeats batches of
/// select, mutate, evaluate, insert until exactly `budget` evaluations are spent.
/// Batches never straddle a checkpoint. Parents for a batch are drawn from the
/// grid as it stood at the batch start, candidates are evaluated (possibly in
/// parallel) and inserted in slot order. Streams are derived from `cfg.seed`:
/// one for initialisation, one for selection, one per batch slot for mutation.
Grid run(const RunConfig& cfg, const Objective& objective, const CheckpointSink& sink);

/// Same run, retaining a snapshot of the grid at every checkpoint.
RunTrace run(const RunConfig& cfg, const Objective& objective);

} // namespace qdbench
