#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <qdbench/objective.hpp>

namespace qdbench {

/// Occupant of one grid cell. Fitness and features are cached at construction.
struct Elite {
    Genome genome;
    Fitness fitness = 0.0;
    Features features;

    friend bool operator==(const Elite&, const Elite&) = default;
};

/// Evaluates `genome` once and caches fitness and descriptor.
Elite make_elite(const Objective& objective, Genome genome);

struct BinIndex {
    std::size_t i = 0;
    std::size_t j = 0;

    friend bool operator==(const BinIndex&, const BinIndex&) = default;
};

struct GridShape {
    std::size_t bins_per_feature = 64;
    std::array<Bounds, 2> feature_bounds{domain_bounds(), domain_bounds()};

    std::size_t cell_count() const { return bins_per_feature * bins_per_feature; }

    friend bool operator==(const GridShape&, const GridShape&) = default;
};

class EmptyGridError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bin of a single coordinate: half-open [edge, edge + w), last bin closed at `upper`.
/// Throws std::out_of_range outside [lower, upper].
std::size_t bin_of(double value, const Bounds& bounds, std::size_t bins);

BinIndex bin_index(const Features& f, const GridShape& shape);

/// Centre point of bin (i, j) in feature space.
Features bin_centre(const BinIndex& b, const GridShape& shape);

enum class InsertOutcome { FilledEmptyBin, ReplacedWorse, Rejected };

/// MAP-Elites grid: at most one elite per cell, strict-improvement replacement
/// under minimisation. Single writer; const methods may run concurrently.
class Grid {
public:
    explicit Grid(GridShape shape = {});

    const GridShape& shape() const { return _shape; }
    std::size_t bins_per_feature() const { return _shape.bins_per_feature; }
    std::size_t fill_count() const { return _occupied.size(); }
    bool empty() const { return _occupied.empty(); }

    InsertOutcome insert(Elite e);

    const std::optional<Elite>& at(std::size_t i, std::size_t j) const;
    const std::optional<Elite>& at(const BinIndex& b) const { return at(b.i, b.j); }

    /// Flat cell indices (i * bins + j) of occupied cells, in first-fill order.
    std::span<const std::size_t> occupied() const { return _occupied; }
    BinIndex unflatten(std::size_t flat) const { return {flat / bins_per_feature(), flat % bins_per_feature()}; }

    double coverage() const;

    /// Largest (worst) stored fitness. Throws EmptyGridError on an empty grid.
    Fitness max_quality() const;

    friend bool operator==(const Grid& a, const Grid& b) { return a._shape == b._shape && a._cells == b._cells; }

private:
    std::size_t flat(std::size_t i, std::size_t j) const;

    GridShape _shape;
    std::vector<std::optional<Elite>> _cells;
    std::vector<std::size_t> _occupied;
};

/// Grid dump: header `bin_x,bin_y,fitness,g0,...,g{n-1}`, one row per occupied
/// bin sorted by (bin_x, bin_y), 17 significant digits.
void write_grid_csv(const Grid& grid, std::ostream& out);

/// Parses a grid dump. Rows whose features do not map to the stated bin are rejected.
/// Throws std::runtime_error on malformed input.
Grid read_grid_csv(std::istream& in, const GridShape& shape);

void save_grid_csv(const Grid& grid, const std::string& path);
Grid load_grid_csv(const std::string& path, const GridShape& shape);

} // namespace qdbench
