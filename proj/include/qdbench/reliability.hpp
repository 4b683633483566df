#pragma once

#include <stdexcept>
#include <string_view>
#include <vector>

#include <qdbench/archive.hpp>
#include <qdbench/mapelites.hpp>

namespace qdbench {

class DegenerateReferenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Provenance { Analytic, FromRun, Loaded };

std::string_view to_string(Provenance p);

/// Oracle grid M with its cached worst quality M_max and fill count n(M).
class ReferenceGrid {
public:
    /// Throws DegenerateReferenceError if `grid` is empty.
    ReferenceGrid(Grid grid, Provenance provenance);

    const Grid& grid() const { return _grid; }
    Fitness m_max() const { return _m_max; }
    std::size_t n_filled() const { return _grid.fill_count(); }
    Provenance provenance() const { return _provenance; }

private:
    Grid _grid;
    Fitness _m_max;
    Provenance _provenance;
};

/// Minimum of the 1-D Rastrigin term over one bin, found by dense sampling.
struct MarginalMinimum {
    double argmin = 0.0;
    double value = 0.0;
};

/// Per-bin minima of x^2 + 10 - 10 cos(2 pi x) on a `bins`-way split of the
/// domain. Each bin is sampled at `samples_per_bin` equidistant points starting
/// at its left edge; the right edge is included only for the last bin.
std::vector<MarginalMinimum> marginal_bin_minima(std::size_t bins, std::size_t samples_per_bin);

/// Exact-up-to-sampling oracle for the 2-D illumination, built from the 1-D
/// bin minima by separability. Every bin is filled; bin (i, j) stores the
/// genome (argmin_i, argmin_j).
ReferenceGrid build_reference_analytic(std::size_t bins_per_feature, std::size_t samples_per_bin = 10'000);

/// Oracle from a MAP-Elites run on the 2-D function. Throws DomainError unless
/// cfg.dimensions == 2.
ReferenceGrid build_reference_from_run(const RunConfig& cfg);

/// L(m_xy): zero when either bin is unfilled, otherwise
/// max((M_max - m) / (M_max - M), 0). When M equals M_max the ratio is
/// replaced by 1 if m <= M, else 0. Not clamped above 1.
double local_reliability(const ReferenceGrid& ref, const Grid& m, std::size_t x, std::size_t y);

struct ReliabilityReport {
    std::size_t bins_per_feature = 0;
    std::vector<double> local; // row-major, bins_per_feature^2
    double global_reliability = 0.0;

    double at(std::size_t x, std::size_t y) const { return local.at(x * bins_per_feature + y); }
};

/// G(m) = sum of local reliabilities / n(M). Throws std::invalid_argument on shape mismatch.
ReliabilityReport global_reliability(const ReferenceGrid& ref, const Grid& m);

struct SeriesPoint {
    std::size_t evaluations = 0;
    double global_reliability = 0.0;
    double coverage = 0.0;
};

std::vector<SeriesPoint> reliability_series(const ReferenceGrid& ref, const RunTrace& trace);

} // namespace qdbench
