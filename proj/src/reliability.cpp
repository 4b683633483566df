#include <qdbench/reliability.hpp>

#include <cmath>
#include <limits>

namespace qdbench {

std::string_view to_string(Provenance p)
{
    switch (p) {
    case Provenance::Analytic:
        return "analytic";
    case Provenance::FromRun:
        return "from-run";
    case Provenance::Loaded:
        return "loaded";
    }
    return "unknown";
}

namespace {
    Fitness checked_max_quality(const Grid& grid)
    {
        if (grid.empty())
            throw DegenerateReferenceError("reference grid has no filled bins");
        return grid.max_quality();
    }
} // namespace

ReferenceGrid::ReferenceGrid(Grid grid, Provenance provenance)
    : _grid(std::move(grid)), _m_max(checked_max_quality(_grid)), _provenance(provenance)
{
}

std::vector<MarginalMinimum> marginal_bin_minima(std::size_t bins, std::size_t samples_per_bin)
{
    if (bins == 0)
        throw DomainError("analytic oracle: bins must be >= 1");
    if (samples_per_bin < 2)
        throw DomainError("analytic oracle: samples_per_bin must be >= 2");

    const Bounds b = domain_bounds();
    const double nb = static_cast<double>(bins);
    std::vector<MarginalMinimum> minima(bins);
    for (std::size_t k = 0; k < bins; ++k) {
        const bool last = k + 1 == bins;
        const double left = b.lower + b.width() * static_cast<double>(k) / nb;
        const double right = last ? b.upper : b.lower + b.width() * static_cast<double>(k + 1) / nb;
        const double steps = static_cast<double>(last ? samples_per_bin - 1 : samples_per_bin);

        MarginalMinimum best{left, std::numeric_limits<double>::infinity()};
        for (std::size_t s = 0; s < samples_per_bin; ++s) {
            double x = left + (right - left) * static_cast<double>(s) / steps;
            if (last && s + 1 == samples_per_bin)
                x = b.upper;
            // Rounding can push an edge sample into a neighbour; move it back by ulps.
            while (bin_of(x, b, bins) < k)
                x = std::nextafter(x, b.upper);
            while (bin_of(x, b, bins) > k)
                x = std::nextafter(x, b.lower);
            const double v = rastrigin::marginal(x);
            if (v < best.value)
                best = {x, v};
        }
        minima[k] = best;
    }
    return minima;
}

ReferenceGrid build_reference_analytic(std::size_t bins_per_feature, std::size_t samples_per_bin)
{
    const auto minima = marginal_bin_minima(bins_per_feature, samples_per_bin);
    const Rastrigin f2(2);
    Grid grid(GridShape{bins_per_feature});
    for (std::size_t i = 0; i < bins_per_feature; ++i)
        for (std::size_t j = 0; j < bins_per_feature; ++j)
            grid.insert(make_elite(f2, {minima[i].argmin, minima[j].argmin}));
    return ReferenceGrid(std::move(grid), Provenance::Analytic);
}

ReferenceGrid build_reference_from_run(const RunConfig& cfg)
{
    if (cfg.dimensions != 2)
        throw DomainError("run-based reference requires dimensions = 2, got " + std::to_string(cfg.dimensions));
    const Rastrigin f2(2);
    Grid grid = run(cfg, f2, CheckpointSink{});
    return ReferenceGrid(std::move(grid), Provenance::FromRun);
}

namespace {
    double local_term(Fitness m_max, Fitness reference, Fitness candidate)
    {
        if (reference == m_max)
            return candidate <= reference ? 1.0 : 0.0;
        return std::max((m_max - candidate) / (m_max - reference), 0.0);
    }

    void check_shape(const ReferenceGrid& ref, const Grid& m)
    {
        if (ref.grid().shape() != m.shape())
            throw std::invalid_argument("reliability: candidate grid shape differs from reference");
    }
} // namespace

double local_reliability(const ReferenceGrid& ref, const Grid& m, std::size_t x, std::size_t y)
{
    check_shape(ref, m);
    const auto& candidate = m.at(x, y);
    const auto& reference = ref.grid().at(x, y);
    if (!candidate || !reference)
        return 0.0;
    return local_term(ref.m_max(), reference->fitness, candidate->fitness);
}

ReliabilityReport global_reliability(const ReferenceGrid& ref, const Grid& m)
{
    check_shape(ref, m);
    const std::size_t bins = m.bins_per_feature();
    ReliabilityReport report;
    report.bins_per_feature = bins;
    report.local.assign(bins * bins, 0.0);
    double sum = 0.0;
    for (std::size_t x = 0; x < bins; ++x) {
        for (std::size_t y = 0; y < bins; ++y) {
            const auto& candidate = m.at(x, y);
            const auto& reference = ref.grid().at(x, y);
            if (!candidate || !reference)
                continue;
            const double l = local_term(ref.m_max(), reference->fitness, candidate->fitness);
            report.local[x * bins + y] = l;
            sum += l;
        }
    }
    report.global_reliability = sum / static_cast<double>(ref.n_filled());
    return report;
}

std::vector<SeriesPoint> reliability_series(const ReferenceGrid& ref, const RunTrace& trace)
{
    std::vector<SeriesPoint> series;
    series.reserve(trace.checkpoints.size());
    for (const auto& c : trace.checkpoints)
        series.push_back({c.evaluations_used, global_reliability(ref, c.grid).global_reliability, c.coverage});
    return series;
}

} // namespace qdbench
