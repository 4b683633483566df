#include <qdbench/archive.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace qdbench {

Elite make_elite(const Objective& objective, Genome genome)
{
    Elite e;
    e.fitness = objective.evaluate(genome);
    e.features = objective.features(genome);
    e.genome = std::move(genome);
    return e;
}

std::size_t bin_of(double value, const Bounds& bounds, std::size_t bins)
{
    if (!(value >= bounds.lower && value <= bounds.upper))
        throw std::out_of_range("bin_of: feature " + std::to_string(value) + " outside [" + std::to_string(bounds.lower) + ", " + std::to_string(bounds.upper) + "]");
    if (value == bounds.upper)
        return bins - 1;
    // Multiply before dividing: with symmetric bounds, edges like 0.0 land exactly.
    const double scaled = (value - bounds.lower) * static_cast<double>(bins) / bounds.width();
    const auto idx = static_cast<std::size_t>(std::floor(scaled));
    return std::min(idx, bins - 1);
}

BinIndex bin_index(const Features& f, const GridShape& shape)
{
    return {bin_of(f.f0, shape.feature_bounds[0], shape.bins_per_feature),
        bin_of(f.f1, shape.feature_bounds[1], shape.bins_per_feature)};
}

Features bin_centre(const BinIndex& b, const GridShape& shape)
{
    const auto centre = [&](std::size_t k, const Bounds& bd) {
        const double w = bd.width() / static_cast<double>(shape.bins_per_feature);
        return bd.lower + (static_cast<double>(k) + 0.5) * w;
    };
    return {centre(b.i, shape.feature_bounds[0]), centre(b.j, shape.feature_bounds[1])};
}

Grid::Grid(GridShape shape) : _shape(shape)
{
    if (_shape.bins_per_feature == 0)
        throw DomainError("grid: bins_per_feature must be positive");
    for (const auto& b : _shape.feature_bounds)
        if (!(b.upper > b.lower))
            throw DomainError("grid: feature bounds must satisfy lower < upper");
    _cells.resize(_shape.cell_count());
}

std::size_t Grid::flat(std::size_t i, std::size_t j) const
{
    if (i >= bins_per_feature() || j >= bins_per_feature())
        throw std::out_of_range("grid: bin (" + std::to_string(i) + ", " + std::to_string(j) + ") outside " + std::to_string(bins_per_feature()) + "x" + std::to_string(bins_per_feature()));
    return i * bins_per_feature() + j;
}

const std::optional<Elite>& Grid::at(std::size_t i, std::size_t j) const
{
    return _cells[flat(i, j)];
}

InsertOutcome Grid::insert(Elite e)
{
    const BinIndex b = bin_index(e.features, _shape);
    const std::size_t k = flat(b.i, b.j);
    auto& cell = _cells[k];
    if (!cell) {
        cell = std::move(e);
        _occupied.push_back(k);
        return InsertOutcome::FilledEmptyBin;
    }
    // Ties keep the incumbent.
    if (cell->fitness > e.fitness) {
        cell = std::move(e);
        return InsertOutcome::ReplacedWorse;
    }
    return InsertOutcome::Rejected;
}

double Grid::coverage() const
{
    return static_cast<double>(fill_count()) / static_cast<double>(_shape.cell_count());
}

Fitness Grid::max_quality() const
{
    if (empty())
        throw EmptyGridError("max_quality: grid has no elites");
    Fitness worst = _cells[_occupied.front()]->fitness;
    for (std::size_t k : _occupied)
        worst = std::max(worst, _cells[k]->fitness);
    return worst;
}

void write_grid_csv(const Grid& grid, std::ostream& out)
{
    std::size_t n = 0;
    if (!grid.empty())
        n = grid.at(grid.unflatten(grid.occupied().front()))->genome.size();

    out << "bin_x,bin_y,fitness";
    for (std::size_t d = 0; d < n; ++d)
        out << ",g" << d;
    out << '\n';

    const auto old_precision = out.precision(17);
    const auto old_flags = out.flags();
    out.unsetf(std::ios::floatfield);
    const std::size_t bins = grid.bins_per_feature();
    for (std::size_t i = 0; i < bins; ++i) {
        for (std::size_t j = 0; j < bins; ++j) {
            const auto& cell = grid.at(i, j);
            if (!cell)
                continue;
            out << i << ',' << j << ',' << cell->fitness;
            for (double v : cell->genome)
                out << ',' << v;
            out << '\n';
        }
    }
    out.precision(old_precision);
    out.flags(old_flags);
}

namespace {
    std::vector<std::string_view> split(std::string_view line)
    {
        std::vector<std::string_view> fields;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            fields.push_back(line.substr(start, comma - start));
            if (comma == std::string_view::npos)
                break;
            start = comma + 1;
        }
        return fields;
    }

    template <typename T>
    T parse_number(std::string_view s, std::size_t line_no)
    {
        T value{};
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
        if (ec != std::errc{} || ptr != s.data() + s.size())
            throw std::runtime_error("grid csv line " + std::to_string(line_no) + ": cannot parse '" + std::string(s) + "'");
        return value;
    }
} // namespace

Grid read_grid_csv(std::istream& in, const GridShape& shape)
{
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("grid csv: missing header");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    const auto header = split(line);
    if (header.size() < 3 || header[0] != "bin_x" || header[1] != "bin_y" || header[2] != "fitness")
        throw std::runtime_error("grid csv: header must be bin_x,bin_y,fitness,g0,g1,...");
    const std::size_t n = header.size() - 3;
    for (std::size_t d = 0; d < n; ++d)
        if (header[3 + d] != "g" + std::to_string(d))
            throw std::runtime_error("grid csv: unexpected column '" + std::string(header[3 + d]) + "'");

    Grid grid(shape);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        const auto fields = split(line);
        if (fields.size() != header.size())
            throw std::runtime_error("grid csv line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) + " fields");
        if (n < 2)
            throw std::runtime_error("grid csv line " + std::to_string(line_no) + ": rows need at least g0 and g1");
        const BinIndex stated{parse_number<std::size_t>(fields[0], line_no), parse_number<std::size_t>(fields[1], line_no)};
        Elite e;
        e.fitness = parse_number<double>(fields[2], line_no);
        e.genome.reserve(n);
        for (std::size_t d = 0; d < n; ++d)
            e.genome.push_back(parse_number<double>(fields[3 + d], line_no));
        e.features = {e.genome[0], e.genome[1]};
        if (bin_index(e.features, shape) != stated)
            throw std::runtime_error("grid csv line " + std::to_string(line_no) + ": genome does not map to the stated bin");
        if (grid.at(stated))
            throw std::runtime_error("grid csv line " + std::to_string(line_no) + ": duplicate bin");
        grid.insert(std::move(e));
    }
    return grid;
}

void save_grid_csv(const Grid& grid, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open '" + path + "' for writing");
    write_grid_csv(grid, out);
    if (!out)
        throw std::runtime_error("write failed for '" + path + "'");
}

Grid load_grid_csv(const std::string& path, const GridShape& shape)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open '" + path + "'");
    return read_grid_csv(in, shape);
}

} // namespace qdbench
