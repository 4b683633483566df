#include <qdbench/objective.hpp>

#include <cmath>
#include <numbers>

namespace qdbench {

namespace rastrigin {
    double marginal(double x)
    {
        return x * x + kA - kA * std::cos(2.0 * std::numbers::pi * x);
    }

    Fitness evaluate(std::span<const double> x)
    {
        if (x.empty())
            throw DomainError("rastrigin: empty genome");
        double sum = kA * static_cast<double>(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double v = x[i];
            if (!kBounds.contains(v))
                throw DomainError("rastrigin: component " + std::to_string(i) + " = " + std::to_string(v) + " outside [-5.12, 5.12]");
            sum += v * v - kA * std::cos(2.0 * std::numbers::pi * v);
        }
        return sum;
    }
} // namespace rastrigin

Features extract_features(std::span<const double> g)
{
    if (g.size() < 2)
        throw DomainError("extract_features: genome needs at least two components");
    return {g[0], g[1]};
}

Rastrigin::Rastrigin(std::size_t dimensions) : _dimensions(dimensions)
{
    if (dimensions < 2)
        throw DomainError("rastrigin: dimensions must be >= 2, got " + std::to_string(dimensions));
}

std::string Rastrigin::name() const
{
    return "rastrigin-" + std::to_string(_dimensions);
}

void Rastrigin::check_length(std::span<const double> g) const
{
    if (g.size() != _dimensions)
        throw DomainError("rastrigin: expected " + std::to_string(_dimensions) + " components, got " + std::to_string(g.size()));
}

Fitness Rastrigin::evaluate(std::span<const double> g) const
{
    check_length(g);
    return rastrigin::evaluate(g);
}

Features Rastrigin::features(std::span<const double> g) const
{
    check_length(g);
    for (double v : g)
        if (!rastrigin::kBounds.contains(v))
            throw DomainError("rastrigin: genome outside domain");
    return extract_features(g);
}

} // namespace qdbench
