#include <qdbench/variation.hpp>

#include <algorithm>
#include <cmath>

namespace qdbench {

std::string_view to_string(OperatorKind kind)
{
    switch (kind) {
    case OperatorKind::PolynomialBounded:
        return "polynomial-bounded";
    case OperatorKind::Gaussian:
        return "gaussian";
    }
    return "unknown";
}

OperatorKind parse_operator_kind(std::string_view text)
{
    if (text == "polynomial-bounded" || text == "poly")
        return OperatorKind::PolynomialBounded;
    if (text == "gaussian" || text == "gauss")
        return OperatorKind::Gaussian;
    throw InvalidField("operator.kind", "unknown operator kind '" + std::string(text) + "'");
}

OperatorConfig OperatorConfig::polynomial(double mutation_prob, double eta)
{
    OperatorConfig c;
    c.kind = OperatorKind::PolynomialBounded;
    c.mutation_prob = mutation_prob;
    c.eta = eta;
    return c;
}

OperatorConfig OperatorConfig::gaussian(double mutation_prob, double sigma, double mean)
{
    OperatorConfig c;
    c.kind = OperatorKind::Gaussian;
    c.mutation_prob = mutation_prob;
    c.sigma = sigma;
    c.mean = mean;
    return c;
}

void OperatorConfig::validate() const
{
    if (!(mutation_prob >= 0.0 && mutation_prob <= 1.0))
        throw InvalidField("operator.mutation_prob", "must lie in [0, 1]");
    if (kind == OperatorKind::PolynomialBounded && !(eta > 0.0 && std::isfinite(eta)))
        throw InvalidField("operator.eta", "must be positive");
    if (kind == OperatorKind::Gaussian) {
        if (!(sigma > 0.0 && std::isfinite(sigma)))
            throw InvalidField("operator.sigma", "must be positive");
        if (!std::isfinite(mean))
            throw InvalidField("operator.mean", "must be finite");
    }
}

Genome random_genome(std::size_t n, Engine& rng)
{
    if (n < 2)
        throw DomainError("random_genome: dimension must be >= 2, got " + std::to_string(n));
    const Bounds b = domain_bounds();
    Genome g(n);
    for (auto& v : g)
        v = uniform(rng, b.lower, b.upper);
    return g;
}

double polynomial_step(double x, double u, double eta, const Bounds& bounds)
{
    const double range = bounds.width();
    const double power = eta + 1.0;
    const double inv_power = 1.0 / power;
    double delta = 0.0;
    if (u < 0.5) {
        const double d1 = (x - bounds.lower) / range;
        const double val = 2.0 * u + (1.0 - 2.0 * u) * std::pow(1.0 - d1, power);
        delta = std::pow(val, inv_power) - 1.0;
    }
    else {
        const double d2 = (bounds.upper - x) / range;
        const double val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * std::pow(1.0 - d2, power);
        delta = 1.0 - std::pow(val, inv_power);
    }
    return std::clamp(x + delta * range, bounds.lower, bounds.upper);
}

double gaussian_step(double x, double noise, const Bounds& bounds)
{
    return std::clamp(x + noise, bounds.lower, bounds.upper);
}

Genome mutate_polynomial_bounded(const Genome& g, const OperatorConfig& cfg, Engine& rng)
{
    const Bounds b = domain_bounds();
    Genome out = g;
    for (auto& x : out) {
        if (uniform01(rng) < cfg.mutation_prob)
            x = polynomial_step(x, uniform01(rng), cfg.eta, b);
    }
    return out;
}

Genome mutate_gaussian(const Genome& g, const OperatorConfig& cfg, Engine& rng)
{
    const Bounds b = domain_bounds();
    Genome out = g;
    for (auto& x : out) {
        if (uniform01(rng) < cfg.mutation_prob)
            x = gaussian_step(x, cfg.mean + cfg.sigma * standard_normal(rng), b);
    }
    return out;
}

Genome mutate(const Genome& g, const OperatorConfig& cfg, Engine& rng)
{
    switch (cfg.kind) {
    case OperatorKind::PolynomialBounded:
        return mutate_polynomial_bounded(g, cfg, rng);
    case OperatorKind::Gaussian:
        return mutate_gaussian(g, cfg, rng);
    }
    throw DomainError("mutate: unknown operator kind");
}

} // namespace qdbench
