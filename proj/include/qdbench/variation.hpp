#pragma once

#include <string>
#include <string_view>

#include <qdbench/objective.hpp>
#include <qdbench/random.hpp>

namespace qdbench {

enum class OperatorKind { PolynomialBounded, Gaussian };

std::string_view to_string(OperatorKind kind);

/// Accepts "polynomial-bounded"/"poly" and "gaussian"/"gauss". Throws DomainError otherwise.
OperatorKind parse_operator_kind(std::string_view text);

/// Mutation parameters. Only the fields of the active kind are read.
struct OperatorConfig {
    OperatorKind kind = OperatorKind::PolynomialBounded;
    double mutation_prob = 0.5; // per gene
    double eta = 10.0;
    double sigma = 1.0;
    double mean = 0.0;

    static OperatorConfig polynomial(double mutation_prob = 0.5, double eta = 10.0);
    static OperatorConfig gaussian(double mutation_prob = 0.5, double sigma = 1.0, double mean = 0.0);

    /// Throws DomainError on out-of-range parameters.
    void validate() const;

    friend bool operator==(const OperatorConfig&, const OperatorConfig&) = default;
};

/// Uniform genome on [-5.12, 5.12]^n. Throws DomainError for n < 2.
Genome random_genome(std::size_t n, Engine& rng);

/// Deb's bounded polynomial perturbation of one gene for a given u in [0, 1).
double polynomial_step(double x, double u, double eta, const Bounds& bounds);

/// Additive perturbation clamped to `bounds`.
double gaussian_step(double x, double noise, const Bounds& bounds);

/// Per-gene bounded polynomial mutation; returns a mutated copy.
Genome mutate_polynomial_bounded(const Genome& g, const OperatorConfig& cfg, Engine& rng);

/// Per-gene additive Normal(mean, sigma^2) noise, clamped to the domain; returns a mutated copy.
Genome mutate_gaussian(const Genome& g, const OperatorConfig& cfg, Engine& rng);

/// Dispatches on cfg.kind.
Genome mutate(const Genome& g, const OperatorConfig& cfg, Engine& rng);

} // namespace qdbench
