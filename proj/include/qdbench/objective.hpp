#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdbench {

/// Search representation: a fixed-length real vector inside the objective's box.
using Genome = std::vector<double>;

/// Rastrigin value, lower is better.
using Fitness = double;

/// Two-dimensional feature descriptor used to place a solution in the grid.
struct Features {
    double f0 = 0.0;
    double f1 = 0.0;

    friend bool operator==(const Features&, const Features&) = default;
};

struct Bounds {
    double lower = 0.0;
    double upper = 0.0;

    double width() const { return upper - lower; }
    bool contains(double v) const { return v >= lower && v <= upper; }

    friend bool operator==(const Bounds&, const Bounds&) = default;
};

/// Thrown when a genome or a configuration value falls outside its valid range.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// DomainError attributed to one named configuration field.
class InvalidField : public DomainError {
public:
    InvalidField(std::string field, const std::string& message)
        : DomainError(field + ": " + message), _field(std::move(field)), _detail(message)
    {
    }
    const std::string& field() const { return _field; }
    const std::string& detail() const { return _detail; }

private:
    std::string _field;
    std::string _detail;
};

namespace rastrigin {
    inline constexpr double kA = 10.0;
    inline constexpr Bounds kBounds{-5.12, 5.12};

    /// A*n + sum_i (x_i^2 - A cos(2 pi x_i)). Accepts any length >= 1.
    /// Throws DomainError for empty input or any component outside [-5.12, 5.12].
    Fitness evaluate(std::span<const double> x);

    /// The one-dimensional term x^2 + A - A cos(2 pi x), unchecked.
    double marginal(double x);
} // namespace rastrigin

/// Per-component search box, identical for every dimension.
inline constexpr Bounds domain_bounds() { return rastrigin::kBounds; }

/// Feature extraction: the first two genome components.
Features extract_features(std::span<const double> g);

/// Landscape interface: one box-bounded objective with a 2-D descriptor.
class Objective {
public:
    virtual ~Objective() = default;

    virtual std::string name() const = 0;
    virtual std::size_t dimensions() const = 0;
    virtual Bounds bounds() const = 0;
    virtual Fitness evaluate(std::span<const double> g) const = 0;
    virtual Features features(std::span<const double> g) const = 0;
};

class Rastrigin final : public Objective {
public:
    /// Throws DomainError if dimensions < 2.
    explicit Rastrigin(std::size_t dimensions);

    std::string name() const override;
    std::size_t dimensions() const override { return _dimensions; }
    Bounds bounds() const override { return rastrigin::kBounds; }
    Fitness evaluate(std::span<const double> g) const override;
    Features features(std::span<const double> g) const override;

private:
    void check_length(std::span<const double> g) const;

    std::size_t _dimensions;
};

} // namespace qdbench
