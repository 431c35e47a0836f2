#pragma once

#include "krt/density.hpp"
#include "krt/quadrature.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace krt::transport {

// Values and diagonal derivatives d/dx_k T_k of the leading components.
struct MapEval {
    std::vector<double> value;
    std::vector<double> diag;
};

// Monotone triangular map on [-1,1]^d: component k reads only x_1..x_k and
// is increasing in x_k.
class TriangularMap {
public:
    virtual ~TriangularMap() = default;

    [[nodiscard]] virtual std::size_t dim() const = 0;

    // Components 1..x.size() (x.size() <= dim()) at x.
    [[nodiscard]] virtual MapEval evaluate(std::span<const double> x) const = 0;

    [[nodiscard]] virtual std::vector<double> inverse(std::span<const double> y) const = 0;

    [[nodiscard]] std::vector<double> operator()(std::span<const double> x) const { return evaluate(x).value; }
};

class IdentityMap final : public TriangularMap {
public:
    explicit IdentityMap(std::size_t d) : d_(d) {}
    [[nodiscard]] std::size_t dim() const override { return d_; }
    [[nodiscard]] MapEval evaluate(std::span<const double> x) const override;
    [[nodiscard]] std::vector<double> inverse(std::span<const double> y) const override;

private:
    std::size_t d_;
};

// Triangular inverse of another map: value from base.inverse, diagonal
// derivatives 1 / d_k base_k at the preimage.
class InverseMap final : public TriangularMap {
public:
    explicit InverseMap(const TriangularMap& base) : base_(base) {}
    [[nodiscard]] std::size_t dim() const override { return base_.dim(); }
    [[nodiscard]] MapEval evaluate(std::span<const double> x) const override;
    [[nodiscard]] std::vector<double> inverse(std::span<const double> y) const override;

private:
    const TriangularMap& base_;
};

struct RootSettings {
    double tolerance = 1e-12;  // on |g(t) - target|
    int max_iterations = 200;
};

// Solves g(t) = target on [-1,1] for increasing g with g(-1) = g_lo and
// g(1) = g_hi, by Newton steps safeguarded with bisection. `eval` returns
// (g(t), g'(t)). Throws NumericalError if target is not bracketed.
[[nodiscard]] double solve_monotone(const std::function<std::pair<double, double>(double)>& eval, double target,
                                    double g_lo, double g_hi, const RootSettings& settings = {});

// Inverse of a CDF F on [-1,1] with F(-1) = 0, F(1) = 1; `eval` returns
// (F(t), F'(t)). y = 0 and y = 1 map to -1 and 1 exactly.
[[nodiscard]] double invert_cdf(const std::function<std::pair<double, double>(double)>& eval, double y,
                                const RootSettings& settings = {});

// Conditional law of x_k given x_{[k-1]} = prefix. The CDF integrates
// hat f_k(prefix, .) with a fixed rule remapped onto [-1,t] and is
// normalized by the same rule on [-1,1], so F(1) = 1 exactly.
class ConditionalSlice {
public:
    ConditionalSlice(const density::Density& f, std::size_t k, std::span<const double> prefix,
                     std::size_t cdf_order);

    // f_k(prefix, t), the density w.r.t. mu; F' = pdf / 2.
    [[nodiscard]] double pdf(double t) const;
    [[nodiscard]] double cdf(double t) const;
    [[nodiscard]] double quantile(double y, const RootSettings& settings = {}) const;

private:
    [[nodiscard]] double joint(double t) const;

    const density::Density& f_;
    std::size_t k_;
    const quadrature::Rule& rule_;
    mutable std::vector<double> point_;
    double norm_ = 1.0;
};

// F_k(x_{[k-1]}, t) = int_{-1}^t f_k(x_{[k-1]}, s) ds / 2.
[[nodiscard]] double conditional_cdf(const density::Density& f, std::size_t k, std::span<const double> prefix,
                                     double t, std::size_t cdf_order = 40);

struct ExactSettings {
    std::size_t cdf_order = 40;
    RootSettings root;
};

// Knothe-Rosenblatt transport pushing `reference` forward to `target`.
class ExactTransport final : public TriangularMap {
public:
    ExactTransport(density::Density reference, density::Density target, ExactSettings settings = {});

    [[nodiscard]] std::size_t dim() const override { return reference_.dim(); }
    [[nodiscard]] const density::Density& reference() const { return reference_; }
    [[nodiscard]] const density::Density& target() const { return target_; }
    [[nodiscard]] const ExactSettings& settings() const { return settings_; }

    struct Step {
        double value;       // T_k(x_{[k]})
        double derivative;  // d/dx_k T_k(x_{[k]})
    };
    // Component k (1-based) given x_{[k]} and the already computed
    // T_1..T_{k-1} at x.
    [[nodiscard]] Step step(std::size_t k, std::span<const double> x, std::span<const double> image_prefix) const;

    [[nodiscard]] MapEval evaluate(std::span<const double> x) const override;

    // S = T^{-1} as the transport with reference and target swapped.
    [[nodiscard]] std::vector<double> inverse(std::span<const double> y) const override;

    // S by solving T_k(x_{[k-1]}, s) = y_k coordinate by coordinate.
    [[nodiscard]] std::vector<double> inverse_by_root_finding(std::span<const double> y) const;

    // R_k(x) = f_{rho;k}(x) / f_{pi;k}(T_1(x), ..., T_k(x)).
    [[nodiscard]] double diag_derivative(std::size_t k, std::span<const double> x) const;

    [[nodiscard]] ExactTransport swapped() const;

private:
    density::Density reference_;
    density::Density target_;
    ExactSettings settings_;
};

// f_rho(T^{-1}(y)) / det dT(T^{-1}(y)). Throws NumericalError when a
// diagonal derivative is at or below 1e-14.
[[nodiscard]] double pushforward_density(const TriangularMap& map, const density::Density& rho,
                                         std::span<const double> y);

// f_rho(S(x)) det dS(x), the density of the pullback of rho under S.
[[nodiscard]] double pullback_density(const TriangularMap& map, const density::Density& rho,
                                      std::span<const double> x);

}  // namespace krt::transport
