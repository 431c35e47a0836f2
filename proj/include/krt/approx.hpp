#pragma once

#include "krt/indexsets.hpp"
#include "krt/polybasis.hpp"
#include "krt/transport.hpp"

#include <atomic>
#include <cstddef>
#include <functional>
#include <nlohmann/json_fwd.hpp>
#include <span>
#include <vector>

namespace krt::approx {

// Monotone rational component
//   T~_k(x) = -1 + (2 / c_k(x_{[k-1]})) int_{-1}^{x_k} (1 + p_k(x_{[k-1]}, t))^2 dt,
//   c_k(x_{[k-1]}) = int_{-1}^{1} (1 + p_k(x_{[k-1]}, t))^2 dt.
// An empty p_k gives the identity x_k exactly.
class RationalComponent {
public:
    RationalComponent(std::size_t k, poly::SparsePolynomial p);

    [[nodiscard]] std::size_t k() const { return k_; }
    [[nodiscard]] const poly::SparsePolynomial& polynomial() const { return p_; }
    [[nodiscard]] bool is_identity() const { return p_.empty(); }

    // T~_k restricted to a fixed x_{[k-1]}. Both integrals use a
    // Gauss-Legendre rule exact for the squared polynomial.
    class Slice {
    public:
        [[nodiscard]] double value(double t) const;
        [[nodiscard]] double derivative(double t) const;
        [[nodiscard]] double invert(double y, const transport::RootSettings& settings = {}) const;
        [[nodiscard]] double normalizer() const { return c_; }

    private:
        friend class RationalComponent;
        // int_{-1}^t (1 + q(s))^2 ds
        [[nodiscard]] double partial(double t) const;
        std::vector<double> coeffs_;
        const quadrature::Rule* rule_ = nullptr;
        double c_ = 2.0;
        bool identity_ = true;
    };

    // Throws NumericalError when c_k <= 1e-14 on this slice.
    [[nodiscard]] Slice slice(std::span<const double> prefix) const;

    // x has at least k entries; only the first k are read.
    [[nodiscard]] double operator()(std::span<const double> x) const;
    [[nodiscard]] double derivative(std::span<const double> x) const;
    // t with T~_k(prefix, t) = y.
    [[nodiscard]] double invert(std::span<const double> prefix, double y) const;

private:
    std::size_t k_;
    poly::SparsePolynomial p_;
};

inline constexpr double kMinNormalizer = 1e-14;

struct ComponentInfo {
    index::IndexSet lambda;
    bool fallback = false;  // p_k reset to zero after a degenerate slice
};

class ApproxTransport final : public transport::TriangularMap {
public:
    ApproxTransport(double epsilon, index::WeightVector xi, std::vector<RationalComponent> components,
                    std::vector<ComponentInfo> info);

    [[nodiscard]] std::size_t dim() const override { return components_.size(); }
    [[nodiscard]] double epsilon() const { return epsilon_; }
    [[nodiscard]] const index::WeightVector& xi() const { return xi_; }
    [[nodiscard]] const std::vector<RationalComponent>& components() const { return components_; }
    [[nodiscard]] const std::vector<ComponentInfo>& info() const { return info_; }
    // N_eps = sum_k |Lambda_{k,eps}|
    [[nodiscard]] std::size_t degrees_of_freedom() const;
    // Largest k with a nonempty Lambda_{k,eps}; 0 if all are empty.
    [[nodiscard]] std::size_t effective_dimension() const;

    [[nodiscard]] transport::MapEval evaluate(std::span<const double> x) const override;
    [[nodiscard]] std::vector<double> inverse(std::span<const double> y) const override;

private:
    double epsilon_;
    index::WeightVector xi_;
    std::vector<RationalComponent> components_;
    std::vector<ComponentInfo> info_;
};

// Number of times the sqrt-shift target clamped a non-positive derivative.
[[nodiscard]] std::size_t sqrt_shift_clamp_count();

// x -> sqrt(d/dx_k T_k(x)) - 1, derivative clamped below at 1e-14.
[[nodiscard]] std::function<double(std::span<const double>)> sqrt_shift_target(const transport::ExactTransport& exact,
                                                                               std::size_t k);

// The same target at all nodes of a k-dimensional grid (canonical order),
// reusing T_1..T_{j-1} along shared node prefixes.
[[nodiscard]] std::vector<double> sqrt_shift_on_grid(const transport::ExactTransport& exact, std::size_t k,
                                                     const quadrature::TensorGrid& grid);

struct FitSettings {
    poly::GridRule grid;
};

// Projects the sqrt-shift target of component k onto P_Lambda. Empty
// Lambda gives the identity component. If any slice of the projection grid
// has c_k <= 1e-14 the component falls back to p_k = 0.
[[nodiscard]] RationalComponent fit_component(const transport::ExactTransport& exact, std::size_t k,
                                              const index::IndexSet& lambda, const FitSettings& settings = {},
                                              bool* fallback = nullptr);

// Fits every component on Lambda_{k,eps} built from xi_{[k]}.
[[nodiscard]] ApproxTransport build_approx_transport(const transport::ExactTransport& exact,
                                                     const index::WeightVector& xi, double epsilon,
                                                     const FitSettings& settings = {});

// {epsilon, xi, components: [{k, lambda, p_coeffs, fallback}]}; infinite
// weights are written as null.
void to_json(nlohmann::json& j, const ApproxTransport& t);
[[nodiscard]] ApproxTransport approx_from_json(const nlohmann::json& j);

}  // namespace krt::approx
