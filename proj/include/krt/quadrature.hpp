#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace krt::quadrature {

// Gauss-Legendre rule for the normalized measure mu = lambda/2 on [-1,1].
// Weights sum to one.
struct Rule {
    std::vector<double> nodes;    // ascending, in (-1,1)
    std::vector<double> weights;  // positive

    [[nodiscard]] std::size_t size() const { return nodes.size(); }
};

// n-point rule; nodes are the roots of P_n found by Newton iteration on the
// three-term recurrence. Rules are cached, so repeated calls are cheap.
[[nodiscard]] const Rule& gauss_legendre(std::size_t n);

// The n-point rule mapped onto [a,b]; weights are scaled so that they
// integrate against dx/2 (i.e. they sum to (b-a)/2).
[[nodiscard]] Rule mapped(const Rule& rule, double a, double b);

// Composite rule: `panels` equal sub-intervals with an n-point rule each.
// Weights are for mu and sum to one.
[[nodiscard]] Rule composite(std::size_t n, std::size_t panels);

// Tensor product of one-dimensional rules. Nodes are enumerated with the
// last coordinate varying fastest.
class TensorGrid {
public:
    TensorGrid() = default;
    explicit TensorGrid(std::vector<Rule> rules);
    // d copies of the n-point rule
    TensorGrid(std::size_t d, std::size_t n);

    [[nodiscard]] std::size_t dim() const { return rules_.size(); }
    [[nodiscard]] std::size_t size() const { return size_; }
    [[nodiscard]] const Rule& rule(std::size_t j) const { return rules_[j]; }
    [[nodiscard]] const std::vector<Rule>& rules() const { return rules_; }

    // Writes the coordinates of node `index` into x (size dim()) and
    // returns its weight.
    double node(std::size_t index, std::span<double> x) const;

    // All nodes in canonical order, row-major (size() x dim()).
    [[nodiscard]] std::vector<double> nodes() const;
    [[nodiscard]] std::vector<double> weights() const;

private:
    std::vector<Rule> rules_;
    std::size_t size_ = 1;
};

using Integrand = std::function<double(std::span<const double>)>;

// Tensor-product quadrature of f against mu^d. Throws NumericalError if f
// returns a non-finite value at any node.
[[nodiscard]] double integrate(const Integrand& f, const TensorGrid& grid);

// Quadrature of precomputed node values (canonical order).
[[nodiscard]] double integrate_values(std::span<const double> values, const TensorGrid& grid);

}  // namespace krt::quadrature
