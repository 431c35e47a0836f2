#pragma once

#include "krt/polybasis.hpp"

#include <cstddef>
#include <nlohmann/json_fwd.hpp>
#include <span>
#include <vector>

namespace krt::index {

using poly::MultiIndex;

// Anisotropy weights xi_j > 1. Entries may be +inf, meaning the coordinate
// never enters any index set.
class WeightVector {
public:
    WeightVector() = default;
    explicit WeightVector(std::vector<double> xi);

    [[nodiscard]] std::size_t size() const { return xi_.size(); }
    [[nodiscard]] double operator[](std::size_t j) const { return xi_[j]; }
    [[nodiscard]] const std::vector<double>& values() const { return xi_; }
    // First k weights.
    [[nodiscard]] WeightVector prefix(std::size_t k) const;

private:
    std::vector<double> xi_;
};

// xi_k^{-max(1, nu_k)} prod_{j<k} xi_j^{-nu_j} with k = xi.size().
[[nodiscard]] double gamma(const WeightVector& xi, const MultiIndex& nu);

// Lambda_{k,eps} = { nu in N_0^k : gamma(xi, nu) >= eps }, graded-lex sorted.
struct IndexSet {
    std::size_t k = 0;
    double epsilon = 0.0;
    std::vector<MultiIndex> members;

    [[nodiscard]] std::size_t size() const { return members.size(); }
    [[nodiscard]] bool empty() const { return members.empty(); }
    [[nodiscard]] bool contains(const MultiIndex& nu) const;
};

// Depth-first enumeration pruned by the running product of weights.
// Requires eps in (0,1).
[[nodiscard]] IndexSet enumerate_lambda(const WeightVector& xi, double epsilon);

// (1 - log eps / log xi_min)^k
[[nodiscard]] double cardinality_bound_simple(const WeightVector& xi, double epsilon);

// (1/k!) (-log eps + sum_j log xi_j)^k prod_j 1/log xi_j
[[nodiscard]] double cardinality_bound_sharp(const WeightVector& xi, double epsilon);

// xi_j = 1 + alpha / b_j. Requires b_j > 0 and alpha > 0.
[[nodiscard]] WeightVector xi_from_anisotropy(std::span<const double> b, double alpha = 1.0);

void to_json(nlohmann::json& j, const IndexSet& set);
void from_json(const nlohmann::json& j, IndexSet& set);

}  // namespace krt::index
