#pragma once

#include "krt/quadrature.hpp"

#include <cstddef>
#include <functional>
#include <map>
#include <nlohmann/json_fwd.hpp>
#include <span>
#include <vector>

namespace krt::poly {

// Finitely supported multiindex in N_0^k. Stored without trailing zeros, so
// (1,0) and (1) compare equal.
class MultiIndex {
public:
    MultiIndex() = default;
    MultiIndex(std::initializer_list<unsigned> exps);
    explicit MultiIndex(std::vector<unsigned> exps);

    // Exponent j (0-based); zero beyond the stored length.
    [[nodiscard]] unsigned operator[](std::size_t j) const {
        return j < exps_.size() ? exps_[j] : 0u;
    }
    // Length without trailing zeros.
    [[nodiscard]] std::size_t size() const { return exps_.size(); }
    [[nodiscard]] unsigned total() const;
    [[nodiscard]] std::vector<unsigned> padded(std::size_t k) const;
    [[nodiscard]] const std::vector<unsigned>& exponents() const { return exps_; }

    friend bool operator==(const MultiIndex&, const MultiIndex&) = default;

private:
    std::vector<unsigned> exps_;
};

// Graded lexicographic order: total degree first, then exponents compared
// coordinate by coordinate.
struct GradedLex {
    bool operator()(const MultiIndex& a, const MultiIndex& b) const;
};

// L_n(x) = sqrt(2n+1) P_n(x), orthonormal in L^2([-1,1]; mu).
[[nodiscard]] double legendre(unsigned n, double x);

// Fills out[0..out.size()) with L_0(x), ..., via the three-term recurrence.
void legendre_values(double x, std::span<double> out);

// prod_j (1 + 2 nu_j)^{1/2}, the sup norm of L_nu on the cube.
[[nodiscard]] double sup_norm_bound(const MultiIndex& nu);

// Polynomial in the orthonormal tensor Legendre basis on [-1,1]^k.
class SparsePolynomial {
public:
    using Terms = std::map<MultiIndex, double, GradedLex>;

    SparsePolynomial() = default;
    explicit SparsePolynomial(std::size_t dim) : dim_(dim) {}
    SparsePolynomial(std::size_t dim, Terms terms);

    [[nodiscard]] std::size_t dim() const { return dim_; }
    [[nodiscard]] const Terms& terms() const { return terms_; }
    [[nodiscard]] bool empty() const { return terms_.empty(); }

    // Adds c to the coefficient of nu.
    void add(const MultiIndex& nu, double c);
    [[nodiscard]] double coefficient(const MultiIndex& nu) const;

    // Largest exponent of coordinate j over all terms.
    [[nodiscard]] unsigned max_degree(std::size_t j) const;

    [[nodiscard]] double operator()(std::span<const double> x) const;

    // Restricts to x_{[k-1]} = prefix and returns the Legendre coefficients
    // a_n of t -> p(prefix, t), n = 0..max_degree(k-1).
    [[nodiscard]] std::vector<double> slice_last(std::span<const double> prefix) const;

private:
    std::size_t dim_ = 0;
    Terms terms_;
};

// Sum_n a_n L_n(t) for a coefficient vector in the one-dimensional basis.
[[nodiscard]] double eval_series(std::span<const double> coeffs, double t);

// q with d/dx_k q = p and q(., -1) = 0, exact in the same basis.
[[nodiscard]] SparsePolynomial antiderivative_in_last(const SparsePolynomial& p);

// Quadrature projection: l_nu = sum_i w_i f(x_i) L_nu(x_i) for nu in
// `indices`. The grid must have at least max_degree + 1 nodes per
// coordinate (exact on P_Lambda); throws std::invalid_argument otherwise.
[[nodiscard]] SparsePolynomial project(const quadrature::Integrand& f,
                                       std::span<const MultiIndex> indices,
                                       const quadrature::TensorGrid& grid);

// Same, from function values at the grid nodes in canonical order.
[[nodiscard]] SparsePolynomial project_values(std::span<const double> values,
                                              std::span<const MultiIndex> indices,
                                              const quadrature::TensorGrid& grid);

// Per-coordinate grid orders used for projection.
struct GridRule {
    unsigned margin = 10;
    // Coordinates where every index has exponent 0 get a one-point rule.
    bool collapse_constant_dims = false;
};

[[nodiscard]] quadrature::TensorGrid projection_grid(std::span<const MultiIndex> indices,
                                                     std::size_t dim, const GridRule& rule);

void to_json(nlohmann::json& j, const MultiIndex& nu);
void from_json(const nlohmann::json& j, MultiIndex& nu);
void to_json(nlohmann::json& j, const SparsePolynomial& p);
void from_json(const nlohmann::json& j, SparsePolynomial& p);

}  // namespace krt::poly
