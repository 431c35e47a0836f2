#pragma once

#include "krt/quadrature.hpp"

#include <cstddef>
#include <functional>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

namespace krt::density {

// Densities without a closed-form marginal are integrated by tensor
// quadrature over the trailing coordinates; beyond this dimension that is
// too expensive and construction is refused.
inline constexpr std::size_t kMaxQuadratureDim = 5;

// Positive probability density on [-1,1]^d with respect to mu.
class Density {
public:
    using Fn = std::function<double(std::span<const double>)>;
    // (k, x in [-1,1]^k) -> hat f_k(x)
    using MarginalFn = std::function<double(std::size_t, std::span<const double>)>;

    Density(std::string family, std::size_t dim, Fn evaluate, MarginalFn marginal_oracle,
            std::vector<double> anisotropy, nlohmann::json params);

    [[nodiscard]] std::size_t dim() const { return dim_; }
    [[nodiscard]] const std::string& family() const { return family_; }
    [[nodiscard]] const nlohmann::json& params() const { return params_; }
    // b_j >= 0; zero means the density does not depend on y_j.
    [[nodiscard]] const std::vector<double>& anisotropy() const { return anisotropy_; }
    [[nodiscard]] bool has_marginal_oracle() const { return static_cast<bool>(oracle_); }
    [[nodiscard]] const MarginalFn& marginal_oracle() const { return oracle_; }

    [[nodiscard]] double operator()(std::span<const double> x) const { return evaluate_(x); }

    // Order of the per-coordinate Gauss-Legendre rule used for quadrature
    // marginals (default 40).
    [[nodiscard]] std::size_t marginal_order() const { return marginal_order_; }
    void set_marginal_order(std::size_t n);

    // Specification object accepted by from_spec.
    [[nodiscard]] nlohmann::json spec() const;

private:
    std::string family_;
    std::size_t dim_;
    Fn evaluate_;
    MarginalFn oracle_;
    std::vector<double> anisotropy_;
    nlohmann::json params_;
    std::size_t marginal_order_ = 40;
};

[[nodiscard]] Density uniform(std::size_t d);

// f(y) = 1 + sum_j c_j y_j; requires sum |c_j| < 1.
[[nodiscard]] Density linear(std::vector<double> c);

// Posterior of y ~ U([-1,1]^d) given observation `obs` = A y + N(0, sigma^2 I):
// f(y) = exp(-|A y - obs|^2 / (2 sigma^2)) / Z, normalized by a 40-point
// tensor rule. `a` is row-major m x d.
[[nodiscard]] Density gaussian_posterior(std::size_t m, std::size_t d, std::vector<double> a,
                                         std::vector<double> obs, double sigma);

// {family: "uniform", dim} | {family: "linear", c} |
// {family: "gaussian_posterior", A: [[..]], observation: [..], sigma}
// plus optional "marginal_order". Throws ConfigError on malformed input.
[[nodiscard]] Density from_spec(const nlohmann::json& spec);

// hat f_k(x) for x in [-1,1]^k: the oracle when present, otherwise
// quadrature over coordinates k+1..d with the density's marginal order.
[[nodiscard]] double marginal_hat(const Density& f, std::size_t k, std::span<const double> x);

// Quadrature marginal with an explicit rule order, ignoring any oracle.
[[nodiscard]] double marginal_hat_quadrature(const Density& f, std::size_t k, std::span<const double> x,
                                             std::size_t order);

// f_k(x) = hat f_k(x) / hat f_{k-1}(x_{[k-1]}), 1 <= k <= d.
[[nodiscard]] double conditional(const Density& f, std::size_t k, std::span<const double> x);

}  // namespace krt::density
